#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "sgps/models.hpp"

namespace sgps {

struct BenchmarkConfig {
  ScenarioConfig scenario;
  std::vector<ConfounderVariant> variants{ConfounderVariant::identity};
  std::vector<ModelKind> models{ModelKind::gps, ModelKind::oracle, ModelKind::local_only,
                                ModelKind::naive};
  int repetitions = 100;
  GpsOptions gps = default_gps_options();
  SamplerConfig sampler = SamplerConfig::desk();
  int workers = 0;  // 0: hardware concurrency
  std::filesystem::path output_dir;  // empty: keep results in memory only

  void validate() const;

  /// Fixed conditioning bandwidths {0.25, 0.35, 0.45, 0.55}.
  static GpsOptions default_gps_options();
  /// 500 repetitions, 7,500 burn-in, 22,500 kept draws.
  static BenchmarkConfig full_scale();
};

nlohmann::json to_json(const BenchmarkConfig& c);
BenchmarkConfig benchmark_from_json(const nlohmann::json& j, BenchmarkConfig base = {});

inline constexpr std::array<const char*, 3> kReportedParameters{"delta1", "delta2", "tau"};

struct ParameterOutcome {
  std::string parameter;
  double truth = 0.0;
  double mean = 0.0;
  double q025 = 0.0;
  double q975 = 0.0;
};

struct ReplicateResult {
  ConfounderVariant variant = ConfounderVariant::identity;
  ModelKind model = ModelKind::gps;
  int repetition = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  std::vector<ParameterOutcome> outcomes;
};

/// Scenario seed for one (variant, repetition).
std::uint64_t repetition_seed(const BenchmarkConfig& config, ConfounderVariant variant, int repetition);

/// Generate the scenario once and fit every requested model. Model failures are captured
/// in the result, not thrown.
std::vector<ReplicateResult> run_repetition(const BenchmarkConfig& config, ConfounderVariant variant,
                                            int repetition, const std::vector<ModelKind>& models);

struct ReplicateSummary {
  double bias = 0.0;
  double se = 0.0;  // NaN with one replicate
  double coverage = 0.0;     // percent
  double coverage_se = 0.0;  // percent
  long count = 0;
  bool se_defined = false;
};

/// bias = mean(estimates) - truth, se = sd / sqrt(R), coverage = % with truth in [lo, hi],
/// coverage se = sqrt(p (1 - p) / R).
ReplicateSummary summarize_replicates(std::span<const double> estimates, std::span<const double> lo,
                                      std::span<const double> hi, double truth);

struct ReportRow {
  ConfounderVariant variant;
  ModelKind model;
  std::string parameter;
  double bias_x1000 = 0.0;
  double se_x1000 = 0.0;
  double coverage = 0.0;
  double coverage_se = 0.0;
  long replicates = 0;
  long failures = 0;
  bool se_defined = false;
};

struct BenchmarkReport {
  std::vector<ReportRow> rows;
  long failures = 0;
  long computed = 0;  // repetition-model fits run in this invocation
  long resumed = 0;   // loaded from per-replicate files

  const ReportRow& find(ConfounderVariant variant, ModelKind model, const std::string& parameter) const;
};

/// Reduce per-replicate results into report rows (variants x models x 3).
BenchmarkReport aggregate(const BenchmarkConfig& config, std::vector<ReplicateResult> results);

/// Run every (variant, repetition) on a worker pool. With an output directory, each fit is
/// persisted as its own CSV; with `resume`, existing files are loaded instead of refit.
/// Writes report.csv and manifest.json when an output directory is set.
BenchmarkReport run_benchmark(const BenchmarkConfig& config, bool resume = false);

std::filesystem::path replicate_path(const BenchmarkConfig& config, const ReplicateResult& key);
void write_replicate_csv(const std::filesystem::path& path, const ReplicateResult& result);
std::optional<ReplicateResult> read_replicate_csv(const std::filesystem::path& path);

void write_report_csv(const std::filesystem::path& path, const BenchmarkReport& report);

}  // namespace sgps
