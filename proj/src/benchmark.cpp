#include "sgps/benchmark.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "sgps/config_io.hpp"
#include "sgps/field_io.hpp"

namespace sgps {

using nlohmann::json;

GpsOptions BenchmarkConfig::default_gps_options() {
  GpsOptions o;
  o.tau_grid = {0.25, 0.35, 0.45, 0.55};
  return o;
}

BenchmarkConfig BenchmarkConfig::full_scale() {
  BenchmarkConfig c;
  c.repetitions = 500;
  c.sampler.burn_in = 7500;
  c.sampler.samples = 22500;
  return c;
}

void BenchmarkConfig::validate() const {
  scenario.validate();
  sampler.validate();
  if (repetitions < 1) throw InvalidSpec("benchmark repetitions must be >= 1");
  if (models.empty()) throw InvalidSpec("benchmark needs at least one model");
  if (variants.empty()) throw InvalidSpec("benchmark needs at least one confounder variant");
  if (workers < 0) throw InvalidSpec("workers must be nonnegative");
}

json to_json(const BenchmarkConfig& c) {
  json variants = json::array(), models = json::array();
  for (auto v : c.variants) variants.push_back(to_string(v));
  for (auto m : c.models) models.push_back(to_string(m));
  return json{{"scenario", to_json(c.scenario)}, {"variants", variants},
              {"models", models},                {"repetitions", c.repetitions},
              {"gps", to_json(c.gps)},           {"sampler", to_json(c.sampler)},
              {"workers", c.workers},            {"output_dir", c.output_dir.string()}};
}

BenchmarkConfig benchmark_from_json(const json& j, BenchmarkConfig c) {
  if (j.contains("scenario")) c.scenario = scenario_from_json(j.at("scenario"), c.scenario);
  if (j.contains("variants")) {
    c.variants.clear();
    for (const auto& v : j.at("variants")) c.variants.push_back(confounder_variant_from_string(v.get<std::string>()));
  }
  if (j.contains("models")) {
    c.models.clear();
    for (const auto& m : j.at("models")) c.models.push_back(model_kind_from_string(m.get<std::string>()));
  }
  if (j.contains("repetitions")) c.repetitions = j.at("repetitions").get<int>();
  if (j.contains("gps")) c.gps = gps_options_from_json(j.at("gps"), c.gps);
  if (j.contains("tau_grid")) c.gps.tau_grid = j.at("tau_grid").get<std::vector<double>>();
  if (j.contains("sampler")) c.sampler = sampler_from_json(j.at("sampler"), c.sampler);
  if (j.contains("workers")) c.workers = j.at("workers").get<int>();
  if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
  c.validate();
  return c;
}

std::uint64_t repetition_seed(const BenchmarkConfig& config, ConfounderVariant variant, int repetition) {
  return Rng::derive_seed(config.scenario.seed,
                          {static_cast<std::uint64_t>(variant), static_cast<std::uint64_t>(repetition)});
}

namespace {

double truth_of(const ScenarioConfig& s, const std::string& parameter) {
  if (parameter == "delta1") return s.delta1;
  if (parameter == "delta2") return s.delta2;
  return s.true_tau;
}

}  // namespace

std::vector<ReplicateResult> run_repetition(const BenchmarkConfig& config, ConfounderVariant variant,
                                            int repetition, const std::vector<ModelKind>& models) {
  ScenarioConfig scenario = config.scenario;
  scenario.variant = variant;
  scenario.seed = repetition_seed(config, variant, repetition);

  std::vector<ReplicateResult> out;
  std::optional<SpatialStudy> study;
  std::string data_error;
  try {
    study = SpatialStudy::from_synthetic(generate_scenario(scenario));
  } catch (const std::exception& e) {
    data_error = std::string("data generation: ") + e.what();
  }
  for (ModelKind model : models) {
    ReplicateResult r;
    r.variant = variant;
    r.model = model;
    r.repetition = repetition;
    r.seed = scenario.seed;
    if (!study) {
      r.error = data_error;
      out.push_back(std::move(r));
      continue;
    }
    SamplerConfig sampler = config.sampler;
    sampler.seed = Rng::derive_seed(scenario.seed, {static_cast<std::uint64_t>(model) + 1});
    try {
      const PosteriorSamples post = fit_model(*study, model, config.gps, sampler);
      for (const char* name : kReportedParameters) {
        const ParameterSummary s = post.summarize(name);
        r.outcomes.push_back({name, truth_of(scenario, name), s.mean, s.q025, s.q975});
      }
      r.ok = true;
    } catch (const std::exception& e) {
      r.error = e.what();
    }
    out.push_back(std::move(r));
  }
  return out;
}

ReplicateSummary summarize_replicates(std::span<const double> estimates, std::span<const double> lo,
                                      std::span<const double> hi, double truth) {
  if (estimates.size() != lo.size() || estimates.size() != hi.size())
    throw ShapeError("summarize_replicates: inputs differ in length");
  ReplicateSummary s;
  s.count = long(estimates.size());
  if (s.count == 0) {
    s.bias = s.se = s.coverage = s.coverage_se = std::numeric_limits<double>::quiet_NaN();
    return s;
  }
  const double R = double(s.count);
  double sum = 0.0;
  long covered = 0;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    sum += estimates[i];
    covered += (lo[i] <= truth && truth <= hi[i]);
  }
  const double mean = sum / R;
  s.bias = mean - truth;
  if (s.count > 1) {
    double ss = 0.0;
    for (double e : estimates) ss += (e - mean) * (e - mean);
    s.se = std::sqrt(ss / (R - 1.0)) / std::sqrt(R);
    s.se_defined = true;
  } else {
    s.se = std::numeric_limits<double>::quiet_NaN();
  }
  const double p = double(covered) / R;
  s.coverage = 100.0 * p;
  s.coverage_se = 100.0 * std::sqrt(p * (1.0 - p) / R);
  return s;
}

const ReportRow& BenchmarkReport::find(ConfounderVariant variant, ModelKind model,
                                       const std::string& parameter) const {
  for (const auto& r : rows)
    if (r.variant == variant && r.model == model && r.parameter == parameter) return r;
  throw std::out_of_range(std::string("no report row for ") + to_string(variant) + "/" +
                          to_string(model) + "/" + parameter);
}

BenchmarkReport aggregate(const BenchmarkConfig& config, std::vector<ReplicateResult> results) {
  std::sort(results.begin(), results.end(), [](const ReplicateResult& a, const ReplicateResult& b) {
    return std::tie(a.variant, a.model, a.repetition) < std::tie(b.variant, b.model, b.repetition);
  });
  BenchmarkReport report;
  for (ConfounderVariant v : config.variants) {
    for (ModelKind m : config.models) {
      long failures = 0;
      std::vector<const ReplicateResult*> ok;
      for (const auto& r : results) {
        if (r.variant != v || r.model != m) continue;
        if (r.ok) ok.push_back(&r);
        else ++failures;
      }
      report.failures += failures;
      for (std::size_t p = 0; p < kReportedParameters.size(); ++p) {
        std::vector<double> est, lo, hi;
        double truth = truth_of(config.scenario, kReportedParameters[p]);
        for (const auto* r : ok) {
          const auto& o = r->outcomes.at(p);
          est.push_back(o.mean);
          lo.push_back(o.q025);
          hi.push_back(o.q975);
          truth = o.truth;
        }
        const ReplicateSummary s = summarize_replicates(est, lo, hi, truth);
        report.rows.push_back({v, m, kReportedParameters[p], 1000.0 * s.bias, 1000.0 * s.se, s.coverage,
                               s.coverage_se, s.count, failures, s.se_defined});
      }
    }
  }
  return report;
}

std::filesystem::path replicate_path(const BenchmarkConfig& config, const ReplicateResult& key) {
  std::ostringstream name;
  name << to_string(key.variant) << '_' << to_string(key.model) << '_' << std::setw(5) << std::setfill('0')
       << key.repetition << '_' << key.seed << ".csv";
  return config.output_dir / "replicates" / name.str();
}

void write_replicate_csv(const std::filesystem::path& path, const ReplicateResult& r) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out << "variant,model,repetition,seed,status,parameter,truth,mean,q2.5,q97.5,message\n";
    const std::string head = std::string(to_string(r.variant)) + ',' + to_string(r.model) + ',' +
                             std::to_string(r.repetition) + ',' + std::to_string(r.seed) + ',';
    if (!r.ok) {
      std::string msg = r.error;
      std::replace(msg.begin(), msg.end(), ',', ';');
      std::replace(msg.begin(), msg.end(), '\n', ' ');
      out << head << "failed,,,,,," << msg << '\n';
    }
    for (const auto& o : r.outcomes) {
      out << head << "ok," << o.parameter << ',' << csv::format(o.truth) << ',' << csv::format(o.mean) << ','
          << csv::format(o.q025) << ',' << csv::format(o.q975) << ",\n";
    }
  }
  std::filesystem::rename(tmp, path);
}

std::optional<ReplicateResult> read_replicate_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  const std::string file = path.string();
  std::string line;
  if (!std::getline(in, line)) return std::nullopt;
  ReplicateResult r;
  long line_no = 1;
  bool any = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = csv::split(line);
    if (f.size() != 11) throw ParseError(file, line_no, "*", "expected 11 fields");
    r.variant = confounder_variant_from_string(std::string(f[0]));
    r.model = model_kind_from_string(std::string(f[1]));
    r.repetition = int(csv::parse_long(f[2], file, line_no, "repetition"));
    r.seed = std::stoull(std::string(f[3]));
    any = true;
    if (f[4] == "failed") {
      r.ok = false;
      r.error = std::string(f[10]);
      continue;
    }
    r.ok = true;
    r.outcomes.push_back({std::string(f[5]), csv::parse_double(f[6], file, line_no, "truth"),
                          csv::parse_double(f[7], file, line_no, "mean"),
                          csv::parse_double(f[8], file, line_no, "q2.5"),
                          csv::parse_double(f[9], file, line_no, "q97.5")});
  }
  if (!any) return std::nullopt;
  if (r.ok && r.outcomes.size() != kReportedParameters.size()) return std::nullopt;
  return r;
}

void write_report_csv(const std::filesystem::path& path, const BenchmarkReport& report) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "variant,model,parameter,bias_x1000,se_x1000,coverage,coverage_se,replicates,failures\n";
  out << std::fixed << std::setprecision(1);
  for (const auto& r : report.rows) {
    out << to_string(r.variant) << ',' << to_string(r.model) << ',' << r.parameter << ',' << r.bias_x1000
        << ',';
    if (r.se_defined) out << r.se_x1000;
    else out << "NA";
    out << ',' << r.coverage << ',' << r.coverage_se << ',' << r.replicates << ',' << r.failures << '\n';
  }
}

namespace {

void write_manifest(const BenchmarkConfig& config, const BenchmarkReport& report) {
  json cfg = to_json(config);
  cfg.erase("output_dir");
  cfg.erase("workers");
  json seeds = json::object();
  for (ConfounderVariant v : config.variants) {
    json list = json::array();
    for (int r = 0; r < config.repetitions; ++r) list.push_back(repetition_seed(config, v, r));
    seeds[to_string(v)] = list;
  }
  json manifest{{"config", cfg},
                {"config_hash", fnv1a_hex(cfg.dump())},
                {"seeds", seeds},
                {"failures", report.failures},
                {"versions",
                 {{"sgps", "1.0.0"},
                  {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                "." + std::to_string(EIGEN_MINOR_VERSION)},
                  {"compiler", __VERSION__}}}};
  std::ofstream out(config.output_dir / "manifest.json");
  out << manifest.dump(2) << '\n';
}

}  // namespace

BenchmarkReport run_benchmark(const BenchmarkConfig& config, bool resume) {
  config.validate();
  const bool persist = !config.output_dir.empty();
  if (persist) std::filesystem::create_directories(config.output_dir / "replicates");

  struct Unit {
    ConfounderVariant variant;
    int repetition;
  };
  std::vector<Unit> units;
  for (ConfounderVariant v : config.variants)
    for (int r = 0; r < config.repetitions; ++r) units.push_back({v, r});

  std::vector<std::vector<ReplicateResult>> slots(units.size());
  std::atomic<std::size_t> next{0};
  std::atomic<long> computed{0}, resumed{0};
  std::mutex error_mutex;
  std::exception_ptr io_error;

  auto worker = [&] {
    while (true) {
      const std::size_t u = next.fetch_add(1);
      if (u >= units.size()) return;
      try {
        const Unit unit = units[u];
        std::vector<ModelKind> todo;
        for (ModelKind m : config.models) {
          ReplicateResult key;
          key.variant = unit.variant;
          key.model = m;
          key.repetition = unit.repetition;
          key.seed = repetition_seed(config, unit.variant, unit.repetition);
          if (persist && resume) {
            if (auto loaded = read_replicate_csv(replicate_path(config, key))) {
              slots[u].push_back(std::move(*loaded));
              ++resumed;
              continue;
            }
          }
          todo.push_back(m);
        }
        if (todo.empty()) continue;
        for (auto& r : run_repetition(config, unit.variant, unit.repetition, todo)) {
          if (persist) write_replicate_csv(replicate_path(config, r), r);
          slots[u].push_back(std::move(r));
          ++computed;
        }
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!io_error) io_error = std::current_exception();
      }
    }
  };

  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t count = std::min<std::size_t>(config.workers > 0 ? unsigned(config.workers) : hw, units.size());
  {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i + 1 < count; ++i) pool.emplace_back(worker);
    worker();
  }
  if (io_error) std::rethrow_exception(io_error);

  std::vector<ReplicateResult> all;
  for (auto& s : slots)
    for (auto& r : s) all.push_back(std::move(r));
  BenchmarkReport report = aggregate(config, std::move(all));
  report.computed = computed;
  report.resumed = resumed;
  if (persist) {
    write_report_csv(config.output_dir / "report.csv", report);
    write_manifest(config, report);
  }
  return report;
}

}  // namespace sgps
