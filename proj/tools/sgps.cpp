#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "sgps/benchmark.hpp"
#include "sgps/config_io.hpp"
#include "sgps/field_io.hpp"
#include "sgps/ingest.hpp"
#include "sgps/models.hpp"
#include "sgps/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sgps;

namespace {

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return json::parse(in);
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
}

Field require_complete(const fs::path& path, int side) {
  MaskedField f = read_field_csv(path, side);
  if (f.missing_count() > 0) throw ValidationError(path.string() + ": field has missing cells");
  return f.values;
}

SpatialStudy load_simulated(const fs::path& dir, int side) {
  if (side <= 0) {
    const fs::path manifest = dir / "manifest.json";
    if (!fs::exists(manifest)) throw InvalidSpec("--side is required when the data directory has no manifest.json");
    side = read_json(manifest).at("config").at("side_count").get<int>();
  }
  SyntheticDataset d{SpatialGrid::unit_square(side), {}, {}, {}, {}, {}, {}, {}};
  d.X = require_complete(dir / "X.csv", side);
  d.A = require_complete(dir / "A.csv", side);
  d.Y = require_complete(dir / "Y.csv", side);
  SpatialStudy study = SpatialStudy::from_synthetic(d);
  study.confounder.reset();
  if (fs::exists(dir / "h.csv")) study.confounder = require_complete(dir / "h.csv", side);
  study.validate();
  return study;
}

int run_simulate(ScenarioConfig config, const fs::path& out, const fs::path& grids) {
  config.validate();
  fs::create_directories(out);
  const SyntheticDataset d = generate_scenario(config);
  const int side = d.grid.side_count();
  write_field_csv(out / "X.csv", d.X, side);
  write_field_csv(out / "A.csv", d.A, side);
  write_field_csv(out / "spill.csv", d.spill, side);
  write_field_csv(out / "W.csv", d.W, side);
  write_field_csv(out / "h.csv", d.h, side);
  write_field_csv(out / "Y.csv", d.Y, side);
  write_json(out / "manifest.json", json{{"config", to_json(config)}, {"seed", config.seed},
                                         {"files", {"X.csv", "A.csv", "spill.csv", "W.csv", "h.csv", "Y.csv"}}});
  if (!grids.empty()) export_grids(grids, gridded_from_synthetic(d));
  std::cout << "wrote " << config.replicates << " replicates of a " << side << "x" << side << " grid to "
            << out.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spatial generalized propensity score estimation"};
  app.require_subcommand(1);

  // simulate
  ScenarioConfig scenario;
  std::string variant = "identity";
  fs::path sim_out = "sim", sim_grids;
  auto* sim = app.add_subcommand("simulate", "Generate a synthetic scenario");
  sim->add_option("--side-count", scenario.side_count, "Cells per axis")->capture_default_str();
  sim->add_option("--replicates", scenario.replicates, "Independent grids")->capture_default_str();
  sim->add_option("--gp-range", scenario.gp_range, "Covariate covariance range")->capture_default_str();
  sim->add_option("--treat-intercept", scenario.treat_intercept, "Treatment logit intercept")->capture_default_str();
  sim->add_option("--true-tau", scenario.true_tau, "Spill-over bandwidth")->capture_default_str();
  sim->add_option("--variant", variant, "Confounder transform: identity, negcube, exp")->capture_default_str();
  sim->add_option("--beta0", scenario.beta0)->capture_default_str();
  sim->add_option("--delta1", scenario.delta1, "Direct effect")->capture_default_str();
  sim->add_option("--delta2", scenario.delta2, "Spill-over effect")->capture_default_str();
  sim->add_option("--noise-sd", scenario.noise_sd)->capture_default_str();
  sim->add_option("--seed", scenario.seed)->capture_default_str();
  sim->add_option("--confounder-bandwidth", scenario.confounder_bandwidth)->capture_default_str();
  sim->add_option("--confounder-includes-self", scenario.confounder_includes_self)->capture_default_str();
  sim->add_option("-o,--out", sim_out, "Output directory")->capture_default_str();
  sim->add_option("--grids", sim_grids, "Also write the blocks in the ingest layout (odd side count)");

  // fit
  fs::path fit_data, fit_grids, fit_config, fit_out = "fit";
  std::string fit_model_name = "gps";
  std::vector<double> fit_taus;
  int fit_side = 0, fit_block = 9;
  double fit_spacing = 1.0;
  std::uint64_t fit_seed = 1;
  bool fit_seed_set = false;
  auto* fit = app.add_subcommand("fit", "Fit one model to a dataset");
  auto* data_opt = fit->add_option("--data", fit_data, "Directory written by simulate");
  auto* grids_opt = fit->add_option("--grids", fit_grids, "Gridded observation CSV (ingest layout)");
  data_opt->excludes(grids_opt);
  fit->add_option("--side", fit_side, "Cells per axis (default: from manifest.json)");
  fit->add_option("--block-side", fit_block, "Block side for --grids")->capture_default_str();
  fit->add_option("--spacing", fit_spacing, "Cell spacing for --grids")->capture_default_str();
  fit->add_option("--model", fit_model_name, "gps, oracle, local_only, naive")->capture_default_str();
  fit->add_option("--config", fit_config, "JSON with optional 'sampler' and 'gps' objects");
  fit->add_option("--tau-grid", fit_taus, "Fixed conditioning bandwidths (default: estimated)");
  fit->add_option("--seed", fit_seed, "Sampler seed")->each([&](const std::string&) { fit_seed_set = true; });
  fit->add_option("-o,--out", fit_out, "Output directory")->capture_default_str();

  // benchmark
  fs::path bench_config, bench_out = "benchmark";
  bool bench_resume = false, bench_full = false;
  int bench_reps = 0, bench_workers = -1;
  auto* bench = app.add_subcommand("benchmark", "Repeated simulation study");
  bench->add_option("--config", bench_config, "Benchmark JSON config");
  bench->add_option("-o,--out", bench_out, "Output directory")->capture_default_str();
  bench->add_flag("--resume", bench_resume, "Reuse per-replicate files already in the output directory");
  bench->add_flag("--full-scale", bench_full, "500 repetitions, 7500 burn-in, 22500 draws");
  bench->add_option("--repetitions", bench_reps, "Override the repetition count");
  bench->add_option("--workers", bench_workers, "Worker threads (0: all cores)");

  // ingest
  IngestSchema schema;
  fs::path ingest_in, ingest_out;
  auto* ing = app.add_subcommand("ingest", "Validate and impute gridded observations");
  ing->add_option("input", ingest_in, "Observation CSV")->required();
  ing->add_option("-o,--out", ingest_out, "Write the cleaned, imputed file here");
  ing->add_option("--block-side", schema.block_side)->capture_default_str();
  ing->add_option("--spacing", schema.spacing)->capture_default_str();
  ing->add_option("--impute-bandwidth", schema.impute_bandwidth)->capture_default_str();
  ing->add_option("--day-column", schema.day_column)->capture_default_str();
  ing->add_option("--row-column", schema.row_column)->capture_default_str();
  ing->add_option("--col-column", schema.col_column)->capture_default_str();
  ing->add_option("--treatment-column", schema.treatment_column)->capture_default_str();
  ing->add_option("--covariate-prefix", schema.covariate_prefix)->capture_default_str();
  ing->add_option("--response-column", schema.response_column)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim) {
      scenario.variant = confounder_variant_from_string(variant);
      return run_simulate(scenario, sim_out, sim_grids);
    }
    if (*fit) {
      if (fit_data.empty() == fit_grids.empty()) throw InvalidSpec("fit needs exactly one of --data or --grids");
      const ModelKind kind = model_kind_from_string(fit_model_name);
      SamplerConfig sampler;
      GpsOptions gps;
      if (!fit_config.empty()) {
        const json cfg = read_json(fit_config);
        if (cfg.contains("sampler")) sampler = sampler_from_json(cfg.at("sampler"), sampler);
        if (cfg.contains("gps")) gps = gps_options_from_json(cfg.at("gps"), gps);
      }
      if (fit_seed_set) sampler.seed = fit_seed;
      if (!fit_taus.empty()) gps.tau_grid = fit_taus;

      SpatialStudy study;
      if (!fit_data.empty()) {
        study = load_simulated(fit_data, fit_side);
      } else {
        IngestSchema s;
        s.block_side = fit_block;
        s.spacing = fit_spacing;
        const GriddedDataset g = ingest_grids(fit_grids, s);
        std::cerr << g.blocks.size() << " blocks, " << g.rejected << " rejected\n";
        study = g.to_study();
      }
      fs::create_directories(fit_out);
      PosteriorSamples post;
      json meta{{"model", to_string(kind)}, {"sampler", to_json(sampler)}};
      if (kind == ModelKind::gps) {
        GpsFit g = fit_gps(study, gps, sampler);
        write_propensity_csv(fit_out / "propensity.csv", g.summary);
        meta["gps"] = to_json(gps);
        meta["tau_grid"] = g.tau_grid;
        if (g.step2) {
          meta["step2"] = {{"tau_mean", g.step2->tau_mean},
                           {"tau_sd", g.step2->tau_sd},
                           {"weakly_identified", g.step2->weakly_identified}};
          if (g.step2->weakly_identified)
            std::cerr << "warning: spill-over bandwidth is weakly identified; the grid spans the prior\n";
        }
        post = std::move(g.posterior);
      } else {
        post = run_comparison(study, kind, gps, sampler);
      }
      const RegressionDesign design = kind == ModelKind::gps ? RegressionDesign{}
                                                             : comparison_design(study, kind, gps.spline, gps.family);
      json bases = json::array();
      for (const auto& b : design.blocks) bases.push_back({{"name", b.name}, {"center", b.center},
                                                           {"scale", b.scale}, {"basis", to_json(b.basis)}});
      if (!bases.empty()) meta["spline_bases"] = bases;
      meta["notes"] = post.notes;
      write_samples_csv(fit_out / "samples.csv", post);
      write_summary_csv(fit_out / "summary.csv", post);
      write_json(fit_out / "fit.json", meta);
      for (const char* p : kReportedParameters) {
        const auto s = post.summarize(p);
        std::printf("%-7s mean %9.4f  sd %8.4f  95%% [%9.4f, %9.4f]\n", p, s.mean, s.sd, s.q025, s.q975);
      }
      std::printf("tau acceptance rate %.3f\n", post.acceptance_rate);
      return 0;
    }
    if (*bench) {
      BenchmarkConfig cfg = bench_full ? BenchmarkConfig::full_scale() : BenchmarkConfig{};
      if (!bench_config.empty()) cfg = benchmark_from_json(read_json(bench_config), cfg);
      if (bench_reps > 0) cfg.repetitions = bench_reps;
      if (bench_workers >= 0) cfg.workers = bench_workers;
      cfg.output_dir = bench_out;
      const BenchmarkReport report = run_benchmark(cfg, bench_resume);
      std::printf("%-9s %-10s %-7s %10s %8s %9s %7s\n", "variant", "model", "param", "bias*1e3", "se", "coverage",
                  "cov_se");
      for (const auto& r : report.rows) {
        std::printf("%-9s %-10s %-7s %10.1f %8.1f %9.1f %7.1f\n", to_string(r.variant), to_string(r.model),
                    r.parameter.c_str(), r.bias_x1000, r.se_x1000, r.coverage, r.coverage_se);
      }
      std::printf("fits computed %ld, resumed %ld, failed %ld\n", report.computed, report.resumed, report.failures);
      return 0;
    }
    if (*ing) {
      const GriddedDataset g = ingest_grids(ingest_in, schema);
      for (const auto& line : g.provenance) std::cout << line << '\n';
      std::cout << g.blocks.size() << " blocks accepted, " << g.rejected << " rejected, "
                << g.covariate_names.size() << " covariates\n";
      if (!ingest_out.empty()) export_grids(ingest_out, g);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
