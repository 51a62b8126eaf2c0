// Acceptance checks. Prints one PASS/FAIL line per criterion and exits nonzero on any failure.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include <unistd.h>

#include <CLI11.hpp>

#include "oracles.hpp"
#include "sgps/benchmark.hpp"
#include "sgps/bspline.hpp"
#include "sgps/field_io.hpp"
#include "sgps/ingest.hpp"
#include "sgps/propensity.hpp"
#include "sgps/sampler.hpp"
#include "sgps/summary.hpp"

using namespace sgps;
namespace fs = std::filesystem;

namespace {

// Tolerances.
constexpr double kGpsBiasMax = 0.02;
constexpr double kNaiveDelta1Bias = 0.237, kNaiveDelta1Tol = 0.03;
constexpr double kLocalDelta2Bias = -0.072, kLocalDelta2Tol = 0.02;
constexpr double kLocalTauBias = 0.069, kLocalTauTol = 0.02;
constexpr double kGpsCoverageLo = 87.0, kGpsCoverageHi = 99.0;
constexpr double kZeroCoverageMax = 5.0;
constexpr double kOracleCoverageLo = 88.0, kOracleCoverageHi = 99.0;
constexpr int kConjugateDraws = 50000;
constexpr double kMcSeMultiple = 4.0;
constexpr int kPriorDraws = 100000;
constexpr double kKsAlpha = 0.01;
constexpr int kPropensityFields = 100000;
constexpr double kSpilloverRelTol = 1e-12;
constexpr double kUnityTol = 1e-10;
constexpr double kCoxDeBoorTol = 1e-12;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [miss: " << what << "]";
    }
  }
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// 1-3 share one benchmark run.
struct TableChecks {
  BenchmarkReport report;
  double seconds = 0.0;
};

TableChecks run_tables(bool full_scale, int workers, const fs::path& out) {
  BenchmarkConfig c = full_scale ? BenchmarkConfig::full_scale() : BenchmarkConfig{};
  c.workers = workers;
  c.output_dir = out;
  const auto start = std::chrono::steady_clock::now();
  TableChecks t;
  t.report = run_benchmark(c);
  t.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return t;
}

Outcome criterion1(const TableChecks& t) {
  Outcome o;
  const auto& r = t.report;
  const auto v = ConfounderVariant::identity;
  for (const char* p : {"delta1", "delta2"}) {
    const double b = r.find(v, ModelKind::gps, p).bias_x1000 / 1000.0;
    o.detail << " gps " << p << " bias " << fmt("%.4f", b) << ";";
    o.check(std::abs(b) <= kGpsBiasMax, std::string("gps ") + p);
  }
  const double naive = r.find(v, ModelKind::naive, "delta1").bias_x1000 / 1000.0;
  const double local_d2 = r.find(v, ModelKind::local_only, "delta2").bias_x1000 / 1000.0;
  const double local_tau = r.find(v, ModelKind::local_only, "tau").bias_x1000 / 1000.0;
  o.detail << " naive delta1 " << fmt("%.4f", naive) << "; local delta2 " << fmt("%.4f", local_d2)
           << "; local tau " << fmt("%.4f", local_tau) << ";";
  o.check(std::abs(naive - kNaiveDelta1Bias) <= kNaiveDelta1Tol, "naive delta1");
  o.check(std::abs(local_d2 - kLocalDelta2Bias) <= kLocalDelta2Tol, "local delta2");
  o.check(std::abs(local_tau - kLocalTauBias) <= kLocalTauTol, "local tau");
  o.check(r.failures == 0, std::to_string(r.failures) + " failed fits");
  o.detail << " " << fmt("%.0f", t.seconds) << " s";
  return o;
}

Outcome criterion2(const TableChecks& t) {
  Outcome o;
  const auto v = ConfounderVariant::identity;
  for (const char* p : kReportedParameters) {
    const double c = t.report.find(v, ModelKind::gps, p).coverage;
    o.detail << " gps " << p << " " << fmt("%.1f", c) << "%;";
    o.check(c >= kGpsCoverageLo && c <= kGpsCoverageHi, std::string("gps ") + p);
  }
  const double naive = t.report.find(v, ModelKind::naive, "delta1").coverage;
  const double local = t.report.find(v, ModelKind::local_only, "tau").coverage;
  o.detail << " naive delta1 " << fmt("%.1f", naive) << "%; local tau " << fmt("%.1f", local) << "%";
  o.check(naive <= kZeroCoverageMax, "naive delta1");
  o.check(local <= kZeroCoverageMax, "local tau");
  return o;
}

Outcome criterion3(const TableChecks& t) {
  Outcome o;
  for (const char* p : {"delta1", "delta2"}) {
    const double c = t.report.find(ConfounderVariant::identity, ModelKind::oracle, p).coverage;
    o.detail << " oracle " << p << " " << fmt("%.1f", c) << "%;";
    o.check(c >= kOracleCoverageLo && c <= kOracleCoverageHi, std::string("oracle ") + p);
  }
  return o;
}

Outcome criterion4() {
  Outcome o;
  Rng rng(17);
  Eigen::MatrixXd M(10, 3);
  M.col(0).setOnes();
  M.rightCols(2) = rng.standard_normal(10, 2);
  const Eigen::VectorXd Y = M * Eigen::Vector3d(0.5, -1.0, 2.0) + 0.8 * rng.standard_normal(10, 1);
  const SamplerConfig cfg;
  const auto exact = oracle::semi_conjugate_posterior(M, Y, cfg.prior_variance, cfg.sigma2_shape, cfg.sigma2_rate);
  const Eigen::MatrixXd prior = cfg.prior_variance * Eigen::MatrixXd::Identity(3, 3);
  const int burn = 1000;
  Eigen::MatrixXd draws(kConjugateDraws, 3);
  double s2 = 1.0;
  for (int i = 0; i < burn + kConjugateDraws; ++i) {
    const Eigen::VectorXd b = gibbs_update_beta_from_data(M, Y, s2, prior, rng);
    s2 = gibbs_update_sigma2(Y - M * b, cfg.sigma2_shape, cfg.sigma2_rate, rng);
    if (i >= burn) draws.row(i - burn) = b.transpose();
  }
  for (int j = 0; j < 3; ++j) {
    const Eigen::VectorXd x = draws.col(j);
    const double mean = x.mean();
    const double sd = std::sqrt((x.array() - mean).square().sum() / (kConjugateDraws - 1));
    const double z_mean = (mean - exact.mean(j)) / batch_means_se(x);
    const double z_sd = (sd - exact.sd(j)) / (batch_means_se((x.array() - mean).square().matrix()) / (2.0 * sd));
    o.detail << " b" << j << " z(mean) " << fmt("%.2f", z_mean) << " z(sd) " << fmt("%.2f", z_sd) << ";";
    o.check(std::abs(z_mean) < kMcSeMultiple, "mean b" + std::to_string(j));
    o.check(std::abs(z_sd) < kMcSeMultiple, "sd b" + std::to_string(j));
  }
  return o;
}

Outcome criterion5() {
  Outcome o;
  ScenarioConfig sc;
  sc.replicates = 2;
  sc.seed = 4;
  const auto study = SpatialStudy::from_synthetic(generate_scenario(sc));
  const GpsOptions opt;
  const auto design = comparison_design(study, ModelKind::naive, opt.spline, opt.family);
  SamplerConfig cfg;
  cfg.likelihood_enabled = false;
  cfg.burn_in = 2000;
  cfg.thin = 20;
  cfg.samples = kPriorDraws;
  cfg.seed = 99;
  const double floor = default_tau_floor(study);
  const auto post = run_sampler(design, cfg, floor);
  std::vector<double> z(std::size_t(post.tau.size()));
  for (Eigen::Index i = 0; i < post.tau.size(); ++i) z[std::size_t(i)] = std::log(post.tau(i) - floor);
  const auto [D, p] = oracle::ks_test(z, [&](double x) {
    return oracle::normal_cdf(x, cfg.tau_prior_mean, cfg.tau_prior_sd);
  });
  o.detail << " n " << z.size() << " D " << fmt("%.5f", D) << " p " << fmt("%.3f", p);
  o.check(z.size() == std::size_t(kPriorDraws), "draw count");
  o.check(p > kKsAlpha, "KS");
  return o;
}

Outcome criterion6() {
  Outcome o;
  const auto g = SpatialGrid::unit_square(5);
  Rng rng(606);
  const std::vector<double> taus{0.15, 0.3, 0.6};
  const int M = kPropensityFields;
  double worst = 0.0;
  int instances = 0;
  for (int inst = 0; inst < 4; ++inst) {
    Eigen::VectorXd p(25);
    for (auto& v : p) v = 0.01 + 0.3 * rng.uniform();
    for (auto family : {KernelFamily::gaussian, KernelFamily::indicator}) {
      const auto sims = simulate_spillover_distribution(p, g, taus, M, rng, family);
      for (std::size_t t = 0; t < taus.size(); ++t) {
        ++instances;
        const auto m = spillover_moments(p, g.distances(), {family, taus[t]});
        for (Eigen::Index s = 0; s < 25; ++s) {
          const Eigen::ArrayXd x = sims[t].col(s).array();
          const double p0 = m.p0(s);
          const double zero = (x == 0.0).cast<double>().mean();
          const double mean = x.mean();
          const Eigen::ArrayXd c = x - mean;
          const double var = c.square().sum() / (M - 1);
          const double m4 = c.square().square().mean();
          const double se_zero = std::sqrt(p0 * (1 - p0) / M);
          const double se_mean = std::sqrt(m.variance(s) / M);
          const double se_var = std::sqrt(std::max(m4 - var * var, 0.0) / M);
          const auto z = [](double diff, double se) { return se > 0 ? std::abs(diff) / se : (diff == 0 ? 0.0 : HUGE_VAL); };
          worst = std::max({worst, z(zero - p0, se_zero), z(mean - m.mean(s), se_mean),
                            z(var - m.variance(s), se_var)});
        }
      }
    }
  }
  o.detail << " " << instances << " instances x 25 sites, max |z| " << fmt("%.2f", worst);
  o.check(worst < kMcSeMultiple, "moments");
  return o;
}

Outcome criterion7() {
  Outcome o;
  Rng rng(7);
  double spill_err = 0.0;
  for (int side : {3, 6, 10}) {
    const SpatialGrid g(side, 0.1 + rng.uniform());
    Field A(Eigen::Index(side) * side, 3);
    for (auto& a : A.reshaped()) a = rng.bernoulli(0.4) ? 1.0 : 0.0;
    for (auto family : {KernelFamily::gaussian, KernelFamily::indicator})
      for (double tau : {0.2, 0.7}) {
        const KernelSpec spec{family, tau};
        const Field fast = spillover_field(A, g, spec);
        const Field brute = oracle::spillover(g.coords(), A, family, tau);
        const double scale = std::max(brute.cwiseAbs().maxCoeff(), 1e-300);
        spill_err = std::max(spill_err, (fast - brute).cwiseAbs().maxCoeff() / scale);
      }
  }
  double unity_err = 0.0, cdb_err = 0.0;
  for (int degree = 0; degree <= 4; ++degree)
    for (int J : {degree + 1, degree + 3, 9}) {
      const double lo = -1.0 + 2.0 * rng.uniform(), hi = lo + 0.5 + 3.0 * rng.uniform();
      const BSplineBasis<> b(lo, hi, J, degree);
      Eigen::VectorXd x(300);
      for (auto& v : x) v = lo + (hi - lo) * rng.uniform();
      x(0) = lo;
      x(1) = hi;
      const Eigen::MatrixXd B = b.evaluate(x);
      unity_err = std::max(unity_err, (B.rowwise().sum().array() - 1.0).abs().maxCoeff());
      for (Eigen::Index r = 0; r < x.size(); ++r)
        for (int j = 0; j < J; ++j)
          cdb_err = std::max(cdb_err, std::abs(B(r, j) - oracle::cox_de_boor(b.knots(), j, degree, x(r))));
    }
  o.detail << " spill-over rel " << fmt("%.1e", spill_err) << "; unity " << fmt("%.1e", unity_err)
           << "; Cox-de Boor " << fmt("%.1e", cdb_err);
  o.check(spill_err <= kSpilloverRelTol, "spill-over");
  o.check(unity_err <= kUnityTol, "partition of unity");
  o.check(cdb_err <= kCoxDeBoorTol, "Cox-de Boor");
  return o;
}

Outcome criterion8(const fs::path& dir) {
  Outcome o;
  fs::create_directories(dir);
  ScenarioConfig sc;
  sc.side_count = 9;
  sc.replicates = 12;
  sc.seed = 808;
  const auto synthetic = generate_scenario(sc);
  const auto gridded = gridded_from_synthetic(synthetic);
  IngestSchema schema;
  schema.spacing = gridded.schema.spacing;
  schema.impute_bandwidth = 0.25;

  // exact round trip
  export_grids(dir / "grids.csv", gridded);
  const auto back = ingest_grids(dir / "grids.csv", schema);
  bool exact = back.blocks.size() == gridded.blocks.size() && back.rejected == 0 && back.provenance.empty();
  for (std::size_t r = 0; exact && r < back.blocks.size(); ++r) {
    const auto& a = back.blocks[r];
    const auto& b = gridded.blocks[r];
    exact = a.day == b.day && a.treatment == b.treatment && a.covariates == b.covariates && a.response == b.response;
  }
  export_grids(dir / "again.csv", back);
  std::ifstream f1(dir / "grids.csv"), f2(dir / "again.csv");
  std::stringstream s1, s2;
  s1 << f1.rdbuf();
  s2 << f2.rdbuf();
  exact = exact && s1.str() == s2.str();
  o.check(exact, "round trip");

  // blank covariates, drop one response, and ingest again
  std::istringstream in(s1.str());
  std::ostringstream holed;
  std::string line;
  std::getline(in, line);
  holed << line << '\n';
  Rng rng(88);
  long blanked = 0;
  while (std::getline(in, line)) {
    auto fields = csv::split(line);
    std::vector<std::string> cols(fields.begin(), fields.end());
    if (cols[0] == "3" && !cols[5].empty()) cols[5].clear();
    else if (rng.uniform() < 0.1 && cols[0] != "3") {
      cols[4].clear();
      ++blanked;
    }
    for (std::size_t i = 0; i < cols.size(); ++i) holed << (i ? "," : "") << cols[i];
    holed << '\n';
  }
  {
    std::ofstream out(dir / "holed.csv");
    out << holed.str();
  }
  const auto imp = ingest_grids(dir / "holed.csv", schema);
  long flagged = 0;
  bool bounded = true, observed_kept = true;
  for (const auto& b : imp.blocks) {
    const auto& orig = gridded.blocks[std::size_t(b.day)];
    flagged += b.imputed.count();
    double lo = HUGE_VAL, hi = -HUGE_VAL;
    for (Eigen::Index s = 0; s < b.covariates.rows(); ++s)
      if (!b.imputed(s, 0)) {
        lo = std::min(lo, b.covariates(s, 0));
        hi = std::max(hi, b.covariates(s, 0));
        observed_kept = observed_kept && b.covariates(s, 0) == orig.covariates(s, 0);
      }
    for (Eigen::Index s = 0; s < b.covariates.rows(); ++s)
      if (b.imputed(s, 0)) bounded = bounded && b.covariates(s, 0) >= lo && b.covariates(s, 0) <= hi;
  }
  const long logged = long(imp.provenance.size()) - imp.rejected;
  o.detail << " " << back.blocks.size() << " blocks round-tripped; " << blanked << " cells blanked, " << flagged
           << " imputed, " << logged << " logged; " << imp.rejected << " block rejected";
  o.check(imp.rejected == 1 && imp.blocks.size() == gridded.blocks.size() - 1, "rejection");
  o.check(flagged == blanked && logged == blanked, "imputation log");
  o.check(bounded, "imputed values inside observed range");
  o.check(observed_kept, "observed cells unchanged");

  // malformed inputs
  bool rejected_bad = false;
  {
    std::ofstream out(dir / "bad.csv");
    out << "day,row,col,A,X1,Y\n0,0,0,2,0.5,\n";
  }
  try {
    ingest_grids(dir / "bad.csv", schema);
  } catch (const ValidationError&) {
    rejected_bad = true;
  }
  o.check(rejected_bad, "non-binary treatment");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  bool full_scale = false;
  int workers = 0;
  std::string out;
  std::vector<int> only;
  app.add_flag("--full-scale", full_scale, "500 repetitions with full chain lengths for criteria 1-3");
  app.add_option("--workers", workers, "Benchmark worker threads (0: all cores)");
  app.add_option("-o,--out", out, "Keep benchmark and ingest files here");
  app.add_option("--only", only, "Run only these criteria");
  CLI11_PARSE(app, argc, argv);

  const fs::path dir = out.empty() ? fs::temp_directory_path() / ("sgps_acceptance_" + std::to_string(::getpid()))
                                   : fs::path(out);
  const auto wanted = [&](int k) { return only.empty() || std::find(only.begin(), only.end(), k) != only.end(); };

  std::optional<TableChecks> tables;
  if (wanted(1) || wanted(2) || wanted(3)) tables = run_tables(full_scale, workers, dir / "benchmark");

  const std::vector<std::pair<int, std::function<Outcome()>>> criteria{
      {1, [&] { return criterion1(*tables); }},
      {2, [&] { return criterion2(*tables); }},
      {3, [&] { return criterion3(*tables); }},
      {4, criterion4},
      {5, criterion5},
      {6, criterion6},
      {7, criterion7},
      {8, [&] { return criterion8(dir / "ingest"); }},
  };
  bool all = true;
  for (const auto& [k, run] : criteria) {
    if (!wanted(k)) continue;
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " error: " << e.what();
    }
    all = all && o.pass;
    std::cout << "criterion " << k << ": " << (o.pass ? "PASS" : "FAIL") << " |" << o.detail.str() << std::endl;
  }
  if (out.empty()) fs::remove_all(dir);
  return all ? 0 : 1;
}
