#include <gtest/gtest.h>

#include <Eigen/Dense>

#include "oracles.hpp"
#include "sgps/synth.hpp"

using namespace sgps;

TEST(Rng, StreamsAreReproducibleAndDistinct) {
  Rng a = Rng::stream(42, {1, 2}), b = Rng::stream(42, {1, 2}), c = Rng::stream(42, {2, 1});
  for (int i = 0; i < 10; ++i) {
    const double x = a.uniform();
    EXPECT_EQ(x, b.uniform());
    EXPECT_NE(x, c.uniform());
  }
  EXPECT_EQ(Rng::derive_seed(7, {3}), Rng::derive_seed(7, {3}));
  EXPECT_NE(Rng::derive_seed(7, {3}), Rng::derive_seed(7, {4}));
  EXPECT_NE(Rng::derive_seed(7, {3}), Rng::derive_seed(8, {3}));
}

TEST(Rng, GammaMoments) {
  Rng rng(1);
  const int n = 200000;
  double s = 0.0, ss = 0.0;
  for (int i = 0; i < n; ++i) {
    const double g = rng.gamma(2.5, 2.0);
    s += g;
    ss += g * g;
  }
  const double mean = s / n, var = ss / n - mean * mean;
  EXPECT_NEAR(mean, 5.0, 4 * std::sqrt(10.0 / n));
  EXPECT_NEAR(var, 10.0, 0.2);
}

TEST(GaussianProcess, CovarianceValues) {
  Eigen::MatrixXd D(1, 2);
  D << 0.0, 0.6;
  const Eigen::MatrixXd C = exponential_covariance(D, 0.6);
  EXPECT_EQ(C(0, 0), 1.0);
  EXPECT_NEAR(C(0, 1), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(C(0, 1), 0.3679, 5e-5);
  EXPECT_THROW(exponential_covariance(D, 0.0), InvalidSpec);
}

TEST(GaussianProcess, NeighbourCorrelationMatchesCovariance) {
  const SpatialGrid g(2, 0.6);
  const GaussianFieldSampler sampler(g, 0.6);
  Rng rng(123);
  const Field draws = sampler.draw(rng, 10000);
  const Eigen::VectorXd a = draws.row(0), b = draws.row(1);
  const double ma = a.mean(), mb = b.mean();
  const double cov = ((a.array() - ma) * (b.array() - mb)).mean();
  const double corr = cov / std::sqrt((a.array() - ma).square().mean() * (b.array() - mb).square().mean());
  EXPECT_NEAR(corr, 0.368, 0.02);
}

TEST(GaussianProcess, MarginalMeanAndVariance) {
  const auto g = SpatialGrid::unit_square(10);
  const GaussianFieldSampler sampler(g, 0.6);
  EXPECT_EQ(sampler.jitter(), 0.0);
  Rng rng(8);
  const int N = 20000;
  const Field draws = sampler.draw(rng, N);
  for (Eigen::Index s : {0, 45, 99}) {
    const Eigen::VectorXd x = draws.row(s);
    const double mean = x.mean();
    const double var = (x.array() - mean).square().sum() / (N - 1);
    EXPECT_NEAR(mean, 0.0, 4.0 / std::sqrt(double(N)));
    EXPECT_NEAR(var, 1.0, 4.0 * std::sqrt(2.0 / N));
  }
}

TEST(GaussianProcess, ReproducibleFromRngState) {
  const auto g = SpatialGrid::unit_square(5);
  Rng a(99), b(99);
  EXPECT_EQ(sample_gp_field(g, 0.6, a, 3), sample_gp_field(g, 0.6, b, 3));
}

TEST(GaussianProcess, NearSingularCovarianceStillFactors) {
  // Very long range makes the covariance nearly rank one.
  const auto g = SpatialGrid::unit_square(12);
  const GaussianFieldSampler sampler(g, 1e7);
  Rng rng(1);
  EXPECT_TRUE(sampler.draw(rng, 2).allFinite());
}

TEST(Treatment, ProbabilityExamples) {
  EXPECT_DOUBLE_EQ(expit(3.0 - 3.0), 0.5);
  EXPECT_NEAR(expit(0.0 - 3.0), 0.04743, 5e-6);
  EXPECT_NEAR(logit(expit(1.7)), 1.7, 1e-14);
}

TEST(Treatment, IsBinaryAndFollowsProbability) {
  Rng rng(3);
  Field X = Field::Constant(50, 2000, 3.0);
  const Field A = assign_treatment(X, -3.0, rng);
  EXPECT_TRUE(((A.array() == 0.0) || (A.array() == 1.0)).all());
  EXPECT_NEAR(A.mean(), 0.5, 4 * std::sqrt(0.25 / A.size()));
  X(0) = std::nan("");
  EXPECT_THROW(assign_treatment(X, -3.0, rng), DomainError);
}

TEST(Treatment, MarginalFractionMatchesIntegral) {
  // E{expit(X - 3)} for X ~ N(0, 1) by Simpson's rule on [-10, 10].
  const int m = 4000;
  const double h = 20.0 / m;
  double integral = 0.0;
  for (int i = 0; i <= m; ++i) {
    const double x = -10.0 + h * i;
    const double f = expit(x - 3.0) * std::exp(-0.5 * x * x) / std::sqrt(2 * M_PI);
    integral += f * (i == 0 || i == m ? 1 : (i % 2 ? 4 : 2));
  }
  integral *= h / 3.0;
  EXPECT_GT(integral, 0.06);
  EXPECT_LT(integral, 0.07);

  Rng rng(10);
  const Field X = rng.standard_normal(1000, 1000);
  const Field A = assign_treatment(X, -3.0, rng);
  EXPECT_NEAR(A.mean(), integral, 4 * std::sqrt(integral * (1 - integral) / A.size()));
}

TEST(Confounder, WeightsAreNormalised) {
  const auto g = SpatialGrid::unit_square(6);
  for (bool self : {true, false}) {
    const Eigen::MatrixXd K = confounder_weights(g, 0.5, self);
    EXPECT_LT((K.rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-12);
    EXPECT_EQ(K.diagonal().isZero(), !self);
  }
}

TEST(Confounder, ConstantFieldIsPreserved) {
  const auto g = SpatialGrid::unit_square(5);
  const auto cf = confounder_field(Field::Constant(25, 2, 1.5), g, ConfounderVariant::identity);
  EXPECT_LT((cf.W.array() - 1.5).abs().maxCoeff(), 1e-12);
  EXPECT_EQ(cf.h, cf.W);
}

TEST(Confounder, VariantTransforms) {
  EXPECT_EQ(apply_variant(ConfounderVariant::negcube, 2.0), -8.0);
  EXPECT_EQ(apply_variant(ConfounderVariant::identity, 2.0), 2.0);
  EXPECT_DOUBLE_EQ(apply_variant(ConfounderVariant::exp, 2.0), std::exp(2.0));
  for (auto v : {ConfounderVariant::identity, ConfounderVariant::negcube, ConfounderVariant::exp})
    EXPECT_EQ(confounder_variant_from_string(to_string(v)), v);
  EXPECT_THROW(confounder_variant_from_string("square"), InvalidSpec);
}

TEST(Confounder, MatchesBruteForceAverage) {
  const SpatialGrid g(4, 0.3);
  Rng rng(6);
  const Field X = rng.standard_normal(16, 3);
  for (bool self : {true, false}) {
    const auto cf = confounder_field(X, g, ConfounderVariant::negcube, 0.5, self);
    for (Eigen::Index r = 0; r < 3; ++r)
      for (Eigen::Index s = 0; s < 16; ++s) {
        double num = 0.0, den = 0.0;
        for (Eigen::Index t = 0; t < 16; ++t) {
          if (!self && s == t) continue;
          const double d = std::hypot(g.coords()(s, 0) - g.coords()(t, 0), g.coords()(s, 1) - g.coords()(t, 1));
          const double w = std::exp(-(d / 0.5) * (d / 0.5));
          num += w * X(t, r);
          den += w;
        }
        EXPECT_NEAR(cf.W(s, r), num / den, 1e-12);
        EXPECT_NEAR(cf.h(s, r), -std::pow(num / den, 3), 1e-12);
      }
  }
  EXPECT_THROW(confounder_field(Field::Zero(15, 1), g, ConfounderVariant::identity), ShapeError);
}

TEST(Scenario, ValidatesConfig) {
  ScenarioConfig c;
  c.side_count = 1;
  EXPECT_THROW(c.validate(), InvalidSpec);
  c = {};
  c.replicates = 0;
  EXPECT_THROW(c.validate(), InvalidSpec);
  c = {};
  c.true_tau = 0.0;
  EXPECT_THROW(c.validate(), InvalidSpec);
  c = {};
  c.gp_range = -1.0;
  EXPECT_THROW(generate_scenario(c), InvalidSpec);
}

TEST(Scenario, FieldsAreConsistent) {
  ScenarioConfig c;
  c.replicates = 20;
  c.seed = 5;
  const auto d = generate_scenario(c);
  EXPECT_EQ(d.A.rows(), 100);
  EXPECT_EQ(d.A.cols(), 20);
  EXPECT_TRUE(((d.A.array() == 0.0) || (d.A.array() == 1.0)).all());
  EXPECT_GE(d.spill.minCoeff(), 0.0);
  EXPECT_TRUE(d.spill.isApprox(spillover_field(d.A, d.grid, {KernelFamily::gaussian, c.true_tau})));
  const auto cf = confounder_field(d.X, d.grid, c.variant, c.confounder_bandwidth);
  EXPECT_TRUE(d.W.isApprox(cf.W));
  EXPECT_TRUE(d.h.isApprox(cf.h));
  for (Eigen::Index r = 0; r < 20; ++r) {
    for (Eigen::Index s = 0; s < 100; ++s) {
      const double others = d.A.col(r).sum() - d.A(s, r);
      if (others == 0.0) {
        EXPECT_EQ(d.spill(s, r), 0.0);
      }
    }
  }
}

TEST(Scenario, SameSeedIsBitIdentical) {
  ScenarioConfig c;
  c.replicates = 5;
  c.seed = 77;
  const auto a = generate_scenario(c), b = generate_scenario(c);
  EXPECT_EQ(a.X, b.X);
  EXPECT_EQ(a.A, b.A);
  EXPECT_EQ(a.Y, b.Y);
  c.seed = 78;
  EXPECT_NE(generate_scenario(c).Y, a.Y);
}

TEST(Scenario, NoiselessNullEffectsLeaveConfounder) {
  ScenarioConfig c;
  c.replicates = 3;
  c.noise_sd = 0.0;
  c.delta1 = c.delta2 = 0.0;
  const auto d = generate_scenario(c);
  EXPECT_EQ(d.Y, d.h);
  EXPECT_EQ(d.h, d.W);
}

TEST(Scenario, OlsRecoversEffectsAtTrueTau) {
  ScenarioConfig c;
  c.replicates = 100;
  c.seed = 2024;
  const auto d = generate_scenario(c);
  const Eigen::Index m = d.Y.size();
  Eigen::MatrixXd M(m, 3);
  M.col(0).setOnes();
  M.col(1) = d.A.reshaped();
  M.col(2) = d.spill.reshaped();
  const Eigen::VectorXd y = (d.Y - d.h).reshaped();
  const Eigen::VectorXd b = M.colPivHouseholderQr().solve(y);
  const double s2 = (y - M * b).squaredNorm() / double(m - 3);
  const Eigen::VectorXd se = (s2 * (M.transpose() * M).inverse()).diagonal().cwiseSqrt();
  EXPECT_LT(std::abs(b(0) - 0.0), 3 * se(0));
  EXPECT_LT(std::abs(b(1) - 1.0), 3 * se(1));
  EXPECT_LT(std::abs(b(2) - 1.0), 3 * se(2));
}
