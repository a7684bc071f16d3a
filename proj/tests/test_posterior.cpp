#include "bayesdecide/posterior.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace bayesdecide;

namespace {

Gaussian g1(double mean, double var) {
  return Gaussian{Vector::Constant(1, mean), Matrix::Constant(1, 1, var)};
}

ExperimentRecord rec1d(double x, double var, std::int64_t t) {
  ExperimentRecord r;
  r.id = "r" + std::to_string(t);
  r.timestamp = t;
  r.schema.names = {"M"};
  r.x = Vector::Constant(1, x);
  r.sigma = Matrix::Constant(1, 1, var);
  return r;
}

} // namespace

TEST(PosteriorUpdate, FlatPriorReturnsLikelihoodExactly) {
  std::mt19937_64 eng(1);
  for (int i = 0; i < 50; ++i) {
    const Vector x = oracle::random_vec(eng, 4, 3.0);
    const Matrix s = oracle::random_spd(eng, 4);
    const auto post = posterior_update(Prior{FlatPrior{}}, x, s);
    ASSERT_EQ(post.mean, x);
    ASSERT_EQ(post.cov, s);
  }
}

TEST(PosteriorUpdate, OneDimensionalExample) {
  const auto post = posterior_update(g1(0, 1), Vector::Constant(1, 2.0), Matrix::Constant(1, 1, 1.0));
  EXPECT_DOUBLE_EQ(post.mean[0], 1.0);
  EXPECT_DOUBLE_EQ(post.cov(0, 0), 0.5);
}

TEST(PosteriorUpdate, TightPriorPinsTheMean) {
  const auto post =
      posterior_update(g1(0.3, 1e-12), Vector::Constant(1, 50.0), Matrix::Constant(1, 1, 4.0));
  EXPECT_NEAR(post.mean[0], 0.3, 1e-9);
  EXPECT_NEAR(post.cov(0, 0), 1e-12, 1e-20);
}

TEST(PosteriorUpdate, ZeroLikelihoodVarianceReturnsObservation) {
  // Sigma_t = 0 is PSD: the data are exact.
  const auto post = posterior_update(g1(5, 2), Vector::Constant(1, -1.0), Matrix::Zero(1, 1));
  EXPECT_DOUBLE_EQ(post.mean[0], -1.0);
  EXPECT_DOUBLE_EQ(post.cov(0, 0), 0.0);
}

TEST(PosteriorUpdate, DimensionMismatchThrows) {
  EXPECT_THROW(posterior_update(g1(0, 1), Vector::Zero(2), Matrix::Identity(2, 2)),
               std::invalid_argument);
  EXPECT_THROW(posterior_update(Prior{FlatPrior{}}, Vector::Zero(2), Matrix::Identity(3, 3)),
               std::invalid_argument);
}

// Precisions add: Delta^-1 = Sigma_t^-1 + Omega^-1, and the mean is the
// precision-weighted combination. Checked against explicit inverses.
TEST(PosteriorUpdate, PrecisionAdditivityAndConvexity) {
  std::mt19937_64 eng(2);
  for (int i = 0; i < 200; ++i) {
    const int n = 1 + i % 5;
    const Gaussian prior{oracle::random_vec(eng, n, 2.0), oracle::random_spd(eng, n, 0.5 + i % 3)};
    const Vector x = oracle::random_vec(eng, n, 2.0);
    const Matrix s = oracle::random_spd(eng, n, 1.0 + i % 4);
    const auto post = posterior_update(prior, x, s);
    const Matrix prec = s.inverse() + prior.cov.inverse();
    const Matrix expected_prec = post.cov.inverse();
    EXPECT_LT((expected_prec - prec).cwiseAbs().maxCoeff() / prec.cwiseAbs().maxCoeff(), 1e-8);
    const Vector mean = prec.inverse() * (s.inverse() * x + prior.cov.inverse() * prior.mean);
    EXPECT_LT((post.mean - mean).cwiseAbs().maxCoeff(), 1e-8 * (1 + mean.cwiseAbs().maxCoeff()));
  }
}

TEST(PosteriorUpdate, ContractsBothInputs) {
  std::mt19937_64 eng(3);
  for (int i = 0; i < 300; ++i) {
    const int n = 1 + i % 6;
    const Gaussian prior{oracle::random_vec(eng, n), oracle::random_spd(eng, n, 0.2 + i % 5)};
    const Matrix s = oracle::random_spd(eng, n, 0.1 + i % 7);
    const auto post = posterior_update(prior, oracle::random_vec(eng, n), s);
    EXPECT_GE(linalg::min_eigenvalue(s - post.cov), -1e-10);
    EXPECT_GE(linalg::min_eigenvalue(prior.cov - post.cov), -1e-10);
    EXPECT_GE(linalg::min_eigenvalue(post.cov), -1e-12);
  }
}

// Full 1-D chain against the numerical marginalization oracle.
TEST(PosteriorUpdate, MatchesNumericalIntegration) {
  std::vector<ExperimentRecord> h{rec1d(1.0, 0.8, 1), rec1d(-0.5, 1.5, 2), rec1d(2.5, 1.0, 3)};
  const ShrinkageLevel k(0.7);
  const auto prior = build_prior(h, k);
  const double gamma = std::get<HierarchicalPrior>(prior).params.gamma(0, 0);
  const auto post = posterior_update(prior, Vector::Constant(1, 3.0), Matrix::Constant(1, 1, 1.2));

  const auto w = oracle::linspace(-30, 30, 3001), mu = oracle::linspace(-40, 40, 4001);
  const auto pd = oracle::prior_density_1d({{1.0, -0.5, 2.5}, {0.8, 1.5, 1.0}}, gamma, w, mu);
  const auto d = oracle::posterior_density_1d(pd, w, 3.0, 1.2);
  double worst = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i)
    worst = std::max(worst, std::abs(d[i] - oracle::normal_pdf(w[i], post.mean[0], post.cov(0, 0))));
  EXPECT_LT(worst, 1e-6);
}

TEST(Shrinkage, IntervalWidthOrderedByK) {
  std::mt19937_64 eng(4);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<ExperimentRecord> h;
    for (int i = 0; i < 5; ++i)
      h.push_back(rec1d(oracle::random_vec(eng, 1)[0], 0.5 + i * 0.2, i + 1));
    const Vector x = Vector::Constant(1, 1.7);
    const Matrix s = Matrix::Constant(1, 1, 1.1);
    double last = 0.0;
    for (auto k : {ShrinkageLevel::complete_pooling(), ShrinkageLevel::moderate(),
                   ShrinkageLevel(5.0), ShrinkageLevel::none()}) {
      const auto post = posterior_update(build_prior(h, k), x, s);
      EXPECT_GE(post.cov(0, 0), last * (1 - 1e-12));
      last = post.cov(0, 0);
    }
  }
}

TEST(Shrinkage, ModerateMeanLiesBetweenPooledAndRaw) {
  // Equal-variance history: the k=1 posterior mean is between the k=0
  // posterior mean and the raw estimate.
  std::vector<ExperimentRecord> h{rec1d(0.5, 1, 1), rec1d(1.0, 1, 2), rec1d(1.5, 1, 3)};
  const Vector x = Vector::Constant(1, 6.0);
  const Matrix s = Matrix::Constant(1, 1, 1.0);
  const double pooled = posterior_update(build_prior(h, ShrinkageLevel::complete_pooling()), x, s).mean[0];
  const double mid = posterior_update(build_prior(h, ShrinkageLevel::moderate()), x, s).mean[0];
  EXPECT_LT(pooled, mid);
  EXPECT_LT(mid, 6.0);
}

TEST(Summarize, NinetyFivePercentInterval) {
  const auto s = summarize(g1(1, 0.25), ShrinkageLevel::moderate());
  const double z = 1.959963984540054;
  EXPECT_NEAR(s.intervals[0].low, 1 - z * 0.5, 1e-12);
  EXPECT_NEAR(s.intervals[0].high, 1 + z * 0.5, 1e-12);
  EXPECT_TRUE(s.intervals[0].significant);
}

TEST(Summarize, SignificanceRequiresExcludingZero) {
  EXPECT_FALSE(summarize(g1(0.5, 1), ShrinkageLevel::none()).intervals[0].significant);
  EXPECT_TRUE(summarize(g1(-3, 0.5), ShrinkageLevel::none()).intervals[0].significant);
  EXPECT_FALSE(summarize(g1(0, 0), ShrinkageLevel::none()).intervals[0].significant);
}

TEST(Summarize, RejectsBadLevel) {
  EXPECT_THROW(summarize(g1(0, 1), ShrinkageLevel::none(), 1.0), std::invalid_argument);
  EXPECT_THROW(summarize(g1(0, 1), ShrinkageLevel::none(), 0.0), std::invalid_argument);
}

TEST(Summarize, WiderAtHigherLevel) {
  const auto a = summarize(g1(0, 1), ShrinkageLevel::none(), 0.8);
  const auto b = summarize(g1(0, 1), ShrinkageLevel::none(), 0.99);
  EXPECT_LT(a.intervals[0].high, b.intervals[0].high);
}

namespace {

void expect_within_3se(const MonteCarloEstimate &e, double truth) {
  EXPECT_LT(std::abs(e.value - truth), 3.0 * std::max(e.standard_error, 1e-12))
      << e.value << " vs " << truth;
}

} // namespace

TEST(JointSuccess, OneMetricAtZeroMean) {
  expect_within_3se(joint_success_probability(g1(0, 1), {Direction::greater}, Vector::Zero(1),
                                              200000, 1),
                    0.5);
}

TEST(JointSuccess, IndependentPair) {
  const Gaussian g{Vector::Zero(2), Matrix::Identity(2, 2)};
  expect_within_3se(joint_success_probability(g, {Direction::greater, Direction::greater},
                                              Vector::Zero(2), 200000, 2),
                    0.25);
}

TEST(JointSuccess, CorrelatedPairOrthant) {
  Matrix c(2, 2);
  c << 1, 0.9, 0.9, 1;
  const Gaussian g{Vector::Zero(2), c};
  expect_within_3se(joint_success_probability(g, {Direction::greater, Direction::greater},
                                              Vector::Zero(2), 200000, 3),
                    oracle::orthant_probability(0.9));
  expect_within_3se(joint_success_probability(g, {Direction::less, Direction::less},
                                              Vector::Zero(2), 200000, 4),
                    oracle::orthant_probability(0.9));
}

TEST(JointSuccess, AnyDirectionIsUnconstrained) {
  const Gaussian g{Vector::Zero(2), Matrix::Identity(2, 2)};
  expect_within_3se(joint_success_probability(g, {Direction::greater, Direction::any},
                                              Vector::Zero(2), 100000, 5),
                    0.5);
}

TEST(JointSuccess, DeterministicAndValidated) {
  const Gaussian g{Vector::Zero(2), Matrix::Identity(2, 2)};
  const std::vector<Direction> d{Direction::greater, Direction::less};
  EXPECT_EQ(joint_success_probability(g, d, Vector::Zero(2), 5000, 9).value,
            joint_success_probability(g, d, Vector::Zero(2), 5000, 9).value);
  EXPECT_THROW(joint_success_probability(g, d, Vector::Zero(2), 999, 9), std::invalid_argument);
  EXPECT_THROW(joint_success_probability(g, {Direction::greater}, Vector::Zero(2), 5000, 9),
               std::invalid_argument);
}
