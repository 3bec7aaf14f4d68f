#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "stochrelax/stochastics.hpp"
#include "test_support.hpp"

using namespace stochrelax;
using stochrelax::testing::erf_series;
using stochrelax::testing::RejectionSampler;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no stochrelax::Error thrown";
  return ErrorKind::InvalidArgument;
}

const TruncatedNormal kCircuitMarginal{1.0, 0.1, 0.7, 1.3};

DistributionSpec circuit_dist() { return DistributionSpec({kCircuitMarginal, kCircuitMarginal}); }

// Mean of a truncated normal by composite Simpson quadrature of the raw density
double quadrature_mean(const TruncatedNormal& d, int intervals = 4000) {
  const auto dens = [&](double v) { return std::exp(-0.5 * std::pow((v - d.mu) / d.sigma, 2)); };
  const double h = (d.b - d.a) / intervals;
  double mass = 0.0, moment = 0.0;
  for (int i = 0; i <= intervals; ++i) {
    const double v = d.a + i * h;
    const double wgt = (i == 0 || i == intervals) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    mass += wgt * dens(v);
    moment += wgt * v * dens(v);
  }
  return moment / mass;
}

}  // namespace

TEST(Erf, Examples) {
  EXPECT_EQ(stochrelax::erf(0.0), 0.0);
  EXPECT_NEAR(stochrelax::erf(1.0), 0.8427007929497149, 1e-15);
  EXPECT_NEAR(erf_series(1.0), 0.8427007929497149, 1e-15);
  for (double x : {0.1, 0.5, 1.7, 3.2}) EXPECT_EQ(stochrelax::erf(-x), -stochrelax::erf(x));
}

TEST(Erf, MatchesSeriesOracle) {
  for (int i = 0; i < 20; ++i) {
    const double x = -6.0 + 12.0 * i / 19.0 + 0.013;
    EXPECT_NEAR(stochrelax::erf(x), erf_series(x), 1e-12) << "x=" << x;
  }
}

TEST(Normal, MassMatchesCdfDifference) {
  for (double a : {-5.0, -1.0, 0.0, 0.5, 2.0})
    for (double b : {a + 0.1, a + 1.0, a + 4.0})
      EXPECT_NEAR(normal_mass(a, b), normal_cdf(b) - normal_cdf(a), 1e-15);
  EXPECT_NEAR(normal_cdf(0.0), 0.5, 1e-16);
  // upper tail retains relative accuracy where 1 - cdf would cancel
  EXPECT_GT(normal_mass(10.0, 11.0), 0.0);
}

TEST(CellProbability, Examples) {
  const DistributionSpec uni({Uniform{0.0, 1.0}});
  EXPECT_NEAR(cell_probability(uni, {{0.0, 0.25}}), 0.25, 1e-15);
  const DistributionSpec tn({kCircuitMarginal});
  EXPECT_NEAR(cell_probability(tn, {{0.7, 1.0}}), 0.5, 1e-14);
  EXPECT_NEAR(cell_probability(tn, {{0.7, 1.3}}), 1.0, 1e-14);
  EXPECT_EQ(kind_of([&] { cell_probability(tn, {{0.6, 1.0}}); }), ErrorKind::CellOutsideSupport);
  EXPECT_EQ(kind_of([&] { cell_probability(tn, {{0.7, 1.0}, {0.7, 1.0}}); }), ErrorKind::DimensionError);
}

TEST(CellConditionalMean, Examples) {
  const DistributionSpec uni({Uniform{0.0, 1.0}});
  EXPECT_NEAR(cell_conditional_mean(uni, {{0.5, 0.75}})[0], 0.625, 1e-15);
  const DistributionSpec tn({kCircuitMarginal});
  EXPECT_NEAR(cell_conditional_mean(tn, {{0.7, 1.3}})[0], 1.0, 1e-14);
  const DistributionSpec spike({TruncatedNormal{0.0, 0.01, -1.0, 1.0}});
  EXPECT_EQ(kind_of([&] { cell_conditional_mean(spike, {{0.9, 1.0}}); }), ErrorKind::ZeroProbabilityCell);
}

TEST(CellConditionalMean, MatchesRejectionMonteCarlo) {
  RejectionSampler draw(TruncatedNormal{1.0, 0.1, 1.0, 1.3}, 41);
  double sum = 0.0;
  const int n = 10'000'000;
  for (int i = 0; i < n; ++i) sum += draw();
  const double oracle = sum / n;
  const DistributionSpec tn({kCircuitMarginal});
  const double mean = cell_conditional_mean(tn, {{1.0, 1.3}})[0];
  EXPECT_NEAR(mean, oracle, 1e-3);
  EXPECT_NEAR(mean, 1.0791, 1e-4);
}

TEST(Partition, CircuitExamples) {
  const DistributionSpec dist = circuit_dist();
  const std::vector<int> one = {1, 1}, four = {4, 4}, eight = {8, 8};
  const Partition p1 = uniform_partition(dist, one);
  ASSERT_EQ(p1.size(), 1u);
  EXPECT_EQ(p1.cells[0][0], Interval(0.7, 1.3));
  EXPECT_NEAR(p1.probability[0], 1.0, 1e-14);
  EXPECT_NEAR(p1.mean[0][0], 1.0, 1e-14);
  EXPECT_NEAR(p1.mean[0][1], 1.0, 1e-14);
  EXPECT_EQ(uniform_partition(dist, four).size(), 16u);
  EXPECT_EQ(uniform_partition(dist, eight).size(), 64u);
  const std::vector<int> bad = {0, 1}, short_counts = {2};
  EXPECT_EQ(kind_of([&] { uniform_partition(dist, bad); }), ErrorKind::InvalidArgument);
  EXPECT_EQ(kind_of([&] { uniform_partition(dist, short_counts); }), ErrorKind::DimensionError);
}

TEST(Partition, LastDimensionVariesFastest) {
  const std::vector<int> counts = {2, 3};
  const Partition p = uniform_partition(circuit_dist(), counts);
  ASSERT_EQ(p.size(), 6u);
  EXPECT_EQ(p.cells[0][0], p.cells[2][0]);
  EXPECT_EQ(p.cells[0][1].hi(), p.cells[1][1].lo());
  EXPECT_EQ(p.cells[2][1].hi(), 1.3);
  EXPECT_EQ(p.cells[3][0].lo(), p.cells[0][0].hi());
}

TEST(PartitionProperty, TotalProbabilityAndExpectation) {
  const TruncatedNormal skew{0.9, 0.2, 0.7, 1.3};
  const std::vector<DistributionSpec> dists = {
      circuit_dist(),
      DistributionSpec({Uniform{-1.0, 2.0}, skew}),
      DistributionSpec({skew, TruncatedNormal{2.0, 0.5, 0.0, 1.0}, Uniform{0.0, 1.0}}),
  };
  const std::vector<std::vector<double>> global = {
      {1.0, 1.0},
      {0.5, quadrature_mean(skew)},
      {quadrature_mean(skew), quadrature_mean({2.0, 0.5, 0.0, 1.0}), 0.5},
  };
  for (std::size_t k = 0; k < dists.size(); ++k) {
    const auto& dist = dists[k];
    for (int per_dim : {1, 3, 4, 8}) {
      const std::vector<int> counts(dist.dim(), per_dim);
      const Partition part = uniform_partition(dist, counts);
      double total = 0.0;
      std::vector<double> mean(dist.dim(), 0.0);
      for (std::size_t i = 0; i < part.size(); ++i) {
        total += part.probability[i];
        for (std::size_t d = 0; d < dist.dim(); ++d) {
          mean[d] += part.probability[i] * part.mean[i][d];
          EXPECT_TRUE(part.cells[i][d].contains(part.mean[i][d]));
        }
      }
      EXPECT_NEAR(total, 1.0, 1e-10);
      for (std::size_t d = 0; d < dist.dim(); ++d) {
        EXPECT_NEAR(mean[d], global[k][d], 1e-9) << "dist " << k << " dim " << d << " counts " << per_dim;
        EXPECT_NEAR(dist.mean()[d], global[k][d], 1e-9);
      }
    }
  }
}

TEST(PartitionProperty, ProbabilityMatchesFrequency) {
  RejectionSampler d1(kCircuitMarginal, 42), d2(kCircuitMarginal, 43);
  const int n = 1'000'000;
  std::vector<std::pair<double, double>> draws(n);
  for (auto& w : draws) w = {d1(), d2()};
  stochrelax::testing::Gen gen(44);
  const DistributionSpec dist = circuit_dist();
  for (int c = 0; c < 10; ++c) {
    const Interval a = gen.inside({0.7, 1.3}), b = gen.inside({0.7, 1.3});
    int hits = 0;
    for (const auto& [x, y] : draws) hits += a.contains(x) && b.contains(y);
    const double freq = static_cast<double>(hits) / n;
    const double prob = cell_probability(dist, {a, b});
    const double se = std::sqrt(prob * (1.0 - prob) / n);
    EXPECT_LE(std::fabs(freq - prob), 3.0 * se + 1e-12) << a << " x " << b;
  }
}

TEST(Sampling, Deterministic) {
  const DistributionSpec dist({Uniform{0.0, 1.0}, Uniform{-2.0, 3.0}});
  Rng r1(7), r2(7), r3(8);
  const auto a = sample(dist, r1, 2), b = sample(dist, r2, 2), c = sample(dist, r3, 2);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  EXPECT_EQ(kind_of([&] { sample(dist, r1, 0); }), ErrorKind::InvalidArgument);
}

TEST(Sampling, SupportAndMean) {
  Rng rng(9);
  const DistributionSpec dist({kCircuitMarginal});
  const auto draws = sample(dist, rng, 1'000'000);
  double sum = 0.0;
  for (const auto& w : draws) {
    ASSERT_GE(w[0], 0.7);
    ASSERT_LE(w[0], 1.3);
    sum += w[0];
  }
  EXPECT_NEAR(sum / draws.size(), 1.0, 3e-4);
}

TEST(Sampling, QuantileInvertsCdf) {
  for (double u : {1e-9, 0.01, 0.3, 0.5, 0.77, 0.999999}) {
    const double x = marginal_quantile(kCircuitMarginal, u);
    EXPECT_NEAR(marginal_probability(kCircuitMarginal, 0.7, x), u, 1e-11);
  }
  EXPECT_DOUBLE_EQ(marginal_quantile(Uniform{2.0, 4.0}, 0.25), 2.5);
}

TEST(Distribution, Validation) {
  EXPECT_EQ(kind_of([] { DistributionSpec({Uniform{1.0, 1.0}}); }), ErrorKind::InvalidArgument);
  EXPECT_EQ(kind_of([] { DistributionSpec({TruncatedNormal{0.0, 0.0, -1.0, 1.0}}); }), ErrorKind::InvalidArgument);
  EXPECT_EQ(kind_of([] { DistributionSpec(std::vector<Marginal>{}); }), ErrorKind::InvalidArgument);
}
