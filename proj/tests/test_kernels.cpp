#include <gtest/gtest.h>

#include <omp.h>

#include "fixtures.hpp"
#include "mdts/kernels.hpp"
#include "mdts/probcore.hpp"

using namespace mdts;
namespace ks = mdts::kernels::serial;
namespace kp = mdts::kernels::parallel;

namespace {

struct ThreadGuard {
  int saved = omp_get_max_threads();
  ~ThreadGuard() { omp_set_num_threads(saved); }
};

std::span<const double> Flat(const RowMatrix& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }

}  // namespace

TEST(Kernels, NllSumParallelMatchesSerial) {
  Rng rng(1);
  for (std::size_t n : {1u, 255u, 256u, 257u, 3000u}) {
    const auto d = fixtures::RandomDomain(rng, "d", n, 7, 1);
    for (double t : {0.3, 1.0, 4.0}) {
      const double s = ks::NllSum(Flat(d.logits), 7, d.labels, t);
      const double p = kp::NllSum(Flat(d.logits), 7, d.labels, t);
      EXPECT_NEAR(p, s, 1e-12 * std::abs(s));
    }
  }
}

TEST(Kernels, NllSumIndependentOfThreadCount) {
  ThreadGuard guard;
  Rng rng(2);
  const auto d = fixtures::RandomDomain(rng, "d", 5000, 10, 1);
  omp_set_num_threads(1);
  const double one = kp::NllSum(Flat(d.logits), 10, d.labels, 1.7);
  for (int threads : {2, 3, 8}) {
    omp_set_num_threads(threads);
    EXPECT_EQ(kp::NllSum(Flat(d.logits), 10, d.labels, 1.7), one);
  }
}

TEST(Kernels, ConfidencesMatchSerialExactly) {
  Rng rng(3);
  const auto d = fixtures::RandomDomain(rng, "d", 1000, 5, 1);
  std::vector<double> temps(1000);
  for (auto& t : temps) t = std::exp(rng.uniform(-1, 1));
  std::vector<double> s(1000), p(1000);
  ks::Confidences(Flat(d.logits), 5, temps, s);
  kp::Confidences(Flat(d.logits), 5, temps, p);
  EXPECT_EQ(s, p);
  for (std::size_t i = 0; i < 1000; ++i) EXPECT_EQ(p[i], Confidence(d.logits_row(i), temps[i]));
  const std::vector<double> single{0.8};
  ks::Confidences(Flat(d.logits), 5, single, s);
  kp::Confidences(Flat(d.logits), 5, single, p);
  EXPECT_EQ(s, p);
  EXPECT_EQ(p[17], Confidence(d.logits_row(17), 0.8));
}

TEST(Kernels, PairThresholdCountsMatchBruteForce) {
  Rng rng(4);
  const std::size_t g = 4, n = 300;
  std::vector<double> values(g * n);
  for (auto& v : values) v = rng.uniform01();
  values[5] = values[n + 5] + 0.25;  // exact threshold hit
  const std::vector<double> thresholds{0.0, 0.1, 0.25, 0.5, 1.0};
  const std::size_t r = thresholds.size();
  std::vector<std::int64_t> s(g * g * r), p(g * g * r);
  ks::PairThresholdCounts(values, g, thresholds, s);
  kp::PairThresholdCounts(values, g, thresholds, p);
  EXPECT_EQ(s, p);
  for (std::size_t a = 0; a < g; ++a) {
    for (std::size_t b = 0; b < g; ++b) {
      for (std::size_t t = 0; t < r; ++t) {
        std::int64_t count = 0;
        for (std::size_t i = 0; i < n; ++i) count += std::abs(values[a * n + i] - values[b * n + i]) > thresholds[t];
        EXPECT_EQ(s[(a * g + b) * r + t], count);
      }
    }
  }
}

TEST(Kernels, RbfGramMatchesSerial) {
  Rng rng(5);
  const auto a = fixtures::RandomDomain(rng, "a", 60, 2, 3).embeddings;
  const auto b = fixtures::RandomDomain(rng, "b", 45, 2, 3).embeddings;
  RowMatrix s, p;
  ks::RbfGram(a, b, 0.7, s);
  kp::RbfGram(a, b, 0.7, p);
  ASSERT_EQ(s.rows(), 60);
  ASSERT_EQ(s.cols(), 45);
  EXPECT_EQ(s, p);
  EXPECT_NEAR(s(3, 4), std::exp(-0.7 * (a.row(3) - b.row(4)).squaredNorm()), 1e-15);
}
