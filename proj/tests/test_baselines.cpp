#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "mdts/baselines.hpp"
#include "mdts/error.hpp"
#include "mdts/metrics.hpp"
#include "oracles.hpp"

using namespace mdts;

namespace {

// Four-class samples with MSP confidence conf[i] on class 0.
DomainDataset ByConfidence(const std::vector<double>& conf, const std::vector<int>& correct) {
  std::vector<std::vector<double>> logits;
  std::vector<int> labels;
  for (std::size_t i = 0; i < conf.size(); ++i) {
    logits.push_back(fixtures::LogitsForConfidence(conf[i], 4));
    labels.push_back(correct[i] ? 0 : 1);
  }
  return fixtures::MakeDomain("hand", logits, labels);
}

}  // namespace

TEST(HistBin, HandExample) {
  const auto m = FitHistogramBinning(ByConfidence({0.3, 0.4, 0.6, 0.8}, {1, 0, 1, 0}), 2);
  EXPECT_EQ(m.bin_accuracy, (std::vector<double>{0.5, 0.5}));
  EXPECT_EQ(m.fallback, 0.5);
}

TEST(HistBin, EmptyBinsUseGlobalAccuracy) {
  const auto m = FitHistogramBinning(ByConfidence({0.61, 0.62, 0.63, 0.64, 0.65}, {1, 1, 1, 0, 0}), 10);
  EXPECT_DOUBLE_EQ(m.bin_accuracy[6], 0.6);
  for (int b : {0, 1, 5, 9}) EXPECT_DOUBLE_EQ(m.bin_accuracy[b], 0.6);
}

TEST(HistBin, LookupKeepsLabel) {
  HistogramBinningModel m{10, std::vector<double>(10, 0.1), 0.1};
  m.bin_accuracy[9] = 0.7;
  const auto z = fixtures::LogitsForConfidence(0.95, 4);
  const auto p = ApplyBaseline(m, z);
  EXPECT_EQ(p.confidence, 0.7);
  EXPECT_EQ(p.label, 0);
}

TEST(HistBin, Errors) {
  DomainDataset empty;
  EXPECT_THROW(FitHistogramBinning(empty, 5), Error);
  EXPECT_THROW(FitHistogramBinning(ByConfidence({0.5}, {1}), 0), Error);
}

TEST(Isotonic, TwoSamplePooling) {
  const auto m = FitIsotonic(ByConfidence({0.9, 0.4}, {0, 1}));
  ASSERT_EQ(m.breakpoints.size(), 2u);
  EXPECT_NEAR(m.breakpoints[0], 0.4, 1e-12);
  EXPECT_DOUBLE_EQ(m.values[0], 0.5);
  EXPECT_DOUBLE_EQ(m.values[1], 0.5);
  EXPECT_DOUBLE_EQ(m.Map(0.1), 0.5);
  EXPECT_DOUBLE_EQ(m.Map(0.99), 0.5);
}

TEST(Isotonic, MonotoneInputInterpolated) {
  const std::vector<double> c{0.3, 0.5, 0.7, 0.9};
  const std::vector<std::uint8_t> y{0, 0, 1, 1};
  const auto m = FitIsotonic(c, y);
  EXPECT_EQ(m.values, (std::vector<double>{0.0, 0.0, 1.0, 1.0}));
  EXPECT_EQ(m.breakpoints, c);
  EXPECT_EQ(m.Map(0.6), 0.0);
  EXPECT_EQ(m.Map(0.7), 1.0);
}

TEST(Isotonic, BelowFirstBreakpointTakesFirstValue) {
  const std::vector<double> c{0.4, 0.6};
  const std::vector<std::uint8_t> y{0, 1};
  const auto m = FitIsotonic(c, y);
  EXPECT_EQ(m.Map(0.0), 0.0);
  EXPECT_EQ(m.Map(0.2), m.values.front());
}

TEST(Isotonic, TiedConfidencesCollapse) {
  const std::vector<double> c{0.5, 0.5, 0.5, 0.8};
  const std::vector<std::uint8_t> y{1, 0, 0, 1};
  const auto m = FitIsotonic(c, y);
  ASSERT_EQ(m.breakpoints.size(), 2u);
  EXPECT_NEAR(m.values[0], 1.0 / 3.0, 1e-15);
  EXPECT_EQ(m.values[1], 1.0);
}

TEST(Isotonic, MatchesMinMaxOracle) {
  Rng rng(9);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 1 + rng.uniform_int(40);
    std::vector<double> c(n);
    std::vector<std::uint8_t> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      c[i] = static_cast<double>(i + 1) / (n + 1);
      y[i] = rng.uniform01() < c[i];
    }
    const auto m = FitIsotonic(c, y);
    const auto expect = oracle::Isotonic(std::vector<double>(y.begin(), y.end()));
    ASSERT_EQ(m.values.size(), n);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(m.values[i], expect[i], 1e-12);
  }
}
