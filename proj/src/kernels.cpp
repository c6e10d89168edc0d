#include "mdts/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "mdts/error.hpp"
#include "mdts/probcore.hpp"

namespace mdts::kernels {

namespace {

void CheckShape(std::span<const double> logits, int num_classes, std::size_t n) {
  if (num_classes < 1 || logits.size() != n * static_cast<std::size_t>(num_classes)) {
    throw Error(ErrorCode::kDimensionMismatch, "logit buffer does not match n x J");
  }
}

inline double SampleNll(const double* z, int num_classes, int label, double inv_t) {
  int top = 0;
  for (int j = 1; j < num_classes; ++j) {
    if (z[j] > z[top]) top = j;
  }
  const double m = z[top];
  // The top term is exactly 1; log1p keeps tiny tails from vanishing.
  double rest = 0.0;
  for (int j = 0; j < num_classes; ++j) {
    if (j != top) rest += std::exp((z[j] - m) * inv_t);
  }
  return std::log1p(rest) + (m - z[label]) * inv_t;
}

inline double SampleConfidence(const double* z, int num_classes, double inv_t) {
  double m = z[0];
  for (int j = 1; j < num_classes; ++j) m = std::max(m, z[j]);
  double total = 0.0;
  for (int j = 0; j < num_classes; ++j) total += std::exp((z[j] - m) * inv_t);
  return 1.0 / total;
}

void CheckTemperatures(std::span<const double> temperatures, std::size_t n) {
  if (temperatures.size() != 1 && temperatures.size() != n) {
    throw Error(ErrorCode::kDimensionMismatch, "need one temperature or one per sample");
  }
  for (double t : temperatures) CheckTemperature(t);
}

// Bucket b(d) = number of thresholds strictly below d, so sample i lies in
// the set {|h - h'| > t_r} exactly for r < b. thresholds must be sorted.
inline std::size_t Bucket(double d, std::span<const double> thresholds) {
  return static_cast<std::size_t>(std::lower_bound(thresholds.begin(), thresholds.end(), d) -
                                  thresholds.begin());
}

void PairCounts(std::span<const double> values, std::size_t n,
                std::size_t g, std::size_t h, std::span<const double> thresholds,
                std::int64_t* out) {
  const std::size_t r_count = thresholds.size();
  std::vector<std::int64_t> hist(r_count + 1, 0);
  const double* vg = values.data() + g * n;
  const double* vh = values.data() + h * n;
  for (std::size_t i = 0; i < n; ++i) ++hist[Bucket(std::fabs(vg[i] - vh[i]), thresholds)];
  // count(r) = #{b > r} = suffix sum of hist over b in (r, R].
  std::int64_t above = 0;
  for (std::size_t r = r_count; r-- > 0;) {
    above += hist[r + 1];
    out[r] = above;
  }
}

void CheckPairArgs(std::span<const double> values, std::size_t num_hypotheses,
                   std::span<const double> thresholds, std::span<std::int64_t> out) {
  if (num_hypotheses == 0 || values.size() % num_hypotheses != 0) {
    throw Error(ErrorCode::kDimensionMismatch, "hypothesis value buffer");
  }
  if (out.size() != num_hypotheses * num_hypotheses * thresholds.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "pair count buffer");
  }
  if (!std::is_sorted(thresholds.begin(), thresholds.end())) {
    throw Error(ErrorCode::kInvalidArgument, "thresholds must be sorted");
  }
}

void CheckGram(const RowMatrix& a, const RowMatrix& b, RowMatrix& out) {
  if (a.cols() != b.cols()) throw Error(ErrorCode::kDimensionMismatch, "gram operand widths");
  out.resize(a.rows(), b.rows());
}

inline double RbfEntry(const RowMatrix& a, Eigen::Index i, const RowMatrix& b, Eigen::Index j,
                       double gamma) {
  double d2 = 0.0;
  const double* x = a.data() + i * a.cols();
  const double* y = b.data() + j * b.cols();
  for (Eigen::Index c = 0; c < a.cols(); ++c) {
    const double diff = x[c] - y[c];
    d2 += diff * diff;
  }
  return std::exp(-gamma * d2);
}

}  // namespace

namespace serial {

double NllSum(std::span<const double> logits, int num_classes, std::span<const int> labels,
              double temperature) {
  CheckTemperature(temperature);
  const std::size_t n = labels.size();
  CheckShape(logits, num_classes, n);
  const double inv_t = 1.0 / temperature;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    total += SampleNll(logits.data() + i * num_classes, num_classes, labels[i], inv_t);
  }
  return total;
}

void Confidences(std::span<const double> logits, int num_classes,
                 std::span<const double> temperatures, std::span<double> out) {
  const std::size_t n = out.size();
  CheckShape(logits, num_classes, n);
  CheckTemperatures(temperatures, n);
  const bool shared = temperatures.size() == 1;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = shared ? temperatures[0] : temperatures[i];
    out[i] = SampleConfidence(logits.data() + i * num_classes, num_classes, 1.0 / t);
  }
}

void PairThresholdCounts(std::span<const double> values, std::size_t num_hypotheses,
                         std::span<const double> thresholds, std::span<std::int64_t> out) {
  CheckPairArgs(values, num_hypotheses, thresholds, out);
  const std::size_t n = values.size() / num_hypotheses;
  const std::size_t r_count = thresholds.size();
  for (std::size_t g = 0; g < num_hypotheses; ++g) {
    for (std::size_t h = 0; h < num_hypotheses; ++h) {
      PairCounts(values, n, g, h, thresholds,
                 out.data() + (g * num_hypotheses + h) * r_count);
    }
  }
}

void RbfGram(const RowMatrix& a, const RowMatrix& b, double gamma, RowMatrix& out) {
  CheckGram(a, b, out);
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.rows(); ++j) out(i, j) = RbfEntry(a, i, b, j, gamma);
  }
}

}  // namespace serial

namespace parallel {

double NllSum(std::span<const double> logits, int num_classes, std::span<const int> labels,
              double temperature) {
  CheckTemperature(temperature);
  const std::size_t n = labels.size();
  CheckShape(logits, num_classes, n);
  const double inv_t = 1.0 / temperature;
  const std::size_t num_blocks = (n + kBlock - 1) / kBlock;
  std::vector<double> partial(num_blocks, 0.0);
#pragma omp parallel for schedule(static)
  for (std::size_t b = 0; b < num_blocks; ++b) {
    const std::size_t end = std::min(n, (b + 1) * kBlock);
    double acc = 0.0;
    for (std::size_t i = b * kBlock; i < end; ++i) {
      acc += SampleNll(logits.data() + i * num_classes, num_classes, labels[i], inv_t);
    }
    partial[b] = acc;
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

void Confidences(std::span<const double> logits, int num_classes,
                 std::span<const double> temperatures, std::span<double> out) {
  const std::size_t n = out.size();
  CheckShape(logits, num_classes, n);
  CheckTemperatures(temperatures, n);
  const bool shared = temperatures.size() == 1;
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < n; ++i) {
    const double t = shared ? temperatures[0] : temperatures[i];
    out[i] = SampleConfidence(logits.data() + i * num_classes, num_classes, 1.0 / t);
  }
}

void PairThresholdCounts(std::span<const double> values, std::size_t num_hypotheses,
                         std::span<const double> thresholds, std::span<std::int64_t> out) {
  CheckPairArgs(values, num_hypotheses, thresholds, out);
  const std::size_t n = values.size() / num_hypotheses;
  const std::size_t r_count = thresholds.size();
  const std::size_t pairs = num_hypotheses * num_hypotheses;
#pragma omp parallel for schedule(dynamic)
  for (std::size_t p = 0; p < pairs; ++p) {
    const std::size_t g = p / num_hypotheses;
    const std::size_t h = p % num_hypotheses;
    PairCounts(values, n, g, h, thresholds, out.data() + p * r_count);
  }
}

void RbfGram(const RowMatrix& a, const RowMatrix& b, double gamma, RowMatrix& out) {
  CheckGram(a, b, out);
  const Eigen::Index rows = a.rows();
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < b.rows(); ++j) out(i, j) = RbfEntry(a, i, b, j, gamma);
  }
}

}  // namespace parallel

}  // namespace mdts::kernels
