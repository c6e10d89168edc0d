#pragma once

// Data-parallel inner loops. Every kernel has a plain serial reference in
// `serial` and an OpenMP version in `parallel`; the library calls the
// parallel ones, tests and bench/ compare the two.
//
// Parallel reductions are blocked: partial results per fixed-size block of
// kBlock samples are combined in block order, so results do not depend on
// the thread count or schedule.

#include <cstdint>
#include <span>

#include "mdts/dataset.hpp"

namespace mdts::kernels {

inline constexpr std::size_t kBlock = 256;

namespace serial {

// Sum over samples of -log SoftmaxT(logits_i, T)[labels_i]. logits is
// row-major n x num_classes.
double NllSum(std::span<const double> logits, int num_classes, std::span<const int> labels,
              double temperature);

// out[i] = Confidence(logits_i, temperatures[i]); a single temperature
// applies to all rows.
void Confidences(std::span<const double> logits, int num_classes,
                 std::span<const double> temperatures, std::span<double> out);

// values is row-major G x n (values[g*n + i] = h_g(x_i)); thresholds has R
// entries. out[(g*G + h)*R + r] = #{i : |values[g,i] - values[h,i]| > thresholds[r]}.
void PairThresholdCounts(std::span<const double> values, std::size_t num_hypotheses,
                         std::span<const double> thresholds, std::span<std::int64_t> out);

// out(i, j) = exp(-gamma * ||a_i - b_j||^2).
void RbfGram(const RowMatrix& a, const RowMatrix& b, double gamma, RowMatrix& out);

}  // namespace serial

namespace parallel {

double NllSum(std::span<const double> logits, int num_classes, std::span<const int> labels,
              double temperature);
void Confidences(std::span<const double> logits, int num_classes,
                 std::span<const double> temperatures, std::span<double> out);
void PairThresholdCounts(std::span<const double> values, std::size_t num_hypotheses,
                         std::span<const double> thresholds, std::span<std::int64_t> out);
void RbfGram(const RowMatrix& a, const RowMatrix& b, double gamma, RowMatrix& out);

}  // namespace parallel

}  // namespace mdts::kernels
