#include "mdts/baselines.hpp"

#include <algorithm>
#include <numeric>

#include "mdts/error.hpp"
#include "mdts/metrics.hpp"

namespace mdts {

double HistogramBinningModel::Map(double msp_confidence) const {
  return bin_accuracy[static_cast<std::size_t>(BinIndex(msp_confidence, num_bins) - 1)];
}

double IsotonicModel::Map(double msp_confidence) const {
  const auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), msp_confidence);
  if (it == breakpoints.begin()) return values.front();
  return values[static_cast<std::size_t>(it - breakpoints.begin()) - 1];
}

HistogramBinningModel FitHistogramBinning(const DomainDataset& dataset, int num_bins) {
  if (dataset.size() == 0) throw Error(ErrorCode::kEmptyDataset, "histbin on '" + dataset.id + "'");
  if (num_bins < 1) throw Error(ErrorCode::kInvalidBinCount, std::to_string(num_bins));
  std::vector<std::size_t> hits(static_cast<std::size_t>(num_bins), 0);
  std::vector<std::size_t> count(static_cast<std::size_t>(num_bins), 0);
  std::size_t total_hits = 0;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto p = Msp(dataset.logits_row(i));
    const auto b = static_cast<std::size_t>(BinIndex(p.confidence, num_bins) - 1);
    const bool ok = p.label == dataset.labels[i];
    ++count[b];
    hits[b] += ok;
    total_hits += ok;
  }
  HistogramBinningModel model;
  model.num_bins = num_bins;
  model.fallback = static_cast<double>(total_hits) / static_cast<double>(dataset.size());
  model.bin_accuracy.resize(static_cast<std::size_t>(num_bins));
  for (std::size_t b = 0; b < count.size(); ++b) {
    model.bin_accuracy[b] = count[b] > 0 ? static_cast<double>(hits[b]) / static_cast<double>(count[b])
                                         : model.fallback;
  }
  return model;
}

IsotonicModel FitIsotonic(std::span<const double> confidences, std::span<const std::uint8_t> correct) {
  if (confidences.empty()) throw Error(ErrorCode::kEmptyDataset, "isotonic fit on zero samples");
  if (confidences.size() != correct.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "confidences and correctness differ in length");
  }
  std::vector<std::size_t> order(confidences.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return confidences[a] < confidences[b]; });

  // Collapse equal confidences into weighted points first so breakpoints are
  // strictly increasing.
  struct Block {
    double x;      // first confidence in the block
    double sum;    // weighted sum of correctness
    double weight;
    std::size_t points;  // distinct confidences covered
  };
  std::vector<double> xs;
  std::vector<double> ys;
  std::vector<double> ws;
  for (std::size_t idx : order) {
    const double c = confidences[idx];
    const double y = correct[idx] ? 1.0 : 0.0;
    if (!xs.empty() && xs.back() == c) {
      ys.back() += y;
      ws.back() += 1.0;
    } else {
      xs.push_back(c);
      ys.push_back(y);
      ws.push_back(1.0);
    }
  }
  std::vector<Block> stack;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    stack.push_back({xs[i], ys[i], ws[i], 1});
    while (stack.size() > 1) {
      const Block& top = stack.back();
      const Block& below = stack[stack.size() - 2];
      if (below.sum / below.weight <= top.sum / top.weight) break;
      Block merged{below.x, below.sum + top.sum, below.weight + top.weight, below.points + top.points};
      stack.pop_back();
      stack.back() = merged;
    }
  }
  IsotonicModel model;
  model.breakpoints = xs;
  model.values.reserve(xs.size());
  for (const auto& b : stack) model.values.insert(model.values.end(), b.points, b.sum / b.weight);
  return model;
}

IsotonicModel FitIsotonic(const DomainDataset& dataset) {
  if (dataset.size() == 0) throw Error(ErrorCode::kEmptyDataset, "isotonic on '" + dataset.id + "'");
  std::vector<double> conf(dataset.size());
  std::vector<std::uint8_t> correct(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto p = Msp(dataset.logits_row(i));
    conf[i] = p.confidence;
    correct[i] = p.label == dataset.labels[i];
  }
  return FitIsotonic(conf, correct);
}

Prediction ApplyBaseline(const HistogramBinningModel& model, std::span<const double> logits) {
  const auto p = Msp(logits);
  return {p.label, model.Map(p.confidence)};
}

Prediction ApplyBaseline(const IsotonicModel& model, std::span<const double> logits) {
  const auto p = Msp(logits);
  return {p.label, model.Map(p.confidence)};
}

}  // namespace mdts
