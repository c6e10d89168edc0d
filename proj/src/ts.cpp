#include "mdts/ts.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mdts/error.hpp"
#include "mdts/kernels.hpp"

namespace mdts {

namespace {

std::span<const double> Flat(const RowMatrix& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}

// Samples sorted by (label, logits) so that the objective, and therefore the
// fitted temperature, is bit-identical under any permutation of the input.
struct CanonicalSamples {
  RowMatrix logits;
  std::vector<int> labels;

  explicit CanonicalSamples(const DomainDataset& d) {
    const std::size_t n = d.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (d.labels[a] != d.labels[b]) return d.labels[a] < d.labels[b];
      const auto ra = d.logits_row(a);
      const auto rb = d.logits_row(b);
      return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
    });
    logits.resize(d.logits.rows(), d.logits.cols());
    labels.resize(n);
    for (std::size_t r = 0; r < n; ++r) {
      logits.row(static_cast<Eigen::Index>(r)) = d.logits.row(static_cast<Eigen::Index>(order[r]));
      labels[r] = d.labels[order[r]];
    }
  }

  double Objective(double temperature) const {
    return kernels::parallel::NllSum(Flat(logits), static_cast<int>(logits.cols()), labels,
                                     temperature);
  }
};

}  // namespace

double Nll(const DomainDataset& dataset, double temperature) {
  CheckTemperature(temperature);
  if (dataset.size() == 0) throw Error(ErrorCode::kEmptyDataset, "nll on '" + dataset.id + "'");
  return kernels::parallel::NllSum(Flat(dataset.logits), dataset.num_classes(), dataset.labels,
                                   temperature);
}

TemperatureModel FitTs(const DomainDataset& dataset, const TsOptions& options) {
  if (dataset.size() == 0) throw Error(ErrorCode::kEmptyDataset, "fit_ts on '" + dataset.id + "'");
  if (!(options.t_min > 0.0) || !(options.t_min < options.t_max) || !std::isfinite(options.t_max) ||
      !(options.tol > 0.0)) {
    throw Error(ErrorCode::kInvalidBounds, "need 0 < t_min < t_max and tol > 0");
  }
  const CanonicalSamples samples(dataset);
  const auto f = [&](double log_t) { return samples.Objective(std::exp(log_t)); };

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = std::log(options.t_min);
  double hi = std::log(options.t_max);
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = f(x1);
  double f2 = f(x2);
  int iter = 0;
  while (hi - lo > options.tol && iter < options.max_iter) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = f(x2);
    }
    ++iter;
  }

  TemperatureModel model;
  model.t_min = options.t_min;
  model.t_max = options.t_max;
  model.converged = hi - lo <= options.tol;

  double best_t = std::clamp(std::exp(0.5 * (lo + hi)), options.t_min, options.t_max);
  double best_f = samples.Objective(best_t);
  for (double edge : {options.t_min, options.t_max}) {
    const double fe = samples.Objective(edge);
    if (fe < best_f) {
      best_f = fe;
      best_t = edge;
    }
  }
  model.temperature = best_t;
  model.nll_at_t = best_f;
  return model;
}

Prediction Apply(const TemperatureModel& model, std::span<const double> logits) {
  return {Predict(logits), Confidence(logits, model.temperature)};
}

}  // namespace mdts
