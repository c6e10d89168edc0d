#pragma once

#include <span>

#include "mdts/dataset.hpp"
#include "mdts/probcore.hpp"

namespace mdts {

struct TemperatureModel {
  double temperature = 1.0;
  double t_min = 0.05;
  double t_max = 50.0;
  double nll_at_t = 0.0;
  bool converged = true;
};

struct TsOptions {
  double t_min = 0.05;
  double t_max = 50.0;
  // Bracket width in log-temperature at which the search stops.
  double tol = 1e-6;
  int max_iter = 200;
};

// Summed negative log-likelihood of the labels under SoftmaxT(logits, T).
double Nll(const DomainDataset& dataset, double temperature);

// Golden-section search over log T on [t_min, t_max]. The final answer is
// the best of the bracket midpoint and the two interval ends, so degenerate
// data (all right / all wrong) lands exactly on a bound.
TemperatureModel FitTs(const DomainDataset& dataset, const TsOptions& options = {});

Prediction Apply(const TemperatureModel& model, std::span<const double> logits);

}  // namespace mdts
