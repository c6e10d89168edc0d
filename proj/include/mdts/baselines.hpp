#pragma once

#include <span>
#include <vector>

#include "mdts/dataset.hpp"
#include "mdts/probcore.hpp"

namespace mdts {

// Histogram binning of the MSP confidence: each equal-width bin maps to the
// empirical accuracy of its training samples.
struct HistogramBinningModel {
  int num_bins = 0;
  std::vector<double> bin_accuracy;
  double fallback = 0.0;  // global accuracy, used for bins that saw no data

  double Map(double msp_confidence) const;
};

// Pool-adjacent-violators fit of correctness against MSP confidence.
// Stepwise constant: a query takes the value of the largest breakpoint not
// above it, and the first value below the first breakpoint.
struct IsotonicModel {
  std::vector<double> breakpoints;
  std::vector<double> values;

  double Map(double msp_confidence) const;
};

HistogramBinningModel FitHistogramBinning(const DomainDataset& dataset, int num_bins);
IsotonicModel FitIsotonic(const DomainDataset& dataset);

// Lower-level fit on (confidence, correct) pairs; weights all 1.
IsotonicModel FitIsotonic(std::span<const double> confidences, std::span<const std::uint8_t> correct);

Prediction ApplyBaseline(const HistogramBinningModel& model, std::span<const double> logits);
Prediction ApplyBaseline(const IsotonicModel& model, std::span<const double> logits);

}  // namespace mdts
