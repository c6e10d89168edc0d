#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mdts/dataset.hpp"
#include "mdts/probcore.hpp"

namespace mdts {

struct BinStats {
  int index = 1;  // 1-based
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
  double accuracy = 0.0;
  double mean_confidence = 0.0;
};

struct EceReport {
  double ece = 0.0;
  std::vector<BinStats> bins;
  std::size_t n = 0;
  int num_bins = 0;
  double mean_conf = 0.0;
  double mean_acc = 0.0;
};

// 1-based bin m with (m-1)/M < c <= m/M; c <= 0 goes to bin 1 and c > 1 to
// bin M.
int BinIndex(double confidence, int num_bins);

// Top-label ECE over equal-width bins. correct[i] is nonzero when sample i
// was classified correctly.
EceReport Ece(std::span<const double> confidences, std::span<const std::uint8_t> correct,
              int num_bins);

// Sum of (count/n) * |accuracy - mean_confidence| over the emitted bins.
double EceFromBins(std::span<const BinStats> bins, std::size_t n);

using DomainReports = std::vector<std::pair<std::string, EceReport>>;

// Unweighted mean of per-domain ECE.
double Mdece(const DomainReports& reports);

struct MultiDomainReport {
  DomainReports per_domain;
  double mdece = 0.0;
  EceReport pooled;
};

// Maps sample `row` of `domain` to a prediction.
using Calibrator = std::function<Prediction(const DomainDataset& domain, std::size_t row)>;

MultiDomainReport Evaluate(const Calibrator& calibrator, const MultiDomainDataset& dataset,
                           int num_bins);

// Same, from precomputed predictions (one vector per domain, aligned rows).
MultiDomainReport EvaluatePredictions(const MultiDomainDataset& dataset,
                                      const std::vector<std::vector<Prediction>>& predictions,
                                      int num_bins);

// Mean over domains of |mean_conf - mean_acc|.
double AccuracyPredictionMae(const DomainReports& per_domain);

struct ReliabilityRow {
  int bin = 1;
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
  double accuracy = 0.0;
  double confidence = 0.0;
};

std::vector<ReliabilityRow> ReliabilityTable(const EceReport& report);

// CSV with header bin,lo,hi,count,accuracy,confidence.
std::string ReliabilityCsv(const EceReport& report);

}  // namespace mdts
