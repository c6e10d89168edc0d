#include "mdts/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "mdts/error.hpp"
#include "mdts/fileio.hpp"

namespace mdts {

int BinIndex(double confidence, int num_bins) {
  const double m_real = std::ceil(confidence * num_bins);
  int m = m_real < 1.0 ? 1 : (m_real > num_bins ? num_bins : static_cast<int>(m_real));
  // c * M can round across an edge; settle against the edges as doubles.
  while (m > 1 && confidence <= static_cast<double>(m - 1) / num_bins) --m;
  while (m < num_bins && confidence > static_cast<double>(m) / num_bins) ++m;
  return m;
}

EceReport Ece(std::span<const double> confidences, std::span<const std::uint8_t> correct,
              int num_bins) {
  if (num_bins < 1) throw Error(ErrorCode::kInvalidBinCount, std::to_string(num_bins));
  if (confidences.empty()) throw Error(ErrorCode::kEmptyInput, "ece of zero samples");
  if (confidences.size() != correct.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "confidences and correctness differ in length");
  }
  const std::size_t n = confidences.size();
  std::vector<double> conf_sum(static_cast<std::size_t>(num_bins), 0.0);
  std::vector<std::size_t> hits(static_cast<std::size_t>(num_bins), 0);
  std::vector<std::size_t> count(static_cast<std::size_t>(num_bins), 0);
  double total_conf = 0.0;
  std::size_t total_hits = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double c = confidences[i];
    if (!(c >= 0.0 && c <= 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, "confidence " + std::to_string(c) + " outside [0,1]");
    }
    const auto b = static_cast<std::size_t>(BinIndex(c, num_bins) - 1);
    conf_sum[b] += c;
    ++count[b];
    const bool ok = correct[i] != 0;
    hits[b] += ok;
    total_conf += c;
    total_hits += ok;
  }
  EceReport report;
  report.n = n;
  report.num_bins = num_bins;
  report.mean_conf = total_conf / static_cast<double>(n);
  report.mean_acc = static_cast<double>(total_hits) / static_cast<double>(n);
  report.bins.reserve(static_cast<std::size_t>(num_bins));
  for (int m = 1; m <= num_bins; ++m) {
    const auto b = static_cast<std::size_t>(m - 1);
    BinStats s;
    s.index = m;
    s.lo = static_cast<double>(m - 1) / num_bins;
    s.hi = static_cast<double>(m) / num_bins;
    s.count = count[b];
    if (count[b] > 0) {
      s.accuracy = static_cast<double>(hits[b]) / static_cast<double>(count[b]);
      s.mean_confidence = conf_sum[b] / static_cast<double>(count[b]);
    }
    report.bins.push_back(s);
  }
  report.ece = EceFromBins(report.bins, n);
  return report;
}

double EceFromBins(std::span<const BinStats> bins, std::size_t n) {
  double ece = 0.0;
  for (const auto& b : bins) {
    if (b.count == 0) continue;
    ece += static_cast<double>(b.count) / static_cast<double>(n) *
           std::fabs(b.accuracy - b.mean_confidence);
  }
  return ece;
}

double Mdece(const DomainReports& reports) {
  if (reports.empty()) throw Error(ErrorCode::kEmptyInput, "mdece over zero domains");
  double total = 0.0;
  for (const auto& [id, r] : reports) total += r.ece;
  return total / static_cast<double>(reports.size());
}

MultiDomainReport EvaluatePredictions(const MultiDomainDataset& dataset,
                                      const std::vector<std::vector<Prediction>>& predictions,
                                      int num_bins) {
  if (dataset.domains.empty()) throw Error(ErrorCode::kEmptyInput, "evaluate on zero domains");
  if (predictions.size() != dataset.domains.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "one prediction vector per domain required");
  }
  MultiDomainReport out;
  std::vector<double> all_conf;
  std::vector<std::uint8_t> all_correct;
  for (std::size_t k = 0; k < dataset.domains.size(); ++k) {
    const auto& d = dataset.domains[k];
    const auto& preds = predictions[k];
    if (preds.size() != d.size()) {
      throw Error(ErrorCode::kDimensionMismatch, "domain '" + d.id + "': prediction count");
    }
    std::vector<double> conf(d.size());
    std::vector<std::uint8_t> correct(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
      conf[i] = preds[i].confidence;
      correct[i] = preds[i].label == d.labels[i];
    }
    out.per_domain.emplace_back(d.id, Ece(conf, correct, num_bins));
    all_conf.insert(all_conf.end(), conf.begin(), conf.end());
    all_correct.insert(all_correct.end(), correct.begin(), correct.end());
  }
  out.mdece = Mdece(out.per_domain);
  out.pooled = Ece(all_conf, all_correct, num_bins);
  return out;
}

MultiDomainReport Evaluate(const Calibrator& calibrator, const MultiDomainDataset& dataset,
                           int num_bins) {
  std::vector<std::vector<Prediction>> predictions;
  predictions.reserve(dataset.domains.size());
  for (const auto& d : dataset.domains) {
    auto& preds = predictions.emplace_back();
    preds.reserve(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
      try {
        preds.push_back(calibrator(d, i));
      } catch (const Error& e) {
        throw Error(e.code(), "domain '" + d.id + "' row " + std::to_string(i) + ": " + e.detail());
      }
    }
  }
  return EvaluatePredictions(dataset, predictions, num_bins);
}

double AccuracyPredictionMae(const DomainReports& per_domain) {
  if (per_domain.empty()) throw Error(ErrorCode::kEmptyInput, "mae over zero domains");
  double total = 0.0;
  for (const auto& [id, r] : per_domain) total += std::fabs(r.mean_conf - r.mean_acc);
  return total / static_cast<double>(per_domain.size());
}

std::vector<ReliabilityRow> ReliabilityTable(const EceReport& report) {
  std::vector<ReliabilityRow> rows;
  rows.reserve(report.bins.size());
  for (const auto& b : report.bins) {
    rows.push_back({b.index, b.lo, b.hi, b.count, b.accuracy, b.mean_confidence});
  }
  return rows;
}

std::string ReliabilityCsv(const EceReport& report) {
  std::string out = "bin,lo,hi,count,accuracy,confidence\n";
  for (const auto& r : ReliabilityTable(report)) {
    out += std::to_string(r.bin) + ',' + FormatDouble(r.lo) + ',' + FormatDouble(r.hi) + ',' +
           std::to_string(r.count) + ',' + FormatDouble(r.accuracy) + ',' +
           FormatDouble(r.confidence) + '\n';
  }
  return out;
}

}  // namespace mdts
