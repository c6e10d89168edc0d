#include "mdts/md_ts.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

#include "mdts/error.hpp"
#include "mdts/kernels.hpp"

namespace mdts {

MdtsModel::MdtsModel(std::vector<std::pair<std::string, double>> per_domain_t,
                     FittedRegressor regressor, TemperatureClamp clamp, int num_classes,
                     int embedding_dim)
    : per_domain_t_(std::move(per_domain_t)),
      regressor_(std::move(regressor)),
      clamp_(clamp),
      num_classes_(num_classes),
      embedding_dim_(embedding_dim) {
  if (!(clamp_.lo > 0.0) || !(clamp_.lo < clamp_.hi) || !std::isfinite(clamp_.hi)) {
    throw Error(ErrorCode::kInvalidBounds, "clamp needs 0 < lo < hi");
  }
  if (regressor_.input_dim() != embedding_dim_) {
    throw Error(ErrorCode::kDimensionMismatch, "regressor input dimension differs from embedding_dim");
  }
  for (const auto& [id, t] : per_domain_t_) {
    if (!(t >= clamp_.lo && t <= clamp_.hi)) {
      throw Error(ErrorCode::kInvalidBounds, "temperature of domain '" + id + "' outside clamp");
    }
  }
}

double MdtsModel::PredictTemperature(std::span<const double> embedding) const {
  const double raw = regressor_.Predict(embedding);
  // NaN cannot come out of a finite model on a finite input; clamp anyway.
  if (std::isnan(raw)) return clamp_.lo;
  return std::clamp(raw, clamp_.lo, clamp_.hi);
}

Prediction MdtsModel::Calibrate(std::span<const double> logits,
                                std::span<const double> embedding) const {
  if (static_cast<int>(logits.size()) != num_classes_) {
    throw Error(ErrorCode::kDimensionMismatch, "logits length " + std::to_string(logits.size()));
  }
  return {Predict(logits), Confidence(logits, PredictTemperature(embedding))};
}

std::vector<double> MdtsModel::PredictTemperatures(const DomainDataset& domain) const {
  if (domain.embedding_dim() != embedding_dim_) {
    throw Error(ErrorCode::kDimensionMismatch, "domain '" + domain.id + "' embedding width");
  }
  std::vector<double> temps(domain.size());
  const auto n = static_cast<std::ptrdiff_t>(domain.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    temps[static_cast<std::size_t>(i)] =
        PredictTemperature(domain.embedding_row(static_cast<std::size_t>(i)));
  }
  return temps;
}

std::vector<Prediction> MdtsModel::CalibrateDomain(const DomainDataset& domain) const {
  if (domain.num_classes() != num_classes_) {
    throw Error(ErrorCode::kDimensionMismatch, "domain '" + domain.id + "' class count");
  }
  const auto temps = PredictTemperatures(domain);
  std::vector<double> conf(domain.size());
  kernels::parallel::Confidences(
      {domain.logits.data(), static_cast<std::size_t>(domain.logits.size())}, num_classes_, temps,
      conf);
  std::vector<Prediction> out(domain.size());
  for (std::size_t i = 0; i < domain.size(); ++i) {
    out[i] = {Predict(domain.logits_row(i)), conf[i]};
  }
  return out;
}

std::vector<TemperatureModel> FitPerDomainTs(const MultiDomainDataset& calibration,
                                             const TsOptions& options) {
  const std::size_t num_domains = calibration.domains.size();
  std::vector<TemperatureModel> fits(num_domains);
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (std::size_t k = 0; k < num_domains; ++k) {
    try {
      const auto& d = calibration.domains[k];
      if (d.size() == 0) throw Error(ErrorCode::kEmptyDataset, "domain '" + d.id + "'");
      fits[k] = FitTs(d, options);
    } catch (...) {
#pragma omp critical(mdts_fit_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return fits;
}

MdtsModel FitMdts(const MultiDomainDataset& calibration, const RegressorSpec& spec,
                  const MdtsOptions& options) {
  if (calibration.domains.empty()) throw Error(ErrorCode::kEmptyInput, "no calibration domains");
  TsOptions ts;
  ts.t_min = options.clamp.lo;
  ts.t_max = options.clamp.hi;
  ts.tol = options.ts_tol;
  const auto fits = FitPerDomainTs(calibration, ts);
  std::vector<double> temps;
  temps.reserve(fits.size());
  for (const auto& f : fits) temps.push_back(f.temperature);
  return FitMdtsWithTemperatures(calibration, temps, spec, options);
}

MdtsModel FitMdtsWithTemperatures(const MultiDomainDataset& calibration,
                                  std::span<const double> per_domain_t, const RegressorSpec& spec,
                                  const MdtsOptions& options) {
  if (calibration.domains.empty()) throw Error(ErrorCode::kEmptyInput, "no calibration domains");
  if (per_domain_t.size() != calibration.domains.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "one temperature per domain required");
  }
  Eigen::Index rows = 0;
  for (const auto& d : calibration.domains) {
    if (d.size() == 0) throw Error(ErrorCode::kEmptyDataset, "domain '" + d.id + "'");
    rows += static_cast<Eigen::Index>(d.size());
  }
  RowMatrix x(rows, calibration.embedding_dim);
  std::vector<double> targets;
  targets.reserve(static_cast<std::size_t>(rows));
  std::vector<std::pair<std::string, double>> named;
  Eigen::Index r = 0;
  for (std::size_t k = 0; k < calibration.domains.size(); ++k) {
    const auto& d = calibration.domains[k];
    const auto n = static_cast<Eigen::Index>(d.size());
    x.middleRows(r, n) = d.embeddings;
    targets.insert(targets.end(), d.size(), per_domain_t[k]);
    named.emplace_back(d.id, per_domain_t[k]);
    r += n;
  }
  RegressorFitOptions fit_opt;
  fit_opt.krr_max_support = options.krr_max_support;
  std::vector<double> weights;
  if (options.domain_reweighting) {
    weights = DomainBalancedWeights(calibration);
    fit_opt.weights = weights;
  }
  auto regressor = Fit(spec, x, targets, fit_opt);
  return MdtsModel(std::move(named), std::move(regressor), options.clamp,
                   calibration.num_classes, calibration.embedding_dim);
}

}  // namespace mdts
