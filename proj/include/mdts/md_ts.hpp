#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mdts/dataset.hpp"
#include "mdts/probcore.hpp"
#include "mdts/regress.hpp"
#include "mdts/ts.hpp"

namespace mdts {

struct TemperatureClamp {
  double lo = 0.05;
  double hi = 50.0;
};

struct MdtsOptions {
  TemperatureClamp clamp;
  // Give every calibration domain total weight 1 in the regression
  // (linear regressors only). Off: every sample counts once.
  bool domain_reweighting = false;
  double ts_tol = 1e-6;
  std::size_t krr_max_support = 1000;
};

// Multi-domain temperature scaling: per-domain temperatures learned by TS,
// an embedding -> temperature regressor fitted on (Psi(x), T_k) pairs, and
// a clamp on the predicted temperature. Inference never sees the domain id.
class MdtsModel {
 public:
  MdtsModel(std::vector<std::pair<std::string, double>> per_domain_t, FittedRegressor regressor,
            TemperatureClamp clamp, int num_classes, int embedding_dim);

  double PredictTemperature(std::span<const double> embedding) const;
  Prediction Calibrate(std::span<const double> logits, std::span<const double> embedding) const;

  // Temperatures and predictions for every row of a domain.
  std::vector<double> PredictTemperatures(const DomainDataset& domain) const;
  std::vector<Prediction> CalibrateDomain(const DomainDataset& domain) const;

  const std::vector<std::pair<std::string, double>>& per_domain_t() const { return per_domain_t_; }
  const FittedRegressor& regressor() const { return regressor_; }
  TemperatureClamp clamp() const { return clamp_; }
  int num_classes() const { return num_classes_; }
  int embedding_dim() const { return embedding_dim_; }

 private:
  std::vector<std::pair<std::string, double>> per_domain_t_;
  FittedRegressor regressor_;
  TemperatureClamp clamp_;
  int num_classes_;
  int embedding_dim_;
};

// Step 1: FitTs per domain (independent, may run concurrently).
std::vector<TemperatureModel> FitPerDomainTs(const MultiDomainDataset& calibration,
                                             const TsOptions& options);

// Steps 1-2; the regression rows are every calibration sample labelled with
// its domain's temperature.
MdtsModel FitMdts(const MultiDomainDataset& calibration, const RegressorSpec& spec,
                  const MdtsOptions& options = {});

// Same, reusing temperatures that were already fitted (aligned with
// calibration.domains).
MdtsModel FitMdtsWithTemperatures(const MultiDomainDataset& calibration,
                                  std::span<const double> per_domain_t, const RegressorSpec& spec,
                                  const MdtsOptions& options = {});

}  // namespace mdts
