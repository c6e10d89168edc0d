#pragma once

#include <string>
#include <vector>

#include "mdts/dataset.hpp"
#include "mdts/md_ts.hpp"
#include "mdts/regress.hpp"
#include "mdts/serialize.hpp"

namespace mdts {

enum class Method { kTs, kMdts, kHistBin, kIsotonic };

const char* ToString(Method method);
Method ParseMethod(const std::string& name);

struct FitRequest {
  Method method = Method::kMdts;
  RegressorKind regressor = RegressorKind::kOls;
  bool intercept = true;
  bool grid_search = false;
  TemperatureClamp clamp;
  int bins = 20;
};

struct FitOutcome {
  CalibrationModel model;
  // Per-domain TS temperatures (mdts only), aligned with calibration.domains.
  std::vector<double> per_domain_t;
  // Grid-search scores (LODO MDECE), aligned with DefaultGrid.
  std::vector<double> grid_scores;
};

// Regressor with its default hyperparameters.
RegressorSpec DefaultSpec(RegressorKind kind, bool intercept = true);

// ts, histbin and isotonic fit on the pooled calibration set.
FitOutcome FitCalibration(const MultiDomainDataset& calibration, const FitRequest& request);

// Same as FitCalibration for mdts, with the per-domain temperatures supplied.
FitOutcome FitMdtsRequest(const MultiDomainDataset& calibration, std::span<const double> per_domain_t,
                          const FitRequest& request);

}  // namespace mdts
