#include "mdts/pipeline.hpp"

#include "mdts/baselines.hpp"
#include "mdts/error.hpp"
#include "mdts/ts.hpp"

namespace mdts {

const char* ToString(Method method) {
  switch (method) {
    case Method::kTs:
      return "ts";
    case Method::kMdts:
      return "mdts";
    case Method::kHistBin:
      return "histbin";
    case Method::kIsotonic:
      return "isotonic";
  }
  return "?";
}

Method ParseMethod(const std::string& name) {
  for (Method m : {Method::kTs, Method::kMdts, Method::kHistBin, Method::kIsotonic}) {
    if (name == ToString(m)) return m;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown method '" + name + "'");
}

RegressorSpec DefaultSpec(RegressorKind kind, bool intercept) {
  switch (kind) {
    case RegressorKind::kOls:
      return {OlsParams{}, intercept};
    case RegressorKind::kRidge:
      return {RidgeParams{}, intercept};
    case RegressorKind::kHuber:
      return {HuberParams{}, intercept};
    case RegressorKind::kKrr:
      return {KrrParams{}, intercept};
    case RegressorKind::kKnn:
      return {KnnParams{}, intercept};
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown regressor");
}

FitOutcome FitMdtsRequest(const MultiDomainDataset& calibration, std::span<const double> per_domain_t,
                          const FitRequest& request) {
  MdtsOptions opts;
  opts.clamp = request.clamp;
  RegressorSpec spec = DefaultSpec(request.regressor, request.intercept);
  FitOutcome out;
  if (request.grid_search) {
    const auto grid = DefaultGrid(request.regressor, request.intercept);
    SelectionOptions sel;
    sel.bins = request.bins;
    sel.t_min = request.clamp.lo;
    sel.t_max = request.clamp.hi;
    sel.krr_max_support = opts.krr_max_support;
    auto selected = SelectHyperparams(grid, calibration, per_domain_t, sel);
    spec = selected.best;
    out.grid_scores = std::move(selected.scores);
  }
  out.model = FitMdtsWithTemperatures(calibration, per_domain_t, spec, opts);
  out.per_domain_t.assign(per_domain_t.begin(), per_domain_t.end());
  return out;
}

FitOutcome FitCalibration(const MultiDomainDataset& calibration, const FitRequest& request) {
  if (request.clamp.lo <= 0.0 || !(request.clamp.lo < request.clamp.hi)) {
    throw Error(ErrorCode::kInvalidBounds, "clamp must satisfy 0 < lo < hi");
  }
  switch (request.method) {
    case Method::kTs: {
      TsOptions ts;
      ts.t_min = request.clamp.lo;
      ts.t_max = request.clamp.hi;
      return {FitTs(Pool(calibration), ts), {}, {}};
    }
    case Method::kHistBin:
      return {FitHistogramBinning(Pool(calibration), request.bins), {}, {}};
    case Method::kIsotonic:
      return {FitIsotonic(Pool(calibration)), {}, {}};
    case Method::kMdts:
      break;
  }
  TsOptions ts;
  ts.t_min = request.clamp.lo;
  ts.t_max = request.clamp.hi;
  std::vector<double> temps;
  for (const auto& m : FitPerDomainTs(calibration, ts)) temps.push_back(m.temperature);
  return FitMdtsRequest(calibration, temps, request);
}

}  // namespace mdts
