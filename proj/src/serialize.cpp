#include "mdts/serialize.hpp"

#include "mdts/error.hpp"
#include "mdts/fileio.hpp"

namespace mdts {

namespace {

[[noreturn]] void Malformed(const std::string& what) {
  throw Error(ErrorCode::kSchemaViolation, "model: " + what);
}

template <typename T>
T Get(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) Malformed(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception&) {
    Malformed(std::string("field '") + key + "' has the wrong type");
  }
}

Json MatrixToJson(const RowMatrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

RowMatrix MatrixFromJson(const Json& j) {
  if (!j.is_array() || j.empty()) Malformed("matrix must be a nonempty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j.front().size());
  RowMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) Malformed("ragged matrix");
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

Json VectorToJson(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Eigen::VectorXd VectorFromJson(const Json& j) {
  if (!j.is_array()) Malformed("expected an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

}  // namespace

Json ToJson(const TemperatureModel& model) {
  return {{"type", "ts"}, {"T", model.temperature}, {"t_min", model.t_min}, {"t_max", model.t_max}};
}

Json ToJson(const FittedRegressor& regressor) {
  const auto& spec = regressor.spec();
  Json j;
  j["kind"] = ToString(spec.kind());
  j["fit_intercept"] = spec.intercept;
  switch (spec.kind()) {
    case RegressorKind::kOls:
      break;
    case RegressorKind::kRidge:
      j["lambda"] = std::get<RidgeParams>(spec.params).lambda;
      break;
    case RegressorKind::kHuber:
      j["delta"] = std::get<HuberParams>(spec.params).delta;
      j["alpha"] = std::get<HuberParams>(spec.params).alpha;
      break;
    case RegressorKind::kKrr:
      j["lambda"] = std::get<KrrParams>(spec.params).lambda;
      break;
    case RegressorKind::kKnn:
      break;
  }
  switch (spec.kind()) {
    case RegressorKind::kOls:
    case RegressorKind::kRidge:
    case RegressorKind::kHuber:
      j["theta"] = VectorToJson(regressor.theta());
      j["intercept"] = regressor.intercept();
      break;
    case RegressorKind::kKrr:
      j["support"] = MatrixToJson(regressor.support());
      j["dual"] = VectorToJson(regressor.dual());
      j["gamma"] = std::get<KrrParams>(spec.params).gamma;
      j["offset"] = regressor.offset();
      break;
    case RegressorKind::kKnn:
      j["support"] = MatrixToJson(regressor.support());
      j["targets"] = VectorToJson(regressor.targets());
      j["k"] = std::get<KnnParams>(spec.params).k;
      break;
  }
  return j;
}

FittedRegressor RegressorFromJson(const Json& j) {
  RegressorSpec spec;
  spec.intercept = j.contains("fit_intercept") ? Get<bool>(j, "fit_intercept") : true;
  RegressorKind kind;
  try {
    kind = ParseRegressorKind(Get<std::string>(j, "kind"));
  } catch (const Error& e) {
    Malformed(e.detail());
  }
  switch (kind) {
    case RegressorKind::kOls:
      spec.params = OlsParams{};
      break;
    case RegressorKind::kRidge:
      spec.params = RidgeParams{Get<double>(j, "lambda")};
      break;
    case RegressorKind::kHuber:
      spec.params = HuberParams{Get<double>(j, "delta"), Get<double>(j, "alpha")};
      break;
    case RegressorKind::kKrr:
      spec.params = KrrParams{Get<double>(j, "gamma"), Get<double>(j, "lambda")};
      break;
    case RegressorKind::kKnn:
      spec.params = KnnParams{Get<int>(j, "k")};
      break;
  }
  try {
    spec.Validate();
  } catch (const Error& e) {
    Malformed(e.detail());
  }
  switch (kind) {
    case RegressorKind::kOls:
    case RegressorKind::kRidge:
    case RegressorKind::kHuber:
      return FittedRegressor::Linear(spec, VectorFromJson(Get<Json>(j, "theta")),
                                     Get<double>(j, "intercept"));
    case RegressorKind::kKrr:
      return FittedRegressor::Kernel(spec, MatrixFromJson(Get<Json>(j, "support")),
                                     VectorFromJson(Get<Json>(j, "dual")), Get<double>(j, "offset"));
    case RegressorKind::kKnn:
      return FittedRegressor::Neighbors(spec, MatrixFromJson(Get<Json>(j, "support")),
                                        VectorFromJson(Get<Json>(j, "targets")));
  }
  Malformed("unhandled regressor kind");
}

Json ToJson(const MdtsModel& model) {
  Json per_domain = Json::object();
  for (const auto& [id, t] : model.per_domain_t()) per_domain[id] = t;
  return {{"type", "mdts"},
          {"clamp", {model.clamp().lo, model.clamp().hi}},
          {"per_domain_T", per_domain},
          {"regressor", ToJson(model.regressor())},
          {"num_classes", model.num_classes()},
          {"embedding_dim", model.embedding_dim()}};
}

Json ToJson(const HistogramBinningModel& model) {
  return {{"type", "histbin"},
          {"M", model.num_bins},
          {"bin_accuracy", model.bin_accuracy},
          {"fallback", model.fallback}};
}

Json ToJson(const IsotonicModel& model) {
  return {{"type", "isotonic"}, {"breakpoints", model.breakpoints}, {"values", model.values}};
}

Json ToJson(const CalibrationModel& model) {
  return std::visit([](const auto& m) { return ToJson(m); }, model);
}

CalibrationModel ModelFromJson(const Json& j) {
  const auto type = Get<std::string>(j, "type");
  if (type == "ts") {
    TemperatureModel m;
    m.temperature = Get<double>(j, "T");
    m.t_min = Get<double>(j, "t_min");
    m.t_max = Get<double>(j, "t_max");
    if (!(m.temperature > 0.0)) Malformed("T must be positive");
    return m;
  }
  if (type == "mdts") {
    const auto clamp = Get<std::vector<double>>(j, "clamp");
    if (clamp.size() != 2) Malformed("clamp must be [lo, hi]");
    const auto& per = Get<Json>(j, "per_domain_T");
    if (!per.is_object()) Malformed("per_domain_T must be an object");
    std::vector<std::pair<std::string, double>> temps;
    for (auto it = per.begin(); it != per.end(); ++it) temps.emplace_back(it.key(), it.value().get<double>());
    try {
      return MdtsModel(std::move(temps), RegressorFromJson(Get<Json>(j, "regressor")),
                       {clamp[0], clamp[1]}, Get<int>(j, "num_classes"), Get<int>(j, "embedding_dim"));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kSchemaViolation) throw;
      Malformed(e.detail());
    }
  }
  if (type == "histbin") {
    HistogramBinningModel m;
    m.num_bins = Get<int>(j, "M");
    m.bin_accuracy = Get<std::vector<double>>(j, "bin_accuracy");
    m.fallback = Get<double>(j, "fallback");
    if (m.num_bins < 1 || static_cast<int>(m.bin_accuracy.size()) != m.num_bins) {
      Malformed("bin_accuracy must have M entries");
    }
    return m;
  }
  if (type == "isotonic") {
    IsotonicModel m;
    m.breakpoints = Get<std::vector<double>>(j, "breakpoints");
    m.values = Get<std::vector<double>>(j, "values");
    if (m.breakpoints.empty() || m.breakpoints.size() != m.values.size()) {
      Malformed("breakpoints and values must be nonempty and aligned");
    }
    return m;
  }
  Malformed("unknown model type '" + type + "'");
}

CalibrationModel LoadModel(const std::filesystem::path& path) {
  const std::string text = ReadFile(path);
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::kSchemaViolation, path.string() + ": " + e.what());
  }
  return ModelFromJson(j);
}

void SaveModel(const CalibrationModel& model, const std::filesystem::path& path) {
  WriteFileAtomic(path, ToJson(model).dump(2) + "\n");
}

Json ToJson(const MultiDomainReport& report) {
  Json per = Json::array();
  for (const auto& [id, r] : report.per_domain) {
    per.push_back({{"domain", id}, {"ece", r.ece}, {"acc", r.mean_acc}, {"conf", r.mean_conf}, {"n", r.n}});
  }
  return {{"bins", report.pooled.num_bins},
          {"mdece", report.mdece},
          {"pooled_ece", report.pooled.ece},
          {"per_domain", per}};
}

Json ToJson(const DivergenceReport& report) {
  return {{"d_hbar", report.d_hbar}, {"lambda", report.lambda}, {"alpha", report.alpha.alpha},
          {"lhs", report.lhs},       {"rhs", report.rhs},       {"slack", report.slack},
          {"holds", report.holds}};
}

Json ToJson(const GroundTruth& truth) {
  Json j = Json::object();
  for (const auto& [id, c] : truth) j[id] = c;
  return j;
}

int ModelNumClasses(const CalibrationModel& model) {
  if (const auto* m = std::get_if<MdtsModel>(&model)) return m->num_classes();
  return 0;
}

int ModelEmbeddingDim(const CalibrationModel& model) {
  if (const auto* m = std::get_if<MdtsModel>(&model)) return m->embedding_dim();
  return 0;
}

std::vector<std::vector<Prediction>> PredictAll(const CalibrationModel& model,
                                                const MultiDomainDataset& dataset) {
  std::vector<std::vector<Prediction>> out;
  out.reserve(dataset.domains.size());
  for (const auto& d : dataset.domains) {
    if (const auto* m = std::get_if<MdtsModel>(&model)) {
      out.push_back(m->CalibrateDomain(d));
      continue;
    }
    auto& preds = out.emplace_back();
    preds.reserve(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
      const auto logits = d.logits_row(i);
      preds.push_back(std::visit(
          [&](const auto& m) -> Prediction {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<M, TemperatureModel>) {
              return Apply(m, logits);
            } else if constexpr (std::is_same_v<M, MdtsModel>) {
              return m.Calibrate(logits, d.embedding_row(i));
            } else {
              return ApplyBaseline(m, logits);
            }
          },
          model));
    }
  }
  return out;
}

std::vector<std::vector<Prediction>> PredictAllMsp(const MultiDomainDataset& dataset) {
  std::vector<std::vector<Prediction>> out;
  for (const auto& d : dataset.domains) {
    auto& preds = out.emplace_back();
    for (std::size_t i = 0; i < d.size(); ++i) preds.push_back(Msp(d.logits_row(i)));
  }
  return out;
}

}  // namespace mdts
