#pragma once

#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "mdts/baselines.hpp"
#include "mdts/md_ts.hpp"
#include "mdts/metrics.hpp"
#include "mdts/regress.hpp"
#include "mdts/synth.hpp"
#include "mdts/theory.hpp"
#include "mdts/ts.hpp"

namespace mdts {

using Json = nlohmann::ordered_json;

// Any fitted calibrator the CLI can store, tagged by its "type" field.
using CalibrationModel =
    std::variant<TemperatureModel, MdtsModel, HistogramBinningModel, IsotonicModel>;

Json ToJson(const TemperatureModel& model);
Json ToJson(const FittedRegressor& regressor);
Json ToJson(const MdtsModel& model);
Json ToJson(const HistogramBinningModel& model);
Json ToJson(const IsotonicModel& model);
Json ToJson(const CalibrationModel& model);
Json ToJson(const MultiDomainReport& report);
Json ToJson(const DivergenceReport& report);
Json ToJson(const GroundTruth& truth);

// Throw SchemaViolation on malformed input.
FittedRegressor RegressorFromJson(const Json& j);
CalibrationModel ModelFromJson(const Json& j);

CalibrationModel LoadModel(const std::filesystem::path& path);
void SaveModel(const CalibrationModel& model, const std::filesystem::path& path);

// J and p the model expects; p is 0 when the model ignores embeddings.
int ModelNumClasses(const CalibrationModel& model);
int ModelEmbeddingDim(const CalibrationModel& model);

// Predictions for every row of every domain.
std::vector<std::vector<Prediction>> PredictAll(const CalibrationModel& model,
                                                const MultiDomainDataset& dataset);

// MSP predictions, no model.
std::vector<std::vector<Prediction>> PredictAllMsp(const MultiDomainDataset& dataset);

}  // namespace mdts
