#include "mdts/probcore.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mdts/error.hpp"

namespace mdts {

void CheckTemperature(double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw Error(ErrorCode::kNonPositiveTemperature, "temperature " + std::to_string(temperature));
  }
}

void SoftmaxT(std::span<const double> logits, double temperature, std::span<double> out) {
  CheckTemperature(temperature);
  if (out.size() != logits.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "softmax output size");
  }
  if (logits.empty()) return;
  const double inv_t = 1.0 / temperature;
  const double m = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (std::size_t j = 0; j < logits.size(); ++j) {
    out[j] = std::exp((logits[j] - m) * inv_t);
    total += out[j];
  }
  for (double& v : out) v /= total;
}

std::vector<double> SoftmaxT(std::span<const double> logits, double temperature) {
  std::vector<double> out(logits.size());
  SoftmaxT(logits, temperature, out);
  return out;
}

int Predict(std::span<const double> logits) {
  // max_element returns the first maximum.
  return static_cast<int>(std::max_element(logits.begin(), logits.end()) - logits.begin());
}

double Confidence(std::span<const double> logits, double temperature) {
  CheckTemperature(temperature);
  const double inv_t = 1.0 / temperature;
  const double m = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double z : logits) total += std::exp((z - m) * inv_t);
  return 1.0 / total;
}

double NegLogLikelihood(std::span<const double> logits, int label, double temperature) {
  CheckTemperature(temperature);
  const double inv_t = 1.0 / temperature;
  const double m = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double z : logits) total += std::exp((z - m) * inv_t);
  return std::log(total) + (m - logits[static_cast<std::size_t>(label)]) * inv_t;
}

Prediction Msp(std::span<const double> logits) {
  return {Predict(logits), Confidence(logits, 1.0)};
}

}  // namespace mdts
