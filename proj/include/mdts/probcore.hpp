#pragma once

#include <span>
#include <vector>

namespace mdts {

struct Prediction {
  int label = 0;
  double confidence = 0.0;
};

// Softmax of logits / temperature, stabilized by subtracting the max logit.
// Throws NonPositiveTemperature unless temperature > 0 and finite.
std::vector<double> SoftmaxT(std::span<const double> logits, double temperature);
void SoftmaxT(std::span<const double> logits, double temperature, std::span<double> out);

// Argmax with ties broken toward the lowest index.
int Predict(std::span<const double> logits);

// Largest entry of SoftmaxT(logits, temperature) without materializing it.
double Confidence(std::span<const double> logits, double temperature);

// -log SoftmaxT(logits, temperature)[label].
double NegLogLikelihood(std::span<const double> logits, int label, double temperature);

// Predict + Confidence at temperature 1.
Prediction Msp(std::span<const double> logits);

void CheckTemperature(double temperature);

}  // namespace mdts
