#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mdts/dataset.hpp"

namespace mdts {

enum class EmbedMode { kDirect, kMixed };

const char* ToString(EmbedMode mode);
EmbedMode ParseEmbedMode(const std::string& name);

struct SynthConfig {
  int num_domains = 5;      // in-distribution domains
  int num_ood_domains = 0;  // extra domains tagged "ood", drawn the same way
  int num_classes = 10;
  int per_domain = 2000;
  double logit_scale = 2.0;
  double c_lo = 0.5;
  double c_hi = 3.0;
  EmbedMode embed_mode = EmbedMode::kDirect;
  double embed_noise = 0.05;
  int mix_dim = 4;
  std::uint64_t seed = 0;

  // Throws InvalidConfig.
  void Validate() const;
};

using GroundTruth = std::vector<std::pair<std::string, double>>;

struct SynthResult {
  MultiDomainDataset dataset;
  GroundTruth ground_truth;  // domain id -> c_k
};

// Domain k: c_k ~ U(c_lo, c_hi); base logits z with iid N(0, logit_scale^2)
// entries; label ~ Categorical(softmax(z)); presented logits c_k * z;
// oracle_conf = max softmax(z). Embeddings:
//   direct: [z, c_k + N(0, noise^2)]                       (p = J + 1)
//   mixed:  A [z, c_k 1_q] + N(0, noise^2 I)               (p = J + q)
// with A a seeded Gaussian matrix checked for full rank.
SynthResult Generate(const SynthConfig& config);

// Mixing matrix used by mixed mode for a given config.
Eigen::MatrixXd MixingMatrix(const SynthConfig& config);

// ECE of the oracle confidences against the argmax labels.
double OracleEce(const DomainDataset& domain, int num_bins);

}  // namespace mdts
