#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "mdts/dataset.hpp"
#include "mdts/rng.hpp"

namespace fixtures {

inline mdts::DomainDataset MakeDomain(const std::string& id, const std::vector<std::vector<double>>& logits,
                                      const std::vector<int>& labels,
                                      std::vector<std::vector<double>> embeddings = {},
                                      mdts::SplitTag split = mdts::SplitTag::kInd) {
  mdts::DomainDataset d;
  d.id = id;
  d.split = split;
  d.labels = labels;
  const auto n = static_cast<Eigen::Index>(logits.size());
  const auto j = static_cast<Eigen::Index>(logits.front().size());
  d.logits.resize(n, j);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index c = 0; c < j; ++c) d.logits(i, c) = logits[i][c];
  }
  if (embeddings.empty()) embeddings.assign(logits.size(), {0.0});
  d.embeddings.resize(n, static_cast<Eigen::Index>(embeddings.front().size()));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index c = 0; c < d.embeddings.cols(); ++c) d.embeddings(i, c) = embeddings[i][c];
  }
  return d;
}

// n rows of N(0, sd^2) logits, uniform labels, N(0,1) embeddings.
inline mdts::DomainDataset RandomDomain(mdts::Rng& rng, const std::string& id, std::size_t n, int j, int p,
                                        double sd = 2.0) {
  mdts::DomainDataset d;
  d.id = id;
  d.logits.resize(static_cast<Eigen::Index>(n), j);
  d.embeddings.resize(static_cast<Eigen::Index>(n), p);
  d.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (int c = 0; c < j; ++c) d.logits(static_cast<Eigen::Index>(i), c) = rng.normal(0.0, sd);
    for (int c = 0; c < p; ++c) d.embeddings(static_cast<Eigen::Index>(i), c) = rng.normal();
    d.labels[i] = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(j)));
  }
  return d;
}

inline mdts::MultiDomainDataset Wrap(std::vector<mdts::DomainDataset> domains) {
  mdts::MultiDomainDataset ds;
  ds.num_classes = domains.front().num_classes();
  ds.embedding_dim = domains.front().embedding_dim();
  ds.domains = std::move(domains);
  return ds;
}

// MSP confidence c on class 0 of J classes: logits (log(c (J-1) / (1-c)), 0, ...).
inline std::vector<double> LogitsForConfidence(double c, int j) {
  std::vector<double> z(j, 0.0);
  z[0] = std::log(c * (j - 1) / (1.0 - c));
  return z;
}

inline std::filesystem::path TempDir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("mdts_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace fixtures
