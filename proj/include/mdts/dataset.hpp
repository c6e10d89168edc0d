#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mdts {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Row i of a row-major matrix as a contiguous span.
inline std::span<const double> Row(const RowMatrix& m, Eigen::Index i) {
  return {m.data() + i * m.cols(), static_cast<std::size_t>(m.cols())};
}

enum class SplitTag { kInd, kOod };

const char* ToString(SplitTag tag);
SplitTag ParseSplitTag(const std::string& s);

// One domain's samples: labels y, logits f(x) (n x J), embeddings Psi(x)
// (n x p), and, for synthetic data only, the calibrated confidence.
struct DomainDataset {
  std::string id;
  SplitTag split = SplitTag::kInd;
  std::vector<int> labels;
  RowMatrix logits;
  RowMatrix embeddings;
  std::optional<std::vector<double>> oracle_conf;

  std::size_t size() const { return labels.size(); }
  int num_classes() const { return static_cast<int>(logits.cols()); }
  int embedding_dim() const { return static_cast<int>(embeddings.cols()); }
  std::span<const double> logits_row(std::size_t i) const {
    return Row(logits, static_cast<Eigen::Index>(i));
  }
  std::span<const double> embedding_row(std::size_t i) const {
    return Row(embeddings, static_cast<Eigen::Index>(i));
  }

  // Throws Error on any violated invariant (shape, label range, finiteness,
  // oracle range).
  void Validate() const;
};

// Rows of `domain` at `indices`, in the given order.
DomainDataset Subset(const DomainDataset& domain, std::span<const std::size_t> indices);

struct MultiDomainDataset {
  int num_classes = 0;
  int embedding_dim = 0;
  std::vector<DomainDataset> domains;

  std::size_t num_domains() const { return domains.size(); }
  const DomainDataset* Find(const std::string& id) const;
  void Validate() const;
};

// Domains carrying the given split tag, in their original order.
MultiDomainDataset SelectSplit(const MultiDomainDataset& dataset, SplitTag tag);

struct SplitResult {
  MultiDomainDataset calibration;
  MultiDomainDataset evaluation;
};

// Accepts either the manifest file itself or the directory containing
// manifest.json.
MultiDomainDataset Load(const std::filesystem::path& manifest_path);

// Writes <dir>/manifest.json and one <id>.csv per domain. Returns the
// manifest path.
std::filesystem::path Save(const MultiDomainDataset& dataset, const std::filesystem::path& dir);

// Per-domain random halving: calibration gets ceil(n/2) rows. Domain k
// shuffles with Rng(MixSeed(seed, k)); row order inside each half follows
// the original row order.
SplitResult SplitHalf(const MultiDomainDataset& dataset, std::uint64_t seed);

// Calibration-half row indices for one domain (sorted ascending).
std::vector<std::size_t> CalibrationIndices(std::size_t n, std::uint64_t seed,
                                            std::size_t domain_index);

// Concatenation in domain order; id "pooled". oracle_conf survives only if
// every domain has it.
DomainDataset Pool(const MultiDomainDataset& dataset);

}  // namespace mdts
