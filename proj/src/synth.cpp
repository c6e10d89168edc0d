#include "mdts/synth.hpp"

#include <cmath>
#include <cstdio>

#include "mdts/error.hpp"
#include "mdts/metrics.hpp"
#include "mdts/probcore.hpp"
#include "mdts/rng.hpp"

namespace mdts {

const char* ToString(EmbedMode mode) { return mode == EmbedMode::kDirect ? "direct" : "mixed"; }

EmbedMode ParseEmbedMode(const std::string& name) {
  if (name == "direct") return EmbedMode::kDirect;
  if (name == "mixed") return EmbedMode::kMixed;
  throw Error(ErrorCode::kInvalidConfig, "embed mode must be direct or mixed, got '" + name + "'");
}

void SynthConfig::Validate() const {
  const auto bad = [](const std::string& what) { throw Error(ErrorCode::kInvalidConfig, what); };
  if (num_domains < 1) bad("domains must be positive");
  if (num_ood_domains < 0) bad("ood domains must be nonnegative");
  if (num_classes < 2) bad("classes must be at least 2");
  if (per_domain < 1) bad("per-domain count must be positive");
  if (!(logit_scale > 0.0) || !std::isfinite(logit_scale)) bad("logit scale must be positive");
  if (!(c_lo > 0.0) || !(c_lo < c_hi) || !std::isfinite(c_hi)) bad("need 0 < c_lo < c_hi");
  if (!(embed_noise >= 0.0) || !std::isfinite(embed_noise)) bad("embed noise must be >= 0");
  if (embed_mode == EmbedMode::kMixed && mix_dim < 1) bad("mix dim must be positive");
}

namespace {

// Stream ids for MixSeed; domain k uses kDomainStream + k.
constexpr std::uint64_t kMixingStream = 1;
constexpr std::uint64_t kDomainStream = 16;

}  // namespace

Eigen::MatrixXd MixingMatrix(const SynthConfig& config) {
  const int dim = config.num_classes + config.mix_dim;
  Rng rng(MixSeed(config.seed, kMixingStream));
  for (int attempt = 0; attempt < 100; ++attempt) {
    Eigen::MatrixXd a(dim, dim);
    for (int i = 0; i < dim; ++i) {
      for (int j = 0; j < dim; ++j) a(i, j) = rng.normal() / std::sqrt(static_cast<double>(dim));
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    if (lu.rank() == dim) return a;
  }
  throw Error(ErrorCode::kInvalidConfig, "could not draw a full-rank mixing matrix");
}

SynthResult Generate(const SynthConfig& config) {
  config.Validate();
  const int num_classes = config.num_classes;
  const bool mixed = config.embed_mode == EmbedMode::kMixed;
  const int p = mixed ? num_classes + config.mix_dim : num_classes + 1;
  const Eigen::MatrixXd mixing = mixed ? MixingMatrix(config) : Eigen::MatrixXd();

  SynthResult out;
  out.dataset.num_classes = num_classes;
  out.dataset.embedding_dim = p;
  const int total = config.num_domains + config.num_ood_domains;
  const auto n = static_cast<Eigen::Index>(config.per_domain);
  std::vector<double> z(static_cast<std::size_t>(num_classes));
  std::vector<double> probs(static_cast<std::size_t>(num_classes));
  Eigen::VectorXd latent(mixed ? p : 0);

  for (int k = 0; k < total; ++k) {
    const bool ood = k >= config.num_domains;
    Rng rng(MixSeed(config.seed, kDomainStream + static_cast<std::uint64_t>(k)));
    const double c = rng.uniform(config.c_lo, config.c_hi);

    DomainDataset d;
    char name[32];
    std::snprintf(name, sizeof(name), "%s_%02d", ood ? "ood" : "ind",
                  ood ? k - config.num_domains : k);
    d.id = name;
    d.split = ood ? SplitTag::kOod : SplitTag::kInd;
    d.labels.resize(static_cast<std::size_t>(n));
    d.logits.resize(n, num_classes);
    d.embeddings.resize(n, p);
    d.oracle_conf.emplace(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      for (auto& v : z) v = config.logit_scale * rng.normal();
      SoftmaxT(z, 1.0, probs);
      const auto label = static_cast<int>(rng.categorical(probs));
      d.labels[static_cast<std::size_t>(i)] = label;
      (*d.oracle_conf)[static_cast<std::size_t>(i)] = Confidence(z, 1.0);
      for (int j = 0; j < num_classes; ++j) d.logits(i, j) = c * z[static_cast<std::size_t>(j)];
      if (!mixed) {
        for (int j = 0; j < num_classes; ++j) d.embeddings(i, j) = z[static_cast<std::size_t>(j)];
        d.embeddings(i, num_classes) = c + config.embed_noise * rng.normal();
      } else {
        for (int j = 0; j < num_classes; ++j) latent[j] = z[static_cast<std::size_t>(j)];
        for (int j = num_classes; j < p; ++j) latent[j] = c;
        const Eigen::VectorXd e = mixing * latent;
        for (int j = 0; j < p; ++j) d.embeddings(i, j) = e[j] + config.embed_noise * rng.normal();
      }
    }
    out.ground_truth.emplace_back(d.id, c);
    out.dataset.domains.push_back(std::move(d));
  }
  return out;
}

double OracleEce(const DomainDataset& domain, int num_bins) {
  if (!domain.oracle_conf) throw Error(ErrorCode::kMissingOracle, "domain '" + domain.id + "'");
  std::vector<std::uint8_t> correct(domain.size());
  for (std::size_t i = 0; i < domain.size(); ++i) {
    correct[i] = Predict(domain.logits_row(i)) == domain.labels[i];
  }
  return Ece(*domain.oracle_conf, correct, num_bins).ece;
}

}  // namespace mdts
