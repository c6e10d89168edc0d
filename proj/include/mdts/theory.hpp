#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "mdts/dataset.hpp"

namespace mdts {

// Finite family H = {h_T : T in temperatures}, h_T(x) = max softmax(f(x)/T),
// and the threshold grid used to build Hbar = {|h - h'| > t}.
struct HypothesisFamily {
  std::vector<double> temperatures;
  std::vector<double> thresholds;  // sorted, in [0, 1]

  // num_temperatures log-spaced on [t_lo, t_hi]; num_thresholds evenly
  // spaced on [0, 1] (both ends included).
  static HypothesisFamily Grid(int num_temperatures, int num_thresholds, double t_lo = 0.2,
                               double t_hi = 5.0);
  void Validate() const;
};

struct MixtureWeights {
  std::vector<double> alpha;
};

struct DivergenceReport {
  double d_hbar = 0.0;
  double lambda = 0.0;
  MixtureWeights alpha;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;
  bool holds = false;
};

using CalibrationMap = std::function<double(const DomainDataset& domain, std::size_t row)>;

// Mean of |oracle_conf_i - h(x_i)|. Throws MissingOracle.
double Risk(const CalibrationMap& h, const DomainDataset& samples);
double Risk(std::span<const double> h_values, const DomainDataset& samples);

// max over (h, h', t) of |P_A(|h - h'| > t) - P_B(|h - h'| > t)|, by
// exhaustive enumeration of the family.
double HDivergence(const DomainDataset& a, const DomainDataset& b, const HypothesisFamily& family);

// The InD mixture against one OOD set, with every alpha-independent
// quantity tabulated once: per-domain set counts for each (h, h', t) and
// per-domain risks of each h in the family.
class MixtureProblem {
 public:
  MixtureProblem(std::span<const DomainDataset> ind_domains, const DomainDataset& ood,
                 const HypothesisFamily& family);

  std::size_t num_domains() const { return ind_counts_.size(); }
  // d_Hbar between sum_k alpha_k P_k (sample weights alpha_k / n_k) and OOD.
  double DHbar(std::span<const double> alpha) const;
  // min over h in H of eps(h, P^alpha) + eps(h, OOD).
  double Lambda(std::span<const double> alpha) const;
  double Objective(std::span<const double> alpha) const {
    return 0.5 * DHbar(alpha) + Lambda(alpha);
  }

 private:
  std::vector<std::vector<std::int64_t>> ind_counts_;
  std::vector<double> ind_sizes_;
  std::vector<std::int64_t> ood_counts_;
  double ood_size_ = 0.0;
  std::vector<std::vector<double>> ind_risk_;  // [k][g]
  std::vector<double> ood_risk_;               // [g]
};

struct AlphaSearchResult {
  MixtureWeights weights;
  double objective = 0.0;
};

// Exhaustive search over {alpha : alpha_k = m_k / resolution}, visited in
// lexicographic order; the first minimum wins. K must be <= 4.
AlphaSearchResult OptimizeAlpha(std::span<const DomainDataset> ind_domains,
                                const DomainDataset& ood, const HypothesisFamily& family,
                                int resolution);

// All lattice points in visiting order.
std::vector<std::vector<double>> SimplexLattice(std::size_t num_domains, int resolution);

// lhs = eps(hhat, OOD); rhs = sum_k alpha_k eps(hhat, D_k) + d_Hbar / 2 +
// lambda + slack.
DivergenceReport CheckBound(std::span<const DomainDataset> ind_domains, const DomainDataset& ood,
                            const CalibrationMap& hhat, const HypothesisFamily& family,
                            const MixtureWeights& alpha, double slack);

}  // namespace mdts
