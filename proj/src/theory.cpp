#include "mdts/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mdts/error.hpp"
#include "mdts/kernels.hpp"

namespace mdts {

HypothesisFamily HypothesisFamily::Grid(int num_temperatures, int num_thresholds, double t_lo,
                                        double t_hi) {
  if (num_temperatures < 1 || num_thresholds < 1 || !(t_lo > 0.0) || !(t_lo <= t_hi)) {
    throw Error(ErrorCode::kInvalidArgument, "hypothesis grid sizes and range");
  }
  HypothesisFamily f;
  for (int g = 0; g < num_temperatures; ++g) {
    const double u = num_temperatures == 1 ? 0.0 : static_cast<double>(g) / (num_temperatures - 1);
    f.temperatures.push_back(std::exp(std::log(t_lo) + u * (std::log(t_hi) - std::log(t_lo))));
  }
  for (int r = 0; r < num_thresholds; ++r) {
    f.thresholds.push_back(num_thresholds == 1 ? 0.0 : static_cast<double>(r) / (num_thresholds - 1));
  }
  return f;
}

void HypothesisFamily::Validate() const {
  if (temperatures.empty() || thresholds.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "hypothesis family grids must be nonempty");
  }
  for (double t : temperatures) {
    if (!(t > 0.0) || !std::isfinite(t)) throw Error(ErrorCode::kNonPositiveTemperature, "family");
  }
  if (!std::is_sorted(thresholds.begin(), thresholds.end()) || thresholds.front() < 0.0 ||
      thresholds.back() > 1.0) {
    throw Error(ErrorCode::kInvalidArgument, "thresholds must be sorted within [0, 1]");
  }
}

namespace {

void RequireOracle(const DomainDataset& d) {
  if (!d.oracle_conf) throw Error(ErrorCode::kMissingOracle, "domain '" + d.id + "'");
}

void RequireNonEmpty(const DomainDataset& d) {
  if (d.size() == 0) throw Error(ErrorCode::kEmptyInput, "domain '" + d.id + "' has no samples");
}

// values[g * n + i] = h_{T_g}(x_i).
std::vector<double> HypothesisValues(const DomainDataset& d, const HypothesisFamily& family) {
  const std::size_t n = d.size();
  std::vector<double> values(family.temperatures.size() * n);
  const std::span<const double> logits(d.logits.data(), static_cast<std::size_t>(d.logits.size()));
  for (std::size_t g = 0; g < family.temperatures.size(); ++g) {
    const double t[] = {family.temperatures[g]};
    kernels::parallel::Confidences(logits, d.num_classes(), t,
                                   std::span<double>(values.data() + g * n, n));
  }
  return values;
}

std::vector<std::int64_t> SetCounts(const DomainDataset& d, const HypothesisFamily& family) {
  const auto values = HypothesisValues(d, family);
  const std::size_t g = family.temperatures.size();
  std::vector<std::int64_t> counts(g * g * family.thresholds.size());
  kernels::parallel::PairThresholdCounts(values, g, family.thresholds, counts);
  return counts;
}

std::vector<double> FamilyRisks(const DomainDataset& d, const HypothesisFamily& family) {
  const auto values = HypothesisValues(d, family);
  const std::size_t n = d.size();
  std::vector<double> risks(family.temperatures.size());
  for (std::size_t g = 0; g < risks.size(); ++g) {
    risks[g] = Risk(std::span<const double>(values.data() + g * n, n), d);
  }
  return risks;
}

void CheckAlpha(std::span<const double> alpha, std::size_t k) {
  if (alpha.size() != k) throw Error(ErrorCode::kDimensionMismatch, "alpha length");
  double total = 0.0;
  for (double a : alpha) {
    if (!(a >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "alpha must be nonnegative");
    total += a;
  }
  if (std::fabs(total - 1.0) > 1e-12) throw Error(ErrorCode::kInvalidArgument, "alpha must sum to 1");
}

}  // namespace

double Risk(std::span<const double> h_values, const DomainDataset& samples) {
  RequireOracle(samples);
  RequireNonEmpty(samples);
  if (h_values.size() != samples.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "one hypothesis value per sample required");
  }
  const auto& oracle = *samples.oracle_conf;
  double total = 0.0;
  for (std::size_t i = 0; i < h_values.size(); ++i) total += std::fabs(oracle[i] - h_values[i]);
  return total / static_cast<double>(h_values.size());
}

double Risk(const CalibrationMap& h, const DomainDataset& samples) {
  RequireOracle(samples);
  RequireNonEmpty(samples);
  std::vector<double> values(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) values[i] = h(samples, i);
  return Risk(values, samples);
}

double HDivergence(const DomainDataset& a, const DomainDataset& b, const HypothesisFamily& family) {
  family.Validate();
  RequireNonEmpty(a);
  RequireNonEmpty(b);
  const auto ca = SetCounts(a, family);
  const auto cb = SetCounts(b, family);
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  double best = 0.0;
  for (std::size_t e = 0; e < ca.size(); ++e) {
    best = std::max(best, std::fabs(static_cast<double>(ca[e]) / na - static_cast<double>(cb[e]) / nb));
  }
  return best;
}

MixtureProblem::MixtureProblem(std::span<const DomainDataset> ind_domains, const DomainDataset& ood,
                               const HypothesisFamily& family) {
  family.Validate();
  if (ind_domains.empty()) throw Error(ErrorCode::kEmptyInput, "no in-distribution domains");
  RequireNonEmpty(ood);
  RequireOracle(ood);
  for (const auto& d : ind_domains) {
    RequireNonEmpty(d);
    RequireOracle(d);
    ind_counts_.push_back(SetCounts(d, family));
    ind_sizes_.push_back(static_cast<double>(d.size()));
    ind_risk_.push_back(FamilyRisks(d, family));
  }
  ood_counts_ = SetCounts(ood, family);
  ood_size_ = static_cast<double>(ood.size());
  ood_risk_ = FamilyRisks(ood, family);
}

double MixtureProblem::DHbar(std::span<const double> alpha) const {
  CheckAlpha(alpha, num_domains());
  double best = 0.0;
  for (std::size_t e = 0; e < ood_counts_.size(); ++e) {
    double mix = 0.0;
    for (std::size_t k = 0; k < num_domains(); ++k) {
      mix += alpha[k] * static_cast<double>(ind_counts_[k][e]) / ind_sizes_[k];
    }
    best = std::max(best, std::fabs(mix - static_cast<double>(ood_counts_[e]) / ood_size_));
  }
  return best;
}

double MixtureProblem::Lambda(std::span<const double> alpha) const {
  CheckAlpha(alpha, num_domains());
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g < ood_risk_.size(); ++g) {
    double joint = ood_risk_[g];
    for (std::size_t k = 0; k < num_domains(); ++k) joint += alpha[k] * ind_risk_[k][g];
    best = std::min(best, joint);
  }
  return best;
}

std::vector<std::vector<double>> SimplexLattice(std::size_t num_domains, int resolution) {
  if (num_domains == 0) throw Error(ErrorCode::kEmptyInput, "no domains");
  if (resolution < 1) throw Error(ErrorCode::kInvalidArgument, "resolution must be positive");
  std::vector<std::vector<double>> points;
  std::vector<int> m(num_domains, 0);
  // Depth-first over m_1, m_2, ... ascending; the last entry takes the rest.
  const auto recurse = [&](auto&& self, std::size_t k, int remaining) -> void {
    if (k + 1 == num_domains) {
      m[k] = remaining;
      std::vector<double> alpha(num_domains);
      for (std::size_t j = 0; j < num_domains; ++j) {
        alpha[j] = static_cast<double>(m[j]) / resolution;
      }
      points.push_back(std::move(alpha));
      return;
    }
    for (int v = 0; v <= remaining; ++v) {
      m[k] = v;
      self(self, k + 1, remaining - v);
    }
  };
  recurse(recurse, 0, resolution);
  return points;
}

AlphaSearchResult OptimizeAlpha(std::span<const DomainDataset> ind_domains,
                                const DomainDataset& ood, const HypothesisFamily& family,
                                int resolution) {
  if (ind_domains.size() > 4) {
    throw Error(ErrorCode::kTooManyDomains, std::to_string(ind_domains.size()) + " > 4");
  }
  if (resolution < 2 && ind_domains.size() > 1) {
    throw Error(ErrorCode::kInvalidArgument, "alpha resolution must be at least 2");
  }
  const MixtureProblem problem(ind_domains, ood, family);
  AlphaSearchResult best;
  best.objective = std::numeric_limits<double>::infinity();
  for (auto& alpha : SimplexLattice(ind_domains.size(), std::max(resolution, 1))) {
    const double obj = problem.Objective(alpha);
    if (obj < best.objective) {
      best.objective = obj;
      best.weights.alpha = std::move(alpha);
    }
  }
  return best;
}

DivergenceReport CheckBound(std::span<const DomainDataset> ind_domains, const DomainDataset& ood,
                            const CalibrationMap& hhat, const HypothesisFamily& family,
                            const MixtureWeights& alpha, double slack) {
  if (!(slack >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "slack must be nonnegative");
  const MixtureProblem problem(ind_domains, ood, family);
  DivergenceReport report;
  report.alpha = alpha;
  report.slack = slack;
  report.d_hbar = problem.DHbar(alpha.alpha);
  report.lambda = problem.Lambda(alpha.alpha);
  report.lhs = Risk(hhat, ood);
  double weighted = 0.0;
  for (std::size_t k = 0; k < ind_domains.size(); ++k) {
    weighted += alpha.alpha[k] * Risk(hhat, ind_domains[k]);
  }
  report.rhs = weighted + 0.5 * report.d_hbar + report.lambda + slack;
  report.holds = report.lhs <= report.rhs;
  return report;
}

}  // namespace mdts
