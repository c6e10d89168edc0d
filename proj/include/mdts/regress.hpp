#pragma once

#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "mdts/dataset.hpp"

namespace mdts {

enum class RegressorKind { kOls, kRidge, kHuber, kKrr, kKnn };

const char* ToString(RegressorKind kind);
RegressorKind ParseRegressorKind(const std::string& name);

struct OlsParams {};
struct RidgeParams {
  double lambda = 1.0;
};
struct HuberParams {
  double delta = 1.35;
  double alpha = 0.0;
};
struct KrrParams {
  double gamma = 1.0;
  double lambda = 1e-2;
};
struct KnnParams {
  int k = 5;
};

struct RegressorSpec {
  std::variant<OlsParams, RidgeParams, HuberParams, KrrParams, KnnParams> params;
  // Linear kinds: appended unpenalized constant feature. KRR: targets are
  // centered on their mean, which is added back at prediction. KNN: no-op.
  bool intercept = true;

  RegressorKind kind() const { return static_cast<RegressorKind>(params.index()); }
  // Throws InvalidArgument when a hyperparameter is out of range.
  void Validate() const;
  std::string Describe() const;

  static RegressorSpec Ols(bool intercept = true) { return {OlsParams{}, intercept}; }
};

struct RegressorFitOptions {
  // Optional per-row weights (linear kinds only); empty means uniform.
  std::span<const double> weights;
  // KRR trains on at most this many rows, taken at a fixed stride.
  std::size_t krr_max_support = 1000;
};

class FittedRegressor {
 public:
  FittedRegressor() = default;

  static FittedRegressor Linear(RegressorSpec spec, Eigen::VectorXd theta, double intercept);
  static FittedRegressor Kernel(RegressorSpec spec, RowMatrix support, Eigen::VectorXd dual,
                                double offset);
  static FittedRegressor Neighbors(RegressorSpec spec, RowMatrix support, Eigen::VectorXd targets);

  // Throws DimensionMismatch if x.size() != input_dim().
  double Predict(std::span<const double> x) const;

  const RegressorSpec& spec() const { return spec_; }
  int input_dim() const { return input_dim_; }
  const Eigen::VectorXd& theta() const { return theta_; }
  double intercept() const { return intercept_; }
  const RowMatrix& support() const { return support_; }
  const Eigen::VectorXd& dual() const { return dual_; }
  const Eigen::VectorXd& targets() const { return targets_; }
  double offset() const { return intercept_; }

 private:
  RegressorSpec spec_{};
  int input_dim_ = 0;
  Eigen::VectorXd theta_;
  double intercept_ = 0.0;
  RowMatrix support_;
  Eigen::VectorXd dual_;
  Eigen::VectorXd targets_;
};

// ols: minimum-norm least squares. ridge: penalized least squares, bias
// unpenalized. huber: IRLS on the Huber loss (stops when no weight moves by
// 1e-8, or after 100 rounds). krr: (K + lambda I) a = t with an RBF kernel.
// knn: stores the data.
FittedRegressor Fit(const RegressorSpec& spec, const RowMatrix& x, std::span<const double> targets,
                    const RegressorFitOptions& options = {});

// Default hyperparameter grid for a kind, in declared order.
std::vector<RegressorSpec> DefaultGrid(RegressorKind kind, bool intercept = true);

struct SelectionOptions {
  int bins = 20;
  double t_min = 0.05;
  double t_max = 50.0;
  bool domain_reweighting = false;
  std::size_t krr_max_support = 1000;
};

// Leave-one-domain-out MDECE of one spec: fit on every domain but k using
// (embedding, per_domain_t[j]) pairs, calibrate domain k with clamped
// predicted temperatures, take its ECE, average over k.
double LodoMdece(const RegressorSpec& spec, const MultiDomainDataset& calibration,
                 std::span<const double> per_domain_t, const SelectionOptions& options = {});

struct SelectionResult {
  RegressorSpec best;
  std::vector<double> scores;  // aligned with the grid
};

// Grid point with the lowest LodoMdece; ties go to the earliest point.
// Throws TooFewDomains when K < 2.
SelectionResult SelectHyperparams(std::span<const RegressorSpec> grid,
                                  const MultiDomainDataset& calibration,
                                  std::span<const double> per_domain_t,
                                  const SelectionOptions& options = {});

// Per-row weights giving every domain total weight 1 (row weight 1/n_k).
std::vector<double> DomainBalancedWeights(const MultiDomainDataset& dataset);

}  // namespace mdts
