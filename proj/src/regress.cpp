#include "mdts/regress.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <sstream>

#include "mdts/error.hpp"
#include "mdts/fileio.hpp"
#include "mdts/kernels.hpp"
#include "mdts/metrics.hpp"
#include "mdts/probcore.hpp"

namespace mdts {

const char* ToString(RegressorKind kind) {
  switch (kind) {
    case RegressorKind::kOls: return "ols";
    case RegressorKind::kRidge: return "ridge";
    case RegressorKind::kHuber: return "huber";
    case RegressorKind::kKrr: return "krr";
    case RegressorKind::kKnn: return "knn";
  }
  return "unknown";
}

RegressorKind ParseRegressorKind(const std::string& name) {
  for (auto kind : {RegressorKind::kOls, RegressorKind::kRidge, RegressorKind::kHuber,
                    RegressorKind::kKrr, RegressorKind::kKnn}) {
    if (name == ToString(kind)) return kind;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown regressor '" + name + "'");
}

void RegressorSpec::Validate() const {
  const auto bad = [this](const char* what) {
    throw Error(ErrorCode::kInvalidArgument, std::string(ToString(kind())) + ": " + what);
  };
  if (const auto* p = std::get_if<RidgeParams>(&params)) {
    if (!(p->lambda >= 0.0) || !std::isfinite(p->lambda)) bad("lambda must be >= 0");
  } else if (const auto* p = std::get_if<HuberParams>(&params)) {
    if (!(p->delta > 0.0) || !std::isfinite(p->delta)) bad("delta must be > 0");
    if (!(p->alpha >= 0.0) || !std::isfinite(p->alpha)) bad("alpha must be >= 0");
  } else if (const auto* p = std::get_if<KrrParams>(&params)) {
    if (!(p->gamma > 0.0) || !std::isfinite(p->gamma)) bad("gamma must be > 0");
    if (!(p->lambda > 0.0) || !std::isfinite(p->lambda)) bad("lambda must be > 0");
  } else if (const auto* p = std::get_if<KnnParams>(&params)) {
    if (p->k < 1) bad("k must be >= 1");
  }
}

std::string RegressorSpec::Describe() const {
  std::ostringstream out;
  out << ToString(kind());
  if (const auto* p = std::get_if<RidgeParams>(&params)) {
    out << "(lambda=" << FormatDouble(p->lambda) << ")";
  } else if (const auto* p = std::get_if<HuberParams>(&params)) {
    out << "(delta=" << FormatDouble(p->delta) << ",alpha=" << FormatDouble(p->alpha) << ")";
  } else if (const auto* p = std::get_if<KrrParams>(&params)) {
    out << "(gamma=" << FormatDouble(p->gamma) << ",lambda=" << FormatDouble(p->lambda) << ")";
  } else if (const auto* p = std::get_if<KnnParams>(&params)) {
    out << "(k=" << p->k << ")";
  }
  if (!intercept) out << "[no-intercept]";
  return out.str();
}

FittedRegressor FittedRegressor::Linear(RegressorSpec spec, Eigen::VectorXd theta,
                                        double intercept) {
  if (!theta.allFinite() || !std::isfinite(intercept)) {
    throw Error(ErrorCode::kSingularSystem, "non-finite regression weights");
  }
  FittedRegressor r;
  r.spec_ = std::move(spec);
  r.input_dim_ = static_cast<int>(theta.size());
  r.theta_ = std::move(theta);
  r.intercept_ = intercept;
  return r;
}

FittedRegressor FittedRegressor::Kernel(RegressorSpec spec, RowMatrix support, Eigen::VectorXd dual,
                                        double offset) {
  if (support.rows() != dual.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "krr support/dual sizes differ");
  }
  if (!dual.allFinite() || !std::isfinite(offset)) {
    throw Error(ErrorCode::kSingularSystem, "non-finite krr coefficients");
  }
  FittedRegressor r;
  r.spec_ = std::move(spec);
  r.input_dim_ = static_cast<int>(support.cols());
  r.support_ = std::move(support);
  r.dual_ = std::move(dual);
  r.intercept_ = offset;
  return r;
}

FittedRegressor FittedRegressor::Neighbors(RegressorSpec spec, RowMatrix support,
                                           Eigen::VectorXd targets) {
  if (support.rows() != targets.size() || support.rows() == 0) {
    throw Error(ErrorCode::kDimensionMismatch, "knn support/targets sizes differ");
  }
  FittedRegressor r;
  r.spec_ = std::move(spec);
  r.input_dim_ = static_cast<int>(support.cols());
  r.support_ = std::move(support);
  r.targets_ = std::move(targets);
  return r;
}

double FittedRegressor::Predict(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != input_dim_) {
    throw Error(ErrorCode::kDimensionMismatch, "embedding has " + std::to_string(x.size()) +
                                                   " entries, regressor expects " +
                                                   std::to_string(input_dim_));
  }
  const Eigen::Map<const Eigen::RowVectorXd> v(x.data(), static_cast<Eigen::Index>(x.size()));
  switch (spec_.kind()) {
    case RegressorKind::kOls:
    case RegressorKind::kRidge:
    case RegressorKind::kHuber:
      return v.dot(theta_) + intercept_;
    case RegressorKind::kKrr: {
      const double gamma = std::get<KrrParams>(spec_.params).gamma;
      const Eigen::VectorXd k =
          (-gamma * (support_.rowwise() - v).rowwise().squaredNorm()).array().exp();
      return k.dot(dual_) + intercept_;
    }
    case RegressorKind::kKnn: {
      const Eigen::Index n = support_.rows();
      const Eigen::VectorXd d2 = (support_.rowwise() - v).rowwise().squaredNorm();
      std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
      std::iota(idx.begin(), idx.end(), Eigen::Index{0});
      const auto k = static_cast<std::size_t>(
          std::min<Eigen::Index>(std::get<KnnParams>(spec_.params).k, n));
      const auto closer = [&](Eigen::Index a, Eigen::Index b) {
        return d2[a] < d2[b] || (d2[a] == d2[b] && a < b);
      };
      std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), closer);
      double total = 0.0;
      for (std::size_t i = 0; i < k; ++i) total += targets_[idx[i]];
      return total / static_cast<double>(k);
    }
  }
  return 0.0;
}

namespace {

// Minimum-norm solution of min ||a x - b||.
Eigen::VectorXd MinNormSolve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a);
  Eigen::VectorXd x = cod.solve(b);
  if (!x.allFinite()) throw Error(ErrorCode::kSingularSystem, "least-squares solve failed");
  return x;
}

// Weighted ridge on the design [x | 1] (bias column only when intercept):
// min sum_i w_i (x_i theta + b - t_i)^2 + penalty * ||theta||^2.
Eigen::VectorXd WeightedRidge(const RowMatrix& x, const Eigen::VectorXd& t,
                              const Eigen::VectorXd& w, double penalty, bool intercept) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  const Eigen::Index cols = p + (intercept ? 1 : 0);
  const Eigen::Index extra = penalty > 0.0 ? p : 0;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n + extra, cols);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n + extra);
  const Eigen::VectorXd sw = w.array().sqrt();
  a.topLeftCorner(n, p) = sw.asDiagonal() * x;
  if (intercept) a.block(0, p, n, 1) = sw;
  b.head(n) = sw.cwiseProduct(t);
  if (extra > 0) a.block(n, 0, p, p).diagonal().setConstant(std::sqrt(penalty));
  return MinNormSolve(a, b);
}

FittedRegressor LinearFromSolution(const RegressorSpec& spec, const Eigen::VectorXd& sol,
                                   Eigen::Index p) {
  return FittedRegressor::Linear(spec, sol.head(p), spec.intercept ? sol[p] : 0.0);
}

Eigen::VectorXd Residuals(const RowMatrix& x, const Eigen::VectorXd& t, const Eigen::VectorXd& sol,
                          bool intercept) {
  const Eigen::Index p = x.cols();
  Eigen::VectorXd r = t - x * sol.head(p);
  if (intercept) r.array() -= sol[p];
  return r;
}

FittedRegressor FitHuber(const RegressorSpec& spec, const HuberParams& hp, const RowMatrix& x,
                         const Eigen::VectorXd& t, const Eigen::VectorXd& sample_w) {
  constexpr int kMaxIter = 100;
  constexpr double kWeightTol = 1e-8;
  // IRLS for 0.5 * sum w_i r_i^2 + alpha ||theta||^2, i.e. ridge penalty 2 alpha.
  const double penalty = 2.0 * hp.alpha;
  Eigen::VectorXd sol = WeightedRidge(x, t, sample_w, penalty, spec.intercept);
  Eigen::VectorXd prev = Eigen::VectorXd::Ones(t.size());
  for (int iter = 0; iter < kMaxIter; ++iter) {
    const Eigen::VectorXd r = Residuals(x, t, sol, spec.intercept);
    Eigen::VectorXd hw(r.size());
    for (Eigen::Index i = 0; i < r.size(); ++i) {
      const double a = std::fabs(r[i]);
      hw[i] = a <= hp.delta ? 1.0 : hp.delta / a;
    }
    const double change = (hw - prev).cwiseAbs().maxCoeff();
    if (change < kWeightTol) break;
    prev = hw;
    sol = WeightedRidge(x, t, sample_w.cwiseProduct(hw), penalty, spec.intercept);
  }
  return LinearFromSolution(spec, sol, x.cols());
}

FittedRegressor FitKrr(const RegressorSpec& spec, const KrrParams& kp, const RowMatrix& x,
                       const Eigen::VectorXd& t, std::size_t max_support) {
  const auto n = static_cast<std::size_t>(x.rows());
  const std::size_t m = std::min(n, std::max<std::size_t>(max_support, 1));
  RowMatrix support(static_cast<Eigen::Index>(m), x.cols());
  Eigen::VectorXd st(static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < m; ++i) {
    const auto src = static_cast<Eigen::Index>(i * n / m);
    support.row(static_cast<Eigen::Index>(i)) = x.row(src);
    st[static_cast<Eigen::Index>(i)] = t[src];
  }
  const double offset = spec.intercept ? st.mean() : 0.0;
  st.array() -= offset;
  RowMatrix gram;
  kernels::parallel::RbfGram(support, support, kp.gamma, gram);
  Eigen::MatrixXd system = gram;
  system.diagonal().array() += kp.lambda;
  Eigen::LLT<Eigen::MatrixXd> llt(system);
  Eigen::VectorXd dual;
  if (llt.info() == Eigen::Success) {
    dual = llt.solve(st);
  } else {
    dual = MinNormSolve(system, st);
  }
  return FittedRegressor::Kernel(spec, std::move(support), std::move(dual), offset);
}

}  // namespace

FittedRegressor Fit(const RegressorSpec& spec, const RowMatrix& x, std::span<const double> targets,
                    const RegressorFitOptions& options) {
  spec.Validate();
  const Eigen::Index n = x.rows();
  if (n == 0 || targets.empty()) throw Error(ErrorCode::kEmptyTrainingSet, "no training rows");
  if (static_cast<Eigen::Index>(targets.size()) != n) {
    throw Error(ErrorCode::kDimensionMismatch, "targets and rows differ in count");
  }
  if (!x.allFinite()) throw Error(ErrorCode::kSingularSystem, "non-finite training features");
  const Eigen::Map<const Eigen::VectorXd> t(targets.data(), n);
  if (!t.allFinite()) throw Error(ErrorCode::kSingularSystem, "non-finite targets");

  Eigen::VectorXd w = Eigen::VectorXd::Ones(n);
  if (!options.weights.empty()) {
    if (static_cast<Eigen::Index>(options.weights.size()) != n) {
      throw Error(ErrorCode::kDimensionMismatch, "weights and rows differ in count");
    }
    if (spec.kind() == RegressorKind::kKrr || spec.kind() == RegressorKind::kKnn) {
      throw Error(ErrorCode::kInvalidArgument, "row weights are supported for linear regressors only");
    }
    w = Eigen::Map<const Eigen::VectorXd>(options.weights.data(), n);
    if ((w.array() < 0.0).any() || !w.allFinite()) {
      throw Error(ErrorCode::kInvalidArgument, "weights must be finite and nonnegative");
    }
  }

  switch (spec.kind()) {
    case RegressorKind::kOls:
      return LinearFromSolution(spec, WeightedRidge(x, t, w, 0.0, spec.intercept), x.cols());
    case RegressorKind::kRidge: {
      const double lambda = std::get<RidgeParams>(spec.params).lambda;
      return LinearFromSolution(spec, WeightedRidge(x, t, w, lambda, spec.intercept), x.cols());
    }
    case RegressorKind::kHuber:
      return FitHuber(spec, std::get<HuberParams>(spec.params), x, t, w);
    case RegressorKind::kKrr:
      return FitKrr(spec, std::get<KrrParams>(spec.params), x, t, options.krr_max_support);
    case RegressorKind::kKnn:
      return FittedRegressor::Neighbors(spec, x, t);
  }
  throw Error(ErrorCode::kInvalidArgument, "unhandled regressor kind");
}

std::vector<RegressorSpec> DefaultGrid(RegressorKind kind, bool intercept) {
  std::vector<RegressorSpec> grid;
  switch (kind) {
    case RegressorKind::kOls:
      grid.push_back(RegressorSpec::Ols(intercept));
      break;
    case RegressorKind::kRidge:
      for (double lambda : {1e-4, 1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2}) {
        grid.push_back({RidgeParams{lambda}, intercept});
      }
      break;
    case RegressorKind::kHuber:
      for (double delta : {1.0, 1.35, 2.0}) {
        for (double alpha : {0.0, 1e-3, 1e-1}) grid.push_back({HuberParams{delta, alpha}, intercept});
      }
      break;
    case RegressorKind::kKrr:
      for (double gamma : {1e-3, 1e-2, 1e-1, 1.0, 10.0}) {
        for (double lambda : {1e-4, 1e-3, 1e-2, 1e-1, 1.0}) {
          grid.push_back({KrrParams{gamma, lambda}, intercept});
        }
      }
      break;
    case RegressorKind::kKnn:
      for (int k : {1, 3, 5, 10, 20, 50}) grid.push_back({KnnParams{k}, intercept});
      break;
  }
  return grid;
}

std::vector<double> DomainBalancedWeights(const MultiDomainDataset& dataset) {
  std::vector<double> w;
  for (const auto& d : dataset.domains) {
    w.insert(w.end(), d.size(), 1.0 / static_cast<double>(d.size()));
  }
  return w;
}

namespace {

struct Fold {
  RowMatrix x;
  std::vector<double> t;
  std::vector<double> w;
};

Fold BuildFold(const MultiDomainDataset& cal, std::span<const double> per_domain_t,
               std::size_t held_out, bool reweight) {
  Eigen::Index rows = 0;
  for (std::size_t k = 0; k < cal.domains.size(); ++k) {
    if (k != held_out) rows += static_cast<Eigen::Index>(cal.domains[k].size());
  }
  Fold f;
  f.x.resize(rows, cal.embedding_dim);
  Eigen::Index r = 0;
  for (std::size_t k = 0; k < cal.domains.size(); ++k) {
    if (k == held_out) continue;
    const auto& d = cal.domains[k];
    const auto n = static_cast<Eigen::Index>(d.size());
    f.x.middleRows(r, n) = d.embeddings;
    f.t.insert(f.t.end(), d.size(), per_domain_t[k]);
    if (reweight) f.w.insert(f.w.end(), d.size(), 1.0 / static_cast<double>(d.size()));
    r += n;
  }
  return f;
}

double HeldOutEce(const FittedRegressor& reg, const DomainDataset& d, const SelectionOptions& opt) {
  const std::size_t n = d.size();
  std::vector<double> temps(n);
  std::vector<std::uint8_t> correct(n);
  for (std::size_t i = 0; i < n; ++i) {
    temps[i] = std::clamp(reg.Predict(d.embedding_row(i)), opt.t_min, opt.t_max);
    correct[i] = Predict(d.logits_row(i)) == d.labels[i];
  }
  std::vector<double> conf(n);
  kernels::parallel::Confidences({d.logits.data(), static_cast<std::size_t>(d.logits.size())},
                                 d.num_classes(), temps, conf);
  return Ece(conf, correct, opt.bins).ece;
}

void CheckSelectionInputs(const MultiDomainDataset& cal, std::span<const double> per_domain_t) {
  if (cal.domains.size() < 2) {
    throw Error(ErrorCode::kTooFewDomains, "leave-one-domain-out needs at least 2 domains");
  }
  if (per_domain_t.size() != cal.domains.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "one temperature per calibration domain required");
  }
}

}  // namespace

double LodoMdece(const RegressorSpec& spec, const MultiDomainDataset& calibration,
                 std::span<const double> per_domain_t, const SelectionOptions& options) {
  const RegressorSpec grid[] = {spec};
  return SelectHyperparams(grid, calibration, per_domain_t, options).scores.front();
}

SelectionResult SelectHyperparams(std::span<const RegressorSpec> grid,
                                  const MultiDomainDataset& calibration,
                                  std::span<const double> per_domain_t,
                                  const SelectionOptions& options) {
  if (grid.empty()) throw Error(ErrorCode::kInvalidArgument, "empty hyperparameter grid");
  CheckSelectionInputs(calibration, per_domain_t);
  for (const auto& s : grid) s.Validate();

  const std::size_t num_domains = calibration.domains.size();
  std::vector<Fold> folds;
  folds.reserve(num_domains);
  for (std::size_t k = 0; k < num_domains; ++k) {
    folds.push_back(BuildFold(calibration, per_domain_t, k, options.domain_reweighting));
  }

  // Every (grid point, fold) cell is independent; the reduction below reads
  // them in declared order.
  const std::size_t cells = grid.size() * num_domains;
  std::vector<double> fold_ece(cells, 0.0);
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (std::size_t c = 0; c < cells; ++c) {
    try {
      const std::size_t g = c / num_domains;
      const std::size_t k = c % num_domains;
      RegressorFitOptions fit_opt;
      fit_opt.krr_max_support = options.krr_max_support;
      fit_opt.weights = folds[k].w;
      const auto reg = Fit(grid[g], folds[k].x, folds[k].t, fit_opt);
      fold_ece[c] = HeldOutEce(reg, calibration.domains[k], options);
    } catch (...) {
#pragma omp critical(mdts_select_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  SelectionResult result;
  result.scores.resize(grid.size());
  std::size_t best = 0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    double total = 0.0;
    for (std::size_t k = 0; k < num_domains; ++k) total += fold_ece[g * num_domains + k];
    result.scores[g] = total / static_cast<double>(num_domains);
    if (result.scores[g] < result.scores[best]) best = g;
  }
  result.best = grid[best];
  return result;
}

}  // namespace mdts
