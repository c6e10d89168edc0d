#pragma once

// Independent reference implementations used only by tests. None of these
// call into the library's numerical code; they share only the data types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "mdts/dataset.hpp"

namespace oracle {

inline long double LogSumExp(const double* z, int j, long double inv_t) {
  long double m = z[0];
  for (int c = 1; c < j; ++c) m = std::max<long double>(m, z[c]);
  long double s = 0.0L;
  for (int c = 0; c < j; ++c) s += std::exp((z[c] - m) * inv_t);
  return m * inv_t + std::log(s);
}

inline long double Nll(const mdts::DomainDataset& d, double t) {
  const int j = d.num_classes();
  const long double inv_t = 1.0L / t;
  long double total = 0.0L;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double* z = d.logits.data() + i * j;
    total += LogSumExp(z, j, inv_t) - z[d.labels[i]] * inv_t;
  }
  return total;
}

inline double GridPoint(double t_min, double t_max, int points, int i) {
  return t_min * std::pow(t_max / t_min, static_cast<double>(i) / (points - 1));
}

// Minimizer of the NLL over a log-spaced grid. The NLL is convex in 1/T,
// so along the grid it is unimodal: bisect on the sign of the forward
// difference, then rescan a window around the hit.
inline double GridTs(const mdts::DomainDataset& d, double t_min = 0.05, double t_max = 50.0,
                     int points = 100000) {
  const auto f = [&](int i) { return oracle::Nll(d, GridPoint(t_min, t_max, points, i)); };
  int lo = 0, hi = points - 1;
  while (hi - lo > 2) {
    const int mid = lo + (hi - lo) / 2;
    if (f(mid + 1) < f(mid)) {
      lo = mid + 1;
    } else {
      hi = mid;
    }
  }
  const int from = std::max(0, lo - 8);
  const int to = std::min(points - 1, hi + 8);
  int best = from;
  long double best_v = f(from);
  for (int i = from + 1; i <= to; ++i) {
    const long double v = f(i);
    if (v < best_v) {
      best_v = v;
      best = i;
    }
  }
  return GridPoint(t_min, t_max, points, best);
}

// Every grid point, no structure assumed.
inline double FullScanTs(const mdts::DomainDataset& d, double t_min = 0.05, double t_max = 50.0,
                         int points = 100000) {
  int best = 0;
  long double best_v = std::numeric_limits<long double>::infinity();
  for (int i = 0; i < points; ++i) {
    const long double v = oracle::Nll(d, GridPoint(t_min, t_max, points, i));
    if (v < best_v) {
      best_v = v;
      best = i;
    }
  }
  return GridPoint(t_min, t_max, points, best);
}

inline double Confidence(const double* z, int j, double t) {
  long double m = z[0];
  for (int c = 1; c < j; ++c) m = std::max<long double>(m, z[c]);
  long double s = 0.0L;
  for (int c = 0; c < j; ++c) s += std::exp((z[c] - m) / t);
  return static_cast<double>(1.0L / s);
}

inline int Argmax(const double* z, int j) {
  int best = 0;
  for (int c = 1; c < j; ++c) {
    if (z[c] > z[best]) best = c;
  }
  return best;
}

// Solves the normal equations (X'X) beta = X't by Gaussian elimination with
// partial pivoting. With intercept, beta has one extra trailing entry.
inline std::vector<double> NormalEquations(const std::vector<std::vector<double>>& x,
                                           const std::vector<double>& t, bool intercept) {
  const std::size_t p = x.front().size() + (intercept ? 1 : 0);
  std::vector<std::vector<long double>> a(p, std::vector<long double>(p + 1, 0.0L));
  for (std::size_t i = 0; i < x.size(); ++i) {
    std::vector<long double> row(x[i].begin(), x[i].end());
    if (intercept) row.push_back(1.0L);
    for (std::size_t r = 0; r < p; ++r) {
      for (std::size_t c = 0; c < p; ++c) a[r][c] += row[r] * row[c];
      a[r][p] += row[r] * t[i];
    }
  }
  for (std::size_t col = 0; col < p; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < p; ++r) {
      if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
    }
    if (std::fabs(a[piv][col]) < 1e-300L) throw std::runtime_error("singular normal equations");
    std::swap(a[piv], a[col]);
    for (std::size_t r = 0; r < p; ++r) {
      if (r == col) continue;
      const long double factor = a[r][col] / a[col][col];
      for (std::size_t c = col; c <= p; ++c) a[r][c] -= factor * a[col][c];
    }
  }
  std::vector<double> beta(p);
  for (std::size_t r = 0; r < p; ++r) beta[r] = static_cast<double>(a[r][p] / a[r][r]);
  return beta;
}

// ECE with every sample checked against every bin's edges.
inline double Ece(const std::vector<double>& conf, const std::vector<bool>& correct, int m) {
  const std::size_t n = conf.size();
  long double total = 0.0L;
  for (int b = 1; b <= m; ++b) {
    const double lo = static_cast<double>(b - 1) / m;
    const double hi = static_cast<double>(b) / m;
    long double sum_c = 0.0L, sum_a = 0.0L;
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const bool in = (conf[i] > lo && conf[i] <= hi) || (b == 1 && conf[i] == 0.0);
      if (!in) continue;
      ++count;
      sum_c += conf[i];
      sum_a += correct[i] ? 1.0L : 0.0L;
    }
    if (count > 0) total += std::fabs(sum_a - sum_c) / n;
  }
  return static_cast<double>(total);
}

// Triple loop over (h, h', t) with each indicator evaluated per sample.
inline double HDivergence(const mdts::DomainDataset& a, const mdts::DomainDataset& b,
                          const std::vector<double>& temps, const std::vector<double>& thresholds) {
  const auto rate = [](const mdts::DomainDataset& d, double tg, double th, double t) {
    std::size_t hits = 0;
    const int j = d.num_classes();
    for (std::size_t i = 0; i < d.size(); ++i) {
      const double* z = d.logits.data() + i * j;
      if (std::fabs(Confidence(z, j, tg) - Confidence(z, j, th)) > t) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(d.size());
  };
  double best = 0.0;
  for (double tg : temps) {
    for (double th : temps) {
      for (double t : thresholds) best = std::max(best, std::fabs(rate(a, tg, th, t) - rate(b, tg, th, t)));
    }
  }
  return best;
}

inline double Risk(const mdts::DomainDataset& d, double t) {
  long double s = 0.0L;
  const int j = d.num_classes();
  for (std::size_t i = 0; i < d.size(); ++i) {
    s += std::fabs((*d.oracle_conf)[i] - Confidence(d.logits.data() + i * j, j, t));
  }
  return static_cast<double>(s / d.size());
}

// min over h_T of sum_k alpha_k risk(h_T, D_k) + risk(h_T, OOD).
inline double Lambda(const std::vector<mdts::DomainDataset>& ind, const std::vector<double>& alpha,
                     const mdts::DomainDataset& ood, const std::vector<double>& temps) {
  double best = std::numeric_limits<double>::infinity();
  for (double t : temps) {
    double mix = 0.0;
    for (std::size_t k = 0; k < ind.size(); ++k) mix += alpha[k] * Risk(ind[k], t);
    best = std::min(best, mix + Risk(ood, t));
  }
  return best;
}

// Mixture-vs-OOD divergence, mixture rates as alpha-weighted domain rates.
inline double MixtureHDivergence(const std::vector<mdts::DomainDataset>& ind, const std::vector<double>& alpha,
                                 const mdts::DomainDataset& ood, const std::vector<double>& temps,
                                 const std::vector<double>& thresholds) {
  const auto rate = [](const mdts::DomainDataset& d, double tg, double th, double t) {
    std::size_t hits = 0;
    const int j = d.num_classes();
    for (std::size_t i = 0; i < d.size(); ++i) {
      const double* z = d.logits.data() + i * j;
      if (std::fabs(Confidence(z, j, tg) - Confidence(z, j, th)) > t) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(d.size());
  };
  double best = 0.0;
  for (double tg : temps) {
    for (double th : temps) {
      for (double t : thresholds) {
        double mix = 0.0;
        for (std::size_t k = 0; k < ind.size(); ++k) mix += alpha[k] * rate(ind[k], tg, th, t);
        best = std::max(best, std::fabs(mix - rate(ood, tg, th, t)));
      }
    }
  }
  return best;
}

// Isotonic fit via the min-max formula: value_i = max_{j<=i} min_{l>=i}
// mean(y[j..l]), on points already sorted by x.
inline std::vector<double> Isotonic(const std::vector<double>& y) {
  const std::size_t n = y.size();
  std::vector<long double> prefix(n + 1, 0.0L);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + y[i];
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    long double best = -std::numeric_limits<long double>::infinity();
    for (std::size_t j = 0; j <= i; ++j) {
      long double inner = std::numeric_limits<long double>::infinity();
      for (std::size_t l = i; l < n; ++l) {
        inner = std::min(inner, (prefix[l + 1] - prefix[j]) / static_cast<long double>(l - j + 1));
      }
      best = std::max(best, inner);
    }
    out[i] = static_cast<double>(best);
  }
  return out;
}

// Mean target of the k nearest rows; ties by lower index.
inline double Knn(const std::vector<std::vector<double>>& x, const std::vector<double>& t,
                  const std::vector<double>& q, int k) {
  std::vector<std::pair<double, std::size_t>> d;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double s = 0.0;
    for (std::size_t c = 0; c < q.size(); ++c) s += (x[i][c] - q[c]) * (x[i][c] - q[c]);
    d.emplace_back(s, i);
  }
  std::sort(d.begin(), d.end());
  const std::size_t kk = std::min<std::size_t>(k, d.size());
  long double s = 0.0L;
  for (std::size_t i = 0; i < kk; ++i) s += t[d[i].second];
  return static_cast<double>(s / kk);
}

}  // namespace oracle
