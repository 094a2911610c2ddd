// Independent reference implementations for the tests: deliberately plain
// loops over std containers, no shared code with the library internals.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

namespace oracle {

inline double log_pmf(std::int64_t x, double lambda) {
  return -lambda + static_cast<double>(x) * std::log(lambda) -
         std::lgamma(static_cast<double>(x) + 1.0);
}

// Brute-force sum of pmf^{1+alpha} in extended precision.
inline double power_sum(double lambda, double alpha, int terms = 4000) {
  long double total = 0.0L;
  for (int y = 0; y < terms; ++y) {
    total += std::exp(static_cast<long double>((1.0 + alpha) * log_pmf(y, lambda)));
  }
  return static_cast<double>(total);
}

// Brute-force DP loss and its lambda-derivative.
inline double dp_loss(double lambda, std::int64_t x, double alpha, int terms = 4000) {
  if (alpha == 0.0) return lambda - x * std::log(lambda) + std::lgamma(x + 1.0);
  return power_sum(lambda, alpha, terms) -
         (1.0 + 1.0 / alpha) * std::exp(alpha * log_pmf(x, lambda));
}

inline double dp_loss_dlambda(double lambda, std::int64_t x, double alpha, int terms = 4000) {
  if (alpha == 0.0) return 1.0 - static_cast<double>(x) / lambda;
  long double inner = 0.0L;
  for (int y = 0; y < terms; ++y) {
    inner += std::exp(static_cast<long double>((1.0 + alpha) * log_pmf(y, lambda))) *
             (y / lambda - 1.0);
  }
  const double pa = std::exp(alpha * log_pmf(x, lambda));
  return (1.0 + alpha) * (static_cast<double>(inner) - pa * (x / lambda - 1.0));
}

// Linear-model intensity and gradient recursions, written independently.
inline std::vector<double> intensity_path(double w, double a, double b,
                                          const std::vector<std::int64_t>& x, double lambda1) {
  std::vector<double> lam(x.size());
  lam[0] = std::max(lambda1, 1e-4);
  for (std::size_t t = 1; t < x.size(); ++t) {
    lam[t] = w + a * lam[t - 1] + b * static_cast<double>(x[t - 1]);
  }
  return lam;
}

inline std::vector<std::array<double, 3>> gradient_path(double a,
                                                        const std::vector<double>& lam,
                                                        const std::vector<std::int64_t>& x) {
  std::vector<std::array<double, 3>> g(x.size(), {0.0, 0.0, 0.0});
  for (std::size_t t = 1; t < x.size(); ++t) {
    g[t][0] = 1.0 + a * g[t - 1][0];
    g[t][1] = lam[t - 1] + a * g[t - 1][1];
    g[t][2] = static_cast<double>(x[t - 1]) + a * g[t - 1][2];
  }
  return g;
}

// Poisson negative log-likelihood of the linear model (alpha = 0 objective).
inline double poisson_nll(double w, double a, double b, const std::vector<std::int64_t>& x,
                          double lambda1) {
  const auto lam = intensity_path(w, a, b, x, lambda1);
  double total = 0.0;
  for (std::size_t t = 0; t < x.size(); ++t) total -= log_pmf(x[t], lam[t]);
  return total;
}

// Score-test statistic at a given parameter: Fisher-scored partial sums
//   T = max_k (1/n) S_k' I_n^{-1} S_k,  I_n = n^{-1} sum g g' / lambda.
inline double score_test_statistic(double w, double a, double b,
                                   const std::vector<std::int64_t>& x, double lambda1) {
  const std::size_t n = x.size();
  const auto lam = intensity_path(w, a, b, x, lambda1);
  const auto g = gradient_path(a, lam, x);
  double info[3][3] = {};
  for (std::size_t t = 0; t < n; ++t) {
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) info[i][j] += g[t][i] * g[t][j] / lam[t];
  }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) info[i][j] /= static_cast<double>(n);

  // 3x3 inverse by adjugate.
  const double det = info[0][0] * (info[1][1] * info[2][2] - info[1][2] * info[2][1]) -
                     info[0][1] * (info[1][0] * info[2][2] - info[1][2] * info[2][0]) +
                     info[0][2] * (info[1][0] * info[2][1] - info[1][1] * info[2][0]);
  double inv[3][3];
  inv[0][0] = (info[1][1] * info[2][2] - info[1][2] * info[2][1]) / det;
  inv[0][1] = (info[0][2] * info[2][1] - info[0][1] * info[2][2]) / det;
  inv[0][2] = (info[0][1] * info[1][2] - info[0][2] * info[1][1]) / det;
  inv[1][0] = (info[1][2] * info[2][0] - info[1][0] * info[2][2]) / det;
  inv[1][1] = (info[0][0] * info[2][2] - info[0][2] * info[2][0]) / det;
  inv[1][2] = (info[0][2] * info[1][0] - info[0][0] * info[1][2]) / det;
  inv[2][0] = (info[1][0] * info[2][1] - info[1][1] * info[2][0]) / det;
  inv[2][1] = (info[0][1] * info[2][0] - info[0][0] * info[2][1]) / det;
  inv[2][2] = (info[0][0] * info[1][1] - info[0][1] * info[1][0]) / det;

  double best = -1.0;
  double s[3] = {};
  for (std::size_t k = 0; k < n; ++k) {
    const double d = 1.0 - static_cast<double>(x[k]) / lam[k];
    for (int i = 0; i < 3; ++i) s[i] += d * g[k][i];
    double q = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) q += s[i] * inv[i][j] * s[j];
    q /= static_cast<double>(n);
    if (q > best) best = q;
  }
  return best;
}

// Nelder-Mead over (w, a, b) with |a|+|b| kept inside the contraction region;
// used as the independently coded maximum-likelihood fit.
inline std::array<double, 3> mle_nelder_mead(const std::vector<std::int64_t>& x,
                                             double lambda1) {
  auto objective = [&](std::array<double, 3> p) {
    if (p[0] < 1e-4 || std::fabs(p[1]) + std::fabs(p[2]) > 0.995) {
      return std::numeric_limits<double>::infinity();
    }
    const auto lam = intensity_path(p[0], p[1], p[2], x, lambda1);
    for (double l : lam) {
      if (l <= 1e-12) return std::numeric_limits<double>::infinity();
    }
    return poisson_nll(p[0], p[1], p[2], x, lambda1);
  };

  double mean = 0.0;
  for (auto v : x) mean += static_cast<double>(v);
  mean /= static_cast<double>(x.size());
  std::array<double, 3> start{0.7 * mean, 0.1, 0.2};

  auto run = [&](std::array<double, 3> s0, double scale) {
    std::array<std::array<double, 3>, 4> simplex;
    std::array<double, 4> value;
    simplex[0] = s0;
    for (int i = 1; i < 4; ++i) {
      simplex[i] = s0;
      simplex[i][i - 1] += scale * std::max(0.2, std::fabs(s0[i - 1]));
    }
    for (int i = 0; i < 4; ++i) value[i] = objective(simplex[i]);
    for (int iter = 0; iter < 4000; ++iter) {
      int lo = 0, hi = 0, second = 0;
      for (int i = 1; i < 4; ++i) {
        if (value[i] < value[lo]) lo = i;
        if (value[i] > value[hi]) hi = i;
      }
      second = lo;
      for (int i = 0; i < 4; ++i) {
        if (i != hi && value[i] > value[second]) second = i;
      }
      if (std::fabs(value[hi] - value[lo]) < 1e-13 * (1.0 + std::fabs(value[lo]))) break;
      std::array<double, 3> centroid{};
      for (int i = 0; i < 4; ++i) {
        if (i == hi) continue;
        for (int j = 0; j < 3; ++j) centroid[j] += simplex[i][j] / 3.0;
      }
      auto blend = [&](double t) {
        std::array<double, 3> p;
        for (int j = 0; j < 3; ++j) p[j] = centroid[j] + t * (simplex[hi][j] - centroid[j]);
        return p;
      };
      const auto refl = blend(-1.0);
      const double f_refl = objective(refl);
      if (f_refl < value[lo]) {
        const auto expd = blend(-2.0);
        const double f_expd = objective(expd);
        if (f_expd < f_refl) {
          simplex[hi] = expd;
          value[hi] = f_expd;
        } else {
          simplex[hi] = refl;
          value[hi] = f_refl;
        }
      } else if (f_refl < value[second]) {
        simplex[hi] = refl;
        value[hi] = f_refl;
      } else {
        const auto contr = blend(0.5);
        const double f_contr = objective(contr);
        if (f_contr < value[hi]) {
          simplex[hi] = contr;
          value[hi] = f_contr;
        } else {
          for (int i = 0; i < 4; ++i) {
            if (i == lo) continue;
            for (int j = 0; j < 3; ++j) {
              simplex[i][j] = simplex[lo][j] + 0.5 * (simplex[i][j] - simplex[lo][j]);
            }
            value[i] = objective(simplex[i]);
          }
        }
      }
    }
    int lo = 0;
    for (int i = 1; i < 4; ++i) {
      if (value[i] < value[lo]) lo = i;
    }
    return simplex[lo];
  };

  // Two rounds: a coarse solve, then a tight restart from its solution.
  auto mid = run(start, 0.5);
  return run(run(mid, 0.1), 0.01);
}

// Critical value of sup |B(s)|^2 for one standard Brownian bridge at the
// given upper-tail level, via the Kolmogorov series
//   P(sup|B| > x) = 2 sum_{k>=1} (-1)^{k+1} exp(-2 k^2 x^2).
inline double kolmogorov_sq_critical(double level) {
  auto tail = [](double x) {
    double total = 0.0;
    for (int k = 1; k <= 100; ++k) {
      const double term = 2.0 * std::exp(-2.0 * k * k * x * x);
      total += (k % 2 == 1) ? term : -term;
    }
    return total;
  };
  double lo = 0.2, hi = 3.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (tail(mid) > level) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double x = 0.5 * (lo + hi);
  return x * x;
}

}  // namespace oracle
