#include "dpcpt/rng.hpp"

#include <cmath>

namespace dpcpt {
namespace {

// Switch point between inversion and PTRD. PTRD is valid for mean >= 10;
// inversion stays fast and exact below 30.
constexpr double kPtrdThreshold = 30.0;

double log_factorial(std::int64_t k) { return std::lgamma(static_cast<double>(k) + 1.0); }

}  // namespace

double Rng::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double m = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * m;
  have_spare_ = true;
  return u * m;
}

std::int64_t Rng::poisson(double mean) {
  if (mean <= 0.0) return 0;
  if (mean < kPtrdThreshold) return poisson_inversion(mean);
  return poisson_ptrd(mean);
}

std::int64_t Rng::poisson_inversion(double mean) {
  // Sequential search through the CDF; exact for mean small enough that
  // exp(-mean) does not underflow (guaranteed by kPtrdThreshold).
  const double p0 = std::exp(-mean);
  double p = p0;
  double cdf = p;
  const double u = uniform();
  std::int64_t k = 0;
  while (u > cdf) {
    ++k;
    p *= mean / static_cast<double>(k);
    cdf += p;
    if (k > 2000) break;  // u ~ 1 and accumulated roundoff; tail is immaterial
  }
  return k;
}

std::int64_t Rng::poisson_ptrd(double mean) {
  // Hormann (1993), "The transformed rejection method for generating Poisson
  // random variables", algorithm PTRD.
  const double mu = mean;
  const double smu = std::sqrt(mu);
  const double b = 0.931 + 2.53 * smu;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double v_r = 0.9277 - 3.6224 / (b - 2.0);

  for (;;) {
    double u = uniform() - 0.5;
    double v = uniform();
    const double us = 0.5 - std::fabs(u);
    const double k = std::floor((2.0 * a / us + b) * u + mu + 0.43);
    if (us >= 0.07 && v <= v_r) return static_cast<std::int64_t>(k);
    if (k < 0.0 || (us < 0.013 && v > us)) continue;
    const double lhs = std::log(v * inv_alpha / (a / (us * us) + b));
    const double rhs = k * std::log(mu) - mu - log_factorial(static_cast<std::int64_t>(k));
    if (lhs <= rhs) return static_cast<std::int64_t>(k);
  }
}

}  // namespace dpcpt
