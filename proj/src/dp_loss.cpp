#include "dpcpt/dp_loss.hpp"

#include <algorithm>
#include <cmath>

#include "dpcpt/errors.hpp"

namespace dpcpt {
namespace {

constexpr std::size_t kLogFactTableSize = 4096;

// Fast-path guard: the leading series term exp(-(1+alpha)*lambda) must not
// underflow, otherwise the multiplicative recurrence loses the whole sum.
constexpr double kFastPathExponentLimit = 650.0;

std::size_t series_cap(double lambda) {
  return static_cast<std::size_t>(std::ceil(lambda + 12.0 * std::sqrt(lambda) + 30.0));
}

double log_poisson_pmf(double lambda, double y) {
  return -lambda + y * std::log(lambda) - std::lgamma(y + 1.0);
}

}  // namespace

DpOrder::DpOrder(double a) : alpha(a) {
  if (!(a >= 0.0) || !std::isfinite(a)) {
    throw InvalidParameterError("DP order alpha must be finite and >= 0");
  }
}

double log_factorial(std::int64_t x) {
  static const std::vector<double> table = [] {
    std::vector<double> t(kLogFactTableSize);
    t[0] = 0.0;
    for (std::size_t k = 1; k < kLogFactTableSize; ++k) {
      t[k] = t[k - 1] + std::log(static_cast<double>(k));
    }
    return t;
  }();
  if (x < 0) throw DataError("log_factorial of negative value");
  if (static_cast<std::size_t>(x) < kLogFactTableSize) return table[static_cast<std::size_t>(x)];
  return std::lgamma(static_cast<double>(x) + 1.0);
}

namespace {

// Shared series accumulation:
//   S = sum_y pmf(y; lambda)^{1+alpha}
//   D = sum_y pmf(y; lambda)^{1+alpha} (y/lambda - 1)
// ipow, when provided, caches y^{-(1+alpha)} for the multiplicative
// recurrence; otherwise every term is evaluated in log space.
void accumulate_power_sums(double lambda, double alpha, double tol,
                           const std::vector<double>* ipow, double& s_out, double& d_out) {
  if (lambda <= 0.0 || !std::isfinite(lambda)) {
    throw NumericalError("poisson power sum requires positive finite lambda");
  }
  const double ap1 = 1.0 + alpha;
  const std::size_t cap = series_cap(lambda);
  const std::size_t hard_stop = cap + 200000;
  const double inv_lambda = 1.0 / lambda;

  double s = 0.0, d = 0.0;
  int consecutive_small = 0;
  std::size_t next = 0;  // index of the term about to be added
  auto add = [&](double term) {
    s += term;
    d += term * (static_cast<double>(next) * inv_lambda - 1.0);
    if (next > 0 && term < tol * s) {
      ++consecutive_small;
    } else {
      consecutive_small = 0;
    }
    ++next;
  };
  // Stop once the last added index reached the cap and five consecutive terms
  // were negligible (or at the hard stop).
  auto finished = [&] {
    return (next > cap && consecutive_small >= 5) || next > hard_stop;
  };

  const bool fast =
      ipow != nullptr && ap1 * lambda < kFastPathExponentLimit && ipow->size() > cap + 8;
  if (fast) {
    const double lam_pow = std::pow(lambda, ap1);
    const std::size_t table_limit = ipow->size() - 1;
    double q = std::exp(-ap1 * lambda);
    add(q);  // y = 0
    while (!finished() && next <= table_limit) {
      q *= lam_pow * (*ipow)[next];
      add(q);
    }
  }
  // Per-term log-space evaluation: the whole sum when no usable factor table
  // exists, or the (defensive) continuation past the table end.
  while (!finished()) {
    add(std::exp(ap1 * log_poisson_pmf(lambda, static_cast<double>(next))));
  }
  if (!std::isfinite(s) || !std::isfinite(d)) {
    throw NumericalError("poisson power sum did not stay finite");
  }
  s_out = s;
  d_out = d;
}

void build_ipow_table(double alpha, std::size_t cap, std::vector<double>& table) {
  const std::size_t need = cap + 16;
  const std::size_t old = table.size();
  if (old >= need) return;
  table.resize(need);
  if (old == 0) table[0] = 0.0;  // unused; y starts at 1
  const double ap1 = 1.0 + alpha;
  for (std::size_t y = std::max<std::size_t>(old, 1); y < need; ++y) {
    table[y] = std::pow(static_cast<double>(y), -ap1);
  }
}

double pmf_power_alpha(double lambda, std::int64_t x, double alpha) {
  return std::exp(alpha * (-lambda + static_cast<double>(x) * std::log(lambda) -
                           log_factorial(x)));
}

}  // namespace

double poisson_power_sum(double lambda, double alpha, double tol) {
  if (alpha == 0.0) return 1.0;  // pmf normalization, exact
  if (!(tol > 0.0)) throw InvalidParameterError("tol must be positive");
  std::vector<double> ipow;
  build_ipow_table(alpha, series_cap(lambda), ipow);
  double s, d;
  accumulate_power_sums(lambda, alpha, tol, &ipow, s, d);
  return s;
}

double dp_loss_term(double lambda, std::int64_t x, double alpha) {
  if (alpha == 0.0) {
    return lambda - static_cast<double>(x) * std::log(lambda) + log_factorial(x);
  }
  const double s = poisson_power_sum(lambda, alpha, kSeriesTol);
  return s - (1.0 + 1.0 / alpha) * pmf_power_alpha(lambda, x, alpha);
}

double dp_loss_dlambda(double lambda, std::int64_t x, double alpha) {
  if (alpha == 0.0) return 1.0 - static_cast<double>(x) / lambda;
  std::vector<double> ipow;
  build_ipow_table(alpha, series_cap(lambda), ipow);
  double s, d;
  accumulate_power_sums(lambda, alpha, kSeriesTol, &ipow, s, d);
  const double ap1 = 1.0 + alpha;
  const double pa = pmf_power_alpha(lambda, x, alpha);
  return ap1 * d - ap1 * pa * (static_cast<double>(x) / lambda - 1.0);
}

ObjectiveEvaluator::ObjectiveEvaluator(const ModelSpec& model, const CountSeries& series,
                                       DpOrder alpha, double lambda1)
    : model_(&model),
      series_(&series),
      alpha_(alpha.alpha),
      lambda1_(std::max(lambda1, kIntensityFloor)) {
  if (series.size() == 0) throw DataError("empty series");
  lambda_.resize(series.size());
  // Pre-size the factor table for intensities up to a generous multiple of the
  // sample maximum; extended on demand if the recursion exceeds it.
  if (alpha_ > 0.0) {
    const double xmax =
        static_cast<double>(*std::max_element(series.x.begin(), series.x.end()));
    ensure_table(series_cap(4.0 * xmax + 64.0));
  }
}

void ObjectiveEvaluator::ensure_table(std::size_t cap) {
  build_ipow_table(alpha_, cap, ipow_);
}

void ObjectiveEvaluator::power_sums(double lambda, double& s, double& d) {
  if (ipow_.size() < series_cap(lambda) + 8) ensure_table(series_cap(lambda));
  accumulate_power_sums(lambda, alpha_, kSeriesTol, &ipow_, s, d);
}

void ObjectiveEvaluator::loss_pair(double lambda, std::int64_t x, double& loss, double& dloss) {
  if (lambda <= 0.0 || !std::isfinite(lambda)) {
    throw NumericalError("non-positive intensity in loss evaluation");
  }
  const double xd = static_cast<double>(x);
  if (alpha_ == 0.0) {
    if (x == 0) {
      loss = lambda;
      dloss = 1.0;
    } else {
      loss = lambda - xd * std::log(lambda) + log_factorial(x);
      dloss = 1.0 - xd / lambda;
    }
    return;
  }
  double s, d;
  power_sums(lambda, s, d);
  const double ap1 = 1.0 + alpha_;
  const double pa = pmf_power_alpha(lambda, x, alpha_);
  loss = s - (1.0 + 1.0 / alpha_) * pa;
  dloss = ap1 * d - ap1 * pa * (xd / lambda - 1.0);
}

double ObjectiveEvaluator::value(const ParamVector& theta) {
  detail::run_intensity_recursion(*model_, theta, *series_, lambda1_, lambda_, nullptr);
  double obj = 0.0;
  double l, dl;
  for (std::size_t t = 0; t < lambda_.size(); ++t) {
    loss_pair(lambda_[t], series_->x[t], l, dl);
    obj += l;
  }
  if (!std::isfinite(obj)) throw NumericalError("non-finite objective");
  return obj;
}

double ObjectiveEvaluator::value_and_gradient(const ParamVector& theta, Vector& grad_out) {
  const auto n = static_cast<Eigen::Index>(series_->size());
  if (grad_.rows() != n) grad_.resize(n, model_->dim());
  detail::run_intensity_recursion(*model_, theta, *series_, lambda1_, lambda_, &grad_);
  grad_out = Vector::Zero(model_->dim());
  double obj = 0.0;
  double l, dl;
  for (Eigen::Index t = 0; t < n; ++t) {
    loss_pair(lambda_[static_cast<std::size_t>(t)], series_->x[static_cast<std::size_t>(t)], l,
              dl);
    obj += l;
    grad_out.noalias() += dl * grad_.row(t).transpose();
  }
  if (!std::isfinite(obj) || !grad_out.allFinite()) {
    throw NumericalError("non-finite objective gradient");
  }
  return obj;
}

void ObjectiveEvaluator::score_terms(const ParamVector& theta, Matrix& terms_out) {
  const auto n = static_cast<Eigen::Index>(series_->size());
  if (grad_.rows() != n) grad_.resize(n, model_->dim());
  detail::run_intensity_recursion(*model_, theta, *series_, lambda1_, lambda_, &grad_);
  terms_out.resize(n, model_->dim());
  double l, dl;
  for (Eigen::Index t = 0; t < n; ++t) {
    loss_pair(lambda_[static_cast<std::size_t>(t)], series_->x[static_cast<std::size_t>(t)], l,
              dl);
    terms_out.row(t) = dl * grad_.row(t);
  }
  if (!terms_out.allFinite()) throw NumericalError("non-finite score terms");
}

ConditionalVarianceEvaluator::ConditionalVarianceEvaluator(double alpha) : alpha_(alpha) {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw InvalidParameterError("alpha must be finite and >= 0");
  }
}

double ConditionalVarianceEvaluator::operator()(double lambda) {
  if (lambda <= 0.0 || !std::isfinite(lambda)) {
    throw NumericalError("conditional score variance requires positive lambda");
  }
  if (alpha_ == 0.0) return 1.0 / lambda;  // Poisson Fisher information in lambda

  const double a1 = 1.0 + alpha_;
  const double a2 = 1.0 + 2.0 * alpha_;
  const std::size_t cap = series_cap(lambda) + 5;
  const double inv_lambda = 1.0 / lambda;

  double c = 0.0, m = 0.0;
  const bool fast = a2 * lambda < kFastPathExponentLimit;
  if (fast) {
    build_ipow_table(alpha_, cap, ipow_a1_);
    build_ipow_table(2.0 * alpha_, cap, ipow_a2_);
    const double pow1 = std::pow(lambda, a1);
    const double pow2 = std::pow(lambda, a2);
    double q1 = std::exp(-a1 * lambda);
    double q2 = std::exp(-a2 * lambda);
    c = -q1;
    m = q2;
    for (std::size_t y = 1; y <= cap; ++y) {
      q1 *= pow1 * ipow_a1_[y];
      q2 *= pow2 * ipow_a2_[y];
      const double u = static_cast<double>(y) * inv_lambda - 1.0;
      c += q1 * u;
      m += q2 * u * u;
    }
  } else {
    for (std::size_t y = 0; y <= cap; ++y) {
      const double logpmf = log_poisson_pmf(lambda, static_cast<double>(y));
      const double u = static_cast<double>(y) * inv_lambda - 1.0;
      c += std::exp(a1 * logpmf) * u;
      m += std::exp(a2 * logpmf) * u * u;
    }
  }
  const double variance = a1 * a1 * (m - c * c);
  if (!std::isfinite(variance) || variance < 0.0) {
    throw NumericalError("conditional score variance not finite");
  }
  return variance;
}

double dp_score_conditional_variance(double lambda, double alpha) {
  ConditionalVarianceEvaluator eval(alpha);
  return eval(lambda);
}

double objective(const ModelSpec& model, const ParamVector& theta, const CountSeries& series,
                 DpOrder alpha, double lambda1) {
  require_valid(model, theta);
  ObjectiveEvaluator eval(model, series, alpha, lambda1);
  return eval.value(theta);
}

ScoreSequence score_sequence(const ModelSpec& model, const ParamVector& theta,
                             const CountSeries& series, DpOrder alpha, double lambda1) {
  require_valid(model, theta);
  ObjectiveEvaluator eval(model, series, alpha, lambda1);
  ScoreSequence seq;
  eval.score_terms(theta, seq.terms);
  return seq;
}

}  // namespace dpcpt
