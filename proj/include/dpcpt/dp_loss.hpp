#pragma once

#include <cstdint>
#include <vector>

#include "dpcpt/model.hpp"

namespace dpcpt {

// Density power divergence order. alpha = 0 selects the log-likelihood branch
// of the loss exactly.
struct DpOrder {
  double alpha = 0.0;

  DpOrder() = default;
  explicit DpOrder(double a);
};

// Relative truncation tolerance for the infinite Poisson power series. Fixed
// module-wide so harness results stay bit-stable; exposed as a parameter only
// on poisson_power_sum for testing.
inline constexpr double kSeriesTol = 1e-12;

// log(x!) with a precomputed table for small x and lgamma beyond it.
double log_factorial(std::int64_t x);

// S(lambda, alpha) = sum_{y>=0} pmf(y; lambda)^{1+alpha}, in (0, 1], equal to
// 1 exactly when alpha = 0. The sum runs to at least
// ceil(lambda + 12 sqrt(lambda) + 30) and past that until five consecutive
// terms fall below tol * current sum.
double poisson_power_sum(double lambda, double alpha, double tol = kSeriesTol);

// Per-observation DP loss:
//   alpha = 0:  lambda - x log lambda + log(x!)
//   alpha > 0:  S(lambda, alpha) - (1 + 1/alpha) pmf(x; lambda)^alpha
double dp_loss_term(double lambda, std::int64_t x, double alpha);

// d/dlambda of dp_loss_term.
double dp_loss_dlambda(double lambda, std::int64_t x, double alpha);

// Conditional variance of the loss derivative under the model,
//   E[ dp_loss_dlambda(lambda, X, alpha)^2 ],  X ~ Poisson(lambda)
//     = (1+alpha)^2 ( sum_y pmf^{1+2 alpha} (y/lambda - 1)^2 - C^2 ),
//   C = sum_y pmf^{1+alpha} (y/lambda - 1).
// Reduces to 1/lambda (the Poisson Fisher information in lambda) at alpha = 0.
// The change test normalizes its score partial sums with this model-based
// variance so that outlier-inflated scores are not absorbed into the
// denominator.
double dp_score_conditional_variance(double lambda, double alpha);

// Batch version reusing the alpha-dependent factor tables; one instance per
// thread.
class ConditionalVarianceEvaluator {
 public:
  explicit ConditionalVarianceEvaluator(double alpha);
  double operator()(double lambda);

 private:
  double alpha_;
  std::vector<double> ipow_a1_;  // y^{-(1+alpha)}
  std::vector<double> ipow_a2_;  // y^{-(1+2 alpha)}
};

// Per-t loss gradients d/dtheta of the DP loss at each observation.
struct ScoreSequence {
  Matrix terms;  // n x d, row t = dl/dlambda(lambda_t, x_t) * dlambda_t/dtheta

  Vector sum() const { return terms.colwise().sum().transpose(); }
  Vector partial_sum(Eigen::Index k) const {  // rows 0..k-1
    return terms.topRows(k).colwise().sum().transpose();
  }
};

// H(theta) = sum_t dp_loss_term(lambda_t, x_t, alpha) along the fitted
// intensity path started at lambda1.
double objective(const ModelSpec& model, const ParamVector& theta, const CountSeries& series,
                 DpOrder alpha, double lambda1);

ScoreSequence score_sequence(const ModelSpec& model, const ParamVector& theta,
                             const CountSeries& series, DpOrder alpha, double lambda1);

// Fused evaluator used by the optimizer: computes the objective and its
// gradient in one pass over the series, reusing buffers between calls. One
// instance per thread; construction is cheap.
class ObjectiveEvaluator {
 public:
  ObjectiveEvaluator(const ModelSpec& model, const CountSeries& series, DpOrder alpha,
                     double lambda1);

  // Skips parameter validation so finite-difference probes may step slightly
  // outside the feasible set; throws NumericalError on non-finite values.
  double value(const ParamVector& theta);
  double value_and_gradient(const ParamVector& theta, Vector& grad_out);
  void score_terms(const ParamVector& theta, Matrix& terms_out);

  double lambda1() const { return lambda1_; }
  std::size_t n() const { return series_->size(); }

 private:
  const ModelSpec* model_;
  const CountSeries* series_;
  double alpha_;
  double lambda1_;
  std::vector<double> lambda_;
  Matrix grad_;

  // alpha-dependent factor table: ipow_[y] = y^{-(1+alpha)} for y >= 1.
  std::vector<double> ipow_;
  void ensure_table(std::size_t cap);

  // Accumulates S = sum pmf^{1+alpha} and D = sum pmf^{1+alpha} (y/lambda - 1).
  void power_sums(double lambda, double& s, double& d);

  // Loss and d(loss)/dlambda for one observation.
  void loss_pair(double lambda, std::int64_t x, double& loss, double& dloss);
};

}  // namespace dpcpt
