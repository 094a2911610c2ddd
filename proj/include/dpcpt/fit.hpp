#pragma once

#include <optional>
#include <vector>

#include "dpcpt/dp_loss.hpp"
#include "dpcpt/model.hpp"

namespace dpcpt {

// Per-coordinate closed intervals realizing the compact parameter space. For
// the linear model the joint constraint a + b <= 1 - delta_S is enforced on
// top of the box by the feasibility projection.
struct Box {
  Vector lo, hi;

  bool contains(const Vector& v, double slack = 0.0) const;
};

// Initial value policy for the intensity recursion: the sample mean of the
// series (default for fitting and testing) or a fixed constant.
class Lambda1 {
 public:
  static Lambda1 sample_mean() { return Lambda1(true, 0.0); }
  static Lambda1 fixed(double value) { return Lambda1(false, value); }

  double resolve(const CountSeries& series) const;

 private:
  Lambda1(bool use_mean, double value) : use_mean_(use_mean), value_(value) {}
  bool use_mean_;
  double value_;
};

struct FitOptions {
  int max_iterations = 500;
  // Convergence test on the projected-gradient sup-norm, scaled by n.
  double gradient_tolerance = 1e-7;
  std::optional<Box> parameter_box;  // defaults to a data-driven box (linear model)
  int restarts = 2;                  // extra jittered starts beyond the moment start
  bool with_information = true;      // compute K_hat / J_hat / sandwich on the winner
};

struct FitResult {
  ParamVector theta_hat;
  double alpha = 0.0;
  double objective_value = 0.0;
  bool converged = false;
  int iterations = 0;
  std::vector<bool> on_boundary;  // per coordinate
  Matrix k_hat;
  Matrix j_hat;
  Matrix sandwich_covariance;  // J^-1 K J^-1 / n
  double lambda1 = 0.0;        // initial intensity used by the fit

  bool any_boundary() const;
};

// Default parameter box for the linear model, scaled to the data.
Box default_box(const ModelSpec& model, const CountSeries& series);

// Projection onto the feasible set (box plus, for the linear model, the
// a + b <= 1 - delta_S triangle).
void project_feasible(const ModelSpec& model, const Box& box, Vector& v);

// Method-of-moments initializer for the linear model: persistence a + b from
// the autocorrelation decay rho(2)/rho(1), b recovered by bisection against
// the closed-form rho(1), w from the stationary mean. Falls back to
// (0.7 mean, 0.1, 0.2) when the sample autocorrelations are unusable.
ParamVector mom_initialize(const CountSeries& series);

// Minimum density power divergence estimate over the feasible box: spectral
// projected gradient descent with the analytic score, moment start plus
// jittered restarts, Nelder-Mead fallback on numerical failure. Deterministic
// given inputs and options.
FitResult fit(const ModelSpec& model, const CountSeries& series, DpOrder alpha,
              const FitOptions& options = {}, Lambda1 lambda1 = Lambda1::sample_mean());

// K_hat = (1+alpha)^-2 n^-1 sum_t s_t s_t', s_t the per-observation score.
Matrix k_hat(const ModelSpec& model, const ParamVector& theta, const CountSeries& series,
             DpOrder alpha, double lambda1);

// J_hat = (1+alpha)^-1 n^-1 sum_t d2l_t, with the Hessian obtained by central
// finite differences of the analytic score and symmetrized.
Matrix j_hat(const ModelSpec& model, const ParamVector& theta, const CountSeries& series,
             DpOrder alpha, double lambda1);

// J^-1 K J^-1 / n with a PSD projection: eigenvalues in [-1e-10, 0) are
// clipped to zero, anything lower throws NumericalError.
Matrix sandwich_covariance(const Matrix& j, const Matrix& k, std::size_t n);

}  // namespace dpcpt
