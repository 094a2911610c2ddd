#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace dpcpt {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Lower bound on every conditional intensity (delta_L). Also the floor applied
// to a lambda_1 of zero before the first Poisson draw.
inline constexpr double kIntensityFloor = 1e-4;

// Margin keeping a + b strictly below one (delta_S), so the feasible set for
// the linear model is {w >= delta_L, a >= 0, b >= 0, a + b <= 1 - delta_S}.
inline constexpr double kContractionMargin = 1e-3;

// Model parameter theta. For the built-in linear model the layout is
// (w, a, b): intercept, intensity feedback, observation feedback.
struct ParamVector {
  Vector values;

  ParamVector() = default;
  explicit ParamVector(Vector v) : values(std::move(v)) {}
  static ParamVector linear(double w, double a, double b) {
    Vector v(3);
    v << w, a, b;
    return ParamVector(std::move(v));
  }

  Eigen::Index dim() const { return values.size(); }
  double operator[](Eigen::Index i) const { return values[i]; }
  double& operator[](Eigen::Index i) { return values[i]; }

  double w() const { return values[0]; }
  double a() const { return values[1]; }
  double b() const { return values[2]; }
};

// Observed counts X_1..X_n.
struct CountSeries {
  std::vector<std::int64_t> x;

  CountSeries() = default;
  explicit CountSeries(std::vector<std::int64_t> values) : x(std::move(values)) {}

  std::size_t size() const { return x.size(); }
  std::int64_t operator[](std::size_t t) const { return x[t]; }
  double mean() const;
};

// Per-t fitted intensities and, when requested, their parameter gradients.
// lambda[t] and grad.row(t) refer to time t + 1 in one-based notation.
struct IntensityPath {
  std::vector<double> lambda;
  Matrix grad;     // n x d; empty (0 x 0) when only intensities were computed
  double lambda1 = 0.0;  // initial value actually used, after flooring

  bool has_gradient() const { return grad.size() > 0; }
};

// Intensity map lambda_t = f_theta(lambda_{t-1}, x_{t-1}) together with the
// partial derivatives needed by the gradient recursion. The built-in linear
// model is special-cased throughout for speed; custom maps must be positive
// (>= kIntensityFloor) on the admissible range and declare a contraction
// bound < 1. Those obligations cannot be verified here and rest on the caller.
class ModelSpec {
 public:
  using IntensityFn = std::function<double(const ParamVector&, double lambda, double x)>;
  using ThetaGradFn = std::function<Vector(const ParamVector&, double lambda, double x)>;
  using LambdaDerivFn = std::function<double(const ParamVector&, double lambda, double x)>;

  static ModelSpec linear_ingarch();
  static ModelSpec custom(int dim, IntensityFn f, ThetaGradFn df_dtheta,
                          LambdaDerivFn df_dlambda, double contraction_bound);

  bool is_linear() const { return linear_; }
  int dim() const { return dim_; }

  double intensity(const ParamVector& theta, double lambda, double x) const;
  Vector intensity_dtheta(const ParamVector& theta, double lambda, double x) const;
  double intensity_dlambda(const ParamVector& theta, double lambda, double x) const;

  // Contraction coefficient kappa: a + b for the linear model, the declared
  // bound otherwise.
  double contraction(const ParamVector& theta) const;

 private:
  ModelSpec() = default;

  bool linear_ = true;
  int dim_ = 3;
  IntensityFn f_;
  ThetaGradFn df_dtheta_;
  LambdaDerivFn df_dlambda_;
  double contraction_bound_ = 0.0;
};

struct ValidationReport {
  bool ok = true;
  std::vector<std::string> violations;
};

// Checks the parameter constraints; throws DimensionError on a size mismatch.
ValidationReport validate_params(const ModelSpec& model, const ParamVector& theta);

// Throws InvalidParameterError listing every violated constraint.
void require_valid(const ModelSpec& model, const ParamVector& theta);

// Runs the intensity recursion lambda_t = f(lambda_{t-1}, x_{t-1}) from
// lambda1 (floored at kIntensityFloor). Gradients are left empty.
IntensityPath intensity_filter(const ModelSpec& model, const ParamVector& theta,
                               const CountSeries& series, double lambda1);

// Same recursion plus the chain-rule gradient path:
//   grad_1 = 0,  grad_t = df/dtheta + df/dlambda * grad_{t-1}.
IntensityPath intensity_and_gradient_filter(const ModelSpec& model, const ParamVector& theta,
                                            const CountSeries& series, double lambda1);

struct SimulationResult {
  CountSeries x;
  std::vector<double> lambda;  // latent intensities of the retained window
};

// Draws X_t ~ Poisson(lambda_t) along the recursion, discards the first
// burn_in pairs and returns the next n. lambda1 defaults to zero (floored
// before the first draw). Deterministic given the seed.
SimulationResult simulate(const ModelSpec& model, const ParamVector& theta, std::size_t n,
                          std::size_t burn_in, std::uint64_t seed, double lambda1 = 0.0);

// Closed-form first moment w / (1 - a - b); linear model only.
double stationary_mean(const ModelSpec& model, const ParamVector& theta);

namespace detail {
// Recursion cores without validation, writing into caller-owned buffers; used
// by the fit loop and by finite-difference probes at slightly infeasible
// points. lambda_out must have size n; grad_out either 0 x 0 or n x d.
void run_intensity_recursion(const ModelSpec& model, const ParamVector& theta,
                             const CountSeries& series, double lambda1,
                             std::vector<double>& lambda_out, Matrix* grad_out);
}  // namespace detail

}  // namespace dpcpt
