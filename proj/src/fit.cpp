#include "dpcpt/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dpcpt/boxmin.hpp"
#include "dpcpt/errors.hpp"
#include "dpcpt/rng.hpp"

namespace dpcpt {
namespace {

constexpr std::uint64_t kJitterSeed = 0x5eed0f17u;
constexpr double kBoundaryTolerance = 1e-6;

// Lexicographic comparison used to break objective ties deterministically.
bool lex_less(const Vector& a, const Vector& b) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) return a[i] < b[i];
  }
  return false;
}

double autocovariance(const std::vector<std::int64_t>& x, double mean, std::size_t lag) {
  const std::size_t n = x.size();
  double acc = 0.0;
  for (std::size_t t = lag; t < n; ++t) {
    acc += (static_cast<double>(x[t]) - mean) * (static_cast<double>(x[t - lag]) - mean);
  }
  return acc / static_cast<double>(n);
}

// Closed-form lag-1 autocorrelation of the linear model at persistence
// phi = a + b:  rho(1) = b (1 - a phi) / (1 - phi^2 + b^2); increasing in b
// from 0 at b = 0 to phi at b = phi.
double linear_rho1(double phi, double b) {
  const double a = phi - b;
  return b * (1.0 - a * phi) / (1.0 - phi * phi + b * b);
}

}  // namespace

bool Box::contains(const Vector& v, double slack) const {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (v[i] < lo[i] - slack || v[i] > hi[i] + slack) return false;
  }
  return true;
}

double Lambda1::resolve(const CountSeries& series) const {
  if (!use_mean_) return value_;
  return series.mean();
}

bool FitResult::any_boundary() const {
  return std::any_of(on_boundary.begin(), on_boundary.end(), [](bool b) { return b; });
}

Box default_box(const ModelSpec& model, const CountSeries& series) {
  if (!model.is_linear()) {
    throw InvalidParameterError("custom models require an explicit parameter_box");
  }
  // The feedback coefficients are allowed slightly below zero during
  // optimization: the finite-sample minimizer at weak persistence sits below
  // a = 0 in a nontrivial share of samples, and clamping there breaks the
  // first-order condition the change statistic is anchored on. Model
  // validation (simulation, stationarity) still requires a, b >= 0.
  Box box;
  box.lo = Vector(3);
  box.hi = Vector(3);
  const double mean = std::max(series.mean(), 1.0);
  box.lo << kIntensityFloor, -0.5, -0.5;
  box.hi << std::max(20.0, 10.0 * mean), 1.0 - kContractionMargin, 1.0 - kContractionMargin;
  return box;
}

void project_feasible(const ModelSpec& model, const Box& box, Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    v[i] = std::clamp(v[i], box.lo[i], box.hi[i]);
  }
  if (!model.is_linear()) return;
  const double c = 1.0 - kContractionMargin;
  double a = v[1], b = v[2];
  if (std::fabs(a) + std::fabs(b) <= c) return;
  if (a >= 0.0 && b >= 0.0 && box.lo[1] >= 0.0 && box.lo[2] >= 0.0) {
    // Nearest point on the segment a + b = c within the box rectangle.
    const double lo_a = std::max(box.lo[1], c - box.hi[2]);
    const double hi_a = std::min(box.hi[1], c - box.lo[2]);
    a = std::clamp((a - b + c) / 2.0, lo_a, hi_a);
    b = c - a;
  } else {
    // General case: alternate the L1-ball soft-threshold projection with the
    // box clamp; converges in a handful of rounds for this 2-d set.
    for (int round = 0; round < 32; ++round) {
      const double excess = std::fabs(a) + std::fabs(b) - c;
      if (excess <= 1e-15) break;
      const double shift = excess / 2.0;
      a = std::copysign(std::max(std::fabs(a) - shift, 0.0), a);
      b = std::copysign(std::max(std::fabs(b) - shift, 0.0), b);
      a = std::clamp(a, box.lo[1], box.hi[1]);
      b = std::clamp(b, box.lo[2], box.hi[2]);
    }
    if (std::fabs(a) + std::fabs(b) > c) {
      const double scale = c / (std::fabs(a) + std::fabs(b));
      a *= scale;
      b *= scale;
    }
  }
  v[1] = a;
  v[2] = b;
}

ParamVector mom_initialize(const CountSeries& series) {
  const std::size_t n = series.size();
  if (n < 10) throw DataError("moment initializer needs at least 10 observations");
  const double mean = series.mean();
  if (!(mean > 0.0)) throw DataError("moment initializer needs a positive sample mean");
  const double c0 = autocovariance(series.x, mean, 0);
  if (c0 <= 0.0) throw DataError("constant series has no autocorrelation structure");

  const double rho1 = autocovariance(series.x, mean, 1) / c0;
  const double rho2 = autocovariance(series.x, mean, 2) / c0;

  auto fallback = [&] { return ParamVector::linear(0.7 * mean, 0.1, 0.2); };
  if (!(rho1 > 0.0) || !std::isfinite(rho1) || !std::isfinite(rho2)) {
    return fallback();
  }
  double phi = rho2 / rho1;
  if (!std::isfinite(phi)) return fallback();
  phi = std::clamp(phi, 0.05, 1.0 - 2.0 * kContractionMargin);

  // Recover b from rho(1) at fixed persistence by bisection.
  const double target = std::clamp(rho1, 1e-9, phi * (1.0 - 1e-9));
  double lo = 0.0, hi = phi;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (linear_rho1(phi, mid) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double b = 0.5 * (lo + hi);
  const double a = phi - b;
  const double w = mean * (1.0 - phi);
  ParamVector theta = ParamVector::linear(w, a, b);
  if (!theta.values.allFinite()) return fallback();
  return theta;
}

FitResult fit(const ModelSpec& model, const CountSeries& series, DpOrder alpha,
              const FitOptions& options, Lambda1 lambda1) {
  const std::size_t n = series.size();
  if (n < static_cast<std::size_t>(model.dim()) + 1) {
    throw DataError("series shorter than parameter dimension + 1");
  }
  const Box box = options.parameter_box ? *options.parameter_box : default_box(model, series);
  const double lam1 = lambda1.resolve(series);

  ObjectiveEvaluator evaluator(model, series, alpha, lam1);
  auto project = [&](Vector& v) { project_feasible(model, box, v); };
  // Infeasible intensities inside the relaxed box surface as +inf so the line
  // search backs off instead of aborting the start.
  auto value_and_grad = [&](const Vector& x, Vector& g) {
    try {
      return evaluator.value_and_gradient(ParamVector(x), g);
    } catch (const NumericalError&) {
      g.setZero();
      return std::numeric_limits<double>::infinity();
    }
  };
  auto value_only = [&](const Vector& x) {
    try {
      return evaluator.value(ParamVector(x));
    } catch (const NumericalError&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  // Moment start (box midpoint for custom models) plus deterministic jitters.
  std::vector<Vector> starts;
  {
    Vector s0;
    if (model.is_linear()) {
      try {
        s0 = mom_initialize(series).values;
      } catch (const DataError&) {
        s0 = 0.5 * (box.lo + box.hi);
      }
    } else {
      s0 = 0.5 * (box.lo + box.hi);
    }
    project(s0);
    starts.push_back(s0);
    Rng jitter(kJitterSeed);
    for (int r = 0; r < options.restarts; ++r) {
      Vector s = s0;
      for (Eigen::Index i = 0; i < s.size(); ++i) {
        const double width = box.hi[i] - box.lo[i];
        s[i] += (jitter.uniform() - 0.5) * 0.2 * width;
      }
      project(s);
      starts.push_back(s);
    }
  }

  SpgOptions spg;
  spg.max_iterations = options.max_iterations;
  spg.tolerance = options.gradient_tolerance * static_cast<double>(n);

  std::optional<MinimizeResult> best;
  for (const Vector& start : starts) {
    std::optional<MinimizeResult> run;
    try {
      run = spg_minimize(value_and_grad, project, start, spg);
    } catch (const NumericalError&) {
      // Derivative-free fallback, then a gradient polish from its solution.
      try {
        NelderMeadOptions nm;
        const MinimizeResult rough = nelder_mead_minimize(value_only, project, start, nm);
        run = spg_minimize(value_and_grad, project, rough.x, spg);
      } catch (const NumericalError&) {
        continue;
      }
    }
    if (!run || !std::isfinite(run->value)) continue;
    if (!best || run->value < best->value ||
        (run->value == best->value && lex_less(run->x, best->x))) {
      best = std::move(run);
    }
  }
  if (!best) throw OptimizationError("all optimization starts failed");

  FitResult result;
  result.theta_hat = ParamVector(best->x);
  result.alpha = alpha.alpha;
  result.objective_value = best->value;
  result.converged = best->converged;
  result.iterations = best->iterations;
  result.lambda1 = lam1;

  result.on_boundary.assign(static_cast<std::size_t>(model.dim()), false);
  for (Eigen::Index i = 0; i < best->x.size(); ++i) {
    if (best->x[i] - box.lo[i] <= kBoundaryTolerance ||
        box.hi[i] - best->x[i] <= kBoundaryTolerance) {
      result.on_boundary[static_cast<std::size_t>(i)] = true;
    }
  }
  if (model.is_linear() && std::fabs(best->x[1]) + std::fabs(best->x[2]) >=
                               1.0 - kContractionMargin - kBoundaryTolerance) {
    result.on_boundary[1] = true;
    result.on_boundary[2] = true;
  }

  if (options.with_information) {
    result.k_hat = k_hat(model, result.theta_hat, series, alpha, lam1);
    result.j_hat = j_hat(model, result.theta_hat, series, alpha, lam1);
    result.sandwich_covariance = sandwich_covariance(result.j_hat, result.k_hat, n);
  }
  return result;
}

Matrix k_hat(const ModelSpec& model, const ParamVector& theta, const CountSeries& series,
             DpOrder alpha, double lambda1) {
  ObjectiveEvaluator evaluator(model, series, alpha, lambda1);
  Matrix terms;
  evaluator.score_terms(theta, terms);
  const double scale = 1.0 / (std::pow(1.0 + alpha.alpha, 2) * static_cast<double>(terms.rows()));
  Matrix k = scale * (terms.transpose() * terms);
  return 0.5 * (k + k.transpose());
}

Matrix j_hat(const ModelSpec& model, const ParamVector& theta, const CountSeries& series,
             DpOrder alpha, double lambda1) {
  ObjectiveEvaluator evaluator(model, series, alpha, lambda1);
  const auto d = model.dim();
  Matrix hessian(d, d);
  Vector grad_plus(d), grad_minus(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const double h = 1e-5 * std::max(1.0, std::fabs(theta[i]));
    ParamVector probe = theta;
    probe[i] = theta[i] + h;
    evaluator.value_and_gradient(probe, grad_plus);
    probe[i] = theta[i] - h;
    evaluator.value_and_gradient(probe, grad_minus);
    hessian.col(i) = (grad_plus - grad_minus) / (2.0 * h);
  }
  if (!hessian.allFinite()) throw NumericalError("non-finite Hessian in J_hat");
  const double scale = 1.0 / ((1.0 + alpha.alpha) * static_cast<double>(series.size()));
  Matrix j = scale * hessian;
  return 0.5 * (j + j.transpose());
}

Matrix sandwich_covariance(const Matrix& j, const Matrix& k, std::size_t n) {
  Eigen::SelfAdjointEigenSolver<Matrix> jeig(j);
  const Vector& jvals = jeig.eigenvalues();
  const double jmax = jvals.cwiseAbs().maxCoeff();
  if (!(jmax > 0.0)) throw NumericalError("J_hat is zero");
  Vector inv = jvals;
  for (Eigen::Index i = 0; i < inv.size(); ++i) {
    if (std::fabs(inv[i]) < 1e-12 * jmax) throw NumericalError("J_hat is singular");
    inv[i] = 1.0 / inv[i];
  }
  const Matrix j_inv = jeig.eigenvectors() * inv.asDiagonal() * jeig.eigenvectors().transpose();
  Matrix cov = j_inv * k * j_inv / static_cast<double>(n);
  cov = 0.5 * (cov + cov.transpose());

  Eigen::SelfAdjointEigenSolver<Matrix> ceig(cov);
  Vector cvals = ceig.eigenvalues();
  for (Eigen::Index i = 0; i < cvals.size(); ++i) {
    if (cvals[i] < -1e-10) throw NumericalError("sandwich covariance has a negative eigenvalue");
    if (cvals[i] < 0.0) cvals[i] = 0.0;
  }
  return ceig.eigenvectors() * cvals.asDiagonal() * ceig.eigenvectors().transpose();
}

}  // namespace dpcpt
