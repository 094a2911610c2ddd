#include "dpcpt/model.hpp"

#include <cmath>
#include <sstream>

#include "dpcpt/errors.hpp"
#include "dpcpt/rng.hpp"

namespace dpcpt {

double CountSeries::mean() const {
  if (x.empty()) return 0.0;
  double s = 0.0;
  for (auto v : x) s += static_cast<double>(v);
  return s / static_cast<double>(x.size());
}

ModelSpec ModelSpec::linear_ingarch() {
  ModelSpec m;
  m.linear_ = true;
  m.dim_ = 3;
  return m;
}

ModelSpec ModelSpec::custom(int dim, IntensityFn f, ThetaGradFn df_dtheta,
                            LambdaDerivFn df_dlambda, double contraction_bound) {
  ModelSpec m;
  m.linear_ = false;
  m.dim_ = dim;
  m.f_ = std::move(f);
  m.df_dtheta_ = std::move(df_dtheta);
  m.df_dlambda_ = std::move(df_dlambda);
  m.contraction_bound_ = contraction_bound;
  return m;
}

double ModelSpec::intensity(const ParamVector& theta, double lambda, double x) const {
  if (linear_) return theta.w() + theta.a() * lambda + theta.b() * x;
  return f_(theta, lambda, x);
}

Vector ModelSpec::intensity_dtheta(const ParamVector& theta, double lambda, double x) const {
  if (linear_) {
    Vector g(3);
    g << 1.0, lambda, x;
    return g;
  }
  return df_dtheta_(theta, lambda, x);
}

double ModelSpec::intensity_dlambda(const ParamVector& theta, double lambda, double x) const {
  if (linear_) return theta.a();
  return df_dlambda_(theta, lambda, x);
}

double ModelSpec::contraction(const ParamVector& theta) const {
  if (linear_) return theta.a() + theta.b();
  return contraction_bound_;
}

ValidationReport validate_params(const ModelSpec& model, const ParamVector& theta) {
  if (theta.dim() != model.dim()) {
    std::ostringstream msg;
    msg << "parameter dimension " << theta.dim() << " does not match model dimension "
        << model.dim();
    throw DimensionError(msg.str());
  }
  ValidationReport report;
  auto violate = [&report](const std::string& what) {
    report.ok = false;
    report.violations.push_back(what);
  };
  for (Eigen::Index i = 0; i < theta.dim(); ++i) {
    if (!std::isfinite(theta[i])) violate("non-finite parameter value");
  }
  if (!report.ok) return report;

  if (model.is_linear()) {
    if (theta.w() < kIntensityFloor) violate("w < delta_L");
    if (theta.a() < 0.0) violate("a < 0");
    if (theta.b() < 0.0) violate("b < 0");
    if (theta.a() + theta.b() > 1.0 - kContractionMargin) violate("a+b >= 1-delta_S");
  } else {
    if (model.contraction(theta) >= 1.0) violate("declared contraction bound kappa >= 1");
  }
  return report;
}

void require_valid(const ModelSpec& model, const ParamVector& theta) {
  const ValidationReport report = validate_params(model, theta);
  if (report.ok) return;
  std::ostringstream msg;
  msg << "invalid parameters:";
  for (const auto& v : report.violations) msg << " [" << v << "]";
  throw InvalidParameterError(msg.str());
}

namespace detail {

void run_intensity_recursion(const ModelSpec& model, const ParamVector& theta,
                             const CountSeries& series, double lambda1,
                             std::vector<double>& lambda_out, Matrix* grad_out) {
  const std::size_t n = series.size();
  const double lam1 = std::max(lambda1, kIntensityFloor);
  lambda_out[0] = lam1;
  const bool with_grad = grad_out != nullptr;
  if (with_grad) grad_out->row(0).setZero();  // lambda_1 is a constant in theta

  if (model.is_linear()) {
    const double w = theta.w(), a = theta.a(), b = theta.b();
    double lam = lam1;
    if (with_grad) {
      double g0 = 0.0, g1 = 0.0, g2 = 0.0;
      for (std::size_t t = 1; t < n; ++t) {
        const double xprev = static_cast<double>(series.x[t - 1]);
        const double lam_prev = lam;
        lam = w + a * lam_prev + b * xprev;
        lambda_out[t] = lam;
        const double ng0 = 1.0 + a * g0;
        const double ng1 = lam_prev + a * g1;
        const double ng2 = xprev + a * g2;
        g0 = ng0;
        g1 = ng1;
        g2 = ng2;
        (*grad_out)(t, 0) = g0;
        (*grad_out)(t, 1) = g1;
        (*grad_out)(t, 2) = g2;
      }
    } else {
      for (std::size_t t = 1; t < n; ++t) {
        lam = w + a * lam + b * static_cast<double>(series.x[t - 1]);
        lambda_out[t] = lam;
      }
    }
    return;
  }

  Vector g = Vector::Zero(model.dim());
  double lam = lam1;
  for (std::size_t t = 1; t < n; ++t) {
    const double xprev = static_cast<double>(series.x[t - 1]);
    const double lam_prev = lam;
    lam = model.intensity(theta, lam_prev, xprev);
    if (!std::isfinite(lam)) throw NumericalError("non-finite intensity in recursion");
    lambda_out[t] = lam;
    if (with_grad) {
      g = model.intensity_dtheta(theta, lam_prev, xprev) +
          model.intensity_dlambda(theta, lam_prev, xprev) * g;
      grad_out->row(t) = g.transpose();
    }
  }
}

}  // namespace detail

namespace {

IntensityPath filter_impl(const ModelSpec& model, const ParamVector& theta,
                          const CountSeries& series, double lambda1, bool with_grad) {
  require_valid(model, theta);
  if (series.size() == 0) throw DataError("empty series");
  IntensityPath path;
  path.lambda.resize(series.size());
  path.lambda1 = std::max(lambda1, kIntensityFloor);
  if (with_grad) {
    path.grad.resize(static_cast<Eigen::Index>(series.size()), model.dim());
    detail::run_intensity_recursion(model, theta, series, lambda1, path.lambda, &path.grad);
  } else {
    detail::run_intensity_recursion(model, theta, series, lambda1, path.lambda, nullptr);
  }
  return path;
}

}  // namespace

IntensityPath intensity_filter(const ModelSpec& model, const ParamVector& theta,
                               const CountSeries& series, double lambda1) {
  return filter_impl(model, theta, series, lambda1, false);
}

IntensityPath intensity_and_gradient_filter(const ModelSpec& model, const ParamVector& theta,
                                            const CountSeries& series, double lambda1) {
  return filter_impl(model, theta, series, lambda1, true);
}

SimulationResult simulate(const ModelSpec& model, const ParamVector& theta, std::size_t n,
                          std::size_t burn_in, std::uint64_t seed, double lambda1) {
  require_valid(model, theta);
  Rng rng(seed);
  SimulationResult out;
  out.x.x.reserve(n);
  out.lambda.reserve(n);

  double lam = std::max(lambda1, kIntensityFloor);
  const std::size_t total = burn_in + n;
  for (std::size_t t = 0; t < total; ++t) {
    const std::int64_t draw = rng.poisson(lam);
    if (t >= burn_in) {
      out.x.x.push_back(draw);
      out.lambda.push_back(lam);
    }
    lam = model.intensity(theta, lam, static_cast<double>(draw));
    if (!std::isfinite(lam)) throw NumericalError("non-finite intensity in simulation");
  }
  return out;
}

double stationary_mean(const ModelSpec& model, const ParamVector& theta) {
  if (!model.is_linear()) throw UnsupportedModelError("stationary_mean requires the linear model");
  require_valid(model, theta);
  return theta.w() / (1.0 - theta.a() - theta.b());
}

}  // namespace dpcpt
