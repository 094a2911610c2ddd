#include "dpcpt/boxmin.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "dpcpt/errors.hpp"

namespace dpcpt {
namespace {

double projected_gradient_norm(const Vector& x, const Vector& g, const ProjectFn& project) {
  Vector probe = x - g;
  project(probe);
  return (probe - x).lpNorm<Eigen::Infinity>();
}

}  // namespace

MinimizeResult spg_minimize(const ValueAndGradientFn& fn, const ProjectFn& project,
                            const Vector& x0, const SpgOptions& options) {
  Vector x = x0;
  project(x);
  Vector g(x.size());
  double f = fn(x, g);
  if (!std::isfinite(f)) throw NumericalError("objective non-finite at start");

  std::deque<double> recent{f};
  double step = 1.0;
  {
    const double pg = projected_gradient_norm(x, g, project);
    if (pg > 0.0) step = std::clamp(1.0 / pg, options.step_min, options.step_max);
  }

  MinimizeResult result;
  int iter = 0;
  for (; iter < options.max_iterations; ++iter) {
    if (projected_gradient_norm(x, g, project) <= options.tolerance) {
      result.converged = true;
      break;
    }

    Vector target = x - step * g;
    project(target);
    Vector direction = target - x;
    double slope = g.dot(direction);
    if (slope >= 0.0) {
      // Degenerate direction from an overscaled step; retry with a short one.
      target = x - options.step_min * g;
      project(target);
      direction = target - x;
      slope = g.dot(direction);
      if (slope >= 0.0) {
        result.converged = projected_gradient_norm(x, g, project) <= options.tolerance;
        break;
      }
    }

    const double f_ref = *std::max_element(recent.begin(), recent.end());
    double t = 1.0;
    Vector x_new;
    Vector g_new(x.size());
    double f_new = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int bt = 0; bt < options.max_backtracks; ++bt) {
      x_new = x + t * direction;
      f_new = fn(x_new, g_new);
      if (std::isfinite(f_new) && f_new <= f_ref + options.armijo * t * slope) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      // No acceptable point along the direction; treat as converged only if
      // the projected gradient already meets the tolerance.
      result.converged = projected_gradient_norm(x, g, project) <= options.tolerance;
      break;
    }

    const Vector s = x_new - x;
    const Vector y = g_new - g;
    const double sty = s.dot(y);
    step = sty > 0.0 ? std::clamp(s.squaredNorm() / sty, options.step_min, options.step_max)
                     : options.step_max;

    x = std::move(x_new);
    g = g_new;
    f = f_new;
    recent.push_back(f);
    if (static_cast<int>(recent.size()) > options.history) recent.pop_front();
  }

  result.x = std::move(x);
  result.value = f;
  result.gradient = std::move(g);
  result.iterations = iter;
  if (!result.converged) {
    result.converged = projected_gradient_norm(result.x, result.gradient, project) <=
                       options.tolerance;
  }
  return result;
}

MinimizeResult nelder_mead_minimize(const ValueFn& fn, const ProjectFn& project,
                                    const Vector& x0, const NelderMeadOptions& options) {
  const auto n = x0.size();
  auto eval = [&](const Vector& v) {
    Vector p = v;
    project(p);
    const double val = fn(p);
    return std::isfinite(val) ? val : std::numeric_limits<double>::infinity();
  };

  std::vector<Vector> simplex;
  std::vector<double> values;
  simplex.reserve(n + 1);
  Vector start = x0;
  project(start);
  simplex.push_back(start);
  for (Eigen::Index i = 0; i < n; ++i) {
    Vector v = start;
    const double delta = options.initial_scale * std::max(1.0, std::fabs(v[i]));
    v[i] += delta;
    simplex.push_back(v);
  }
  values.resize(n + 1);
  for (std::size_t i = 0; i < simplex.size(); ++i) values[i] = eval(simplex[i]);

  auto order = [&] {
    std::vector<std::size_t> idx(simplex.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return values[a] < values[b];
    });
    std::vector<Vector> s2;
    std::vector<double> v2;
    for (auto i : idx) {
      s2.push_back(simplex[i]);
      v2.push_back(values[i]);
    }
    simplex = std::move(s2);
    values = std::move(v2);
  };

  int iter = 0;
  for (; iter < options.max_iterations; ++iter) {
    order();
    if (std::fabs(values.back() - values.front()) <
            options.f_tolerance * (1.0 + std::fabs(values.front())) &&
        (simplex.back() - simplex.front()).lpNorm<Eigen::Infinity>() < options.x_tolerance) {
      break;
    }
    Vector centroid = Vector::Zero(n);
    for (std::size_t i = 0; i + 1 < simplex.size(); ++i) centroid += simplex[i];
    centroid /= static_cast<double>(n);

    const Vector reflected = centroid + (centroid - simplex.back());
    const double f_ref = eval(reflected);
    if (f_ref < values.front()) {
      const Vector expanded = centroid + 2.0 * (centroid - simplex.back());
      const double f_exp = eval(expanded);
      if (f_exp < f_ref) {
        simplex.back() = expanded;
        values.back() = f_exp;
      } else {
        simplex.back() = reflected;
        values.back() = f_ref;
      }
    } else if (f_ref < values[values.size() - 2]) {
      simplex.back() = reflected;
      values.back() = f_ref;
    } else {
      const Vector contracted = centroid + 0.5 * (simplex.back() - centroid);
      const double f_con = eval(contracted);
      if (f_con < values.back()) {
        simplex.back() = contracted;
        values.back() = f_con;
      } else {
        for (std::size_t i = 1; i < simplex.size(); ++i) {
          simplex[i] = simplex.front() + 0.5 * (simplex[i] - simplex.front());
          values[i] = eval(simplex[i]);
        }
      }
    }
  }
  order();

  MinimizeResult result;
  result.x = simplex.front();
  project(result.x);
  result.value = values.front();
  result.iterations = iter;
  result.converged = iter < options.max_iterations;
  return result;
}

}  // namespace dpcpt
