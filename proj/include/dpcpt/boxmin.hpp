#pragma once

#include <functional>

#include "dpcpt/model.hpp"

namespace dpcpt {

// Objective callback: fills grad and returns the value.
using ValueAndGradientFn = std::function<double(const Vector&, Vector&)>;
using ValueFn = std::function<double(const Vector&)>;
// Projection onto the feasible set, in place.
using ProjectFn = std::function<void(Vector&)>;

struct SpgOptions {
  int max_iterations = 500;
  double tolerance = 1e-7;  // absolute sup-norm of the projected gradient step
  int history = 10;         // nonmonotone line-search window
  double armijo = 1e-4;
  double step_min = 1e-12;
  double step_max = 1e10;
  int max_backtracks = 60;
};

struct MinimizeResult {
  Vector x;
  double value = 0.0;
  Vector gradient;
  int iterations = 0;
  bool converged = false;
};

// Spectral projected gradient (Birgin, Martinez, Raydan) over a convex set
// given by its projection operator. Throws NumericalError if the objective
// goes non-finite at a feasible point.
MinimizeResult spg_minimize(const ValueAndGradientFn& fn, const ProjectFn& project,
                            const Vector& x0, const SpgOptions& options);

struct NelderMeadOptions {
  int max_iterations = 2000;
  double initial_scale = 0.1;  // relative simplex size
  double f_tolerance = 1e-10;
  double x_tolerance = 1e-9;
};

// Derivative-free fallback: Nelder-Mead on f composed with the projection.
MinimizeResult nelder_mead_minimize(const ValueFn& fn, const ProjectFn& project,
                                    const Vector& x0, const NelderMeadOptions& options);

}  // namespace dpcpt
