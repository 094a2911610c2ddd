#include "dpcpt/contamination.hpp"

#include <cmath>

#include "dpcpt/errors.hpp"
#include "dpcpt/rng.hpp"

namespace dpcpt {

void ContaminationSpec::validate() const {
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidParameterError("contamination p must be in [0,1]");
  if (!(gamma > 0.0)) throw InvalidParameterError("contamination gamma must be positive");
}

ContaminatedSeries contaminate_ao(const CountSeries& series, const ContaminationSpec& spec,
                                  std::uint64_t seed) {
  if (spec.kind != OutlierKind::additive) {
    throw InvalidParameterError("contaminate_ao requires an additive spec");
  }
  spec.validate();
  Rng rng(seed ^ kContaminationSeedTag);
  std::vector<std::uint8_t> hits(series.size());
  std::vector<std::int64_t> draws(series.size());
  for (std::size_t t = 0; t < series.size(); ++t) {
    hits[t] = rng.bernoulli(spec.p) ? 1 : 0;
    draws[t] = rng.poisson(spec.gamma);
  }
  return apply_ao(series, hits, draws);
}

ContaminatedSeries apply_ao(const CountSeries& series, const std::vector<std::uint8_t>& hits,
                            const std::vector<std::int64_t>& draws) {
  if (hits.size() != series.size() || draws.size() != series.size()) {
    throw DimensionError("contamination variables must match the series length");
  }
  ContaminatedSeries out;
  out.x.x.resize(series.size());
  out.indicator = hits;
  for (std::size_t t = 0; t < series.size(); ++t) {
    out.x.x[t] = series.x[t] + (hits[t] ? draws[t] : 0);
  }
  return out;
}

namespace detail {

GeneratorOutput run_generator(const ModelSpec& model, const GeneratorPlan& plan,
                              std::uint64_t seed) {
  require_valid(model, plan.theta0);
  if (plan.theta1) require_valid(model, *plan.theta1);
  if (plan.io) {
    plan.io->validate();
    if (plan.io->kind != OutlierKind::innovation) {
      throw InvalidParameterError("generator contamination must be innovation type");
    }
  }

  Rng base(seed);
  Rng contam(seed ^ kContaminationSeedTag);

  GeneratorOutput out;
  out.x.x.reserve(plan.n);
  out.lambda.reserve(plan.n);
  if (plan.io) out.indicator.reserve(plan.n);

  double lam = std::max(plan.lambda1, kIntensityFloor);
  const std::size_t total = plan.burn_in + plan.n;
  for (std::size_t t = 0; t < total; ++t) {
    const bool retained = t >= plan.burn_in;

    double lam_obs = lam;
    std::uint8_t hit = 0;
    if (retained && plan.io) {
      hit = contam.bernoulli(plan.io->p) ? 1 : 0;
      const auto lam_c = static_cast<double>(contam.poisson(plan.io->gamma));
      if (hit) lam_obs = lam + lam_c;
    }

    const std::int64_t draw = base.poisson(lam_obs);
    if (retained) {
      out.x.x.push_back(draw);
      out.lambda.push_back(lam_obs);
      if (plan.io) out.indicator.push_back(hit);
    }

    // The recursion step computes the intensity of the next observation, so
    // the regime is selected by the 1-based retained index of that target.
    const std::size_t next_index = t + 1 >= plan.burn_in ? t + 2 - plan.burn_in : 0;
    const ParamVector& theta =
        (plan.theta1 && next_index > plan.change_at) ? *plan.theta1 : plan.theta0;
    const double lam_feed = plan.io_propagate ? lam_obs : lam;
    lam = model.intensity(theta, lam_feed, static_cast<double>(draw));
    if (!std::isfinite(lam)) throw NumericalError("non-finite intensity in generator");
  }
  return out;
}

}  // namespace detail

IoSimulationResult simulate_io(const ModelSpec& model, const ParamVector& theta, std::size_t n,
                               std::size_t burn_in, const ContaminationSpec& spec,
                               std::uint64_t seed, bool propagate_contaminated, double lambda1) {
  if (spec.kind != OutlierKind::innovation) {
    throw InvalidParameterError("simulate_io requires an innovation spec");
  }
  detail::GeneratorPlan plan;
  plan.theta0 = theta;
  plan.n = n;
  plan.burn_in = burn_in;
  plan.lambda1 = lambda1;
  plan.io = spec;
  plan.io_propagate = propagate_contaminated;
  detail::GeneratorOutput g = detail::run_generator(model, plan, seed);
  return IoSimulationResult{std::move(g.x), std::move(g.lambda), std::move(g.indicator)};
}

}  // namespace dpcpt
