#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "dpcpt/model.hpp"

namespace dpcpt {

// Contamination variables always run on the stream seeded seed ^ this tag, so
// the clean draws of a replication are untouched when contamination is
// toggled and paired clean/contaminated comparisons share the base series.
inline constexpr std::uint64_t kContaminationSeedTag = 0x9e3779b97f4a7c15ull;

enum class OutlierKind { additive, innovation };

struct ContaminationSpec {
  OutlierKind kind = OutlierKind::additive;
  double p = 0.0;      // Bernoulli hit probability per time step
  double gamma = 1.0;  // Poisson mean of the contaminating draw

  void validate() const;
};

struct ContaminatedSeries {
  CountSeries x;                        // X_o,t = X_t + p_t X_c,t
  std::vector<std::uint8_t> indicator;  // the Bernoulli hits p_t
};

// X_o,t = X_t + p_t X_c,t with p_t ~ Bernoulli(p) and X_c,t ~ Poisson(gamma),
// all independent of the series. Deterministic given the seed; pass the
// replication's base seed, the tag split happens inside.
ContaminatedSeries contaminate_ao(const CountSeries& series, const ContaminationSpec& spec,
                                  std::uint64_t seed);

// Formula application with injected contamination variables (test seam).
ContaminatedSeries apply_ao(const CountSeries& series, const std::vector<std::uint8_t>& hits,
                            const std::vector<std::int64_t>& draws);

struct IoSimulationResult {
  CountSeries x;
  std::vector<double> lambda;           // contaminated intensities lambda_o,t
  std::vector<std::uint8_t> indicator;  // p_t over the retained window
};

// Simulates the process with innovation outliers: at each retained step
// lambda_o,t = lambda_t + p_t lambda_c,t and X_t ~ Poisson(lambda_o,t). By
// default the contaminated intensity also feeds the next recursion step
// (full-replacement reading); propagate_contaminated = false keeps the clean
// intensity in the recursion for sensitivity runs. Burn-in steps are clean.
// With p = 0 output is bitwise identical to simulate() at the same seed.
IoSimulationResult simulate_io(const ModelSpec& model, const ParamVector& theta, std::size_t n,
                               std::size_t burn_in, const ContaminationSpec& spec,
                               std::uint64_t seed, bool propagate_contaminated = true,
                               double lambda1 = 0.0);

namespace detail {

// Shared generator behind simulate(), simulate_io() and the experiment
// harness: optional mid-sample parameter change (theta1 governs retained
// steps after change_at) and optional innovation contamination.
struct GeneratorPlan {
  ParamVector theta0;
  std::optional<ParamVector> theta1;
  std::size_t change_at = 0;  // 1-based retained index of the last theta0 step
  std::size_t n = 0;
  std::size_t burn_in = 0;
  double lambda1 = 0.0;
  std::optional<ContaminationSpec> io;
  bool io_propagate = true;
};

struct GeneratorOutput {
  CountSeries x;
  std::vector<double> lambda;
  std::vector<std::uint8_t> indicator;
};

GeneratorOutput run_generator(const ModelSpec& model, const GeneratorPlan& plan,
                              std::uint64_t seed);

}  // namespace detail

}  // namespace dpcpt
