#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dpcpt/change_test.hpp"
#include "dpcpt/contamination.hpp"
#include "dpcpt/fit.hpp"
#include "dpcpt/model.hpp"

namespace dpcpt {

// One Monte Carlo condition: a data-generating setup evaluated at a grid of
// DP orders and nominal levels. theta1, when present, switches the regime at
// the middle time floor(n/2) with the intensity recursion carried across.
struct ExperimentConfig {
  ParamVector theta0;
  std::optional<ParamVector> theta1;
  std::size_t n = 300;
  int replications = 1000;
  std::vector<double> alphas = {0.0, 0.1, 0.2, 0.3, 0.5, 1.0};
  std::vector<double> levels = {0.05, 0.10};
  std::optional<ContaminationSpec> contamination;
  bool io_propagate = true;
  std::size_t burn_in = 1000;
  std::uint64_t base_seed = 1;
  int workers = 0;  // 0 = DPCPT_THREADS env or hardware
  FitOptions fit_options;
};

struct CellResult {
  double rate = 0.0;
  double mc_se = 0.0;
  int rejections = 0;
  int successes = 0;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::map<double, std::map<double, CellResult>> cells;  // [alpha][level]
  std::map<double, int> failures;                        // per alpha, excluded from rates
  double wall_seconds = 0.0;
};

// Runs every replication (seed base_seed + r) through simulation, optional
// contamination and the change test at each alpha, tallying rejections
// against the limit-law critical values. Deterministic for a given config and
// base_seed regardless of worker count. Aborts when more than 10% of the
// replications fail for some alpha.
ExperimentResult run_experiment(const ExperimentConfig& config);

// Contaminated-to-clean rejection rate ratio d_alpha at one (alpha, level).
double compute_d_ratio(const ExperimentResult& contaminated, const ExperimentResult& clean,
                       double alpha, double level);

enum class TableFormat { csv, json };

struct TableRow {
  std::string theta0;
  std::string theta1;
  std::size_t n = 0;
  std::string contamination_kind;  // "AO" | "IO" | ""
  std::optional<double> p;
  std::optional<double> gamma;
  double alpha = 0.0;
  double level = 0.0;
  double rate = 0.0;
  double mc_se = 0.0;
  std::optional<double> d_ratio;
  int failures = 0;
  std::uint64_t seed = 0;
};

std::vector<TableRow> rows_from_results(const std::vector<ExperimentResult>& results);

// Renders result rows (one per alpha x level, d_ratio filled for contaminated
// results with a clean twin in the list). Rates carry four decimals.
std::string emit_table(const std::vector<ExperimentResult>& results, TableFormat format);

std::vector<TableRow> parse_table_csv(const std::string& text);

}  // namespace dpcpt
