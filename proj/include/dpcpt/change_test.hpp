#pragma once

#include <cstdint>
#include <map>
#include <shared_mutex>
#include <string>
#include <utility>
#include <vector>

#include "dpcpt/fit.hpp"
#include "dpcpt/model.hpp"

namespace dpcpt {

// Outcome of the DP-score change-point test. trajectory[k-1] holds the
// scanned quadratic form at split k; the statistic is its maximum and
// argmax_k the smallest maximizing split (1-based).
struct TestResult {
  double statistic = 0.0;
  std::vector<double> trajectory;
  std::size_t argmax_k = 0;
  double alpha = 0.0;
  int d = 0;
  std::map<double, double> critical_values;
  std::map<double, bool> reject;
  double ridge_used = 0.0;
  FitResult fit;  // the full-sample estimate behind the statistic
};

// Inverts a symmetric PSD matrix, escalating a ridge epsilon * I through
// {1e-10, 1e-8, 1e-6} * trace/d while the condition number exceeds 1e12.
// Returns the inverse and the ridge actually used; throws SingularKError when
// escalation is exhausted.
std::pair<Matrix, double> invert_k(const Matrix& k);

// Core scan given per-observation scores and K_hat: cumulative score sums
// S_k, trajectory (1+alpha)^-2 n^-1 S_k' K^-1 S_k, max and argmax. Critical
// values and decisions are left empty. Entry point for harnesses and tests
// that inject scores directly.
TestResult statistic_from_scores(const Matrix& score_terms, const Matrix& k, double alpha);

// Empirical upper quantiles of sup_s ||B_d(s)||^2 for d independent standard
// Brownian bridges built on a uniform grid via cumulative Gaussian sums with
// endpoint correction B(s) = W(s) - s W(1). Deterministic given the seed.
std::map<double, double> simulate_sup_bridge_quantiles(int d, int grid, int reps,
                                                       const std::vector<double>& levels,
                                                       std::uint64_t seed, int workers = 0);

// Critical values of the limiting sup||B_d||^2 law, keyed by (d, level).
// d = 3 ships with the Monte Carlo constants 3.027 (5%) and 2.604 (10%);
// anything else is simulated once on first use and cached with provenance.
class CriticalValueTable {
 public:
  enum class Provenance { paper, simulated };

  struct Entry {
    double threshold = 0.0;
    Provenance provenance = Provenance::simulated;
    int grid = 0;
    int reps = 0;
    std::uint64_t seed = 0;
  };

  CriticalValueTable();

  // Returns the threshold, simulating and caching it when absent.
  double lookup(int d, double level);
  Entry entry(int d, double level);

  void set_simulation_defaults(int grid, int reps, std::uint64_t seed);

  void load_csv(const std::string& path);
  void save_csv(const std::string& path) const;

  // Process-wide table used by the free critical_value().
  static CriticalValueTable& global();

 private:
  Entry simulate_entry(int d, double level) const;

  mutable std::shared_mutex mutex_;
  std::map<std::pair<int, double>, Entry> entries_;
  int default_grid_ = 2000;
  int default_reps_ = 50000;
  std::uint64_t default_seed_ = 987654321;
};

double critical_value(int d, double level);

// True iff the statistic exceeds the critical value at the given level.
bool decide(double statistic, int d, double level);

// Fits theta on the full sample, scans the cumulative score partial sums
// normalized by the model-based score covariance (the Fisher information
// estimate at alpha = 0, so that path is the classical score test) and
// compares against the critical values at the requested levels.
TestResult dp_score_statistic(const ModelSpec& model, const CountSeries& series, DpOrder alpha,
                              const FitOptions& options = {},
                              const std::vector<double>& levels = {0.05, 0.10},
                              CriticalValueTable* table = nullptr);

}  // namespace dpcpt
