#include "dpcpt/change_test.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>

#include "dpcpt/errors.hpp"
#include "dpcpt/parallel.hpp"
#include "dpcpt/rng.hpp"

namespace dpcpt {
namespace {

constexpr double kConditionLimit = 1e12;

// Inverse from an eigendecomposition shifted by the ridge.
Matrix shifted_inverse(const Eigen::SelfAdjointEigenSolver<Matrix>& eig, double ridge) {
  Vector inv = eig.eigenvalues();
  for (Eigen::Index i = 0; i < inv.size(); ++i) inv[i] = 1.0 / (inv[i] + ridge);
  return eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
}

bool well_conditioned(const Vector& eigenvalues, double ridge) {
  const double lo = eigenvalues.minCoeff() + ridge;
  const double hi = eigenvalues.maxCoeff() + ridge;
  return lo > 0.0 && hi / lo <= kConditionLimit;
}

std::string provenance_name(CriticalValueTable::Provenance p) {
  return p == CriticalValueTable::Provenance::paper ? "PAPER" : "SIMULATED";
}

}  // namespace

std::pair<Matrix, double> invert_k(const Matrix& k) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(k);
  if (eig.info() != Eigen::Success) throw SingularKError("eigendecomposition of K_hat failed");
  if (well_conditioned(eig.eigenvalues(), 0.0)) {
    return {shifted_inverse(eig, 0.0), 0.0};
  }
  const double base = k.trace() / static_cast<double>(k.rows());
  for (double scale : {1e-10, 1e-8, 1e-6}) {
    const double ridge = scale * base;
    if (ridge > 0.0 && well_conditioned(eig.eigenvalues(), ridge)) {
      return {shifted_inverse(eig, ridge), ridge};
    }
  }
  throw SingularKError("score covariance is degenerate beyond ridge repair");
}

TestResult statistic_from_scores(const Matrix& score_terms, const Matrix& k, double alpha) {
  const auto n = score_terms.rows();
  const auto d = score_terms.cols();
  if (n == 0 || d == 0) throw DataError("empty score sequence");

  auto [k_inv, ridge] = invert_k(k);
  const double scale = 1.0 / (std::pow(1.0 + alpha, 2) * static_cast<double>(n));

  TestResult result;
  result.alpha = alpha;
  result.d = static_cast<int>(d);
  result.ridge_used = ridge;
  result.trajectory.resize(static_cast<std::size_t>(n));

  Vector cum = Vector::Zero(d);
  double best = -1.0;
  std::size_t best_k = 1;
  for (Eigen::Index t = 0; t < n; ++t) {
    cum += score_terms.row(t).transpose();
    const double q = scale * cum.dot(k_inv * cum);
    result.trajectory[static_cast<std::size_t>(t)] = q;
    if (q > best) {
      best = q;
      best_k = static_cast<std::size_t>(t) + 1;
    }
  }
  result.statistic = best;
  result.argmax_k = best_k;
  return result;
}

std::map<double, double> simulate_sup_bridge_quantiles(int d, int grid, int reps,
                                                       const std::vector<double>& levels,
                                                       std::uint64_t seed, int workers) {
  if (d < 1) throw InvalidParameterError("bridge dimension must be positive");
  if (grid < 1000) throw InvalidParameterError("bridge grid must be at least 1000");
  if (reps < 10000) throw InvalidParameterError("bridge replications must be at least 10000");

  std::vector<double> sup(static_cast<std::size_t>(reps));
  const double sqrt_dt = 1.0 / std::sqrt(static_cast<double>(grid));
  const double inv_grid = 1.0 / static_cast<double>(grid);

  parallel_for(static_cast<std::size_t>(reps), workers, [&](std::size_t rep) {
    thread_local std::vector<double> paths;
    paths.resize(static_cast<std::size_t>(d) * static_cast<std::size_t>(grid));
    Rng rng(seed + rep);
    for (int j = 0; j < d; ++j) {
      double w = 0.0;
      double* path = paths.data() + static_cast<std::size_t>(j) * grid;
      for (int i = 0; i < grid; ++i) {
        w += rng.normal() * sqrt_dt;
        path[i] = w;
      }
    }
    double max_norm = 0.0;
    for (int i = 0; i < grid; ++i) {
      const double s = static_cast<double>(i + 1) * inv_grid;
      double acc = 0.0;
      for (int j = 0; j < d; ++j) {
        const double* path = paths.data() + static_cast<std::size_t>(j) * grid;
        const double bridge = path[i] - s * path[grid - 1];
        acc += bridge * bridge;
      }
      if (acc > max_norm) max_norm = acc;
    }
    sup[rep] = max_norm;
  });

  std::sort(sup.begin(), sup.end());
  std::map<double, double> out;
  for (double level : levels) {
    if (!(level > 0.0 && level < 1.0)) throw InvalidParameterError("level must be in (0,1)");
    const auto rank = static_cast<std::size_t>(
        std::ceil((1.0 - level) * static_cast<double>(reps)));
    out[level] = sup[std::min<std::size_t>(rank, sup.size()) - 1];
  }
  return out;
}

CriticalValueTable::CriticalValueTable() {
  // Monte Carlo constants for the d = 3 limit law at the 5% and 10% levels.
  entries_[{3, 0.05}] = Entry{3.027, Provenance::paper, 0, 0, 0};
  entries_[{3, 0.10}] = Entry{2.604, Provenance::paper, 0, 0, 0};
}

double CriticalValueTable::lookup(int d, double level) { return entry(d, level).threshold; }

CriticalValueTable::Entry CriticalValueTable::entry(int d, double level) {
  {
    std::shared_lock lock(mutex_);
    auto it = entries_.find({d, level});
    if (it != entries_.end()) return it->second;
  }
  std::unique_lock lock(mutex_);
  auto it = entries_.find({d, level});
  if (it != entries_.end()) return it->second;
  const Entry fresh = simulate_entry(d, level);
  entries_[{d, level}] = fresh;
  return fresh;
}

CriticalValueTable::Entry CriticalValueTable::simulate_entry(int d, double level) const {
  const auto q = simulate_sup_bridge_quantiles(d, default_grid_, default_reps_, {level},
                                               default_seed_ + static_cast<std::uint64_t>(d));
  Entry e;
  e.threshold = q.at(level);
  e.provenance = Provenance::simulated;
  e.grid = default_grid_;
  e.reps = default_reps_;
  e.seed = default_seed_ + static_cast<std::uint64_t>(d);
  return e;
}

void CriticalValueTable::set_simulation_defaults(int grid, int reps, std::uint64_t seed) {
  std::unique_lock lock(mutex_);
  default_grid_ = grid;
  default_reps_ = reps;
  default_seed_ = seed;
}

void CriticalValueTable::load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open critical value table: " + path);
  std::string line;
  std::getline(in, line);  // header
  std::unique_lock lock(mutex_);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string field;
    Entry e;
    int d = 0;
    double level = 0.0;
    std::getline(row, field, ',');
    d = std::stoi(field);
    std::getline(row, field, ',');
    level = std::stod(field);
    std::getline(row, field, ',');
    e.threshold = std::stod(field);
    std::getline(row, field, ',');
    e.provenance = field == "PAPER" ? Provenance::paper : Provenance::simulated;
    std::getline(row, field, ',');
    e.grid = std::stoi(field);
    std::getline(row, field, ',');
    e.reps = std::stoi(field);
    std::getline(row, field, ',');
    e.seed = static_cast<std::uint64_t>(std::stoull(field));
    entries_[{d, level}] = e;
  }
}

void CriticalValueTable::save_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write critical value table: " + path);
  out << "d,level,threshold,provenance,grid,reps,seed\n";
  std::shared_lock lock(mutex_);
  for (const auto& [key, e] : entries_) {
    out << key.first << ',' << key.second << ',' << e.threshold << ','
        << provenance_name(e.provenance) << ',' << e.grid << ',' << e.reps << ',' << e.seed
        << '\n';
  }
}

CriticalValueTable& CriticalValueTable::global() {
  static CriticalValueTable table;
  return table;
}

double critical_value(int d, double level) { return CriticalValueTable::global().lookup(d, level); }

bool decide(double statistic, int d, double level) {
  if (!(statistic >= 0.0)) throw InvalidParameterError("statistic must be nonnegative");
  return statistic > critical_value(d, level);
}

TestResult dp_score_statistic(const ModelSpec& model, const CountSeries& series, DpOrder alpha,
                              const FitOptions& options, const std::vector<double>& levels,
                              CriticalValueTable* table) {
  if (series.size() < 10 * static_cast<std::size_t>(model.dim())) {
    throw DataError("change test needs at least 10 * d observations");
  }
  FitOptions fit_options = options;
  fit_options.with_information = false;
  const FitResult fitted = fit(model, series, alpha, fit_options, Lambda1::sample_mean());

  ObjectiveEvaluator evaluator(model, series, alpha, fitted.lambda1);
  Matrix terms;
  evaluator.score_terms(fitted.theta_hat, terms);

  // Normalize with the model-based score covariance
  //   K = (1+alpha)^-2 n^-1 sum_t E[D_t^2 | lambda_t] grad_t grad_t',
  // the information matrix of the score test at alpha = 0. Unlike the raw
  // outer-product average it is not inflated by outlier-driven score spikes,
  // which is what lets contamination distort the alpha = 0 test.
  const auto n = static_cast<Eigen::Index>(series.size());
  std::vector<double> lambda_path(series.size());
  Matrix grads(n, model.dim());
  detail::run_intensity_recursion(model, fitted.theta_hat, series, fitted.lambda1, lambda_path,
                                  &grads);
  ConditionalVarianceEvaluator cond_var(alpha.alpha);
  Matrix k = Matrix::Zero(model.dim(), model.dim());
  for (Eigen::Index t = 0; t < n; ++t) {
    k.noalias() += cond_var(lambda_path[static_cast<std::size_t>(t)]) *
                   grads.row(t).transpose() * grads.row(t);
  }
  k /= std::pow(1.0 + alpha.alpha, 2) * static_cast<double>(n);

  TestResult result = statistic_from_scores(terms, k, alpha.alpha);
  result.fit = fitted;

  CriticalValueTable& cv = table ? *table : CriticalValueTable::global();
  for (double level : levels) {
    const double threshold = cv.lookup(model.dim(), level);
    result.critical_values[level] = threshold;
    result.reject[level] = result.statistic > threshold;
  }
  return result;
}

}  // namespace dpcpt
