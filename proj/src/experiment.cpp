#include "dpcpt/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "dpcpt/errors.hpp"
#include "dpcpt/parallel.hpp"

namespace dpcpt {
namespace {

std::string format_theta(const ParamVector& theta) {
  std::string out = "(";
  char buf[64];
  for (Eigen::Index i = 0; i < theta.dim(); ++i) {
    std::snprintf(buf, sizeof(buf), "%g", theta[i]);
    if (i > 0) out += ',';
    out += buf;
  }
  out += ')';
  return out;
}

std::string format_fixed(double v, int decimals = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

std::string kind_name(const std::optional<ContaminationSpec>& c) {
  if (!c) return "";
  return c->kind == OutlierKind::additive ? "AO" : "IO";
}

bool same_condition(const ExperimentConfig& a, const ExperimentConfig& b) {
  auto theta_eq = [](const std::optional<ParamVector>& x, const std::optional<ParamVector>& y) {
    if (x.has_value() != y.has_value()) return false;
    return !x || x->values == y->values;
  };
  return a.theta0.values == b.theta0.values && theta_eq(a.theta1, b.theta1) && a.n == b.n &&
         a.replications == b.replications && a.base_seed == b.base_seed;
}

std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
  const auto start_time = std::chrono::steady_clock::now();
  const ModelSpec model = ModelSpec::linear_ingarch();
  require_valid(model, config.theta0);
  if (config.theta1) require_valid(model, *config.theta1);
  if (config.contamination) config.contamination->validate();
  if (config.replications < 1) throw InvalidParameterError("replications must be >= 1");
  if (config.alphas.empty()) throw InvalidParameterError("alpha grid is empty");

  // Resolve critical values up front so workers never touch the table.
  std::map<double, double> thresholds;
  for (double level : config.levels) thresholds[level] = critical_value(model.dim(), level);

  const std::size_t r_count = static_cast<std::size_t>(config.replications);
  const std::size_t a_count = config.alphas.size();
  std::vector<double> statistics(r_count * a_count,
                                 std::numeric_limits<double>::quiet_NaN());

  detail::GeneratorPlan plan;
  plan.theta0 = config.theta0;
  plan.theta1 = config.theta1;
  plan.change_at = config.n / 2;
  plan.n = config.n;
  plan.burn_in = config.burn_in;
  plan.lambda1 = 0.0;
  if (config.contamination && config.contamination->kind == OutlierKind::innovation) {
    plan.io = config.contamination;
    plan.io_propagate = config.io_propagate;
  }
  const bool additive =
      config.contamination && config.contamination->kind == OutlierKind::additive;

  FitOptions fit_options = config.fit_options;
  fit_options.with_information = false;

  parallel_for(r_count, config.workers, [&](std::size_t r) {
    const std::uint64_t seed = config.base_seed + r;
    CountSeries series;
    try {
      detail::GeneratorOutput g = detail::run_generator(model, plan, seed);
      series = std::move(g.x);
      if (additive) {
        series = contaminate_ao(series, *config.contamination, seed).x;
      }
    } catch (const Error&) {
      return;  // whole replication fails: statistics row stays NaN
    }
    for (std::size_t ai = 0; ai < a_count; ++ai) {
      try {
        const TestResult t =
            dp_score_statistic(model, series, DpOrder(config.alphas[ai]), fit_options, {});
        statistics[r * a_count + ai] = t.statistic;
      } catch (const Error&) {
        // excluded and counted below
      }
    }
  });

  ExperimentResult result;
  result.config = config;
  for (std::size_t ai = 0; ai < a_count; ++ai) {
    const double alpha = config.alphas[ai];
    int failures = 0;
    std::vector<double> stats;
    stats.reserve(r_count);
    for (std::size_t r = 0; r < r_count; ++r) {
      const double s = statistics[r * a_count + ai];
      if (std::isnan(s)) {
        ++failures;
      } else {
        stats.push_back(s);
      }
    }
    if (failures > config.replications / 10) {
      std::ostringstream msg;
      msg << "experiment aborted: " << failures << "/" << config.replications
          << " replications failed at alpha=" << alpha;
      throw OptimizationError(msg.str());
    }
    result.failures[alpha] = failures;
    for (double level : config.levels) {
      CellResult cell;
      cell.successes = static_cast<int>(stats.size());
      const double threshold = thresholds.at(level);
      for (double s : stats) {
        if (s > threshold) ++cell.rejections;
      }
      cell.rate = cell.successes > 0
                      ? static_cast<double>(cell.rejections) / cell.successes
                      : 0.0;
      cell.mc_se = cell.successes > 0
                       ? std::sqrt(cell.rate * (1.0 - cell.rate) / cell.successes)
                       : 0.0;
      result.cells[alpha][level] = cell;
    }
  }
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time).count();
  return result;
}

double compute_d_ratio(const ExperimentResult& contaminated, const ExperimentResult& clean,
                       double alpha, double level) {
  if (!same_condition(contaminated.config, clean.config)) {
    throw InvalidParameterError("d ratio requires matching configs up to contamination");
  }
  const auto& c_cells = contaminated.cells.at(alpha);
  const auto& k_cells = clean.cells.at(alpha);
  const double clean_rate = k_cells.at(level).rate;
  if (clean_rate <= 0.0) throw DegenerateRatioError("clean rejection rate is zero");
  return c_cells.at(level).rate / clean_rate;
}

std::vector<TableRow> rows_from_results(const std::vector<ExperimentResult>& results) {
  if (results.empty()) throw DataError("no experiment results to tabulate");
  std::vector<TableRow> rows;
  for (const auto& res : results) {
    // Clean twin (same condition, no contamination) enables the d ratio.
    const ExperimentResult* clean = nullptr;
    if (res.config.contamination) {
      for (const auto& other : results) {
        if (!other.config.contamination && same_condition(res.config, other.config)) {
          clean = &other;
          break;
        }
      }
    }
    for (const auto& [alpha, by_level] : res.cells) {
      for (const auto& [level, cell] : by_level) {
        TableRow row;
        row.theta0 = format_theta(res.config.theta0);
        if (res.config.theta1) row.theta1 = format_theta(*res.config.theta1);
        row.n = res.config.n;
        row.contamination_kind = kind_name(res.config.contamination);
        if (res.config.contamination) {
          row.p = res.config.contamination->p;
          row.gamma = res.config.contamination->gamma;
        }
        row.alpha = alpha;
        row.level = level;
        row.rate = cell.rate;
        row.mc_se = cell.mc_se;
        if (clean) {
          const double clean_rate = clean->cells.at(alpha).at(level).rate;
          if (clean_rate > 0.0) row.d_ratio = cell.rate / clean_rate;
        }
        row.failures = res.failures.at(alpha);
        row.seed = res.config.base_seed;
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

std::string emit_table(const std::vector<ExperimentResult>& results, TableFormat format) {
  const std::vector<TableRow> rows = rows_from_results(results);
  std::ostringstream out;
  if (format == TableFormat::csv) {
    out << "theta0,theta1,n,contamination_kind,p,gamma,alpha,level,rate,mc_se,d_ratio,"
           "failures,seed\n";
    char buf[64];
    auto num = [&buf](double v) {
      std::snprintf(buf, sizeof(buf), "%g", v);
      return std::string(buf);
    };
    for (const auto& r : rows) {
      out << csv_quote(r.theta0) << ',' << csv_quote(r.theta1) << ',' << r.n << ','
          << r.contamination_kind << ',' << (r.p ? num(*r.p) : "") << ','
          << (r.gamma ? num(*r.gamma) : "") << ',' << num(r.alpha) << ',' << num(r.level) << ','
          << format_fixed(r.rate) << ',' << format_fixed(r.mc_se) << ','
          << (r.d_ratio ? format_fixed(*r.d_ratio) : "") << ',' << r.failures << ',' << r.seed
          << '\n';
    }
    return out.str();
  }
  // JSON: an array of row objects mirroring the CSV columns.
  out << "[\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    out << "  {\"theta0\":\"" << r.theta0 << "\",\"theta1\":\"" << r.theta1 << "\",\"n\":" << r.n
        << ",\"contamination_kind\":\"" << r.contamination_kind << "\"";
    if (r.p) out << ",\"p\":" << *r.p;
    if (r.gamma) out << ",\"gamma\":" << *r.gamma;
    out << ",\"alpha\":" << r.alpha << ",\"level\":" << r.level << ",\"rate\":"
        << format_fixed(r.rate) << ",\"mc_se\":" << format_fixed(r.mc_se);
    if (r.d_ratio) out << ",\"d_ratio\":" << format_fixed(*r.d_ratio);
    out << ",\"failures\":" << r.failures << ",\"seed\":" << r.seed << "}";
    out << (i + 1 < rows.size() ? ",\n" : "\n");
  }
  out << "]\n";
  return out.str();
}

std::vector<TableRow> parse_table_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty table");
  std::vector<TableRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 13) throw DataError("malformed table row: " + line);
    TableRow r;
    r.theta0 = f[0];
    r.theta1 = f[1];
    r.n = static_cast<std::size_t>(std::stoull(f[2]));
    r.contamination_kind = f[3];
    if (!f[4].empty()) r.p = std::stod(f[4]);
    if (!f[5].empty()) r.gamma = std::stod(f[5]);
    r.alpha = std::stod(f[6]);
    r.level = std::stod(f[7]);
    r.rate = std::stod(f[8]);
    r.mc_se = std::stod(f[9]);
    if (!f[10].empty()) r.d_ratio = std::stod(f[10]);
    r.failures = std::stoi(f[11]);
    r.seed = static_cast<std::uint64_t>(std::stoull(f[12]));
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace dpcpt
