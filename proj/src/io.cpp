#include "dpcpt/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dpcpt/errors.hpp"

namespace dpcpt {
namespace {

using nlohmann::json;

std::vector<std::string> split_line(const std::string& line, char sep = ',') {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) rows.push_back(m(i, j));
  }
  return rows;  // row-major
}

json vector_to_json(const Vector& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

std::string level_key(double level) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", level);
  return buf;
}

}  // namespace

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path);
  out << content;
}

CountSeries read_series_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open series file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty series file: " + path);
  const auto header = split_line(line);
  int column = -1;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "x_o") {
      column = static_cast<int>(i);
      break;
    }
    if (header[i] == "x" && column < 0) column = static_cast<int>(i);
  }
  if (column < 0) throw DataError("series file has neither x_o nor x column: " + path);

  CountSeries series;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto fields = split_line(line);
    if (static_cast<std::size_t>(column) >= fields.size()) {
      throw DataError("short row in series file: " + path);
    }
    const double value = std::stod(fields[static_cast<std::size_t>(column)]);
    const auto rounded = static_cast<std::int64_t>(std::llround(value));
    if (rounded < 0 || std::fabs(value - static_cast<double>(rounded)) > 1e-9) {
      throw DataError("series values must be nonnegative integers: " + path);
    }
    series.x.push_back(rounded);
  }
  if (series.x.empty()) throw DataError("series file has no rows: " + path);
  return series;
}

void write_series_csv(const std::string& path, const CountSeries& series,
                      const std::vector<double>* lambda) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write series file: " + path);
  out << (lambda ? "x,lambda\n" : "x\n");
  for (std::size_t t = 0; t < series.size(); ++t) {
    out << series.x[t];
    if (lambda) out << ',' << (*lambda)[t];
    out << '\n';
  }
}

void write_ao_csv(const std::string& path, const CountSeries& original,
                  const ContaminatedSeries& contaminated) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write series file: " + path);
  out << "x,x_o,p_t\n";
  for (std::size_t t = 0; t < original.size(); ++t) {
    out << original.x[t] << ',' << contaminated.x.x[t] << ','
        << static_cast<int>(contaminated.indicator[t]) << '\n';
  }
}

void write_io_csv(const std::string& path, const IoSimulationResult& result) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write series file: " + path);
  out << "x_o,p_t,lambda\n";
  for (std::size_t t = 0; t < result.x.size(); ++t) {
    out << result.x.x[t] << ',' << static_cast<int>(result.indicator[t]) << ','
        << result.lambda[t] << '\n';
  }
}

std::string fit_result_to_json(const FitResult& result) {
  json j;
  j["theta_hat"] = vector_to_json(result.theta_hat.values);
  j["alpha"] = result.alpha;
  j["objective"] = result.objective_value;
  j["converged"] = result.converged;
  j["iterations"] = result.iterations;
  j["on_boundary"] = result.on_boundary;
  j["lambda1"] = result.lambda1;
  j["k_hat"] = matrix_to_json(result.k_hat);
  j["j_hat"] = matrix_to_json(result.j_hat);
  j["covariance"] = matrix_to_json(result.sandwich_covariance);
  return j.dump(2) + "\n";
}

std::string test_result_to_json(const TestResult& result, bool include_trajectory) {
  json j;
  j["statistic"] = result.statistic;
  j["alpha"] = result.alpha;
  j["d"] = result.d;
  j["argmax_k"] = result.argmax_k;
  j["ridge_used"] = result.ridge_used;
  json cv = json::object();
  json rej = json::object();
  for (const auto& [level, threshold] : result.critical_values) {
    cv[level_key(level)] = threshold;
    rej[level_key(level)] = result.reject.at(level);
  }
  j["critical_values"] = cv;
  j["reject"] = rej;
  j["theta_hat"] = vector_to_json(result.fit.theta_hat.values);
  j["on_boundary"] = result.fit.on_boundary;
  if (include_trajectory) j["trajectory"] = result.trajectory;
  return j.dump(2) + "\n";
}

ExperimentRequest parse_experiment_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw DataError(std::string("invalid experiment config JSON: ") + e.what());
  }
  auto parse_theta = [](const json& arr) {
    if (!arr.is_array() || arr.size() != 3) {
      throw DataError("theta must be an array [w, a, b]");
    }
    return ParamVector::linear(arr[0].get<double>(), arr[1].get<double>(),
                               arr[2].get<double>());
  };

  ExperimentRequest request;
  ExperimentConfig& c = request.config;
  if (!j.contains("theta0")) throw DataError("experiment config needs theta0");
  c.theta0 = parse_theta(j.at("theta0"));
  if (j.contains("theta1") && !j.at("theta1").is_null()) c.theta1 = parse_theta(j.at("theta1"));
  c.n = j.value("n", std::size_t{300});
  c.replications = j.value("replications", 1000);
  if (j.contains("alphas")) c.alphas = j.at("alphas").get<std::vector<double>>();
  if (j.contains("levels")) c.levels = j.at("levels").get<std::vector<double>>();
  if (j.contains("contamination") && !j.at("contamination").is_null()) {
    const json& cj = j.at("contamination");
    ContaminationSpec spec;
    const std::string kind = cj.value("kind", "AO");
    if (kind == "AO") {
      spec.kind = OutlierKind::additive;
    } else if (kind == "IO") {
      spec.kind = OutlierKind::innovation;
    } else {
      throw DataError("contamination kind must be AO or IO");
    }
    spec.p = cj.value("p", 0.0);
    spec.gamma = cj.value("gamma", 1.0);
    c.contamination = spec;
  }
  c.io_propagate = j.value("io_propagate", true);
  c.burn_in = j.value("burn_in", std::size_t{1000});
  c.base_seed = j.value("base_seed", std::uint64_t{1});
  c.workers = j.value("workers", 0);
  request.pair_clean = j.value("pair_clean", true);
  return request;
}

}  // namespace dpcpt
