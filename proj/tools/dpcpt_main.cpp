#include <cstdint>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dpcpt/change_test.hpp"
#include "dpcpt/contamination.hpp"
#include "dpcpt/errors.hpp"
#include "dpcpt/experiment.hpp"
#include "dpcpt/fit.hpp"
#include "dpcpt/io.hpp"
#include "dpcpt/model.hpp"

namespace {

std::vector<double> parse_levels(const std::string& spec) {
  std::vector<double> levels;
  std::string cur;
  for (char c : spec) {
    if (c == ',') {
      if (!cur.empty()) levels.push_back(std::stod(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) levels.push_back(std::stod(cur));
  if (levels.empty()) throw dpcpt::DataError("no levels given");
  return levels;
}

dpcpt::Lambda1 parse_lambda1(const std::string& spec) {
  if (spec == "mean") return dpcpt::Lambda1::sample_mean();
  return dpcpt::Lambda1::fixed(std::stod(spec));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust change-point testing for Poisson autoregressive count series"};
  app.require_subcommand(1);

  // --- simulate ---------------------------------------------------------
  double w = 2.0, a = 0.1, b = 0.2;
  std::size_t n = 500, burn_in = 1000;
  std::uint64_t seed = 1;
  double lambda1 = 0.0;
  double io_p = -1.0, io_gamma = 10.0;
  bool io_clean_recursion = false;
  std::string out_path;
  auto* sim = app.add_subcommand("simulate", "Simulate a linear Poisson AR series");
  sim->add_option("--w", w, "intensity intercept")->required();
  sim->add_option("--a", a, "intensity feedback coefficient")->required();
  sim->add_option("--b", b, "observation feedback coefficient")->required();
  sim->add_option("--n", n, "series length")->required();
  sim->add_option("--burn-in", burn_in, "discarded initial steps");
  sim->add_option("--seed", seed, "random seed");
  sim->add_option("--lambda1", lambda1, "initial intensity");
  sim->add_option("--io-p", io_p, "innovation outlier probability");
  sim->add_option("--io-gamma", io_gamma, "innovation outlier Poisson mean");
  sim->add_flag("--io-clean-recursion", io_clean_recursion,
                "feed the clean intensity into the recursion (sensitivity mode)");
  sim->add_option("--out", out_path, "output CSV")->required();

  // --- contaminate ------------------------------------------------------
  std::string in_path;
  double ao_p = 0.01, ao_gamma = 10.0;
  auto* cont = app.add_subcommand("contaminate", "Add additive outliers to a series");
  cont->add_option("--in", in_path, "input CSV")->required();
  cont->add_option("--p", ao_p, "outlier probability")->required();
  cont->add_option("--gamma", ao_gamma, "outlier Poisson mean")->required();
  cont->add_option("--seed", seed, "random seed");
  cont->add_option("--out", out_path, "output CSV")->required();

  // --- fit ---------------------------------------------------------------
  double alpha = 0.0;
  std::string lambda1_spec = "mean";
  auto* fit_cmd = app.add_subcommand("fit", "Minimum density power divergence fit");
  fit_cmd->add_option("--in", in_path, "input CSV")->required();
  fit_cmd->add_option("--alpha", alpha, "DP order")->required();
  fit_cmd->add_option("--lambda1", lambda1_spec, "initial intensity: mean or a value");
  fit_cmd->add_option("--out", out_path, "output JSON");

  // --- test ---------------------------------------------------------------
  double level = 0.05;
  bool with_trajectory = false;
  auto* test_cmd = app.add_subcommand("test", "DP-score change-point test");
  test_cmd->add_option("--in", in_path, "input CSV")->required();
  test_cmd->add_option("--alpha", alpha, "DP order")->required();
  test_cmd->add_option("--level", level, "decision level");
  test_cmd->add_flag("--trajectory", with_trajectory, "include the scan trajectory in JSON");
  test_cmd->add_option("--out", out_path, "output JSON");

  // --- mc-critical ---------------------------------------------------------
  int cv_d = 3, cv_grid = 2000, cv_reps = 50000;
  std::string levels_spec = "0.05,0.10";
  auto* mc = app.add_subcommand("mc-critical",
                                "Monte Carlo critical values of sup ||B_d(s)||^2");
  mc->add_option("--d", cv_d, "bridge dimension")->required();
  mc->add_option("--grid", cv_grid, "time grid size");
  mc->add_option("--reps", cv_reps, "Monte Carlo replications");
  mc->add_option("--seed", seed, "random seed");
  mc->add_option("--levels", levels_spec, "comma-separated levels");
  mc->add_option("--out", out_path, "also write the table to this CSV");

  // --- experiment ---------------------------------------------------------
  std::string config_path;
  std::string format_spec = "csv";
  auto* exp = app.add_subcommand("experiment", "Monte Carlo size/power experiment");
  exp->add_option("--config", config_path, "experiment config JSON")->required();
  exp->add_option("--out", out_path, "output table")->required();
  exp->add_option("--format", format_spec, "csv or json");

  CLI11_PARSE(app, argc, argv);

  try {
    const dpcpt::ModelSpec model = dpcpt::ModelSpec::linear_ingarch();

    if (sim->parsed()) {
      const auto theta = dpcpt::ParamVector::linear(w, a, b);
      if (io_p >= 0.0) {
        dpcpt::ContaminationSpec spec{dpcpt::OutlierKind::innovation, io_p, io_gamma};
        const auto result = dpcpt::simulate_io(model, theta, n, burn_in, spec, seed,
                                               !io_clean_recursion, lambda1);
        dpcpt::write_io_csv(out_path, result);
      } else {
        const auto result = dpcpt::simulate(model, theta, n, burn_in, seed, lambda1);
        dpcpt::write_series_csv(out_path, result.x, &result.lambda);
      }
      return 0;
    }

    if (cont->parsed()) {
      const auto series = dpcpt::read_series_csv(in_path);
      dpcpt::ContaminationSpec spec{dpcpt::OutlierKind::additive, ao_p, ao_gamma};
      const auto result = dpcpt::contaminate_ao(series, spec, seed);
      dpcpt::write_ao_csv(out_path, series, result);
      return 0;
    }

    if (fit_cmd->parsed()) {
      const auto series = dpcpt::read_series_csv(in_path);
      const auto result = dpcpt::fit(model, series, dpcpt::DpOrder(alpha), {},
                                     parse_lambda1(lambda1_spec));
      const std::string json = dpcpt::fit_result_to_json(result);
      if (!out_path.empty()) dpcpt::write_text_file(out_path, json);
      std::cout << json;
      return 0;
    }

    if (test_cmd->parsed()) {
      const auto series = dpcpt::read_series_csv(in_path);
      std::vector<double> levels{0.05, 0.10};
      if (level != 0.05 && level != 0.10) levels.push_back(level);
      const auto result =
          dpcpt::dp_score_statistic(model, series, dpcpt::DpOrder(alpha), {}, levels);
      const std::string json = dpcpt::test_result_to_json(result, with_trajectory);
      if (!out_path.empty()) dpcpt::write_text_file(out_path, json);
      const bool rejected = result.reject.at(level);
      std::cout << "statistic " << result.statistic << "\n"
                << "threshold " << result.critical_values.at(level) << " (level " << level
                << ")\n"
                << "decision " << (rejected ? "reject" : "accept") << "\n"
                << "argmax_k " << result.argmax_k << "\n";
      return rejected ? 2 : 0;
    }

    if (mc->parsed()) {
      const auto levels = parse_levels(levels_spec);
      const auto quantiles =
          dpcpt::simulate_sup_bridge_quantiles(cv_d, cv_grid, cv_reps, levels, seed);
      std::ostringstream table;
      table << "d,level,threshold,provenance,grid,reps,seed\n";
      for (const auto& [lv, threshold] : quantiles) {
        table << cv_d << ',' << lv << ',' << threshold << ",SIMULATED," << cv_grid << ','
              << cv_reps << ',' << seed << '\n';
      }
      std::cout << table.str();
      if (!out_path.empty()) dpcpt::write_text_file(out_path, table.str());
      return 0;
    }

    if (exp->parsed()) {
      const auto request = dpcpt::parse_experiment_config(dpcpt::read_text_file(config_path));
      std::vector<dpcpt::ExperimentResult> results;
      results.push_back(dpcpt::run_experiment(request.config));
      if (request.config.contamination && request.pair_clean) {
        dpcpt::ExperimentConfig clean = request.config;
        clean.contamination.reset();
        results.push_back(dpcpt::run_experiment(clean));
      }
      const auto format = format_spec == "json" ? dpcpt::TableFormat::json
                                                : dpcpt::TableFormat::csv;
      const std::string table = dpcpt::emit_table(results, format);
      dpcpt::write_text_file(out_path, table);
      std::cout << table;
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
