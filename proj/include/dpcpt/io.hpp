#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dpcpt/change_test.hpp"
#include "dpcpt/contamination.hpp"
#include "dpcpt/experiment.hpp"
#include "dpcpt/fit.hpp"
#include "dpcpt/model.hpp"

namespace dpcpt {

// Reads a count series from CSV. The observed column is x_o when present
// (contaminated files), otherwise x.
CountSeries read_series_csv(const std::string& path);

// Clean series: columns x[,lambda].
void write_series_csv(const std::string& path, const CountSeries& series,
                      const std::vector<double>* lambda = nullptr);

// AO output: columns x,x_o,p_t (original, contaminated, hit indicator).
void write_ao_csv(const std::string& path, const CountSeries& original,
                  const ContaminatedSeries& contaminated);

// IO output: columns x_o,p_t,lambda (observed series, hit indicator,
// contaminated intensity).
void write_io_csv(const std::string& path, const IoSimulationResult& result);

std::string fit_result_to_json(const FitResult& result);
std::string test_result_to_json(const TestResult& result, bool include_trajectory = false);

struct ExperimentRequest {
  ExperimentConfig config;
  bool pair_clean = true;  // also run the clean twin when contaminated
};

ExperimentRequest parse_experiment_config(const std::string& json_text);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace dpcpt
