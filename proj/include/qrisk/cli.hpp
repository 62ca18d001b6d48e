#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qrisk/distributions.hpp"
#include "qrisk/estimators.hpp"

namespace qrisk::cli {

// Fully resolved experiment description: JSON config file merged with
// command-line overrides (flags win). Validated before any computation;
// unknown JSON keys are rejected.
struct ExperimentConfig {
    std::string command;  // fit | risk | minimax | eigen | var-est | bounds | suite

    // problem spec
    std::string input_kind = "gaussian";  // gaussian | discrete | coord_kurtosis
    std::size_t d = 1;
    double kappa1 = 4.0;
    std::vector<std::vector<double>> points;  // discrete support
    std::vector<double> probs;
    std::vector<std::vector<double>> covariance;  // gaussian, optional (identity default)
    std::vector<double> w_star;                   // defaults to zero
    std::string noise = "gaussian";               // gaussian | student-t:NU | two-point:A:PROB
    double sigma2 = 1.0;
    double p = 0.0;  // 0 = square error, > 2 = p-power

    // run parameters
    std::size_t n = 100;
    double delta = 0.1;
    std::size_t reps = 20000;
    std::uint64_t seed = 1;
    std::size_t workers = 0;  // 0 = logical cores
    bool quick = false;

    std::string estimator = "ols";  // ols | minmax
    std::size_t minmax_k = 0;       // 0 = delta rule
    std::size_t outer_steps = 500;
    std::size_t inner_steps = 20;
    double step_size = 0.5;
    double tolerance = 1e-7;
    std::size_t trim_k = 0;  // eigen command: optional trimmed infimum level

    double mu = 0.0;  // p-power class parameter, used by minimax reporting

    std::string out;  // output directory (default qrisk_out)

    ProblemSpec build_spec() const;
    InputDist build_input() const;
    ErrorFn build_error() const;
    NoiseModel build_noise() const;
    std::uint64_t config_hash() const;
    std::string canonical_json() const;
};

// Load and validate a JSON config file; throws invalid_config on schema
// violations or unknown keys.
ExperimentConfig load_config(const std::string& path);

// Dispatch a validated config: writes CSV outputs plus a run manifest and
// returns the process exit code (0 ok, 1 failed criterion, 2 config error,
// 3 numeric failure).
int run(const ExperimentConfig& config);

// Full command-line entry point.
int run_main(int argc, char** argv);

}  // namespace qrisk::cli
