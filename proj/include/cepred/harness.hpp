#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cepred/runners.hpp"

namespace cepred {

/// Fully resolved experiment description: environment, algorithms, budgets,
/// and every tunable of the optimizers. Defaults load from the per-benchmark
/// parameter tables; explicit overrides win and are echoed into the CSV.
struct ExperimentConfig {
    std::string env;
    std::vector<std::string> algos;
    long iters = 100000;
    int trials = 10;
    std::uint64_t seed = 0;
    long cadence = 100;
    std::string out;
    std::string avg_out;

    SceParams sce;
    BaselineParams baseline;

    double gamma_override = -1.0;  // <0 keeps the benchmark default
    int n_states = 1000;           // random benchmarks only
    int k_features = 50;
    std::uint64_t env_seed = 1;

    double mu0_fill = 0.0;  // mean of the initial model, constant across coords
    std::optional<Eigen::VectorXd> z0;

    std::map<std::string, std::string> overrides;  // echoed as provenance
};

std::vector<std::string> env_names();

/// Per-benchmark defaults (step sizes, c, lambda, epsilon1, rho, shape gain,
/// budgets, initial model). Throws ConfigError for unknown names.
ExperimentConfig defaults_for_env(const std::string& env);

/// Applies one "key=value" override to the config.
void apply_param(ExperimentConfig& cfg, const std::string& key, const std::string& value);

/// Flat key=value file with '#' comments.
void load_config_file(ExperimentConfig& cfg, const std::string& path);

struct RunTrace {
    std::string algo;
    int trial = 0;
    std::vector<TraceRecord> records;
};

struct AveragedTrace {
    std::string algo;
    // Pointwise means over trials plus the sample variance of sqrt_mse and
    // the count of diverged trials contributing at each t.
    struct Row {
        long t;
        double sqrt_mse;
        double sqrt_mse_var;
        double sqrt_mspbe;
        double gamma_p;
        double sigma_fro;
        double T;
        int n_diverged;
    };
    std::vector<Row> rows;
};

/// Executes every (algo, trial) pair on the configured benchmark. Trials get
/// independent streams derived from (seed, trial) and may run concurrently;
/// the result order is deterministic.
std::vector<RunTrace> run_experiment(const ExperimentConfig& cfg);

/// Pointwise mean over the trials of one algorithm; cadences must agree.
AveragedTrace average_trials(const std::vector<RunTrace>& traces,
                             const std::string& algo);

void write_csv(const std::string& path, const ExperimentConfig& cfg,
               const std::vector<RunTrace>& traces);
void write_avg_csv(const std::string& path, const ExperimentConfig& cfg,
                   const std::vector<AveragedTrace>& traces);

int cli_main(int argc, char** argv);

}  // namespace cepred
