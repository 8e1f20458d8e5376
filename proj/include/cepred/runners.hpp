#pragma once

#include <Eigen/Cholesky>
#include <string>
#include <vector>

#include "cepred/baselines.hpp"
#include "cepred/ce.hpp"
#include "cepred/envs.hpp"
#include "cepred/objectives.hpp"

namespace cepred {

/// One row of a run trace; quantities that do not exist for an algorithm
/// (e.g. the model covariance of a TD baseline) are NaN.
struct TraceRecord {
    long t;
    double sqrt_mse;
    double sqrt_mspbe;
    double gamma_p;
    double sigma_fro;
    double T;
    bool diverged;
};

enum class Algo {
    sce_mspbem,
    sce_msbrm,
    td0,
    td_lambda,
    rg,
    gtd2,
    tdc,
    lstd,
    lspe,
};

Algo algo_from_name(const std::string& name);
std::string algo_name(Algo a);
std::vector<std::string> algo_names();

struct SceParams {
    CeConfig ce;
    Eigen::VectorXd mu0;
    double sigma0 = 1.0;
    long iters = 100000;
    long cadence = 100;
    double tracker_ceiling = 1e6;
};

struct BaselineParams {
    StepSchedule alpha = StepSchedule::constant(0.01);
    StepSchedule beta = StepSchedule::constant(0.05);
    double trace_lambda = 0.0;  // eligibility-trace decay for td-lambda/lstd/lspe
    double ls_epsilon = 1e-3;
    Eigen::VectorXd z0;
    long iters = 100000;
    long cadence = 100;
};

std::vector<TraceRecord> run_sce_mspbem(const DiscreteEnv& env, const SceParams& params,
                                        Rng& rng);
std::vector<TraceRecord> run_sce_msbrm(const DiscreteEnv& env, const SceParams& params,
                                       Rng& rng);
std::vector<TraceRecord> run_baseline(const DiscreteEnv& env, Algo algo,
                                      const BaselineParams& params, Rng& rng);

/// Monte-Carlo error oracles for the linear-Gaussian benchmarks: evaluation
/// states come from one long on-policy rollout with a fixed seed, the
/// conditional TD-error means are exact.
class ContinuousEvaluator {
  public:
    explicit ContinuousEvaluator(const ContinuousEnv& env, int n_eval = 10000,
                                 std::uint64_t seed = 0x9d2c5680u);

    double sqrt_mse(const Eigen::VectorXd& z) const;
    double sqrt_mspbe(const Eigen::VectorXd& z) const;

  private:
    Eigen::MatrixXd features_;       // N x k
    Eigen::MatrixXd next_features_;  // N x k, conditional means
    Eigen::VectorXd expected_r_;
    Eigen::VectorXd true_values_;
    Eigen::LDLT<Eigen::MatrixXd> gram_;
    double gamma_;
};

std::vector<TraceRecord> run_sce_mspbem(const ContinuousEnv& env,
                                        const ContinuousEvaluator& eval,
                                        const SceParams& params, Rng& rng);
std::vector<TraceRecord> run_baseline(const ContinuousEnv& env,
                                      const ContinuousEvaluator& eval, Algo algo,
                                      const BaselineParams& params, Rng& rng);

}  // namespace cepred
