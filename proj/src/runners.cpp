#include "cepred/runners.hpp"

#include <cmath>
#include <limits>

#include "cepred/errors.hpp"

namespace cepred {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool record_due(long t_done, long cadence, long iters) {
    return t_done % cadence == 0 || t_done == iters;
}

/// Exact error metrics of a linear finite benchmark, O(k^2) per evaluation
/// via the decoupled moment form.
struct LinearMetrics {
    Eigen::MatrixXd phi;
    Eigen::VectorXd v_true;
    Eigen::VectorXd nu;
    MspbeTracker exact;

    explicit LinearMetrics(const DiscreteEnv& env)
        : phi(env.feats.phi()),
          v_true(solve_value_function(env.mdp)),
          nu(env.mdp.nu()),
          exact(exact_mspbe_moments(env.mdp, env.feats)) {}

    double sqrt_mse(const Eigen::VectorXd& z) const {
        const Eigen::VectorXd diff = v_true - phi * z;
        return std::sqrt((nu.array() * diff.array().square()).sum());
    }
    double sqrt_mspbe(const Eigen::VectorXd& z) const {
        return std::sqrt(std::max(0.0, -jp_estimate(exact, z)));
    }
};

struct ValueMetrics {
    Eigen::VectorXd v_true;
    Eigen::VectorXd nu;

    explicit ValueMetrics(const DiscreteEnv& env)
        : v_true(solve_value_function(env.mdp)), nu(env.mdp.nu()) {}

    double sqrt_mse(const Eigen::VectorXd& values) const {
        const Eigen::VectorXd diff = v_true - values;
        return std::sqrt((nu.array() * diff.array().square()).sum());
    }
};

void check_ceiling(double sup, double ceiling, const char* what) {
    if (!(sup <= ceiling))
        throw NumericalError(std::string(what) +
                             ": tracker exceeded the stability ceiling, |.| = " +
                             std::to_string(sup));
}

TraceRecord ce_record(long t, double mse, double mspbe, const CeState& st) {
    return TraceRecord{t, mse, mspbe, st.gamma_prev, st.theta.sigma.norm(), st.T, false};
}

}  // namespace

Algo algo_from_name(const std::string& name) {
    if (name == "sce-mspbem") return Algo::sce_mspbem;
    if (name == "sce-msbrm") return Algo::sce_msbrm;
    if (name == "td0") return Algo::td0;
    if (name == "td-lambda") return Algo::td_lambda;
    if (name == "rg") return Algo::rg;
    if (name == "gtd2") return Algo::gtd2;
    if (name == "tdc") return Algo::tdc;
    if (name == "lstd") return Algo::lstd;
    if (name == "lspe") return Algo::lspe;
    throw ConfigError("unknown algorithm '" + name + "'");
}

std::string algo_name(Algo a) {
    switch (a) {
        case Algo::sce_mspbem: return "sce-mspbem";
        case Algo::sce_msbrm: return "sce-msbrm";
        case Algo::td0: return "td0";
        case Algo::td_lambda: return "td-lambda";
        case Algo::rg: return "rg";
        case Algo::gtd2: return "gtd2";
        case Algo::tdc: return "tdc";
        case Algo::lstd: return "lstd";
        case Algo::lspe: return "lspe";
    }
    throw ConfigError("unknown algorithm id");
}

std::vector<std::string> algo_names() {
    return {"sce-mspbem", "sce-msbrm", "td0", "td-lambda", "rg", "gtd2", "tdc", "lstd",
            "lspe"};
}

std::vector<TraceRecord> run_sce_mspbem(const DiscreteEnv& env, const SceParams& params,
                                        Rng& rng) {
    if (env.manifold)
        throw ConfigError("sce-mspbem: only linear benchmarks minimize the projected error");
    const int k = env.feats.k();
    const double gamma = env.mdp.gamma();
    const LinearMetrics metrics(env);
    Rng env_rng = rng.split();
    Rng algo_rng = rng.split();

    MspbeTracker w = MspbeTracker::zero(k);
    CeOptimizer opt(params.ce, GaussianModel::isotropic(params.mu0, params.sigma0 * params.sigma0));
    const auto objective = [&w](const Eigen::VectorXd& z) { return jp_estimate(w, z); };

    Eigen::VectorXd phi(k), phi_next(k);
    std::vector<TraceRecord> out;
    for (long t = 0; t < params.iters; ++t) {
        const Transition tr = env.mdp.sample_transition(env_rng);
        phi = env.feats.phi().row(tr.s);
        phi_next = env.feats.phi().row(tr.s_next);
        mspbe_tracker_step(w, phi, tr.r, phi_next, gamma, params.ce.alpha.eval(t + 1));
        opt.step(objective, algo_rng);
        if (record_due(t + 1, params.cadence, params.iters)) {
            check_ceiling(w.sup_norm(), params.tracker_ceiling, "sce-mspbem");
            const Eigen::VectorXd& mu = opt.state().theta.mu;
            out.push_back(ce_record(t + 1, metrics.sqrt_mse(mu), metrics.sqrt_mspbe(mu),
                                    opt.state()));
        }
    }
    return out;
}

std::vector<TraceRecord> run_sce_msbrm(const DiscreteEnv& env, const SceParams& params,
                                       Rng& rng) {
    const double gamma = env.mdp.gamma();
    Rng env_rng = rng.split();
    Rng algo_rng = rng.split();
    std::vector<TraceRecord> out;

    if (env.nl_a.size() > 0) {
        // Three-state spiral manifold: scalar parameter, 3x3 statistic.
        const ValueMetrics metrics(env);
        NlMsbrTracker u;
        CeOptimizer opt(params.ce,
                        GaussianModel::isotropic(params.mu0, params.sigma0 * params.sigma0));
        const auto objective = [&u](const Eigen::VectorXd& z) {
            return -nl_msbr_estimate(u, z[0], kVanroyTau, kVanroyEps);
        };
        for (long t = 0; t < params.iters; ++t) {
            const DoubleTransition tr = env.mdp.sample_double_transition(env_rng);
            nl_msbr_tracker_step(u, tr, env.nl_a, env.nl_b, gamma,
                                 params.ce.alpha.eval(t + 1));
            opt.step(objective, algo_rng);
            if (record_due(t + 1, params.cadence, params.iters)) {
                check_ceiling(u.u.cwiseAbs().maxCoeff(), params.tracker_ceiling,
                              "sce-msbrm");
                const double eta = opt.state().theta.mu[0];
                out.push_back(ce_record(
                    t + 1, metrics.sqrt_mse(vanroy_psi(eta, env.nl_a, env.nl_b)), kNaN,
                    opt.state()));
            }
        }
        return out;
    }

    const int k = env.feats.k();
    MsbrTracker u = MsbrTracker::zero(k);
    CeOptimizer opt(params.ce,
                    GaussianModel::isotropic(params.mu0, params.sigma0 * params.sigma0));

    Eigen::VectorXd phi(k), phi1(k), phi2(k);
    if (env.feature_param_map) {
        const ValueMetrics metrics(env);
        const auto& map = env.feature_param_map;
        const auto objective = [&u, &map](const Eigen::VectorXd& z) {
            return jb_estimate(u, map(z));
        };
        for (long t = 0; t < params.iters; ++t) {
            const DoubleTransition tr = env.mdp.sample_double_transition(env_rng);
            phi = env.feats.phi().row(tr.s);
            phi1 = env.feats.phi().row(tr.s_next);
            phi2 = env.feats.phi().row(tr.s_next2);
            msbr_tracker_step(u, phi, tr.r, tr.r_prime, phi1, phi2, gamma,
                              params.ce.alpha.eval(t + 1));
            opt.step(objective, algo_rng);
            if (record_due(t + 1, params.cadence, params.iters)) {
                check_ceiling(u.sup_norm(), params.tracker_ceiling, "sce-msbrm");
                const Eigen::VectorXd values =
                    env.feats.phi() * map(opt.state().theta.mu);
                out.push_back(ce_record(t + 1, metrics.sqrt_mse(values), kNaN,
                                        opt.state()));
            }
        }
        return out;
    }

    const LinearMetrics metrics(env);
    const auto objective = [&u](const Eigen::VectorXd& z) { return jb_estimate(u, z); };
    for (long t = 0; t < params.iters; ++t) {
        const DoubleTransition tr = env.mdp.sample_double_transition(env_rng);
        phi = env.feats.phi().row(tr.s);
        phi1 = env.feats.phi().row(tr.s_next);
        phi2 = env.feats.phi().row(tr.s_next2);
        msbr_tracker_step(u, phi, tr.r, tr.r_prime, phi1, phi2, gamma,
                          params.ce.alpha.eval(t + 1));
        opt.step(objective, algo_rng);
        if (record_due(t + 1, params.cadence, params.iters)) {
            check_ceiling(u.sup_norm(), params.tracker_ceiling, "sce-msbrm");
            const Eigen::VectorXd& mu = opt.state().theta.mu;
            out.push_back(ce_record(t + 1, metrics.sqrt_mse(mu), metrics.sqrt_mspbe(mu),
                                    opt.state()));
        }
    }
    return out;
}

namespace {

std::vector<TraceRecord> run_baseline_manifold(const DiscreteEnv& env, Algo algo,
                                               const BaselineParams& params, Rng& rng) {
    if (algo != Algo::td0 && algo != Algo::gtd2)
        throw ConfigError("algorithm '" + algo_name(algo) +
                          "' has no nonlinear variant; use td0 or gtd2 on manifolds");
    const NonlinearManifold& vf = *env.manifold;
    const ValueMetrics metrics(env);
    const double gamma = env.mdp.gamma();
    Rng env_rng = rng.split();
    rng.split();  // algorithm stream, unused but keeps trajectory alignment
    Eigen::VectorXd theta0 = params.z0;
    if (theta0.size() != vf.dim_param)
        theta0 = Eigen::VectorXd::Zero(vf.dim_param);
    NlPredictor p = NlPredictor::init(theta0);

    std::vector<TraceRecord> out;
    const int n = env.mdp.n_states();
    for (long t = 0; t < params.iters; ++t) {
        const Transition tr = env.mdp.sample_transition(env_rng);
        const double alpha = params.alpha.eval(t + 1);
        if (algo == Algo::td0)
            td0_nl_step(p, vf, tr.s, tr.r, tr.s_next, alpha, gamma);
        else
            gtd2_nl_step(p, vf, tr.s, tr.r, tr.s_next, alpha, params.beta.eval(t + 1),
                         gamma);
        if (record_due(t + 1, params.cadence, params.iters)) {
            const double mse = p.frozen() ? std::numeric_limits<double>::infinity()
                                          : metrics.sqrt_mse(vf.values(p.theta, n));
            out.push_back(TraceRecord{t + 1, mse, kNaN, kNaN, kNaN, kNaN, p.diverged});
        }
    }
    return out;
}

}  // namespace

std::vector<TraceRecord> run_baseline(const DiscreteEnv& env, Algo algo,
                                      const BaselineParams& params, Rng& rng) {
    if (env.manifold) return run_baseline_manifold(env, algo, params, rng);

    const int k = env.feats.k();
    const double gamma = env.mdp.gamma();
    const LinearMetrics metrics(env);
    Rng env_rng = rng.split();
    rng.split();  // algorithm stream, unused but keeps trajectory alignment
    Eigen::VectorXd z0 = params.z0;
    if (z0.size() != k) z0 = Eigen::VectorXd::Ones(k);

    LinearPredictor p = LinearPredictor::init(z0);
    LeastSquaresState ls = LeastSquaresState::init(k, params.ls_epsilon);
    const bool least_squares = algo == Algo::lstd || algo == Algo::lspe;

    Eigen::VectorXd phi(k), phi1(k), phi2(k);
    std::vector<TraceRecord> out;
    for (long t = 0; t < params.iters; ++t) {
        const double alpha = params.alpha.eval(t + 1);
        const double beta = params.beta.eval(t + 1);
        if (algo == Algo::rg) {
            const DoubleTransition tr = env.mdp.sample_double_transition(env_rng);
            phi = env.feats.phi().row(tr.s);
            phi1 = env.feats.phi().row(tr.s_next);
            phi2 = env.feats.phi().row(tr.s_next2);
            rg_step(p, phi, tr.r, phi1, phi2, alpha, gamma);
        } else {
            const Transition tr = env.mdp.sample_transition(env_rng);
            phi = env.feats.phi().row(tr.s);
            phi1 = env.feats.phi().row(tr.s_next);
            switch (algo) {
                case Algo::td0:
                    td_lambda_step(p, phi, tr.r, phi1, alpha, 0.0, gamma);
                    break;
                case Algo::td_lambda:
                    td_lambda_step(p, phi, tr.r, phi1, alpha, params.trace_lambda, gamma);
                    break;
                case Algo::gtd2:
                    gtd2_step(p, phi, tr.r, phi1, alpha, beta, gamma);
                    break;
                case Algo::tdc:
                    tdc_step(p, phi, tr.r, phi1, alpha, beta, gamma);
                    break;
                case Algo::lstd:
                case Algo::lspe:
                    least_squares_accumulate(ls, phi, tr.r, phi1, params.trace_lambda,
                                             gamma);
                    break;
                default:
                    throw ConfigError("run_baseline: not a baseline algorithm");
            }
        }
        if (record_due(t + 1, params.cadence, params.iters)) {
            const Eigen::VectorXd z =
                least_squares ? (algo == Algo::lstd ? lstd_solve(ls) : lspe_solve(ls))
                              : p.z;
            const double mse =
                p.frozen() ? std::numeric_limits<double>::infinity() : metrics.sqrt_mse(z);
            const double mspbe = p.frozen()
                                     ? std::numeric_limits<double>::infinity()
                                     : metrics.sqrt_mspbe(z);
            out.push_back(TraceRecord{t + 1, mse, mspbe, kNaN, kNaN, kNaN, p.diverged});
        }
    }
    return out;
}

ContinuousEvaluator::ContinuousEvaluator(const ContinuousEnv& env, int n_eval,
                                         std::uint64_t seed)
    : gamma_(env.gamma) {
    Rng rng(seed);
    Eigen::VectorXd s = Eigen::VectorXd::Zero(env.state_dim);
    const int burn_in = 2000;
    for (int t = 0; t < burn_in; ++t) s = env.step(s, rng).s_next;

    features_.resize(n_eval, env.k);
    next_features_.resize(n_eval, env.k);
    expected_r_.resize(n_eval);
    true_values_.resize(n_eval);
    for (int i = 0; i < n_eval; ++i) {
        features_.row(i) = env.features(s);
        next_features_.row(i) = env.expected_next_features(s);
        expected_r_[i] = env.expected_reward(s);
        true_values_[i] = env.true_value(s);
        s = env.step(s, rng).s_next;
    }
    const Eigen::MatrixXd gram =
        features_.transpose() * features_ / static_cast<double>(n_eval);
    gram_.compute(gram);
}

double ContinuousEvaluator::sqrt_mse(const Eigen::VectorXd& z) const {
    const Eigen::VectorXd diff = true_values_ - features_ * z;
    return std::sqrt(diff.squaredNorm() / static_cast<double>(diff.size()));
}

double ContinuousEvaluator::sqrt_mspbe(const Eigen::VectorXd& z) const {
    const auto n = static_cast<double>(expected_r_.size());
    const Eigen::VectorXd td_means =
        expected_r_ + gamma_ * (next_features_ * z) - features_ * z;
    const Eigen::VectorXd g = features_.transpose() * td_means / n;
    return std::sqrt(std::max(0.0, g.dot(gram_.solve(g))));
}

std::vector<TraceRecord> run_sce_mspbem(const ContinuousEnv& env,
                                        const ContinuousEvaluator& eval,
                                        const SceParams& params, Rng& rng) {
    const int k = env.k;
    Rng env_rng = rng.split();
    Rng algo_rng = rng.split();
    MspbeTracker w = MspbeTracker::zero(k);
    CeOptimizer opt(params.ce,
                    GaussianModel::isotropic(params.mu0, params.sigma0 * params.sigma0));
    const auto objective = [&w](const Eigen::VectorXd& z) { return jp_estimate(w, z); };

    Eigen::VectorXd s = Eigen::VectorXd::Zero(env.state_dim);
    Eigen::VectorXd phi = env.features(s);
    std::vector<TraceRecord> out;
    for (long t = 0; t < params.iters; ++t) {
        const ContinuousEnv::Step step = env.step(s, env_rng);
        const Eigen::VectorXd phi_next = env.features(step.s_next);
        mspbe_tracker_step(w, phi, step.r, phi_next, env.gamma,
                           params.ce.alpha.eval(t + 1));
        opt.step(objective, algo_rng);
        s = step.s_next;
        phi = phi_next;
        if (record_due(t + 1, params.cadence, params.iters)) {
            check_ceiling(w.sup_norm(), params.tracker_ceiling, "sce-mspbem");
            const Eigen::VectorXd& mu = opt.state().theta.mu;
            out.push_back(
                ce_record(t + 1, eval.sqrt_mse(mu), eval.sqrt_mspbe(mu), opt.state()));
        }
    }
    return out;
}

std::vector<TraceRecord> run_baseline(const ContinuousEnv& env,
                                      const ContinuousEvaluator& eval, Algo algo,
                                      const BaselineParams& params, Rng& rng) {
    if (algo == Algo::rg)
        throw ConfigError("rg needs double sampling; finite environments only");
    const int k = env.k;
    Rng env_rng = rng.split();
    rng.split();  // algorithm stream, unused but keeps trajectory alignment
    Eigen::VectorXd z0 = params.z0;
    if (z0.size() != k) z0 = Eigen::VectorXd::Zero(k);
    LinearPredictor p = LinearPredictor::init(z0);
    LeastSquaresState ls = LeastSquaresState::init(k, params.ls_epsilon);
    const bool least_squares = algo == Algo::lstd || algo == Algo::lspe;

    Eigen::VectorXd s = Eigen::VectorXd::Zero(env.state_dim);
    Eigen::VectorXd phi = env.features(s);
    std::vector<TraceRecord> out;
    for (long t = 0; t < params.iters; ++t) {
        const ContinuousEnv::Step step = env.step(s, env_rng);
        const Eigen::VectorXd phi_next = env.features(step.s_next);
        const double alpha = params.alpha.eval(t + 1);
        switch (algo) {
            case Algo::td0:
                td_lambda_step(p, phi, step.r, phi_next, alpha, 0.0, env.gamma);
                break;
            case Algo::td_lambda:
                td_lambda_step(p, phi, step.r, phi_next, alpha, params.trace_lambda,
                               env.gamma);
                break;
            case Algo::gtd2:
                gtd2_step(p, phi, step.r, phi_next, alpha, params.beta.eval(t + 1),
                          env.gamma);
                break;
            case Algo::tdc:
                tdc_step(p, phi, step.r, phi_next, alpha, params.beta.eval(t + 1),
                         env.gamma);
                break;
            case Algo::lstd:
            case Algo::lspe:
                least_squares_accumulate(ls, phi, step.r, phi_next, params.trace_lambda,
                                         env.gamma);
                break;
            default:
                throw ConfigError("run_baseline: not a baseline algorithm");
        }
        s = step.s_next;
        phi = phi_next;
        if (record_due(t + 1, params.cadence, params.iters)) {
            const Eigen::VectorXd z =
                least_squares ? (algo == Algo::lstd ? lstd_solve(ls) : lspe_solve(ls))
                              : p.z;
            const double mse =
                p.frozen() ? std::numeric_limits<double>::infinity() : eval.sqrt_mse(z);
            const double mspbe =
                p.frozen() ? std::numeric_limits<double>::infinity() : eval.sqrt_mspbe(z);
            out.push_back(TraceRecord{t + 1, mse, mspbe, kNaN, kNaN, kNaN, p.diverged});
        }
    }
    return out;
}

}  // namespace cepred
