#pragma once

#include <Eigen/Core>
#include <cassert>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "cepred/rng.hpp"
#include "cepred/schedule.hpp"

namespace cepred {

/// Gaussian search model theta = (mu, Sigma).
struct GaussianModel {
    Eigen::VectorXd mu;
    Eigen::MatrixXd sigma;

    static GaussianModel isotropic(const Eigen::VectorXd& mu, double variance) {
        return GaussianModel{mu, variance * Eigen::MatrixXd::Identity(mu.size(), mu.size())};
    }
    void symmetrize() { sigma = 0.5 * (sigma + sigma.transpose()).eval(); }
};

/// Shape function S(x) = exp(r x); exponent clamped to +-500 since only the
/// relative weighting of elite samples matters.
inline double shape_s(double x, double r) {
    return std::exp(std::clamp(r * x, -500.0, 500.0));
}

// Elite-weighting kernels. The indicator includes the boundary h == gamma.
inline double g0(double h, double gamma, double r) {
    return h >= gamma ? shape_s(h, r) : 0.0;
}
inline Eigen::VectorXd g1(double h, const Eigen::VectorXd& x, double gamma, double r) {
    return g0(h, gamma, r) * x;
}
inline Eigen::MatrixXd g2(double h, const Eigen::VectorXd& x, double gamma,
                          const Eigen::VectorXd& mu, double r) {
    const Eigen::VectorXd d = x - mu;
    return g0(h, gamma, r) * (d * d.transpose());
}

/// Quantile-tracking increment: fixed point is the (1-rho)-quantile of h.
/// Both indicators fire on a tie, exactly as the recursion is written.
inline double quantile_increment(double h, double gamma, double rho) {
    return -(1.0 - rho) * (h >= gamma ? 1.0 : 0.0) + rho * (h <= gamma ? 1.0 : 0.0);
}
inline double update_quantile(double gamma_t, double h, double rho, double beta) {
    return gamma_t - beta * quantile_increment(h, gamma_t, rho);
}

inline Eigen::VectorXd update_xi0(const Eigen::VectorXd& xi0, const Eigen::VectorXd& z,
                                  double h, double gamma_t, double beta, double r) {
    const double w = g0(h, gamma_t, r);
    return xi0 + beta * (w * z - w * xi0);
}

inline Eigen::MatrixXd update_xi1(const Eigen::MatrixXd& xi1, const Eigen::VectorXd& z,
                                  double h, double gamma_t, const Eigen::VectorXd& xi0,
                                  double beta, double r) {
    const double w = g0(h, gamma_t, r);
    const Eigen::VectorXd d = z - xi0;
    Eigen::MatrixXd next = xi1 + beta * (w * (d * d.transpose()) - w * xi1);
    return 0.5 * (next + next.transpose()).eval();
}

/// T_{t+1} = T_t + c (I{gamma > gamma_prev} - I{gamma <= gamma_prev} - T_t);
/// stays in (-1, 1) for any T_0 in (0, 1). An exact floating-point tie
/// counts for neither side: with constant step sizes both threshold
/// recursions move on one shared increment lattice, so ties that are
/// measure-zero in the analysis become persistent in finite arithmetic and
/// would otherwise pin T at -1.
inline double update_threshold_tracker(double T, double gamma_t1, double gamma_prev_t1,
                                       double c) {
    double cmp = 0.0;
    if (gamma_t1 > gamma_prev_t1)
        cmp = 1.0;
    else if (gamma_t1 < gamma_prev_t1)
        cmp = -1.0;
    return T + c * (cmp - T);
}

/// Gaussian sampler with a cached Cholesky-type factor, so draws between
/// model updates cost O(k^2). Near-singular covariances get additive jitter
/// starting at 1e-10 tr(Sigma)/k and doubling up to 8 times; a zero
/// covariance degenerates to a point mass at mu.
class GaussianSampler {
  public:
    GaussianSampler() = default;
    explicit GaussianSampler(const GaussianModel& model);

    const Eigen::VectorXd& mu() const { return mu_; }

    void draw(Rng& rng, Eigen::VectorXd& out) const {
        for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = rng.normal();
        out = mu_ + factor_ * out;
    }
    Eigen::VectorXd draw(Rng& rng) const {
        Eigen::VectorXd out(mu_.size());
        draw(rng, out);
        return out;
    }

  private:
    Eigen::VectorXd mu_;
    Eigen::MatrixXd factor_;
};

/// With probability lambda draw from the initial model, else the current one.
inline Eigen::VectorXd sample_mixture(const GaussianSampler& current,
                                      const GaussianSampler& initial, double lambda_mix,
                                      Rng& rng) {
    return rng.uniform() < lambda_mix ? initial.draw(rng) : current.draw(rng);
}

struct CeConfig {
    double rho = 0.1;
    double lambda_mix = 0.01;
    double epsilon1 = 0.95;
    double r_shape = 0.01;
    double c0 = 0.01;
    double c_decay = 1.0;  // optional geometric decay of c at each model update
    StepSchedule alpha = StepSchedule::constant(0.001);
    StepSchedule beta = StepSchedule::constant(0.05);

    void validate() const;
};

/// All tracker variables of the stochastic CE recursion.
struct CeState {
    GaussianModel theta;
    std::optional<GaussianModel> theta_prev;
    double gamma_t = 0.0;
    double gamma_prev = -std::numeric_limits<double>::infinity();
    Eigen::VectorXd xi0;
    Eigen::MatrixXd xi1;
    double T = 0.0;
    double c = 0.0;
    long t = 0;
    long n_model_updates = 0;
};

/// Slow-timescale model blend theta += alpha (xi - theta), applied every
/// iteration. Gating the blend on the threshold comparison would freeze the
/// model: comparison events fire far too rarely for step sizes like 1/t or
/// 1e-3 to accumulate, and neither the published cart-pole nor the star-chain
/// behaviour is reachable that way.
inline void blend_model(CeState& state, const CeConfig& cfg) {
    const double a = cfg.alpha.eval(state.t + 1);
    state.theta.mu += a * (state.xi0 - state.theta.mu);
    state.theta.sigma += a * (state.xi1 - state.theta.sigma);
}

/// Threshold-comparison bookkeeping: when T has crossed epsilon1 the current
/// model becomes the saved reference, gamma_save (the iteration-start
/// threshold) its warm start, and T and c reset. Returns true on the event.
inline bool maybe_update_model(CeState& state, const CeConfig& cfg, double gamma_save) {
    if (!(state.T > cfg.epsilon1)) return false;
    state.gamma_prev = gamma_save;
    state.theta_prev = state.theta;
    ++state.n_model_updates;
    state.T = 0.0;
    state.c *= cfg.c_decay;
    return true;
}

/// The multi-timescale stochastic-approximation CE optimizer. Generic over
/// the objective: each step consumes one evaluation handle J(z) built by the
/// caller from whatever tracker state it maintains. Per-iteration work is
/// O(k^2); nothing larger than k x k is ever formed.
class CeOptimizer {
  public:
    CeOptimizer(CeConfig cfg, GaussianModel theta0);

    template <typename Objective>
    void step(Objective&& objective, Rng& rng) {
        const double beta = cfg_.beta.eval(state_.t + 1);
        const double gamma_snapshot = state_.gamma_t;

        if (rng.uniform() < cfg_.lambda_mix)
            sampler0_.draw(rng, z_);
        else
            sampler_.draw(rng, z_);
        const double h = objective(z_);

        // gamma, xi0 and xi1 all advance off the iteration-start snapshot;
        // the xi1 kernel takes the iteration-start xi0 as its mean.
        const double w = g0(h, gamma_snapshot, cfg_.r_shape);
        state_.gamma_t -= beta * quantile_increment(h, gamma_snapshot, cfg_.rho);
        if (w != 0.0) {
            diff_ = z_ - state_.xi0;
            outer_.noalias() = diff_ * diff_.transpose();
            state_.xi1 += (beta * w) * (outer_ - state_.xi1);
            state_.xi0 += (beta * w) * diff_;
        }

        if (state_.theta_prev) {
            if (rng.uniform() < cfg_.lambda_mix)
                sampler0_.draw(rng, z_);
            else
                sampler_prev_.draw(rng, z_);
            const double h_prev = objective(z_);
            state_.gamma_prev -=
                beta * quantile_increment(h_prev, state_.gamma_prev, cfg_.rho);
        }

        state_.T = update_threshold_tracker(state_.T, state_.gamma_t, state_.gamma_prev,
                                            state_.c);
        // Open interval in exact arithmetic; long runs of identical
        // comparisons saturate to +-1 in floating point once the model is
        // degenerate, hence the closed bounds here.
        assert(state_.T >= -1.0 && state_.T <= 1.0);

        blend_model(state_, cfg_);
        if (maybe_update_model(state_, cfg_, gamma_snapshot))
            sampler_prev_ = GaussianSampler(*state_.theta_prev);
        // The sampling factor refreshes on a k-step cadence, keeping the
        // amortized per-iteration cost at O(k^2) despite the O(k^3)
        // factorization.
        if (++since_refresh_ >= refresh_period_) {
            sampler_ = GaussianSampler(state_.theta);
            since_refresh_ = 0;
        }
        ++state_.t;
    }

    const CeState& state() const { return state_; }
    const CeConfig& config() const { return cfg_; }

    /// Model collapsed to a point mass; the mean is the reported solution.
    bool converged() const {
        return state_.theta.sigma.cwiseAbs().maxCoeff() < 1e-12;
    }

  private:
    CeConfig cfg_;
    CeState state_;
    GaussianSampler sampler_;
    GaussianSampler sampler0_;
    GaussianSampler sampler_prev_;
    Eigen::VectorXd z_, diff_;
    Eigen::MatrixXd outer_;
    long refresh_period_ = 1;
    long since_refresh_ = 0;
};

/// Iterate trace of a deterministic-objective CE run.
struct CeTracePoint {
    long t;
    Eigen::VectorXd mu;
    double sigma_fro;
    double gamma_t;
    double gamma_prev;
    double T;
};

/// CE on a deterministic objective (no tracker): the stochastic recursion
/// reduced to pure optimization. Stops early once the model degenerates.
template <typename Objective>
std::vector<CeTracePoint> run_ce(Objective&& objective, const CeConfig& cfg,
                                 const GaussianModel& theta0, long iters, Rng& rng,
                                 long cadence = 100) {
    cfg.validate();
    CeOptimizer opt(cfg, theta0);
    std::vector<CeTracePoint> trace;
    for (long t = 0; t < iters; ++t) {
        opt.step(objective, rng);
        const CeState& st = opt.state();
        if (t % cadence == 0 || t + 1 == iters)
            trace.push_back(CeTracePoint{st.t, st.theta.mu, st.theta.sigma.norm(),
                                         st.gamma_t, st.gamma_prev, st.T});
        if (opt.converged()) break;
    }
    return trace;
}

}  // namespace cepred
