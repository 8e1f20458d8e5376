#pragma once

#include <Eigen/Core>
#include <functional>
#include <vector>

#include "cepred/rng.hpp"

namespace cepred {

/// One sampled step: s drawn from the sampling distribution, s_next from the
/// transition row of s, r the reward of the realized transition.
struct Transition {
    int s;
    double r;
    int s_next;
};

/// Double-sampled step: two next states drawn independently from the same
/// current state, each with its own reward.
struct DoubleTransition {
    int s;
    double r;
    double r_prime;
    int s_next;
    int s_next2;
};

/// Finite Markov reward process induced by a fixed policy: row-stochastic
/// transition matrix, dense reward kernel R(s, s'), discount, and the
/// distribution nu from which current states are sampled.
class FiniteMdp {
  public:
    FiniteMdp(Eigen::MatrixXd transition, Eigen::MatrixXd reward, double gamma,
              Eigen::VectorXd nu);

    int n_states() const { return static_cast<int>(transition_.rows()); }
    const Eigen::MatrixXd& transition() const { return transition_; }
    const Eigen::MatrixXd& reward() const { return reward_; }
    double gamma() const { return gamma_; }
    const Eigen::VectorXd& nu() const { return nu_; }

    /// Expected one-step reward per state: R(s) = sum_s' P(s,s') R(s,s').
    const Eigen::VectorXd& expected_reward() const { return expected_reward_; }

    Transition sample_transition(Rng& rng) const;
    DoubleTransition sample_double_transition(Rng& rng) const;

    /// Chain rollout with s_{t+1} = s'_t; length 0 gives an empty sequence.
    std::vector<Transition> rollout_onpolicy(int s0, long length, Rng& rng) const;

  private:
    int sample_next(int s, Rng& rng) const;

    Eigen::MatrixXd transition_;
    Eigen::MatrixXd reward_;
    double gamma_;
    Eigen::VectorXd nu_;
    Eigen::VectorXd expected_reward_;
    Eigen::VectorXd nu_cdf_;
    Eigen::MatrixXd row_cdf_;
};

/// Linear feature matrix, row s holding phi(s)^T. Rank is detected at
/// construction; oracles that invert Phi^T D Phi require full column rank.
class LinearFeatures {
  public:
    explicit LinearFeatures(Eigen::MatrixXd phi);

    const Eigen::MatrixXd& phi() const { return phi_; }
    int k() const { return static_cast<int>(phi_.cols()); }
    int n_states() const { return static_cast<int>(phi_.rows()); }
    bool full_rank() const { return full_rank_; }
    int rank() const { return rank_; }

    Eigen::VectorXd feature(int s) const { return phi_.row(s).transpose(); }

  private:
    Eigen::MatrixXd phi_;
    int rank_;
    bool full_rank_;
};

/// Parametrized value-function manifold: evaluate gives V_p(s), gradient its
/// derivative in the parameters, hessian_vp the Hessian-vector product needed
/// by second-order baselines.
struct NonlinearManifold {
    int dim_param = 0;
    std::function<double(const Eigen::VectorXd&, int)> evaluate;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&, int)> gradient;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&, int, const Eigen::VectorXd&)>
        hessian_vp;

    /// Value vector over all states of an n-state chain.
    Eigen::VectorXd values(const Eigen::VectorXd& params, int n_states) const {
        Eigen::VectorXd v(n_states);
        for (int s = 0; s < n_states; ++s) v[s] = evaluate(params, s);
        return v;
    }
};

// Exact oracles, dense linear algebra. Desk-scale MDPs only.

/// V = (I - gamma P)^{-1} R, the unique solution of the Bellman equation.
Eigen::VectorXd solve_value_function(const FiniteMdp& mdp);

/// Pi = Phi (Phi^T D Phi)^{-1} Phi^T D. Throws NumericalError when the
/// features are rank deficient (projection undefined).
Eigen::MatrixXd projection_matrix(const FiniteMdp& mdp, const LinearFeatures& feats);

/// nu-weighted squared distance of a value vector from the true V.
double mse_of_values(const Eigen::VectorXd& values, const FiniteMdp& mdp);
double mse(const Eigen::VectorXd& z, const FiniteMdp& mdp, const LinearFeatures& feats);

/// || Phi z - Pi T Phi z ||^2_nu.
double mspbe_exact(const Eigen::VectorXd& z, const FiniteMdp& mdp,
                   const LinearFeatures& feats);

/// sum_s nu(s) (R(s) + gamma (P v)(s) - v(s))^2, for any value vector.
double msbr_of_values(const Eigen::VectorXd& values, const FiniteMdp& mdp);
double msbr_exact(const Eigen::VectorXd& z, const FiniteMdp& mdp,
                  const LinearFeatures& feats);

/// Stationary distribution of an ergodic chain by power iteration.
Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& transition,
                                        double tol = 1e-12, long max_iters = 200000);

}  // namespace cepred
