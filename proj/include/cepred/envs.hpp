#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>

#include "cepred/mdp.hpp"

namespace cepred {

/// Finite benchmark: chain, features, and (for the nonlinear experiments) the
/// value-function manifold evaluated through those features.
struct DiscreteEnv {
    FiniteMdp mdp;
    LinearFeatures feats;
    std::string name;
    std::optional<NonlinearManifold> manifold;
    // Componentwise map h with value = Phi h(z) for the feature-composed
    // manifolds; empty for linear benchmarks.
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> feature_param_map;
    // Manifold tables of the three-state counterexample; empty otherwise.
    Eigen::VectorXd nl_a;
    Eigen::VectorXd nl_b;
};

enum class BairdFeatures { perfect, imperfect };
enum class BasisKind { rbf, fourier };

/// Seven-state star chain: every transition lands in the hub state, sampling
/// distribution uniform, so the chain is not ergodic and TD(0) diverges for
/// gamma = 0.9.
DiscreteEnv make_baird(BairdFeatures set, double gamma = -1.0);

/// Deterministic 10-cycle with unit rewards and a repeated-basis feature set.
DiscreteEnv make_ring10(double gamma = 0.99);

/// Ergodic chain with binomial transition rows (renormalized over the state
/// range) and product rewards; features are RBF or Fourier over the
/// normalized state index.
DiscreteEnv make_random_mdp(int n_states, int k, BasisKind basis, std::uint64_t seed,
                            double gamma);

/// Three-state chain (gamma 0.9, zero rewards) with the spiral manifold
/// psi_eta(s) = (a(s) cos(tau eta) - b(s) sin(tau eta)) e^{eps eta}.
DiscreteEnv make_vanroy();

/// Baird / ring chains wrapped with the componentwise manifold
/// h(z)_i = cos^2(z_i) exp(c z_i), value = Phi h(z), zero rewards.
DiscreteEnv make_nonlinear_baird();
DiscreteEnv make_nonlinear_ring();

constexpr double kVanroyTau = 0.01;
constexpr double kVanroyEps = 0.001;

/// psi_eta value vector of the three-state manifold.
Eigen::VectorXd vanroy_psi(double eta, const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// Linear-Gaussian benchmark with an LQR evaluation policy and quadratic
/// monomial features. The closed-loop chain is ergodic; the value of the
/// policy is the quadratic -(s^T P s + c), exact on the linearized system.
struct ContinuousEnv {
    std::string name;
    int state_dim = 0;
    int action_dim = 0;
    int k = 0;
    double gamma = 0.0;
    double dt = 0.0;
    Eigen::MatrixXd A;           // open-loop state matrix
    Eigen::MatrixXd B;           // control matrix
    Eigen::VectorXd noise_std;   // additive dynamics noise per component
    Eigen::MatrixXd Q;           // state cost, reward = -(s^T Q s + a^T Ra a)
    Eigen::MatrixXd Ra;          // action cost
    Eigen::MatrixXd K;           // policy gain, a = K s + sigma_policy * eps
    double sigma_policy = 0.0;
    Eigen::MatrixXd A_closed;    // A + B K
    Eigen::MatrixXd W;           // next-state covariance given s
    Eigen::MatrixXd P_value;     // V(s) = -(s^T P_value s + c_value)
    double c_value = 0.0;

    Eigen::VectorXd features(const Eigen::VectorXd& s) const;

    struct Step {
        double r;
        Eigen::VectorXd s_next;
    };
    Step step(const Eigen::VectorXd& s, Rng& rng) const;

    double true_value(const Eigen::VectorXd& s) const {
        return -(s.dot(P_value * s) + c_value);
    }
    /// Exact conditional expectation of the TD error given s, usable because
    /// the closed-loop transition is Gaussian with known mean and covariance.
    double expected_td_error(const Eigen::VectorXd& s, const Eigen::VectorXd& z) const;
    /// Exact conditional mean of the feature vector at the next state.
    Eigen::VectorXd expected_next_features(const Eigen::VectorXd& s) const;
    double expected_reward(const Eigen::VectorXd& s) const;
};

ContinuousEnv make_cartpole(double sigma_policy = 1.0);
ContinuousEnv make_pendulum5(double sigma_policy = 1.0);

/// Discounted discrete-time LQR via Riccati fixed-point iteration; returns
/// the gain K of a = K s minimizing E sum gamma^t (s^T Q s + a^T R a).
Eigen::MatrixXd lqr_gain(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                         const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R, double gamma,
                         double tol = 1e-10, long max_iters = 1000000);

}  // namespace cepred
