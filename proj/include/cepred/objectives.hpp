#pragma once

#include <Eigen/Core>

#include "cepred/mdp.hpp"

namespace cepred {

/// Running statistics (omega-tuple) that decouple the MSPBE objective from
/// the parameter: w0 -> E[r phi], w1 -> E[phi (gamma phi' - phi)^T],
/// w2 -> E[phi phi^T]^{-1}.
struct MspbeTracker {
    Eigen::VectorXd w0;
    Eigen::MatrixXd w1;
    Eigen::MatrixXd w2;

    static MspbeTracker zero(int k) {
        return MspbeTracker{Eigen::VectorXd::Zero(k), Eigen::MatrixXd::Zero(k, k),
                            Eigen::MatrixXd::Zero(k, k)};
    }
    double sup_norm() const;
};

/// One stochastic-approximation step on a single transition. Takes no model
/// argument: the statistics never see the CE state.
void mspbe_tracker_step(MspbeTracker& w, const Eigen::VectorXd& phi, double r,
                        const Eigen::VectorXd& phi_next, double gamma, double alpha);
void mspbe_tracker_step(MspbeTracker& w, const Transition& tr, const LinearFeatures& feats,
                        double gamma, double alpha);

/// J_p estimate: -(w0 + w1 z)^T w2 (w0 + w1 z); equals -MSPBE(z) at the
/// tracker limit.
double jp_estimate(const MspbeTracker& w, const Eigen::VectorXd& z);

/// upsilon-tuple for MSBR, built from double-sampled transitions.
struct MsbrTracker {
    double u0 = 0.0;
    Eigen::MatrixXd u1;
    Eigen::VectorXd u2;
    Eigen::MatrixXd u3;

    static MsbrTracker zero(int k) {
        return MsbrTracker{0.0, Eigen::MatrixXd::Zero(k, k), Eigen::VectorXd::Zero(k),
                           Eigen::MatrixXd::Zero(k, k)};
    }
    double sup_norm() const;
};

void msbr_tracker_step(MsbrTracker& u, const Eigen::VectorXd& phi, double r, double r_prime,
                       const Eigen::VectorXd& phi_next, const Eigen::VectorXd& phi_next2,
                       double gamma, double alpha);
void msbr_tracker_step(MsbrTracker& u, const DoubleTransition& tr,
                       const LinearFeatures& feats, double gamma, double alpha);

/// J_b estimate: -(u0 + z^T (u1 + u3) z + 2 z^T u2) = -MSBR(z) at the limit.
double jb_estimate(const MsbrTracker& u, const Eigen::VectorXd& z);

/// 3x3 statistic for the nonlinear-manifold MSBR objective of the three-state
/// counterexample chain: u tracks E[h h'^T] with
/// h = (r, gamma a(s') - a(s), gamma b(s') - b(s)).
struct NlMsbrTracker {
    Eigen::Matrix3d u = Eigen::Matrix3d::Zero();
};

void nl_msbr_tracker_step(NlMsbrTracker& u, const DoubleTransition& tr,
                          const Eigen::VectorXd& a, const Eigen::VectorXd& b, double gamma,
                          double alpha);

/// MSBR estimate of the manifold point psi_eta; the CE objective is its
/// negative.
double nl_msbr_estimate(const NlMsbrTracker& u, double eta, double tau, double eps);

// Exact expectations of every tracked statistic, straight from (P, R, Phi, nu).
// These are the targets of the recursions above and the oracles in tests.
MspbeTracker exact_mspbe_moments(const FiniteMdp& mdp, const LinearFeatures& feats);
MsbrTracker exact_msbr_moments(const FiniteMdp& mdp, const LinearFeatures& feats);
Eigen::Matrix3d exact_nl_msbr_moments(const FiniteMdp& mdp, const Eigen::VectorXd& a,
                                      const Eigen::VectorXd& b);

/// argmin MSPBE: solves w1^T w2 (w0 + w1 z) = 0 from the exact moments.
Eigen::VectorXd mspbe_minimizer(const FiniteMdp& mdp, const LinearFeatures& feats);
/// argmin MSBR from the exact moments of the quadratic closed form.
Eigen::VectorXd msbr_minimizer(const FiniteMdp& mdp, const LinearFeatures& feats);

}  // namespace cepred
