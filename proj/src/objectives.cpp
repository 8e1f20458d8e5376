#include "cepred/objectives.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "cepred/errors.hpp"

namespace cepred {

double MspbeTracker::sup_norm() const {
    double m = w0.cwiseAbs().maxCoeff();
    m = std::max(m, w1.cwiseAbs().maxCoeff());
    return std::max(m, w2.cwiseAbs().maxCoeff());
}

void mspbe_tracker_step(MspbeTracker& w, const Eigen::VectorXd& phi, double r,
                        const Eigen::VectorXd& phi_next, double gamma, double alpha) {
    w.w0 += alpha * (r * phi - w.w0);
    w.w1 += alpha * (phi * (gamma * phi_next - phi).transpose() - w.w1);
    w.w2 += alpha * (Eigen::MatrixXd::Identity(phi.size(), phi.size()) -
                     phi * (phi.transpose() * w.w2));
}

void mspbe_tracker_step(MspbeTracker& w, const Transition& tr, const LinearFeatures& feats,
                        double gamma, double alpha) {
    mspbe_tracker_step(w, feats.feature(tr.s), tr.r, feats.feature(tr.s_next), gamma,
                       alpha);
}

double jp_estimate(const MspbeTracker& w, const Eigen::VectorXd& z) {
    const Eigen::VectorXd e = w.w0 + w.w1 * z;
    return -e.dot(w.w2 * e);
}

double MsbrTracker::sup_norm() const {
    double m = std::abs(u0);
    m = std::max(m, u1.cwiseAbs().maxCoeff());
    m = std::max(m, u2.cwiseAbs().maxCoeff());
    return std::max(m, u3.cwiseAbs().maxCoeff());
}

void msbr_tracker_step(MsbrTracker& u, const Eigen::VectorXd& phi, double r, double r_prime,
                       const Eigen::VectorXd& phi_next, const Eigen::VectorXd& phi_next2,
                       double gamma, double alpha) {
    u.u0 += alpha * (r * r_prime - u.u0);
    u.u1 += alpha * (gamma * gamma * phi_next * phi_next2.transpose() - u.u1);
    // Cross statistic: each reward pairs with the feature of the *other*
    // next-state sample, so the product of conditional expectations is
    // estimated without same-sample bias.
    u.u2 += alpha * (0.5 * (r * (gamma * phi_next2 - phi) + r_prime * (gamma * phi_next - phi)) -
                     u.u2);
    u.u3 += alpha * ((phi - 2.0 * gamma * phi_next) * phi.transpose() - u.u3);
}

void msbr_tracker_step(MsbrTracker& u, const DoubleTransition& tr,
                       const LinearFeatures& feats, double gamma, double alpha) {
    msbr_tracker_step(u, feats.feature(tr.s), tr.r, tr.r_prime, feats.feature(tr.s_next),
                      feats.feature(tr.s_next2), gamma, alpha);
}

double jb_estimate(const MsbrTracker& u, const Eigen::VectorXd& z) {
    return -(u.u0 + z.dot((u.u1 + u.u3) * z) + 2.0 * z.dot(u.u2));
}

void nl_msbr_tracker_step(NlMsbrTracker& u, const DoubleTransition& tr,
                          const Eigen::VectorXd& a, const Eigen::VectorXd& b, double gamma,
                          double alpha) {
    Eigen::Vector3d h, h_prime;
    h << tr.r, gamma * a[tr.s_next] - a[tr.s], gamma * b[tr.s_next] - b[tr.s];
    h_prime << tr.r_prime, gamma * a[tr.s_next2] - a[tr.s], gamma * b[tr.s_next2] - b[tr.s];
    u.u += alpha * (h * h_prime.transpose() - u.u);
}

double nl_msbr_estimate(const NlMsbrTracker& u, double eta, double tau, double eps) {
    const double scale = std::exp(eps * eta);
    const double c = scale * std::cos(tau * eta);
    const double d = scale * std::sin(tau * eta);
    const Eigen::Vector2d trig(c, -d);
    const double linear =
        u.u(0, 0) + 2.0 * c * u.u(1, 0) - 2.0 * d * u.u(2, 0);
    return linear + trig.dot(u.u.block<2, 2>(1, 1) * trig);
}

namespace {

// E[phi' | s] for every s, rows of P Phi.
Eigen::MatrixXd next_feature_means(const FiniteMdp& mdp, const LinearFeatures& feats) {
    return mdp.transition() * feats.phi();
}

}  // namespace

MspbeTracker exact_mspbe_moments(const FiniteMdp& mdp, const LinearFeatures& feats) {
    const Eigen::MatrixXd& phi = feats.phi();
    const Eigen::MatrixXd phi_d = mdp.nu().asDiagonal() * phi;
    MspbeTracker w = MspbeTracker::zero(feats.k());
    w.w0 = phi_d.transpose() * mdp.expected_reward();
    w.w1 = phi_d.transpose() * (mdp.gamma() * mdp.transition() * phi - phi);
    // Pseudo-inverse of the Gram matrix; identical to the inverse whenever
    // the features have full column rank, and the quadratic form stays exact
    // for dependent columns because w0, w1 z live in the Gram range.
    const Eigen::MatrixXd gram = phi.transpose() * phi_d;
    w.w2 = gram.completeOrthogonalDecomposition().pseudoInverse();
    return w;
}

MsbrTracker exact_msbr_moments(const FiniteMdp& mdp, const LinearFeatures& feats) {
    const Eigen::MatrixXd& phi = feats.phi();
    const Eigen::VectorXd& nu = mdp.nu();
    const Eigen::VectorXd& rbar = mdp.expected_reward();
    const Eigen::MatrixXd pphi = next_feature_means(mdp, feats);
    const double gamma = mdp.gamma();

    MsbrTracker u = MsbrTracker::zero(feats.k());
    u.u0 = (nu.array() * rbar.array().square()).sum();
    u.u1 = gamma * gamma * pphi.transpose() * (nu.asDiagonal() * pphi);
    u.u2 = (gamma * pphi - phi).transpose() * (nu.asDiagonal() * rbar);
    u.u3 = (phi - 2.0 * gamma * pphi).transpose() * (nu.asDiagonal() * phi);
    return u;
}

Eigen::Matrix3d exact_nl_msbr_moments(const FiniteMdp& mdp, const Eigen::VectorXd& a,
                                      const Eigen::VectorXd& b) {
    const int n = mdp.n_states();
    const double gamma = mdp.gamma();
    Eigen::Matrix3d u = Eigen::Matrix3d::Zero();
    for (int s = 0; s < n; ++s) {
        Eigen::Vector3d mean = Eigen::Vector3d::Zero();
        for (int s2 = 0; s2 < n; ++s2) {
            const double p = mdp.transition()(s, s2);
            if (p == 0.0) continue;
            mean[0] += p * mdp.reward()(s, s2);
            mean[1] += p * (gamma * a[s2] - a[s]);
            mean[2] += p * (gamma * b[s2] - b[s]);
        }
        u += mdp.nu()[s] * (mean * mean.transpose());
    }
    return u;
}

Eigen::VectorXd mspbe_minimizer(const FiniteMdp& mdp, const LinearFeatures& feats) {
    const MspbeTracker w = exact_mspbe_moments(mdp, feats);
    // Normal equations of the quadratic (w0 + w1 z)^T w2 (w0 + w1 z).
    const Eigen::MatrixXd a = w.w1.transpose() * w.w2 * w.w1;
    const Eigen::VectorXd b = -w.w1.transpose() * w.w2 * w.w0;
    return a.completeOrthogonalDecomposition().solve(b);
}

Eigen::VectorXd msbr_minimizer(const FiniteMdp& mdp, const LinearFeatures& feats) {
    const MsbrTracker u = exact_msbr_moments(mdp, feats);
    // grad = (u1 + u3 + (u1 + u3)^T) z + 2 u2 = 0.
    const Eigen::MatrixXd q = u.u1 + u.u3;
    const Eigen::MatrixXd a = q + q.transpose();
    const Eigen::VectorXd b = -2.0 * u.u2;
    return a.completeOrthogonalDecomposition().solve(b);
}

}  // namespace cepred
