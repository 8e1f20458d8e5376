#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "cepred/baselines.hpp"
#include "cepred/envs.hpp"
#include "cepred/objectives.hpp"
#include "test_util.hpp"

using namespace cepred;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

/// Least-squares state filled with exact expectations instead of sample
/// sums, the infinite-data limit of the accumulation.
LeastSquaresState exact_ls_state(const FiniteMdp& mdp, const LinearFeatures& feats) {
    LeastSquaresState s = LeastSquaresState::init(feats.k(), 1e-12);
    const MatrixXd& phi = feats.phi();
    const MatrixXd d = mdp.nu().asDiagonal();
    s.A += phi.transpose() * d *
           (phi - mdp.gamma() * mdp.transition() * phi);
    s.B += phi.transpose() * d * phi;
    s.b += phi.transpose() * d * mdp.expected_reward();
    s.n = 1;
    return s;
}

}  // namespace

TEST_CASE("td step: zero TD error leaves the weights alone") {
    LinearPredictor p = LinearPredictor::init(VectorXd::Zero(3));
    VectorXd phi(3), phi_next(3);
    phi << 1, 0, 1;
    phi_next << 0, 1, 0;
    td_lambda_step(p, phi, 0.0, phi_next, 0.1, 0.0, 0.9);
    CHECK(p.z.norm() == 0.0);

    // One step from zero with lambda = 0: z = alpha r phi.
    td_lambda_step(p, phi, 2.0, phi_next, 0.1, 0.0, 0.9);
    CHECK((p.z - 0.1 * 2.0 * phi).norm() < 1e-15);
}

TEST_CASE("td(0): tracks the least-squares solution on an easy ring") {
    const DiscreteEnv env = make_ring10(0.1);
    LinearPredictor p = LinearPredictor::init(VectorXd::Zero(8));
    LeastSquaresState ls = LeastSquaresState::init(8, 1e-3);
    Rng rng(41);
    for (long t = 0; t < 100000; ++t) {
        const Transition tr = env.mdp.sample_transition(rng);
        const VectorXd phi = env.feats.feature(tr.s);
        const VectorXd phi_next = env.feats.feature(tr.s_next);
        td_lambda_step(p, phi, tr.r, phi_next, 0.01, 0.0, env.mdp.gamma());
        least_squares_accumulate(ls, phi, tr.r, phi_next, 0.0, env.mdp.gamma());
    }
    const double mse_td = std::sqrt(mse(p.z, env.mdp, env.feats));
    const double mse_ls = std::sqrt(mse(lstd_solve(ls), env.mdp, env.feats));
    CHECK(mse_td == doctest::Approx(mse_ls).epsilon(0.05));
    CHECK(!p.diverged);
}

TEST_CASE("rg step: no update on zero error, pure regression at gamma 0") {
    LinearPredictor p = LinearPredictor::init(VectorXd::Zero(2));
    VectorXd phi(2), phi1(2), phi2(2);
    phi << 1, 2;
    phi1 << 0, 1;
    phi2 << 1, 0;
    rg_step(p, phi, 0.0, phi1, phi2, 0.1, 0.9);
    CHECK(p.z.norm() == 0.0);

    rg_step(p, phi, 1.5, phi1, phi2, 0.1, 0.0);
    CHECK((p.z - 0.1 * 1.5 * phi).norm() < 1e-15);
}

TEST_CASE("gtd2 step: frozen until the secondary weights move") {
    LinearPredictor p = LinearPredictor::init(VectorXd::Ones(2));
    VectorXd phi(2), phi_next(2);
    phi << 1, 0;
    phi_next << 0, 1;
    const VectorXd before = p.z;
    gtd2_step(p, phi, 1.0, phi_next, 0.05, 0.1, 0.9);
    CHECK((p.z - before).norm() == 0.0);  // v was zero
    CHECK(p.aux.norm() > 0.0);
}

TEST_CASE("gtd2 and tdc find the projected fixed point of a small chain") {
    Rng rng(42);
    const FiniteMdp mdp = test::random_mdp(5, 0.9, rng);
    const LinearFeatures raw = test::random_features(5, 3, rng);
    // Scaled features keep the slow-timescale matrices well conditioned.
    const LinearFeatures feats(3.0 * raw.phi());
    const VectorXd z_star = mspbe_minimizer(mdp, feats);

    LinearPredictor gtd = LinearPredictor::init(VectorXd::Zero(3));
    LinearPredictor tdc = LinearPredictor::init(VectorXd::Zero(3));
    for (long t = 1; t <= 600000; ++t) {
        const Transition tr = mdp.sample_transition(rng);
        const VectorXd phi = feats.feature(tr.s);
        const VectorXd phi_next = feats.feature(tr.s_next);
        const double alpha = std::min(0.05, 100.0 / static_cast<double>(t));
        const double beta = std::min(0.2, 400.0 / static_cast<double>(t));
        gtd2_step(gtd, phi, tr.r, phi_next, alpha, beta, mdp.gamma());
        tdc_step(tdc, phi, tr.r, phi_next, alpha, beta, mdp.gamma());
    }
    CHECK((gtd.z - z_star).norm() < 2e-2);
    CHECK((tdc.z - z_star).norm() < 1e-2);
}

TEST_CASE("tdc step: zero secondary weights reduce to plain TD") {
    VectorXd phi(2), phi_next(2);
    phi << 1, 2;
    phi_next << 2, 0;
    LinearPredictor a = LinearPredictor::init(VectorXd::Ones(2));
    LinearPredictor b = LinearPredictor::init(VectorXd::Ones(2));
    tdc_step(a, phi, 0.7, phi_next, 0.1, 0.0, 0.9);
    td_lambda_step(b, phi, 0.7, phi_next, 0.1, 0.0, 0.9);
    CHECK((a.z - b.z).norm() < 1e-15);

    LinearPredictor c = LinearPredictor::init(VectorXd::Zero(2));
    tdc_step(c, phi, 0.0, VectorXd::Zero(2), 0.1, 0.1, 0.9);
    CHECK(c.z.norm() == 0.0);
}

TEST_CASE("lstd: exact expectations give the exact projected solution") {
    Rng rng(43);
    for (int trial = 0; trial < 10; ++trial) {
        const FiniteMdp mdp = test::random_mdp(6, 0.9, rng);
        const LinearFeatures feats = test::random_features(6, 3, rng);
        const LeastSquaresState s = exact_ls_state(mdp, feats);
        const VectorXd z = lstd_solve(s);
        CHECK((z - mspbe_minimizer(mdp, feats)).norm() < 1e-9);
    }
}

TEST_CASE("lstd: no data returns the epsilon-regularized trivial solution") {
    const LeastSquaresState s = LeastSquaresState::init(3, 1e-3);
    CHECK(lstd_solve(s).norm() == 0.0);  // b = 0, A = eps I
    CHECK(lspe_solve(s).norm() == 0.0);
}

TEST_CASE("lspe: agrees with lstd") {
    // Identity features: both reduce to solving the Bellman equation.
    Rng rng(44);
    const FiniteMdp mdp = test::random_mdp(5, 0.9, rng);
    const LinearFeatures identity(MatrixXd::Identity(5, 5));
    const LeastSquaresState s = exact_ls_state(mdp, identity);
    CHECK((lspe_solve(s) - lstd_solve(s)).norm() < 1e-6);

    // Sampled run on a wider chain.
    const FiniteMdp mdp2 = test::random_mdp(20, 0.9, rng);
    const LinearFeatures feats = test::random_features(20, 5, rng);
    LeastSquaresState acc = LeastSquaresState::init(5, 1e-3);
    for (long t = 0; t < 50000; ++t) {
        const Transition tr = mdp2.sample_transition(rng);
        least_squares_accumulate(acc, feats.feature(tr.s), tr.r,
                                 feats.feature(tr.s_next), 0.0, mdp2.gamma());
    }
    const double m_lstd = std::sqrt(mse(lstd_solve(acc), mdp2, feats));
    const double m_lspe = std::sqrt(mse(lspe_solve(acc), mdp2, feats));
    CHECK(std::abs(m_lstd - m_lspe) < 0.2);
}

TEST_CASE("td(0) diverges on the star chain for every tested step size") {
    // The unstable mode grows like exp(0.0214 alpha t), so the iteration
    // budget scales with 1/alpha for the 1e8 flag threshold.
    for (const double alpha : {1e-3, 1e-2, 1e-1}) {
        const DiscreteEnv env = make_baird(BairdFeatures::perfect, 0.9);
        VectorXd z0 = VectorXd::Ones(8);
        z0[6] = 10.0;
        LinearPredictor p = LinearPredictor::init(z0);
        Rng rng(45);
        const long budget = static_cast<long>(1000.0 / alpha);
        for (long t = 0; t < budget && !p.diverged; ++t) {
            const Transition tr = env.mdp.sample_transition(rng);
            td_lambda_step(p, env.feats.feature(tr.s), tr.r,
                           env.feats.feature(tr.s_next), alpha, 0.0,
                           env.mdp.gamma());
        }
        CHECK(p.diverged);
    }
}

TEST_CASE("gtd2 stays stable on the star chain where td(0) diverges") {
    const DiscreteEnv env = make_baird(BairdFeatures::perfect, 0.9);
    VectorXd z0 = VectorXd::Ones(8);
    z0[6] = 10.0;
    LinearPredictor p = LinearPredictor::init(z0);
    Rng rng(46);
    for (long t = 0; t < 100000; ++t) {
        const Transition tr = env.mdp.sample_transition(rng);
        gtd2_step(p, env.feats.feature(tr.s), tr.r, env.feats.feature(tr.s_next),
                  0.001, 0.05, env.mdp.gamma());
    }
    CHECK(!p.diverged);
}

TEST_CASE("nonlinear gtd2: no-op case and exact linear reduction") {
    const DiscreteEnv env = make_ring10();
    // Linear manifold wrapping the same features.
    NonlinearManifold linear;
    const MatrixXd phi = env.feats.phi();
    linear.dim_param = 8;
    linear.evaluate = [phi](const VectorXd& z, int s) { return phi.row(s).dot(z); };
    linear.gradient = [phi](const VectorXd&, int s) -> VectorXd {
        return phi.row(s).transpose();
    };
    linear.hessian_vp = [](const VectorXd& z, int, const VectorXd&) -> VectorXd {
        return VectorXd::Zero(z.size());
    };

    NlPredictor nl = NlPredictor::init(VectorXd::Zero(8));
    gtd2_nl_step(nl, linear, 0, 0.0, 1, 0.1, 0.2, 0.0);
    CHECK(nl.theta.norm() == 0.0);  // w = 0 and delta = 0

    Rng rng(47);
    NlPredictor a = NlPredictor::init(VectorXd::Ones(8));
    LinearPredictor b = LinearPredictor::init(VectorXd::Ones(8));
    for (long t = 0; t < 5000; ++t) {
        const Transition tr = env.mdp.sample_transition(rng);
        gtd2_nl_step(a, linear, tr.s, tr.r, tr.s_next, 0.01, 0.05, env.mdp.gamma());
        gtd2_step(b, env.feats.feature(tr.s), tr.r, env.feats.feature(tr.s_next),
                  0.01, 0.05, env.mdp.gamma());
    }
    CHECK((a.theta - b.z).lpNorm<Eigen::Infinity>() < 1e-12);
    CHECK((a.w - b.aux).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("manifold derivatives match central finite differences") {
    Rng rng(48);
    const double fd_step = 1e-5;
    for (const auto& env : {make_vanroy(), make_nonlinear_baird(), make_nonlinear_ring()}) {
        const NonlinearManifold& m = *env.manifold;
        for (int trial = 0; trial < 50; ++trial) {
            const VectorXd z = test::random_vector(m.dim_param, 2.0, rng);
            const int s = static_cast<int>(rng.uniform() * env.mdp.n_states());
            const VectorXd grad = m.gradient(z, s);
            VectorXd fd(m.dim_param);
            for (int i = 0; i < m.dim_param; ++i) {
                VectorXd zp = z, zm = z;
                zp[i] += fd_step;
                zm[i] -= fd_step;
                fd[i] = (m.evaluate(zp, s) - m.evaluate(zm, s)) / (2.0 * fd_step);
            }
            CHECK((grad - fd).norm() < 1e-5 * (1.0 + fd.norm()));

            // Hessian-vector product against differentiated gradients.
            const VectorXd w = test::random_vector(m.dim_param, 1.0, rng);
            const VectorXd hvp = m.hessian_vp(z, s, w);
            const VectorXd gp = m.gradient(z + fd_step * w, s);
            const VectorXd gm = m.gradient(z - fd_step * w, s);
            const VectorXd fd_hvp = (gp - gm) / (2.0 * fd_step);
            CHECK((hvp - fd_hvp).norm() < 1e-5 * (1.0 + fd_hvp.norm()));
        }
    }
}

TEST_CASE("divergence is flagged and the trace stays finite") {
    LinearPredictor p = LinearPredictor::init(VectorXd::Constant(1, 2.0));
    VectorXd phi(1), phi_next(1);
    phi << 1.0;
    phi_next << 3.0;
    // Deliberately unstable update loop.
    for (int t = 0; t < 2000 && !p.frozen(); ++t)
        td_lambda_step(p, phi, 1.0, phi_next, 0.9, 0.0, 0.99);
    CHECK(p.diverged);
    CHECK(p.z.allFinite());
}
