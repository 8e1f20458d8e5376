#include "cepred/envs.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "cepred/errors.hpp"

namespace cepred {

namespace {

Eigen::VectorXd uniform_dist(int n) {
    return Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
}

Eigen::MatrixXd baird_transition() {
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(7, 7);
    p.col(6).setOnes();
    return p;
}

Eigen::MatrixXd baird_phi_perfect() {
    Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(7, 8);
    for (int s = 0; s < 6; ++s) {
        phi(s, 0) = 1.0;
        phi(s, s + 1) = 2.0;
    }
    phi(6, 0) = 2.0;
    phi(6, 7) = 1.0;
    return phi;
}

Eigen::MatrixXd baird_phi_imperfect() {
    Eigen::MatrixXd phi(7, 8);
    phi << 1, 2, 0, 0, 0, 0, 1, 0,  //
        1, 0, 2, 0, 0, 0, 0, 0,     //
        1, 0, 0, 2, 0, 0, 0, 0,     //
        1, 0, 0, 0, 2, 0, 0, 0,     //
        1, 0, 0, 0, 0, 0, 0, 2,     //
        1, 0, 0, 0, 0, 0, 0, 3,     //
        2, 0, 0, 0, 0, 0, 0, 1;
    return phi;
}

Eigen::MatrixXd ring_transition() {
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(10, 10);
    for (int s = 0; s < 10; ++s) p(s, (s + 1) % 10) = 1.0;
    return p;
}

Eigen::MatrixXd ring_phi() {
    Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(10, 8);
    for (int s = 0; s < 8; ++s) phi(s, s) = 1.0;
    phi(8, 7) = 1.0;
    phi(9, 5) = 1.0;
    return phi;
}

/// h(z)_i = cos^2(z_i) exp(c z_i) and its derivatives, the componentwise map
/// of the nonlinear Baird / ring manifolds.
struct CosSqExpMap {
    double c;
    double value(double z) const {
        const double cz = std::cos(z);
        return cz * cz * std::exp(c * z);
    }
    double deriv(double z) const {
        const double cz = std::cos(z);
        return std::exp(c * z) * (c * cz * cz - std::sin(2.0 * z));
    }
    double deriv2(double z) const {
        return std::exp(c * z) * (c * c * std::cos(z) * std::cos(z) -
                                  2.0 * c * std::sin(2.0 * z) - 2.0 * std::cos(2.0 * z));
    }
};

NonlinearManifold feature_composed_manifold(const Eigen::MatrixXd& phi, double growth) {
    NonlinearManifold m;
    const CosSqExpMap h{growth};
    m.dim_param = static_cast<int>(phi.cols());
    m.evaluate = [phi, h](const Eigen::VectorXd& z, int s) {
        double v = 0.0;
        for (Eigen::Index i = 0; i < z.size(); ++i) v += phi(s, i) * h.value(z[i]);
        return v;
    };
    m.gradient = [phi, h](const Eigen::VectorXd& z, int s) {
        Eigen::VectorXd g(z.size());
        for (Eigen::Index i = 0; i < z.size(); ++i) g[i] = phi(s, i) * h.deriv(z[i]);
        return g;
    };
    // The Hessian is diagonal, so the product is a componentwise scale.
    m.hessian_vp = [phi, h](const Eigen::VectorXd& z, int s, const Eigen::VectorXd& w) {
        Eigen::VectorXd out(z.size());
        for (Eigen::Index i = 0; i < z.size(); ++i)
            out[i] = phi(s, i) * h.deriv2(z[i]) * w[i];
        return out;
    };
    return m;
}

}  // namespace

DiscreteEnv make_baird(BairdFeatures set, double gamma) {
    const bool perfect = set == BairdFeatures::perfect;
    if (gamma < 0.0) gamma = perfect ? 0.9 : 0.99;
    const double reward = perfect ? 0.0 : 2.0;
    FiniteMdp mdp(baird_transition(), Eigen::MatrixXd::Constant(7, 7, reward), gamma,
                  uniform_dist(7));
    LinearFeatures feats(perfect ? baird_phi_perfect() : baird_phi_imperfect());
    return DiscreteEnv{std::move(mdp), std::move(feats),
                       perfect ? "baird" : "baird-imperfect", std::nullopt,
                       nullptr, Eigen::VectorXd(), Eigen::VectorXd()};
}

DiscreteEnv make_ring10(double gamma) {
    FiniteMdp mdp(ring_transition(), Eigen::MatrixXd::Constant(10, 10, 1.0), gamma,
                  uniform_dist(10));
    return DiscreteEnv{std::move(mdp), LinearFeatures(ring_phi()), "ring10", std::nullopt,
                       nullptr, Eigen::VectorXd(), Eigen::VectorXd()};
}

DiscreteEnv make_random_mdp(int n_states, int k, BasisKind basis, std::uint64_t seed,
                            double gamma) {
    Rng rng(seed);
    const int n = n_states;
    Eigen::VectorXd g(n), b(n);
    for (int s = 0; s < n; ++s) g[s] = rng.uniform();
    for (int s = 0; s < n; ++s) b[s] = rng.uniform();

    // Binomial(n, b(s)) over s' = 0..n truncated to the state range and
    // renormalized row by row. Log-space accumulation keeps n ~ 1000 stable.
    Eigen::MatrixXd p(n, n);
    for (int s = 0; s < n; ++s) {
        const double lb = std::log(std::max(b[s], 1e-12));
        const double l1b = std::log(std::max(1.0 - b[s], 1e-12));
        double log_choose = 0.0;  // log C(n, 0)
        for (int s2 = 0; s2 < n; ++s2) {
            if (s2 > 0)
                log_choose += std::log(static_cast<double>(n - s2 + 1)) -
                              std::log(static_cast<double>(s2));
            p(s, s2) = std::exp(log_choose + s2 * lb + (n - s2) * l1b);
        }
        const double row_sum = p.row(s).sum();
        if (row_sum <= 0.0) throw NumericalError("make_random_mdp: empty transition row");
        p.row(s) /= row_sum;
    }

    Eigen::MatrixXd reward(n, n);
    for (int s = 0; s < n; ++s)
        for (int s2 = 0; s2 < n; ++s2)
            reward(s, s2) = g[s] * g[s2] * std::pow(1.0 / (1.0 + s2), 0.25);

    Eigen::MatrixXd phi(n, k);
    if (basis == BasisKind::rbf) {
        // Centers every n/k states with half-spacing width; at the published
        // scale (n = 1000, k = 50) this is exactly m_i = 10 + 20 (i - 1),
        // v_i = 10.
        const double spacing = static_cast<double>(n) / static_cast<double>(k);
        const double width = 0.5 * spacing;
        for (int i = 0; i < k; ++i) {
            const double center = 0.5 * spacing + spacing * i;
            for (int s = 0; s < n; ++s) {
                const double d = (s - center) / width;
                phi(s, i) = std::exp(-0.5 * d * d);
            }
        }
    } else {
        // Harmonics over the normalized state x = s/n; the raw index would
        // zero out every sine term.
        for (int s = 0; s < n; ++s) {
            const double x = static_cast<double>(s) / static_cast<double>(n);
            for (int i = 1; i <= k; ++i) {
                if (i == 1)
                    phi(s, i - 1) = 1.0;
                else if (i % 2 == 1)
                    phi(s, i - 1) = std::cos((i + 1) * M_PI * x / 2.0);
                else
                    phi(s, i - 1) = std::sin(i * M_PI * x / 2.0);
            }
        }
    }

    const Eigen::VectorXd nu = stationary_distribution(p);
    FiniteMdp mdp(std::move(p), std::move(reward), gamma, nu);
    return DiscreteEnv{std::move(mdp), LinearFeatures(std::move(phi)),
                       basis == BasisKind::rbf ? "random-rbf" : "random-fourier",
                       std::nullopt, nullptr, Eigen::VectorXd(), Eigen::VectorXd()};
}

Eigen::VectorXd vanroy_psi(double eta, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const double scale = std::exp(kVanroyEps * eta);
    return scale * (std::cos(kVanroyTau * eta) * a - std::sin(kVanroyTau * eta) * b);
}

DiscreteEnv make_vanroy() {
    Eigen::MatrixXd p(3, 3);
    p << 0.5, 0.0, 0.5,  //
        0.5, 0.5, 0.0,   //
        0.0, 0.5, 0.5;
    Eigen::VectorXd a(3), b(3);
    a << 100.0, -70.0, -30.0;
    b << 23.094, -98.15, 75.056;

    const Eigen::VectorXd nu = stationary_distribution(p);
    FiniteMdp mdp(std::move(p), Eigen::MatrixXd::Zero(3, 3), 0.9, nu);
    // Identity features carried along so the linear baselines remain runnable.
    LinearFeatures feats(Eigen::MatrixXd::Identity(3, 3));

    NonlinearManifold m;
    m.dim_param = 1;
    m.evaluate = [a, b](const Eigen::VectorXd& eta, int s) {
        return vanroy_psi(eta[0], a, b)[s];
    };
    m.gradient = [a, b](const Eigen::VectorXd& eta, int s) {
        const double e = eta[0];
        const double scale = std::exp(kVanroyEps * e);
        const double c = std::cos(kVanroyTau * e);
        const double d = std::sin(kVanroyTau * e);
        const double base = a[s] * c - b[s] * d;
        const double dbase = -a[s] * kVanroyTau * d - b[s] * kVanroyTau * c;
        Eigen::VectorXd g(1);
        g[0] = scale * (kVanroyEps * base + dbase);
        return g;
    };
    m.hessian_vp = [a, b](const Eigen::VectorXd& eta, int s, const Eigen::VectorXd& w) {
        const double e = eta[0];
        const double scale = std::exp(kVanroyEps * e);
        const double c = std::cos(kVanroyTau * e);
        const double d = std::sin(kVanroyTau * e);
        const double base = a[s] * c - b[s] * d;
        const double dbase = -kVanroyTau * (a[s] * d + b[s] * c);
        const double d2base = -kVanroyTau * kVanroyTau * base;
        Eigen::VectorXd out(1);
        out[0] = scale * (kVanroyEps * kVanroyEps * base + 2.0 * kVanroyEps * dbase + d2base) *
                 w[0];
        return out;
    };

    return DiscreteEnv{std::move(mdp), std::move(feats), "vanroy", std::move(m),
                       nullptr, a, b};
}

namespace {

std::function<Eigen::VectorXd(const Eigen::VectorXd&)> componentwise_map(double growth) {
    const CosSqExpMap h{growth};
    return [h](const Eigen::VectorXd& z) {
        Eigen::VectorXd out(z.size());
        for (Eigen::Index i = 0; i < z.size(); ++i) out[i] = h.value(z[i]);
        return out;
    };
}

}  // namespace

DiscreteEnv make_nonlinear_baird() {
    FiniteMdp mdp(baird_transition(), Eigen::MatrixXd::Zero(7, 7), 0.9, uniform_dist(7));
    LinearFeatures feats(baird_phi_perfect());
    NonlinearManifold m = feature_composed_manifold(feats.phi(), 0.01);
    return DiscreteEnv{std::move(mdp), std::move(feats), "baird-nl", std::move(m),
                       componentwise_map(0.01), Eigen::VectorXd(), Eigen::VectorXd()};
}

DiscreteEnv make_nonlinear_ring() {
    Eigen::MatrixXd p = ring_transition();
    const Eigen::VectorXd nu = stationary_distribution(p);
    FiniteMdp mdp(std::move(p), Eigen::MatrixXd::Zero(10, 10), 0.99, nu);
    LinearFeatures feats(ring_phi());
    NonlinearManifold m = feature_composed_manifold(feats.phi(), 0.1);
    return DiscreteEnv{std::move(mdp), std::move(feats), "ring10-nl", std::move(m),
                       componentwise_map(0.1), Eigen::VectorXd(), Eigen::VectorXd()};
}

Eigen::MatrixXd lqr_gain(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                         const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R, double gamma,
                         double tol, long max_iters) {
    // Discounted problem == undiscounted with dynamics scaled by sqrt(gamma).
    const double root = std::sqrt(gamma);
    const Eigen::MatrixXd As = root * A;
    const Eigen::MatrixXd Bs = root * B;
    Eigen::MatrixXd P = Q;
    for (long i = 0; i < max_iters; ++i) {
        const Eigen::MatrixXd BtP = Bs.transpose() * P;
        const Eigen::MatrixXd gain =
            (R + BtP * Bs).ldlt().solve(BtP * As);  // minimizing gain, a = -gain s
        Eigen::MatrixXd next =
            Q + As.transpose() * P * As - As.transpose() * P * Bs * gain;
        next = 0.5 * (next + next.transpose()).eval();
        const double delta = (next - P).cwiseAbs().maxCoeff();
        P = next;
        if (delta < tol) {
            const Eigen::MatrixXd BtP2 = Bs.transpose() * P;
            return -(R + BtP2 * Bs).ldlt().solve(BtP2 * As);
        }
    }
    throw NumericalError("lqr_gain: Riccati iteration did not converge");
}

namespace {

/// Quadratic monomial map (1, squares, then cross terms in index order),
/// truncated to the published feature count.
Eigen::VectorXd quadratic_features(const Eigen::VectorXd& s, int k) {
    Eigen::VectorXd out(k);
    int idx = 0;
    out[idx++] = 1.0;
    for (Eigen::Index i = 0; i < s.size() && idx < k; ++i) out[idx++] = s[i] * s[i];
    for (Eigen::Index i = 0; i < s.size() && idx < k; ++i)
        for (Eigen::Index j = i + 1; j < s.size() && idx < k; ++j) out[idx++] = s[i] * s[j];
    return out;
}

/// E[phi(s')] for s' ~ N(mean, cov) under the same monomial layout.
Eigen::VectorXd quadratic_feature_mean(const Eigen::VectorXd& mean,
                                       const Eigen::MatrixXd& cov, int k) {
    Eigen::VectorXd out(k);
    int idx = 0;
    out[idx++] = 1.0;
    for (Eigen::Index i = 0; i < mean.size() && idx < k; ++i)
        out[idx++] = mean[i] * mean[i] + cov(i, i);
    for (Eigen::Index i = 0; i < mean.size() && idx < k; ++i)
        for (Eigen::Index j = i + 1; j < mean.size() && idx < k; ++j)
            out[idx++] = mean[i] * mean[j] + cov(i, j);
    return out;
}

void finalize_value(ContinuousEnv& env) {
    env.A_closed = env.A + env.B * env.K;
    env.W = env.sigma_policy * env.sigma_policy * env.B * env.B.transpose();
    for (int i = 0; i < env.state_dim; ++i)
        env.W(i, i) += env.noise_std[i] * env.noise_std[i];

    // V(s) = -(s^T P s + c): P from the policy Lyapunov equation, c collecting
    // the noise-driven running cost.
    const Eigen::MatrixXd cost = env.Q + env.K.transpose() * env.Ra * env.K;
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(env.state_dim, env.state_dim);
    for (long i = 0; i < 1000000; ++i) {
        Eigen::MatrixXd next = cost + env.gamma * env.A_closed.transpose() * P * env.A_closed;
        next = 0.5 * (next + next.transpose()).eval();
        const double delta = (next - P).cwiseAbs().maxCoeff();
        P = next;
        if (delta < 1e-12) break;
    }
    env.P_value = P;
    const double action_noise_cost =
        env.sigma_policy * env.sigma_policy * env.Ra.trace();
    env.c_value =
        (action_noise_cost + env.gamma * (P * env.W).trace()) / (1.0 - env.gamma);
}

}  // namespace

Eigen::VectorXd ContinuousEnv::features(const Eigen::VectorXd& s) const {
    return quadratic_features(s, k);
}

ContinuousEnv::Step ContinuousEnv::step(const Eigen::VectorXd& s, Rng& rng) const {
    Eigen::VectorXd a = K * s;
    for (Eigen::Index i = 0; i < a.size(); ++i) a[i] += sigma_policy * rng.normal();
    const double r = -(s.dot(Q * s) + a.dot(Ra * a));
    Eigen::VectorXd s_next = A * s + B * a;
    for (int i = 0; i < state_dim; ++i)
        if (noise_std[i] > 0.0) s_next[i] += noise_std[i] * rng.normal();
    return Step{r, std::move(s_next)};
}

double ContinuousEnv::expected_reward(const Eigen::VectorXd& s) const {
    const Eigen::VectorXd mean_a = K * s;
    return -(s.dot(Q * s) + mean_a.dot(Ra * mean_a) +
             sigma_policy * sigma_policy * Ra.trace());
}

Eigen::VectorXd ContinuousEnv::expected_next_features(const Eigen::VectorXd& s) const {
    return quadratic_feature_mean(A_closed * s, W, k);
}

double ContinuousEnv::expected_td_error(const Eigen::VectorXd& s,
                                        const Eigen::VectorXd& z) const {
    return expected_reward(s) + gamma * expected_next_features(s).dot(z) -
           features(s).dot(z);
}

ContinuousEnv make_cartpole(double sigma_policy) {
    // State (psi, psi_dot, x, x_dot); dynamics are the printed linearization.
    const double g = 9.8, m = 0.5, M = 0.5, l = 0.6, b = 0.1, dt = 0.1;
    const double den1 = 4.0 * M * l - m * l;
    const double den2 = 4.0 * M - m;

    ContinuousEnv env;
    env.name = "cartpole";
    env.state_dim = 4;
    env.action_dim = 1;
    env.k = 11;
    env.gamma = 0.95;
    env.dt = dt;

    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(4, 4);
    A(0, 1) += dt;
    A(1, 0) += dt * 3.0 * (M + m) / den1;
    A(1, 1) += dt * 3.0 * b / den1;
    A(2, 3) += dt;
    A(3, 0) += dt * 3.0 * m * g / den2;
    A(3, 1) += dt * (-4.0 * b) / den2;
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(4, 1);
    B(1, 0) = dt * (-3.0) / den1;
    B(3, 0) = dt * 4.0 / den2;
    env.A = A;
    env.B = B;

    env.noise_std = Eigen::VectorXd::Zero(4);
    env.noise_std[3] = 0.01;  // sigma_2, on the cart velocity

    env.Q = Eigen::MatrixXd::Zero(4, 4);
    env.Q(0, 0) = 100.0;  // -100 psi^2
    env.Q(2, 2) = 1.0;    // -x^2
    env.Ra = Eigen::MatrixXd::Constant(1, 1, 0.1);
    env.sigma_policy = sigma_policy;

    env.K = lqr_gain(A, B, env.Q, env.Ra, env.gamma);
    finalize_value(env);
    return env;
}

ContinuousEnv make_pendulum5(double sigma_policy) {
    const double g = 9.8, m = 1.0, l = 1.0, dt = 0.1;
    const int links = 5;

    Eigen::MatrixXd mass(links, links);
    for (int i = 0; i < links; ++i)
        for (int j = 0; j < links; ++j)
            mass(i, j) = l * l * (6.0 - std::max(i + 1, j + 1)) * m;
    Eigen::MatrixXd U = Eigen::MatrixXd::Zero(links, links);
    for (int i = 0; i < links; ++i) U(i, i) = -g * l * (6.0 - (i + 1)) * m;
    const Eigen::MatrixXd mass_inv = mass.inverse();

    ContinuousEnv env;
    env.name = "pendulum5";
    env.state_dim = 10;
    env.action_dim = 5;
    env.k = 46;
    env.gamma = 0.95;
    env.dt = dt;

    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(10, 10);
    A.topLeftCorner(5, 5).setIdentity();
    A.topRightCorner(5, 5) = dt * Eigen::MatrixXd::Identity(5, 5);
    A.bottomLeftCorner(5, 5) = -dt * mass_inv * U;
    A.bottomRightCorner(5, 5).setIdentity();
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(10, 5);
    B.bottomRows(5) = dt * mass_inv;
    env.A = A;
    env.B = B;

    env.noise_std = Eigen::VectorXd::Constant(10, 0.01);

    env.Q = Eigen::MatrixXd::Zero(10, 10);
    env.Q.topLeftCorner(5, 5).setIdentity();  // -q^T q
    env.Ra = Eigen::MatrixXd::Zero(5, 5);
    env.sigma_policy = sigma_policy;

    env.K = lqr_gain(A, B, env.Q, env.Ra, env.gamma);
    finalize_value(env);
    return env;
}

}  // namespace cepred
