#include "cepred/mdp.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "cepred/errors.hpp"

namespace cepred {

namespace {

Eigen::VectorXd cumulative(const Eigen::VectorXd& p) {
    Eigen::VectorXd cdf(p.size());
    double acc = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        acc += p[i];
        cdf[i] = acc;
    }
    cdf[p.size() - 1] = 1.0;  // guard against rounding at the top
    return cdf;
}

}  // namespace

FiniteMdp::FiniteMdp(Eigen::MatrixXd transition, Eigen::MatrixXd reward, double gamma,
                     Eigen::VectorXd nu)
    : transition_(std::move(transition)),
      reward_(std::move(reward)),
      gamma_(gamma),
      nu_(std::move(nu)) {
    const auto n = transition_.rows();
    if (transition_.cols() != n || reward_.rows() != n || reward_.cols() != n ||
        nu_.size() != n)
        throw ConfigError("FiniteMdp: inconsistent dimensions");
    if (gamma_ < 0.0 || gamma_ >= 1.0)
        throw ConfigError("FiniteMdp: discount must lie in [0, 1)");
    for (Eigen::Index s = 0; s < n; ++s) {
        if (transition_.row(s).minCoeff() < 0.0)
            throw ConfigError("FiniteMdp: negative transition probability");
        if (std::abs(transition_.row(s).sum() - 1.0) > 1e-12)
            throw ConfigError("FiniteMdp: transition row does not sum to 1");
        if (nu_[s] <= 0.0)
            throw ConfigError("FiniteMdp: sampling distribution must be positive");
    }
    if (std::abs(nu_.sum() - 1.0) > 1e-12)
        throw ConfigError("FiniteMdp: sampling distribution does not sum to 1");

    expected_reward_ = (transition_.array() * reward_.array()).rowwise().sum();
    nu_cdf_ = cumulative(nu_);
    row_cdf_.resize(n, n);
    for (Eigen::Index s = 0; s < n; ++s)
        row_cdf_.row(s) = cumulative(transition_.row(s).transpose()).transpose();
}

int FiniteMdp::sample_next(int s, Rng& rng) const {
    const double u = rng.uniform();
    const auto row = row_cdf_.row(s);
    Eigen::Index lo = 0;
    Eigen::Index hi = row.size() - 1;
    while (lo < hi) {
        const Eigen::Index mid = (lo + hi) / 2;
        if (row[mid] > u)
            hi = mid;
        else
            lo = mid + 1;
    }
    return static_cast<int>(lo);
}

Transition FiniteMdp::sample_transition(Rng& rng) const {
    const int s = static_cast<int>(rng.discrete_from_cdf(nu_cdf_));
    const int s_next = sample_next(s, rng);
    return Transition{s, reward_(s, s_next), s_next};
}

DoubleTransition FiniteMdp::sample_double_transition(Rng& rng) const {
    const int s = static_cast<int>(rng.discrete_from_cdf(nu_cdf_));
    const int s1 = sample_next(s, rng);
    const int s2 = sample_next(s, rng);
    return DoubleTransition{s, reward_(s, s1), reward_(s, s2), s1, s2};
}

std::vector<Transition> FiniteMdp::rollout_onpolicy(int s0, long length, Rng& rng) const {
    std::vector<Transition> out;
    out.reserve(static_cast<std::size_t>(length));
    int s = s0;
    for (long t = 0; t < length; ++t) {
        const int s_next = sample_next(s, rng);
        out.push_back(Transition{s, reward_(s, s_next), s_next});
        s = s_next;
    }
    return out;
}

LinearFeatures::LinearFeatures(Eigen::MatrixXd phi) : phi_(std::move(phi)) {
    // Singular values below 1e-10 * sigma_max count as zero.
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(phi_);
    const Eigen::VectorXd& sv = svd.singularValues();
    const double cutoff = sv.size() > 0 ? 1e-10 * sv[0] : 0.0;
    rank_ = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv[i] > cutoff) ++rank_;
    full_rank_ = rank_ == phi_.cols();
}

Eigen::VectorXd solve_value_function(const FiniteMdp& mdp) {
    const auto n = mdp.n_states();
    const Eigen::MatrixXd a =
        Eigen::MatrixXd::Identity(n, n) - mdp.gamma() * mdp.transition();
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
    const Eigen::VectorXd v = lu.solve(mdp.expected_reward());
    const double residual = (a * v - mdp.expected_reward()).lpNorm<Eigen::Infinity>();
    if (!v.allFinite() || residual > 1e-8)
        throw NumericalError("solve_value_function: singular Bellman solve");
    return v;
}

Eigen::MatrixXd projection_matrix(const FiniteMdp& mdp, const LinearFeatures& feats) {
    if (!feats.full_rank())
        throw NumericalError("projection undefined: feature matrix is rank deficient");
    const Eigen::MatrixXd& phi = feats.phi();
    const Eigen::MatrixXd phi_d = mdp.nu().asDiagonal() * phi;  // D Phi
    const Eigen::MatrixXd gram = phi.transpose() * phi_d;       // Phi^T D Phi
    Eigen::LDLT<Eigen::MatrixXd> solver(gram);
    if (solver.info() != Eigen::Success)
        throw NumericalError("projection undefined: Phi^T D Phi not invertible");
    return phi * solver.solve(phi_d.transpose());
}

double mse_of_values(const Eigen::VectorXd& values, const FiniteMdp& mdp) {
    const Eigen::VectorXd diff = solve_value_function(mdp) - values;
    return (mdp.nu().array() * diff.array().square()).sum();
}

double mse(const Eigen::VectorXd& z, const FiniteMdp& mdp, const LinearFeatures& feats) {
    return mse_of_values(feats.phi() * z, mdp);
}

double mspbe_exact(const Eigen::VectorXd& z, const FiniteMdp& mdp,
                   const LinearFeatures& feats) {
    // Compact form (Phi^T D (T V - V))^T (Phi^T D Phi)^+ (Phi^T D (T V - V)).
    // The pseudo-inverse extends the definition to over-parametrized feature
    // sets (columns dependent, span intact) such as the seven-state star;
    // the residual vector always lies in the range of the Gram matrix.
    const Eigen::MatrixXd& phi = feats.phi();
    const Eigen::VectorXd v = phi * z;
    const Eigen::VectorXd bellman_diff =
        mdp.expected_reward() + mdp.gamma() * (mdp.transition() * v) - v;
    const Eigen::VectorXd e =
        phi.transpose() * (mdp.nu().asDiagonal() * bellman_diff);
    const Eigen::MatrixXd gram =
        phi.transpose() * (mdp.nu().asDiagonal() * phi);
    const Eigen::VectorXd sol = gram.completeOrthogonalDecomposition().solve(e);
    return std::max(0.0, e.dot(sol));
}

double msbr_of_values(const Eigen::VectorXd& values, const FiniteMdp& mdp) {
    const Eigen::VectorXd residual =
        mdp.expected_reward() + mdp.gamma() * (mdp.transition() * values) - values;
    return (mdp.nu().array() * residual.array().square()).sum();
}

double msbr_exact(const Eigen::VectorXd& z, const FiniteMdp& mdp,
                  const LinearFeatures& feats) {
    return msbr_of_values(feats.phi() * z, mdp);
}

Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& transition, double tol,
                                        long max_iters) {
    const auto n = transition.rows();
    Eigen::VectorXd pi = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
    for (long i = 0; i < max_iters; ++i) {
        Eigen::VectorXd next = transition.transpose() * pi;
        next /= next.sum();
        const double delta = (next - pi).lpNorm<Eigen::Infinity>();
        pi = next;
        if (delta < tol) return pi;
    }
    throw NumericalError("stationary_distribution: power iteration did not converge");
}

}  // namespace cepred
