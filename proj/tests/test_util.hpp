#pragma once

#include <Eigen/Dense>

#include "cepred/mdp.hpp"
#include "cepred/rng.hpp"

namespace cepred::test {

/// Random ergodic MDP with dense positive transition rows, uniform(0,1)
/// rewards and a random positive sampling distribution.
inline FiniteMdp random_mdp(int n, double gamma, Rng& rng) {
    Eigen::MatrixXd p(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) p(i, j) = 0.05 + rng.uniform();
        p.row(i) /= p.row(i).sum();
    }
    Eigen::MatrixXd r(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) r(i, j) = 2.0 * rng.uniform() - 0.5;
    Eigen::VectorXd nu(n);
    for (int i = 0; i < n; ++i) nu[i] = 0.2 + rng.uniform();
    nu /= nu.sum();
    return FiniteMdp(p, r, gamma, nu);
}

/// Random full-rank feature matrix (checked by construction retry).
inline LinearFeatures random_features(int n, int k, Rng& rng) {
    for (int attempt = 0; attempt < 16; ++attempt) {
        Eigen::MatrixXd phi(n, k);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < k; ++j) phi(i, j) = 2.0 * rng.uniform() - 1.0;
        LinearFeatures feats(std::move(phi));
        if (feats.full_rank()) return feats;
    }
    throw std::runtime_error("random_features: could not draw a full-rank matrix");
}

inline Eigen::VectorXd random_vector(int k, double scale, Rng& rng) {
    Eigen::VectorXd z(k);
    for (int i = 0; i < k; ++i) z[i] = scale * (2.0 * rng.uniform() - 1.0);
    return z;
}

}  // namespace cepred::test
