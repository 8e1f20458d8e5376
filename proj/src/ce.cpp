#include "cepred/ce.hpp"

#include <Eigen/Cholesky>

#include "cepred/errors.hpp"

namespace cepred {

GaussianSampler::GaussianSampler(const GaussianModel& model) : mu_(model.mu) {
    const auto k = model.sigma.rows();
    Eigen::MatrixXd sym = 0.5 * (model.sigma + model.sigma.transpose());
    if (sym.cwiseAbs().maxCoeff() == 0.0) {
        factor_ = Eigen::MatrixXd::Zero(k, k);
        return;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(sym);
    if (llt.info() == Eigen::Success) {
        factor_ = llt.matrixL();
        return;
    }
    double jitter = 1e-10 * sym.trace() / static_cast<double>(k);
    if (jitter <= 0.0) jitter = 1e-10 * sym.cwiseAbs().maxCoeff();
    for (int attempt = 0; attempt < 8; ++attempt, jitter *= 2.0) {
        llt.compute(sym + jitter * Eigen::MatrixXd::Identity(k, k));
        if (llt.info() == Eigen::Success) {
            factor_ = llt.matrixL();
            return;
        }
    }
    throw NumericalError("degenerate model: covariance not factorizable after jitter");
}

void CeConfig::validate() const {
    auto in_unit = [](double x) { return x > 0.0 && x < 1.0; };
    if (!in_unit(rho)) throw ConfigError("ce: rho must lie in (0,1)");
    if (!in_unit(lambda_mix)) throw ConfigError("ce: lambda must lie in (0,1)");
    if (!in_unit(epsilon1)) throw ConfigError("ce: epsilon1 must lie in (0,1)");
    if (r_shape <= 0.0) throw ConfigError("ce: shape gain r must be positive");
    if (!in_unit(c0)) throw ConfigError("ce: c must lie in (0,1)");
    if (c_decay <= 0.0 || c_decay > 1.0) throw ConfigError("ce: c decay must lie in (0,1]");
}

CeOptimizer::CeOptimizer(CeConfig cfg, GaussianModel theta0) : cfg_(std::move(cfg)) {
    cfg_.validate();
    const auto k = theta0.mu.size();
    theta0.symmetrize();
    state_.theta = theta0;
    // Warm-started at the initial model: the blend runs every iteration, so
    // a zero-matrix start would drag theta toward the origin (and a first
    // step of size one would erase it outright under 1/t schedules).
    state_.xi0 = theta0.mu;
    state_.xi1 = theta0.sigma;
    state_.c = cfg_.c0;
    sampler_ = GaussianSampler(state_.theta);
    sampler0_ = GaussianSampler(theta0);
    refresh_period_ = std::max<long>(1, k);
    z_.resize(k);
    diff_.resize(k);
    outer_.resize(k, k);
}

}  // namespace cepred
