#include "cepred/baselines.hpp"

#include <Eigen/Dense>

#include "cepred/errors.hpp"

namespace cepred {

void td_lambda_step(LinearPredictor& p, const Eigen::VectorXd& phi, double r,
                    const Eigen::VectorXd& phi_next, double alpha, double lambda,
                    double gamma) {
    if (p.frozen()) return;
    const double delta = r + gamma * p.z.dot(phi_next) - p.z.dot(phi);
    p.e = phi + gamma * lambda * p.e;
    p.z += alpha * delta * p.e;
    p.check_divergence();
}

void rg_step(LinearPredictor& p, const Eigen::VectorXd& phi, double r,
             const Eigen::VectorXd& phi_next, const Eigen::VectorXd& phi_next2,
             double alpha, double gamma) {
    if (p.frozen()) return;
    // delta from the first sample, gradient factor from the second.
    const double delta = r + gamma * p.z.dot(phi_next) - p.z.dot(phi);
    p.z += alpha * delta * (phi - gamma * phi_next2);
    p.check_divergence();
}

void gtd2_step(LinearPredictor& p, const Eigen::VectorXd& phi, double r,
               const Eigen::VectorXd& phi_next, double alpha, double beta, double gamma) {
    if (p.frozen()) return;
    const double delta = r + gamma * p.z.dot(phi_next) - p.z.dot(phi);
    const double phi_v = phi.dot(p.aux);
    p.z += alpha * (phi - gamma * phi_next) * phi_v;
    p.aux += beta * (delta - phi_v) * phi;
    p.check_divergence();
}

void tdc_step(LinearPredictor& p, const Eigen::VectorXd& phi, double r,
              const Eigen::VectorXd& phi_next, double alpha, double beta, double gamma) {
    if (p.frozen()) return;
    const double delta = r + gamma * p.z.dot(phi_next) - p.z.dot(phi);
    const double phi_v = phi.dot(p.aux);
    p.z += alpha * (delta * phi - gamma * phi_next * phi_v);
    p.aux += beta * (delta - phi_v) * phi;
    p.check_divergence();
}

LeastSquaresState LeastSquaresState::init(int k, double epsilon) {
    if (epsilon <= 0.0) throw ConfigError("least squares: epsilon must be positive");
    return LeastSquaresState{epsilon * Eigen::MatrixXd::Identity(k, k),
                             epsilon * Eigen::MatrixXd::Identity(k, k),
                             Eigen::VectorXd::Zero(k), Eigen::VectorXd::Zero(k), 0};
}

void least_squares_accumulate(LeastSquaresState& s, const Eigen::VectorXd& phi, double r,
                              const Eigen::VectorXd& phi_next, double lambda,
                              double gamma) {
    s.e = phi + gamma * lambda * s.e;
    s.A += s.e * (phi - gamma * phi_next).transpose();
    s.B += phi * phi.transpose();
    s.b += s.e * r;
    ++s.n;
}

Eigen::VectorXd lstd_solve(const LeastSquaresState& s) {
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(s.A);
    Eigen::VectorXd z = lu.solve(s.b);
    if (z.allFinite() && (s.A * z - s.b).norm() <= 1e-8 * (1.0 + s.b.norm())) return z;
    z = s.A.completeOrthogonalDecomposition().solve(s.b);
    if (!z.allFinite())
        throw NumericalError("lstd_solve: rank-deficient A with failed pseudo-inverse");
    return z;
}

Eigen::VectorXd lspe_solve(const LeastSquaresState& s, long fixed_point_iters) {
    Eigen::LDLT<Eigen::MatrixXd> bldlt(s.B);
    Eigen::VectorXd z = Eigen::VectorXd::Zero(s.b.size());
    for (long i = 0; i < fixed_point_iters; ++i) {
        const Eigen::VectorXd step = bldlt.solve(s.b - s.A * z);
        if (!step.allFinite())
            throw NumericalError("lspe_solve: B_T not invertible");
        z += step;
        if (step.lpNorm<Eigen::Infinity>() < 1e-13 * (1.0 + z.lpNorm<Eigen::Infinity>()))
            break;
    }
    return z;
}

void gtd2_nl_step(NlPredictor& p, const NonlinearManifold& vf, int s, double r, int s_next,
                  double alpha, double beta, double gamma, double projection_radius) {
    if (p.frozen()) return;
    const double delta =
        r + gamma * vf.evaluate(p.theta, s_next) - vf.evaluate(p.theta, s);
    const Eigen::VectorXd grad = vf.gradient(p.theta, s);
    const Eigen::VectorXd grad_next = vf.gradient(p.theta, s_next);
    const double gw = grad.dot(p.w);
    const Eigen::VectorXd hess_term = vf.hessian_vp(p.theta, s, p.w) * (delta - gw);

    // Standard form (grad V - gamma grad V')(grad V^T w) for the main term:
    // with a linear value family this reduces exactly to the linear update.
    p.theta += alpha * ((grad - gamma * grad_next) * gw - hess_term);
    p.w += beta * (delta - gw) * grad;
    if (projection_radius > 0.0 && p.theta.norm() > projection_radius)
        p.theta *= projection_radius / p.theta.norm();
    p.check_divergence();
}

void td0_nl_step(NlPredictor& p, const NonlinearManifold& vf, int s, double r, int s_next,
                 double alpha, double gamma) {
    if (p.frozen()) return;
    const double delta =
        r + gamma * vf.evaluate(p.theta, s_next) - vf.evaluate(p.theta, s);
    p.theta += alpha * delta * vf.gradient(p.theta, s);
    p.check_divergence();
}

}  // namespace cepred
