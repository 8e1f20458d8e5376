#pragma once

#include <Eigen/Core>

#include "cepred/mdp.hpp"

namespace cepred {

/// Weight vector plus the auxiliary state shared by the first-order
/// reference algorithms: secondary weights for the gradient-TD pair and an
/// eligibility trace. Divergence is a reported outcome, not an error; the
/// flag trips at ||z|| > 1e8 and updates freeze at 1e12 to keep traces finite.
struct LinearPredictor {
    Eigen::VectorXd z;
    Eigen::VectorXd aux;
    Eigen::VectorXd e;
    bool diverged = false;

    static LinearPredictor init(const Eigen::VectorXd& z0) {
        LinearPredictor p;
        p.z = z0;
        p.aux = Eigen::VectorXd::Zero(z0.size());
        p.e = Eigen::VectorXd::Zero(z0.size());
        return p;
    }
    void check_divergence() {
        const double norm = z.norm();
        if (norm > 1e8) diverged = true;
        if (norm > 1e12 || !z.allFinite()) frozen_ = true;
    }
    bool frozen() const { return frozen_; }

  private:
    bool frozen_ = false;
};

void td_lambda_step(LinearPredictor& p, const Eigen::VectorXd& phi, double r,
                    const Eigen::VectorXd& phi_next, double alpha, double lambda,
                    double gamma);
void rg_step(LinearPredictor& p, const Eigen::VectorXd& phi, double r,
             const Eigen::VectorXd& phi_next, const Eigen::VectorXd& phi_next2,
             double alpha, double gamma);
void gtd2_step(LinearPredictor& p, const Eigen::VectorXd& phi, double r,
               const Eigen::VectorXd& phi_next, double alpha, double beta, double gamma);
void tdc_step(LinearPredictor& p, const Eigen::VectorXd& phi, double r,
              const Eigen::VectorXd& phi_next, double alpha, double beta, double gamma);

/// Accumulated least-squares statistics: A starts at epsilon I, B at
/// epsilon I for the fixed-point iteration variant, e is the trace.
struct LeastSquaresState {
    Eigen::MatrixXd A;
    Eigen::MatrixXd B;
    Eigen::VectorXd b;
    Eigen::VectorXd e;
    long n = 0;

    static LeastSquaresState init(int k, double epsilon);
};

void least_squares_accumulate(LeastSquaresState& s, const Eigen::VectorXd& phi, double r,
                              const Eigen::VectorXd& phi_next, double lambda, double gamma);

/// A_T^{-1} b_T, with a pseudo-inverse fallback when A_T is rank deficient.
Eigen::VectorXd lstd_solve(const LeastSquaresState& s);

/// Fixed point of the least-squares policy-evaluation iteration
/// z <- z + B_T^{-1} (b_T - A_T z), which coincides with the LSTD solution.
/// The pseudocode's one-shot return expression scales with the sample count,
/// so the iterative form is used instead.
Eigen::VectorXd lspe_solve(const LeastSquaresState& s, long fixed_point_iters = 200);

/// Nonlinear GTD2 on a differentiable value family. theta and w update
/// simultaneously off the pre-step w; projection is the identity unless a
/// bound is supplied.
struct NlPredictor {
    Eigen::VectorXd theta;
    Eigen::VectorXd w;
    bool diverged = false;

    static NlPredictor init(const Eigen::VectorXd& theta0) {
        NlPredictor p;
        p.theta = theta0;
        p.w = Eigen::VectorXd::Zero(theta0.size());
        return p;
    }
    void check_divergence() {
        const double norm = theta.norm();
        if (norm > 1e8) diverged = true;
        if (norm > 1e12 || !theta.allFinite()) frozen_ = true;
    }
    bool frozen() const { return frozen_; }

  private:
    bool frozen_ = false;
};

void gtd2_nl_step(NlPredictor& p, const NonlinearManifold& vf, int s, double r, int s_next,
                  double alpha, double beta, double gamma,
                  double projection_radius = 0.0);

/// Semi-gradient TD(0) on the manifold: theta += alpha delta grad V(s).
void td0_nl_step(NlPredictor& p, const NonlinearManifold& vf, int s, double r, int s_next,
                 double alpha, double gamma);

}  // namespace cepred
