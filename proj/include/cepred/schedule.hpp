#pragma once

#include <cmath>
#include <string>

#include "cepred/errors.hpp"

namespace cepred {

/// Deterministic, positive, non-increasing step-size schedule. Two built-in
/// families: constants and scaled power laws scale * t^{-exponent}.
class StepSchedule {
  public:
    static StepSchedule constant(double value) {
        if (value <= 0.0) throw ConfigError("step schedule: constant must be positive");
        StepSchedule s;
        s.exponent_ = 0.0;
        s.scale_ = value;
        return s;
    }

    static StepSchedule power(double exponent, double scale = 1.0) {
        if (exponent < 0.0 || scale <= 0.0)
            throw ConfigError("step schedule: power law needs exponent >= 0, scale > 0");
        StepSchedule s;
        s.exponent_ = exponent;
        s.scale_ = scale;
        return s;
    }

    /// Accepts "0.05", "t^-0.6", "0.5*t^-1.0" and the alias "1/t".
    static StepSchedule parse(const std::string& text);

    /// Step size at iteration t >= 1.
    double eval(long t) const {
        return exponent_ == 0.0 ? scale_ : scale_ * std::pow(static_cast<double>(t), -exponent_);
    }

    bool is_constant() const { return exponent_ == 0.0; }
    double exponent() const { return exponent_; }
    double scale() const { return scale_; }

    /// True when sum a_t = inf and sum a_t^2 < inf hold symbolically, i.e.
    /// a power law with exponent in (1/2, 1]. Constants run in
    /// "constant-step mode" with the theory conditions waived.
    bool satisfies_theory() const { return exponent_ > 0.5 && exponent_ <= 1.0; }

    std::string describe() const;

  private:
    StepSchedule() = default;
    double exponent_ = 0.0;
    double scale_ = 1.0;
};

/// alpha_t/beta_t -> 0, required for the two recursion groups to separate
/// into slow and fast timescales. Constant pairs qualify only through their
/// ratio, which the theory does not cover; callers treat that case as
/// constant-step mode.
inline bool timescales_separated(const StepSchedule& alpha, const StepSchedule& beta) {
    if (alpha.is_constant() && beta.is_constant()) return false;
    return alpha.exponent() > beta.exponent();
}

}  // namespace cepred
