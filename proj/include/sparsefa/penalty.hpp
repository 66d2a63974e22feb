#pragma once

#include <limits>

#include "sparsefa/types.hpp"

namespace sparsefa {

enum class PenaltyFamily { Lasso, McPlus, Scad };

/// Penalty family with regularization level rho and concavity gamma.
/// Lasso is the gamma -> infinity limit of MC+; SCAD needs gamma > 2.
struct PenaltySpec {
    PenaltyFamily family = PenaltyFamily::Lasso;
    double rho = 0.0;
    double gamma = std::numeric_limits<double>::infinity();

    static PenaltySpec lasso(double rho);
    static PenaltySpec mcplus(double rho, double gamma);
    static PenaltySpec scad(double rho, double gamma);

    /// Same family/gamma at a different level.
    PenaltySpec with_rho(double new_rho) const {
        PenaltySpec s = *this;
        s.rho = new_rho;
        return s;
    }

    void validate() const;
};

/// Full penalty contribution rho*P(|theta|) for one coefficient.
double penalty_value(double theta, const PenaltySpec& spec);

/// Global minimizer of (1/2)(theta - theta_tilde)^2 + rho_star*P(|theta|)
/// where the penalty is evaluated at level rho_star with the spec's gamma.
/// Soft threshold for lasso, the two-piece MC+ operator, the three-piece SCAD operator.
double scalar_threshold(double theta_tilde, double rho_star, const PenaltySpec& spec);

/// Global minimizer of (1/2)(theta - theta_tilde)^2 + scale * penalty_value(theta, spec).
/// This is the exact one-dimensional subproblem of the EM coordinate step, where the
/// quadratic weight a_jj/psi_i rescales the penalty without rescaling its knots.
double scaled_penalty_min(double theta_tilde, double scale, const PenaltySpec& spec);

}  // namespace sparsefa
