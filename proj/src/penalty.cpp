#include "sparsefa/penalty.hpp"

#include <algorithm>
#include <cmath>

namespace sparsefa {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double soft(double z, double t) {
    const double a = std::abs(z) - t;
    return a > 0.0 ? (z > 0.0 ? a : -a) : 0.0;
}

bool is_lasso(const PenaltySpec& s) {
    return s.family == PenaltyFamily::Lasso || (s.family == PenaltyFamily::McPlus && std::isinf(s.gamma));
}

}  // namespace

PenaltySpec PenaltySpec::lasso(double rho) {
    PenaltySpec s{PenaltyFamily::Lasso, rho, kInf};
    s.validate();
    return s;
}

PenaltySpec PenaltySpec::mcplus(double rho, double gamma) {
    PenaltySpec s{PenaltyFamily::McPlus, rho, gamma};
    s.validate();
    return s;
}

PenaltySpec PenaltySpec::scad(double rho, double gamma) {
    PenaltySpec s{PenaltyFamily::Scad, rho, gamma};
    s.validate();
    return s;
}

void PenaltySpec::validate() const {
    if (rho < 0.0 || !std::isfinite(rho)) throw DataError("penalty level rho must be finite and >= 0");
    if (family == PenaltyFamily::McPlus && !(gamma > 1.0 + 1e-9))
        throw DataError("MC+ requires gamma > 1 (gamma -> 1+ is the hard-threshold limit)");
    if (family == PenaltyFamily::Scad && !(gamma > 2.0))
        throw DataError("SCAD requires gamma > 2");
}

double penalty_value(double theta, const PenaltySpec& spec) {
    const double t = std::abs(theta);
    const double rho = spec.rho;
    if (rho == 0.0 || t == 0.0) return 0.0;
    switch (spec.family) {
        case PenaltyFamily::Lasso:
            return rho * t;
        case PenaltyFamily::McPlus: {
            if (std::isinf(spec.gamma)) return rho * t;
            const double g = spec.gamma;
            if (t < rho * g) return rho * (t - t * t / (2.0 * rho * g));
            return rho * rho * g / 2.0;
        }
        case PenaltyFamily::Scad: {
            const double g = spec.gamma;
            if (t <= rho) return rho * t;
            if (t <= g * rho) return (2.0 * g * rho * t - t * t - rho * rho) / (2.0 * (g - 1.0));
            return rho * rho * (g + 1.0) / 2.0;
        }
    }
    return 0.0;
}

double scalar_threshold(double theta_tilde, double rho_star, const PenaltySpec& spec) {
    if (spec.family == PenaltyFamily::McPlus && spec.gamma <= 1.0)
        throw SolverError("MC+ threshold undefined for gamma <= 1");
    if (rho_star == 0.0) return theta_tilde;
    if (is_lasso(spec)) return soft(theta_tilde, rho_star);
    const double g = spec.gamma;
    const double at = std::abs(theta_tilde);
    if (spec.family == PenaltyFamily::McPlus) {
        if (at <= rho_star * g) return soft(theta_tilde, rho_star) / (1.0 - 1.0 / g);
        return theta_tilde;
    }
    // SCAD
    if (at <= 2.0 * rho_star) return soft(theta_tilde, rho_star);
    if (at <= g * rho_star) {
        const double sgn = theta_tilde > 0.0 ? 1.0 : -1.0;
        return ((g - 1.0) * theta_tilde - sgn * g * rho_star) / (g - 2.0);
    }
    return theta_tilde;
}

double scaled_penalty_min(double theta_tilde, double scale, const PenaltySpec& spec) {
    if (spec.rho == 0.0 || scale == 0.0) return theta_tilde;
    if (is_lasso(spec)) return soft(theta_tilde, scale * spec.rho);

    const double sgn = theta_tilde >= 0.0 ? 1.0 : -1.0;
    const double at = std::abs(theta_tilde);
    const double rho = spec.rho;
    const double g = spec.gamma;
    const double c = scale;

    // Candidates: zone stationary points clamped into their zones plus all knots.
    // Objective restricted to theta >= 0 (minimizer shares theta_tilde's sign).
    auto h = [&](double x) { return 0.5 * (x - at) * (x - at) + c * penalty_value(x, spec); };
    double best_x = 0.0;
    double best_h = h(0.0);
    auto consider = [&](double x) {
        if (x < 0.0) return;
        const double v = h(x);
        if (v < best_h) {  // ties stay at the sparser candidate (0 is evaluated first)
            best_h = v;
            best_x = x;
        }
    };

    if (spec.family == PenaltyFamily::McPlus) {
        const double knee = rho * g;
        const double k = 1.0 - c / g;  // quadratic coefficient in the concave zone
        if (k > 0.0) {
            const double x = (at - c * rho) / k;
            if (x > 0.0 && x < knee) consider(x);
        }
        consider(knee);
        if (at > knee) consider(at);
    } else {  // SCAD
        const double x1 = at - c * rho;  // linear zone
        if (x1 > 0.0 && x1 <= rho) consider(x1);
        const double k = 1.0 - c / (g - 1.0);  // transition zone
        if (k > 0.0) {
            const double x = (at - c * g * rho / (g - 1.0)) / k;
            if (x > rho && x < g * rho) consider(x);
        }
        consider(rho);
        consider(g * rho);
        if (at > g * rho) consider(at);
    }
    return sgn * best_x;
}

}  // namespace sparsefa
