// Test-only oracles, independent of the library's computation paths:
// brute-force grid minimizers, dense-algebra likelihood evaluation, and
// simple deterministic random instance generators.
#pragma once

#include <Eigen/Dense>
#include <random>

#include "sparsefa/penalty.hpp"
#include "sparsefa/types.hpp"

namespace oracles {

// Grid minimizer of (1/2)(x - theta_tilde)^2 + scale * penalty_value(x, spec)
// over [-lo, hi] with the given step; refined once around the coarse winner.
inline double grid_threshold(double theta_tilde, double scale, const sparsefa::PenaltySpec& spec,
                             double half_width = 2.0, double step = 1e-5) {
    auto h = [&](double x) {
        return 0.5 * (x - theta_tilde) * (x - theta_tilde) + scale * penalty_value(x, spec);
    };
    const double lo = -half_width + std::min(theta_tilde, 0.0);
    const double hi = half_width + std::max(theta_tilde, 0.0);
    double best_x = 0.0, best_h = h(0.0);
    const double coarse = std::max(step * 100.0, 1e-4);
    for (double x = lo; x <= hi; x += coarse)
        if (h(x) < best_h) { best_h = h(x); best_x = x; }
    for (double x = best_x - coarse; x <= best_x + coarse; x += step)
        if (h(x) < best_h) { best_h = h(x); best_x = x; }
    return best_x;
}

// Dense-algebra log-likelihood via explicit inverse and determinant (no Woodbury).
inline double dense_loglik(const Eigen::MatrixXd& S, int n_obs, const Eigen::MatrixXd& lambda,
                           const Eigen::VectorXd& psi, const Eigen::MatrixXd& phi) {
    const auto p = S.rows();
    Eigen::MatrixXd sigma = lambda * phi * lambda.transpose();
    sigma.diagonal() += psi;
    const double logdet = std::log(sigma.determinant());
    const double tr = (sigma.inverse() * S).trace();
    return -n_obs / 2.0 * (p * std::log(2.0 * std::numbers::pi) + logdet + tr);
}

// Deterministic random factor model with PD Phi and positive Psi.
struct RandomModel {
    Eigen::MatrixXd lambda;
    Eigen::VectorXd psi;
    Eigen::MatrixXd phi;
};

inline RandomModel random_model(std::mt19937_64& rng, int p, int m, double phi_offdiag_max = 0.6) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    RandomModel out;
    out.lambda.resize(p, m);
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < m; ++j) out.lambda(i, j) = 0.7 * u(rng);
    out.phi = Eigen::MatrixXd::Identity(m, m);
    if (m > 1) {
        // random correlation via normalized Gram matrix, shrunk toward identity
        Eigen::MatrixXd Z(m, m + 2);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m + 2; ++j) Z(i, j) = u(rng);
        Eigen::MatrixXd G = Z * Z.transpose();
        Eigen::VectorXd d = G.diagonal().cwiseSqrt().cwiseInverse();
        Eigen::MatrixXd C = d.asDiagonal() * G * d.asDiagonal();
        const double w = phi_offdiag_max;
        out.phi = w * C + (1.0 - w) * Eigen::MatrixXd::Identity(m, m);
        out.phi.diagonal().setOnes();
    }
    out.psi.resize(p);
    std::uniform_real_distribution<double> up(0.2, 1.0);
    for (int i = 0; i < p; ++i) out.psi(i) = up(rng);
    return out;
}

inline Eigen::MatrixXd model_sigma(const RandomModel& m) {
    Eigen::MatrixXd s = m.lambda * m.phi * m.lambda.transpose();
    s.diagonal() += m.psi;
    return ((s + s.transpose()) / 2.0).eval();
}

// Sample covariance (divisor n, centered) of n draws from N(0, sigma).
inline Eigen::MatrixXd sample_cov(const Eigen::MatrixXd& sigma, int n, std::mt19937_64& rng) {
    std::normal_distribution<double> nd;
    const auto p = sigma.rows();
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    Eigen::MatrixXd L = llt.matrixL();
    Eigen::MatrixXd X(n, p);
    Eigen::VectorXd z(p);
    for (int r = 0; r < n; ++r) {
        for (int i = 0; i < p; ++i) z(i) = nd(rng);
        X.row(r) = (L * z).transpose();
    }
    X.rowwise() -= X.colwise().mean();
    Eigen::MatrixXd S = X.transpose() * X / static_cast<double>(n);
    return ((S + S.transpose()) / 2.0).eval();
}

}  // namespace oracles
