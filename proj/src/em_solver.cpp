#include "sparsefa/em_solver.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>

namespace sparsefa {

void SolverOptions::validate() const {
    if (!(eta >= 0.0)) throw DataError("eta must be nonnegative");
    if (!(em_tol > 0.0) || !(cd_tol > 0.0)) throw DataError("tolerances must be positive");
    if (max_em_iter < 1 || max_cd_sweeps < 1) throw DataError("iteration caps must be >= 1");
    if (init == InitKind::Warm && !warm.has_value()) throw DataError("warm init requires a solution");
}

EStepMoments e_step(const SampleMoments& sm, const FactorSolution& old) {
    const auto m = old.factor_count();
    if (sm.var_count() != old.var_count()) throw DataError("dimension mismatch in e_step");
    Eigen::MatrixXd W = old.Psi.cwiseInverse().asDiagonal() * old.Lambda;  // Psi^{-1} Lambda
    Eigen::LLT<Eigen::MatrixXd> phi_llt(old.Phi);
    if (phi_llt.info() != Eigen::Success) throw SolverError("Phi is not positive definite in e_step");
    Eigen::MatrixXd M = phi_llt.solve(Eigen::MatrixXd::Identity(m, m)) + old.Lambda.transpose() * W;
    M = ((M + M.transpose()) / 2.0).eval();
    Eigen::LLT<Eigen::MatrixXd> m_llt(M);
    if (m_llt.info() != Eigen::Success) throw SolverError("posterior precision M is singular");
    Eigen::MatrixXd Minv = m_llt.solve(Eigen::MatrixXd::Identity(m, m));
    Eigen::MatrixXd SW = sm.S * W;  // p x m
    EStepMoments out;
    out.B = SW * Minv;
    Eigen::MatrixXd C = W.transpose() * SW;  // Lambda^T Psi^{-1} S Psi^{-1} Lambda
    out.A = Minv + Minv * C * Minv;
    out.A = ((out.A + out.A.transpose()) / 2.0).eval();
    return out;
}

Eigen::VectorXd cd_update_row(Eigen::VectorXd lambda_row, const Eigen::VectorXd& b_row,
                              const Eigen::MatrixXd& A, double psi_i, const PenaltySpec& pen) {
    const auto m = lambda_row.size();
    for (Eigen::Index j = 0; j < m; ++j) {
        const double ajj = A(j, j);
        double cross = A.col(j).dot(lambda_row) - ajj * lambda_row(j);
        const double theta_tilde = (b_row(j) - cross) / ajj;
        lambda_row(j) = scaled_penalty_min(theta_tilde, psi_i / ajj, pen);
    }
    return lambda_row;
}

double psi_update(double s_ii, const Eigen::VectorXd& lambda_row, const Eigen::VectorXd& b_row,
                  const Eigen::MatrixXd& A, double eta) {
    const double quad = s_ii - 2.0 * lambda_row.dot(b_row) + lambda_row.dot(A * lambda_row);
    const double psi = quad + eta * s_ii;
    if (!(psi > 0.0))
        throw SolverError("psi update produced a nonpositive unique variance (" +
                          std::to_string(psi) + "); posterior moments lost definiteness");
    return psi;
}

namespace {

// log|Phi| + tr(Phi^{-1} A); +inf when Phi is not PD.
double phi_objective(const Eigen::MatrixXd& phi, const Eigen::MatrixXd& A,
                     Eigen::MatrixXd* grad_out = nullptr) {
    Eigen::LLT<Eigen::MatrixXd> llt(phi);
    if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
    const auto m = phi.rows();
    const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    Eigen::MatrixXd phi_inv = llt.solve(Eigen::MatrixXd::Identity(m, m));
    const double value = logdet + (phi_inv * A).trace();
    if (grad_out) *grad_out = phi_inv - phi_inv * A * phi_inv;
    return value;
}

Eigen::MatrixXd build_phi(const Eigen::VectorXd& x, Eigen::Index m) {
    Eigen::MatrixXd phi = Eigen::MatrixXd::Identity(m, m);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = i + 1; j < m; ++j) {
            phi(i, j) = phi(j, i) = x(k);
            ++k;
        }
    return phi;
}

Eigen::VectorXd offdiag_of(const Eigen::MatrixXd& phi) {
    const auto m = phi.rows();
    Eigen::VectorXd x(m * (m - 1) / 2);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = i + 1; j < m; ++j) x(k++) = phi(i, j);
    return x;
}

// Gradient of the objective with respect to the off-diagonal coordinates
// (each appears twice in the symmetric matrix).
Eigen::VectorXd offdiag_grad(const Eigen::MatrixXd& G) {
    const auto m = G.rows();
    Eigen::VectorXd g(m * (m - 1) / 2);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = i + 1; j < m; ++j) g(k++) = 2.0 * G(i, j);
    return g;
}

// Correlation-normalized copy of A, the unconstrained minimizer projected to unit diagonal.
Eigen::MatrixXd normalized(const Eigen::MatrixXd& A) {
    Eigen::VectorXd d = A.diagonal().cwiseSqrt().cwiseInverse();
    Eigen::MatrixXd out = d.asDiagonal() * A * d.asDiagonal();
    out.diagonal().setOnes();
    return ((out + out.transpose()) / 2.0).eval();
}

}  // namespace

Eigen::MatrixXd phi_update(const Eigen::MatrixXd& A, const std::optional<Eigen::MatrixXd>& warm) {
    const auto m = A.rows();
    if (m == 1) return Eigen::MatrixXd::Identity(1, 1);

    // Start from the best of: normalized A, identity, warm start.
    Eigen::MatrixXd start = normalized(A);
    double fstart = phi_objective(start, A);
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(m, m);
    if (phi_objective(eye, A) < fstart) {
        start = eye;
        fstart = phi_objective(eye, A);
    }
    if (warm && phi_objective(*warm, A) < fstart) {
        start = *warm;
        fstart = phi_objective(start, A);
    }

    const Eigen::Index d = m * (m - 1) / 2;
    Eigen::VectorXd x = offdiag_of(start);
    Eigen::MatrixXd G;
    double f = phi_objective(build_phi(x, m), A, &G);
    Eigen::VectorXd g = offdiag_grad(G);
    Eigen::MatrixXd H = Eigen::MatrixXd::Identity(d, d);  // inverse-Hessian estimate

    const double grad_tol = 1e-6;
    for (int iter = 0; iter < 300 && g.cwiseAbs().maxCoeff() > grad_tol; ++iter) {
        Eigen::VectorXd dir = -(H * g);
        if (dir.dot(g) >= 0.0) {  // reset on loss of descent
            H.setIdentity();
            dir = -g;
        }
        double alpha = 1.0;
        double fn = std::numeric_limits<double>::infinity();
        Eigen::VectorXd xn;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            xn = x + alpha * dir;
            fn = phi_objective(build_phi(xn, m), A);
            if (fn <= f + 1e-4 * alpha * g.dot(dir)) {  // Armijo; non-PD gives +inf
                accepted = true;
                break;
            }
            alpha /= 2.0;
        }
        if (!accepted) break;
        Eigen::MatrixXd Gn;
        fn = phi_objective(build_phi(xn, m), A, &Gn);
        Eigen::VectorXd gn = offdiag_grad(Gn);
        Eigen::VectorXd s = xn - x;
        Eigen::VectorXd y = gn - g;
        const double sy = s.dot(y);
        if (sy > 1e-12) {
            Eigen::VectorXd Hy = H * y;
            H += ((sy + y.dot(Hy)) / (sy * sy)) * (s * s.transpose());
            H -= (Hy * s.transpose() + s * Hy.transpose()) / sy;
        }
        x = xn;
        f = fn;
        g = gn;
    }
    return build_phi(x, m);
}

FactorSolution principal_init(const SampleMoments& sm, int m) {
    const auto p = sm.var_count();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sm.S);
    FactorSolution sol;
    sol.Lambda.resize(p, m);
    for (int k = 0; k < m; ++k) {
        const auto idx = p - 1 - k;  // eigenvalues ascending in Eigen
        const double e = std::max(es.eigenvalues()(idx), 0.0);
        sol.Lambda.col(k) = es.eigenvectors().col(idx) * std::sqrt(e);
    }
    Eigen::VectorXd comm = sol.Lambda.rowwise().squaredNorm();
    sol.Psi = (sm.S.diagonal() - comm).cwiseMax(0.05 * sm.S.diagonal());
    sol.Phi = Eigen::MatrixXd::Identity(m, m);
    return sol;
}

FactorSolution null_solution(const SampleMoments& sm, int m, double eta) {
    FactorSolution sol;
    sol.Lambda = Eigen::MatrixXd::Zero(sm.var_count(), m);
    sol.Psi = sm.S.diagonal() * (1.0 + eta);
    sol.Phi = Eigen::MatrixXd::Identity(m, m);
    return sol;
}

namespace {

FactorSolution random_init(const SampleMoments& sm, int m, std::uint64_t seed) {
    const auto p = sm.var_count();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    FactorSolution sol;
    sol.Lambda.resize(p, m);
    for (Eigen::Index i = 0; i < p; ++i) {
        const double scale = std::sqrt(sm.S(i, i) / (2.0 * m));
        for (int j = 0; j < m; ++j) sol.Lambda(i, j) = scale * nd(rng);
    }
    sol.Psi = 0.5 * sm.S.diagonal();
    sol.Phi = Eigen::MatrixXd::Identity(m, m);
    return sol;
}

}  // namespace

FitResult fit(const SampleMoments& sm, int m, const PenaltySpec& pen, const SolverOptions& opts) {
    opts.validate();
    pen.validate();
    const auto p = sm.var_count();
    if (m < 1 || m >= p) throw DataError("factor count must satisfy 1 <= m < p");

    FactorSolution cur;
    switch (opts.init) {
        case InitKind::Principal: cur = principal_init(sm, m); break;
        case InitKind::Random: cur = random_init(sm, m, opts.seed); break;
        case InitKind::Warm:
            cur = *opts.warm;
            if (cur.var_count() != p || cur.factor_count() != m)
                throw DataError("warm start has wrong dimensions");
            break;
    }
    if (opts.phi_fixed_identity) cur.Phi = Eigen::MatrixXd::Identity(m, m);

    FitDiagnostics diag;
    double obj = penalized_objective(sm, cur, pen, opts.eta);
    bool converged = false;
    int iter = 0;
    for (; iter < opts.max_em_iter; ++iter) {
        EStepMoments mom = e_step(sm, cur);
        for (Eigen::Index i = 0; i < p; ++i) {
            Eigen::VectorXd row = cur.Lambda.row(i).transpose();
            const Eigen::VectorXd b = mom.B.row(i).transpose();
            for (int sweep = 0; sweep < opts.max_cd_sweeps; ++sweep) {
                Eigen::VectorXd next = cd_update_row(row, b, mom.A, cur.Psi(i), pen);
                const double change = (next - row).cwiseAbs().maxCoeff();
                row = next;
                if (change < opts.cd_tol) break;
            }
            cur.Lambda.row(i) = row.transpose();
        }
        for (Eigen::Index i = 0; i < p; ++i)
            cur.Psi(i) = psi_update(sm.S(i, i), cur.Lambda.row(i).transpose(),
                                    mom.B.row(i).transpose(), mom.A, opts.eta);
        // With an all-zero Lambda the likelihood no longer depends on Phi; keep the
        // incoming Phi (the null fixed point reports the initial factor correlation).
        const bool lambda_zero = (cur.Lambda.array() == 0.0).all();
        if (!opts.phi_fixed_identity && m > 1 && !lambda_zero)
            cur.Phi = phi_update(mom.A, cur.Phi);

        const double new_obj = penalized_objective(sm, cur, pen, opts.eta);
        diag.objective_trace.push_back(new_obj);
        if (std::abs(new_obj - obj) < opts.em_tol * std::abs(obj)) {
            obj = new_obj;
            converged = true;
            ++iter;
            break;
        }
        obj = new_obj;
    }
    cur.validate();
    diag.iterations = iter;
    diag.converged = converged;
    diag.loglik = log_likelihood(sm, cur);
    return FitResult{std::move(cur), std::move(diag)};
}

}  // namespace sparsefa
