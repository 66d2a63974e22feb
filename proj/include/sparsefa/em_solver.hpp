#pragma once

#include <cstdint>
#include <optional>

#include "sparsefa/model.hpp"

namespace sparsefa {

/// Posterior moments of the common factors given the data, averaged over observations.
/// A = M^{-1} + M^{-1} L^T Psi^{-1} S Psi^{-1} L M^{-1}, row i of B is
/// b_i = M^{-1} L^T Psi^{-1} s_i, with M = L^T Psi^{-1} L + Phi^{-1}.
struct EStepMoments {
    Eigen::MatrixXd A;  // m x m
    Eigen::MatrixXd B;  // p x m
};

enum class InitKind { Principal, Random, Warm };

struct SolverOptions {
    double eta = 0.001;       // improper-solution penalty weight
    double em_tol = 1e-5;     // relative objective-change tolerance
    double cd_tol = 1e-6;     // max coordinate change tolerance
    int max_em_iter = 500;
    int max_cd_sweeps = 100;
    bool phi_fixed_identity = false;  // orthogonal model
    InitKind init = InitKind::Principal;
    std::uint64_t seed = 0;                // for InitKind::Random
    std::optional<FactorSolution> warm;    // for InitKind::Warm

    void validate() const;
};

struct FitResult {
    FactorSolution solution;
    FitDiagnostics diagnostics;
};

EStepMoments e_step(const SampleMoments& sm, const FactorSolution& old);

/// One coordinate-descent sweep over j = 1..m for a single variable's loading row,
/// using the freshest values of the other coordinates. Each coordinate move is the
/// exact minimizer of its penalized quadratic subproblem.
Eigen::VectorXd cd_update_row(Eigen::VectorXd lambda_row, const Eigen::VectorXd& b_row,
                              const Eigen::MatrixXd& A, double psi_i, const PenaltySpec& pen);

/// s_ii (1 + eta) - 2 lambda^T b + lambda^T A lambda. Throws SolverError if nonpositive.
double psi_update(double s_ii, const Eigen::VectorXd& lambda_row, const Eigen::VectorXd& b_row,
                  const Eigen::MatrixXd& A, double eta);

/// argmin over unit-diagonal PD matrices of log|Phi| + tr(Phi^{-1} A), by BFGS on the
/// off-diagonal entries with a backtracking line search that rejects non-PD candidates.
/// Optional warm start; the result is never worse than the identity or the warm start.
Eigen::MatrixXd phi_update(const Eigen::MatrixXd& A,
                           const std::optional<Eigen::MatrixXd>& warm = std::nullopt);

/// Principal start: Lambda from the top-m eigenpairs of S, Psi floored at 0.05 diag(S), Phi = I.
FactorSolution principal_init(const SampleMoments& sm, int m);

/// Exact EM fixed point with all-zero loadings: psi_i = s_ii (1 + eta), Phi = I.
FactorSolution null_solution(const SampleMoments& sm, int m, double eta);

/// Penalized-likelihood fit at fixed (gamma, rho): EM with coordinate-descent loading
/// updates, closed-form Psi update and quasi-Newton Phi update.
FitResult fit(const SampleMoments& sm, int m, const PenaltySpec& pen, const SolverOptions& opts);

}  // namespace sparsefa
