#pragma once

#include "sparsefa/penalty.hpp"
#include "sparsefa/types.hpp"

namespace sparsefa {

/// Sigma = Lambda Phi Lambda^T + diag(Psi).
Eigen::MatrixXd implied_covariance(const FactorSolution& sol);

/// -(N/2) [ p log(2 pi) + log|Sigma| + tr(Sigma^{-1} S) ].
/// log|Sigma| and Sigma^{-1} use the m x m determinant-lemma / Woodbury reduction,
/// so only m x m factorizations are performed (p may exceed N).
double log_likelihood(const SampleMoments& sm, const FactorSolution& sol);

/// log_likelihood minus N * sum_ij penalty(lambda_ij) minus (N/2) * eta * sum_i s_ii / psi_i.
double penalized_objective(const SampleMoments& sm, const FactorSolution& sol,
                           const PenaltySpec& pen, double eta);

/// GFI = 1 - tr[(Sigma^{-1}(S - Sigma))^2] / tr[(Sigma^{-1} S)^2];
/// AGFI = 1 - p(p+1)(1 - GFI) / (p(p+1) - 2 df), df supplied by the caller.
std::pair<double, double> gfi_agfi(const SampleMoments& sm, const FactorSolution& sol, int df);

namespace detail {

/// Woodbury workspace for Sigma = Lambda Phi Lambda^T + diag(Psi).
/// Sigma^{-1} X = Psi^{-1} X - W Mw^{-1} (W^T X) with W = Psi^{-1} Lambda,
/// Mw = Phi^{-1} + Lambda^T Psi^{-1} Lambda; log|Sigma| = log|Psi| + log|Phi| + log|Mw|.
struct WoodburyOps {
    explicit WoodburyOps(const FactorSolution& sol);
    Eigen::MatrixXd apply_inverse(const Eigen::MatrixXd& X) const;  // Sigma^{-1} X
    double log_det() const;
    double trace_inverse_product(const Eigen::MatrixXd& S) const;  // tr(Sigma^{-1} S)

    Eigen::VectorXd psi_inv;
    Eigen::MatrixXd W;  // p x m
    Eigen::LLT<Eigen::MatrixXd> mw_llt;
    double logdet_phi = 0.0;
    double logdet_mw = 0.0;
    double logdet_psi = 0.0;
};

}  // namespace detail

}  // namespace sparsefa
