#pragma once

#include <cstdint>

#include "sparsefa/types.hpp"

namespace sparsefa {

enum class RotationCriterion { Varimax, Promax, LassoComponentLoss };

struct RotationSpec {
    RotationCriterion criterion = RotationCriterion::Varimax;
    bool oblique = false;  // varimax is orthogonal-only; promax implies oblique
    int promax_power = 4;
    std::uint64_t seed = 0;  // for random starting rotations

    void validate() const;
};

struct RotationResult {
    Eigen::MatrixXd Lambda;
    Eigen::MatrixXd Phi;  // identity for orthogonal rotations
    bool converged = true;
    double criterion_value = 0.0;
};

/// Rotates a maximum-likelihood loading matrix. Varimax and the lasso component loss
/// run gradient projection on the rotation manifold: orthogonal T with
/// Lambda* = Lambda T, or unit-length columns of T with Lambda* = Lambda (T^T)^{-1}
/// and Phi = T^T T for the oblique loss. Promax is the classical
/// varimax -> power-target -> least-squares oblique transform.
RotationResult rotate(const Eigen::MatrixXd& lambda_mle, const RotationSpec& spec);

/// Minimizes sum |g_ij| over G with G G^T = Phi, via G = chol(Phi) T with T orthogonal,
/// gradient projection with random restarts. The result satisfies the constraint to 1e-10
/// and is canonicalized (columns by descending norm, largest-magnitude entry positive).
Eigen::MatrixXd min_l1_G(const Eigen::MatrixXd& phi, int restarts = 20, std::uint64_t seed = 0);

/// Orders columns by descending L2 norm and flips signs so each column's
/// largest-magnitude entry is positive; applies the same signed permutation to Phi.
void canonicalize_columns(Eigen::MatrixXd& lambda, Eigen::MatrixXd* phi = nullptr);

}  // namespace sparsefa
