#include "sparsefa/model.hpp"

#include <cmath>
#include <numbers>

namespace sparsefa {

namespace detail {

namespace {
double llt_log_det(const Eigen::LLT<Eigen::MatrixXd>& llt) {
    return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}
}  // namespace

WoodburyOps::WoodburyOps(const FactorSolution& sol) {
    const auto m = sol.factor_count();
    psi_inv = sol.Psi.cwiseInverse();
    W = psi_inv.asDiagonal() * sol.Lambda;
    Eigen::LLT<Eigen::MatrixXd> phi_llt(sol.Phi);
    if (phi_llt.info() != Eigen::Success) throw SolverError("Phi is not positive definite");
    logdet_phi = llt_log_det(phi_llt);
    Eigen::MatrixXd phi_inv = phi_llt.solve(Eigen::MatrixXd::Identity(m, m));
    Eigen::MatrixXd mw = phi_inv + sol.Lambda.transpose() * W;
    mw = ((mw + mw.transpose()) / 2.0).eval();
    mw_llt.compute(mw);
    if (mw_llt.info() != Eigen::Success) throw SolverError("implied covariance is not invertible");
    logdet_mw = llt_log_det(mw_llt);
    logdet_psi = sol.Psi.array().log().sum();
}

Eigen::MatrixXd WoodburyOps::apply_inverse(const Eigen::MatrixXd& X) const {
    Eigen::MatrixXd psix = psi_inv.asDiagonal() * X;
    return psix - W * mw_llt.solve(W.transpose() * X);
}

double WoodburyOps::log_det() const { return logdet_psi + logdet_phi + logdet_mw; }

double WoodburyOps::trace_inverse_product(const Eigen::MatrixXd& S) const {
    const double t1 = (psi_inv.array() * S.diagonal().array()).sum();
    Eigen::MatrixXd WtSW = W.transpose() * S * W;
    return t1 - mw_llt.solve(WtSW).trace();
}

}  // namespace detail

Eigen::MatrixXd implied_covariance(const FactorSolution& sol) {
    Eigen::MatrixXd sigma = sol.Lambda * sol.Phi * sol.Lambda.transpose();
    sigma.diagonal() += sol.Psi;
    return ((sigma + sigma.transpose()) / 2.0).eval();
}

double log_likelihood(const SampleMoments& sm, const FactorSolution& sol) {
    if (sm.var_count() != sol.var_count()) throw DataError("dimension mismatch between data and solution");
    detail::WoodburyOps ops(sol);
    const double p = static_cast<double>(sm.var_count());
    const double n = static_cast<double>(sm.n_obs);
    return -n / 2.0 *
           (p * std::log(2.0 * std::numbers::pi) + ops.log_det() + ops.trace_inverse_product(sm.S));
}

double penalized_objective(const SampleMoments& sm, const FactorSolution& sol,
                           const PenaltySpec& pen, double eta) {
    if (eta < 0.0) throw DataError("eta must be nonnegative");
    double pen_sum = 0.0;
    for (Eigen::Index j = 0; j < sol.Lambda.cols(); ++j)
        for (Eigen::Index i = 0; i < sol.Lambda.rows(); ++i)
            pen_sum += penalty_value(sol.Lambda(i, j), pen);
    const double n = static_cast<double>(sm.n_obs);
    double value = log_likelihood(sm, sol) - n * pen_sum;
    if (eta > 0.0)
        value -= n / 2.0 * eta * (sm.S.diagonal().array() / sol.Psi.array()).sum();
    return value;
}

std::pair<double, double> gfi_agfi(const SampleMoments& sm, const FactorSolution& sol, int df) {
    if (df < 0) throw DataError("df must be nonnegative");
    const double p = static_cast<double>(sm.var_count());
    if (p * (p + 1.0) == 2.0 * df) throw DataError("AGFI undefined: p(p+1) equals 2 df");
    detail::WoodburyOps ops(sol);
    Eigen::MatrixXd Q = ops.apply_inverse(sm.S);  // Sigma^{-1} S
    Eigen::MatrixXd E = Q - Eigen::MatrixXd::Identity(Q.rows(), Q.cols());
    const double num = (E * E).trace();
    const double den = (Q * Q).trace();
    const double gfi = 1.0 - num / den;
    const double agfi = 1.0 - p * (p + 1.0) * (1.0 - gfi) / (p * (p + 1.0) - 2.0 * df);
    return {gfi, agfi};
}

}  // namespace sparsefa
