#include "sparsefa/types.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace sparsefa {

void SampleMoments::validate() const {
    const auto p = S.rows();
    if (p == 0 || S.cols() != p) throw DataError("sample matrix must be square and nonempty");
    if (n_obs <= 0) throw DataError("observation count must be positive");
    const double scale = S.cwiseAbs().maxCoeff();
    const double asym = (S - S.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-10 * std::max(scale, 1.0))
        throw DataError("sample matrix is not symmetric (max asymmetry " + std::to_string(asym) + ")");
    for (Eigen::Index i = 0; i < p; ++i)
        if (!(S(i, i) > 0.0))
            throw DataError("diagonal entry " + std::to_string(i + 1) + " is not strictly positive");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    if (lo < -1e-8 * hi)
        throw DataError("sample matrix is not positive semidefinite (eigmin " + std::to_string(lo) + ")");
}

SampleMoments SampleMoments::from_covariance(Eigen::MatrixXd S, int n_obs,
                                             std::vector<std::string> labels) {
    SampleMoments sm;
    sm.S = std::move(S);
    sm.n_obs = n_obs;
    sm.labels = std::move(labels);
    // symmetrize away roundoff before validating
    sm.S = ((sm.S + sm.S.transpose()) / 2.0).eval();
    sm.validate();
    return sm;
}

SampleMoments SampleMoments::to_correlation() const {
    SampleMoments out = *this;
    Eigen::VectorXd d = S.diagonal().cwiseSqrt().cwiseInverse();
    out.S = d.asDiagonal() * S * d.asDiagonal();
    out.S.diagonal().setOnes();
    out.S = ((out.S + out.S.transpose()) / 2.0).eval();
    return out;
}

void FactorSolution::validate() const {
    const auto p = Lambda.rows();
    const auto m = Lambda.cols();
    if (Psi.size() != p) throw SolverError("Psi length does not match loading rows");
    if (Phi.rows() != m || Phi.cols() != m) throw SolverError("Phi dimension does not match factor count");
    if ((Psi.array() <= 0.0).any()) throw SolverError("unique variances must be strictly positive");
    if ((Phi - Phi.transpose()).cwiseAbs().maxCoeff() > 1e-10)
        throw SolverError("Phi is not symmetric");
    if ((Phi.diagonal().array() - 1.0).abs().maxCoeff() > 1e-10)
        throw SolverError("Phi diagonal is not 1");
    Eigen::LLT<Eigen::MatrixXd> llt(Phi);
    if (llt.info() != Eigen::Success) throw SolverError("Phi is not positive definite");
}

int FactorSolution::nonzero_loadings() const {
    return static_cast<int>((Lambda.array() != 0.0).count());
}

}  // namespace sparsefa
