#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace sparsefa {

/// Raised on malformed input data (bad tables, non-PSD matrices, ...).
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Raised when the solver cannot continue (lost positive definiteness, ...).
struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Sample second moments: covariance (or correlation) matrix plus observation count.
struct SampleMoments {
    Eigen::MatrixXd S;                // p x p, symmetric PSD
    int n_obs = 0;                    // N
    std::vector<std::string> labels;  // optional variable names

    int var_count() const { return static_cast<int>(S.rows()); }

    /// Validates symmetry (1e-10 relative), strictly positive diagonal and
    /// positive semidefiniteness (eigmin >= -1e-8 * eigmax).
    void validate() const;

    static SampleMoments from_covariance(Eigen::MatrixXd S, int n_obs,
                                         std::vector<std::string> labels = {});

    /// Rescales S to a correlation matrix (divide by outer product of sqrt diagonals).
    SampleMoments to_correlation() const;
};

/// One estimated factor model: loadings, unique variances, factor correlation.
struct FactorSolution {
    Eigen::MatrixXd Lambda;  // p x m loadings
    Eigen::VectorXd Psi;     // p positive unique variances
    Eigen::MatrixXd Phi;     // m x m correlation matrix (identity for the orthogonal model)

    int var_count() const { return static_cast<int>(Lambda.rows()); }
    int factor_count() const { return static_cast<int>(Lambda.cols()); }

    /// Checks psi_i > 0 and Phi symmetric, unit-diagonal, positive definite.
    void validate() const;

    /// Number of nonzero loadings (exact comparison; coordinate descent produces exact zeros).
    int nonzero_loadings() const;
};

/// Fit quality and convergence metadata attached to one solution.
struct FitDiagnostics {
    double loglik = 0.0;
    int df = 0;      // nonzero loadings
    int p_star = 0;  // df + m(m-1)/2 + p
    double aic = 0.0;
    double bic = 0.0;
    double caic = 0.0;
    double gfi = 0.0;
    double agfi = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> objective_trace;  // penalized objective after each EM iteration
};

}  // namespace sparsefa
