#pragma once

#include <cstdint>
#include <map>

#include "sparsefa/path.hpp"
#include "sparsefa/rotation.hpp"

namespace sparsefa {

/// Population model used to generate data: block loading structure with
/// Phi = 0.4 I + 0.6 11^T and Psi = diag(I - Lambda Phi Lambda^T).
struct TrueModel {
    std::string id;  // "A", "B", "C" or "custom"
    Eigen::MatrixXd Lambda;
    Eigen::MatrixXd Phi;
    Eigen::VectorXd Psi;

    Eigen::MatrixXd sigma() const;
    int var_count() const { return static_cast<int>(Lambda.rows()); }
    int factor_count() const { return static_cast<int>(Lambda.cols()); }

    static TrueModel model_a();  // p=6, m=2, blocks 0.9 / 0.8
    static TrueModel model_b();  // p=9, m=3, blocks 0.9 / 0.8 / 0.7
    static TrueModel model_c();  // p=100, m=4, 25-variable blocks 0.9 / 0.8 / 0.7 / 0.6
    static TrueModel by_name(const std::string& name);

    /// Block-diagonal loading pattern with the standard Phi/Psi construction.
    static TrueModel blocks(const std::vector<std::pair<int, double>>& block_sizes_and_loadings,
                            double phi_offdiag = 0.6, std::string id = "custom");
};

/// Deterministic counter-based stream: splitmix64 outputs + Box-Muller normals.
/// Identical (key) always yields the identical sequence, independent of call sites.
class CounterRng {
  public:
    explicit CounterRng(std::uint64_t key) : key_(key) {}
    double next_unit();    // uniform in (0,1)
    double next_normal();  // standard normal
    static std::uint64_t mix(std::uint64_t z);

  private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// Key for the (model, N, seed, replication) stream.
std::uint64_t dataset_key(const TrueModel& model, int n_obs, std::uint64_t seed, int replication);

/// N multivariate-normal draws via the triangular factor of Sigma_true; returns the
/// centered sample covariance with divisor N. Bit-identical for identical inputs.
SampleMoments generate_dataset(const TrueModel& model, int n_obs, std::uint64_t seed,
                               int replication = 0);

/// Exhaustive signed-permutation alignment of estimated columns to the truth
/// (minimizes ||Lambda_true - Lambda_hat P||_F^2); the same signed permutation is
/// applied to Phi_hat as a congruence.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> align_loadings(const Eigen::MatrixXd& lambda_hat,
                                                           const Eigen::MatrixXd& lambda_true,
                                                           const Eigen::MatrixXd& phi_hat);

struct Metrics {
    double sq_err = 0.0;  // ||Lambda_true - Lambda_hat||_F^2
    double tpr = 0.0;     // nonzero truths estimated nonzero (exact zero test)
    double tnr = 0.0;     // zero truths estimated exactly zero
};

Metrics metrics(const Eigen::MatrixXd& lambda_hat_aligned, const TrueModel& truth);

/// One estimator cell of the study: either a penalized path estimator
/// (family + gamma + selection criterion, oblique or orthogonal) or an
/// ML-plus-rotation baseline.
struct EstimatorSpec {
    enum class Kind { Penalized, Rotation } kind = Kind::Penalized;
    bool oblique = true;
    // penalized
    PenaltyFamily family = PenaltyFamily::McPlus;
    double gamma = 2.1;  // ignored for lasso
    Criterion criterion = Criterion::BIC;
    // rotation
    RotationCriterion rotation = RotationCriterion::Promax;

    std::string name() const;
};

struct StudyConfig {
    std::vector<std::string> models;  // "A", "B", "C"
    std::vector<int> sample_sizes;
    std::vector<EstimatorSpec> estimators;
    int replications = 100;
    std::uint64_t seed = 1;
    int rho_count = 30;
    SolverOptions solver;
    int threads = 1;
};

struct StudyRow {
    std::string model;
    int n_obs = 0;
    std::string estimator;
    double mse = 0.0;  // sum of sq_err over replications / replications
    double tpr = 0.0;
    double tnr = 0.0;
    int replications = 0;
    int failures = 0;
    std::string note;  // e.g. "skipped: N <= p"
};

struct StudyReport {
    std::vector<StudyRow> rows;
};

/// Runs the Monte Carlo study. Replications are independent given their derived seeds
/// and may run on worker threads; per-replication results are reduced in replication
/// order, so the report is identical for any thread count.
StudyReport run_study(const StudyConfig& config);

}  // namespace sparsefa
