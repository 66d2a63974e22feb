#include "sparsefa/simulation.hpp"

#include <algorithm>
#include <numeric>
#include <atomic>
#include <cmath>
#include <numbers>
#include <thread>

namespace sparsefa {

Eigen::MatrixXd TrueModel::sigma() const {
    Eigen::MatrixXd s = Lambda * Phi * Lambda.transpose();
    s.diagonal() += Psi;
    return ((s + s.transpose()) / 2.0).eval();
}

TrueModel TrueModel::blocks(const std::vector<std::pair<int, double>>& spec, double phi_offdiag,
                            std::string id) {
    const int m = static_cast<int>(spec.size());
    int p = 0;
    for (auto& [size, _] : spec) p += size;
    TrueModel model;
    model.id = std::move(id);
    model.Lambda = Eigen::MatrixXd::Zero(p, m);
    int row = 0;
    for (int j = 0; j < m; ++j) {
        for (int r = 0; r < spec[j].first; ++r) model.Lambda(row++, j) = spec[j].second;
    }
    model.Phi = Eigen::MatrixXd::Constant(m, m, phi_offdiag);
    model.Phi.diagonal().setOnes();
    Eigen::MatrixXd common = model.Lambda * model.Phi * model.Lambda.transpose();
    model.Psi = (Eigen::VectorXd::Ones(p) - common.diagonal()).eval();
    if ((model.Psi.array() <= 0.0).any()) throw DataError("block model has nonpositive unique variance");
    return model;
}

TrueModel TrueModel::model_a() { return blocks({{3, 0.9}, {3, 0.8}}, 0.6, "A"); }
TrueModel TrueModel::model_b() { return blocks({{3, 0.9}, {3, 0.8}, {3, 0.7}}, 0.6, "B"); }
TrueModel TrueModel::model_c() {
    return blocks({{25, 0.9}, {25, 0.8}, {25, 0.7}, {25, 0.6}}, 0.6, "C");
}

TrueModel TrueModel::by_name(const std::string& name) {
    if (name == "A" || name == "a") return model_a();
    if (name == "B" || name == "b") return model_b();
    if (name == "C" || name == "c") return model_c();
    throw DataError("unknown model '" + name + "' (expected A, B or C)");
}

std::uint64_t CounterRng::mix(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

double CounterRng::next_unit() {
    const std::uint64_t bits = mix(key_ + 0x9E3779B97F4A7C15ULL * (++counter_));
    // 53-bit mantissa in (0,1); never exactly 0
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

double CounterRng::next_normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double u1 = next_unit();
    const double u2 = next_unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
}

std::uint64_t dataset_key(const TrueModel& model, int n_obs, std::uint64_t seed, int replication) {
    std::uint64_t h = 0x243F6A8885A308D3ULL;
    for (char c : model.id) h = CounterRng::mix(h ^ static_cast<std::uint64_t>(c));
    h = CounterRng::mix(h ^ static_cast<std::uint64_t>(model.var_count()));
    h = CounterRng::mix(h ^ static_cast<std::uint64_t>(n_obs));
    h = CounterRng::mix(h ^ seed);
    h = CounterRng::mix(h ^ static_cast<std::uint64_t>(replication));
    return h;
}

SampleMoments generate_dataset(const TrueModel& model, int n_obs, std::uint64_t seed,
                               int replication) {
    if (n_obs < 2) throw DataError("need at least 2 observations");
    const int p = model.var_count();
    Eigen::LLT<Eigen::MatrixXd> llt(model.sigma());
    if (llt.info() != Eigen::Success) throw DataError("population covariance is not PD");
    Eigen::MatrixXd L = llt.matrixL();
    CounterRng rng(dataset_key(model, n_obs, seed, replication));
    Eigen::MatrixXd X(n_obs, p);
    Eigen::VectorXd z(p);
    for (int n = 0; n < n_obs; ++n) {
        for (int i = 0; i < p; ++i) z(i) = rng.next_normal();
        X.row(n) = (L * z).transpose();
    }
    X.rowwise() -= X.colwise().mean();
    SampleMoments sm;
    sm.S = (X.transpose() * X) / static_cast<double>(n_obs);
    sm.S = ((sm.S + sm.S.transpose()) / 2.0).eval();
    sm.n_obs = n_obs;
    return sm;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> align_loadings(const Eigen::MatrixXd& lambda_hat,
                                                           const Eigen::MatrixXd& lambda_true,
                                                           const Eigen::MatrixXd& phi_hat) {
    if (lambda_hat.rows() != lambda_true.rows() || lambda_hat.cols() != lambda_true.cols())
        throw DataError("alignment requires equal shapes");
    const int m = static_cast<int>(lambda_hat.cols());
    std::vector<int> perm(m);
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    std::vector<int> best_perm = perm;
    unsigned best_signs = 0;
    do {
        for (unsigned signs = 0; signs < (1u << m); ++signs) {
            double d = 0.0;
            for (int j = 0; j < m; ++j) {
                const double s = (signs >> j) & 1u ? -1.0 : 1.0;
                d += (lambda_true.col(j) - s * lambda_hat.col(perm[j])).squaredNorm();
            }
            if (d < best) {
                best = d;
                best_perm = perm;
                best_signs = signs;
            }
        }
    } while (std::next_permutation(perm.begin(), perm.end()));

    Eigen::MatrixXd L(lambda_hat.rows(), m);
    Eigen::VectorXd sign(m);
    for (int j = 0; j < m; ++j) {
        sign(j) = (best_signs >> j) & 1u ? -1.0 : 1.0;
        L.col(j) = sign(j) * lambda_hat.col(best_perm[j]);
    }
    Eigen::MatrixXd phi(m, m);
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b)
            phi(a, b) = sign(a) * sign(b) * phi_hat(best_perm[a], best_perm[b]);
    return {L, phi};
}

Metrics metrics(const Eigen::MatrixXd& lambda_hat_aligned, const TrueModel& truth) {
    Metrics out;
    out.sq_err = (truth.Lambda - lambda_hat_aligned).squaredNorm();
    int nz_true = 0, nz_hit = 0, z_true = 0, z_hit = 0;
    for (Eigen::Index j = 0; j < truth.Lambda.cols(); ++j)
        for (Eigen::Index i = 0; i < truth.Lambda.rows(); ++i) {
            if (truth.Lambda(i, j) != 0.0) {
                ++nz_true;
                if (lambda_hat_aligned(i, j) != 0.0) ++nz_hit;
            } else {
                ++z_true;
                if (lambda_hat_aligned(i, j) == 0.0) ++z_hit;
            }
        }
    out.tpr = nz_true ? static_cast<double>(nz_hit) / nz_true : 1.0;
    out.tnr = z_true ? static_cast<double>(z_hit) / z_true : 1.0;
    return out;
}

std::string EstimatorSpec::name() const {
    std::string base = oblique ? "obl" : "ort";
    if (kind == Kind::Penalized) {
        switch (family) {
            case PenaltyFamily::Lasso: base += "-lasso"; break;
            case PenaltyFamily::McPlus: base += "-mcp"; break;
            case PenaltyFamily::Scad: base += "-scad"; break;
        }
        base += "-" + criterion_name(criterion);
    } else {
        switch (rotation) {
            case RotationCriterion::Varimax: base += "-varimax"; break;
            case RotationCriterion::Promax: base += "-promax"; break;
            case RotationCriterion::LassoComponentLoss: base += "-lassoclf"; break;
        }
    }
    return base;
}

namespace {

struct CellAccumulator {
    double sq_err = 0.0, tpr = 0.0, tnr = 0.0;
    int ok = 0, failures = 0;
};

struct RepOutcome {
    bool ok = false;
    Metrics m;
};

// Penalized estimators for one (model type, replication): a single path whose gamma
// ladder covers every requested gamma serves all of them.
struct PathPlan {
    bool oblique = true;
    std::vector<double> gammas;  // descending incl. inf
};

}  // namespace

StudyReport run_study(const StudyConfig& config) {
    if (config.replications < 1) throw DataError("replication count must be >= 1");
    if (config.models.empty() || config.sample_sizes.empty() || config.estimators.empty())
        throw DataError("study config needs models, sample sizes and estimators");

    StudyReport report;
    for (const std::string& model_name : config.models) {
        const TrueModel truth = TrueModel::by_name(model_name);
        const int p = truth.var_count();
        const int m = truth.factor_count();
        for (int n_obs : config.sample_sizes) {
            // Which estimators run in this cell?
            std::vector<const EstimatorSpec*> active;
            std::vector<std::string> skipped_note(config.estimators.size());
            for (size_t e = 0; e < config.estimators.size(); ++e) {
                const EstimatorSpec& est = config.estimators[e];
                if (est.kind == EstimatorSpec::Kind::Rotation && n_obs <= p)
                    skipped_note[e] = "skipped: maximum likelihood unavailable for N <= p";
                else
                    active.push_back(&config.estimators[e]);
            }

            // Distinct path plans for penalized estimators.
            std::vector<PathPlan> plans;
            auto plan_index = [&](bool oblique) -> int {
                for (size_t i = 0; i < plans.size(); ++i)
                    if (plans[i].oblique == oblique) return static_cast<int>(i);
                plans.push_back(PathPlan{oblique, {std::numeric_limits<double>::infinity()}});
                return static_cast<int>(plans.size() - 1);
            };
            bool need_mle[2] = {false, false};  // [oblique]
            for (const EstimatorSpec* est : active) {
                if (est->kind == EstimatorSpec::Kind::Penalized) {
                    int pi = plan_index(est->oblique);
                    if (est->family != PenaltyFamily::Lasso && std::isfinite(est->gamma))
                        plans[pi].gammas.push_back(est->gamma);
                } else {
                    need_mle[est->oblique ? 1 : 0] = true;
                }
            }
            for (auto& plan : plans) {
                // Fill the concavity ladder down to the smallest requested gamma so each
                // finite-gamma row is warm-started gradually from the lasso end.
                if (plan.gammas.size() > 1) {
                    const double gmin =
                        *std::min_element(plan.gammas.begin() + 1, plan.gammas.end());
                    for (double g : PathGrid::default_mcplus_gammas())
                        if (std::isfinite(g) && g > gmin) plan.gammas.push_back(g);
                }
                std::sort(plan.gammas.begin(), plan.gammas.end(), std::greater<double>());
                plan.gammas.erase(std::unique(plan.gammas.begin(), plan.gammas.end()),
                                  plan.gammas.end());
            }

            auto find_plan = [&plans](bool oblique) -> int {
                for (size_t i = 0; i < plans.size(); ++i)
                    if (plans[i].oblique == oblique) return static_cast<int>(i);
                return -1;
            };

            const int R = config.replications;
            std::vector<std::vector<RepOutcome>> outcomes(active.size(),
                                                          std::vector<RepOutcome>(R));

            auto run_rep = [&](int rep) {
                SampleMoments sm;
                try {
                    sm = generate_dataset(truth, n_obs, config.seed, rep);
                } catch (const std::exception&) {
                    return;  // all estimators fail this replication
                }
                // paths
                std::vector<SolutionPath> paths(plans.size());
                std::vector<bool> path_ok(plans.size(), false);
                for (size_t pi = 0; pi < plans.size(); ++pi) {
                    try {
                        std::vector<double> rhos = rho_grid(sm, m, config.rho_count, config.solver);
                        PathGrid grid = PathGrid::make(
                            plans[pi].gammas.size() > 1 ? PenaltyFamily::McPlus : PenaltyFamily::Lasso,
                            plans[pi].gammas, rhos);
                        SolverOptions local = config.solver;
                        local.phi_fixed_identity = !plans[pi].oblique;
                        paths[pi] = solution_path(sm, m, grid, local);
                        path_ok[pi] = true;
                    } catch (const std::exception&) {
                    }
                }
                // MLE + rotations
                FitResult mle[2];
                bool mle_ok[2] = {false, false};
                for (int ob = 0; ob < 2; ++ob) {
                    if (!need_mle[ob]) continue;
                    try {
                        SolverOptions mopts = config.solver;
                        mopts.phi_fixed_identity = true;  // rotation baselines start orthogonal
                        mopts.em_tol = std::min(config.solver.em_tol, 1e-7);
                        mopts.max_em_iter = std::max(config.solver.max_em_iter, 2000);
                        mle[ob] = fit(sm, m, PenaltySpec::lasso(0.0), mopts);
                        mle_ok[ob] = true;
                    } catch (const std::exception&) {
                    }
                }
                for (size_t e = 0; e < active.size(); ++e) {
                    const EstimatorSpec& est = *active[e];
                    try {
                        Eigen::MatrixXd lambda_hat;
                        Eigen::MatrixXd phi_hat;
                        if (est.kind == EstimatorSpec::Kind::Penalized) {
                            const int pi = find_plan(est.oblique);
                            if (pi < 0 || !path_ok[pi]) throw SolverError("path failed");
                            const SolutionPath& path = paths[pi];
                            int row = 0;
                            if (est.family != PenaltyFamily::Lasso && std::isfinite(est.gamma)) {
                                for (int t = 0; t < path.grid.row_count(); ++t)
                                    if (path.grid.gammas[t] == est.gamma) row = t;
                            }
                            const int k = select_in_row(path, row, est.criterion);
                            lambda_hat = path.at(row, k).solution.Lambda;
                            phi_hat = path.at(row, k).solution.Phi;
                        } else {
                            const int ob = est.oblique ? 1 : 0;
                            if (!mle_ok[ob]) throw SolverError("MLE failed");
                            RotationSpec rs;
                            rs.criterion = est.rotation;
                            rs.oblique = est.oblique;
                            rs.seed = dataset_key(truth, n_obs, config.seed, rep);
                            RotationResult rr = rotate(mle[ob].solution.Lambda, rs);
                            lambda_hat = rr.Lambda;
                            phi_hat = rr.Phi;
                        }
                        auto [aligned, phi_aligned] = align_loadings(lambda_hat, truth.Lambda, phi_hat);
                        outcomes[e][rep].m = metrics(aligned, truth);
                        outcomes[e][rep].ok = true;
                    } catch (const std::exception&) {
                    }
                }
            };

            const int workers = std::max(1, config.threads);
            if (workers == 1) {
                for (int rep = 0; rep < R; ++rep) run_rep(rep);
            } else {
                std::atomic<int> next{0};
                std::vector<std::thread> pool;
                for (int w = 0; w < workers; ++w)
                    pool.emplace_back([&] {
                        for (int rep = next.fetch_add(1); rep < R; rep = next.fetch_add(1))
                            run_rep(rep);
                    });
                for (auto& th : pool) th.join();
            }

            // reduce in replication order (thread-count independent)
            for (size_t e = 0; e < active.size(); ++e) {
                CellAccumulator acc;
                for (int rep = 0; rep < R; ++rep) {
                    if (!outcomes[e][rep].ok) {
                        ++acc.failures;
                        continue;
                    }
                    acc.sq_err += outcomes[e][rep].m.sq_err;
                    acc.tpr += outcomes[e][rep].m.tpr;
                    acc.tnr += outcomes[e][rep].m.tnr;
                    ++acc.ok;
                }
                StudyRow row;
                row.model = truth.id;
                row.n_obs = n_obs;
                row.estimator = active[e]->name();
                row.replications = R;
                row.failures = acc.failures;
                if (acc.ok > 0) {
                    row.mse = acc.sq_err / acc.ok;
                    row.tpr = acc.tpr / acc.ok;
                    row.tnr = acc.tnr / acc.ok;
                }
                report.rows.push_back(std::move(row));
            }
            // skipped rotation rows, with the recorded reason
            for (size_t e = 0; e < config.estimators.size(); ++e) {
                if (skipped_note[e].empty()) continue;
                StudyRow row;
                row.model = truth.id;
                row.n_obs = n_obs;
                row.estimator = config.estimators[e].name();
                row.replications = 0;
                row.note = skipped_note[e];
                report.rows.push_back(std::move(row));
            }
        }
    }
    return report;
}

}  // namespace sparsefa
