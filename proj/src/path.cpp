#include "sparsefa/path.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

namespace sparsefa {

Criterion criterion_from_string(const std::string& name) {
    if (name == "aic") return Criterion::AIC;
    if (name == "bic") return Criterion::BIC;
    if (name == "caic") return Criterion::CAIC;
    if (name == "gfi") return Criterion::GFI;
    if (name == "agfi") return Criterion::AGFI;
    throw DataError("unknown criterion '" + name + "' (expected aic|bic|caic|gfi|agfi)");
}

std::string criterion_name(Criterion c) {
    switch (c) {
        case Criterion::AIC: return "aic";
        case Criterion::BIC: return "bic";
        case Criterion::CAIC: return "caic";
        case Criterion::GFI: return "gfi";
        case Criterion::AGFI: return "agfi";
    }
    return "?";
}

std::vector<double> PathGrid::default_mcplus_gammas() {
    return {std::numeric_limits<double>::infinity(), 8.0, 5.5, 4.0, 3.2, 2.7, 2.4, 2.2, 2.1, 2.0};
}

void PathGrid::validate() const {
    if (gammas.empty() || rhos.empty()) throw DataError("path grid must be nonempty");
    for (size_t t = 1; t < gammas.size(); ++t)
        if (!(gammas[t] < gammas[t - 1])) throw DataError("gamma grid must be strictly decreasing");
    for (size_t k = 1; k < rhos.size(); ++k)
        if (!(rhos[k] > rhos[k - 1])) throw DataError("rho grid must be strictly increasing");
    const double gmin = gammas.back();
    if (family == PenaltyFamily::McPlus && !(gmin > 1.0))
        throw DataError("MC+ gamma grid must stay above 1");
    if (family == PenaltyFamily::Scad && !(gmin > 2.0))
        throw DataError("SCAD gamma grid must stay above 2");
    if (selectable.size() != gammas.size()) throw DataError("selectable mask size mismatch");
}

PathGrid PathGrid::make(PenaltyFamily family, std::vector<double> gammas, std::vector<double> rhos) {
    PathGrid g;
    g.family = family;
    std::sort(gammas.begin(), gammas.end(), std::greater<double>());
    gammas.erase(std::unique(gammas.begin(), gammas.end()), gammas.end());
    if (family == PenaltyFamily::Lasso)
        gammas = {std::numeric_limits<double>::infinity()};
    g.selectable.assign(gammas.size(), true);
    // The pathwise scheme always starts from the lasso limit; when the user asked only
    // for finite gammas, prepend the lasso row as a non-selectable warm-start scaffold.
    if (!gammas.empty() && !std::isinf(gammas.front()) && family != PenaltyFamily::Lasso) {
        gammas.insert(gammas.begin(), std::numeric_limits<double>::infinity());
        g.selectable.insert(g.selectable.begin(), false);
    }
    g.gammas = std::move(gammas);
    g.rhos = std::move(rhos);
    g.validate();
    return g;
}

std::vector<double> rho_grid(const SampleMoments& sm, int m, int K, const SolverOptions& opts) {
    if (K < 2) throw DataError("rho grid needs K >= 2");
    FactorSolution init;
    switch (opts.init) {
        case InitKind::Warm: init = *opts.warm; break;
        default: init = principal_init(sm, m); break;
    }
    double rho_max = 0.0;
    if ((init.Lambda.array() != 0.0).any()) {
        EStepMoments mom = e_step(sm, init);
        rho_max = (mom.B.cwiseAbs().array().colwise() * init.Psi.array().inverse()).maxCoeff();
    }
    if (!(rho_max > 0.0)) rho_max = 1.0;  // degenerate S: all-zero B sentinel
    const double rho_min = 1e-3 * rho_max;
    std::vector<double> rhos(K);
    const double step = std::log(rho_max / rho_min) / (K - 1);
    for (int k = 0; k < K; ++k) rhos[k] = rho_min * std::exp(step * k);
    rhos.back() = rho_max;
    return rhos;
}

FitDiagnostics information_criteria(const FactorSolution& sol, double loglik, const SampleMoments& sm) {
    FitDiagnostics d;
    const int p = sol.var_count();
    const int m = sol.factor_count();
    d.loglik = loglik;
    d.df = sol.nonzero_loadings();
    d.p_star = d.df + m * (m - 1) / 2 + p;
    const double logn = std::log(static_cast<double>(sm.n_obs));
    d.aic = -2.0 * loglik + 2.0 * d.p_star;
    d.bic = -2.0 * loglik + d.p_star * logn;
    d.caic = -2.0 * loglik + d.p_star * (logn + 1.0);
    // AGFI adjusts by the dense oblique parameter count (LISREL convention).
    const int dense_params = p * m + p + m * (m - 1) / 2;
    std::tie(d.gfi, d.agfi) = gfi_agfi(sm, sol, dense_params);
    return d;
}

namespace {

// An all-zero loading column is an absorbing state of the EM (its B column vanishes),
// so warm starts re-seed dead columns from the top principal direction of the residual.
FactorSolution revive_dead_columns(const SampleMoments& sm, FactorSolution sol) {
    const auto m = sol.factor_count();
    std::vector<int> dead;
    for (int j = 0; j < m; ++j)
        if ((sol.Lambda.col(j).array() == 0.0).all()) dead.push_back(j);
    if (dead.empty()) return sol;
    for (int j : dead) {
        Eigen::MatrixXd resid = sm.S - implied_covariance(sol);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(resid);
        const auto top = resid.rows() - 1;
        const double e = std::max(es.eigenvalues()(top), 1e-4);
        sol.Lambda.col(j) = es.eigenvectors().col(top) * std::sqrt(e);
        sol.Phi.row(j).setZero();
        sol.Phi.col(j).setZero();
        sol.Phi(j, j) = 1.0;
    }
    Eigen::VectorXd comm = ((sol.Lambda * sol.Phi).array() * sol.Lambda.array()).rowwise().sum();
    sol.Psi = (sm.S.diagonal() - comm).cwiseMax(0.05 * sm.S.diagonal());
    return sol;
}

PathPoint make_point(const SampleMoments& sm, double gamma, double rho, FitResult res) {
    PathPoint pt;
    pt.gamma = gamma;
    pt.rho = rho;
    FitDiagnostics ic = information_criteria(res.solution, res.diagnostics.loglik, sm);
    ic.iterations = res.diagnostics.iterations;
    ic.converged = res.diagnostics.converged;
    ic.objective_trace = std::move(res.diagnostics.objective_trace);
    pt.solution = std::move(res.solution);
    pt.diagnostics = std::move(ic);
    return pt;
}

PenaltySpec spec_for(PenaltyFamily family, double gamma, double rho) {
    if (family == PenaltyFamily::Lasso || std::isinf(gamma)) return PenaltySpec::lasso(rho);
    if (family == PenaltyFamily::McPlus) return PenaltySpec::mcplus(rho, gamma);
    return PenaltySpec::scad(rho, gamma);
}

}  // namespace

SolutionPath solution_path(const SampleMoments& sm, int m, const PathGrid& grid,
                           const SolverOptions& opts) {
    grid.validate();
    opts.validate();
    const int T = grid.row_count();
    const int K = grid.col_count();
    SolutionPath path;
    path.grid = grid;
    path.points.assign(T, std::vector<PathPoint>(K));

    const FactorSolution principal = principal_init(sm, m);
    for (int t = 0; t < T; ++t) {
        const double gamma = grid.gammas[t];
        for (int k = K - 1; k >= 0; --k) {
            const double rho = grid.rhos[k];
            const PenaltySpec pen = spec_for(grid.family, gamma, rho);
            if (k == K - 1) {
                // Largest rho: the null model is the known fixed point.
                FitResult res;
                res.solution = null_solution(sm, m, opts.eta);
                res.diagnostics.converged = true;
                res.diagnostics.iterations = 0;
                res.diagnostics.loglik = log_likelihood(sm, res.solution);
                path.points[t][k] = make_point(sm, gamma, rho, std::move(res));
                continue;
            }
            const FactorSolution& neighbor =
                (t == 0) ? path.points[0][k + 1].solution : path.points[t - 1][k].solution;
            SolverOptions local = opts;
            local.init = InitKind::Warm;
            if ((neighbor.Lambda.array() == 0.0).all()) {
                local.warm = principal;
                if (opts.phi_fixed_identity) local.warm->Phi.setIdentity();
            } else {
                local.warm = revive_dead_columns(sm, neighbor);
            }
            FitResult res;
            try {
                res = fit(sm, m, pen, local);
            } catch (const SolverError&) {
                // Per-point failure: keep the warm start, flag non-convergence.
                res.solution = *local.warm;
                res.diagnostics.converged = false;
                res.diagnostics.iterations = 0;
                res.diagnostics.loglik = log_likelihood(sm, res.solution);
            }
            path.points[t][k] = make_point(sm, gamma, rho, std::move(res));
        }
    }
    return path;
}

namespace {

bool better(const SolutionPath& path, Criterion c, std::pair<int, int> cand,
            std::pair<int, int> best) {
    auto value = [&](std::pair<int, int> idx) {
        const FitDiagnostics& d = path.at(idx.first, idx.second).diagnostics;
        switch (c) {
            case Criterion::AIC: return d.aic;
            case Criterion::BIC: return d.bic;
            case Criterion::CAIC: return d.caic;
            case Criterion::GFI: return -d.gfi;
            case Criterion::AGFI: return -d.agfi;
        }
        return 0.0;
    };
    const double vc = value(cand);
    const double vb = value(best);
    if (vc < vb) return true;
    if (vc > vb) return false;
    // ties: larger rho, then larger gamma
    const double rc = path.at(cand.first, cand.second).rho;
    const double rb = path.at(best.first, best.second).rho;
    if (rc != rb) return rc > rb;
    return path.at(cand.first, cand.second).gamma > path.at(best.first, best.second).gamma;
}

}  // namespace

std::pair<int, int> select_model(const SolutionPath& path, Criterion criterion) {
    std::pair<int, int> best{0, 0};
    for (int t = 0; t < path.grid.row_count(); ++t)
        for (int k = 0; k < path.grid.col_count(); ++k)
            if (std::pair<int, int>{t, k} != best && better(path, criterion, {t, k}, best))
                best = {t, k};
    return best;
}

int select_in_row(const SolutionPath& path, int row, Criterion criterion) {
    std::pair<int, int> best{row, 0};
    for (int k = 1; k < path.grid.col_count(); ++k)
        if (better(path, criterion, {row, k}, best)) best = {row, k};
    return best.second;
}

std::pair<int, int> select_model_selectable(const SolutionPath& path, Criterion criterion) {
    std::pair<int, int> best{-1, -1};
    for (int t = 0; t < path.grid.row_count(); ++t) {
        if (!path.grid.selectable[t]) continue;
        for (int k = 0; k < path.grid.col_count(); ++k)
            if (best.first < 0 || better(path, criterion, {t, k}, best)) best = {t, k};
    }
    if (best.first < 0) throw DataError("no selectable rows in path");
    return best;
}

}  // namespace sparsefa
