#pragma once

#include "sparsefa/em_solver.hpp"

namespace sparsefa {

enum class Criterion { AIC, BIC, CAIC, GFI, AGFI };

Criterion criterion_from_string(const std::string& name);
std::string criterion_name(Criterion c);

/// (gamma, rho) lattice. gammas are stored in the order rows are computed:
/// descending, with the lasso limit (infinity) first; rhos are ascending.
struct PathGrid {
    PenaltyFamily family = PenaltyFamily::McPlus;
    std::vector<double> gammas;  // descending, gammas[0] == inf when the lasso row is present
    std::vector<double> rhos;    // ascending
    /// Rows excluded from selection (scaffold rows the user did not request).
    std::vector<bool> selectable;

    int row_count() const { return static_cast<int>(gammas.size()); }
    int col_count() const { return static_cast<int>(rhos.size()); }
    void validate() const;

    /// Default MC+ ladder {inf, 8, 5.5, 4, 3.2, 2.7, 2.4, 2.2, 2.1, 2.0}.
    static std::vector<double> default_mcplus_gammas();

    static PathGrid make(PenaltyFamily family, std::vector<double> gammas, std::vector<double> rhos);
};

/// rho_K = max_{i,j} |b_ij| / psi_i at the init solution (the smallest level at which
/// a from-zero coordinate sweep keeps every loading at zero); rho_1 = 0.001 rho_K;
/// log-spaced in between. Falls back to rho_K = 1 when B is identically zero.
std::vector<double> rho_grid(const SampleMoments& sm, int m, int K,
                             const SolverOptions& opts = SolverOptions{});

struct PathPoint {
    double gamma = 0.0;
    double rho = 0.0;
    FactorSolution solution;
    FitDiagnostics diagnostics;
};

struct SolutionPath {
    PathGrid grid;
    std::vector<std::vector<PathPoint>> points;  // [row t][col k]
    const PathPoint& at(int t, int k) const { return points.at(t).at(k); }
};

/// df = #nonzero loadings, p* = df + m(m-1)/2 + p, AIC/BIC/CAIC per the standard formulas,
/// GFI/AGFI attached (the AGFI adjustment uses the dense parameter count pm + p + m(m-1)/2).
FitDiagnostics information_criteria(const FactorSolution& sol, double loglik, const SampleMoments& sm);

/// Warm-started solution surface: the first (largest-gamma) row right-to-left in rho,
/// each later row warm-started from the previous row at the same rho. Runs row-sequentially
/// (each fit is deterministic given its warm start, so the schedule does not affect results).
SolutionPath solution_path(const SampleMoments& sm, int m, const PathGrid& grid,
                           const SolverOptions& opts);

/// argmin over the grid for AIC/BIC/CAIC, argmax for GFI/AGFI; ties prefer larger rho,
/// then larger gamma. Returns (row, col).
std::pair<int, int> select_model(const SolutionPath& path, Criterion criterion);

/// Same rule restricted to one gamma row; returns the column index.
int select_in_row(const SolutionPath& path, int row, Criterion criterion);

/// select_model restricted to rows marked selectable in the grid.
std::pair<int, int> select_model_selectable(const SolutionPath& path, Criterion criterion);

}  // namespace sparsefa
