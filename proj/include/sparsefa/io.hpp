#pragma once

#include <filesystem>

#include "sparsefa/simulation.hpp"

namespace sparsefa {

enum class InputKind { Raw, Covariance, Correlation };

InputKind input_kind_from_string(const std::string& name);

struct LoadOptions {
    int n_obs = 0;             // required for covariance/correlation input
    bool standardize = true;   // analyze the correlation matrix (opt-out via CLI flag)
};

/// Parses a delimiter-separated numeric table (',' or whitespace, '#' comments,
/// optional header row) and builds SampleMoments. Raw data becomes the centered
/// divisor-N sample covariance; matrix input is validated against the
/// SampleMoments invariants (symmetry 1e-8, PSD).
SampleMoments load_data(const std::filesystem::path& path, InputKind kind,
                        const LoadOptions& options);

/// path.json / path.csv: one record per grid point with gamma, rho, df, criteria,
/// fit indexes, loglik and the convergence flag. JSON uses shortest-round-trip floats
/// and sorted keys; the CSV carries 17 significant digits so both encodings agree.
void write_path_json(const SolutionPath& path, const std::filesystem::path& file);
void write_path_csv(const SolutionPath& path, const std::filesystem::path& file);

/// selected.json: the chosen solution (Lambda, Psi, Phi, labels, diagnostics).
void write_selected_json(const SolutionPath& path, std::pair<int, int> index,
                         const SampleMoments& sm, const std::filesystem::path& file);

/// Reads back a selected.json into a FactorSolution (round-trip check support).
FactorSolution read_selected_json(const std::filesystem::path& file);

/// trace.csv: plot-ready per-grid-point columns (log10 rho and every lambda_ij)
/// for one gamma row.
void write_trace_csv(const SolutionPath& path, int row, const std::filesystem::path& file);

/// report.csv mirroring the simulation tables: one row per (model, N, estimator) cell.
void write_report_csv(const StudyReport& report, const std::filesystem::path& file);

/// Study configuration from JSON (models, sample sizes, estimators, reps, seed, ...).
StudyConfig load_study_config(const std::filesystem::path& file);

}  // namespace sparsefa
