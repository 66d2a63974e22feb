#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>

#include "sparsefa/io.hpp"

namespace fs = std::filesystem;
using namespace sparsefa;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitSolver = 3;

struct FitArgs {
    std::string data;
    std::string kind = "raw";
    int n_obs = 0;
    int factors = 1;
    std::string penalty = "mcp";
    std::vector<double> gamma_grid;
    int rho_count = 30;
    std::string criterion = "bic";
    double eta = 0.001;
    bool orthogonal = false;
    bool no_standardize = false;
    std::uint64_t seed = 0;
    std::string out = ".";
    std::string format = "both";
    int threads = 1;
    double em_tol = 1e-5;
    int max_em_iter = 500;
};

int run_fit(const FitArgs& a) {
    LoadOptions lo;
    lo.n_obs = a.n_obs;
    lo.standardize = !a.no_standardize;
    SampleMoments sm = load_data(a.data, input_kind_from_string(a.kind), lo);

    PenaltyFamily family = a.penalty == "lasso"  ? PenaltyFamily::Lasso
                           : a.penalty == "mcp"  ? PenaltyFamily::McPlus
                           : a.penalty == "scad" ? PenaltyFamily::Scad
                                                 : throw DataError("unknown penalty '" + a.penalty + "'");
    SolverOptions opts;
    opts.eta = a.eta;
    opts.em_tol = a.em_tol;
    opts.max_em_iter = a.max_em_iter;
    opts.phi_fixed_identity = a.orthogonal;
    opts.seed = a.seed;

    std::vector<double> gammas = a.gamma_grid;
    if (gammas.empty()) {
        if (family == PenaltyFamily::McPlus) gammas = PathGrid::default_mcplus_gammas();
        else if (family == PenaltyFamily::Scad) gammas = {3.7};
        else gammas = {std::numeric_limits<double>::infinity()};
    }
    std::vector<double> rhos = rho_grid(sm, a.factors, a.rho_count, opts);
    PathGrid grid = PathGrid::make(family, gammas, rhos);
    SolutionPath path = solution_path(sm, a.factors, grid, opts);

    auto selected = select_model_selectable(path, criterion_from_string(a.criterion));
    if (!path.at(selected.first, selected.second).diagnostics.converged &&
        path.at(selected.first, selected.second).diagnostics.iterations == 0)
        throw SolverError("solver failed at the selected grid point");

    fs::create_directories(a.out);
    const fs::path out(a.out);
    if (a.format == "json" || a.format == "both") write_path_json(path, out / "path.json");
    if (a.format == "csv" || a.format == "both") write_path_csv(path, out / "path.csv");
    write_selected_json(path, selected, sm, out / "selected.json");
    write_trace_csv(path, selected.first, out / "trace.csv");

    const FitDiagnostics& d = path.at(selected.first, selected.second).diagnostics;
    std::cout << "selected gamma="
              << (std::isinf(path.at(selected.first, selected.second).gamma)
                      ? std::string("inf")
                      : std::to_string(path.at(selected.first, selected.second).gamma))
              << " rho=" << path.at(selected.first, selected.second).rho << " df=" << d.df
              << " " << a.criterion << "="
              << (a.criterion == "aic"    ? d.aic
                  : a.criterion == "bic"  ? d.bic
                  : a.criterion == "caic" ? d.caic
                  : a.criterion == "gfi"  ? d.gfi
                                          : d.agfi)
              << " gfi=" << d.gfi << " agfi=" << d.agfi << "\n";
    return 0;
}

struct SimArgs {
    std::string config;
    std::string out = ".";
    int reps = -1;
    std::int64_t seed = -1;
    int threads = 1;
};

int run_simulate(const SimArgs& a) {
    StudyConfig cfg = load_study_config(a.config);
    if (a.reps > 0) cfg.replications = a.reps;
    if (a.seed >= 0) cfg.seed = static_cast<std::uint64_t>(a.seed);
    cfg.threads = a.threads;
    StudyReport report = run_study(cfg);
    fs::create_directories(a.out);
    write_report_csv(report, fs::path(a.out) / "report.csv");
    for (const StudyRow& row : report.rows) {
        std::printf("%-2s N=%-4d %-16s mse=%8.4f tpr=%5.3f tnr=%5.3f reps=%d fail=%d %s\n",
                    row.model.c_str(), row.n_obs, row.estimator.c_str(), row.mse, row.tpr, row.tnr,
                    row.replications, row.failures, row.note.c_str());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sparse oblique factor analysis by penalized maximum likelihood"};
    app.require_subcommand(1);

    FitArgs fa;
    CLI::App* fit_cmd = app.add_subcommand("fit", "Fit a (gamma, rho) solution path to data");
    fit_cmd->add_option("--data", fa.data, "input table")->required();
    fit_cmd->add_option("--kind", fa.kind, "raw|cov|cor")->check(CLI::IsMember({"raw", "cov", "cor"}));
    fit_cmd->add_option("--n-obs", fa.n_obs, "observation count (required for cov/cor input)");
    fit_cmd->add_option("--factors", fa.factors, "number of common factors")->required();
    fit_cmd->add_option("--penalty", fa.penalty, "lasso|mcp|scad")
        ->check(CLI::IsMember({"lasso", "mcp", "scad"}));
    fit_cmd->add_option("--gamma-grid", fa.gamma_grid, "concavity grid (descending)")->delimiter(',');
    fit_cmd->add_option("--rho-count", fa.rho_count, "number of rho grid points");
    fit_cmd->add_option("--criterion", fa.criterion, "aic|bic|caic|gfi|agfi")
        ->check(CLI::IsMember({"aic", "bic", "caic", "gfi", "agfi"}));
    fit_cmd->add_option("--eta", fa.eta, "improper-solution penalty weight");
    fit_cmd->add_flag("--orthogonal", fa.orthogonal, "fix the factor correlation at identity");
    fit_cmd->add_flag("--no-standardize", fa.no_standardize, "analyze the covariance, not the correlation");
    fit_cmd->add_option("--seed", fa.seed, "seed for random initialization");
    fit_cmd->add_option("--out", fa.out, "output directory");
    fit_cmd->add_option("--format", fa.format, "path file encoding")
        ->check(CLI::IsMember({"json", "csv", "both"}));
    fit_cmd->add_option("--threads", fa.threads, "worker cap (fit is single-threaded)");
    fit_cmd->add_option("--em-tol", fa.em_tol, "EM relative objective tolerance");
    fit_cmd->add_option("--max-em-iter", fa.max_em_iter, "EM iteration cap");

    SimArgs sa;
    CLI::App* sim_cmd = app.add_subcommand("simulate", "Run a Monte Carlo study from a config file");
    sim_cmd->add_option("--config", sa.config, "study configuration (JSON)")->required();
    sim_cmd->add_option("--out", sa.out, "output directory");
    sim_cmd->add_option("--reps", sa.reps, "override replication count");
    sim_cmd->add_option("--seed", sa.seed, "override base seed");
    sim_cmd->add_option("--threads", sa.threads, "worker thread cap");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kExitUsage;
    }

    try {
        if (fit_cmd->parsed()) return run_fit(fa);
        if (sim_cmd->parsed()) return run_simulate(sa);
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const SolverError& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return kExitSolver;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitSolver;
    }
    return kExitUsage;
}
