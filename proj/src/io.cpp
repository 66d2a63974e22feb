#include "sparsefa/io.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace sparsefa {

using nlohmann::json;

InputKind input_kind_from_string(const std::string& name) {
    if (name == "raw") return InputKind::Raw;
    if (name == "cov" || name == "covariance") return InputKind::Covariance;
    if (name == "cor" || name == "correlation") return InputKind::Correlation;
    throw DataError("unknown input kind '" + name + "' (expected raw|cov|cor)");
}

namespace {

std::vector<std::string> tokenize(const std::string& line) {
    std::string cleaned = line;
    std::replace(cleaned.begin(), cleaned.end(), ',', ' ');
    std::istringstream is(cleaned);
    std::vector<std::string> out;
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
}

bool parse_number(const std::string& tok, double& value) {
    try {
        size_t pos = 0;
        value = std::stod(tok, &pos);
        return pos == tok.size();
    } catch (...) {
        return false;
    }
}

struct Table {
    std::vector<std::string> header;
    Eigen::MatrixXd values;
};

Table read_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    std::vector<std::vector<double>> rows;
    std::vector<std::string> header;
    std::string line;
    int lineno = 0;
    size_t width = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto toks = tokenize(line);
        if (toks.empty()) continue;
        if (rows.empty() && header.empty()) {
            // header row: any non-numeric token
            double v;
            bool numeric = true;
            for (auto& t : toks)
                if (!parse_number(t, v)) numeric = false;
            if (!numeric) {
                header = toks;
                continue;
            }
        }
        std::vector<double> row(toks.size());
        for (size_t c = 0; c < toks.size(); ++c) {
            if (!parse_number(toks[c], row[c]))
                throw DataError("non-numeric value '" + toks[c] + "' at line " +
                                std::to_string(lineno) + ", column " + std::to_string(c + 1));
        }
        if (width == 0) width = row.size();
        if (row.size() != width)
            throw DataError("line " + std::to_string(lineno) + " has " + std::to_string(row.size()) +
                            " fields, expected " + std::to_string(width));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw DataError("no data rows in '" + path.string() + "'");
    Table t;
    t.header = std::move(header);
    t.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
    for (size_t r = 0; r < rows.size(); ++r)
        for (size_t c = 0; c < width; ++c) t.values(static_cast<Eigen::Index>(r),
                                                    static_cast<Eigen::Index>(c)) = rows[r][c];
    return t;
}

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt6(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

json point_json(const PathPoint& pt) {
    json j;
    j["gamma"] = std::isinf(pt.gamma) ? json("inf") : json(pt.gamma);
    j["rho"] = pt.rho;
    j["df"] = pt.diagnostics.df;
    j["p_star"] = pt.diagnostics.p_star;
    j["loglik"] = pt.diagnostics.loglik;
    j["aic"] = pt.diagnostics.aic;
    j["bic"] = pt.diagnostics.bic;
    j["caic"] = pt.diagnostics.caic;
    j["gfi"] = pt.diagnostics.gfi;
    j["agfi"] = pt.diagnostics.agfi;
    j["iterations"] = pt.diagnostics.iterations;
    j["converged"] = pt.diagnostics.converged;
    return j;
}

json matrix_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
    const auto r = j.size();
    const auto c = j.at(0).size();
    Eigen::MatrixXd m(r, c);
    for (size_t i = 0; i < r; ++i)
        for (size_t k = 0; k < c; ++k) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
            j.at(i).at(k).get<double>();
    return m;
}

void write_file(const std::filesystem::path& file, const std::string& contents) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw DataError("cannot write '" + file.string() + "'");
    out << contents;
}

}  // namespace

SampleMoments load_data(const std::filesystem::path& path, InputKind kind,
                        const LoadOptions& options) {
    Table t = read_table(path);
    SampleMoments sm;
    sm.labels = t.header;
    if (kind == InputKind::Raw) {
        const auto n = t.values.rows();
        if (n < 2) throw DataError("raw input needs at least 2 rows");
        Eigen::MatrixXd X = t.values;
        X.rowwise() -= X.colwise().mean();
        sm.S = (X.transpose() * X) / static_cast<double>(n);
        sm.n_obs = static_cast<int>(n);
    } else {
        if (t.values.rows() != t.values.cols())
            throw DataError("matrix input must be square, got " + std::to_string(t.values.rows()) +
                            "x" + std::to_string(t.values.cols()));
        if (options.n_obs < 2) throw DataError("matrix input requires the observation count");
        const double asym = (t.values - t.values.transpose()).cwiseAbs().maxCoeff();
        if (asym > 1e-8)
            throw DataError("matrix is not symmetric (max asymmetry " + std::to_string(asym) + ")");
        sm.S = ((t.values + t.values.transpose()) / 2.0).eval();
        sm.n_obs = options.n_obs;
    }
    sm.validate();
    if (options.standardize && kind != InputKind::Correlation) sm = sm.to_correlation();
    return sm;
}

void write_path_json(const SolutionPath& path, const std::filesystem::path& file) {
    json points = json::array();
    for (int t = 0; t < path.grid.row_count(); ++t)
        for (int k = 0; k < path.grid.col_count(); ++k) points.push_back(point_json(path.at(t, k)));
    json j;
    j["points"] = std::move(points);
    j["rho_grid"] = path.grid.rhos;
    write_file(file, j.dump(2) + "\n");
}

void write_path_csv(const SolutionPath& path, const std::filesystem::path& file) {
    std::ostringstream out;
    out << "gamma,rho,df,p_star,loglik,aic,bic,caic,gfi,agfi,iterations,converged\n";
    for (int t = 0; t < path.grid.row_count(); ++t)
        for (int k = 0; k < path.grid.col_count(); ++k) {
            const PathPoint& pt = path.at(t, k);
            out << (std::isinf(pt.gamma) ? "inf" : fmt17(pt.gamma)) << ',' << fmt17(pt.rho) << ','
                << pt.diagnostics.df << ',' << pt.diagnostics.p_star << ','
                << fmt17(pt.diagnostics.loglik) << ',' << fmt17(pt.diagnostics.aic) << ','
                << fmt17(pt.diagnostics.bic) << ',' << fmt17(pt.diagnostics.caic) << ','
                << fmt17(pt.diagnostics.gfi) << ',' << fmt17(pt.diagnostics.agfi) << ','
                << pt.diagnostics.iterations << ',' << (pt.diagnostics.converged ? 1 : 0) << '\n';
        }
    write_file(file, out.str());
}

void write_selected_json(const SolutionPath& path, std::pair<int, int> index,
                         const SampleMoments& sm, const std::filesystem::path& file) {
    const PathPoint& pt = path.at(index.first, index.second);
    json j;
    j["gamma"] = std::isinf(pt.gamma) ? json("inf") : json(pt.gamma);
    j["rho"] = pt.rho;
    j["lambda"] = matrix_json(pt.solution.Lambda);
    j["psi"] = std::vector<double>(pt.solution.Psi.data(), pt.solution.Psi.data() + pt.solution.Psi.size());
    j["phi"] = matrix_json(pt.solution.Phi);
    j["labels"] = sm.labels;
    j["n_obs"] = sm.n_obs;
    j["diagnostics"] = point_json(pt);
    write_file(file, j.dump(2) + "\n");
}

FactorSolution read_selected_json(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw DataError("cannot open '" + file.string() + "'");
    json j = json::parse(in);
    FactorSolution sol;
    sol.Lambda = matrix_from_json(j.at("lambda"));
    std::vector<double> psi = j.at("psi").get<std::vector<double>>();
    sol.Psi = Eigen::Map<Eigen::VectorXd>(psi.data(), static_cast<Eigen::Index>(psi.size()));
    sol.Phi = matrix_from_json(j.at("phi"));
    sol.validate();
    return sol;
}

void write_trace_csv(const SolutionPath& path, int row, const std::filesystem::path& file) {
    const int p = path.at(row, 0).solution.var_count();
    const int m = path.at(row, 0).solution.factor_count();
    std::ostringstream out;
    out << "rho,log10_rho";
    for (int j = 0; j < m; ++j)
        for (int i = 0; i < p; ++i) out << ",lambda_" << (i + 1) << '_' << (j + 1);
    out << '\n';
    for (int k = 0; k < path.grid.col_count(); ++k) {
        const PathPoint& pt = path.at(row, k);
        out << fmt6(pt.rho) << ',' << fmt6(std::log10(pt.rho));
        for (int j = 0; j < m; ++j)
            for (int i = 0; i < p; ++i) out << ',' << fmt6(pt.solution.Lambda(i, j));
        out << '\n';
    }
    write_file(file, out.str());
}

void write_report_csv(const StudyReport& report, const std::filesystem::path& file) {
    std::ostringstream out;
    out << "model,n_obs,estimator,mse,tpr,tnr,replications,failures,note\n";
    for (const StudyRow& row : report.rows) {
        out << row.model << ',' << row.n_obs << ',' << row.estimator << ',' << fmt6(row.mse) << ','
            << fmt6(row.tpr) << ',' << fmt6(row.tnr) << ',' << row.replications << ','
            << row.failures << ',' << row.note << '\n';
    }
    write_file(file, out.str());
}

StudyConfig load_study_config(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw DataError("cannot open '" + file.string() + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw DataError("study config parse error: " + std::string(e.what()));
    }
    StudyConfig cfg;
    try {
        cfg.models = j.at("models").get<std::vector<std::string>>();
        cfg.sample_sizes = j.at("sample_sizes").get<std::vector<int>>();
        if (j.contains("replications")) cfg.replications = j.at("replications").get<int>();
        if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("rho_count")) cfg.rho_count = j.at("rho_count").get<int>();
        if (j.contains("eta")) cfg.solver.eta = j.at("eta").get<double>();
        for (const json& e : j.at("estimators")) {
            EstimatorSpec est;
            const std::string model_kind = e.at("model").get<std::string>();
            if (model_kind == "oblique") est.oblique = true;
            else if (model_kind == "orthogonal") est.oblique = false;
            else throw DataError("estimator field 'model' must be oblique|orthogonal, got '" +
                                 model_kind + "'");
            const std::string method = e.at("method").get<std::string>();
            if (method == "lasso" || method == "mcp" || method == "scad") {
                est.kind = EstimatorSpec::Kind::Penalized;
                est.family = method == "lasso" ? PenaltyFamily::Lasso
                             : method == "mcp" ? PenaltyFamily::McPlus
                                               : PenaltyFamily::Scad;
                if (est.family != PenaltyFamily::Lasso) est.gamma = e.at("gamma").get<double>();
                est.criterion = criterion_from_string(e.at("criterion").get<std::string>());
            } else if (method == "varimax" || method == "promax" || method == "lasso_clf") {
                est.kind = EstimatorSpec::Kind::Rotation;
                est.rotation = method == "varimax"  ? RotationCriterion::Varimax
                               : method == "promax" ? RotationCriterion::Promax
                                                    : RotationCriterion::LassoComponentLoss;
            } else {
                throw DataError("unknown estimator method '" + method + "'");
            }
            cfg.estimators.push_back(est);
        }
    } catch (const json::exception& e) {
        throw DataError("study config field error: " + std::string(e.what()));
    }
    return cfg;
}

}  // namespace sparsefa
