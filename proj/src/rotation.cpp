#include "sparsefa/rotation.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <numeric>
#include <random>

namespace sparsefa {

void RotationSpec::validate() const {
    if (criterion == RotationCriterion::Varimax && oblique)
        throw DataError("varimax is an orthogonal rotation");
    if (promax_power < 2) throw DataError("promax power must be >= 2");
}

namespace {

constexpr double kSmoothEps = 1e-10;  // |x| ~ sqrt(x^2 + eps) for gradient evaluation

// Criterion value and gradient with respect to the rotated loadings.
// Both criteria are minimized.
struct CriterionFn {
    RotationCriterion kind;
    double operator()(const Eigen::MatrixXd& L, Eigen::MatrixXd* grad) const {
        if (kind == RotationCriterion::Varimax) {
            // negative varimax: -sum_j [ mean(l^4) - mean(l^2)^2 ]
            const double p = static_cast<double>(L.rows());
            Eigen::MatrixXd L2 = L.array().square();
            Eigen::RowVectorXd col_mean = L2.colwise().mean();
            const double value = -((L2.array().square().colwise().mean()) -
                                   col_mean.array().square())
                                      .sum();
            if (grad) {
                *grad = -(4.0 / p) *
                        (L.array().cube() - L.array().rowwise() * col_mean.array()).matrix();
            }
            return value;
        }
        // smoothed L1 component loss
        Eigen::ArrayXXd s = (L.array().square() + kSmoothEps).sqrt();
        if (grad) *grad = (L.array() / s).matrix();
        return s.sum();
    }
};

Eigen::MatrixXd project_orthogonal(const Eigen::MatrixXd& X) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeFullU | Eigen::ComputeFullV);
    return svd.matrixU() * svd.matrixV().transpose();
}

Eigen::MatrixXd normalize_columns(Eigen::MatrixXd X) {
    for (Eigen::Index j = 0; j < X.cols(); ++j) X.col(j) /= X.col(j).norm();
    return X;
}

struct GpaResult {
    Eigen::MatrixXd T;
    double value = 0.0;
    bool converged = false;
};

// Gradient projection on the rotation manifold (Jennrich-style).
// oblique == false: T in O(m), Lambda* = Lambda T.
// oblique == true : columns of T unit length, Lambda* = Lambda (T^T)^{-1}, Phi = T^T T.
Eigen::MatrixXd rotated(const Eigen::MatrixXd& lambda0, const Eigen::MatrixXd& T, bool oblique) {
    if (!oblique) return lambda0 * T;
    // Lambda (T^T)^{-1} = (T^{-1} Lambda^T)^T
    return T.partialPivLu().solve(lambda0.transpose()).transpose();
}

GpaResult gpa(const Eigen::MatrixXd& lambda0, const CriterionFn& fn, Eigen::MatrixXd T,
              bool oblique, double tol = 1e-6, int max_iter = 1000) {
    Eigen::MatrixXd grad_l;
    Eigen::MatrixXd L = rotated(lambda0, T, oblique);
    double f = fn(L, &grad_l);
    auto manifold_grad = [&](const Eigen::MatrixXd& Lcur, const Eigen::MatrixXd& Tcur,
                             const Eigen::MatrixXd& Gq) -> Eigen::MatrixXd {
        if (!oblique) return lambda0.transpose() * Gq;
        // d f / d T = -(L^T Gq T^{-1})^T = -T^{-T} (L^T Gq)^T
        Eigen::MatrixXd M = Lcur.transpose() * Gq;
        return -Tcur.transpose().partialPivLu().solve(M.transpose());
    };
    Eigen::MatrixXd G = manifold_grad(L, T, grad_l);
    double alpha = 1.0;
    GpaResult out;
    for (int it = 0; it < max_iter; ++it) {
        Eigen::MatrixXd Gp;
        if (oblique) {
            Gp = G;
            for (Eigen::Index j = 0; j < T.cols(); ++j)
                Gp.col(j) -= T.col(j) * T.col(j).dot(G.col(j));
        } else {
            Eigen::MatrixXd M = T.transpose() * G;
            Gp = G - T * ((M + M.transpose()) / 2.0);
        }
        const double s = Gp.norm();
        if (s < tol) {
            out.converged = true;
            break;
        }
        alpha *= 2.0;
        bool step_ok = false;
        Eigen::MatrixXd Tt;
        double ft = f;
        for (int ls = 0; ls < 60; ++ls) {
            Eigen::MatrixXd X = T - alpha * Gp;
            Tt = oblique ? normalize_columns(X) : project_orthogonal(X);
            ft = fn(rotated(lambda0, Tt, oblique), nullptr);
            if (ft < f - 0.5 * s * s * alpha * 1e-4) {
                step_ok = true;
                break;
            }
            alpha /= 2.0;
        }
        if (!step_ok) break;
        T = Tt;
        L = rotated(lambda0, T, oblique);
        f = fn(L, &grad_l);
        G = manifold_grad(L, T, grad_l);
    }
    out.T = T;
    out.value = f;
    return out;
}

Eigen::MatrixXd random_orthogonal(int m, std::mt19937_64& rng) {
    std::normal_distribution<double> nd;
    Eigen::MatrixXd Z(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) Z(i, j) = nd(rng);
    Eigen::MatrixXd Q = project_orthogonal(Z);
    return Q;
}

RotationResult promax(const Eigen::MatrixXd& lambda_mle, int power) {
    // varimax first
    CriterionFn vmx{RotationCriterion::Varimax};
    GpaResult vr = gpa(lambda_mle, vmx, Eigen::MatrixXd::Identity(lambda_mle.cols(), lambda_mle.cols()),
                       /*oblique=*/false);
    Eigen::MatrixXd V = lambda_mle * vr.T;
    // signed power target
    Eigen::MatrixXd P = (V.array().sign() * V.array().abs().pow(power)).matrix();
    // least-squares transform, then normalize so diag((U^T U)^{-1}) = I
    Eigen::MatrixXd U = (V.transpose() * V).ldlt().solve(V.transpose() * P);
    Eigen::MatrixXd UtU_inv = (U.transpose() * U).ldlt().solve(
        Eigen::MatrixXd::Identity(U.cols(), U.cols()));
    U = U * UtU_inv.diagonal().cwiseSqrt().asDiagonal();
    RotationResult out;
    out.Lambda = V * U;
    Eigen::MatrixXd UtU = U.transpose() * U;
    out.Phi = UtU.ldlt().solve(Eigen::MatrixXd::Identity(U.cols(), U.cols()));
    out.Phi = ((out.Phi + out.Phi.transpose()) / 2.0).eval();
    out.Phi.diagonal().setOnes();
    out.converged = vr.converged;
    CriterionFn l1{RotationCriterion::LassoComponentLoss};
    out.criterion_value = l1(out.Lambda, nullptr);
    return out;
}

}  // namespace

RotationResult rotate(const Eigen::MatrixXd& lambda_mle, const RotationSpec& spec) {
    spec.validate();
    const auto m = lambda_mle.cols();
    if (spec.criterion == RotationCriterion::Promax) return promax(lambda_mle, spec.promax_power);

    CriterionFn fn{spec.criterion};
    Eigen::MatrixXd T0 = Eigen::MatrixXd::Identity(m, m);
    GpaResult best = gpa(lambda_mle, fn, T0, spec.oblique);
    if (spec.criterion == RotationCriterion::LassoComponentLoss) {
        std::mt19937_64 rng(spec.seed + 0x9E3779B97F4A7C15ULL);
        for (int r = 0; r < 8; ++r) {
            Eigen::MatrixXd Tr = random_orthogonal(static_cast<int>(m), rng);
            if (spec.oblique) Tr = normalize_columns(Tr);
            GpaResult cand = gpa(lambda_mle, fn, Tr, spec.oblique);
            if (cand.value < best.value) best = cand;
        }
    }

    RotationResult out;
    out.converged = best.converged;
    if (!spec.oblique) {
        out.Lambda = lambda_mle * best.T;
        out.Phi = Eigen::MatrixXd::Identity(m, m);
    } else {
        // Lambda* = Lambda (T^T)^{-1} with unit-length columns of T; Phi = T^T T has unit
        // diagonal by the constraint and Lambda* Phi Lambda*^T = Lambda Lambda^T exactly.
        out.Lambda = rotated(lambda_mle, best.T, /*oblique=*/true);
        out.Phi = best.T.transpose() * best.T;
        out.Phi = ((out.Phi + out.Phi.transpose()) / 2.0).eval();
        out.Phi.diagonal().setOnes();
    }
    out.criterion_value = fn(out.Lambda, nullptr);
    return out;
}

Eigen::MatrixXd min_l1_G(const Eigen::MatrixXd& phi, int restarts, std::uint64_t seed) {
    const auto m = phi.rows();
    Eigen::LLT<Eigen::MatrixXd> llt(phi);
    if (llt.info() != Eigen::Success) throw DataError("Phi must be positive definite");
    Eigen::MatrixXd L = llt.matrixL();
    CriterionFn fn{RotationCriterion::LassoComponentLoss};

    std::mt19937_64 rng(seed + 0xD1B54A32D192ED03ULL);
    Eigen::MatrixXd bestG = L;
    double best_l1 = L.cwiseAbs().sum();
    for (int r = 0; r < restarts; ++r) {
        Eigen::MatrixXd T0 = (r == 0) ? Eigen::MatrixXd::Identity(m, m)
                                      : random_orthogonal(static_cast<int>(m), rng);
        GpaResult res = gpa(L, fn, T0, /*oblique=*/false);
        Eigen::MatrixXd G = L * res.T;
        const double l1 = G.cwiseAbs().sum();
        if (l1 < best_l1) {
            best_l1 = l1;
            bestG = G;
        }
    }
    canonicalize_columns(bestG);
    return bestG;
}

void canonicalize_columns(Eigen::MatrixXd& lambda, Eigen::MatrixXd* phi) {
    const auto m = lambda.cols();
    std::vector<int> order(m);
    std::iota(order.begin(), order.end(), 0);
    Eigen::VectorXd norms = lambda.colwise().norm();
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return norms(a) > norms(b); });
    Eigen::MatrixXd out(lambda.rows(), m);
    Eigen::VectorXd signs(m);
    for (Eigen::Index j = 0; j < m; ++j) {
        Eigen::VectorXd col = lambda.col(order[j]);
        Eigen::Index imax;
        col.cwiseAbs().maxCoeff(&imax);
        const double s = col(imax) < 0.0 ? -1.0 : 1.0;
        out.col(j) = s * col;
        signs(j) = s;
    }
    if (phi) {
        Eigen::MatrixXd ph(m, m);
        for (Eigen::Index a = 0; a < m; ++a)
            for (Eigen::Index b = 0; b < m; ++b)
                ph(a, b) = signs(a) * signs(b) * (*phi)(order[a], order[b]);
        *phi = ph;
    }
    lambda = out;
}

}  // namespace sparsefa
