#pragma once

// Graphical lasso (block coordinate descent over the covariance estimate,
// one lasso per column), partial correlations from a precision matrix, and
// the regression-residual route to the same partial correlations.

#include <Eigen/Dense>

#include <algorithm>
#include <cassert>
#include <limits>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "fcnet/error.hpp"

namespace fcnet {

struct CovarianceMatrix {
    Eigen::MatrixXd entries;

    int dim() const { return static_cast<int>(entries.rows()); }
};

struct PrecisionMatrix {
    Eigen::MatrixXd entries;
    double lambda = 0.0;
    /// Only off-diagonal entries are penalized; recorded for metadata.
    bool penalize_diagonal = false;
    int sweeps = 0;

    int dim() const { return static_cast<int>(entries.rows()); }
};

struct PartialCorrelationMatrix {
    Eigen::MatrixXd entries;

    int dim() const { return static_cast<int>(entries.rows()); }
};

/// Sample covariance with the T-1 denominator.
inline CovarianceMatrix empirical_covariance(const Eigen::MatrixXd& x) {
    if (x.rows() < 2) throw Error(ErrorKind::SampleTooSmall, "covariance needs at least 2 observations");
    const Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
    Eigen::MatrixXd s = centered.transpose() * centered / static_cast<double>(x.rows() - 1);
    // Exact symmetry; the product is symmetric up to rounding only.
    s = (0.5 * (s + s.transpose())).eval();
    return {std::move(s)};
}

struct GlassoOptions {
    double tol_outer = 1e-5;
    double tol_inner = 1e-7;
    int max_iter = 1000;
    int max_inner_iter = 10000;
    /// Once the covariance change is below tol_outer, sweeping continues
    /// until the KKT residual drops below this.
    double polish_tol = 1e-9;
    /// Certificate every returned solution satisfies.
    double kkt_slack = 1e-4;
    double diagonal_tol = 1e-6;
    /// Called after every outer sweep with the objective value. Costs a
    /// factorization per sweep, so it is only evaluated when set.
    std::function<void(int, double)> trace;
};

/// log det(theta) - tr(S theta) - lambda * sum_{i != j} |theta_ij|.
inline double glasso_objective(const Eigen::MatrixXd& s, const Eigen::MatrixXd& theta, double lambda) {
    Eigen::LLT<Eigen::MatrixXd> llt(theta);
    if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
    const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    const double l1 = theta.cwiseAbs().sum() - theta.diagonal().cwiseAbs().sum();
    return logdet - (s.cwiseProduct(theta)).sum() - lambda * l1;
}

struct KktReport {
    /// max_{i != j} |(inv(theta) - S)_ij| - lambda; must be <= slack.
    double bound_violation = 0.0;
    /// max over nonzero theta_ij of |(inv(theta) - S)_ij - lambda * sign(theta_ij)|.
    double support_gap = 0.0;
    /// max_i |(inv(theta) - S)_ii|.
    double diagonal_gap = 0.0;

    bool holds(double slack = 1e-4, double diagonal_tol = 1e-6) const {
        return bound_violation <= slack && support_gap <= slack && diagonal_gap <= diagonal_tol;
    }
    double residual() const { return std::max({bound_violation, support_gap, diagonal_gap}); }
};

/// Stationarity certificate of the off-diagonal-penalized problem:
/// inv(theta) - S = lambda * sign(theta) on the support, bounded by lambda
/// elsewhere, zero on the diagonal.
inline KktReport kkt_certificate(const Eigen::MatrixXd& s, const Eigen::MatrixXd& theta, double lambda) {
    KktReport r;
    Eigen::LLT<Eigen::MatrixXd> llt(theta);
    if (llt.info() != Eigen::Success) {
        r.bound_violation = r.support_gap = r.diagonal_gap = std::numeric_limits<double>::infinity();
        return r;
    }
    const Eigen::MatrixXd w = llt.solve(Eigen::MatrixXd::Identity(theta.rows(), theta.cols()));
    const Eigen::MatrixXd g = w - s;
    r.bound_violation = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < g.cols(); ++j) {
        r.diagonal_gap = std::max(r.diagonal_gap, std::abs(g(j, j)));
        for (Eigen::Index i = 0; i < g.rows(); ++i) {
            if (i == j) continue;
            r.bound_violation = std::max(r.bound_violation, std::abs(g(i, j)) - lambda);
            if (theta(i, j) != 0.0) {
                const double sign = theta(i, j) > 0.0 ? 1.0 : -1.0;
                r.support_gap = std::max(r.support_gap, std::abs(g(i, j) - lambda * sign));
            }
        }
    }
    if (g.cols() < 2) r.bound_violation = 0.0;
    return r;
}

namespace detail {

inline double soft_threshold(double x, double t) {
    if (x > t) return x - t;
    if (x < -t) return x + t;
    return 0.0;
}

inline std::vector<Eigen::Index> all_but(Eigen::Index p, Eigen::Index skip) {
    std::vector<Eigen::Index> idx;
    idx.reserve(static_cast<std::size_t>(p - 1));
    for (Eigen::Index i = 0; i < p; ++i) {
        if (i != skip) idx.push_back(i);
    }
    return idx;
}

inline void check_covariance(const Eigen::MatrixXd& s) {
    if (s.rows() != s.cols() || s.rows() == 0) throw Error(ErrorKind::Shape, "covariance matrix must be square and non-empty");
    const double scale = std::max(1.0, s.cwiseAbs().maxCoeff());
    if ((s - s.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
        throw Error(ErrorKind::Shape, "covariance matrix is not symmetric");
    }
    if (!s.allFinite()) throw Error(ErrorKind::Shape, "covariance matrix has non-finite entries");
    if ((s.diagonal().array() <= 0.0).any()) throw Error(ErrorKind::Shape, "covariance diagonal must be positive");
}

/// Solves min_b 0.5 b'Ab - c'b + lambda |b|_1 in place by cyclic
/// coordinate descent. Returns false if max_iter passes did not converge.
inline bool lasso_cd(const Eigen::MatrixXd& a, const Eigen::VectorXd& c, double lambda, Eigen::VectorXd& b,
                     double tol, int max_iter) {
    const auto m = b.size();
    // grad = c - A b, maintained incrementally.
    Eigen::VectorXd grad = c - a * b;
    for (int it = 0; it < max_iter; ++it) {
        double max_delta = 0.0;
        for (Eigen::Index k = 0; k < m; ++k) {
            const double old = b(k);
            const double next = soft_threshold(grad(k) + a(k, k) * old, lambda) / a(k, k);
            const double delta = next - old;
            if (delta != 0.0) {
                grad -= a.col(k) * delta;
                b(k) = next;
                max_delta = std::max(max_delta, std::abs(delta));
            }
        }
        if (max_delta < tol) return true;
    }
    return false;
}

}  // namespace detail

/// Sparse precision estimate maximizing
///   log det(theta) - tr(S theta) - lambda * sum_{i != j} |theta_ij|.
/// Off-diagonal entries whose lasso coefficient is zero come back as exact
/// 0.0. lambda == 0 requires a nonsingular S.
inline PrecisionMatrix graphical_lasso(const CovarianceMatrix& cov, double lambda, const GlassoOptions& opt = {}) {
    const Eigen::MatrixXd& s = cov.entries;
    detail::check_covariance(s);
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw Error(ErrorKind::Domain, "lambda must be a non-negative number");
    const Eigen::Index p = s.rows();

    if (lambda == 0.0) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s, Eigen::EigenvaluesOnly);
        const double lo = eig.eigenvalues().minCoeff();
        const double hi = eig.eigenvalues().maxCoeff();
        if (!(lo > 1e-12 * hi)) {
            throw Error(ErrorKind::Singularity,
                        "covariance is singular at lambda = 0 (fewer observations than variables?); use lambda > 0");
        }
    }

    PrecisionMatrix out;
    out.lambda = lambda;
    if (p == 1) {
        out.entries = Eigen::MatrixXd::Constant(1, 1, 1.0 / s(0, 0));
        return out;
    }

    Eigen::MatrixXd w = s;
    Eigen::MatrixXd beta = Eigen::MatrixXd::Zero(p - 1, p);  // column j: lasso coefficients for variable j
    Eigen::MatrixXd w11(p - 1, p - 1);
    Eigen::VectorXd s12(p - 1);
    Eigen::VectorXd b(p - 1);
    const double n_off = static_cast<double>(p * (p - 1));
    double last_objective = -std::numeric_limits<double>::infinity();

    auto extract = [&](Eigen::Index j, const std::vector<Eigen::Index>& idx) {
        for (Eigen::Index a = 0; a < p - 1; ++a) {
            s12(a) = s(idx[static_cast<std::size_t>(a)], j);
            for (Eigen::Index c = 0; c < p - 1; ++c) w11(a, c) = w(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(c)]);
        }
    };

    auto assemble_theta = [&]() {
        Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(p, p);
        for (Eigen::Index j = 0; j < p; ++j) {
            const auto idx = detail::all_but(p, j);
            double dot = 0.0;
            for (Eigen::Index a = 0; a < p - 1; ++a) dot += w(idx[static_cast<std::size_t>(a)], j) * beta(a, j);
            const double tjj = 1.0 / (w(j, j) - dot);
            theta(j, j) = tjj;
            for (Eigen::Index a = 0; a < p - 1; ++a) {
                const double bval = beta(a, j);
                theta(idx[static_cast<std::size_t>(a)], j) = bval == 0.0 ? 0.0 : -bval * tjj;
            }
        }
        // The two half-estimates agree up to the tolerance; average them and
        // keep a zero only where both sides are zero.
        Eigen::MatrixXd sym = 0.5 * (theta + theta.transpose());
        for (Eigen::Index j = 0; j < p; ++j) {
            for (Eigen::Index i = 0; i < p; ++i) {
                if (theta(i, j) == 0.0 && theta(j, i) == 0.0) sym(i, j) = 0.0;
            }
        }
        return sym;
    };

    for (int sweep = 1; sweep <= opt.max_iter; ++sweep) {
        double change = 0.0;
        for (Eigen::Index j = 0; j < p; ++j) {
            const auto idx = detail::all_but(p, j);
            extract(j, idx);
            b = beta.col(j);
            if (!detail::lasso_cd(w11, s12, lambda, b, opt.tol_inner, opt.max_inner_iter)) {
                throw ConvergenceError("inner lasso did not converge in column " + std::to_string(j), std::nan(""));
            }
            beta.col(j) = b;
            const Eigen::VectorXd w12 = w11 * b;
            for (Eigen::Index a = 0; a < p - 1; ++a) {
                const auto i = idx[static_cast<std::size_t>(a)];
                change += 2.0 * std::abs(w12(a) - w(i, j));
                w(i, j) = w12(a);
                w(j, i) = w12(a);
            }
        }
#ifndef NDEBUG
        const bool want_objective = true;
#else
        const bool want_objective = static_cast<bool>(opt.trace);
#endif
        if (want_objective) {
            const double objective = glasso_objective(s, assemble_theta(), lambda);
            assert(!(std::isfinite(objective) && std::isfinite(last_objective)) ||
                   objective >= last_objective - 1e-8 * (1.0 + std::abs(last_objective)));
            last_objective = objective;
            if (opt.trace) opt.trace(sweep, objective);
        }
        if (change / n_off < opt.tol_outer) {
            // The covariance change alone can stall above the certificate's
            // tolerances; keep sweeping until the residual is negligible.
            Eigen::MatrixXd theta = assemble_theta();
            if (kkt_certificate(s, theta, lambda).holds(opt.polish_tol, opt.polish_tol)) {
                out.entries = std::move(theta);
                out.sweeps = sweep;
                return out;
            }
        }
    }
    Eigen::MatrixXd theta = assemble_theta();
    const auto kkt = kkt_certificate(s, theta, lambda);
    if (kkt.holds(opt.kkt_slack, opt.diagonal_tol)) {
        out.entries = std::move(theta);
        out.sweeps = opt.max_iter;
        return out;
    }
    throw ConvergenceError("graphical lasso did not converge in " + std::to_string(opt.max_iter) +
                               " sweeps (KKT residual " + std::to_string(kkt.residual()) + ")",
                           kkt.residual());
}

/// C_ij = -theta_ij / sqrt(theta_ii theta_jj), unit diagonal, zero pattern of
/// theta preserved exactly.
inline PartialCorrelationMatrix partial_correlations(const Eigen::MatrixXd& theta) {
    const auto p = theta.rows();
    if ((theta.diagonal().array() <= 0.0).any()) {
        throw Error(ErrorKind::Definiteness, "precision matrix has a non-positive diagonal entry");
    }
    Eigen::MatrixXd c = Eigen::MatrixXd::Identity(p, p);
    for (Eigen::Index j = 0; j < p; ++j) {
        for (Eigen::Index i = 0; i < p; ++i) {
            if (i == j || theta(i, j) == 0.0) continue;
            c(i, j) = std::clamp(-theta(i, j) / std::sqrt(theta(i, i) * theta(j, j)), -1.0, 1.0);
        }
    }
    return {std::move(c)};
}

inline PartialCorrelationMatrix partial_correlations(const PrecisionMatrix& theta) {
    return partial_correlations(theta.entries);
}

/// Partial correlation of columns i and j given every other column, as the
/// Pearson correlation of the two OLS residual vectors (intercept included).
inline double partial_correlation_via_regression(const Eigen::MatrixXd& x, Eigen::Index i, Eigen::Index j) {
    const auto t = x.rows();
    const auto n = x.cols();
    if (i < 0 || j < 0 || i >= n || j >= n || i == j) throw Error(ErrorKind::Shape, "invalid column pair");
    if (t <= n) throw Error(ErrorKind::SampleTooSmall, "regression route needs more rows than columns");

    Eigen::MatrixXd z(t, n - 1);
    z.col(0).setOnes();
    Eigen::Index c = 1;
    for (Eigen::Index k = 0; k < n; ++k) {
        if (k != i && k != j) z.col(c++) = x.col(k);
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(z);
    qr.setThreshold(1e-10);
    if (qr.rank() < z.cols()) throw Error(ErrorKind::Rank, "conditioning set is rank deficient");

    const Eigen::VectorXd ri = x.col(i) - z * qr.solve(x.col(i));
    const Eigen::VectorXd rj = x.col(j) - z * qr.solve(x.col(j));
    const double denom = ri.norm() * rj.norm();
    if (!(denom > 0.0)) throw Error(ErrorKind::Rank, "residual vanishes; variable is a linear function of the rest");
    return std::clamp(ri.dot(rj) / denom, -1.0, 1.0);
}

}  // namespace fcnet
