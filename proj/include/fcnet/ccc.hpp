#pragma once

// Continuum canonical correlation between the forecast and response blocks.
//
// For unit vectors w, v with F* = F w and R* = R v the criterion is
//
//   COV(F*, R*)^2 * (VAR(F*) VAR(R*))^(alpha / (1 - alpha) - 1),
//
// which is the squared correlation at alpha = 0 (CCA), the squared
// covariance at alpha = 0.5 (PLS), and is dominated by the within-block
// variances as alpha -> 1 (PCA). The solver is projected gradient ascent on
// the product of unit spheres, started from the three closed-form solutions
// and one seeded random direction.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fcnet/error.hpp"
#include "fcnet/random.hpp"

namespace fcnet {

struct PeriodScore {
    std::string label;
    double f_score = 0.0;
    double r_score = 0.0;
    /// Position of the period in time, scaled to [0, 1].
    double rank = 0.0;
};

struct CccSolution {
    double alpha = 0.0;
    Eigen::VectorXd w;
    Eigen::VectorXd v;
    Eigen::VectorXd f_star;
    Eigen::VectorXd r_star;
    /// Criterion value; at alpha = 1 the product of the two variances.
    double objective = 0.0;
    std::vector<PeriodScore> scores;
    /// Fewer than 10 observations per variable.
    bool warn_overfit = false;
    /// Which start produced the optimum: "cca", "pls", "pca", "random",
    /// "warm", "extra" or "pca-direct".
    std::string start;
    int iterations = 0;
};

struct CccOptions {
    std::uint64_t seed = 20100;
    int max_iter = 5000;
    double tol = 1e-10;
    /// Extra start (used by sweeps to carry the previous grid point forward).
    std::optional<std::pair<Eigen::VectorXd, Eigen::VectorXd>> warm_start;
    /// Adds a second seeded random start (seed + 1).
    bool extra_start = false;
};

struct CanonicalPair {
    Eigen::VectorXd w;
    Eigen::VectorXd v;
    /// rho for CCA, the singular value (covariance) for PLS.
    double value = 0.0;
};

struct PrincipalAxis {
    Eigen::VectorXd w;
    double variance = 0.0;
};

inline bool overfit_warning(Eigen::Index t, Eigen::Index n, Eigen::Index m) { return t < 10 * (n + m); }

namespace detail {

struct BlockMoments {
    Eigen::MatrixXd ff;
    Eigen::MatrixXd rr;
    Eigen::MatrixXd fr;
};

inline BlockMoments moments(const Eigen::MatrixXd& f, const Eigen::MatrixXd& r) {
    if (f.rows() != r.rows()) throw Error(ErrorKind::Shape, "forecast and response blocks have different lengths");
    if (f.rows() < 2 || f.cols() < 1 || r.cols() < 1) throw Error(ErrorKind::Shape, "blocks must be non-empty");
    const double d = static_cast<double>(f.rows() - 1);
    return {f.transpose() * f / d, r.transpose() * r / d, f.transpose() * r / d};
}

/// Makes the largest-magnitude entry positive.
inline void canonical_sign(Eigen::VectorXd& x) {
    Eigen::Index i = 0;
    x.cwiseAbs().maxCoeff(&i);
    if (x(i) < 0.0) x = -x;
}

inline double exponent(double alpha) { return alpha / (1.0 - alpha) - 1.0; }

/// log criterion; -inf where the criterion is zero.
inline double log_criterion(const BlockMoments& mo, const Eigen::VectorXd& w, const Eigen::VectorXd& v, double p) {
    const double c = w.dot(mo.fr * v);
    const double a = w.dot(mo.ff * w);
    const double b = v.dot(mo.rr * v);
    if (c == 0.0) return -std::numeric_limits<double>::infinity();
    if (!(a > 0.0) || !(b > 0.0)) {
        return p < 0.0 ? std::numeric_limits<double>::quiet_NaN() : -std::numeric_limits<double>::infinity();
    }
    return 2.0 * std::log(std::abs(c)) + p * (std::log(a) + std::log(b));
}

struct AscentResult {
    Eigen::VectorXd w;
    Eigen::VectorXd v;
    double log_value = -std::numeric_limits<double>::infinity();
    int iterations = 0;
};

/// Riemannian gradient ascent of the log criterion on S^{N-1} x S^{M-1}
/// with backtracking; stops when the criterion improves by less than
/// tol (relative to its magnitude when that exceeds 1).
inline AscentResult ascend(const BlockMoments& mo, Eigen::VectorXd w, Eigen::VectorXd v, double p, double tol,
                           int max_iter) {
    w.normalize();
    v.normalize();
    AscentResult res{w, v, log_criterion(mo, w, v, p), 0};
    if (!std::isfinite(res.log_value)) return res;
    double step = 1.0;
    for (int it = 1; it <= max_iter; ++it) {
        res.iterations = it;
        const double c = res.w.dot(mo.fr * res.v);
        const double a = res.w.dot(mo.ff * res.w);
        const double b = res.v.dot(mo.rr * res.v);
        Eigen::VectorXd gw = 2.0 * (mo.fr * res.v) / c + 2.0 * p * (mo.ff * res.w) / a;
        Eigen::VectorXd gv = 2.0 * (mo.fr.transpose() * res.w) / c + 2.0 * p * (mo.rr * res.v) / b;
        gw -= gw.dot(res.w) * res.w;
        gv -= gv.dot(res.v) * res.v;
        const double gnorm2 = gw.squaredNorm() + gv.squaredNorm();
        if (gnorm2 < 1e-30) break;

        step = std::min(step * 2.0, 1e6);
        bool moved = false;
        while (step > 1e-18) {
            const Eigen::VectorXd w1 = (res.w + step * gw).normalized();
            const Eigen::VectorXd v1 = (res.v + step * gv).normalized();
            const double l1 = log_criterion(mo, w1, v1, p);
            if (std::isfinite(l1) && l1 >= res.log_value + 1e-4 * step * gnorm2) {
                // Improvement of the criterion itself, relative once it exceeds 1.
                const double rel = std::expm1(l1 - res.log_value);
                const double gain = l1 > 0.0 ? rel : std::exp(res.log_value) * rel;
                res.w = w1;
                res.v = v1;
                res.log_value = l1;
                moved = true;
                if (gain < tol) return res;
                break;
            }
            step *= 0.5;
        }
        if (!moved) break;
    }
    return res;
}

/// Dominant singular pair of c by alternating power iteration from the
/// normalized all-ones vector.
inline CanonicalPair power_svd(const Eigen::MatrixXd& c, double tol = 1e-12, int max_iter = 10000) {
    Eigen::VectorXd v = Eigen::VectorXd::Ones(c.cols()).normalized();
    Eigen::VectorXd w = Eigen::VectorXd::Ones(c.rows()).normalized();
    double sigma = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        Eigen::VectorXd w1 = c * v;
        const double wn = w1.norm();
        if (!(wn > 0.0)) throw Error(ErrorKind::Numeric, "power iteration hit the null space");
        w1 /= wn;
        Eigen::VectorXd v1 = c.transpose() * w1;
        sigma = v1.norm();
        if (!(sigma > 0.0)) throw Error(ErrorKind::Numeric, "power iteration hit the null space");
        v1 /= sigma;
        const double delta = std::max((w1 - w).norm(), (v1 - v).norm());
        w = std::move(w1);
        v = std::move(v1);
        if (delta < tol) return {w, v, sigma};
    }
    throw Error(ErrorKind::Numeric, "power iteration did not converge (leading singular values nearly tied?)");
}

}  // namespace detail

/// Criterion for unit w, v and alpha in [0, 1) on zero-mean blocks.
inline double ccc_objective(const Eigen::MatrixXd& f, const Eigen::MatrixXd& r, const Eigen::VectorXd& w,
                            const Eigen::VectorXd& v, double alpha) {
    if (!(alpha >= 0.0 && alpha < 1.0)) throw Error(ErrorKind::Domain, "criterion is defined for alpha in [0, 1)");
    const Eigen::VectorXd fs = f * w;
    const Eigen::VectorXd rs = r * v;
    const double d = static_cast<double>(f.rows() - 1);
    const double cov = fs.dot(rs) / d;
    const double vf = fs.squaredNorm() / d;
    const double vr = rs.squaredNorm() / d;
    const double p = detail::exponent(alpha);
    if ((vf == 0.0 || vr == 0.0) && p < 0.0) throw Error(ErrorKind::DegenerateDirection, "summary series has zero variance");
    return cov * cov * std::pow(vf * vr, p);
}

/// Leading principal axis of a zero-mean block.
inline PrincipalAxis pca_oracle(const Eigen::MatrixXd& x) {
    if (x.rows() < 2) throw Error(ErrorKind::Shape, "PCA needs at least 2 rows");
    const Eigen::MatrixXd cov = x.transpose() * x / static_cast<double>(x.rows() - 1);
    auto pair = detail::power_svd(cov);
    detail::canonical_sign(pair.w);
    return {pair.w, pair.w.dot(cov * pair.w)};
}

/// Leading singular triple of the cross-covariance F'R / (T-1).
inline CanonicalPair pls_oracle(const Eigen::MatrixXd& f, const Eigen::MatrixXd& r) {
    const auto mo = detail::moments(f, r);
    auto pair = detail::power_svd(mo.fr);
    if (pair.w.dot(mo.fr * pair.v) < 0.0) pair.v = -pair.v;
    detail::canonical_sign(pair.w);
    if (pair.w.dot(mo.fr * pair.v) < 0.0) pair.v = -pair.v;
    return pair;
}

/// Leading canonical pair via whitening: the top singular pair of
/// Cff^{-1/2} Cfr Crr^{-1/2}, mapped back and normalized to unit length.
inline CanonicalPair cca_oracle(const Eigen::MatrixXd& f, const Eigen::MatrixXd& r) {
    const auto mo = detail::moments(f, r);
    auto inv_sqrt = [](const Eigen::MatrixXd& c, const char* block) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c);
        const auto& ev = eig.eigenvalues();
        if (!(ev.minCoeff() > 1e-10 * std::max(1.0, ev.maxCoeff()))) {
            throw Error(ErrorKind::Rank, std::string("within-block covariance of ") + block +
                                             " is singular; CCA needs well over N + M observations "
                                             "(rule of thumb: 10 per variable)");
        }
        return Eigen::MatrixXd(eig.eigenvectors() * ev.cwiseSqrt().cwiseInverse().asDiagonal() *
                               eig.eigenvectors().transpose());
    };
    const Eigen::MatrixXd kf = inv_sqrt(mo.ff, "F");
    const Eigen::MatrixXd kr = inv_sqrt(mo.rr, "R");
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(kf * mo.fr * kr, Eigen::ComputeThinU | Eigen::ComputeThinV);
    CanonicalPair out;
    out.w = (kf * svd.matrixU().col(0)).normalized();
    out.v = (kr * svd.matrixV().col(0)).normalized();
    out.value = std::clamp(svd.singularValues()(0), 0.0, 1.0);
    detail::canonical_sign(out.w);
    if (out.w.dot(mo.fr * out.v) < 0.0) out.v = -out.v;
    return out;
}

namespace detail {

inline void orient(const BlockMoments& mo, Eigen::VectorXd& w, Eigen::VectorXd& v) {
    const double c = w.dot(mo.fr * v);
    if (c < 0.0) {
        w = -w;
        v = -v;
    } else if (c == 0.0) {
        Eigen::Index i = 0;
        w.cwiseAbs().maxCoeff(&i);
        if (w(i) < 0.0) {
            w = -w;
            v = -v;
        }
    }
}

inline CccSolution finish(const Eigen::MatrixXd& f, const Eigen::MatrixXd& r, double alpha, Eigen::VectorXd w,
                          Eigen::VectorXd v, double objective, std::string start, int iterations,
                          const std::vector<std::string>& labels) {
    CccSolution s;
    s.alpha = alpha;
    s.w = std::move(w);
    s.v = std::move(v);
    s.f_star = f * s.w;
    s.r_star = r * s.v;
    s.objective = objective;
    s.warn_overfit = overfit_warning(f.rows(), f.cols(), r.cols());
    s.start = std::move(start);
    s.iterations = iterations;
    const auto t = f.rows();
    for (Eigen::Index i = 0; i < t; ++i) {
        PeriodScore ps;
        ps.label = static_cast<std::size_t>(i) < labels.size() ? labels[static_cast<std::size_t>(i)] : std::to_string(i + 1);
        ps.f_score = s.f_star(i);
        ps.r_score = s.r_star(i);
        ps.rank = t > 1 ? static_cast<double>(i) / static_cast<double>(t - 1) : 0.0;
        s.scores.push_back(std::move(ps));
    }
    return s;
}

}  // namespace detail

/// Maximizes the criterion over unit w, v. alpha = 1 returns the two
/// leading principal axes directly.
inline CccSolution ccc_solve(const Eigen::MatrixXd& f, const Eigen::MatrixXd& r, double alpha,
                             const CccOptions& opt = {}, const std::vector<std::string>& labels = {}) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(ErrorKind::Domain, "alpha must lie in [0, 1]");
    if (f.rows() < 3) throw Error(ErrorKind::SampleTooSmall, "CCC needs at least 3 periods");
    const auto mo = detail::moments(f, r);
    if ((mo.ff.diagonal().array() <= 0.0).all() || (mo.rr.diagonal().array() <= 0.0).all()) {
        throw Error(ErrorKind::DegenerateInput, "a block has zero variance");
    }

    if (alpha == 1.0) {
        auto pf = pca_oracle(f);
        auto pr = pca_oracle(r);
        detail::orient(mo, pf.w, pr.w);
        const double objective = pf.w.dot(mo.ff * pf.w) * pr.w.dot(mo.rr * pr.w);
        return detail::finish(f, r, alpha, pf.w, pr.w, objective, "pca-direct", 0, labels);
    }

    struct Start {
        std::string name;
        Eigen::VectorXd w;
        Eigen::VectorXd v;
    };
    std::vector<Start> starts;
    try {
        const auto cca = cca_oracle(f, r);
        starts.push_back({"cca", cca.w, cca.v});
    } catch (const Error&) {
        // Singular within-block covariance: CCA start unavailable.
    }
    try {
        const auto pls = pls_oracle(f, r);
        starts.push_back({"pls", pls.w, pls.v});
    } catch (const Error&) {
    }
    try {
        starts.push_back({"pca", pca_oracle(f).w, pca_oracle(r).w});
    } catch (const Error&) {
    }
    auto random_start = [&](std::uint64_t seed, const char* name) {
        NormalStream rng(seed);
        Eigen::VectorXd w(f.cols());
        Eigen::VectorXd v(r.cols());
        for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = rng.normal();
        for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = rng.normal();
        starts.push_back({name, w, v});
    };
    random_start(opt.seed, "random");
    if (opt.extra_start) random_start(opt.seed + 1, "extra");
    if (opt.warm_start) starts.push_back({"warm", opt.warm_start->first, opt.warm_start->second});

    const double p = detail::exponent(alpha);
    detail::AscentResult best;
    std::string best_name;
    for (const auto& s : starts) {
        if (s.w.size() != f.cols() || s.v.size() != r.cols() || !(s.w.norm() > 0.0) || !(s.v.norm() > 0.0)) continue;
        auto res = detail::ascend(mo, s.w, s.v, p, opt.tol, opt.max_iter);
        if (std::isnan(res.log_value)) continue;
        if (best_name.empty() || res.log_value > best.log_value) {
            best = std::move(res);
            best_name = s.name;
        }
    }
    if (best_name.empty() || !std::isfinite(best.log_value)) {
        throw Error(ErrorKind::DegenerateInput, "no start direction gives a positive criterion (blocks uncorrelated?)");
    }
    detail::orient(mo, best.w, best.v);
    return detail::finish(f, r, alpha, best.w, best.v, ccc_objective(f, r, best.w, best.v, alpha), best_name,
                          best.iterations, labels);
}

struct SweepPoint {
    double alpha = 0.0;
    std::optional<CccSolution> solution;
    std::string error;
};

/// 21 evenly spaced points on [0, 1]; 0.1 is one of them.
inline std::vector<double> default_alpha_grid() {
    std::vector<double> grid;
    for (int i = 0; i <= 20; ++i) grid.push_back(static_cast<double>(i) / 20.0);
    return grid;
}

/// Solves each grid point in order, warm-starting from the previous
/// solution. A failing point records its error and the sweep continues.
inline std::vector<SweepPoint> alpha_sweep(const Eigen::MatrixXd& f, const Eigen::MatrixXd& r,
                                           const std::vector<double>& grid, CccOptions opt = {},
                                           const std::vector<std::string>& labels = {}) {
    std::vector<SweepPoint> out;
    for (double alpha : grid) {
        SweepPoint pt;
        pt.alpha = alpha;
        try {
            pt.solution = ccc_solve(f, r, alpha, opt, labels);
            opt.warm_start = std::make_pair(pt.solution->w, pt.solution->v);
        } catch (const Error& e) {
            pt.error = e.what();
        }
        out.push_back(std::move(pt));
    }
    return out;
}

}  // namespace fcnet
