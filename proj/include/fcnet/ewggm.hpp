#pragma once

// Expanding-window GGM: one graphical lasso per prefix of the event order.
// Window k only ever sees the first k events, so the partial correlation
// between events i < k is conditioned on the past (and the events between
// them), never on the future.

#include <Eigen/Dense>

#include <future>
#include <string>
#include <utility>
#include <vector>

#include "fcnet/error.hpp"
#include "fcnet/glasso.hpp"
#include "fcnet/panel.hpp"

namespace fcnet {

/// Time-respecting partial correlations. entries(i, k) for i < k is the
/// partial correlation of events i and k from window k; (k, i) mirrors it
/// and the diagonal is 1.
struct InformationFlowMatrix {
    Eigen::MatrixXd entries;
    double lambda = 0.0;
    EventSequence events;

    int size() const { return static_cast<int>(entries.rows()); }
};

struct DirectedEdge {
    int from = 0;
    int to = 0;
    double partial_correlation = 0.0;

    friend bool operator==(const DirectedEdge&, const DirectedEdge&) = default;
};

/// Edges point from earlier to later events (from < to), sorted by
/// (to, from).
struct DirectedEdgeSet {
    std::vector<DirectedEdge> edges;

    std::size_t size() const { return edges.size(); }
    bool contains(int from, int to) const {
        for (const auto& e : edges) {
            if (e.from == from && e.to == to) return true;
        }
        return false;
    }
};

struct ExpandingWindowOptions {
    GlassoOptions glasso;
    /// Solve windows on separate threads. Windows share nothing, so the
    /// result is identical either way.
    bool parallel = false;
};

namespace detail {

/// Partial correlations of the last variable of window k (size k) against
/// all earlier ones.
inline Eigen::VectorXd solve_window(const Eigen::MatrixXd& x, Eigen::Index k, double lambda,
                                    const GlassoOptions& opt) {
    try {
        const auto cov = empirical_covariance(x.leftCols(k));
        const auto theta = graphical_lasso(cov, lambda, opt);
        return partial_correlations(theta).entries.col(k - 1).head(k - 1);
    } catch (const ConvergenceError& e) {
        throw ConvergenceError("window " + std::to_string(k) + ": " + e.what(), e.residual());
    } catch (const Error& e) {
        throw Error(e.kind(), "window " + std::to_string(k) + ": " + e.what());
    }
}

}  // namespace detail

/// x: T×n observations in event order, standardized upstream.
inline InformationFlowMatrix expanding_window(const Eigen::MatrixXd& x, double lambda, EventSequence events = {},
                                              const ExpandingWindowOptions& opt = {}) {
    const auto n = x.cols();
    if (n < 2) throw Error(ErrorKind::Shape, "expanding window needs at least 2 events");
    if (!events.empty() && static_cast<Eigen::Index>(events.size()) != n) {
        throw Error(ErrorKind::Shape, "event list does not match the observation matrix");
    }

    std::vector<Eigen::VectorXd> columns(static_cast<std::size_t>(n));
    if (opt.parallel) {
        std::vector<std::future<Eigen::VectorXd>> jobs;
        for (Eigen::Index k = 2; k <= n; ++k) {
            jobs.push_back(std::async(std::launch::async, [&x, k, lambda, &opt] {
                return detail::solve_window(x, k, lambda, opt.glasso);
            }));
        }
        // get() in window order so the first failing window is reported.
        for (Eigen::Index k = 2; k <= n; ++k) columns[static_cast<std::size_t>(k - 1)] = jobs[static_cast<std::size_t>(k - 2)].get();
    } else {
        for (Eigen::Index k = 2; k <= n; ++k) {
            columns[static_cast<std::size_t>(k - 1)] = detail::solve_window(x, k, lambda, opt.glasso);
        }
    }

    InformationFlowMatrix out{Eigen::MatrixXd::Identity(n, n), lambda, std::move(events)};
    for (Eigen::Index k = 1; k < n; ++k) {
        const auto& col = columns[static_cast<std::size_t>(k)];
        for (Eigen::Index i = 0; i < k; ++i) {
            out.entries(i, k) = col(i);
            out.entries(k, i) = col(i);
        }
    }
    return out;
}

/// Classical single-window GGM over all events, for comparison with the
/// expanding-window estimate.
inline PartialCorrelationMatrix full_window_ggm(const Eigen::MatrixXd& x, double lambda,
                                                const GlassoOptions& opt = {}) {
    return partial_correlations(graphical_lasso(empirical_covariance(x), lambda, opt));
}

/// One edge per nonzero time-respecting entry. The solver emits exact zeros,
/// so no threshold is applied.
inline DirectedEdgeSet select_edges(const InformationFlowMatrix& flow) {
    DirectedEdgeSet out;
    const auto n = flow.entries.rows();
    for (Eigen::Index k = 1; k < n; ++k) {
        for (Eigen::Index i = 0; i < k; ++i) {
            const double c = flow.entries(i, k);
            if (c != 0.0) out.edges.push_back({static_cast<int>(i), static_cast<int>(k), c});
        }
    }
    return out;
}

}  // namespace fcnet
