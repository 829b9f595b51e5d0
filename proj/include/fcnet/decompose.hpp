#pragma once

// Splits every event into contributions propagated along its incoming edges
// plus new information, by OLS restricted to the selected sources.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "fcnet/error.hpp"
#include "fcnet/ewggm.hpp"
#include "fcnet/panel.hpp"
#include "fcnet/preprocess.hpp"

namespace fcnet {

struct DecompositionTerm {
    EventId source;
    int source_index = 0;
    double coefficient = 0.0;
};

struct EventDecomposition {
    EventId event;
    int index = 0;
    /// Most recent source first.
    std::vector<DecompositionTerm> terms;
    /// 1 - sum of coefficients; may go negative.
    double epsilon_share = 1.0;
    /// 1 - sum of |coefficients|.
    double epsilon_share_abs = 1.0;
    double r_squared = 0.0;
    /// Set when a coefficient is negative or they sum past 1, i.e. when the
    /// coefficients cannot be read as information percentages.
    bool flagged = false;
};

struct NetworkEdge {
    int from = 0;
    int to = 0;
    double coefficient = 0.0;
    double partial_correlation = 0.0;
};

struct InformationFlowNetwork {
    EventSequence events;
    std::vector<NetworkEdge> edges;
    /// One per event after the first, in event order.
    std::vector<EventDecomposition> decompositions;
    double lambda = 0.0;
    double markov_score = 1.0;
    InformationFlowMatrix flow;
};

/// "F_3", "R_1", "S".
inline std::string subscript_name(const EventId& e) {
    if (e.kind == EventKind::Shipment) return "S";
    return std::string(1, kind_letter(e.kind)) + "_" + std::to_string(e.lag);
}

namespace detail {

inline std::string format_coefficient(double c) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", std::abs(c));
    std::string s(buf);
    while (!s.empty() && s.back() == '0') s.pop_back();
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s;
}

}  // namespace detail

/// Display form, e.g. "F_1=0.5F_2+0.4F_4+ε".
inline std::string equation_string(const EventDecomposition& d) {
    std::string out = subscript_name(d.event) + "=";
    bool first = true;
    for (const auto& t : d.terms) {
        if (t.coefficient < 0.0) {
            out += "-";
        } else if (!first) {
            out += "+";
        }
        out += detail::format_coefficient(t.coefficient) + subscript_name(t.source);
        first = false;
    }
    out += first ? "ε" : "+ε";
    return out;
}

/// Regresses column k on the columns with an edge into k (no intercept; the
/// columns are zero-mean).
inline EventDecomposition decompose_event(const Eigen::MatrixXd& x, const DirectedEdgeSet& edges, int k,
                                          const EventSequence& events) {
    if (k < 0 || k >= x.cols() || static_cast<Eigen::Index>(events.size()) != x.cols()) {
        throw Error(ErrorKind::Shape, "event index out of range");
    }
    EventDecomposition d;
    d.event = events[static_cast<std::size_t>(k)];
    d.index = k;

    std::vector<int> sources;
    for (const auto& e : edges.edges) {
        if (e.to == k) sources.push_back(e.from);
    }
    std::sort(sources.begin(), sources.end(), std::greater<>());

    const Eigen::VectorXd y = x.col(k);
    const double tss = y.squaredNorm();
    if (sources.empty()) {
        d.r_squared = 0.0;
        return d;
    }

    Eigen::MatrixXd z(x.rows(), static_cast<Eigen::Index>(sources.size()));
    for (std::size_t c = 0; c < sources.size(); ++c) z.col(static_cast<Eigen::Index>(c)) = x.col(sources[c]);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(z);
    qr.setThreshold(1e-10);
    if (qr.rank() < z.cols()) {
        std::string names;
        for (int s : sources) names += (names.empty() ? "" : ", ") + to_string(events[static_cast<std::size_t>(s)]);
        throw Error(ErrorKind::Rank, "collinear predictors for " + to_string(d.event) + ": {" + names + "}");
    }
    const Eigen::VectorXd coef = qr.solve(y);
    const double rss = (y - z * coef).squaredNorm();

    double sum = 0.0;
    double sum_abs = 0.0;
    for (std::size_t c = 0; c < sources.size(); ++c) {
        const double b = coef(static_cast<Eigen::Index>(c));
        d.terms.push_back({events[static_cast<std::size_t>(sources[c])], sources[c], b});
        sum += b;
        sum_abs += std::abs(b);
        if (b < 0.0) d.flagged = true;
    }
    if (sum > 1.0) d.flagged = true;
    d.epsilon_share = 1.0 - sum;
    d.epsilon_share_abs = 1.0 - sum_abs;
    d.r_squared = tss > 0.0 ? std::clamp(1.0 - rss / tss, 0.0, 1.0) : 0.0;
    return d;
}

/// Index of the latest event of `kind` strictly before position k, or -1.
inline int latest_before(const EventSequence& events, int k, EventKind kind) {
    for (int i = k - 1; i >= 0; --i) {
        if (events[static_cast<std::size_t>(i)].kind == kind) return i;
    }
    return -1;
}

/// Share of absolute coefficient mass on edges from each target's most
/// recent preceding forecast and response. 1 means the past reaches every
/// event only through its immediate predecessors.
inline double markov_score(const EventSequence& events, const std::vector<NetworkEdge>& edges) {
    double total = 0.0;
    double local = 0.0;
    for (const auto& e : edges) {
        const double mass = std::abs(e.coefficient);
        total += mass;
        if (e.from == latest_before(events, e.to, EventKind::Forecast) ||
            e.from == latest_before(events, e.to, EventKind::Response)) {
            local += mass;
        }
    }
    return total > 0.0 ? local / total : 1.0;
}

inline double markov_score(const InformationFlowNetwork& network) {
    return markov_score(network.events, network.edges);
}

/// x must be standardized and in event order.
inline InformationFlowNetwork decompose_network(const Eigen::MatrixXd& x, const EventSequence& events, double lambda,
                                                const ExpandingWindowOptions& opt = {}) {
    InformationFlowNetwork net;
    net.events = events;
    net.lambda = lambda;
    net.flow = expanding_window(x, lambda, events, opt);
    const auto edges = select_edges(net.flow);

    for (int k = 1; k < static_cast<int>(events.size()); ++k) {
        net.decompositions.push_back(decompose_event(x, edges, k, events));
    }
    for (const auto& e : edges.edges) {
        const auto& d = net.decompositions[static_cast<std::size_t>(e.to - 1)];
        double coef = 0.0;
        for (const auto& t : d.terms) {
            if (t.source_index == e.from) coef = t.coefficient;
        }
        net.edges.push_back({e.from, e.to, coef, e.partial_correlation});
    }
    net.markov_score = markov_score(net);
    return net;
}

/// Standardizes the panel's events (shipment included) and decomposes. Any
/// Box-Cox transform is expected to have been applied already.
inline InformationFlowNetwork decompose_network(const DialoguePanel& panel, double lambda,
                                                const ExpandingWindowOptions& opt = {}) {
    const auto events = event_sequence(panel);
    const Eigen::MatrixXd x = prepare_observations(panel, {0.0, false, true, 0.0}, true);
    return decompose_network(x, events, lambda, opt);
}

}  // namespace fcnet
