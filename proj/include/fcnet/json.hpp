#pragma once

// JSON forms of the analysis results. Keys keep insertion order so a given
// result always serializes to the same bytes.

#include <Eigen/Dense>
#include <json.hpp>

#include <string>
#include <vector>

#include "fcnet/ccc.hpp"
#include "fcnet/decompose.hpp"
#include "fcnet/glasso.hpp"
#include "fcnet/preprocess.hpp"
#include "fcnet/random.hpp"
#include "fcnet/synth.hpp"

namespace fcnet {

using Json = nlohmann::ordered_json;

inline Json vector_json(const Eigen::VectorXd& x) {
    Json out = Json::array();
    for (Eigen::Index i = 0; i < x.size(); ++i) out.push_back(x(i));
    return out;
}

/// {dim, entries} with entries in row-major order.
inline Json matrix_json(const Eigen::MatrixXd& m) {
    Json entries = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) entries.push_back(m(i, j));
    }
    return Json{{"dim", m.rows()}, {"entries", std::move(entries)}};
}

inline Eigen::MatrixXd matrix_from_json(const Json& j) {
    const auto dim = j.at("dim").get<Eigen::Index>();
    const auto& entries = j.at("entries");
    if (static_cast<Eigen::Index>(entries.size()) != dim * dim) throw Error(ErrorKind::Shape, "matrix entry count mismatch");
    Eigen::MatrixXd m(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
        for (Eigen::Index k = 0; k < dim; ++k) m(i, k) = entries[static_cast<std::size_t>(i * dim + k)].get<double>();
    }
    return m;
}

inline const char* kind_name(EventKind kind) {
    switch (kind) {
        case EventKind::Forecast: return "forecast";
        case EventKind::Response: return "response";
        case EventKind::Shipment: return "shipment";
    }
    return "unknown";
}

inline Json to_json(const NormalityReport& report) {
    Json out = Json::array();
    for (const auto& e : report.entries) {
        out.push_back(Json{{"event", to_string(e.event)},
                           {"ks", e.ks_statistic},
                           {"p", e.p_value},
                           {"mean", e.mean},
                           {"sd", e.std_dev}});
    }
    return out;
}

inline Json to_json(const EventDecomposition& d) {
    Json terms = Json::array();
    for (const auto& t : d.terms) terms.push_back(Json{{"source", to_string(t.source)}, {"coefficient", t.coefficient}});
    return Json{{"event", to_string(d.event)},
                {"terms", std::move(terms)},
                {"epsilon_share", d.epsilon_share},
                {"epsilon_share_abs", d.epsilon_share_abs},
                {"r_squared", d.r_squared},
                {"flagged", d.flagged},
                {"equation", equation_string(d)}};
}

/// Network payload consumed by the UI. Layout hints: x_time is the event's
/// position on the time-line in [0, 1]; forecasts sit on the top
/// hemisphere, responses on the bottom, the shipment at the right end.
inline Json network_json(const InformationFlowNetwork& net, const TransformConfig& transform) {
    Json events = Json::array();
    const auto n = net.events.size();
    for (std::size_t i = 0; i < n; ++i) {
        const auto& e = net.events[i];
        const char* hemisphere = e.kind == EventKind::Forecast   ? "top"
                                 : e.kind == EventKind::Response ? "bottom"
                                                                 : "right";
        events.push_back(Json{{"id", to_string(e)},
                              {"kind", kind_name(e.kind)},
                              {"lag", e.lag},
                              {"x_time", n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 0.0},
                              {"hemisphere", hemisphere}});
    }
    Json edges = Json::array();
    for (const auto& e : net.edges) {
        edges.push_back(Json{{"from", to_string(net.events[static_cast<std::size_t>(e.from)])},
                             {"to", to_string(net.events[static_cast<std::size_t>(e.to)])},
                             {"coefficient", e.coefficient},
                             {"partial_correlation", e.partial_correlation},
                             {"sign", e.coefficient < 0.0 ? "negative" : "positive"}});
    }
    Json decompositions = Json::array();
    for (const auto& d : net.decompositions) decompositions.push_back(to_json(d));
    return Json{{"events", std::move(events)},
                {"edges", std::move(edges)},
                {"decompositions", std::move(decompositions)},
                {"markov_score", net.markov_score},
                {"lambda", net.lambda},
                {"gamma", transform.gamma},
                {"metadata",
                 {{"box_cox", transform.box_cox},
                  {"shift", transform.shift},
                  {"standardization", "zero mean, unit sd (T-1 denominator)"},
                  {"penalty", "off-diagonal l1"},
                  {"markov_score", "invented summary: share of |coefficient| mass on most-recent F/R sources"}}}};
}

inline Json to_json(const CccSolution& s) {
    Json periods = Json::array();
    for (const auto& p : s.scores) {
        periods.push_back(Json{{"label", p.label}, {"f_score", p.f_score}, {"r_score", p.r_score}, {"rank", p.rank}});
    }
    return Json{{"alpha", s.alpha},
                {"w", vector_json(s.w)},
                {"v", vector_json(s.v)},
                {"f_star", vector_json(s.f_star)},
                {"r_star", vector_json(s.r_star)},
                {"objective", s.objective},
                {"warn_overfit", s.warn_overfit},
                {"periods", std::move(periods)},
                {"start", s.start}};
}

inline Json to_json(const SyntheticSpec& spec) {
    Json edges = Json::array();
    for (const auto& e : spec.planted_edges) {
        edges.push_back(Json{{"from", to_string(e.from)}, {"to", to_string(e.to)}, {"coefficient", e.coefficient}});
    }
    Json out{{"T", spec.periods},
             {"N", spec.forecast_horizon},
             {"M", spec.response_horizon},
             {"planted_edges", std::move(edges)},
             {"noise_sd", spec.noise_sd},
             {"seed", spec.seed},
             {"level", spec.level},
             {"rng", NormalStream::kAlgorithm}};
    if (spec.inverse_box_cox_gamma) out["inverse_box_cox_gamma"] = *spec.inverse_box_cox_gamma;
    return out;
}

inline SyntheticSpec synthetic_spec_from_json(const Json& j) {
    try {
        SyntheticSpec spec;
        spec.periods = j.at("T").get<int>();
        spec.forecast_horizon = j.at("N").get<int>();
        spec.response_horizon = j.at("M").get<int>();
        spec.noise_sd = j.value("noise_sd", 1.0);
        spec.seed = j.value("seed", std::uint64_t{1});
        spec.level = j.value("level", 0.0);
        if (j.contains("inverse_box_cox_gamma")) spec.inverse_box_cox_gamma = j.at("inverse_box_cox_gamma").get<double>();
        if (j.contains("rng") && j.at("rng").get<std::string>() != NormalStream::kAlgorithm) {
            throw Error(ErrorKind::Spec, "unsupported rng '" + j.at("rng").get<std::string>() + "'");
        }
        for (const auto& e : j.value("planted_edges", Json::array())) {
            const auto from = parse_event_id(e.at("from").get<std::string>());
            const auto to = parse_event_id(e.at("to").get<std::string>());
            if (!from || !to) throw Error(ErrorKind::Spec, "bad event id in planted edge");
            spec.planted_edges.push_back({*from, *to, e.at("coefficient").get<double>()});
        }
        validate(spec);
        return spec;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Spec, std::string("synthetic spec: ") + e.what());
    }
}

inline Json to_json(const RecoveryReport& r) {
    Json matches = Json::array();
    for (const auto& m : r.matches) {
        matches.push_back(Json{{"from", to_string(m.from)}, {"to", to_string(m.to)}, {"planted", m.planted},
                               {"recovered", m.recovered}});
    }
    return Json{{"edge_precision", r.edge_precision},
                {"edge_recall", r.edge_recall},
                {"coefficient_rmse", r.coefficient_rmse},
                {"true_positives", r.true_positives},
                {"recovered", r.recovered},
                {"planted", r.planted},
                {"matches", matches}};
}

inline Json error_json(int code, const std::string& message, const std::string& detail = {}) {
    return Json{{"code", code}, {"message", message}, {"detail", detail}};
}

}  // namespace fcnet
