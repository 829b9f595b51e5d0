#pragma once

// End-to-end analyses from a raw panel to JSON, shared by the CLI and the
// HTTP service so both produce identical payloads.

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

#include "fcnet/ccc.hpp"
#include "fcnet/decompose.hpp"
#include "fcnet/json.hpp"
#include "fcnet/preprocess.hpp"

namespace fcnet {

inline InformationFlowNetwork network_analysis(const DialoguePanel& panel, double lambda,
                                               const TransformConfig& transform,
                                               const ExpandingWindowOptions& opt = {}) {
    TransformConfig t = transform;
    t.standardize = true;
    const Eigen::MatrixXd x = prepare_observations(panel, t, true);
    return decompose_network(x, event_sequence(panel), lambda, opt);
}

inline Json network_payload(const DialoguePanel& panel, double lambda, const TransformConfig& transform,
                            const ExpandingWindowOptions& opt = {}) {
    return network_json(network_analysis(panel, lambda, transform, opt), transform);
}

/// Forecast and response blocks, each column standardized. Box-Cox is
/// applied first only when `gamma` is given.
inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd> ccc_blocks(const DialoguePanel& panel,
                                                              std::optional<double> gamma, double shift = 0.0) {
    const DialoguePanel p = gamma ? box_cox_panel(panel, *gamma, shift) : panel;
    std::vector<std::string> fnames;
    std::vector<std::string> rnames;
    for (int k = 1; k <= p.forecast_horizon(); ++k) fnames.push_back(to_string(EventId::forecast(k)));
    for (int k = 1; k <= p.response_horizon(); ++k) rnames.push_back(to_string(EventId::response(k)));
    return {standardize_columns(p.forecasts(), fnames).values, standardize_columns(p.responses(), rnames).values};
}

inline Json ccc_payload(const DialoguePanel& panel, double alpha, std::optional<double> gamma, double shift,
                        std::uint64_t seed) {
    const auto [f, r] = ccc_blocks(panel, gamma, shift);
    CccOptions opt;
    opt.seed = seed;
    Json out = to_json(ccc_solve(f, r, alpha, opt, panel.period_labels()));
    out["transform"] = gamma ? Json{{"box_cox", true}, {"gamma", *gamma}, {"shift", shift}, {"standardized", true}}
                             : Json{{"box_cox", false}, {"standardized", true}};
    return out;
}

inline Json normality_payload(const DialoguePanel& panel, const TransformConfig& transform) {
    return to_json(normality_report(panel, transform));
}

}  // namespace fcnet
