#pragma once

// Synthetic rolling-horizon panels with planted linear information flow,
// used as ground truth for recovery tests.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fcnet/decompose.hpp"
#include "fcnet/error.hpp"
#include "fcnet/panel.hpp"
#include "fcnet/preprocess.hpp"
#include "fcnet/random.hpp"

namespace fcnet {

struct PlantedEdge {
    EventId from;
    EventId to;
    double coefficient = 0.0;
};

struct SyntheticSpec {
    int periods = 100;
    int forecast_horizon = 4;
    int response_horizon = 4;
    std::vector<PlantedEdge> planted_edges;
    double noise_sd = 1.0;
    std::uint64_t seed = 1;
    /// Constant added to every latent value.
    double level = 0.0;
    /// When set, each value is mapped through the inverse Box-Cox transform
    /// with this exponent, so Box-Cox with the same exponent recovers the
    /// Gaussian latent panel.
    std::optional<double> inverse_box_cox_gamma;
};

/// F_i = f * F_{i+1} and R_i = r * F_i for every lag: the Markov chain used
/// throughout the recovery tests.
inline SyntheticSpec markov_spec(int periods, int horizon, double forecast_coef, double response_coef,
                                 double noise_sd, std::uint64_t seed) {
    SyntheticSpec spec;
    spec.periods = periods;
    spec.forecast_horizon = horizon;
    spec.response_horizon = horizon;
    spec.noise_sd = noise_sd;
    spec.seed = seed;
    for (int k = horizon; k >= 1; --k) {
        if (k < horizon) spec.planted_edges.push_back({EventId::forecast(k + 1), EventId::forecast(k), forecast_coef});
        spec.planted_edges.push_back({EventId::forecast(k), EventId::response(k), response_coef});
    }
    return spec;
}

inline double inverse_box_cox(double z, double gamma) {
    if (gamma == 0.0) return std::exp(z);
    const double base = gamma * z + 1.0;
    if (!(base > 0.0)) throw Error(ErrorKind::Domain, "latent value outside the inverse Box-Cox range; raise `level`");
    return std::pow(base, 1.0 / gamma);
}

/// Checks dimensions, event membership and time order of the planted edges.
inline void validate(const SyntheticSpec& spec) {
    if (spec.periods < 1 || spec.forecast_horizon < 1 || spec.response_horizon < 1) {
        throw Error(ErrorKind::Spec, "periods and horizons must be positive");
    }
    if (spec.response_horizon > spec.forecast_horizon) {
        throw Error(ErrorKind::HorizonOrder, "response horizon exceeds forecast horizon");
    }
    if (!(spec.noise_sd > 0.0) || !std::isfinite(spec.noise_sd)) throw Error(ErrorKind::Spec, "noise_sd must be positive");
    const auto events = event_sequence(spec.forecast_horizon, spec.response_horizon);
    auto position = [&](const EventId& e) {
        auto it = std::find(events.begin(), events.end(), e);
        if (it == events.end()) throw Error(ErrorKind::Spec, "planted edge names unknown event " + to_string(e));
        return it - events.begin();
    };
    for (const auto& e : spec.planted_edges) {
        if (position(e.from) >= position(e.to)) {
            throw Error(ErrorKind::Spec,
                        "planted edge " + to_string(e.from) + "->" + to_string(e.to) + " is not time-respecting");
        }
        if (!std::isfinite(e.coefficient)) throw Error(ErrorKind::Spec, "planted coefficient must be finite");
    }
}

/// Period labels P0001, P0002, ... whose lexicographic order is the numeric one.
inline std::vector<std::string> synthetic_labels(int periods) {
    const int width = std::max(4, static_cast<int>(std::to_string(periods).size()));
    std::vector<std::string> labels;
    for (int i = 1; i <= periods; ++i) {
        std::string num = std::to_string(i);
        labels.push_back("P" + std::string(static_cast<std::size_t>(width) - num.size(), '0') + num);
    }
    return labels;
}

/// One forward pass per period in event order; events without planted
/// sources are pure noise. Deterministic in the seed.
inline DialoguePanel generate(const SyntheticSpec& spec) {
    validate(spec);
    const auto events = event_sequence(spec.forecast_horizon, spec.response_horizon);
    const auto n = events.size();
    std::map<EventId, std::size_t> pos;
    for (std::size_t i = 0; i < n; ++i) pos[events[i]] = i;

    std::vector<std::vector<std::pair<std::size_t, double>>> parents(n);
    for (const auto& e : spec.planted_edges) parents[pos[e.to]].push_back({pos[e.from], e.coefficient});

    NormalStream rng(spec.seed);
    Eigen::MatrixXd latent(spec.periods, static_cast<Eigen::Index>(n));
    for (int t = 0; t < spec.periods; ++t) {
        for (std::size_t j = 0; j < n; ++j) {
            double value = spec.noise_sd * rng.normal();
            for (const auto& [from, coef] : parents[j]) value += coef * latent(t, static_cast<Eigen::Index>(from));
            latent(t, static_cast<Eigen::Index>(j)) = value;
        }
    }

    Eigen::MatrixXd f(spec.periods, spec.forecast_horizon);
    Eigen::MatrixXd r(spec.periods, spec.response_horizon);
    Eigen::VectorXd s(spec.periods);
    for (int t = 0; t < spec.periods; ++t) {
        for (std::size_t j = 0; j < n; ++j) {
            double value = latent(t, static_cast<Eigen::Index>(j)) + spec.level;
            if (spec.inverse_box_cox_gamma) value = inverse_box_cox(value, *spec.inverse_box_cox_gamma);
            const auto& e = events[j];
            switch (e.kind) {
                case EventKind::Forecast: f(t, e.lag - 1) = value; break;
                case EventKind::Response: r(t, e.lag - 1) = value; break;
                case EventKind::Shipment: s(t) = value; break;
            }
        }
    }
    return DialoguePanel(std::move(f), std::move(r), std::move(s), synthetic_labels(spec.periods));
}

struct MatchedCoefficient {
    EventId from;
    EventId to;
    double planted = 0.0;
    /// Fitted coefficient rescaled to the generator's units.
    double recovered = 0.0;
};

struct RecoveryReport {
    double edge_precision = 1.0;
    double edge_recall = 1.0;
    double coefficient_rmse = 0.0;
    int true_positives = 0;
    int recovered = 0;
    int planted = 0;
    std::vector<MatchedCoefficient> matches;
};

/// Edge-set precision and recall of a recovered network against the planted
/// edges, and RMSE over the matched coefficients. Empty sets count as
/// perfectly precise (and, when nothing was planted, perfectly recalled).
///
/// Network coefficients are fitted on standardized columns; each matched one
/// is rescaled by sd(to)/sd(from) of the generated panel (on the latent
/// scale) so it compares with the planted coefficient in the generator's
/// units.
inline RecoveryReport recovery_report(const SyntheticSpec& spec, const DialoguePanel& panel,
                                      const InformationFlowNetwork& network) {
    const DialoguePanel latent =
        spec.inverse_box_cox_gamma ? box_cox_panel(panel, *spec.inverse_box_cox_gamma) : panel;
    const Eigen::MatrixXd x = observation_matrix(latent, true);
    const auto events = event_sequence(latent);
    auto sd_of = [&](const EventId& e) {
        const auto j = std::find(events.begin(), events.end(), e) - events.begin();
        if (j >= x.cols()) throw Error(ErrorKind::Shape, "network event " + to_string(e) + " is not in the panel");
        const Eigen::VectorXd c = x.col(j).array() - x.col(j).mean();
        return std::sqrt(c.squaredNorm() / static_cast<double>(std::max<Eigen::Index>(x.rows() - 1, 1)));
    };

    RecoveryReport rep;
    rep.planted = static_cast<int>(spec.planted_edges.size());
    rep.recovered = static_cast<int>(network.edges.size());
    double sq = 0.0;
    for (const auto& p : spec.planted_edges) {
        for (const auto& e : network.edges) {
            const auto& from = network.events[static_cast<std::size_t>(e.from)];
            const auto& to = network.events[static_cast<std::size_t>(e.to)];
            if (from == p.from && to == p.to) {
                ++rep.true_positives;
                const double raw = e.coefficient * sd_of(to) / sd_of(from);
                sq += (raw - p.coefficient) * (raw - p.coefficient);
                rep.matches.push_back({from, to, p.coefficient, raw});
            }
        }
    }
    if (rep.recovered > 0) rep.edge_precision = static_cast<double>(rep.true_positives) / rep.recovered;
    if (rep.planted > 0) rep.edge_recall = static_cast<double>(rep.true_positives) / rep.planted;
    if (rep.true_positives > 0) rep.coefficient_rmse = std::sqrt(sq / rep.true_positives);
    return rep;
}

}  // namespace fcnet
