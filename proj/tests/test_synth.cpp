#include <gtest/gtest.h>

#include <cmath>

#include "fcnet/decompose.hpp"
#include "fcnet/json.hpp"
#include "fcnet/synth.hpp"
#include "test_support.hpp"

using namespace fcnet;

TEST(Generate, DeterministicInSeed) {
    const auto spec = markov_spec(50, 3, 0.8, 0.7, 1.0, 5);
    EXPECT_TRUE(generate(spec) == generate(spec));
    auto other = spec;
    other.seed = 6;
    EXPECT_FALSE(generate(spec) == generate(other));
}

TEST(Generate, ShapeAndLabels) {
    SyntheticSpec spec;
    spec.periods = 12;
    spec.forecast_horizon = 5;
    spec.response_horizon = 2;
    const auto panel = generate(spec);
    EXPECT_EQ(panel.periods(), 12);
    EXPECT_EQ(panel.forecast_horizon(), 5);
    EXPECT_EQ(panel.response_horizon(), 2);
    EXPECT_EQ(panel.period_labels().front(), "P0001");
    EXPECT_EQ(panel.period_labels().back(), "P0012");
    EXPECT_EQ(synthetic_labels(12345).front(), "P00001");
}

TEST(Generate, PlantedValuesFollowTheRecursion) {
    SyntheticSpec spec = markov_spec(20, 3, 0.5, 2.0, 1.0, 8);
    const auto panel = generate(spec);
    // Re-derive the latent draws in event order from the same stream.
    NormalStream rng(8);
    const auto events = event_sequence(3, 3);
    for (int t = 0; t < 20; ++t) {
        std::vector<double> v;
        for (std::size_t j = 0; j < events.size(); ++j) {
            double value = rng.normal();
            const auto& e = events[j];
            if (e.kind == EventKind::Forecast && e.lag < 3) {
                const auto parent = std::find(events.begin(), events.end(), EventId::forecast(e.lag + 1)) - events.begin();
                value += 0.5 * v[static_cast<std::size_t>(parent)];
            } else if (e.kind == EventKind::Response) {
                const auto parent = std::find(events.begin(), events.end(), EventId::forecast(e.lag)) - events.begin();
                value += 2.0 * v[static_cast<std::size_t>(parent)];
            }
            v.push_back(value);
        }
        for (std::size_t j = 0; j < events.size(); ++j) {
            EXPECT_DOUBLE_EQ(panel.column(events[j])(t), v[j]);
        }
    }
}

TEST(Generate, ColumnMeansNearZeroAndNonAdjacentPairsSeparate) {
    const auto spec = markov_spec(5000, 3, 0.8, 0.7, 1.0, 13);
    const auto panel = generate(spec);
    const Eigen::MatrixXd x = observation_matrix(panel, true);
    for (Eigen::Index j = 0; j < x.cols(); ++j) EXPECT_LT(std::abs(x.col(j).mean()), 0.1) << j;
    // Event order: F3 R3 F2 R2 F1 R1 S. R3 and F2 share only the parent F3.
    EXPECT_LT(std::abs(partial_correlation_via_regression(x, 1, 2)), 0.05);
    // F3 reaches F1 only through F2.
    EXPECT_LT(std::abs(partial_correlation_via_regression(x, 0, 4)), 0.05);
    // Adjacent planted pairs stay strongly dependent.
    EXPECT_GT(partial_correlation_via_regression(x, 0, 2), 0.3);
}

TEST(Generate, InverseBoxCoxRoundTrip) {
    SyntheticSpec spec = markov_spec(100, 2, 0.5, 0.5, 0.3, 14);
    spec.level = 3.0;
    spec.inverse_box_cox_gamma = 0.5;
    const auto transformed = generate(spec);
    EXPECT_GT(transformed.forecasts().minCoeff(), 0.0);
    spec.inverse_box_cox_gamma.reset();
    const auto latent = generate(spec);
    const auto back = box_cox_panel(transformed, 0.5);
    EXPECT_LE((back.forecasts() - latent.forecasts()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((back.responses() - latent.responses()).cwiseAbs().maxCoeff(), 1e-12);

    spec.level = -10.0;
    spec.inverse_box_cox_gamma = 0.5;
    EXPECT_THROW(generate(spec), Error);
}

TEST(Validate, RejectsBadSpecs) {
    auto kind = [](SyntheticSpec spec) {
        try {
            validate(spec);
        } catch (const Error& e) {
            return e.kind();
        }
        return ErrorKind::Io;  // sentinel: accepted
    };
    SyntheticSpec ok;
    EXPECT_EQ(kind(ok), ErrorKind::Io);

    auto backwards = ok;
    backwards.planted_edges = {{EventId::forecast(1), EventId::forecast(2), 0.5}};
    EXPECT_EQ(kind(backwards), ErrorKind::Spec);

    auto self = ok;
    self.planted_edges = {{EventId::forecast(2), EventId::forecast(2), 0.5}};
    EXPECT_EQ(kind(self), ErrorKind::Spec);

    auto unknown = ok;
    unknown.planted_edges = {{EventId::forecast(9), EventId::forecast(1), 0.5}};
    EXPECT_EQ(kind(unknown), ErrorKind::Spec);

    auto horizons = ok;
    horizons.response_horizon = 5;
    EXPECT_EQ(kind(horizons), ErrorKind::HorizonOrder);

    auto noise = ok;
    noise.noise_sd = 0.0;
    EXPECT_EQ(kind(noise), ErrorKind::Spec);

    auto periods = ok;
    periods.periods = 0;
    EXPECT_EQ(kind(periods), ErrorKind::Spec);
}

TEST(RecoveryReport, Conventions) {
    const auto spec = markov_spec(300, 3, 0.8, 0.7, 0.3, 21);
    const auto panel = generate(spec);

    InformationFlowNetwork empty;
    empty.events = event_sequence(panel);
    const auto none = recovery_report(spec, panel, empty);
    EXPECT_EQ(none.edge_recall, 0.0);
    EXPECT_EQ(none.edge_precision, 1.0);
    EXPECT_EQ(none.coefficient_rmse, 0.0);

    SyntheticSpec nothing = spec;
    nothing.planted_edges.clear();
    const auto vacuous = recovery_report(nothing, panel, empty);
    EXPECT_EQ(vacuous.edge_precision, 1.0);
    EXPECT_EQ(vacuous.edge_recall, 1.0);

    // Planted edges with exact OLS coefficients give perfect scores.
    const Eigen::MatrixXd z = prepare_observations(panel, {0.0, false, true, 0.0}, true);
    DirectedEdgeSet truth;
    const auto& events = empty.events;
    auto pos = [&](const EventId& e) { return static_cast<int>(std::find(events.begin(), events.end(), e) - events.begin()); };
    for (const auto& p : spec.planted_edges) truth.edges.push_back({pos(p.from), pos(p.to), 0.0});
    InformationFlowNetwork exact;
    exact.events = events;
    for (const auto& e : truth.edges) {
        const auto d = decompose_event(z, truth, e.to, events);
        exact.edges.push_back({e.from, e.to, d.terms.front().coefficient, 0.0});
    }
    const auto perfect = recovery_report(spec, panel, exact);
    EXPECT_EQ(perfect.edge_precision, 1.0);
    EXPECT_EQ(perfect.edge_recall, 1.0);
    EXPECT_LT(perfect.coefficient_rmse, 0.1);

    // Rescaling the standardized slope by sd(to)/sd(from) is the raw OLS
    // slope, computed here directly.
    const Eigen::MatrixXd raw = observation_matrix(panel, true);
    for (const auto& m : perfect.matches) {
        const Eigen::VectorXd a = raw.col(pos(m.from)).array() - raw.col(pos(m.from)).mean();
        const Eigen::VectorXd b = raw.col(pos(m.to)).array() - raw.col(pos(m.to)).mean();
        EXPECT_NEAR(m.recovered, a.dot(b) / a.squaredNorm(), 1e-10);
    }

    // A spurious edge costs precision only.
    exact.edges.push_back({0, 6, 0.1, 0.0});
    const auto spurious = recovery_report(spec, panel, exact);
    EXPECT_DOUBLE_EQ(spurious.edge_precision, 5.0 / 6.0);
    EXPECT_EQ(spurious.edge_recall, 1.0);
}

TEST(RecoveryReport, MarkovPanelRecovered) {
    const auto spec = markov_spec(500, 4, 0.8, 0.7, 0.3, 4242);
    const auto panel = generate(spec);
    const auto rep = recovery_report(spec, panel, decompose_network(panel, 0.45));
    EXPECT_EQ(rep.edge_precision, 1.0);
    EXPECT_EQ(rep.edge_recall, 1.0);
    EXPECT_LT(rep.coefficient_rmse, 0.05);
}

TEST(SpecJson, RoundTrip) {
    SyntheticSpec spec = markov_spec(40, 3, 0.8, 0.7, 0.3, 18446744073709551557ull);
    spec.level = 2.5;
    spec.inverse_box_cox_gamma = -0.5;
    const Json j = to_json(spec);
    EXPECT_EQ(j.at("rng").get<std::string>(), NormalStream::kAlgorithm);
    const auto back = synthetic_spec_from_json(Json::parse(j.dump()));
    EXPECT_EQ(back.seed, spec.seed);
    EXPECT_EQ(back.periods, 40);
    EXPECT_EQ(back.level, 2.5);
    EXPECT_EQ(back.inverse_box_cox_gamma, -0.5);
    ASSERT_EQ(back.planted_edges.size(), spec.planted_edges.size());
    EXPECT_EQ(to_json(back).dump(), j.dump());
}

TEST(SpecJson, Errors) {
    EXPECT_THROW(synthetic_spec_from_json(Json::parse(R"({"N":2,"M":1})")), Error);
    EXPECT_THROW(synthetic_spec_from_json(Json::parse(R"({"T":5,"N":2,"M":1,"rng":"pcg"})")), Error);
    EXPECT_THROW(
        synthetic_spec_from_json(Json::parse(R"({"T":5,"N":2,"M":1,"planted_edges":[{"from":"Q1","to":"F1","coefficient":1}]})")),
        Error);
    EXPECT_THROW(
        synthetic_spec_from_json(Json::parse(R"({"T":5,"N":2,"M":1,"planted_edges":[{"from":"F1","to":"F2","coefficient":1}]})")),
        Error);
}
