#include <gtest/gtest.h>

#include <cmath>

#include "fcnet/decompose.hpp"
#include "fcnet/json.hpp"
#include "fcnet/synth.hpp"
#include "test_support.hpp"

using namespace fcnet;

namespace {

int count_response_to_forecast(const InformationFlowNetwork& net) {
    int n = 0;
    for (const auto& e : net.edges) {
        n += net.events[static_cast<std::size_t>(e.from)].kind == EventKind::Response &&
             net.events[static_cast<std::size_t>(e.to)].kind == EventKind::Forecast;
    }
    return n;
}

DirectedEdgeSet all_edges(int n) {
    DirectedEdgeSet s;
    for (int k = 1; k < n; ++k) {
        for (int i = 0; i < k; ++i) s.edges.push_back({i, k, 0.0});
    }
    return s;
}

}  // namespace

TEST(EquationString, MostRecentSourceFirst) {
    EventDecomposition d;
    d.event = EventId::forecast(1);
    d.terms = {{EventId::forecast(2), 2, 0.5}, {EventId::forecast(4), 0, 0.4}};
    EXPECT_EQ(equation_string(d), "F_1=0.5F_2+0.4F_4+ε");

    d.terms = {{EventId::response(2), 3, -0.25}};
    EXPECT_EQ(equation_string(d), "F_1=-0.25R_2+ε");

    d.terms.clear();
    EXPECT_EQ(equation_string(d), "F_1=ε");
    d.event = EventId::shipment();
    d.terms = {{EventId::response(1), 5, 1.0}};
    EXPECT_EQ(equation_string(d), "S=1R_1+ε");
}

TEST(DecomposeEvent, MatchesNormalEquations) {
    const Eigen::MatrixXd x = fixtures::standardize(fixtures::correlated_matrix(200, 5, 3));
    const auto events = event_sequence(2, 2);
    const auto edges = all_edges(5);
    for (int k = 1; k < 5; ++k) {
        const auto d = decompose_event(x, edges, k, events);
        // Sources k-1, ..., 0 (most recent first).
        Eigen::MatrixXd z(200, k);
        for (int c = 0; c < k; ++c) z.col(c) = x.col(k - 1 - c);
        const Eigen::VectorXd beta = (z.transpose() * z).ldlt().solve(z.transpose() * x.col(k));
        ASSERT_EQ(static_cast<int>(d.terms.size()), k);
        double sum = 0.0;
        for (int c = 0; c < k; ++c) {
            EXPECT_EQ(d.terms[static_cast<std::size_t>(c)].source_index, k - 1 - c);
            EXPECT_NEAR(d.terms[static_cast<std::size_t>(c)].coefficient, beta(c), 1e-10);
            sum += beta(c);
        }
        EXPECT_NEAR(d.epsilon_share, 1.0 - sum, 1e-10);
        const double rss = (x.col(k) - z * beta).squaredNorm();
        EXPECT_NEAR(d.r_squared, 1.0 - rss / x.col(k).squaredNorm(), 1e-10);
    }
}

TEST(DecomposeEvent, SharesAndFlag) {
    NormalStream rng(5);
    Eigen::MatrixXd x(300, 3);
    for (Eigen::Index t = 0; t < 300; ++t) {
        x(t, 0) = rng.normal();
        x(t, 1) = rng.normal();
        x(t, 2) = 0.7 * x(t, 0) - 0.5 * x(t, 1) + 0.3 * rng.normal();
    }
    const auto z = fixtures::standardize(x);
    const auto d = decompose_event(z, all_edges(3), 2, event_sequence(1, 1));
    ASSERT_EQ(d.terms.size(), 2u);
    EXPECT_LT(d.terms[0].coefficient, 0.0);
    EXPECT_TRUE(d.flagged);
    const double sum = d.terms[0].coefficient + d.terms[1].coefficient;
    const double sum_abs = std::abs(d.terms[0].coefficient) + std::abs(d.terms[1].coefficient);
    EXPECT_DOUBLE_EQ(d.epsilon_share, 1.0 - sum);
    EXPECT_DOUBLE_EQ(d.epsilon_share_abs, 1.0 - sum_abs);
    EXPECT_NEAR(d.r_squared, 0.74 / 0.83, 0.03);  // explained 0.49 + 0.25 of 0.83
}

TEST(DecomposeEvent, NoSourcesIsPureInnovation) {
    const Eigen::MatrixXd x = fixtures::standardize(fixtures::gaussian_matrix(50, 3, 8));
    const auto d = decompose_event(x, DirectedEdgeSet{}, 2, event_sequence(1, 1));
    EXPECT_TRUE(d.terms.empty());
    EXPECT_EQ(d.epsilon_share, 1.0);
    EXPECT_EQ(d.epsilon_share_abs, 1.0);
    EXPECT_EQ(d.r_squared, 0.0);
    EXPECT_FALSE(d.flagged);
}

TEST(DecomposeEvent, IdenticalSourcesAreRankError) {
    Eigen::MatrixXd x = fixtures::standardize(fixtures::gaussian_matrix(40, 3, 9));
    x.col(1) = x.col(0);
    try {
        decompose_event(x, all_edges(3), 2, event_sequence(1, 1));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Rank);
        const std::string what = e.what();
        EXPECT_NE(what.find("F1"), std::string::npos) << what;
        EXPECT_NE(what.find("R1"), std::string::npos) << what;
    }
}

TEST(DecomposeNetwork, RecoversPlantedForecastAndResponseSources) {
    // F_i = 0.6 F_{i+1} + 0.3 R_{i+1} + noise.
    SyntheticSpec spec;
    spec.periods = 500;
    spec.forecast_horizon = 4;
    spec.response_horizon = 4;
    spec.seed = 77;
    for (int k = 3; k >= 1; --k) {
        spec.planted_edges.push_back({EventId::forecast(k + 1), EventId::forecast(k), 0.6});
        spec.planted_edges.push_back({EventId::response(k + 1), EventId::forecast(k), 0.3});
    }
    const auto panel = generate(spec);
    const auto net = decompose_network(panel, 0.05);
    const auto rep = recovery_report(spec, panel, net);
    EXPECT_EQ(rep.edge_recall, 1.0);
    ASSERT_EQ(rep.matches.size(), 6u);
    for (const auto& m : rep.matches) {
        EXPECT_NEAR(m.recovered, m.planted, 0.1) << to_string(m.from) << "->" << to_string(m.to);
    }
}

TEST(DecomposeNetwork, NoResponseToForecastEdgesWhenNonePlanted) {
    const auto spec = markov_spec(500, 4, 0.8, 0.7, 0.3, 4242);
    const auto net = decompose_network(generate(spec), 0.45);
    EXPECT_EQ(count_response_to_forecast(net), 0);
    EXPECT_EQ(net.decompositions.size(), net.events.size() - 1);
    EXPECT_GE(net.markov_score, 0.8);
}

TEST(DecomposeNetwork, WhiteNoiseHasNoEdges) {
    SyntheticSpec spec;
    spec.periods = 200;
    spec.seed = 3;
    const auto net = decompose_network(generate(spec), 0.3);
    EXPECT_TRUE(net.edges.empty());
    EXPECT_EQ(net.markov_score, 1.0);
    for (const auto& d : net.decompositions) {
        EXPECT_TRUE(d.terms.empty());
        EXPECT_EQ(d.epsilon_share, 1.0);
    }
}

TEST(DecomposeNetwork, EdgeCoefficientsMatchDecompositions) {
    const auto panel = generate(markov_spec(300, 4, 0.7, 0.6, 0.5, 9));
    const auto net = decompose_network(panel, 0.1);
    ASSERT_FALSE(net.edges.empty());
    for (const auto& e : net.edges) {
        const auto& d = net.decompositions[static_cast<std::size_t>(e.to - 1)];
        EXPECT_EQ(d.index, e.to);
        bool found = false;
        for (const auto& t : d.terms) {
            if (t.source_index == e.from) {
                EXPECT_EQ(t.coefficient, e.coefficient);
                found = true;
            }
        }
        EXPECT_TRUE(found);
        EXPECT_EQ(e.partial_correlation, net.flow.entries(e.from, e.to));
    }
}

TEST(DecomposeNetwork, Deterministic) {
    const auto panel = generate(markov_spec(200, 5, 0.7, 0.6, 0.5, 12));
    const auto a = network_json(decompose_network(panel, 0.2), {}).dump();
    const auto b = network_json(decompose_network(panel, 0.2), {}).dump();
    EXPECT_EQ(a, b);
}

TEST(DecomposeNetwork, InvariantToPositiveScaling) {
    const auto panel = generate(markov_spec(250, 4, 0.8, 0.7, 0.4, 21));
    const double c = 37.5;
    const DialoguePanel scaled(panel.forecasts() * c, panel.responses() * c, panel.shipments() * c,
                               panel.period_labels());
    const auto a = decompose_network(panel, 0.2);
    const auto b = decompose_network(scaled, 0.2);
    ASSERT_EQ(a.edges.size(), b.edges.size());
    for (std::size_t i = 0; i < a.edges.size(); ++i) {
        EXPECT_EQ(a.edges[i].from, b.edges[i].from);
        EXPECT_EQ(a.edges[i].to, b.edges[i].to);
        EXPECT_NEAR(a.edges[i].coefficient, b.edges[i].coefficient, 1e-9);
    }
    for (std::size_t i = 0; i < a.decompositions.size(); ++i) {
        EXPECT_NEAR(a.decompositions[i].epsilon_share, b.decompositions[i].epsilon_share, 1e-9);
    }
}

TEST(MarkovScore, HandComputedCases) {
    const auto events = event_sequence(3, 2);  // F3 F2 R2 F1 R1 S
    EXPECT_EQ(markov_score(events, {}), 1.0);
    // F3->F2 and F2->R2 are immediate predecessors.
    EXPECT_EQ(markov_score(events, {{0, 1, 0.5, 0.0}, {1, 2, -0.4, 0.0}}), 1.0);
    // F3->F1 skips F2: 0.3 of 0.3 + 0.6 + 0.1 is non-local.
    // F1's latest forecast is F2 (1), latest response R2 (2).
    const std::vector<NetworkEdge> edges{{0, 3, 0.3, 0.0}, {1, 3, 0.6, 0.0}, {2, 3, -0.1, 0.0}};
    EXPECT_DOUBLE_EQ(markov_score(events, edges), 0.7 / 1.0);
    // S's immediate predecessors are F1 and R1.
    EXPECT_EQ(markov_score(events, {{1, 5, 1.0, 0.0}}), 0.0);
    EXPECT_EQ(latest_before(events, 0, EventKind::Forecast), -1);
    EXPECT_EQ(latest_before(events, 5, EventKind::Response), 4);
}
