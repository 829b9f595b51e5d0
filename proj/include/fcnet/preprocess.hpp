#pragma once

// Box-Cox normalization, column standardization and Kolmogorov-Smirnov
// normality diagnostics.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "fcnet/error.hpp"
#include "fcnet/panel.hpp"

namespace fcnet {

struct TransformConfig {
    double gamma = -0.5;
    bool box_cox = true;
    bool standardize = true;
    /// Added to every cell before Box-Cox; lets non-positive data through
    /// when the user opts in. Reported in output metadata.
    double shift = 0.0;
};

inline double box_cox(double y, double gamma) {
    if (!(y > 0.0)) {
        throw Error(ErrorKind::Domain, "Box-Cox requires positive input, got " + format_double(y));
    }
    if (gamma == 0.0) return std::log(y);
    // expm1 keeps small |gamma| accurate: (y^g - 1)/g = expm1(g ln y)/g.
    return std::expm1(gamma * std::log(y)) / gamma;
}

inline Eigen::VectorXd box_cox(const Eigen::VectorXd& y, double gamma) {
    Eigen::VectorXd out(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) out(i) = box_cox(y(i), gamma);
    return out;
}

/// Applies shift + Box-Cox to every cell of the panel. Domain errors name
/// the offending period and event.
inline DialoguePanel box_cox_panel(const DialoguePanel& panel, double gamma, double shift = 0.0) {
    if (!std::isfinite(gamma)) throw Error(ErrorKind::Domain, "gamma must be finite");
    const auto& labels = panel.period_labels();
    auto apply = [&](const Eigen::MatrixXd& block, EventKind kind) {
        Eigen::MatrixXd out(block.rows(), block.cols());
        for (Eigen::Index j = 0; j < block.cols(); ++j) {
            for (Eigen::Index i = 0; i < block.rows(); ++i) {
                const double y = block(i, j) + shift;
                if (!(y > 0.0)) {
                    const EventId e = kind == EventKind::Shipment ? EventId::shipment()
                                                                  : EventId{kind, static_cast<int>(j) + 1};
                    throw Error(ErrorKind::Domain, "Box-Cox requires positive values: period " +
                                                       labels[static_cast<std::size_t>(i)] + " " + to_string(e) +
                                                       " = " + format_double(block(i, j)) +
                                                       (shift != 0.0 ? " (after shift)" : ""));
                }
                out(i, j) = box_cox(y, gamma);
            }
        }
        return out;
    };
    Eigen::MatrixXd s = apply(Eigen::MatrixXd(panel.shipments()), EventKind::Shipment);
    return DialoguePanel(apply(panel.forecasts(), EventKind::Forecast), apply(panel.responses(), EventKind::Response),
                         s.col(0), labels);
}

struct ColumnScale {
    double mean = 0.0;
    double std_dev = 1.0;
};

struct Standardized {
    Eigen::MatrixXd values;
    std::vector<ColumnScale> scales;
};

/// Zero mean, unit sample standard deviation (T-1 denominator) per column.
/// `names` labels zero-variance errors when supplied.
inline Standardized standardize_columns(const Eigen::MatrixXd& x, const std::vector<std::string>& names = {}) {
    const auto t = x.rows();
    if (t < 2) throw Error(ErrorKind::SampleTooSmall, "standardization needs at least 2 rows");
    Standardized out{Eigen::MatrixXd(t, x.cols()), {}};
    out.scales.reserve(static_cast<std::size_t>(x.cols()));
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const double mean = x.col(j).mean();
        const Eigen::VectorXd centered = x.col(j).array() - mean;
        const double sd = std::sqrt(centered.squaredNorm() / static_cast<double>(t - 1));
        if (!(sd > 0.0) || sd <= 1e-14 * std::max(1.0, std::abs(mean))) {
            const std::string name = static_cast<std::size_t>(j) < names.size() ? names[static_cast<std::size_t>(j)]
                                                                                : "column " + std::to_string(j);
            throw Error(ErrorKind::ZeroVariance, "zero variance in " + name);
        }
        out.values.col(j) = centered / sd;
        out.scales.push_back({mean, sd});
    }
    return out;
}

inline Eigen::MatrixXd unstandardize(const Eigen::MatrixXd& z, const std::vector<ColumnScale>& scales) {
    Eigen::MatrixXd x(z.rows(), z.cols());
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
        const auto& s = scales[static_cast<std::size_t>(j)];
        x.col(j) = (z.col(j) * s.std_dev).array() + s.mean;
    }
    return x;
}

inline double standard_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// Survival function of the Kolmogorov distribution. The alternating series
/// converges slowly near zero, so small arguments use the equivalent theta
/// series for the CDF instead.
inline double kolmogorov_q(double lambda) {
    if (lambda <= 0.0) return 1.0;
    constexpr double kTermTol = 1e-12;
    if (lambda < 1.18) {
        const double pi2 = std::numbers::pi * std::numbers::pi;
        double cdf = 0.0;
        for (int k = 1; k < 100; ++k) {
            const double m = 2.0 * k - 1.0;
            const double term = std::exp(-m * m * pi2 / (8.0 * lambda * lambda));
            cdf += term;
            if (term < kTermTol) break;
        }
        cdf *= std::sqrt(2.0 * std::numbers::pi) / lambda;
        return std::clamp(1.0 - cdf, 0.0, 1.0);
    }
    double sum = 0.0;
    double sign = 1.0;
    for (int k = 1; k < 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += sign * term;
        if (term < kTermTol) break;
        sign = -sign;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

/// One-sample KS test against a normal with mean and standard deviation
/// estimated from x. The p-value is the classical asymptotic one, without
/// the Lilliefors correction for estimated parameters.
inline KsResult ks_normality(const Eigen::VectorXd& x) {
    const auto t = x.size();
    if (t < 8) throw Error(ErrorKind::SampleTooSmall, "KS test needs at least 8 observations, got " + std::to_string(t));
    const double mean = x.mean();
    const double sd = std::sqrt((x.array() - mean).square().sum() / static_cast<double>(t - 1));
    if (!(sd > 0.0)) throw Error(ErrorKind::ZeroVariance, "KS test on a constant sample");

    std::vector<double> sorted(x.data(), x.data() + t);
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(t);
    double d = 0.0;
    for (Eigen::Index i = 0; i < t; ++i) {
        const double cdf = standard_normal_cdf((sorted[static_cast<std::size_t>(i)] - mean) / sd);
        d = std::max({d, static_cast<double>(i + 1) / n - cdf, cdf - static_cast<double>(i) / n});
    }
    const double root = std::sqrt(n);
    return {d, kolmogorov_q((root + 0.12 + 0.11 / root) * d)};
}

struct NormalityEntry {
    EventId event;
    double ks_statistic = 0.0;
    double p_value = 1.0;
    double mean = 0.0;
    double std_dev = 0.0;
};

struct NormalityReport {
    double gamma = 0.0;
    bool box_cox = true;
    std::vector<NormalityEntry> entries;
};

/// KS diagnostics per event column after the configured Box-Cox transform
/// (standardization does not change the KS statistic and is skipped).
inline NormalityReport normality_report(const DialoguePanel& panel, const TransformConfig& config) {
    const DialoguePanel transformed = config.box_cox ? box_cox_panel(panel, config.gamma, config.shift) : panel;
    NormalityReport report{config.gamma, config.box_cox, {}};
    for (const auto& e : event_sequence(transformed)) {
        const Eigen::VectorXd col = transformed.column(e);
        const auto ks = ks_normality(col);
        const double mean = col.mean();
        const double sd = std::sqrt((col.array() - mean).square().sum() / static_cast<double>(col.size() - 1));
        report.entries.push_back({e, ks.statistic, ks.p_value, mean, sd});
    }
    return report;
}

/// One report per gamma, for picking the exponent by inspection.
inline std::vector<NormalityReport> gamma_sweep(const DialoguePanel& panel, const std::vector<double>& grid,
                                                double shift = 0.0) {
    std::vector<NormalityReport> out;
    out.reserve(grid.size());
    for (double g : grid) out.push_back(normality_report(panel, {g, true, false, shift}));
    return out;
}

/// Panel -> event-ordered observation matrix, transformed per config.
inline Eigen::MatrixXd prepare_observations(const DialoguePanel& panel, const TransformConfig& config,
                                            bool include_shipment = true) {
    const DialoguePanel transformed = config.box_cox ? box_cox_panel(panel, config.gamma, config.shift) : panel;
    Eigen::MatrixXd x = observation_matrix(transformed, include_shipment);
    if (!config.standardize) return x;
    std::vector<std::string> names;
    for (const auto& e : event_sequence(transformed)) names.push_back(to_string(e));
    return standardize_columns(x, names).values;
}

}  // namespace fcnet
