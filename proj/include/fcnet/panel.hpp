#pragma once

// Rolling-horizon data model: forecasts, responses and shipments per
// realization period, plus the chronological event ordering every analysis
// is built on.

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "fcnet/error.hpp"

namespace fcnet {

enum class EventKind { Forecast, Response, Shipment };

/// One node of the information-flow network. Lag is the number of periods
/// between issue and realization; shipments always have lag 0.
struct EventId {
    EventKind kind = EventKind::Shipment;
    int lag = 0;

    static EventId forecast(int lag) { return {EventKind::Forecast, lag}; }
    static EventId response(int lag) { return {EventKind::Response, lag}; }
    static EventId shipment() { return {EventKind::Shipment, 0}; }

    friend bool operator==(const EventId&, const EventId&) = default;
    friend auto operator<=>(const EventId& a, const EventId& b) {
        return std::tie(a.kind, a.lag) <=> std::tie(b.kind, b.lag);
    }
};

inline char kind_letter(EventKind kind) {
    switch (kind) {
        case EventKind::Forecast: return 'F';
        case EventKind::Response: return 'R';
        case EventKind::Shipment: return 'S';
    }
    return '?';
}

/// "F3", "R1", "S".
inline std::string to_string(const EventId& e) {
    if (e.kind == EventKind::Shipment) return "S";
    return std::string(1, kind_letter(e.kind)) + std::to_string(e.lag);
}

/// Inverse of to_string(EventId).
inline std::optional<EventId> parse_event_id(std::string_view text) {
    if (text == "S") return EventId::shipment();
    if (text.size() < 2) return std::nullopt;
    EventKind kind;
    if (text[0] == 'F') {
        kind = EventKind::Forecast;
    } else if (text[0] == 'R') {
        kind = EventKind::Response;
    } else {
        return std::nullopt;
    }
    int lag = 0;
    auto [ptr, ec] = std::from_chars(text.data() + 1, text.data() + text.size(), lag);
    if (ec != std::errc() || ptr != text.data() + text.size() || lag < 1) return std::nullopt;
    return EventId{kind, lag};
}

using EventSequence = std::vector<EventId>;

class DialoguePanel {
public:
    /// Validates and takes ownership of the three blocks. forecasts is T×N
    /// (column j-1 holds lag j), responses T×M, shipments length T.
    DialoguePanel(Eigen::MatrixXd forecasts, Eigen::MatrixXd responses, Eigen::VectorXd shipments,
                  std::vector<std::string> period_labels)
        : forecasts_(std::move(forecasts)),
          responses_(std::move(responses)),
          shipments_(std::move(shipments)),
          labels_(std::move(period_labels)) {
        const auto t = forecasts_.rows();
        if (t < 1 || forecasts_.cols() < 1 || responses_.cols() < 1) {
            throw Error(ErrorKind::IncompletePanel, "panel needs at least one period, forecast lag and response lag");
        }
        if (responses_.rows() != t || shipments_.size() != t || static_cast<Eigen::Index>(labels_.size()) != t) {
            throw Error(ErrorKind::Shape, "forecast, response, shipment and label lengths disagree");
        }
        if (responses_.cols() > forecasts_.cols()) {
            throw Error(ErrorKind::HorizonOrder,
                        "response horizon M=" + std::to_string(responses_.cols()) +
                            " exceeds forecast horizon N=" + std::to_string(forecasts_.cols()));
        }
        if (!forecasts_.allFinite() || !responses_.allFinite() || !shipments_.allFinite()) {
            throw Error(ErrorKind::Domain, "panel contains non-finite values");
        }
    }

    int periods() const { return static_cast<int>(forecasts_.rows()); }
    int forecast_horizon() const { return static_cast<int>(forecasts_.cols()); }
    int response_horizon() const { return static_cast<int>(responses_.cols()); }

    const Eigen::MatrixXd& forecasts() const { return forecasts_; }
    const Eigen::MatrixXd& responses() const { return responses_; }
    const Eigen::VectorXd& shipments() const { return shipments_; }
    const std::vector<std::string>& period_labels() const { return labels_; }

    /// The T observations of one event.
    Eigen::VectorXd column(const EventId& e) const {
        switch (e.kind) {
            case EventKind::Forecast: return forecasts_.col(e.lag - 1);
            case EventKind::Response: return responses_.col(e.lag - 1);
            case EventKind::Shipment: return shipments_;
        }
        return {};
    }

    friend bool operator==(const DialoguePanel& a, const DialoguePanel& b) {
        return a.labels_ == b.labels_ && a.forecasts_.rows() == b.forecasts_.rows() &&
               a.forecasts_.cols() == b.forecasts_.cols() && a.responses_.cols() == b.responses_.cols() &&
               a.forecasts_ == b.forecasts_ && a.responses_ == b.responses_ && a.shipments_ == b.shipments_;
    }

private:
    Eigen::MatrixXd forecasts_;
    Eigen::MatrixXd responses_;
    Eigen::VectorXd shipments_;
    std::vector<std::string> labels_;
};

/// Chronological order: F_N first, then for each lag k from N down to 1 the
/// forecast F_k followed by R_k when k <= M, and the shipment last.
inline EventSequence event_sequence(int forecast_horizon, int response_horizon) {
    EventSequence events;
    events.reserve(static_cast<std::size_t>(forecast_horizon + response_horizon + 1));
    for (int k = forecast_horizon; k >= 1; --k) {
        events.push_back(EventId::forecast(k));
        if (k <= response_horizon) events.push_back(EventId::response(k));
    }
    events.push_back(EventId::shipment());
    return events;
}

inline EventSequence event_sequence(const DialoguePanel& panel) {
    return event_sequence(panel.forecast_horizon(), panel.response_horizon());
}

/// T×n matrix whose columns follow event_sequence order. Unobserved response
/// lags above M are never materialized as zero columns.
inline Eigen::MatrixXd observation_matrix(const DialoguePanel& panel, bool include_shipment) {
    auto events = event_sequence(panel);
    if (!include_shipment) events.pop_back();
    Eigen::MatrixXd x(panel.periods(), static_cast<Eigen::Index>(events.size()));
    for (std::size_t j = 0; j < events.size(); ++j) {
        x.col(static_cast<Eigen::Index>(j)) = panel.column(events[j]);
    }
    return x;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            break;
        }
        out.push_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
    return out;
}

inline Error parse_error(const std::string& source, std::size_t line, const std::string& what) {
    return Error(ErrorKind::Parse, source + ":" + std::to_string(line) + ": " + what);
}

}  // namespace detail

/// Parses `period,kind,lag,value` records (header required, any row order).
/// `source` only labels diagnostics.
inline DialoguePanel parse_csv(std::istream& in, const std::string& source = "<input>") {
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    // (kind, lag) -> period -> value
    std::map<std::string, std::map<std::pair<EventKind, int>, double>> cells;
    std::set<std::string> periods;
    int max_f = 0;
    int max_r = 0;

    while (std::getline(in, line)) {
        ++line_no;
        auto view = detail::trim(line);
        if (line_no == 1 && view.size() >= 3 && static_cast<unsigned char>(view[0]) == 0xEF) {
            view.remove_prefix(3);  // UTF-8 BOM
        }
        if (view.empty()) continue;
        auto fields = detail::split_commas(view);
        if (!have_header) {
            if (fields.size() != 4 || fields[0] != "period" || fields[1] != "kind" || fields[2] != "lag" ||
                fields[3] != "value") {
                throw detail::parse_error(source, line_no, "expected header 'period,kind,lag,value'");
            }
            have_header = true;
            continue;
        }
        if (fields.size() != 4) {
            throw detail::parse_error(source, line_no, "expected 4 fields, found " + std::to_string(fields.size()));
        }
        const std::string period(fields[0]);
        if (period.empty()) throw detail::parse_error(source, line_no, "empty period label");

        EventKind kind;
        if (fields[1] == "F") {
            kind = EventKind::Forecast;
        } else if (fields[1] == "R") {
            kind = EventKind::Response;
        } else if (fields[1] == "S") {
            kind = EventKind::Shipment;
        } else {
            throw detail::parse_error(source, line_no, "kind must be F, R or S");
        }

        int lag = 0;
        {
            auto f = fields[2];
            auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), lag);
            if (f.empty() || ec != std::errc() || ptr != f.data() + f.size()) {
                throw detail::parse_error(source, line_no, "lag is not an integer");
            }
        }
        if (kind == EventKind::Shipment ? lag != 0 : lag < 1) {
            throw detail::parse_error(source, line_no,
                                      kind == EventKind::Shipment ? "shipment lag must be 0" : "lag must be >= 1");
        }

        const std::string value_text(fields[3]);
        char* end = nullptr;
        const double value = std::strtod(value_text.c_str(), &end);
        if (value_text.empty() || end != value_text.c_str() + value_text.size() || !std::isfinite(value)) {
            throw detail::parse_error(source, line_no, "value is not a finite decimal");
        }

        auto& by_event = cells[period];
        if (!by_event.emplace(std::make_pair(kind, lag), value).second) {
            throw Error(ErrorKind::DuplicateRecord, source + ":" + std::to_string(line_no) +
                                                        ": duplicate record for period " + period + " " +
                                                        to_string(EventId{kind, lag}));
        }
        periods.insert(period);
        if (kind == EventKind::Forecast) max_f = std::max(max_f, lag);
        if (kind == EventKind::Response) max_r = std::max(max_r, lag);
    }

    if (!have_header) throw detail::parse_error(source, line_no, "missing header");
    if (periods.empty()) throw Error(ErrorKind::IncompletePanel, source + ": no records");
    if (max_f == 0) throw Error(ErrorKind::IncompletePanel, source + ": no forecast records");
    if (max_r == 0) throw Error(ErrorKind::IncompletePanel, source + ": no response records");
    if (max_r > max_f) {
        throw Error(ErrorKind::HorizonOrder, source + ": response horizon M=" + std::to_string(max_r) +
                                                 " exceeds forecast horizon N=" + std::to_string(max_f));
    }

    const auto t = static_cast<Eigen::Index>(periods.size());
    Eigen::MatrixXd f(t, max_f);
    Eigen::MatrixXd r(t, max_r);
    Eigen::VectorXd s(t);
    std::vector<std::string> labels(periods.begin(), periods.end());

    auto fetch = [&](const std::string& period, EventKind kind, int lag) {
        const auto& by_event = cells[period];
        auto it = by_event.find({kind, lag});
        if (it == by_event.end()) {
            throw Error(ErrorKind::IncompletePanel,
                        source + ": missing cell for period " + period + " " + to_string(EventId{kind, lag}));
        }
        return it->second;
    };

    for (Eigen::Index i = 0; i < t; ++i) {
        const auto& p = labels[static_cast<std::size_t>(i)];
        for (int k = 1; k <= max_f; ++k) f(i, k - 1) = fetch(p, EventKind::Forecast, k);
        for (int k = 1; k <= max_r; ++k) r(i, k - 1) = fetch(p, EventKind::Response, k);
        s(i) = fetch(p, EventKind::Shipment, 0);
    }
    return DialoguePanel(std::move(f), std::move(r), std::move(s), std::move(labels));
}

inline DialoguePanel parse_csv_text(const std::string& text, const std::string& source = "<input>") {
    std::istringstream in(text);
    return parse_csv(in, source);
}

inline DialoguePanel load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
    return parse_csv(in, path);
}

/// Shortest decimal that reads back to the identical double.
inline std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

inline void write_csv(const DialoguePanel& panel, std::ostream& out) {
    out << "period,kind,lag,value\n";
    for (int i = 0; i < panel.periods(); ++i) {
        const auto& p = panel.period_labels()[static_cast<std::size_t>(i)];
        for (int k = 1; k <= panel.forecast_horizon(); ++k) {
            out << p << ",F," << k << ',' << format_double(panel.forecasts()(i, k - 1)) << '\n';
        }
        for (int k = 1; k <= panel.response_horizon(); ++k) {
            out << p << ",R," << k << ',' << format_double(panel.responses()(i, k - 1)) << '\n';
        }
        out << p << ",S,0," << format_double(panel.shipments()(i)) << '\n';
    }
}

inline std::string to_csv(const DialoguePanel& panel) {
    std::ostringstream out;
    write_csv(panel, out);
    return out.str();
}

}  // namespace fcnet
