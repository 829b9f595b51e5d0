#pragma once

// HTTP service: dataset upload plus parameterized network, CCC and
// normality analyses. Handlers are plain member functions returning an
// ApiResponse so they can be exercised without a socket; mount() binds them
// to a cpp-httplib server.

// Eigen first: glibc's resolv.h (pulled in by httplib) defines a `_res`
// macro that collides with Eigen parameter names.
#include <Eigen/Dense>
#include <httplib.h>

#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "fcnet/error.hpp"
#include "fcnet/json.hpp"
#include "fcnet/panel.hpp"
#include "fcnet/pipeline.hpp"

namespace fcnet {

struct ApiResponse {
    int status = 200;
    std::string body;
    std::string content_type = "application/json";
};

struct ServiceConfig {
    std::size_t max_body_bytes = 10 * 1024 * 1024;
    std::size_t cache_capacity = 256;
    std::string cors_origin = "*";
    /// Uploaded CSVs are written here and replayed on startup when set.
    std::optional<std::filesystem::path> data_dir;
};

struct Dataset {
    std::string id;
    DialoguePanel panel;
    std::chrono::system_clock::time_point created_at;
};

/// Size-bounded LRU map. The only shared mutable state of the service.
class LruCache {
public:
    explicit LruCache(std::size_t capacity) : capacity_(capacity) {}

    std::optional<std::string> get(const std::string& key) {
        std::lock_guard lock(mu_);
        auto it = index_.find(key);
        if (it == index_.end()) return std::nullopt;
        order_.splice(order_.begin(), order_, it->second);
        return it->second->second;
    }

    void put(const std::string& key, std::string value) {
        if (capacity_ == 0) return;
        std::lock_guard lock(mu_);
        if (auto it = index_.find(key); it != index_.end()) {
            it->second->second = std::move(value);
            order_.splice(order_.begin(), order_, it->second);
            return;
        }
        order_.emplace_front(key, std::move(value));
        index_[key] = order_.begin();
        while (order_.size() > capacity_) {
            index_.erase(order_.back().first);
            order_.pop_back();
        }
    }

    std::size_t size() const {
        std::lock_guard lock(mu_);
        return order_.size();
    }

private:
    std::size_t capacity_;
    mutable std::mutex mu_;
    std::list<std::pair<std::string, std::string>> order_;
    std::unordered_map<std::string, std::list<std::pair<std::string, std::string>>::iterator> index_;
};

using QueryParams = std::multimap<std::string, std::string>;

class AnalysisService {
public:
    explicit AnalysisService(ServiceConfig config = {}) : config_(std::move(config)), cache_(config_.cache_capacity) {
        if (config_.data_dir) replay_data_dir();
    }

    const ServiceConfig& config() const { return config_; }
    std::size_t cached_results() const { return cache_.size(); }

    /// POST /datasets
    ApiResponse upload(const std::string& body, const std::string& content_type = "text/csv") {
        if (!content_type.empty() && content_type.rfind("text/csv", 0) != 0 && content_type.rfind("text/plain", 0) != 0) {
            return error(415, "unsupported content type", "upload CSV as text/csv");
        }
        if (body.size() > config_.max_body_bytes) {
            return error(413, "payload too large", "limit is " + std::to_string(config_.max_body_bytes) + " bytes");
        }
        if (body.empty()) return error(400, "empty body", "expected CSV with header period,kind,lag,value");
        std::string id;
        try {
            auto panel = parse_csv_text(body, "upload");
            id = "ds-" + std::to_string(next_id_.fetch_add(1) + 1);
            if (config_.data_dir) {
                std::ofstream out(*config_.data_dir / (id + ".csv"), std::ios::binary);
                out << body;
                if (!out) return error(500, "could not persist dataset", (*config_.data_dir).string());
            }
            store(id, std::move(panel));
        } catch (const Error& e) {
            return error(400, "malformed dataset", e.what());
        }
        return {201, Json{{"id", id}}.dump()};
    }

    /// GET /datasets/{id}/network?lambda=&gamma=&boxcox=&shift=
    ApiResponse network(const std::string& id, const QueryParams& query) {
        auto ds = find(id);
        if (!ds) return error(404, "unknown dataset", id);
        double lambda = 0.8;
        TransformConfig t;
        try {
            lambda = number_param(query, "lambda", 0.8);
            t.gamma = number_param(query, "gamma", -0.5);
            t.shift = number_param(query, "shift", 0.0);
            t.box_cox = bool_param(query, "boxcox", true);
        } catch (const Error& e) {
            return error(422, "bad parameter", e.what());
        }
        if (!(lambda >= 0.0 && lambda <= 1.5)) return error(422, "bad parameter", "lambda must lie in [0, 1.5]");
        const std::string key = "network|" + id + "|" + format_double(lambda) + "|" + format_double(t.gamma) + "|" +
                                format_double(t.shift) + "|" + (t.box_cox ? "1" : "0");
        return cached(key, [&] { return network_payload(ds->panel, lambda, t).dump(); });
    }

    /// GET /datasets/{id}/ccc?alpha=&gamma=&shift=&seed=
    ApiResponse ccc(const std::string& id, const QueryParams& query) {
        auto ds = find(id);
        if (!ds) return error(404, "unknown dataset", id);
        double alpha = 0.1;
        std::optional<double> gamma;
        double shift = 0.0;
        std::uint64_t seed = CccOptions{}.seed;
        try {
            alpha = number_param(query, "alpha", 0.1);
            if (query.count("gamma")) gamma = number_param(query, "gamma", 0.0);
            shift = number_param(query, "shift", 0.0);
            seed = static_cast<std::uint64_t>(number_param(query, "seed", static_cast<double>(seed)));
        } catch (const Error& e) {
            return error(422, "bad parameter", e.what());
        }
        if (!(alpha >= 0.0 && alpha <= 1.0)) return error(422, "bad parameter", "alpha must lie in [0, 1]");
        const std::string key = "ccc|" + id + "|" + format_double(alpha) + "|" +
                                (gamma ? format_double(*gamma) : std::string("none")) + "|" + format_double(shift) +
                                "|" + std::to_string(seed);
        return cached(key, [&] { return ccc_payload(ds->panel, alpha, gamma, shift, seed).dump(); });
    }

    /// GET /datasets/{id}/normality?gamma=&shift=&boxcox=
    ApiResponse normality(const std::string& id, const QueryParams& query) {
        auto ds = find(id);
        if (!ds) return error(404, "unknown dataset", id);
        TransformConfig t;
        t.standardize = false;
        try {
            t.gamma = number_param(query, "gamma", -0.5);
            t.shift = number_param(query, "shift", 0.0);
            t.box_cox = bool_param(query, "boxcox", true);
        } catch (const Error& e) {
            return error(422, "bad parameter", e.what());
        }
        const std::string key = "normality|" + id + "|" + format_double(t.gamma) + "|" + format_double(t.shift) + "|" +
                                (t.box_cox ? "1" : "0");
        return cached(key, [&] { return normality_payload(ds->panel, t).dump(); });
    }

    /// Registers every route, CORS headers and the upload size limit.
    void mount(httplib::Server& server) {
        server.set_payload_max_length(config_.max_body_bytes);
        server.set_default_headers({{"Access-Control-Allow-Origin", config_.cors_origin},
                                    {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                                    {"Access-Control-Allow-Headers", "Content-Type"}});
        server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
        server.Get("/health", [](const httplib::Request&, httplib::Response& res) {
            res.set_content(R"({"status":"ok"})", "application/json");
        });
        server.Post("/datasets", [this](const httplib::Request& req, httplib::Response& res) {
            send(res, upload(req.body, req.get_header_value("Content-Type")));
        });
        auto route = [this, &server](const char* pattern, ApiResponse (AnalysisService::*handler)(const std::string&, const QueryParams&)) {
            server.Get(pattern, [this, handler](const httplib::Request& req, httplib::Response& res) {
                QueryParams q(req.params.begin(), req.params.end());
                send(res, (this->*handler)(req.matches[1], q));
            });
        };
        route(R"(/datasets/([^/]+)/network)", &AnalysisService::network);
        route(R"(/datasets/([^/]+)/ccc)", &AnalysisService::ccc);
        route(R"(/datasets/([^/]+)/normality)", &AnalysisService::normality);
        server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
            if (res.body.empty()) {
                const char* message = res.status == 413 ? "payload too large" : res.status == 404 ? "not found" : "error";
                res.set_content(error_json(res.status, message).dump(), "application/json");
            }
        });
    }

private:
    static void send(httplib::Response& res, const ApiResponse& r) {
        res.status = r.status;
        res.set_content(r.body, r.content_type);
    }

    static ApiResponse error(int status, const std::string& message, const std::string& detail = {}) {
        return {status, error_json(status, message, detail).dump()};
    }

    static std::optional<std::string> param(const QueryParams& q, const std::string& name) {
        auto it = q.find(name);
        if (it == q.end()) return std::nullopt;
        return it->second;
    }

    static double number_param(const QueryParams& q, const std::string& name, double fallback) {
        auto text = param(q, name);
        if (!text) return fallback;
        double value = 0.0;
        auto [ptr, ec] = std::from_chars(text->data(), text->data() + text->size(), value);
        if (text->empty() || ec != std::errc() || ptr != text->data() + text->size() || !std::isfinite(value)) {
            throw Error(ErrorKind::Parse, name + " is not a number: '" + *text + "'");
        }
        return value;
    }

    static bool bool_param(const QueryParams& q, const std::string& name, bool fallback) {
        auto text = param(q, name);
        if (!text) return fallback;
        if (*text == "1" || *text == "true") return true;
        if (*text == "0" || *text == "false") return false;
        throw Error(ErrorKind::Parse, name + " must be true/false");
    }

    static int status_for(ErrorKind kind) {
        switch (kind) {
            case ErrorKind::Convergence:
            case ErrorKind::Numeric:
            case ErrorKind::Io: return 500;
            default: return 422;
        }
    }

    template <typename Compute>
    ApiResponse cached(const std::string& key, Compute&& compute) {
        if (auto hit = cache_.get(key)) return {200, *hit};
        try {
            std::string body = compute();
            cache_.put(key, body);
            return {200, std::move(body)};
        } catch (const ConvergenceError& e) {
            return error(500, "solver did not converge", std::string(e.what()) + "; KKT residual " + format_double(e.residual()));
        } catch (const Error& e) {
            return error(status_for(e.kind()), std::string(to_string(e.kind())) + " error", e.what());
        }
    }

    std::shared_ptr<const Dataset> find(const std::string& id) const {
        std::shared_lock lock(datasets_mu_);
        auto it = datasets_.find(id);
        return it == datasets_.end() ? nullptr : it->second;
    }

    void store(const std::string& id, DialoguePanel panel) {
        auto ds = std::make_shared<const Dataset>(Dataset{id, std::move(panel), std::chrono::system_clock::now()});
        std::unique_lock lock(datasets_mu_);
        datasets_[id] = std::move(ds);
    }

    void replay_data_dir() {
        namespace fs = std::filesystem;
        fs::create_directories(*config_.data_dir);
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(*config_.data_dir)) {
            if (entry.path().extension() == ".csv" && entry.path().stem().string().rfind("ds-", 0) == 0) {
                files.push_back(entry.path());
            }
        }
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            const std::string id = f.stem().string();
            store(id, load_csv(f.string()));
            std::uint64_t num = 0;
            const auto digits = id.substr(3);
            std::from_chars(digits.data(), digits.data() + digits.size(), num);
            if (num > next_id_.load()) next_id_.store(num);
        }
    }

    ServiceConfig config_;
    LruCache cache_;
    mutable std::shared_mutex datasets_mu_;
    std::map<std::string, std::shared_ptr<const Dataset>> datasets_;
    std::atomic<std::uint64_t> next_id_{0};
};

}  // namespace fcnet
