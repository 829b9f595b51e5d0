// fcnet: command-line front end for forecast/response network analysis.
//
// Exit codes: 0 ok, 2 usage, 3 data/domain, 4 environment, 5 convergence.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fcnet/json.hpp"
#include "fcnet/panel.hpp"
#include "fcnet/pipeline.hpp"
#include "fcnet/preprocess.hpp"
#include "fcnet/server.hpp"
#include "fcnet/synth.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitEnvironment = 4;
constexpr int kExitConvergence = 5;

int exit_code(fcnet::ErrorKind kind) {
    switch (kind) {
        case fcnet::ErrorKind::Convergence: return kExitConvergence;
        case fcnet::ErrorKind::Io: return kExitEnvironment;
        default: return kExitData;
    }
}

void write_output(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text << '\n';
        return;
    }
    std::ofstream out(path, std::ios::binary);
    out << text << '\n';
    if (!out) throw fcnet::Error(fcnet::ErrorKind::Io, "cannot write " + path);
}

std::vector<double> parse_grid(const std::string& text) {
    std::vector<double> grid;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        try {
            std::size_t used = 0;
            grid.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw CLI::ValidationError("--gamma-grid", "not a comma-separated list of numbers: " + text);
        }
    }
    if (grid.empty()) throw CLI::ValidationError("--gamma-grid", "empty grid");
    return grid;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Information-flow networks and continuum canonical correlation for rolling-horizon forecasts"};
    app.require_subcommand(1);

    // network
    std::string input;
    std::string out;
    double lambda = 0.8;
    double gamma = -0.5;
    double shift = 0.0;
    bool no_boxcox = false;
    std::string trace_path;
    auto* network = app.add_subcommand("network", "Infer the information-flow network and decompositions");
    network->add_option("input", input, "Panel CSV (period,kind,lag,value)")->required()->check(CLI::ExistingFile);
    network->add_option("--lambda", lambda, "Sparsity penalty")->capture_default_str()->check(CLI::Range(0.0, 1.5));
    network->add_option("--gamma", gamma, "Box-Cox exponent")->capture_default_str();
    network->add_option("--shift", shift, "Constant added before Box-Cox")->capture_default_str();
    network->add_flag("--no-boxcox", no_boxcox, "Skip the Box-Cox transform");
    network->add_option("--trace-glasso", trace_path, "Write per-sweep objective values (window,sweep,objective) as CSV");
    network->add_option("-o,--out", out, "Output JSON path (stdout when omitted)");

    // ccc
    double alpha = 0.1;
    std::optional<double> ccc_gamma;
    std::uint64_t seed = fcnet::CccOptions{}.seed;
    auto* ccc = app.add_subcommand("ccc", "Continuum canonical correlation between forecasts and responses");
    ccc->add_option("input", input, "Panel CSV")->required()->check(CLI::ExistingFile);
    ccc->add_option("--alpha", alpha, "0 = CCA, 0.5 = PLS, 1 = PCA")->capture_default_str()->check(CLI::Range(0.0, 1.0));
    ccc->add_option("--gamma", ccc_gamma, "Apply Box-Cox with this exponent first (default: none)");
    ccc->add_option("--shift", shift, "Constant added before Box-Cox")->capture_default_str();
    ccc->add_option("--seed", seed, "Seed of the random start direction")->capture_default_str();
    ccc->add_option("-o,--out", out, "Output JSON path (stdout when omitted)");

    // normality
    std::string grid_text = "-1,-0.5,0,0.5,1";
    auto* normality = app.add_subcommand("normality", "KS normality p-values per event over a Box-Cox exponent grid");
    normality->add_option("input", input, "Panel CSV")->required()->check(CLI::ExistingFile);
    normality->add_option("--gamma-grid", grid_text, "Comma-separated exponents")->capture_default_str();
    normality->add_option("--shift", shift, "Constant added before Box-Cox")->capture_default_str();
    normality->add_option("-o,--out", out, "Output JSON path (stdout when omitted)");

    // synth
    std::string spec_path;
    auto* synth = app.add_subcommand("synth", "Generate a panel CSV from a planted-structure spec");
    synth->add_option("spec", spec_path, "Synthetic spec JSON")->required()->check(CLI::ExistingFile);
    synth->add_option("--seed", seed, "Override the spec's seed");
    synth->add_option("-o,--out", out, "Output CSV path (stdout when omitted)");

    // serve
    int port = 8080;
    std::string host = "127.0.0.1";
    std::string data_dir;
    std::string cors = "*";
    std::size_t max_body = 10 * 1024 * 1024;
    auto* serve = app.add_subcommand("serve", "Run the HTTP analysis service");
    serve->add_option("--port", port, "Listen port")->capture_default_str()->check(CLI::Range(0, 65535));
    serve->add_option("--host", host, "Listen address")->capture_default_str();
    serve->add_option("--data-dir", data_dir, "Persist uploads here and reload them on start");
    serve->add_option("--cors-origin", cors, "Access-Control-Allow-Origin value")->capture_default_str();
    serve->add_option("--max-body", max_body, "Upload size limit in bytes")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (network->parsed()) {
            const auto panel = fcnet::load_csv(input);
            fcnet::TransformConfig t{gamma, !no_boxcox, true, shift};
            fcnet::ExpandingWindowOptions opt;
            std::ofstream trace;
            int window = 0;
            if (!trace_path.empty()) {
                trace.open(trace_path);
                if (!trace) throw fcnet::Error(fcnet::ErrorKind::Io, "cannot write " + trace_path);
                trace << "window,sweep,objective\n";
                opt.glasso.trace = [&](int sweep, double objective) {
                    if (sweep == 1) ++window;
                    trace << window + 1 << ',' << sweep << ',' << fcnet::format_double(objective) << '\n';
                };
            }
            write_output(out, fcnet::network_payload(panel, lambda, t, opt).dump(2));
        } else if (ccc->parsed()) {
            const auto panel = fcnet::load_csv(input);
            write_output(out, fcnet::ccc_payload(panel, alpha, ccc_gamma, shift, seed).dump(2));
        } else if (normality->parsed()) {
            const auto panel = fcnet::load_csv(input);
            const auto grid = parse_grid(grid_text);
            fcnet::Json result = fcnet::Json::array();
            for (const auto& report : fcnet::gamma_sweep(panel, grid, shift)) {
                result.push_back(fcnet::Json{{"gamma", report.gamma}, {"report", fcnet::to_json(report)}});
            }
            write_output(out, result.dump(2));
        } else if (synth->parsed()) {
            std::ifstream in(spec_path);
            fcnet::Json j;
            try {
                j = fcnet::Json::parse(in);
            } catch (const nlohmann::json::exception& e) {
                throw fcnet::Error(fcnet::ErrorKind::Spec, std::string("spec is not valid JSON: ") + e.what());
            }
            auto spec = fcnet::synthetic_spec_from_json(j);
            if (synth->count("--seed")) spec.seed = seed;
            const auto panel = fcnet::generate(spec);
            if (out.empty()) {
                fcnet::write_csv(panel, std::cout);
            } else {
                std::ofstream file(out, std::ios::binary);
                fcnet::write_csv(panel, file);
                if (!file) throw fcnet::Error(fcnet::ErrorKind::Io, "cannot write " + out);
            }
        } else if (serve->parsed()) {
            fcnet::ServiceConfig config;
            config.cors_origin = cors;
            config.max_body_bytes = max_body;
            if (!data_dir.empty()) config.data_dir = data_dir;
            fcnet::AnalysisService service(config);
            httplib::Server server;
            service.mount(server);
            if (!server.bind_to_port(host, port)) {
                std::cerr << "fcnet: cannot bind " << host << ":" << port << '\n';
                return kExitEnvironment;
            }
            std::cerr << "fcnet: listening on " << host << ":" << port << '\n';
            if (!server.listen_after_bind()) return kExitEnvironment;
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << "fcnet: " << e.what() << '\n';
        return kExitUsage;
    } catch (const fcnet::Error& e) {
        std::cerr << "fcnet: " << fcnet::to_string(e.kind()) << " error: " << e.what() << '\n';
        return exit_code(e.kind());
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "fcnet: " << e.what() << '\n';
        return kExitEnvironment;
    }
    return kExitOk;
}
