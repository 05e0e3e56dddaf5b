#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "bop2dc/service.hpp"

using namespace bop2dc;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitInfeasible = 2;

void print_errors(const std::vector<FieldError>& errors) {
    for (const auto& e : errors) std::cerr << "config error: " << (e.path.empty() ? "" : e.path + ": ") << e.message << "\n";
}

struct Overrides {
    std::optional<std::string> objective;
    std::optional<std::int64_t> sims;
    std::optional<std::uint64_t> seed;
    std::optional<double> lambda_step;
    std::optional<double> gamma_step;
    std::optional<std::string> design_file;
};

// Loads a config file and applies command-line overrides to the document
// before validation, so the echoed config reflects them.
std::optional<DesignConfig> load(const std::string& path, const Overrides& o) {
    std::string text;
    try {
        text = read_text_file(path);
    } catch (const ConfigError& e) {
        print_errors(e.errors());
        return std::nullopt;
    }
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error&) {
        print_errors(parse_config(text).errors);
        return std::nullopt;
    }
    if (doc.is_object()) {
        if (o.objective) doc["objective"] = *o.objective;
        if (o.sims) doc["simulation"]["n_sims"] = *o.sims;
        if (o.seed) doc["simulation"]["seed"] = *o.seed;
        for (const char* axis : {"lambda_lrv", "lambda_cmv"})
            if (o.lambda_step) doc["grid"][axis]["step"] = *o.lambda_step;
        for (const char* axis : {"gamma_lrv", "gamma_cmv"})
            if (o.gamma_step) doc["grid"][axis]["step"] = *o.gamma_step;
        if (o.design_file) {
            json d;
            try {
                d = json::parse(read_text_file(*o.design_file));
            } catch (const json::parse_error& e) {
                std::cerr << "config error: design file: " << e.what() << "\n";
                return std::nullopt;
            } catch (const ConfigError& e) {
                print_errors(e.errors());
                return std::nullopt;
            }
            // A calibration result file carries the design under "design".
            if (d.is_object() && d.contains("design") && d["design"].is_object()) d = d["design"];
            doc["design"] = d;
        }
    }
    auto outcome = parse_config(doc);
    if (!outcome.ok()) {
        print_errors(outcome.errors);
        return std::nullopt;
    }
    return std::move(outcome.config);
}

bool write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
    if (!out) {
        std::cerr << "error: cannot write '" << path << "'\n";
        return false;
    }
    return true;
}

bool emit(const std::string& path, const std::string& content) {
    if (path.empty() || path == "-") {
        std::cout << content;
        return true;
    }
    return write_file(path, content);
}

std::string summary_path(const std::string& out) {
    if (out.empty() || out == "-") return "";
    const auto dot = out.rfind('.');
    const auto slash = out.rfind('/');
    const std::string stem = (dot != std::string::npos && (slash == std::string::npos || dot > slash)) ? out.substr(0, dot) : out;
    return stem + ".md";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"BOP2-DC phase II design calibration and simulation"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kVersion));

    std::string config_path, out_path, summary, csv_path, trials_path, host = "127.0.0.1";
    std::string objective, design_file;
    std::int64_t sims = 0;
    std::uint64_t seed = 0;
    double lambda_step = 0, gamma_step = 0;
    int threads = 0, port = 0, workers = 0;
    bool quiet = false;

    auto* cal = app.add_subcommand("calibrate", "Search the threshold grid for the optimal or minN design");
    cal->add_option("config", config_path, "Design config (JSON)")->required()->check(CLI::ExistingFile);
    cal->add_option("--objective", objective, "optimal or minN")->check(CLI::IsMember({"optimal", "minN"}));
    cal->add_option("--sims", sims, "Simulated trials per scenario")->check(CLI::PositiveNumber);
    cal->add_option("--seed", seed, "Random seed");
    cal->add_option("--lambda-step", lambda_step, "Step for both lambda grid axes")->check(CLI::PositiveNumber);
    cal->add_option("--gamma-step", gamma_step, "Step for both gamma grid axes")->check(CLI::PositiveNumber);
    cal->add_option("--threads", threads, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
    cal->add_option("--out", out_path, "Result JSON path (default stdout)");
    cal->add_option("--summary", summary, "Protocol summary path (default: result path with .md)");
    cal->add_flag("--quiet", quiet, "No progress on standard error");

    auto* sim = app.add_subcommand("simulate", "Estimate operating characteristics of a fixed design");
    sim->add_option("config", config_path, "Design config (JSON)")->required()->check(CLI::ExistingFile);
    sim->add_option("--design", design_file, "Design parameters (JSON), or a calibration result")
        ->check(CLI::ExistingFile);
    sim->add_option("--sims", sims, "Simulated trials per scenario")->check(CLI::PositiveNumber);
    sim->add_option("--seed", seed, "Random seed");
    sim->add_option("--threads", threads, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
    sim->add_option("--out", out_path, "Result JSON path (default stdout)");
    sim->add_option("--csv", csv_path, "Operating characteristics table (CSV)");
    sim->add_option("--trials-csv", trials_path, "Per-trial outcomes (CSV)");

    auto* tab = app.add_subcommand("decision-table", "Per-look decision boundaries of a design");
    tab->add_option("config", config_path, "Design config (JSON)")->required()->check(CLI::ExistingFile);
    tab->add_option("--design", design_file, "Design parameters (JSON), or a calibration result")
        ->check(CLI::ExistingFile);
    tab->add_option("--out", out_path, "Output path (default stdout)");
    bool markdown = false;
    tab->add_flag("--markdown", markdown, "Write the markdown table instead of JSON");

    auto* val = app.add_subcommand("validate", "Validate a config and print the echo with defaults applied");
    val->add_option("config", config_path, "Design config (JSON)")->required()->check(CLI::ExistingFile);

    auto* srv = app.add_subcommand("serve", "Run the HTTP API");
    srv->add_option("--port", port, "Port (default $BOP2DC_PORT or 8080)")->check(CLI::Range(1, 65535));
    srv->add_option("--host", host, "Bind address");
    srv->add_option("--workers", workers, "Concurrent jobs (0 = all cores)")->check(CLI::NonNegativeNumber);
    srv->add_option("--threads", threads, "Engine threads per job (0 = all cores)")->check(CLI::NonNegativeNumber);

    CLI11_PARSE(app, argc, argv);

    Overrides o;
    if (!objective.empty()) o.objective = objective;
    if (sims > 0) o.sims = sims;
    if ((cal->parsed() && cal->count("--seed")) || (sim->parsed() && sim->count("--seed"))) o.seed = seed;
    if (lambda_step > 0) o.lambda_step = lambda_step;
    if (gamma_step > 0) o.gamma_step = gamma_step;
    if (!design_file.empty()) o.design_file = design_file;

    try {
        if (*val) {
            std::string text;
            try {
                text = read_text_file(config_path);
            } catch (const ConfigError& e) {
                print_errors(e.errors());
                return kExitConfig;
            }
            const auto outcome = parse_config(text);
            if (!outcome.ok()) print_errors(outcome.errors);
            std::cout << dump_payload(validation_payload(outcome));
            return outcome.ok() ? kExitOk : kExitConfig;
        }
        if (*cal) {
            auto c = load(config_path, o);
            if (!c) return kExitConfig;
            EngineOptions opt;
            opt.threads = threads;
            int last = -1;
            if (!quiet)
                opt.progress = [&](double f) {
                    const int pct = static_cast<int>(f * 100.0);
                    if (pct != last) {
                        last = pct;
                        std::fprintf(stderr, "\rcalibrating %3d%%", pct);
                        if (pct == 100) std::fprintf(stderr, "\n");
                    }
                };
            const auto run = run_calibration(*c, opt);
            if (!emit(out_path, dump_payload(run.payload))) return kExitConfig;
            const std::string sp = summary.empty() ? summary_path(out_path) : summary;
            if (!sp.empty() && !write_file(sp, run.summary)) return kExitConfig;
            if (!run.result.feasible) {
                std::cerr << "infeasible: no grid point meets the constraints; nearest point reported\n";
                return kExitInfeasible;
            }
            return kExitOk;
        }
        if (*sim) {
            auto c = load(config_path, o);
            if (!c) return kExitConfig;
            if (!c->design) {
                print_errors({{"design", "required for simulation (config field or --design file)"}});
                return kExitConfig;
            }
            EngineOptions opt;
            opt.threads = threads;
            const auto run = run_simulation(*c, opt);
            if (!emit(out_path, dump_payload(run.payload))) return kExitConfig;
            if (!csv_path.empty() && !write_file(csv_path, run.csv)) return kExitConfig;
            if (!trials_path.empty()) {
                const auto scenarios = c->scenarios();
                std::string all = "scenario,";
                bool header = true;
                for (std::size_t s = 0; s < run.trials.size(); ++s) {
                    const auto text = trials_csv(run.trials[s], c->plan);
                    const auto body_start = text.find("\r\n") + 2;
                    if (header) {
                        all += text.substr(0, body_start);
                        header = false;
                    }
                    std::size_t pos = body_start;
                    while (pos < text.size()) {
                        const auto end = text.find("\r\n", pos);
                        all += csv_escape(scenarios[s].label) + "," + text.substr(pos, end + 2 - pos);
                        pos = end + 2;
                    }
                }
                if (!write_file(trials_path, all)) return kExitConfig;
            }
            return kExitOk;
        }
        if (*tab) {
            auto c = load(config_path, o);
            if (!c) return kExitConfig;
            if (!c->design) {
                print_errors({{"design", "required for a decision table (config field or --design file)"}});
                return kExitConfig;
            }
            const auto payload = run_decision_table(*c);
            const std::string text =
                markdown ? payload["rules"]["markdown"].get<std::string>() : dump_payload(payload);
            return emit(out_path, text) ? kExitOk : kExitConfig;
        }
        if (*srv) {
            ServiceOptions so{workers, threads};
            Service service(so);
            const int p = port > 0 ? port : default_port();
            const int bound = service.bind(host, p);
            if (bound < 0) {
                std::cerr << "error: cannot bind " << host << ":" << p << "\n";
                return kExitConfig;
            }
            std::cerr << "bop2dc " << kVersion << " listening on http://" << host << ":" << bound << "\n";
            return service.listen() ? kExitOk : kExitConfig;
        }
    } catch (const ConfigError& e) {
        print_errors(e.errors());
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitOk;
}
