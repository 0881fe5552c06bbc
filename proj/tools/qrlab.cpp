#include <CLI11.hpp>

#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "qrlab/experiments.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct CommonOptions {
    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 0;
    bool threads_set = false;
    std::string out_dir;
    bool out_set = false;
    bool plot = false;
};

std::string experiment_blurb(const std::string& kind) {
    if (kind == "qfield") return "Hoelder quotient field over a grid";
    if (kind == "yosida") return "Yosida-type sup indicator with divergence triggers";
    if (kind == "pyosida") return "weighted (p-Yosida) indicator along anchor rays";
    if (kind == "seqdist") return "weighted sequence distances D_p / d_p and trends";
    if (kind == "mpdetect") return "M_p membership evidence via companion search";
    if (kind == "mucheck") return "mu_p coverage check via sphere rasterization";
    if (kind == "separation") return "weighted separation statistic over regions";
    if (kind == "afr") return "averaged counting function A_f(r), two routes";
    if (kind == "oscillation") return "spherical oscillation profiles over a grid";
    if (kind == "nprobe") return "counting probes: route cross-checks and sweeps";
    return "";
}

std::string read_config(const std::string& path) {
    if (path == "-") {
        std::ostringstream buf;
        buf << std::cin.rdbuf();
        return buf.str();
    }
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::invalid_argument("cannot read config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void print_summary(const qrlab::ExperimentResult& result,
                   const std::vector<std::filesystem::path>& written) {
    const nlohmann::json& rep = result.report;
    std::cout << rep.at("kind").get<std::string>() << ": status "
              << rep.at("status").get<std::string>();
    if (rep.contains("results") && rep["results"].contains("verdict"))
        std::cout << ", verdict: " << rep["results"]["verdict"].get<std::string>();
    std::cout << '\n';
    for (const auto& path : written) std::cout << "wrote " << path.string() << '\n';
}

int run_kind(const std::string& kind, const CommonOptions& opt) {
    qrlab::CliOverrides overrides;
    if (opt.seed_set) overrides.seed = opt.seed;
    if (opt.threads_set) overrides.threads = opt.threads;
    if (opt.out_set) overrides.out_dir = opt.out_dir;
    if (opt.plot) overrides.plot = true;

    qrlab::ExperimentConfig cfg;
    try {
        cfg = qrlab::parse_config(read_config(opt.config_path), kind, overrides);
    } catch (const std::invalid_argument& err) {
        std::cerr << "configuration error: " << err.what() << '\n';
        return kExitConfig;
    }

    auto t0 = std::chrono::steady_clock::now();
    try {
        qrlab::ExperimentResult result = qrlab::run_experiment(cfg);
        double seconds = std::chrono::duration<double>(
                             std::chrono::steady_clock::now() - t0)
                             .count();
        auto written = qrlab::write_artifacts(cfg, result, seconds);
        print_summary(result, written);
        return 0;
    } catch (const qrlab::ExperimentFailure& fail) {
        double seconds = std::chrono::duration<double>(
                             std::chrono::steady_clock::now() - t0)
                             .count();
        auto written = qrlab::write_artifacts(cfg, fail.partial, seconds);
        std::cerr << "numerical failure: " << fail.what() << '\n';
        for (const auto& path : written)
            std::cerr << "partial results in " << path.string() << '\n';
        return kExitNumerical;
    } catch (const std::invalid_argument& err) {
        std::cerr << "configuration error: " << err.what() << '\n';
        return kExitConfig;
    }
}

int print_zoo(bool as_json) {
    if (as_json) {
        std::cout << qrlab::zoo_catalog().dump(2) << '\n';
        return 0;
    }
    std::printf("%-12s %3s %8s %9s %8s %8s  %s\n", "kind", "n", "K", "jacobian",
                "apoints", "complex", "summary");
    for (const qrlab::MapInfo& info : qrlab::list_zoo()) {
        std::printf("%-12s %3d %8g %9s %8s %8s  %s\n", info.kind.c_str(), info.dim,
                    info.distortion, info.has_jacobian ? "yes" : "no",
                    info.has_apoints ? "yes" : "no",
                    info.has_complex_form ? "yes" : "no", info.summary.c_str());
        if (!info.notes.empty()) std::printf("%17s%s\n", "", info.notes.c_str());
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"qrlab: a numerical laboratory for the value distribution of "
                 "quasimeromorphic mappings"};
    app.require_subcommand(1);

    CommonOptions opt;
    std::string selected;
    for (const std::string& kind : qrlab::experiment_kinds()) {
        CLI::App* sub = app.add_subcommand(kind, experiment_blurb(kind));
        sub->add_option("--config", opt.config_path,
                        "JSON config file ('-' reads stdin)")
            ->required();
        sub->add_option("--seed", opt.seed, "override the config seed")
            ->each([&opt](const std::string&) { opt.seed_set = true; });
        sub->add_option("--threads", opt.threads, "cap worker threads")
            ->each([&opt](const std::string&) { opt.threads_set = true; });
        sub->add_option("--out", opt.out_dir, "output directory")
            ->each([&opt](const std::string&) { opt.out_set = true; });
        sub->add_flag("--plot", opt.plot, "emit static SVG plots");
        sub->callback([&selected, kind] { selected = kind; });
    }
    bool zoo_json = false;
    CLI::App* zoo = app.add_subcommand("zoo", "print the specimen catalog");
    zoo->add_flag("--json", zoo_json, "emit the catalog as JSON");
    zoo->callback([&selected] { selected = "zoo"; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& help) {
        return app.exit(help);
    } catch (const CLI::ParseError& err) {
        app.exit(err);
        return kExitConfig;
    }

    if (selected == "zoo") return print_zoo(zoo_json);
    return run_kind(selected, opt);
}
