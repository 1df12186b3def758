#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "lcgf/errors.hpp"
#include "lcgf/harness.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

struct Flags {
    std::string config;
    std::uint64_t seed = 0;
    int workers = 1;
    std::string out;
    bool keep_trajectories = false;
};

void add_run_flags(CLI::App* cmd, Flags& f) {
    cmd->add_option("--config", f.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--seed", f.seed, "override the config seed");
    cmd->add_option("--workers", f.workers, "worker threads")->check(CLI::Range(1, 1024));
    cmd->add_option("--out", f.out, "output directory (overrides the config)");
    cmd->add_flag("--keep-trajectories", f.keep_trajectories, "write argmax trajectories for BRW models");
}

lcgf::RunOptions options(const Flags& f, const CLI::App* cmd) {
    lcgf::RunOptions o;
    if (cmd->count("--seed")) o.seed = f.seed;
    if (!f.out.empty()) o.out = f.out;
    o.workers = f.workers;
    o.keep_trajectories = f.keep_trajectories;
    return o;
}

void print_manifest(const nlohmann::json& m, const std::string& dir) {
    std::printf("kind        %s\n", m.value("kind", "?").c_str());
    std::printf("seed        %llu\n", static_cast<unsigned long long>(m.value("seed", std::uint64_t{0})));
    std::printf("version     %s\n", m.value("version", "?").c_str());
    std::printf("timestamp   %s\n", m.value("timestamp", "?").c_str());
    std::printf("config      %s\n", m.value("config_hash", "?").c_str());
    if (m.contains("rng"))
        std::printf("rng         %llu streams, %llu draws\n",
                    static_cast<unsigned long long>(m["rng"].value("streams", std::uint64_t{0})),
                    static_cast<unsigned long long>(m["rng"].value("draws", std::uint64_t{0})));
    for (const auto& s : m.value("stages", nlohmann::json::array()))
        std::printf("stage       %-28s %9.3f s\n", s.value("stage", "").c_str(), s.value("seconds", 0.0));
    for (const auto& f : m.value("files", nlohmann::json::array()))
        std::printf("file        %-28s %s\n", f.value("path", "").c_str(), f.value("sha256", "").c_str());
    if (!dir.empty()) {
        const auto bad = lcgf::verify_manifest(dir);
        std::printf("digests     %s\n", bad.empty() ? "ok" : "MISMATCH");
        for (const auto& b : bad) std::printf("  mismatch  %s\n", b.c_str());
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"log-correlated Gaussian field experiments"};
    app.require_subcommand(1);
    Flags run_f, sweep_f;
    auto* run = app.add_subcommand("run", "run one experiment");
    add_run_flags(run, run_f);
    auto* sweep = app.add_subcommand("sweep", "run every point of the config's parameter grid");
    add_run_flags(sweep, sweep_f);
    std::string validate_path;
    auto* validate = app.add_subcommand("validate-config", "check a config and report field errors");
    validate->add_option("--config", validate_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    std::string manifest_path;
    bool verify = false;
    auto* show = app.add_subcommand("show-manifest", "print a run manifest");
    show->add_option("path", manifest_path, "run directory or manifest.json")->required();
    show->add_flag("--verify", verify, "re-hash the listed files");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*run) {
            const auto cfg = lcgf::load_config(run_f.config);
            const auto m = lcgf::run_experiment(cfg, options(run_f, run));
            std::cout << m["summary"].dump(2) << '\n';
        } else if (*sweep) {
            const auto cfg = lcgf::load_config(sweep_f.config);
            const auto ms = lcgf::sweep_experiment(cfg, options(sweep_f, sweep));
            std::cout << ms.size() << " runs\n";
        } else if (*validate) {
            const auto cfg = lcgf::load_config(validate_path);
            std::cout << "ok: kind " << cfg.kind << '\n';
        } else if (*show) {
            const auto m = lcgf::read_manifest(manifest_path);
            std::string dir;
            if (verify) {
                dir = manifest_path;
                const auto pos = dir.rfind("manifest.json");
                if (pos != std::string::npos && pos + 13 == dir.size()) dir = dir.substr(0, pos).empty() ? "." : dir.substr(0, pos);
            }
            print_manifest(m, dir);
        }
    } catch (const lcgf::ConfigError& e) {
        std::cerr << e.what() << '\n';
        return kExitConfig;
    } catch (const lcgf::StageError& e) {
        std::cerr << "numeric failure in stage " << e.what() << '\n';
        return kExitNumeric;
    } catch (const lcgf::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const lcgf::DomainError& e) {
        std::cerr << e.what() << '\n';
        return kExitConfig;
    } catch (const lcgf::SizeError& e) {
        std::cerr << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return kExitOk;
}
