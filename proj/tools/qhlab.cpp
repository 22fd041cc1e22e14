// qhlab: run bundled or custom scenarios and compare their density series.
//
// Exit codes: 0 all checks pass, 1 a check failed or the solver stopped, 2 bad configuration
// or incompatible inputs.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>

#include "qh/errors.hpp"
#include "qh/scenario.hpp"

namespace fs = std::filesystem;

namespace {

#ifndef QHLAB_SCENARIO_DIR
#define QHLAB_SCENARIO_DIR "scenarios"
#endif

fs::path scenario_dir(const std::string& flag) {
    if (!flag.empty()) return flag;
    if (const char* env = std::getenv("QHLAB_SCENARIOS")) return env;
    return QHLAB_SCENARIO_DIR;
}

// A path to a file, or the name of a bundled scenario.
fs::path resolve_config(const std::string& arg, const fs::path& dir) {
    if (fs::is_regular_file(arg)) return arg;
    const fs::path bundled = dir / (arg + ".cfg");
    if (fs::is_regular_file(bundled)) return bundled;
    throw qh::ConfigError("no config file or bundled scenario named '" + arg + "'");
}

fs::path default_out(const std::string& name) {
    const char* env = std::getenv("QHLAB_OUT");
    return fs::path(env && *env ? env : "qhlab-out") / name;
}

void print_checks(const qh::ExperimentOutput& out) {
    for (const auto& c : out.checks) {
        std::cout << (c.pass ? "  pass  " : "  FAIL  ") << c.name << ": " << c.value << " " << c.relation << " "
                  << c.threshold;
        if (c.relation == "in") std::cout << " .. " << c.upper;
        std::cout << "\n";
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Oscillating-hydrodynamics experiments: run scenarios, compare runs"};
    app.require_subcommand(1);
    std::string scen_dir;
    app.add_option("--scenarios-dir", scen_dir, "Directory of bundled scenarios");

    std::string config, out_dir;
    std::size_t workers = 0;
    std::uint64_t seed = 0;
    auto* run = app.add_subcommand("run", "Run a scenario and write its manifest and artifacts");
    run->add_option("--config,config", config, "Config file or bundled scenario name")->required();
    run->add_option("--out", out_dir, "Output directory (default $QHLAB_OUT/<name>)");
    auto* wopt = run->add_option("--workers", workers, "Worker threads for independent runs")->check(CLI::PositiveNumber);
    auto* sopt = run->add_option("--seed-override", seed, "Replace the configured seed");

    std::string vconfig;
    auto* validate = app.add_subcommand("validate", "Parse and validate a config without computing");
    validate->add_option("--config,config", vconfig, "Config file or bundled scenario name")->required();

    auto* list = app.add_subcommand("list-scenarios", "List bundled scenarios");

    std::string ma, mb, ra, rb, metric = "L2", csv;
    auto* compare = app.add_subcommand("compare", "Distances between the density series of two runs");
    compare->add_option("--a", ma, "Manifest A")->required();
    compare->add_option("--b", mb, "Manifest B")->required();
    compare->add_option("--run-a", ra, "Run name in A (default: first run)");
    compare->add_option("--run-b", rb, "Run name in B (default: first run)");
    compare->add_option("--metric", metric, "L1, L2 or Linf");
    compare->add_option("--out", csv, "CSV path (default: stdout only)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    const fs::path dir = scenario_dir(scen_dir);
    try {
        if (*list) {
            if (!fs::is_directory(dir)) throw qh::ConfigError("scenario directory not found: " + dir.string());
            std::vector<fs::path> files;
            for (const auto& e : fs::directory_iterator(dir))
                if (e.path().extension() == ".cfg") files.push_back(e.path());
            std::sort(files.begin(), files.end());
            for (const auto& f : files) {
                const qh::Config cfg = qh::Config::load(f.string());
                std::cout << f.stem().string() << "  [" << cfg.string("scenario.experiment", "?") << "]  "
                          << cfg.string("scenario.description", "") << "\n";
            }
            return 0;
        }
        if (*validate) {
            const qh::Scenario s = qh::load_scenario(qh::Config::load(resolve_config(vconfig, dir).string()));
            std::cout << s.name << ": valid (" << s.experiment << ")\n";
            return 0;
        }
        if (*compare) {
            const qh::DistanceMetric m = qh::metric_from_string(metric);
            const qh::Comparison c = qh::compare_runs(ma, ra, mb, rb, m);
            if (!csv.empty()) qh::write_comparison_csv(csv, c, m);
            for (std::size_t i = 0; i < c.t.size(); ++i) std::cout << i << "  t=" << c.t[i] << "  " << c.distance[i] << "\n";
            std::cout << "max " << c.max << "  mean " << c.mean << "\n";
            return 0;
        }
        qh::ScenarioOverrides ov;
        if (*wopt) ov.workers = workers;
        if (*sopt) ov.seed = seed;
        const qh::Scenario s = qh::load_scenario(qh::Config::load(resolve_config(config, dir).string()), ov);
        const fs::path out = out_dir.empty() ? default_out(s.name) : fs::path(out_dir);
        std::cout << s.name << " (" << s.experiment << ") -> " << out.string() << "\n";
        const qh::RunOutcome r = qh::run_scenario(s, out);
        print_checks(r.output);
        if (r.status == qh::RunStatus::Error) {
            std::cerr << "error: " << r.error << "\n";
            return 1;
        }
        std::cout << (r.status == qh::RunStatus::Pass ? "PASS" : "FAIL") << "  " << r.manifest.string() << "\n";
        return r.status == qh::RunStatus::Pass ? 0 : 1;
    } catch (const qh::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const qh::GridMismatch& e) {
        std::cerr << "incompatible runs: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
