#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qh/errors.hpp"
#include "qh/scenario.hpp"
#include "qh/schrodinger.hpp"

using namespace qh;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("qhlab-test-" + std::to_string(::getpid())) / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

// A short two-omega sweep of the free packet; a few seconds of compute.
std::string small_sweep(const std::string& extra = "", const std::string& omega = "100, 200",
                        const std::string& points = "17", const std::string& length = "8") {
    return "[scenario]\nname = small-sweep\nexperiment = omega_sweep\nsystem = scalar\n"
           "[run]\nduration = 0.2\nsnapshots = 2\n"
           "[grid]\npoints = " + points + "\nlength = " + length + "\n"
           "[reference]\npoints = 256\nlength = 32\n"
           "[oscillation]\nomega = " + omega + "\n" + extra;
}

ConfigError config_error(const std::string& text) {
    try {
        (void)load_scenario(Config::parse(text, "t.cfg"));
    } catch (const ConfigError& e) {
        return e;
    }
    FAIL("expected a ConfigError");
    return ConfigError("");
}

int exit_code(const std::string& args) {
    const int st = std::system((std::string(QHLAB_BINARY) + " " + args + " > /dev/null 2>&1").c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

}  // namespace

TEST_CASE("config grammar: sections, comments, strings, lists, typed access") {
    const Config c = Config::parse("# top\n[a]\nx = 1.5 ; trailing\nn = 7\nname = \"say \\\"hi\\\" # not a comment\"\n"
                                   "list = 1, 2.5, -3\nflag = true\n\n[b-2]\nword = plain\n");
    CHECK(c.number("a.x") == 1.5);
    CHECK(c.integer("a.n") == 7);
    CHECK(c.string("a.name") == "say \"hi\" # not a comment");
    CHECK(c.numbers("a.list") == std::vector<double>{1, 2.5, -3});
    CHECK(c.boolean("a.flag", false));
    CHECK(c.string("b-2.word") == "plain");
    CHECK(c.number("a.missing", 4.0) == 4.0);
    CHECK(c.sections() == std::vector<std::string>{"a", "b-2"});

    CHECK_THROWS_AS(Config::parse("x = 1\n"), ConfigError);
    CHECK_THROWS_AS(Config::parse("[a]\nx = 1\nx = 2\n"), ConfigError);
    CHECK_THROWS_AS(Config::parse("[a]\n[a]\n"), ConfigError);
    CHECK_THROWS_AS(Config::parse("[A]\n"), ConfigError);
    CHECK_THROWS_AS(Config::parse("[a]\nx\n"), ConfigError);
    CHECK_THROWS_AS(Config::parse("[a]\nx = \"open\n"), ConfigError);
    CHECK_THROWS_AS(Config::parse("[a]\nx =\n"), ConfigError);
    try {
        Config::parse("[a]\n\nn = 1.5\n", "f.cfg").integer("a.n");
        FAIL("expected a ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.line == 3);
        CHECK(e.field == "a.n");
        CHECK(std::string(e.what()).find("f.cfg:3") != std::string::npos);
    }
}

TEST_CASE("validation happens before compute and names the field") {
    {
        const ConfigError e = config_error(small_sweep("", "-50, 100"));
        CHECK(e.field == "oscillation.omega");
        CHECK(std::string(e.what()).find("must be positive, got -50") != std::string::npos);
        CHECK(e.line > 0);
    }
    CHECK(config_error(small_sweep("", "200, 100")).field == "oscillation.omega");
    CHECK(config_error(small_sweep("[extra]\nunused = 1\n")).field == "extra.unused");
    CHECK(config_error(small_sweep("", "100, 200", "513")).field == "grid.points");
    CHECK(config_error(small_sweep("", "100, 200", "16")).field == "grid.points");  // nodes off the reference
    CHECK(config_error(small_sweep("[initial]\nstate = snapshot\nfile = nowhere.txt\n")).field == "initial.file");
    CHECK(config_error(small_sweep("[potential]\nkind = harmonic, warp\n")).field == "potential.kind");
    CHECK(config_error(small_sweep("[tolerances]\nexponent_min = 2\nexponent_max = 1\n")).field == "tolerances.exponent_max");
    CHECK(config_error(small_sweep("", "1, 2")).field == "run.duration");
    CHECK(config_error("[scenario]\nname = x\nexperiment = nothing\n").field == "scenario.experiment");
    CHECK(config_error("[scenario]\nname = Bad Name\nexperiment = action\n").field == "scenario.name");
}

TEST_CASE("content hash matches git blob hashes") {
    CHECK(content_hash("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
    CHECK(content_hash("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
}

TEST_CASE("a sweep writes its runs, CSV and a deterministic manifest") {
    const Scenario s = load_scenario(Config::parse(small_sweep(), "sweep.cfg"));
    const fs::path a = scratch("sweep-a"), b = scratch("sweep-b");
    const RunOutcome ra = run_scenario(s, a);
    REQUIRE(ra.status != RunStatus::Error);
    const RunOutcome rb = run_scenario(load_scenario(Config::parse(small_sweep(), "sweep.cfg"), {3, std::nullopt}), b);
    CHECK(slurp(a / "manifest.json") == slurp(b / "manifest.json"));

    const auto m = nlohmann::json::parse(slurp(a / "manifest.json"));
    CHECK(m["status"] != "running");
    CHECK(m["runs"].size() == 4);  // hydro and reference per omega
    CHECK(m["metrics"]["paired_runs"] == 2);
    CHECK(m["config_hash"] == content_hash(s.config.source()));
    CHECK(m["artifacts"][0]["file"] == "convergence.csv");
    CHECK(m["artifacts"][0]["sha1"] == content_hash(slurp(a / "convergence.csv")));
    std::istringstream csv(slurp(a / "convergence.csv"));
    std::string line;
    std::getline(csv, line);
    CHECK(line == "omega,error,t_center,periods");
    int rows = 0;
    while (std::getline(csv, line)) ++rows;
    CHECK(rows == 2);

    const RunOutcome rc = run_scenario(load_scenario(Config::parse(small_sweep(), "sweep.cfg"), {std::nullopt, 9}), scratch("sweep-c"));
    CHECK(nlohmann::json::parse(slurp(rc.manifest))["scenario"]["seed"] == 9);
}

TEST_CASE("compare: self distance is zero, finite against the reference, mismatches are errors") {
    const fs::path dir = scratch("compare");
    const RunOutcome r = run_scenario(load_scenario(Config::parse(small_sweep(), "sweep.cfg")), dir);
    for (auto metric : {DistanceMetric::L1, DistanceMetric::L2, DistanceMetric::Linf}) {
        const Comparison self = compare_runs(r.manifest, "hydro-w200", r.manifest, "hydro-w200", metric);
        CHECK(self.max == 0.0);
        CHECK(self.distance.size() == 2);
    }
    const Comparison lo = compare_runs(r.manifest, "hydro-w100", r.manifest, "reference-w100", DistanceMetric::L2);
    const Comparison hi = compare_runs(r.manifest, "hydro-w200", r.manifest, "reference-w200", DistanceMetric::L2);
    CHECK(hi.max > 0.0);
    CHECK(hi.distance.back() < lo.distance.back());

    write_comparison_csv(dir / "c.csv", hi, DistanceMetric::L2);
    const std::string text = slurp(dir / "c.csv");
    CHECK(text.rfind("index,t,L2\n", 0) == 0);
    CHECK(text.find("\nmax,,") != std::string::npos);

    // Same number of snapshots on another grid.
    const RunOutcome other =
        run_scenario(load_scenario(Config::parse(small_sweep("", "100, 200", "9", "4"), "other.cfg")), scratch("compare-other"));
    REQUIRE(other.status != RunStatus::Error);
    CHECK_THROWS_AS(compare_runs(r.manifest, "hydro-w200", other.manifest, "hydro-w200", DistanceMetric::L1), GridMismatch);
    CHECK_THROWS_AS(compare_runs(r.manifest, "nope", r.manifest, "", DistanceMetric::L1), Error);
    CHECK_THROWS_AS(metric_from_string("L3"), ConfigError);
}

TEST_CASE("solver errors are recorded with status and context") {
    // dx = 0.125 is far past the parametric limit at omega = 100.
    std::string text = small_sweep("", "100, 200", "65");
    text.replace(text.find("duration = 0.2"), 14, "duration = 1.0");
    const RunOutcome r = run_scenario(load_scenario(Config::parse(text, "bad.cfg")), scratch("unstable"));
    CHECK(r.status == RunStatus::Error);
    CHECK(r.error.find("omega 100") != std::string::npos);
    const auto m = nlohmann::json::parse(slurp(r.manifest));
    CHECK(m["status"] == "error");
    CHECK(m["error"] == r.error);
}

TEST_CASE("snapshot initial states and tabulated potentials load from files") {
    const fs::path dir = scratch("files");
    const Grid ref = Grid::line(256, 32.0, Boundary::Periodic);
    write_snapshot((dir / "psi.txt").string(), gaussian_packet(ref, {0.5}, {1.0}, {0.0}), 0.0, SnapshotMode::Text);
    write_snapshot((dir / "u.bin").string(), ScalarField::sample(ref, [](const Point& p) { return 0.1 * p[0] * p[0]; }), 0.0,
                   SnapshotMode::Binary);
    const std::string extra =
        "[initial]\nstate = snapshot\nfile = psi.txt\n[potential]\nkind = tabulated\nfile = u.bin\nformat = binary\n";
    std::ofstream(dir / "s.cfg") << small_sweep(extra);
    const Scenario s = load_scenario(Config::load((dir / "s.cfg").string()));
    const RunOutcome r = run_scenario(s, dir / "out");
    CHECK(r.status != RunStatus::Error);
    CHECK(config_error(small_sweep("[initial]\nstate = snapshot\nfile = psi.txt\nformat = binary\n")).field ==
          "initial.file");
}

TEST_CASE("qhlab exit codes") {
    const fs::path dir = scratch("exit");
    std::ofstream(dir / "neg.cfg") << small_sweep("", "-50, 100");
    std::ofstream(dir / "ok.cfg") << small_sweep("[tolerances]\nexponent_min = -10\nexponent_max = 10\n");
    std::ofstream(dir / "red.cfg") << small_sweep("[tolerances]\nexponent_min = 9\nexponent_max = 10\n");
    CHECK(exit_code("validate " + (dir / "neg.cfg").string()) == 2);
    CHECK(exit_code("run " + (dir / "neg.cfg").string() + " --out " + (dir / "neg").string()) == 2);
    CHECK_FALSE(fs::exists(dir / "neg" / "manifest.json"));
    CHECK(exit_code("run " + (dir / "ok.cfg").string() + " --out " + (dir / "ok").string()) == 0);
    CHECK(exit_code("run " + (dir / "red.cfg").string() + " --out " + (dir / "red").string()) == 1);
    CHECK(exit_code("validate criterion-04") == 0);
    CHECK(exit_code("list-scenarios") == 0);
    CHECK(exit_code("compare --a " + (dir / "ok" / "manifest.json").string() + " --b " +
                    (dir / "ok" / "manifest.json").string()) == 0);
    CHECK(exit_code("frobnicate") == 2);
}
