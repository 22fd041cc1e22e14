#include "qh/scenario.hpp"

#include <openssl/sha.h>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "qh/errors.hpp"
#include "qh/ops.hpp"

namespace qh {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const char* manifest_format = "qhlab-manifest-1";

Check make(std::string name, double value, std::string rel, double threshold, double upper, bool pass) {
    Check c;
    c.name = std::move(name);
    c.value = value;
    c.relation = std::move(rel);
    c.threshold = threshold;
    c.upper = upper;
    c.pass = pass;
    return c;
}

bool valid_name(const std::string& s) {
    if (s.empty()) return false;
    for (char ch : s)
        if (!(std::islower(static_cast<unsigned char>(ch)) || std::isdigit(static_cast<unsigned char>(ch)) || ch == '-' ||
              ch == '_'))
            return false;
    return true;
}

json grid_json(const Grid& g) {
    json axes = json::array();
    for (std::size_t a = 0; a < g.dims(); ++a) {
        const Axis& ax = g.axis(a);
        axes.push_back({{"points", ax.points}, {"length", ax.length}, {"origin", ax.origin}, {"boundary", to_string(ax.boundary)}});
    }
    return axes;
}

json check_json(const Check& c) {
    json j{{"name", c.name}, {"value", c.value}, {"relation", c.relation}, {"threshold", c.threshold}, {"pass", c.pass}};
    if (c.relation == "in") j["upper"] = c.upper;
    return j;
}

std::string read_file(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) throw Error("cannot read " + p.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::string file_hash(const fs::path& p) { return content_hash(read_file(p)); }

const char* status_name(RunStatus s) {
    switch (s) {
        case RunStatus::Pass: return "pass";
        case RunStatus::Fail: return "fail";
        default: return "error";
    }
}

json scenario_json(const Scenario& s) {
    json cfg = json::object();
    for (const auto& k : s.config.keys()) cfg[k] = s.config.entry(k).text;
    return {{"name", s.name},
            {"experiment", s.experiment},
            {"system", s.system},
            {"description", s.description},
            {"seed", s.seed},
            {"snapshot_format", s.snapshot_mode == SnapshotMode::Text ? "text" : "binary"},
            {"config", cfg}};
}

void write_manifest(const fs::path& path, const json& m) { write_atomically(path, m.dump(2) + "\n"); }

}  // namespace

Check Check::at_most(std::string name, double value, double limit) {
    return make(std::move(name), value, "<=", limit, 0.0, value <= limit);
}

Check Check::at_least(std::string name, double value, double limit) {
    return make(std::move(name), value, ">=", limit, 0.0, value >= limit);
}

Check Check::below(std::string name, double value, double limit) {
    return make(std::move(name), value, "<", limit, 0.0, value < limit);
}

Check Check::within(std::string name, double value, double lo, double hi) {
    return make(std::move(name), value, "in", lo, hi, value >= lo && value <= hi);
}

Check Check::holds(std::string name, bool ok) { return make(std::move(name), ok ? 1.0 : 0.0, "==", 1.0, 0.0, ok); }

bool ExperimentOutput::passed() const {
    if (checks.empty()) return false;
    for (const auto& c : checks)
        if (!c.pass) return false;
    return true;
}

std::filesystem::path ExperimentContext::path(const std::string& relative) const {
    const fs::path p = out / relative;
    fs::create_directories(p.parent_path());
    return p;
}

std::string ExperimentContext::snapshot(const std::string& run, std::size_t index, const ScalarField& f, double t) const {
    std::ostringstream name;
    name << "snapshots/" << run << "/" << std::setw(4) << std::setfill('0') << index
         << (snapshot_mode == SnapshotMode::Text ? ".txt" : ".bin");
    write_snapshot(path(name.str()).string(), f, t, snapshot_mode);
    return name.str();
}

Scenario load_scenario(const Config& cfg, const ScenarioOverrides& overrides) {
    Scenario s;
    s.config = cfg;
    const Config& c = s.config;
    s.name = c.string("scenario.name");
    if (!valid_name(s.name)) c.fail("scenario.name", "use lowercase letters, digits, '-' and '_'");
    s.experiment = c.string("scenario.experiment");
    s.description = c.string("scenario.description", "");
    s.system = c.string("scenario.system", "");
    const std::int64_t workers = c.integer("run.workers", 1);
    if (workers < 1 || workers > 256) c.fail("run.workers", "must lie in [1, 256], got " + std::to_string(workers));
    s.workers = static_cast<std::size_t>(workers);
    const std::int64_t seed = c.integer("run.seed", 1);
    if (seed < 0) c.fail("run.seed", "must not be negative");
    s.seed = static_cast<std::uint64_t>(seed);
    const std::string mode = c.string("output.snapshots", "text");
    if (mode == "text") s.snapshot_mode = SnapshotMode::Text;
    else if (mode == "binary") s.snapshot_mode = SnapshotMode::Binary;
    else c.fail("output.snapshots", "expected text or binary, got '" + mode + "'");
    if (overrides.workers) {
        if (*overrides.workers < 1) throw ConfigError("--workers must be at least 1", 0, "run.workers");
        s.workers = *overrides.workers;
    }
    if (overrides.seed) s.seed = *overrides.seed;

    const ExperimentKind* kind = nullptr;
    for (const auto& k : experiment_kinds())
        if (k.name == s.experiment) kind = &k;
    if (!kind) {
        std::string names;
        for (const auto& k : experiment_kinds()) names += (names.empty() ? "" : ", ") + k.name;
        c.fail("scenario.experiment", "unknown experiment '" + s.experiment + "' (known: " + names + ")");
    }
    s.job = kind->prepare(c);
    if (s.system.empty()) s.system = c.string("scenario.system", "");
    c.reject_unused();
    return s;
}

std::string content_hash(const std::string& bytes) {
    const std::string blob = "blob " + std::to_string(bytes.size()) + std::string(1, '\0') + bytes;
    unsigned char md[SHA_DIGEST_LENGTH];
    SHA1(reinterpret_cast<const unsigned char*>(blob.data()), blob.size(), md);
    std::ostringstream os;
    for (unsigned char b : md) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(b);
    return os.str();
}

void write_atomically(const std::filesystem::path& path, const std::string& text) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw Error("cannot write " + tmp.string());
        f << text;
        f.flush();
        if (!f) throw Error("cannot write " + tmp.string());
    }
    fs::rename(tmp, path);
}

RunOutcome run_scenario(const Scenario& s, const std::filesystem::path& out) {
    fs::create_directories(out);
    RunOutcome res;
    res.manifest = out / "manifest.json";
    json m;
    m["format"] = manifest_format;
    m["scenario"] = scenario_json(s);
    m["config_hash"] = content_hash(s.config.source());
    m["status"] = "running";
    write_manifest(res.manifest, m);

    ExperimentContext ctx;
    ctx.out = out;
    ctx.workers = s.workers;
    ctx.seed = s.seed;
    ctx.snapshot_mode = s.snapshot_mode;
    try {
        res.output = s.job(ctx);
        res.status = res.output.passed() ? RunStatus::Pass : RunStatus::Fail;
    } catch (const std::exception& e) {
        res.status = RunStatus::Error;
        res.error = e.what();
    }

    json checks = json::array();
    for (const auto& c : res.output.checks) checks.push_back(check_json(c));
    json runs = json::array();
    for (const auto& r : res.output.runs) {
        json snaps = json::array();
        for (const auto& [t, file] : r.series) snaps.push_back({{"t", t}, {"file", file}, {"sha1", file_hash(out / file)}});
        runs.push_back({{"name", r.name}, {"kind", r.kind}, {"grid", grid_json(r.grid)}, {"info", r.info}, {"snapshots", snaps}});
    }
    json artifacts = json::array();
    for (const auto& f : res.output.files) artifacts.push_back({{"file", f}, {"sha1", file_hash(out / f)}});
    m["status"] = status_name(res.status);
    if (res.status == RunStatus::Error) m["error"] = res.error;
    m["checks"] = checks;
    m["metrics"] = res.output.metrics;
    m["runs"] = runs;
    m["artifacts"] = artifacts;
    write_manifest(res.manifest, m);
    return res;
}

DistanceMetric metric_from_string(const std::string& s) {
    if (s == "L1" || s == "l1") return DistanceMetric::L1;
    if (s == "L2" || s == "l2") return DistanceMetric::L2;
    if (s == "Linf" || s == "linf") return DistanceMetric::Linf;
    throw ConfigError("unknown metric '" + s + "' (expected L1, L2 or Linf)", 0, "metric");
}

namespace {

struct LoadedRun {
    fs::path dir;
    SnapshotMode mode = SnapshotMode::Text;
    json run;
};

LoadedRun load_run(const fs::path& manifest, const std::string& name) {
    json m;
    try {
        m = json::parse(read_file(manifest));
    } catch (const json::exception& e) {
        throw Error(manifest.string() + ": not a manifest: " + e.what());
    }
    if (m.value("format", "") != manifest_format) throw Error(manifest.string() + ": unknown manifest format");
    LoadedRun r;
    r.dir = manifest.parent_path();
    r.mode = m["scenario"].value("snapshot_format", "text") == "binary" ? SnapshotMode::Binary : SnapshotMode::Text;
    const json& runs = m["runs"];
    if (!runs.is_array() || runs.empty()) throw Error(manifest.string() + ": no runs recorded");
    if (name.empty()) {
        r.run = runs.front();
        return r;
    }
    for (const auto& j : runs)
        if (j["name"] == name) {
            r.run = j;
            return r;
        }
    throw Error(manifest.string() + ": no run named '" + name + "'");
}

}  // namespace

Comparison compare_runs(const std::filesystem::path& manifest_a, const std::string& run_a,
                        const std::filesystem::path& manifest_b, const std::string& run_b, DistanceMetric metric) {
    const LoadedRun a = load_run(manifest_a, run_a), b = load_run(manifest_b, run_b);
    const json &sa = a.run["snapshots"], &sb = b.run["snapshots"];
    if (sa.size() != sb.size())
        throw GridMismatch("runs have " + std::to_string(sa.size()) + " and " + std::to_string(sb.size()) + " snapshots");
    Comparison c;
    for (std::size_t i = 0; i < sa.size(); ++i) {
        const double ta = sa[i]["t"], tb = sb[i]["t"];
        if (std::abs(ta - tb) > 1e-9 * std::max(1.0, std::abs(ta)))
            throw GridMismatch("snapshot " + std::to_string(i) + " times differ: " + std::to_string(ta) + " vs " + std::to_string(tb));
        const ScalarField fa = read_snapshot((a.dir / sa[i]["file"].get<std::string>()).string(), a.mode).scalar();
        const ScalarField fb = read_snapshot((b.dir / sb[i]["file"].get<std::string>()).string(), b.mode).scalar();
        if (!(fa.grid() == fb.grid()))
            throw GridMismatch("grids differ: " + fa.grid().describe() + " vs " + fb.grid().describe());
        double d = 0.0;
        switch (metric) {
            case DistanceMetric::L1: d = l1_distance(fa, fb); break;
            case DistanceMetric::L2: d = l2_norm(fa - fb); break;
            case DistanceMetric::Linf: d = max_abs(fa, fb); break;
        }
        c.t.push_back(ta);
        c.distance.push_back(d);
        c.max = std::max(c.max, d);
        c.mean += d;
    }
    if (!c.distance.empty()) c.mean /= static_cast<double>(c.distance.size());
    return c;
}

void write_comparison_csv(const std::filesystem::path& path, const Comparison& c, DistanceMetric metric) {
    std::ostringstream os;
    os << std::setprecision(17);
    const char* name = metric == DistanceMetric::L1 ? "L1" : metric == DistanceMetric::L2 ? "L2" : "Linf";
    os << "index,t," << name << "\n";
    for (std::size_t i = 0; i < c.t.size(); ++i) os << i << "," << c.t[i] << "," << c.distance[i] << "\n";
    os << "max,," << c.max << "\n";
    os << "mean,," << c.mean << "\n";
    write_atomically(path, os.str());
}

}  // namespace qh
