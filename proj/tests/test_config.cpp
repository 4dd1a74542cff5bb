#include "doctest.h"
#include "kepmix/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace kepmix;
using namespace kepmix::cli;

namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

long line_count(const std::string& text) {
    long n = 0;
    for (char ch : text)
        if (ch == '\n')
            ++n;
    return n;
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::path("cfg-test-out") / name;
    fs::remove_all(dir);
    return dir;
}

/// Scoped override of one environment variable.
class EnvGuard {
public:
    EnvGuard(const char* name, const char* value) : name_(name) {
        const char* old = std::getenv(name);
        if (old)
            saved_ = old;
        had_ = old != nullptr;
        if (value)
            setenv(name, value, 1);
        else
            unsetenv(name);
    }
    ~EnvGuard() {
        if (had_)
            setenv(name_.c_str(), saved_.c_str(), 1);
        else
            unsetenv(name_.c_str());
    }

private:
    std::string name_, saved_;
    bool had_ = false;
};

const char* const MINIMAL =
    "[run]\n"
    "scenario = period-table\n"
    "tFinal = 5\n";

}  // namespace

TEST_CASE("config parser reads sections and rejects malformed input") {
    const auto kv = read_key_values("# top comment\n"
                                    "[run]\n"
                                    "scenario = period-table  # trailing\n"
                                    "tFinal=5\n"
                                    "\n"
                                    "[support]\n"
                                    "  l1 =  0.5\n");
    CHECK(kv.size() == 3);
    CHECK(kv.at("run.scenario") == "period-table");
    CHECK(kv.at("run.tFinal") == "5");
    CHECK(kv.at("support.l1") == "0.5");

    CHECK_THROWS_AS(read_key_values("key = 1\n"), ConfigError);
    CHECK_THROWS_AS(read_key_values("[run]\nscenario period-table\n"), ConfigError);
    CHECK_THROWS_AS(read_key_values("[run\nscenario = x\n"), ConfigError);
    CHECK_THROWS_AS(read_key_values("[run]\na = 1\na = 2\n"), ConfigError);
}

TEST_CASE("missing required fields are named") {
    try {
        parse_config("[run]\ntFinal = 5\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("run.scenario") != std::string::npos);
    }
    try {
        parse_config("[run]\nscenario = period-table\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("run.tFinal") != std::string::npos);
    }
    try {
        parse_config("[run]\nscenario = period-table\ntFinal = 5\nbogus = 1\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("run.bogus") != std::string::npos);
    }
}

TEST_CASE("minimal valid file applies defaults") {
    const EnvGuard env("KEPMIX_OUT", nullptr);
    const RunConfig c = parse_config(MINIMAL);
    CHECK(c.scenario == "period-table");
    CHECK(c.tFinal == 5.0);
    CHECK(c.bins == 512);
    CHECK(c.table.K == 32);
    CHECK(c.table.nH == 64);
    CHECK(c.table.nM == 64);
    CHECK(c.table.nQ == 256);
    CHECK(c.dtFactor == 0.02);
    CHECK(c.cadence == 50);
    CHECK(c.workers == 1);
    CHECK(c.signCoupling == 1);
    CHECK(c.spec.c == 0.05);
    CHECK(c.spec.h == 0.1);
    CHECK(c.spec.l1 == 0.5);
    CHECK(c.spec.l2 == 1.0);
    CHECK(c.profile.amplitude == 1.0);
    CHECK(c.profile.exponent == 3);
    CHECK(c.outDir == ".");
}

TEST_CASE("output directory resolves flag over file over environment") {
    const EnvGuard env("KEPMIX_OUT", "env-dir");
    CHECK(parse_config(MINIMAL).outDir == "env-dir");

    const std::string withDir = std::string(MINIMAL) + "outDir = file-dir\n";
    CHECK(parse_config(withDir).outDir == "file-dir");

    FlagOverrides flags;
    flags.outDir = "flag-dir";
    CHECK(parse_config(withDir, flags).outDir == "flag-dir");
}

TEST_CASE("flags win over file values and the echo records the override") {
    const std::string text = std::string(MINIMAL) + "workers = 2\nseed = 3\n";
    FlagOverrides flags;
    flags.scenario = "transform-check";
    flags.workers = 4;
    flags.seed = 9;
    const RunConfig c = parse_config(text, flags);
    CHECK(c.scenario == "transform-check");
    CHECK(c.workers == 4);
    CHECK(c.seed == 9);
    CHECK(c.table.workers == 4);

    const std::string echo = render_config(c);
    CHECK(echo.find("scenario = transform-check") != std::string::npos);
    CHECK(echo.find("workers = 4") != std::string::npos);
    CHECK(echo.find("seed = 9") != std::string::npos);
}

TEST_CASE("render and parse round trip exactly") {
    const EnvGuard env("KEPMIX_OUT", nullptr);
    RunConfig c = parse_config(MINIMAL);
    c.tFinal = 0.1 + 0.2;
    c.dtFactor = 1.0 / 3.0;
    c.spec.c = 0.05000000000000001;
    c.seed = 123456789012345ull;
    c.outDir = "round-trip";
    const std::string once = render_config(c);
    const std::string twice = render_config(parse_config(once));
    CHECK(once == twice);
}

TEST_CASE("validation rejects bad field values") {
    auto with = [](const std::string& extra) {
        return std::string(MINIMAL) + extra;
    };
    CHECK_THROWS_AS(parse_config(with("tFinal = -1\n")), ConfigError);
    CHECK_THROWS_AS(parse_config(with("dtFactor = 0\n")), ConfigError);
    CHECK_THROWS_AS(parse_config(with("signCoupling = 2\n")), ConfigError);
    CHECK_THROWS_AS(parse_config(with("tFinal = nope\n")), ConfigError);
    CHECK_THROWS_AS(parse_config(with("[support]\nl1 = 2\nl2 = 1\n")), ConfigError);
    CHECK_THROWS_AS(parse_config(with("[grid]\nbins = 4\n")), ConfigError);
    CHECK_THROWS_AS(parse_config(with("[table]\nK = 32\nnQ = 64\n")), ConfigError);
    CHECK_THROWS_AS(parse_config("[run]\nscenario = warp-drive\ntFinal = 5\n"),
                    ConfigError);
    FlagOverrides flags;
    flags.workers = 0;
    CHECK_THROWS_AS(parse_config(MINIMAL, flags), ConfigError);
}

TEST_CASE("period table scenario emits the grid and its echo reruns") {
    const fs::path dir = fresh_dir("period");
    RunConfig c = parse_config(MINIMAL);
    c.outDir = dir.string();
    c.counts = {6, 5, 8};
    REQUIRE(run_scenario(c) == 0);

    const std::string csv = slurp(dir / "period_table.csv");
    CHECK(line_count(csv) == 1 + 6 * 5);
    CHECK(csv.rfind("H,L,periodNumeric,periodKepler,relErr\n", 0) == 0);

    const RunConfig echoed = parse_config_file((dir / "config.resolved").string());
    CHECK(render_config(echoed) == render_config(c));
}

TEST_CASE("orbit check scenario emits per step rows") {
    const fs::path dir = fresh_dir("orbit");
    RunConfig c = parse_config(MINIMAL);
    c.scenario = "orbit-check";
    c.outDir = dir.string();
    c.profile.amplitude = 0.0;
    c.tFinal = 30.0;
    c.cadence = 20;
    c.dtFactor = 0.005;
    REQUIRE(run_scenario(c) == 0);

    const std::string csv = slurp(dir / "orbit.csv");
    CHECK(csv.rfind("t,r,w,Q,H,Jdet\n", 0) == 0);
    CHECK(line_count(csv) >= 5);
}

TEST_CASE("transform check scenario validates identities") {
    const fs::path dir = fresh_dir("transform");
    RunConfig c = parse_config(MINIMAL);
    c.scenario = "transform-check";
    c.outDir = dir.string();
    c.counts = {8, 8, 8};
    c.seed = 7;
    REQUIRE(run_scenario(c) == 0);
    CHECK(line_count(slurp(dir / "transform_check.csv")) == 1 + 64);
}

TEST_CASE("linear decay scenario emits the decay csv and fit") {
    const fs::path dir = fresh_dir("decay");
    RunConfig c = parse_config(MINIMAL);
    c.scenario = "linear-decay";
    c.outDir = dir.string();
    c.tFinal = 60.0;
    c.cadence = 16;
    c.table = {4, 24, 8, 32, 1};
    REQUIRE(run_scenario(c) == 0);

    const std::string csv = slurp(dir / "decay.csv");
    CHECK(line_count(csv) == 1 + 16);
    CHECK(csv.find("supRate") != std::string::npos);

    const std::string fit = slurp(dir / "decay_fit.csv");
    CHECK(fit.rfind("t0,t1,exponent,residual,floorFlag\n", 0) == 0);
    std::istringstream row(fit.substr(fit.find('\n') + 1));
    std::string cell;
    for (int i = 0; i < 3; ++i)
        REQUIRE(std::getline(row, cell, ','));
    CHECK(std::stod(cell) < 0.0);
}

TEST_CASE("nonlinear run scenario holds mass and support and repeats bitwise") {
    const fs::path dir = fresh_dir("nonlinear");
    RunConfig c = parse_config(MINIMAL);
    c.scenario = "nonlinear-run";
    c.outDir = dir.string();
    c.profile.amplitude = 1e-4;
    c.counts = {8, 8, 8};
    c.tFinal = 2.0;
    c.cadence = 5;
    c.workers = 2;
    REQUIRE(run_scenario(c) == 0);
    const std::string summary = slurp(dir / "summary.csv");
    const std::string tracks = slurp(dir / "tracks.csv");
    const std::string decay = slurp(dir / "decay.csv");
    CHECK(line_count(summary) >= 3);
    CHECK(line_count(decay) >= 3);

    REQUIRE(run_scenario(c) == 0);
    CHECK(slurp(dir / "summary.csv") == summary);
    CHECK(slurp(dir / "tracks.csv") == tracks);
    CHECK(slurp(dir / "decay.csv") == decay);
}

TEST_CASE("run scenario reports config errors as exit code 2") {
    RunConfig c = parse_config(MINIMAL);
    c.scenario = "no-such-scenario";
    c.outDir = fresh_dir("bad").string();
    CHECK(run_scenario(c) == 2);

    const fs::path blocked = fresh_dir("blocked");
    fs::create_directories(blocked);
    std::ofstream(blocked / "file") << "x";
    RunConfig good = parse_config(MINIMAL);
    good.outDir = (blocked / "file" / "sub").string();
    CHECK(run_scenario(good) == 2);
}
