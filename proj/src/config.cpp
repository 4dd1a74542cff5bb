#include "kepmix/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace kepmix::cli {

namespace {

const char* const SCENARIOS[] = {"orbit-check",  "period-table", "transform-check",
                                 "linear-decay", "frozen-decay", "nonlinear-run"};

std::string trim(const std::string& s) {
    const size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return "";
    const size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& text) {
    double v = 0.0;
    const char* end = text.data() + text.size();
    const auto res = std::from_chars(text.data(), end, v);
    if (res.ec != std::errc{} || res.ptr != end)
        throw ConfigError("field '" + key + "': not a number: '" + text + "'");
    return v;
}

long long parse_int(const std::string& key, const std::string& text) {
    long long v = 0;
    const char* end = text.data() + text.size();
    const auto res = std::from_chars(text.data(), end, v);
    if (res.ec != std::errc{} || res.ptr != end)
        throw ConfigError("field '" + key + "': not an integer: '" + text + "'");
    return v;
}

int parse_count(const std::string& key, const std::string& text) {
    const long long v = parse_int(key, text);
    if (v < 1 || v > 1'000'000'000)
        throw ConfigError("field '" + key + "': must be a positive count");
    return static_cast<int>(v);
}

void apply_key(RunConfig& c, const std::string& key, const std::string& val) {
    if (key == "run.scenario")
        c.scenario = val;
    else if (key == "run.tFinal")
        c.tFinal = parse_double(key, val);
    else if (key == "run.cadence")
        c.cadence = parse_count(key, val);
    else if (key == "run.dtFactor")
        c.dtFactor = parse_double(key, val);
    else if (key == "run.outDir")
        c.outDir = val;
    else if (key == "run.seed")
        c.seed = static_cast<unsigned long long>(parse_int(key, val));
    else if (key == "run.signCoupling")
        c.signCoupling = static_cast<int>(parse_int(key, val));
    else if (key == "run.workers")
        c.workers = parse_count(key, val);
    else if (key == "support.c")
        c.spec.c = parse_double(key, val);
    else if (key == "support.h")
        c.spec.h = parse_double(key, val);
    else if (key == "support.l1")
        c.spec.l1 = parse_double(key, val);
    else if (key == "support.l2")
        c.spec.l2 = parse_double(key, val);
    else if (key == "profile.amplitude")
        c.profile.amplitude = parse_double(key, val);
    else if (key == "profile.exponent")
        c.profile.exponent = parse_count(key, val);
    else if (key == "counts.nH")
        c.counts.nH = parse_count(key, val);
    else if (key == "counts.nL")
        c.counts.nL = parse_count(key, val);
    else if (key == "counts.nQ")
        c.counts.nQ = parse_count(key, val);
    else if (key == "grid.bins")
        c.bins = parse_count(key, val);
    else if (key == "table.K")
        c.table.K = parse_count(key, val);
    else if (key == "table.nH")
        c.table.nH = parse_count(key, val);
    else if (key == "table.nM")
        c.table.nM = parse_count(key, val);
    else if (key == "table.nQ")
        c.table.nQ = parse_count(key, val);
    else
        throw ConfigError("unknown field '" + key + "'");
}

void validate(const RunConfig& c) {
    if (c.scenario.empty())
        throw ConfigError("missing required field 'run.scenario'");
    if (std::find(std::begin(SCENARIOS), std::end(SCENARIOS), c.scenario) ==
        std::end(SCENARIOS))
        throw ConfigError("field 'run.scenario': unknown scenario '" + c.scenario + "'");
    if (!(c.tFinal > 0.0))
        throw ConfigError("missing required field 'run.tFinal' (must be > 0)");
    if (!(c.dtFactor > 0.0 && c.dtFactor <= 0.5))
        throw ConfigError("field 'run.dtFactor': must be in (0, 0.5]");
    if (c.signCoupling != 1 && c.signCoupling != -1)
        throw ConfigError("field 'run.signCoupling': must be +1 or -1");
    if (c.workers < 1)
        throw ConfigError("field 'run.workers': must be >= 1");
    if (!(c.spec.c > 0.0 && c.spec.h > 0.0))
        throw ConfigError("field 'support.c'/'support.h': must be positive");
    if (!(c.spec.l1 > 0.0 && c.spec.l1 < c.spec.l2))
        throw ConfigError("field 'support.l1'/'support.l2': need 0 < l1 < l2");
    if (!(c.spec.hLo(c.spec.l2) < c.spec.hHi()))
        throw ConfigError("field 'support.*': the (H, L) window is empty");
    if (!(c.profile.amplitude >= 0.0))
        throw ConfigError("field 'profile.amplitude': must be >= 0");
    if (c.bins < 8)
        throw ConfigError("field 'grid.bins': must be >= 8");
    if (c.table.nQ < 4 * c.table.K + 2)
        throw ConfigError("field 'table.nQ': must be >= 4 K + 2");
}

}  // namespace

std::map<std::string, std::string> read_key_values(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line, section;
    int lineNo = 0;
    while (std::getline(in, line)) {
        ++lineNo;
        const size_t hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        line = trim(line);
        if (line.empty())
            continue;
        if (line.front() == '[') {
            if (line.back() != ']' || line.size() < 3)
                throw ConfigError("line " + std::to_string(lineNo) +
                                  ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineNo) + ": expected key = value");
        if (section.empty())
            throw ConfigError("line " + std::to_string(lineNo) + ": key before any section");
        const std::string key = section + "." + trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (!kv.emplace(key, val).second)
            throw ConfigError("line " + std::to_string(lineNo) + ": duplicate field '" +
                              key + "'");
    }
    return kv;
}

RunConfig parse_config(const std::string& text, const FlagOverrides& flags) {
    RunConfig c;
    bool fileOutDir = false;
    for (const auto& [key, val] : read_key_values(text)) {
        apply_key(c, key, val);
        if (key == "run.outDir")
            fileOutDir = true;
    }
    if (flags.scenario)
        c.scenario = *flags.scenario;
    if (flags.outDir)
        c.outDir = *flags.outDir;
    else if (!fileOutDir) {
        const char* env = std::getenv("KEPMIX_OUT");
        c.outDir = env ? env : ".";
    }
    if (flags.workers)
        c.workers = *flags.workers;
    if (flags.seed)
        c.seed = *flags.seed;
    c.table.workers = c.workers;
    validate(c);
    return c;
}

RunConfig parse_config_file(const std::string& path, const FlagOverrides& flags) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot read config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), flags);
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string render_config(const RunConfig& c) {
    std::ostringstream out;
    out << "[run]\n"
        << "scenario = " << c.scenario << "\n"
        << "tFinal = " << format_double(c.tFinal) << "\n"
        << "cadence = " << c.cadence << "\n"
        << "dtFactor = " << format_double(c.dtFactor) << "\n"
        << "outDir = " << c.outDir << "\n"
        << "seed = " << c.seed << "\n"
        << "signCoupling = " << c.signCoupling << "\n"
        << "workers = " << c.workers << "\n"
        << "[support]\n"
        << "c = " << format_double(c.spec.c) << "\n"
        << "h = " << format_double(c.spec.h) << "\n"
        << "l1 = " << format_double(c.spec.l1) << "\n"
        << "l2 = " << format_double(c.spec.l2) << "\n"
        << "[profile]\n"
        << "amplitude = " << format_double(c.profile.amplitude) << "\n"
        << "exponent = " << c.profile.exponent << "\n"
        << "[counts]\n"
        << "nH = " << c.counts.nH << "\n"
        << "nL = " << c.counts.nL << "\n"
        << "nQ = " << c.counts.nQ << "\n"
        << "[grid]\n"
        << "bins = " << c.bins << "\n"
        << "[table]\n"
        << "K = " << c.table.K << "\n"
        << "nH = " << c.table.nH << "\n"
        << "nM = " << c.table.nM << "\n"
        << "nQ = " << c.table.nQ << "\n";
    return out.str();
}

}  // namespace kepmix::cli
