#pragma once

#include "kepmix/common.hpp"
#include "kepmix/effpot.hpp"
#include "kepmix/linflow.hpp"
#include "kepmix/vlasov.hpp"

#include <map>
#include <optional>
#include <string>

namespace kepmix::cli {

/// A config file or flag set failed validation; the message names the field.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

/// Fully resolved description of one run, shared by every scenario.
struct RunConfig {
    std::string scenario;
    effpot::SupportSpec spec{0.05, 0.1, 0.5, 1.0};
    vlasov::BumpProfile profile;
    vlasov::GridCounts counts;
    int bins = 512;                 ///< radial deposition grid size
    linflow::TableConfig table;     ///< node grid for the mode pipelines
    double dtFactor = 0.02;         ///< step as a fraction of the fastest radial period
    double tFinal = 0.0;
    int cadence = 50;               ///< steps between rows, or sample count for mode scenarios
    std::string outDir;
    unsigned long long seed = 0;
    int signCoupling = +1;
    int workers = 1;
};

/// Command-line values that win over anything the file says.
struct FlagOverrides {
    std::optional<std::string> scenario;
    std::optional<std::string> outDir;
    std::optional<int> workers;
    std::optional<unsigned long long> seed;
};

/// Section-qualified key/value pairs ("run.tFinal" -> "100") of a config
/// text.  Lines are `key = value` under `[section]` headers; `#` starts a
/// comment.  Throws ConfigError on malformed lines or duplicate keys.
std::map<std::string, std::string> read_key_values(const std::string& text);

/// Resolved config from text plus overrides.  Precedence: flag over file
/// over the KEPMIX_OUT environment variable (output directory only) over
/// built-in defaults.  Throws ConfigError naming the offending field.
RunConfig parse_config(const std::string& text, const FlagOverrides& flags = {});

/// parse_config on the contents of the file at path.
RunConfig parse_config_file(const std::string& path, const FlagOverrides& flags = {});

/// Text form of a resolved config; parsing it reproduces the config exactly.
std::string render_config(const RunConfig& config);

/// Shortest decimal string that reads back as exactly the same double.
std::string format_double(double v);

/// Runs one scenario, writing its CSV outputs and the resolved-config echo
/// into outDir.  Returns 0 on success, 1 when an in-run invariant assertion
/// fails, 2 on a configuration error.
int run_scenario(const RunConfig& config);

}  // namespace kepmix::cli
