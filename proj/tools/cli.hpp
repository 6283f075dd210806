#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace aerobroker::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitOperation = 1;  // machine-parsable JSON error on stderr
inline constexpr int kExitUsage = 2;
inline constexpr int kExitStartup = 3;  // config, event store or ledger refused to load

/// Runs one CLI invocation (arguments without the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

struct ScenarioResult {
    bool ok = false;
    std::filesystem::path data_dir;
    std::string failure;
    std::size_t steps = 0;
};

/// Executes a scenario script (built-in name or file path) against a fresh
/// data directory, printing a transcript.
///
/// Script lines:
///   clock <epoch-seconds>          set the scenario clock
///   advance <n>[s|m|h|d]           move the clock forward
///   [@name =] <cli arguments>      run a command; capture its JSON result
///   expect <lhs> == <rhs>          compare after substitution
///   expect-error <CODE> <cli ...>  command must fail with this error code
///   print <text>
/// `${name.path.0.field}` substitutes a captured value; `${now}` the clock.
ScenarioResult run_scenario(std::string_view name_or_path, std::ostream& out,
                            std::optional<std::filesystem::path> data_dir = std::nullopt);

std::vector<std::string> builtin_scenarios();
std::optional<std::string_view> builtin_scenario(std::string_view name);

/// Shell-like word splitting with single and double quotes.
std::vector<std::string> split_words(std::string_view line);

}  // namespace aerobroker::cli
