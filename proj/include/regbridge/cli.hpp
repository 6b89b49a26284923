#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "regbridge/montecarlo.hpp"
#include "regbridge/regression.hpp"

namespace regbridge::cli {

/// Bad flag, bad value or violated precondition. Maps to exit code 2.
class UsageError : public std::runtime_error {
public:
    UsageError(std::string key, const std::string& problem, std::string example)
        : std::runtime_error("--" + key + ": " + problem + (example.empty() ? "" : " (e.g. " + example + ")")),
          key_(std::move(key)), example_(std::move(example)) {}

    const std::string& key() const noexcept { return key_; }
    const std::string& example() const noexcept { return example_; }

private:
    std::string key_;
    std::string example_;
};

enum ExitCode : int { kSuccess = 0, kCheckFailure = 1, kUsageError = 2 };

struct RunConfig {
    std::string subcommand;
    std::string dist = "uniform(0,1)";
    std::size_t n = 2000;
    std::size_t reps = 2000;
    std::size_t grid = 256;
    double a = 0.0;
    double b = 1.0;
    /// CSV path, inline `[[0.9,0.1],[0.2,0.8]]`, or empty for a single state.
    std::string transition;
    std::vector<double> sigmas{1.0};
    std::string noise = "gaussian";
    /// `stationary` or a 1-based state.
    std::string initial = "stationary";
    std::uint64_t seed = 20131;
    std::vector<double> probes{0.25, 0.5, 0.75};
    std::vector<double> levels{0.9, 0.95, 0.99};
    std::string out;
    bool json = false;
    std::string data;
    std::string profile = "desk";
    std::size_t threads = 1;
    bool brownian = false;
    std::vector<std::string> checks{"all"};
};

/// Parses argv (argv[0] is the program name). Flags override values from
/// `--config <file>`; unknown keys are rejected. The result has passed every
/// downstream precondition. `--help` throws HelpRequested.
RunConfig parse_config(int argc, const char* const* argv);
RunConfig parse_config(const std::vector<std::string>& args);

struct HelpRequested {
    std::string text;
};

/// `key = value` lines readable by `--config`.
void write_config(std::ostream& out, const RunConfig& config);

RegressionConfig build_regression(const RunConfig& config);
McConfig build_mc_config(const RunConfig& config);

struct ModelCheckResult {
    std::size_t n = 0;
    OlsFit fit{};
    double sigma_hat2 = 0.0;
    /// max |bridge| over t = j / G, the functional the critical values describe.
    double statistic = 0.0;
    /// max |bridge| over all n + 1 nodes.
    double node_sup = 0.0;
    std::vector<double> levels;
    std::vector<double> critical_values;
    double p_value = 1.0;
    std::size_t reps = 0;
    std::size_t grid = 0;
    double jitter_used = 0.0;
    BridgePolygon bridge;
};

/// Sup-statistic test of the linear model on (x, y) with the plug-in kernel
/// of the empirical law of x. p-value = (#{limit sup >= T} + 1) / (R + 1).
ModelCheckResult model_check(std::vector<double> x, std::vector<double> y, std::size_t grid, std::size_t reps,
                             const std::vector<double>& levels, std::uint64_t seed, std::size_t threads = 1);

/// (x, y) columns from a CSV with either an `x`,`y` header or two bare columns.
void read_xy_csv(const std::string& path, std::vector<double>& x, std::vector<double>& y);

/// Runs the subcommand; files go to config.out when set, otherwise the main output goes to `out`.
int cmd_dispatch(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Full entry point: parse + dispatch with exit-code mapping.
int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace regbridge::cli
