#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "regbridge/regression.hpp"

namespace regbridge {

/// Stream-derivation ids; part of every replication's seed path.
enum class CheckId : std::uint64_t {
    Covariance = 1,
    SigmaHat = 2,
    SupStatistic = 3,
    Lorenz = 4,
    Replacement = 5,
    DegenerateChain = 6,
};

struct CheckToggles {
    bool covariance = true;
    bool sigma_hat = true;
    bool supstat = true;
    bool lorenz = true;
    bool replacement = true;
    bool degenerate_chain = true;
};

struct McConfig {
    explicit McConfig(RegressionConfig model) : regression(std::move(model)) {}

    RegressionConfig regression;
    std::size_t replications = 2000;
    std::vector<double> probes{0.25, 0.5, 0.75};
    std::uint64_t seed = 20131;
    std::size_t threads = 1;
    std::size_t grid_size = 256;
    CheckToggles checks;

    double covariance_tol = 0.01;
    double sigma_rel_tol = 0.03;
    /// Floor of the KS threshold; raised to the 99% null point 1.63 sqrt(2/R) when R is small.
    double ks_threshold = 0.06;

    std::size_t lorenz_n = 10000;
    std::size_t lorenz_seeds = 50;
    std::size_t lorenz_grid = 1000;
    /// Defaults by family when unset (see lorenz_threshold_for).
    std::optional<double> lorenz_threshold;

    std::vector<std::size_t> replacement_sizes{100, 1000, 10000};
    std::size_t pilot_reps = 200;
    std::size_t replacement_outer_reps = 200;
    /// Total regressor draws the Step-1 diagnostic may spend before reporting inconclusive.
    std::size_t replacement_draw_budget = 50'000'000;

    std::size_t degenerate_reps = 100;

    /// Throws ModelError naming the offending field.
    void validate() const;
};

/// Worst-seed gap allowed between GL_n and GL_F: 0.03 for uniform and 0.08
/// for exponential at unit scale, scaled by the law's spread.
double lorenz_threshold_for(const DistributionSpec& dist);

struct Estimate {
    std::string label;
    double estimate;
    double target;
    double se;
    double tol;
    bool pass;
};

enum class Severity { Hard, Diagnostic };
enum class Status { Pass, Fail, Inconclusive, ConfigError };

std::string to_string(Severity s);
std::string to_string(Status s);

struct CheckRecord {
    std::string name;
    Severity severity = Severity::Hard;
    Status status = Status::Fail;
    std::vector<Estimate> items;
    std::size_t replications = 0;
    std::size_t rejections = 0;
    std::vector<std::size_t> rejected_indices;
    std::uint64_t seed = 0;
    std::string note;
    double wall_seconds = 0.0;  // excluded from the deterministic report files

    bool passed() const noexcept { return status == Status::Pass; }
    /// Item with the largest |estimate - target| relative to its threshold.
    const Estimate* headline() const noexcept;
};

struct McReport {
    std::vector<CheckRecord> records;

    /// True when no Hard check failed or hit a configuration error.
    bool hard_checks_pass() const noexcept;
};

CheckRecord check_covariance(const McConfig& config);
CheckRecord check_sigma_hat(const McConfig& config);
CheckRecord check_supstat_distribution(const McConfig& config);
CheckRecord check_lorenz_convergence(const McConfig& config);
CheckRecord check_replacement_variance(const McConfig& config);
/// Requires a single-state chain; anything else is a ConfigError record.
CheckRecord check_degenerate_chain_equivalence(const McConfig& config);

/// Runs every enabled check once. The degenerate-chain check runs on the
/// single-state reduction of the configured model (sigma = sqrt(composite variance)).
McReport run_suite(const McConfig& config);

/// Per-replication bridge summaries shared by several checks.
struct BridgeReplication {
    std::vector<double> probe_values;
    double sup = 0.0;
    /// Maximum over the limit grid t = j / G only.
    double grid_sup = 0.0;
    double sigma_hat2 = 0.0;
};

struct BridgeBatch {
    std::vector<BridgeReplication> reps;
    std::size_t rejections = 0;
    std::vector<std::size_t> rejected_indices;
};

/// R empirical bridges; degenerate replications are redrawn from a fresh stream.
BridgeBatch simulate_bridges(const McConfig& config, CheckId check, std::size_t reps);

/// One row per check: check,estimate,target,se,tol,pass,severity,status,seed.
void write_report_csv(std::ostream& out, const McReport& report);
/// One row per estimate.
void write_report_details_csv(std::ostream& out, const McReport& report);
void write_report_json(std::ostream& out, const McReport& report);
void write_report_text(std::ostream& out, const McReport& report);
void write_timings_csv(std::ostream& out, const McReport& report);

}  // namespace regbridge
