#include "regbridge/montecarlo.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "regbridge/csv.hpp"
#include "regbridge/error.hpp"
#include "regbridge/limit.hpp"
#include "regbridge/parallel.hpp"
#include "regbridge/summation.hpp"

namespace regbridge {

namespace {

constexpr std::size_t kMaxAttempts = 100;
constexpr std::size_t kLoggedRejections = 20;

std::uint64_t id(CheckId c) { return static_cast<std::uint64_t>(c); }

double mean_of(const std::vector<double>& v) { return compensated_mean(v); }

/// Sample sd (divisor R - 1).
double sd_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    CompensatedSum s;
    for (double x : v) s.add((x - m) * (x - m));
    return std::sqrt(s.value() / static_cast<double>(v.size() - 1));
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const auto n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Estimate make_estimate(std::string label, double estimate, double target, double se, double tol) {
    const bool pass = std::fabs(estimate - target) <= std::max(tol, 5.0 * se);
    return Estimate{std::move(label), estimate, target, se, tol, pass};
}

std::string probe_label(const char* what, double t, double s) {
    std::ostringstream out;
    out << what << "(" << format_double(t) << "," << format_double(s) << ")";
    return out.str();
}

class Stopwatch {
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

template <class Body>
CheckRecord run_check(const McConfig& config, std::string name, Severity severity, Body&& body) {
    Stopwatch clock;
    CheckRecord record;
    record.name = std::move(name);
    record.severity = severity;
    record.seed = config.seed;
    try {
        config.validate();
        body(record);
    } catch (const std::invalid_argument& e) {
        record.status = Status::ConfigError;
        record.note = e.what();
    } catch (const DegenerateBridgeError& e) {
        record.status = Status::Fail;
        record.note = e.what();
    }
    record.wall_seconds = clock.seconds();
    return record;
}

void apply_rejections(CheckRecord& record, const BridgeBatch& batch, std::size_t reps) {
    record.rejections = batch.rejections;
    record.rejected_indices = batch.rejected_indices;
    const double rate = static_cast<double>(batch.rejections) / static_cast<double>(reps + batch.rejections);
    if (rate > 0.01) {
        record.status = Status::Fail;
        std::ostringstream msg;
        msg << "degenerate-bridge rejection rate " << rate << " exceeds 1%";
        record.note = msg.str();
    }
}

Status status_from(const std::vector<Estimate>& items) {
    return std::all_of(items.begin(), items.end(), [](const Estimate& e) { return e.pass; }) ? Status::Pass
                                                                                            : Status::Fail;
}

}  // namespace

void McConfig::validate() const {
    regression.validate();
    if (replications < 100) throw ModelError("replications = " + std::to_string(replications) + ", need >= 100");
    if (probes.empty()) throw ModelError("probes: need at least one probe time");
    for (std::size_t i = 0; i < probes.size(); ++i) {
        if (!(probes[i] > 0.0 && probes[i] < 1.0)) throw ModelError("probes: times must lie strictly inside (0, 1)");
        if (i > 0 && !(probes[i] > probes[i - 1])) throw ModelError("probes: times must be strictly increasing");
    }
    if (grid_size < 2) throw ModelError("grid: need G >= 2");
    if (threads == 0) throw ModelError("threads: need at least 1");
    if (lorenz_n < 1 || lorenz_seeds < 1 || lorenz_grid < 1) throw ModelError("lorenz settings must be positive");
    if (replacement_sizes.empty() || pilot_reps < 2 || replacement_outer_reps < 2) {
        throw ModelError("replacement settings: need sizes and at least 2 pilot/outer replications");
    }
}

double lorenz_threshold_for(const DistributionSpec& dist) {
    // Uniform range hi - lo, from the upper end and the midpoint.
    if (dist.family() == Family::Uniform) return 0.03 * 2.0 * (dist.quantile(1.0) - dist.moments().mean);
    return 0.08 * std::sqrt(dist.moments().variance);
}

std::string to_string(Severity s) { return s == Severity::Hard ? "hard" : "diagnostic"; }

std::string to_string(Status s) {
    switch (s) {
        case Status::Pass: return "pass";
        case Status::Fail: return "fail";
        case Status::Inconclusive: return "inconclusive";
        case Status::ConfigError: return "config-error";
    }
    return "fail";
}

const Estimate* CheckRecord::headline() const noexcept {
    for (const auto& e : items) {
        if (!e.pass) return &e;
    }
    // Items without a tolerance are informational unless nothing else is reported.
    auto pick = [&](bool need_tol) {
        const Estimate* best = nullptr;
        double worst = -1.0;
        for (const auto& e : items) {
            if (need_tol && !(e.tol > 0.0)) continue;
            const double limit = std::max(e.tol, 5.0 * e.se);
            const double gap = std::fabs(e.estimate - e.target);
            const double ratio = limit > 0.0 ? gap / limit : gap;
            if (ratio > worst) {
                worst = ratio;
                best = &e;
            }
        }
        return best;
    };
    const Estimate* best = pick(true);
    return best ? best : pick(false);
}

bool McReport::hard_checks_pass() const noexcept {
    return std::all_of(records.begin(), records.end(), [](const CheckRecord& r) {
        return r.severity == Severity::Diagnostic || r.status == Status::Pass;
    });
}

BridgeBatch simulate_bridges(const McConfig& config, CheckId check, std::size_t reps) {
    config.regression.validate();
    struct Slot {
        BridgeReplication rep;
        std::size_t rejections = 0;
    };
    std::vector<Slot> slots(reps);
    parallel_for(reps, config.threads, [&](std::size_t r) {
        for (std::size_t attempt = 0; attempt < kMaxAttempts; ++attempt) {
            auto rng = RandomStream::derive(config.seed, {id(check), r, attempt});
            const auto sample = generate_sample(config.regression, rng);
            try {
                const auto fit = ols_fit(sample);
                const auto process = residual_process(sample, fit);
                const auto bridge = empirical_bridge(process);
                auto& rep = slots[r].rep;
                rep.sigma_hat2 = process.sigma_hat2;
                rep.sup = sup_statistic(bridge);
                rep.grid_sup = grid_sup_statistic(bridge, config.grid_size);
                rep.probe_values.clear();
                for (double t : config.probes) rep.probe_values.push_back(polygon_eval(bridge, t));
                return;
            } catch (const DegenerateDesignError&) {
            } catch (const DegenerateBridgeError&) {
            }
            ++slots[r].rejections;
        }
        throw DegenerateBridgeError("replication " + std::to_string(r) + " stayed degenerate after " +
                                    std::to_string(kMaxAttempts) + " attempts");
    });

    BridgeBatch batch;
    batch.reps.reserve(reps);
    for (std::size_t r = 0; r < reps; ++r) {
        batch.rejections += slots[r].rejections;
        if (slots[r].rejections > 0 && batch.rejected_indices.size() < kLoggedRejections) {
            batch.rejected_indices.push_back(r);
        }
        batch.reps.push_back(std::move(slots[r].rep));
    }
    return batch;
}

CheckRecord check_covariance(const McConfig& config) {
    return run_check(config, "covariance", Severity::Hard, [&](CheckRecord& record) {
        const auto reps = config.replications;
        const auto batch = simulate_bridges(config, CheckId::Covariance, reps);
        const auto& probes = config.probes;
        const auto k = probes.size();
        const auto& dist = config.regression.dist;
        const LorenzCurve curve(dist);
        const double variance = dist.moments().variance;

        std::vector<double> means(k);
        for (std::size_t i = 0; i < k; ++i) {
            CompensatedSum s;
            for (const auto& rep : batch.reps) s.add(rep.probe_values[i]);
            means[i] = s.value() / static_cast<double>(reps);
        }
        for (std::size_t i = 0; i < k; ++i) {
            for (std::size_t j = i; j < k; ++j) {
                std::vector<double> products(reps);
                for (std::size_t r = 0; r < reps; ++r) {
                    const auto& v = batch.reps[r].probe_values;
                    products[r] = (v[i] - means[i]) * (v[j] - means[j]);
                }
                const double cov = compensated_sum(products) / static_cast<double>(reps - 1);
                const double se = sd_of(products) / std::sqrt(static_cast<double>(reps));
                const double target = kernel_value(curve, variance, probes[i], probes[j]);
                record.items.push_back(make_estimate(probe_label("cov", probes[i], probes[j]), cov, target, se,
                                                     config.covariance_tol));
            }
        }
        record.replications = reps;
        record.status = status_from(record.items);
        apply_rejections(record, batch, reps);
    });
}

CheckRecord check_sigma_hat(const McConfig& config) {
    return run_check(config, "sigma_hat", Severity::Hard, [&](CheckRecord& record) {
        const auto reps = config.replications;
        const auto batch = simulate_bridges(config, CheckId::SigmaHat, reps);
        std::vector<double> values(reps);
        for (std::size_t r = 0; r < reps; ++r) values[r] = batch.reps[r].sigma_hat2;
        const double target = composite_variance(config.regression.noise);
        record.items.push_back(make_estimate("mean_sigma_hat2", mean_of(values), target,
                                             sd_of(values) / std::sqrt(static_cast<double>(reps)),
                                             config.sigma_rel_tol * target));
        record.replications = reps;
        record.status = status_from(record.items);
        apply_rejections(record, batch, reps);
    });
}

CheckRecord check_supstat_distribution(const McConfig& config) {
    return run_check(config, "supstat_ks", Severity::Hard, [&](CheckRecord& record) {
        const auto reps = config.replications;
        const auto batch = simulate_bridges(config, CheckId::SupStatistic, reps);
        std::vector<double> bridge_sups(reps);
        for (std::size_t r = 0; r < reps; ++r) bridge_sups[r] = batch.reps[r].grid_sup;

        const auto grid = kernel_matrix(config.regression.dist, config.grid_size);
        const auto keys = RandomStream::derive(config.seed, {id(CheckId::SupStatistic), tag(StreamTag::LimitPath)});
        const auto limit_sups = sample_limit_sup_statistics(grid, reps, keys, config.threads);

        const double rd = static_cast<double>(reps);
        const double threshold = std::max(config.ks_threshold, 1.63 * std::sqrt(2.0 / rd));
        const double distance = ks_distance(bridge_sups, limit_sups);
        // KS null scale sqrt(1/R + 1/R) stands in for a standard error.
        const double scale = std::sqrt(2.0 / rd);
        record.items.push_back(Estimate{"ks_distance", distance, 0.0, scale, threshold, distance <= threshold});
        record.items.push_back(Estimate{"median_sup_bridge", median_of(bridge_sups), median_of(limit_sups),
                                        sd_of(bridge_sups) / std::sqrt(rd), 0.0, true});
        record.replications = reps;
        record.status = distance <= threshold ? Status::Pass : Status::Fail;
        std::ostringstream note;
        note << "G=" << config.grid_size << " jitter=" << grid.jitter_used();
        record.note = note.str();
        apply_rejections(record, batch, reps);
    });
}

CheckRecord check_lorenz_convergence(const McConfig& config) {
    return run_check(config, "lorenz_sup_gap", Severity::Hard, [&](CheckRecord& record) {
        const auto& dist = config.regression.dist;
        const LorenzCurve curve(dist);
        std::vector<double> ts(config.lorenz_grid + 1);
        std::vector<double> theory(ts.size());
        for (std::size_t j = 0; j < ts.size(); ++j) {
            ts[j] = static_cast<double>(j) / static_cast<double>(config.lorenz_grid);
            theory[j] = curve.gl(ts[j]);
        }
        std::vector<double> gaps(config.lorenz_seeds);
        parallel_for(config.lorenz_seeds, config.threads, [&](std::size_t s) {
            auto rng = RandomStream::derive(config.seed, {id(CheckId::Lorenz), s});
            const auto values = sample(dist, config.lorenz_n, rng);
            const auto empirical = empirical_lorenz(values, ts);
            double gap = 0.0;
            for (std::size_t j = 0; j < ts.size(); ++j) gap = std::max(gap, std::fabs(empirical[j] - theory[j]));
            gaps[s] = gap;
        });
        const double threshold = config.lorenz_threshold.value_or(lorenz_threshold_for(dist));
        const double worst = *std::max_element(gaps.begin(), gaps.end());
        const double se = sd_of(gaps) / std::sqrt(static_cast<double>(gaps.size()));
        record.items.push_back(Estimate{"worst_sup_gap", worst, 0.0, se, threshold, worst <= threshold});
        record.items.push_back(Estimate{"median_sup_gap", median_of(gaps), 0.0, se, threshold, true});
        record.replications = config.lorenz_seeds;
        record.status = worst <= threshold ? Status::Pass : Status::Fail;
    });
}

CheckRecord check_replacement_variance(const McConfig& config) {
    return run_check(config, "replacement_variance", Severity::Diagnostic, [&](CheckRecord& record) {
        const auto& reg = config.regression;
        std::size_t needed = 0;
        for (auto n : config.replacement_sizes) needed += n * (config.pilot_reps + config.replacement_outer_reps);
        if (needed > config.replacement_draw_budget) {
            record.status = Status::Inconclusive;
            record.note = "pilot budget of " + std::to_string(config.replacement_draw_budget) + " draws exhausted (need " +
                          std::to_string(needed) + ")";
            return;
        }

        std::vector<double> avg_var;
        std::vector<double> replacement_var;
        for (auto n : config.replacement_sizes) {
            const auto pilot = config.pilot_reps;
            // Pilot: per-rank mean and variance of the order statistics.
            std::vector<std::vector<double>> draws(pilot);
            parallel_for(pilot, config.threads, [&](std::size_t r) {
                auto rng = RandomStream::derive(config.seed, {id(CheckId::Replacement), tag(StreamTag::Pilot), n, r});
                draws[r] = sample(reg.dist, n, rng);
                std::sort(draws[r].begin(), draws[r].end());
            });
            std::vector<double> rank_mean(n), rank_var(n);
            for (std::size_t i = 0; i < n; ++i) {
                std::vector<double> col(pilot);
                for (std::size_t r = 0; r < pilot; ++r) col[r] = draws[r][i];
                rank_mean[i] = mean_of(col);
                const double sd = sd_of(col);
                rank_var[i] = sd * sd;
            }
            const double grand = mean_of(rank_mean);
            std::vector<double> centered_mean(n);
            for (std::size_t i = 0; i < n; ++i) centered_mean[i] = rank_mean[i] - grand;
            avg_var.push_back(mean_of(rank_var));

            // n^{-1/2} (sum eps0 X0 - sum eps0 E X0) over fresh replications.
            const auto outer = config.replacement_outer_reps;
            std::vector<double> d(outer);
            auto sized = reg;
            sized.n = n;
            parallel_for(outer, config.threads, [&](std::size_t r) {
                auto rng = RandomStream::derive(config.seed, {id(CheckId::Replacement), n, r});
                auto s = generate_sample(sized, rng);
                std::vector<double> eps(n);
                for (std::size_t i = 0; i < n; ++i) eps[i] = s.y[i] - reg.a - reg.b * s.x[i];
                const double eps_bar = compensated_mean(eps);
                const double x_bar = compensated_mean(s.x);
                CompensatedSum acc;
                for (std::size_t i = 0; i < n; ++i) {
                    acc.add((eps[i] - eps_bar) * ((s.x[i] - x_bar) - centered_mean[i]));
                }
                d[r] = acc.value() / std::sqrt(static_cast<double>(n));
            });
            const double sd = sd_of(d);
            replacement_var.push_back(sd * sd);

            const double pd = static_cast<double>(pilot);
            record.items.push_back(Estimate{"mean_var_order_stat(n=" + std::to_string(n) + ")", avg_var.back(), 0.0,
                                            avg_var.back() * std::sqrt(2.0 / (pd - 1.0)), 0.0, true});
            record.items.push_back(Estimate{"var_replacement_gap(n=" + std::to_string(n) + ")",
                                            replacement_var.back(), 0.0,
                                            replacement_var.back() * std::sqrt(2.0 / (static_cast<double>(outer) - 1.0)),
                                            0.0, true});
        }
        // Soft pass: both sequences strictly decrease across the sizes.
        bool monotone = true;
        for (std::size_t i = 1; i < avg_var.size(); ++i) {
            monotone = monotone && avg_var[i] < avg_var[i - 1] && replacement_var[i] < replacement_var[i - 1];
        }
        for (std::size_t i = 0; i < record.items.size(); ++i) {
            const std::size_t step = i / 2;
            const auto& seq = (i % 2 == 0) ? avg_var : replacement_var;
            record.items[i].pass = step == 0 || seq[step] < seq[step - 1];
        }
        record.replications = config.replacement_outer_reps;
        record.status = monotone ? Status::Pass : Status::Fail;
        record.note = "diagnostic; pilot of " + std::to_string(config.pilot_reps) + " replications per size";
    });
}

CheckRecord check_degenerate_chain_equivalence(const McConfig& config) {
    return run_check(config, "degenerate_chain", Severity::Hard, [&](CheckRecord& record) {
        const auto& reg = config.regression;
        if (reg.noise.chain().state_count() != 1) {
            record.status = Status::ConfigError;
            record.note = "precondition: needs a single-state chain, got M = " +
                          std::to_string(reg.noise.chain().state_count());
            return;
        }
        const double sd = reg.noise.state_sd()[0];
        const auto reps = config.degenerate_reps;
        std::vector<std::ptrdiff_t> divergence(reps, -1);
        parallel_for(reps, config.threads, [&](std::size_t r) {
            const auto key = RandomStream::derive(config.seed, {id(CheckId::DegenerateChain), r});

            auto full_rng = key;
            const auto full = generate_sample(reg, full_rng);

            // Chain-free route: i.i.d. noise straight from the noise stream.
            auto x_rng = key.child({tag(StreamTag::Regressor)});
            auto noise_rng = key.child({tag(StreamTag::Noise)});
            auto x = sample(reg.dist, reg.n, x_rng);
            std::stable_sort(x.begin(), x.end());
            std::vector<double> eps(reg.n);
            for (auto& e : eps) e = sd * base_noise(reg.noise.family(), noise_rng.uniform_open());
            const auto bypass = assemble_sample(reg.a, reg.b, std::move(x), std::vector<State>(reg.n, 0), eps);

            const auto a = empirical_bridge(residual_process(full, ols_fit(full)));
            const auto b = empirical_bridge(residual_process(bypass, ols_fit(bypass)));
            for (std::size_t k = 0; k < a.nodes.size(); ++k) {
                if (!(a.nodes[k] == b.nodes[k]) && !(std::isnan(a.nodes[k]) && std::isnan(b.nodes[k]))) {
                    divergence[r] = static_cast<std::ptrdiff_t>(k);
                    return;
                }
            }
        });
        std::size_t mismatches = 0;
        std::ostringstream note;
        for (std::size_t r = 0; r < reps; ++r) {
            if (divergence[r] >= 0) {
                if (mismatches == 0) note << "replication " << r << " diverges at node " << divergence[r];
                ++mismatches;
            }
        }
        record.items.push_back(Estimate{"mismatched_replications", static_cast<double>(mismatches), 0.0, 0.0, 0.0,
                                        mismatches == 0});
        record.replications = reps;
        record.status = mismatches == 0 ? Status::Pass : Status::Fail;
        record.note = note.str();
    });
}

McReport run_suite(const McConfig& config) {
    McReport report;
    const auto& c = config.checks;
    if (c.covariance) report.records.push_back(check_covariance(config));
    if (c.sigma_hat) report.records.push_back(check_sigma_hat(config));
    if (c.supstat) report.records.push_back(check_supstat_distribution(config));
    if (c.lorenz) report.records.push_back(check_lorenz_convergence(config));
    if (c.replacement) report.records.push_back(check_replacement_variance(config));
    if (c.degenerate_chain) {
        const auto& noise = config.regression.noise;
        if (noise.chain().state_count() == 1) {
            report.records.push_back(check_degenerate_chain_equivalence(config));
        } else {
            auto reduced = config;
            reduced.regression.noise =
                NoiseModel(MarkovChain::single_state(), {std::sqrt(composite_variance(noise))}, noise.family());
            auto record = check_degenerate_chain_equivalence(reduced);
            record.note = "single-state reduction with sigma = sqrt(composite variance)" +
                          (record.note.empty() ? std::string() : "; " + record.note);
            report.records.push_back(std::move(record));
        }
    }
    return report;
}

void write_report_csv(std::ostream& out, const McReport& report) {
    out << "check,estimate,target,se,tol,pass,severity,status,seed\n";
    for (const auto& r : report.records) {
        const Estimate* h = r.headline();
        out << r.name << ',';
        if (h) {
            out << format_double(h->estimate) << ',' << format_double(h->target) << ',' << format_double(h->se) << ','
                << format_double(h->tol);
        } else {
            out << ",,,";
        }
        out << ',' << (r.passed() ? 1 : 0) << ',' << to_string(r.severity) << ',' << to_string(r.status) << ','
            << r.seed << '\n';
    }
}

void write_report_details_csv(std::ostream& out, const McReport& report) {
    out << "check,item,estimate,target,se,tol,pass\n";
    for (const auto& r : report.records) {
        for (const auto& e : r.items) {
            out << r.name << ',' << e.label << ',' << format_double(e.estimate) << ',' << format_double(e.target)
                << ',' << format_double(e.se) << ',' << format_double(e.tol) << ',' << (e.pass ? 1 : 0) << '\n';
        }
    }
}

void write_report_json(std::ostream& out, const McReport& report) {
    nlohmann::ordered_json checks = nlohmann::ordered_json::array();
    for (const auto& r : report.records) {
        nlohmann::ordered_json items = nlohmann::ordered_json::array();
        for (const auto& e : r.items) {
            items.push_back({{"label", e.label},
                             {"estimate", e.estimate},
                             {"target", e.target},
                             {"se", e.se},
                             {"tol", e.tol},
                             {"pass", e.pass}});
        }
        checks.push_back({{"name", r.name},
                          {"severity", to_string(r.severity)},
                          {"status", to_string(r.status)},
                          {"pass", r.passed()},
                          {"seed", r.seed},
                          {"replications", r.replications},
                          {"rejections", r.rejections},
                          {"rejected_indices", r.rejected_indices},
                          {"note", r.note},
                          {"items", items}});
    }
    nlohmann::ordered_json doc = {{"all_hard_checks_pass", report.hard_checks_pass()}, {"checks", checks}};
    out << doc.dump(2) << '\n';
}

void write_report_text(std::ostream& out, const McReport& report) {
    for (const auto& r : report.records) {
        out << "[" << to_string(r.status) << "] " << r.name << " (" << to_string(r.severity)
            << ", replications=" << r.replications << ", rejections=" << r.rejections << ")\n";
        for (const auto& e : r.items) {
            out << "    " << (e.pass ? "ok  " : "FAIL") << ' ' << e.label << " = " << format_double(e.estimate)
                << "  target " << format_double(e.target) << "  se " << format_double(e.se) << "  tol "
                << format_double(e.tol) << '\n';
        }
        if (!r.note.empty()) out << "    note: " << r.note << '\n';
    }
    out << (report.hard_checks_pass() ? "all hard checks passed" : "some hard checks FAILED") << '\n';
}

void write_timings_csv(std::ostream& out, const McReport& report) {
    out << "check,wall_seconds\n";
    for (const auto& r : report.records) out << r.name << ',' << format_double(r.wall_seconds) << '\n';
}

}  // namespace regbridge
