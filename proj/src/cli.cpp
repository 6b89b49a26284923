#include "regbridge/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "regbridge/csv.hpp"
#include "regbridge/error.hpp"
#include "regbridge/limit.hpp"

namespace regbridge::cli {

namespace {

const std::vector<std::string> kSubcommands = {"simulate", "bridge", "kernel", "limit", "validate", "test"};
const std::vector<std::string> kCheckNames = {"covariance", "sigma_hat", "supstat",
                                              "lorenz",     "replacement", "degenerate_chain"};

bool needs_model(const std::string& sub) {
    return sub == "simulate" || sub == "bridge" || sub == "validate";
}

Eigen::MatrixXd parse_transition(const std::string& spec) {
    if (spec.empty()) return Eigen::MatrixXd::Ones(1, 1);
    if (spec.front() != '[') return read_transition_csv(spec);
    nlohmann::json rows;
    try {
        rows = nlohmann::json::parse(spec);
    } catch (const nlohmann::json::exception& e) {
        throw UsageError("transition", std::string("cannot parse inline matrix: ") + e.what(),
                         "[[0.9,0.1],[0.2,0.8]]");
    }
    if (!rows.is_array() || rows.empty()) {
        throw UsageError("transition", "inline matrix must be a non-empty list of rows", "[[0.9,0.1],[0.2,0.8]]");
    }
    const auto m = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd p(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const auto& row = rows[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != m) {
            throw UsageError("transition", "row " + std::to_string(i + 1) + " does not have " + std::to_string(m) +
                                               " entries", "[[0.9,0.1],[0.2,0.8]]");
        }
        for (Eigen::Index j = 0; j < m; ++j) {
            const auto& cell = row[static_cast<std::size_t>(j)];
            if (!cell.is_number()) throw UsageError("transition", "entries must be numbers", "[[0.9,0.1],[0.2,0.8]]");
            p(i, j) = cell.get<double>();
        }
    }
    return p;
}

std::optional<State> parse_initial(const std::string& initial, std::size_t states) {
    if (initial == "stationary") return std::nullopt;
    std::size_t used = 0;
    long k = 0;
    try {
        k = std::stol(initial, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != initial.size() || k < 1 || static_cast<std::size_t>(k) > states) {
        throw UsageError("initial", "expected 'stationary' or a state in 1.." + std::to_string(states), "stationary");
    }
    return static_cast<State>(k - 1);
}

DistributionSpec parse_dist(const std::string& text) {
    try {
        return DistributionSpec::parse(text);
    } catch (const ModelError& e) {
        throw UsageError("dist", e.what(), "uniform(0,1)");
    }
}

std::string join(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_double(v[i]);
    return s;
}

std::string quoted(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out + "\"";
}

void validate_run_config(RunConfig& cfg) {
    if (std::find(kSubcommands.begin(), kSubcommands.end(), cfg.subcommand) == kSubcommands.end()) {
        throw UsageError("subcommand", "unknown subcommand '" + cfg.subcommand + "'", "validate");
    }
    if (cfg.threads < 1) throw UsageError("threads", "need at least 1", "--threads 4");
    if (cfg.grid < 2) throw UsageError("grid", "need G >= 2", "--grid 256");

    const auto dist = parse_dist(cfg.dist);
    const bool zero_variance_ok = cfg.subcommand == "kernel" && cfg.brownian;
    if (!zero_variance_ok && cfg.subcommand != "test" && !(dist.moments().variance > 0.0)) {
        throw UsageError("dist", "distribution has zero variance", "empirical(values.csv) with distinct values");
    }

    if (needs_model(cfg.subcommand)) {
        if (cfg.n < 3) throw UsageError("n", "need n >= 3", "--n 2000");
        build_regression(cfg);
    }
    for (double l : cfg.levels) {
        if (!(l > 0.0 && l < 1.0)) throw UsageError("levels", "levels must lie in (0, 1)", "--levels 0.9,0.95,0.99");
    }
    if ((cfg.subcommand == "limit" || cfg.subcommand == "test") && cfg.reps < 1000) {
        throw UsageError("reps", "critical values need at least 1000 replications", "--reps 10000");
    }
    if (cfg.subcommand == "test" && cfg.data.empty()) {
        throw UsageError("data", "the test subcommand needs a CSV of (x, y) rows", "--data observations.csv");
    }
    if (cfg.subcommand == "validate") {
        if (cfg.profile != "desk" && cfg.profile != "quick") {
            throw UsageError("profile", "unknown profile '" + cfg.profile + "'", "--profile desk");
        }
        for (const auto& c : cfg.checks) {
            if (c != "all" && std::find(kCheckNames.begin(), kCheckNames.end(), c) == kCheckNames.end()) {
                throw UsageError("checks", "unknown check '" + c + "'", "--checks covariance,sigma_hat");
            }
        }
        try {
            build_mc_config(cfg).validate();
        } catch (const ModelError& e) {
            throw UsageError("probes", e.what(), "--probes 0.25,0.5,0.75");
        }
    }
}

std::filesystem::path output_path(const RunConfig& cfg, const std::string& name) {
    std::filesystem::create_directories(cfg.out);
    return std::filesystem::path(cfg.out) / name;
}

template <class Writer>
void emit(const RunConfig& cfg, const std::string& name, std::ostream& fallback, Writer&& write) {
    if (cfg.out.empty()) {
        write(fallback);
        return;
    }
    std::ofstream file(output_path(cfg, name), std::ios::binary);
    if (!file) throw std::runtime_error("cannot write " + output_path(cfg, name).string());
    write(file);
}

void echo_config(const RunConfig& cfg) {
    if (cfg.out.empty()) return;
    std::ofstream file(output_path(cfg, "config.toml"), std::ios::binary);
    write_config(file, cfg);
}

int run_simulate(const RunConfig& cfg, std::ostream& out) {
    RandomStream rng(cfg.seed);
    const auto sample = generate_sample(build_regression(cfg), rng);
    emit(cfg, "sample.csv", out, [&](std::ostream& o) { write_sample_csv(o, sample); });
    return kSuccess;
}

int run_bridge(const RunConfig& cfg, std::ostream& out) {
    RandomStream rng(cfg.seed);
    const auto sample = generate_sample(build_regression(cfg), rng);
    const auto bridge = empirical_bridge(residual_process(sample, ols_fit(sample)));
    emit(cfg, "bridge.csv", out, [&](std::ostream& o) { write_bridge_csv(o, bridge); });
    return kSuccess;
}

int run_kernel(const RunConfig& cfg, std::ostream& out) {
    const auto grid = kernel_matrix(parse_dist(cfg.dist), cfg.grid,
                                    cfg.brownian ? KernelMode::BrownianBridge : KernelMode::Limit);
    emit(cfg, "kernel.csv", out, [&](std::ostream& o) { write_kernel_csv(o, grid); });
    return kSuccess;
}

int run_limit(const RunConfig& cfg, std::ostream& out) {
    const auto grid = kernel_matrix(parse_dist(cfg.dist), cfg.grid,
                                    cfg.brownian ? KernelMode::BrownianBridge : KernelMode::Limit);
    const auto values = critical_values(grid, cfg.levels, cfg.reps, RandomStream(cfg.seed), cfg.threads);
    emit(cfg, "critical_values.csv", out, [&](std::ostream& o) {
        o << "level,value,reps,seed\n";
        for (std::size_t i = 0; i < values.size(); ++i) {
            o << format_double(cfg.levels[i]) << ',' << format_double(values[i]) << ',' << cfg.reps << ','
              << cfg.seed << '\n';
        }
    });
    return kSuccess;
}

int run_validate(const RunConfig& cfg, std::ostream& out) {
    const auto report = run_suite(build_mc_config(cfg));
    if (!cfg.out.empty()) {
        emit(cfg, "report.csv", out, [&](std::ostream& o) { write_report_csv(o, report); });
        emit(cfg, "report_details.csv", out, [&](std::ostream& o) { write_report_details_csv(o, report); });
        emit(cfg, "report.txt", out, [&](std::ostream& o) { write_report_text(o, report); });
        emit(cfg, "timings.csv", out, [&](std::ostream& o) { write_timings_csv(o, report); });
        if (cfg.json) emit(cfg, "report.json", out, [&](std::ostream& o) { write_report_json(o, report); });
    }
    if (cfg.json && cfg.out.empty()) {
        write_report_json(out, report);
    } else {
        write_report_text(out, report);
        for (const auto& r : report.records) out << "  " << r.name << ": " << r.wall_seconds << " s\n";
    }
    return report.hard_checks_pass() ? kSuccess : kCheckFailure;
}

void write_test_report(std::ostream& o, const ModelCheckResult& r, const std::string& bridge_path, bool json) {
    if (json) {
        nlohmann::ordered_json crit = nlohmann::ordered_json::array();
        for (std::size_t i = 0; i < r.levels.size(); ++i) {
            crit.push_back({{"level", r.levels[i]}, {"value", r.critical_values[i]}});
        }
        nlohmann::ordered_json doc = {{"n", r.n},
                                      {"a_hat", r.fit.a_hat},
                                      {"b_hat", r.fit.b_hat},
                                      {"sigma_hat2", r.sigma_hat2},
                                      {"statistic", r.statistic},
                                      {"node_sup", r.node_sup},
                                      {"grid", r.grid},
                                      {"p_value", r.p_value},
                                      {"reps", r.reps},
                                      {"critical_values", crit},
                                      {"bridge_csv", bridge_path},
                                      {"plug_in_kernel", true}};
        o << doc.dump(2) << '\n';
        return;
    }
    o << "key,value\n";
    o << "n," << r.n << '\n';
    o << "a_hat," << format_double(r.fit.a_hat) << '\n';
    o << "b_hat," << format_double(r.fit.b_hat) << '\n';
    o << "sigma_hat2," << format_double(r.sigma_hat2) << '\n';
    o << "statistic," << format_double(r.statistic) << '\n';
    o << "node_sup," << format_double(r.node_sup) << '\n';
    o << "grid," << r.grid << '\n';
    for (std::size_t i = 0; i < r.levels.size(); ++i) {
        o << "critical_value_" << format_double(r.levels[i]) << ',' << format_double(r.critical_values[i]) << '\n';
    }
    o << "p_value," << format_double(r.p_value) << '\n';
    o << "reps," << r.reps << '\n';
    o << "bridge_csv," << bridge_path << '\n';
}

void write_test_summary(std::ostream& o, const ModelCheckResult& r, const std::string& bridge_path) {
    o << "linear-model residual bridge test\n"
      << "  n           = " << r.n << '\n'
      << "  a_hat       = " << format_double(r.fit.a_hat) << '\n'
      << "  b_hat       = " << format_double(r.fit.b_hat) << '\n'
      << "  sigma_hat^2 = " << format_double(r.sigma_hat2) << '\n'
      << "  T           = " << format_double(r.statistic) << "  (max |bridge| on t = j/" << r.grid << ")\n"
      << "  sup|bridge| = " << format_double(r.node_sup) << "  (all nodes)\n";
    for (std::size_t i = 0; i < r.levels.size(); ++i) {
        o << "  critical value at " << format_double(r.levels[i]) << " = " << format_double(r.critical_values[i])
          << '\n';
    }
    o << "  p-value     = " << format_double(r.p_value) << "  (" << r.reps << " limit paths)\n";
    if (!bridge_path.empty()) o << "  bridge      = " << bridge_path << '\n';
    o << "caveat: the limit kernel uses the empirical law of x in place of F (plug-in approximation);\n"
         "        noise enters only through sigma_hat^2.\n";
}

int run_test(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    std::vector<double> x, y;
    read_xy_csv(cfg.data, x, y);
    ModelCheckResult result;
    try {
        result = model_check(std::move(x), std::move(y), cfg.grid, cfg.reps, cfg.levels, cfg.seed, cfg.threads);
    } catch (const DegenerateBridgeError& e) {
        err << "test undefined: " << e.what() << '\n';
        return kCheckFailure;
    } catch (const DegenerateDesignError& e) {
        err << "test undefined: " << e.what() << '\n';
        return kCheckFailure;
    }
    std::string bridge_path;
    if (!cfg.out.empty()) {
        bridge_path = output_path(cfg, "bridge.csv").string();
        emit(cfg, "bridge.csv", out, [&](std::ostream& o) { write_bridge_csv(o, result.bridge); });
        emit(cfg, "test_report.csv", out, [&](std::ostream& o) { write_test_report(o, result, bridge_path, false); });
        if (cfg.json) {
            emit(cfg, "test_report.json", out, [&](std::ostream& o) { write_test_report(o, result, bridge_path, true); });
        }
    }
    if (cfg.json) {
        write_test_report(out, result, bridge_path, true);
    } else {
        write_test_summary(out, result, bridge_path);
    }
    return kSuccess;
}

}  // namespace

RegressionConfig build_regression(const RunConfig& cfg) {
    auto dist = parse_dist(cfg.dist);
    if (!(dist.moments().variance > 0.0)) {
        throw UsageError("dist", "distribution has zero variance", "uniform(0,1)");
    }
    std::optional<MarkovChain> chain;
    try {
        const auto p = parse_transition(cfg.transition);
        chain.emplace(p, parse_initial(cfg.initial, static_cast<std::size_t>(p.rows())));
    } catch (const ChainError& e) {
        throw UsageError("transition", e.what(), "[[0.9,0.1],[0.2,0.8]]");
    } catch (const ModelError& e) {
        throw UsageError("transition", e.what(), "transition.csv");
    }
    try {
        NoiseModel noise(*chain, cfg.sigmas, parse_noise_family(cfg.noise));
        RegressionConfig reg{cfg.a, cfg.b, cfg.n, std::move(dist), std::move(noise)};
        reg.validate();
        return reg;
    } catch (const ModelError& e) {
        const std::string msg = e.what();
        if (msg.find("noise family") != std::string::npos) throw UsageError("noise", msg, "gaussian");
        if (msg.find("n =") != std::string::npos) throw UsageError("n", msg, "--n 2000");
        throw UsageError("sigmas", msg, "--sigmas 1,2");
    }
}

McConfig build_mc_config(const RunConfig& cfg) {
    McConfig mc(build_regression(cfg));
    mc.replications = cfg.reps;
    mc.probes = cfg.probes;
    mc.seed = cfg.seed;
    mc.threads = cfg.threads;
    mc.grid_size = cfg.grid;
    if (cfg.profile == "quick") {
        mc.lorenz_n = 2000;
        mc.lorenz_seeds = 10;
        mc.replacement_sizes = {100, 1000, 4000};
        mc.pilot_reps = 100;
        mc.replacement_outer_reps = 100;
        mc.degenerate_reps = 20;
    }
    const bool all = std::find(cfg.checks.begin(), cfg.checks.end(), "all") != cfg.checks.end();
    auto enabled = [&](const char* name) {
        return all || std::find(cfg.checks.begin(), cfg.checks.end(), name) != cfg.checks.end();
    };
    mc.checks.covariance = enabled("covariance");
    mc.checks.sigma_hat = enabled("sigma_hat");
    mc.checks.supstat = enabled("supstat");
    mc.checks.lorenz = enabled("lorenz");
    mc.checks.replacement = enabled("replacement");
    mc.checks.degenerate_chain = enabled("degenerate_chain");
    return mc;
}

RunConfig parse_config(const std::vector<std::string>& args) {
    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    argv.push_back("regbridge");
    for (const auto& a : args) argv.push_back(a.c_str());
    return parse_config(static_cast<int>(argv.size()), argv.data());
}

RunConfig parse_config(int argc, const char* const* argv) {
    RunConfig cfg;
    CLI::App app{"Residual empirical bridges for regression on order statistics with Markov-modulated noise",
                 "regbridge"};
    app.set_config("--config", "", "Read `key = value` settings; flags take precedence");
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.require_subcommand(1);

    app.add_option("--dist", cfg.dist, "Regressor law: uniform(lo,hi) | exp(rate) | normal(mu,sd) | empirical(file)");
    app.add_option("--n", cfg.n, "Sample size");
    app.add_option("--reps", cfg.reps, "Monte Carlo replications");
    app.add_option("--grid", cfg.grid, "Kernel grid size G");
    app.add_option("--a", cfg.a, "Intercept");
    app.add_option("--b", cfg.b, "Slope");
    app.add_option("--transition", cfg.transition, "Transition matrix CSV or inline [[...],[...]]");
    app.add_option("--sigmas", cfg.sigmas, "Per-state noise sd, comma separated")->delimiter(',');
    app.add_option("--noise", cfg.noise, "Base noise law: gaussian | uniform | rademacher");
    app.add_option("--initial", cfg.initial, "Initial state: stationary or 1..M");
    app.add_option("--seed", cfg.seed, "Base seed");
    app.add_option("--probes", cfg.probes, "Probe times in (0,1), comma separated")->delimiter(',');
    app.add_option("--levels", cfg.levels, "Critical-value levels, comma separated")->delimiter(',');
    app.add_option("--out", cfg.out, "Output directory");
    app.add_flag("--json", cfg.json, "Emit JSON records");
    app.add_option("--data", cfg.data, "CSV of (x, y) rows for `test`");
    app.add_option("--profile", cfg.profile, "validate profile: desk | quick");
    app.add_option("--threads", cfg.threads, "Worker threads");
    app.add_flag("--brownian", cfg.brownian, "Drop the Lorenz term (Brownian-bridge known-answer mode)");
    app.add_option("--checks", cfg.checks, "validate checks to run (default all)")->delimiter(',');

    const std::pair<const char*, const char*> descriptions[] = {
        {"simulate", "Draw one sample and write sample.csv (i,x,state,y)"},
        {"bridge", "Draw one sample and write its empirical bridge (t,value)"},
        {"kernel", "Write the limit covariance kernel on the grid t_j = j/G"},
        {"limit", "Monte Carlo critical values of sup|Z| for the limit process"},
        {"validate", "Run the Monte Carlo convergence checks and write a report"},
        {"test", "Model check for (x, y) data: sup of the empirical bridge vs plug-in critical values"},
    };
    for (const auto& [name, text] : descriptions) app.add_subcommand(name, text)->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        // The shared options live on the main app, so always show its help.
        throw HelpRequested{app.get_formatter()->make_help(&app, "regbridge", CLI::AppFormatMode::Normal)};
    } catch (const CLI::ParseError& e) {
        throw UsageError("args", e.what(), "validate --dist uniform(0,1) --n 2000 --seed 7");
    }
    cfg.subcommand = app.get_subcommands().front()->get_name();

    if (cfg.profile == "quick") {
        if (app.count("--n") == 0) cfg.n = 500;
        if (app.count("--reps") == 0) cfg.reps = 400;
        if (app.count("--grid") == 0) cfg.grid = 128;
    }
    validate_run_config(cfg);
    return cfg;
}

void write_config(std::ostream& out, const RunConfig& cfg) {
    out << "# regbridge " << cfg.subcommand << '\n';
    out << "dist = " << quoted(cfg.dist) << '\n';
    out << "n = " << cfg.n << '\n';
    out << "reps = " << cfg.reps << '\n';
    out << "grid = " << cfg.grid << '\n';
    out << "a = " << format_double(cfg.a) << '\n';
    out << "b = " << format_double(cfg.b) << '\n';
    if (!cfg.transition.empty()) out << "transition = " << quoted(cfg.transition) << '\n';
    out << "sigmas = [" << join(cfg.sigmas) << "]\n";
    out << "noise = " << quoted(cfg.noise) << '\n';
    out << "initial = " << quoted(cfg.initial) << '\n';
    out << "seed = " << cfg.seed << '\n';
    out << "probes = [" << join(cfg.probes) << "]\n";
    out << "levels = [" << join(cfg.levels) << "]\n";
    if (!cfg.data.empty()) out << "data = " << quoted(cfg.data) << '\n';
    out << "profile = " << quoted(cfg.profile) << '\n';
    out << "brownian = " << (cfg.brownian ? "true" : "false") << '\n';
    out << "json = " << (cfg.json ? "true" : "false") << '\n';
    out << "checks = [";
    for (std::size_t i = 0; i < cfg.checks.size(); ++i) out << (i ? ", " : "") << quoted(cfg.checks[i]);
    out << "]\n";
}

void read_xy_csv(const std::string& path, std::vector<double>& x, std::vector<double>& y) {
    std::ifstream in(path);
    if (!in) throw UsageError("data", "cannot open '" + path + "'", "--data observations.csv");
    x.clear();
    y.clear();
    std::string line;
    std::size_t line_no = 0;
    std::size_t x_col = 0, y_col = 1;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            cell.erase(0, cell.find_first_not_of(" \t"));
            cell.erase(cell.find_last_not_of(" \t") + 1);
            cells.push_back(cell);
        }
        if (!header_seen && x.empty()) {
            const bool numeric = std::all_of(cells.begin(), cells.end(), [](const std::string& c) {
                char* end = nullptr;
                std::strtod(c.c_str(), &end);
                return !c.empty() && end && *end == '\0';
            });
            if (!numeric) {
                header_seen = true;
                const auto xi = std::find(cells.begin(), cells.end(), "x");
                const auto yi = std::find(cells.begin(), cells.end(), "y");
                if (xi == cells.end() || yi == cells.end()) {
                    throw UsageError("data", path + ":" + std::to_string(line_no) + ": header needs columns x and y",
                                     "x,y");
                }
                x_col = static_cast<std::size_t>(xi - cells.begin());
                y_col = static_cast<std::size_t>(yi - cells.begin());
                continue;
            }
        }
        auto number = [&](std::size_t col) {
            if (col >= cells.size()) {
                throw UsageError("data", path + ":" + std::to_string(line_no) + ": missing column " +
                                             std::to_string(col + 1), "0.5,1.25");
            }
            char* end = nullptr;
            const double v = std::strtod(cells[col].c_str(), &end);
            if (cells[col].empty() || !end || *end != '\0' || !std::isfinite(v)) {
                throw UsageError("data", path + ":" + std::to_string(line_no) + ": malformed value '" + cells[col] + "'",
                                 "0.5,1.25");
            }
            return v;
        };
        x.push_back(number(x_col));
        y.push_back(number(y_col));
    }
    if (x.size() < 3) {
        throw UsageError("data", path + ": need at least 3 rows, found " + std::to_string(x.size()), "x,y");
    }
}

ModelCheckResult model_check(std::vector<double> x, std::vector<double> y, std::size_t grid, std::size_t reps,
                             const std::vector<double>& levels, std::uint64_t seed, std::size_t threads) {
    if (x.size() != y.size()) throw DomainError("model_check: x and y lengths differ");
    if (x.size() < 3) throw DomainError("model_check: need at least 3 observations");

    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return x[i] < x[j]; });
    std::vector<double> xs(x.size()), ys(y.size());
    for (std::size_t k = 0; k < order.size(); ++k) {
        xs[k] = x[order[k]];
        ys[k] = y[order[k]];
    }

    ModelCheckResult r;
    r.n = xs.size();
    r.fit = ols_fit(xs, ys);
    const auto process = residual_process(xs, ys, r.fit);
    r.sigma_hat2 = process.sigma_hat2;
    r.bridge = empirical_bridge(process);
    r.statistic = grid_sup_statistic(r.bridge, grid);
    r.node_sup = sup_statistic(r.bridge);

    const auto plug_in = DistributionSpec::empirical(xs);
    const auto kernel = kernel_matrix(plug_in, grid);
    r.jitter_used = kernel.jitter_used();
    const auto sups = sample_limit_sup_statistics(kernel, reps, RandomStream(seed), threads);
    r.levels = levels;
    r.critical_values = empirical_quantiles(sups, levels);
    const auto exceed = static_cast<double>(std::count_if(sups.begin(), sups.end(),
                                                          [&](double s) { return s >= r.statistic; }));
    r.p_value = (exceed + 1.0) / (static_cast<double>(reps) + 1.0);
    r.reps = reps;
    r.grid = grid;
    return r;
}

int cmd_dispatch(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    echo_config(cfg);
    if (cfg.brownian && (cfg.subcommand == "kernel" || cfg.subcommand == "limit")) {
        err << "note: --brownian drops the Lorenz term; the kernel is synthetic and is not the limit of any model\n";
    }
    if (cfg.subcommand == "simulate") return run_simulate(cfg, out);
    if (cfg.subcommand == "bridge") return run_bridge(cfg, out);
    if (cfg.subcommand == "kernel") return run_kernel(cfg, out);
    if (cfg.subcommand == "limit") return run_limit(cfg, out);
    if (cfg.subcommand == "validate") return run_validate(cfg, out);
    if (cfg.subcommand == "test") return run_test(cfg, out, err);
    err << "unknown subcommand " << cfg.subcommand << '\n';
    return kUsageError;
}

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    RunConfig cfg;
    try {
        cfg = parse_config(argc, argv);
    } catch (const HelpRequested& h) {
        out << h.text;
        return kSuccess;
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return kUsageError;
    }
    try {
        return cmd_dispatch(cfg, out, err);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return kUsageError;
    } catch (const std::invalid_argument& e) {
        err << "configuration error: " << e.what() << '\n';
        return kUsageError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kCheckFailure;
    }
}

}  // namespace regbridge::cli
