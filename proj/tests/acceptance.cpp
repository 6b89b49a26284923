// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "regbridge/cli.hpp"
#include "regbridge/limit.hpp"
#include "regbridge/montecarlo.hpp"

using namespace regbridge;
namespace fs = std::filesystem;

namespace {

// Tolerances, fixed here so a change shows up in review.
constexpr double kKernelTol = 1e-10;
constexpr double kExpKernelTol = 1e-6;
constexpr double kMinEigenvalue = -1e-8;
constexpr double kRankOneTol = 1e-10;
constexpr double kCovarianceTol = 0.01;
constexpr double kKsThreshold = 0.06;
constexpr double kSigmaRelTol = 0.03;
constexpr double kLorenzGapUniform = 0.03;
constexpr double kLorenzGapExponential = 0.08;
constexpr double kKolmogorov95 = 1.358;
constexpr double kKolmogorovTol = 0.03;
constexpr double kIdentityRelTol = 1e-9;
constexpr std::uint64_t kSeed = 20131;

struct Outcome {
    bool pass;
    std::string detail;
};

MarkovChain two_state() {
    Eigen::MatrixXd p(2, 2);
    p << 0.9, 0.1, 0.2, 0.8;
    return MarkovChain(p);
}

McConfig criterion3_config() {
    McConfig mc(RegressionConfig{0.0, 1.0, 2000, DistributionSpec::uniform(0, 1), NoiseModel(two_state(), {1.0, 2.0})});
    mc.replications = 2000;
    mc.grid_size = 256;
    mc.seed = kSeed;
    return mc;
}

const Estimate& find_item(const CheckRecord& r, const std::string& label) {
    for (const auto& e : r.items) {
        if (e.label == label) return e;
    }
    throw std::runtime_error(r.name + ": no item " + label);
}

std::string fmt(double v) {
    std::ostringstream s;
    s << std::setprecision(8) << v;
    return s.str();
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

Outcome kernel_known_values() {
    const auto u = DistributionSpec::uniform(0, 1);
    const double k1 = kernel_value(u, 0.5, 0.5);
    const double k2 = kernel_value(u, 0.25, 0.75);
    const double k3 = kernel_value(DistributionSpec::exponential(1), 0.5, 0.5);
    const bool ok = std::fabs(k1 - 0.0625) <= kKernelTol && std::fabs(k2 + 0.04296875) <= kKernelTol &&
                    std::fabs(k3 - 0.129887) <= kExpKernelTol;
    return {ok, "K(.5,.5)=" + fmt(k1) + " K(.25,.75)=" + fmt(k2) + " K_exp(.5,.5)=" + fmt(k3)};
}

Outcome kernel_structure() {
    const auto u = DistributionSpec::uniform(0, 1);
    const auto e = DistributionSpec::exponential(1);
    bool symmetric = true;
    for (int i = 0; i < 10; ++i) {
        for (int j = 0; j < 10; ++j) {
            const double t = (i + 0.5) / 10.0;
            const double s = (j + 0.3) / 10.0;
            symmetric = symmetric && same_bits(kernel_value(u, t, s), kernel_value(u, s, t)) &&
                        same_bits(kernel_value(e, t, s), kernel_value(e, s, t));
        }
    }
    const auto grid = kernel_matrix(u, 256);
    const auto& m = grid.matrix();
    bool endpoints = true;
    for (Eigen::Index k = 0; k <= 256; ++k) {
        endpoints = endpoints && m(0, k) == 0.0 && m(256, k) == 0.0 && m(k, 0) == 0.0 && m(k, 256) == 0.0;
    }
    bool matrix_symmetric = true;
    for (Eigen::Index i = 0; i <= 256; ++i) {
        for (Eigen::Index j = 0; j <= 256; ++j) matrix_symmetric = matrix_symmetric && same_bits(m(i, j), m(j, i));
    }
    const double min_eig = min_interior_eigenvalue(grid);

    double rank_one_gap = 0.0;
    for (const auto& d : {u, e}) {
        const LorenzCurve curve(d);
        const double var = d.moments().variance;
        for (int i = 0; i < 50; ++i) {
            for (int j = 0; j < 50; ++j) {
                const double t = i / 49.0;
                const double s = j / 49.0;
                const double lhs = kernel_value(d, t, s) + curve.gl_centered(t) * curve.gl_centered(s) / var;
                rank_one_gap = std::max(rank_one_gap, std::fabs(lhs - brownian_bridge_kernel(t, s)));
            }
        }
    }
    const bool ok = symmetric && matrix_symmetric && endpoints && min_eig >= kMinEigenvalue &&
                    rank_one_gap <= kRankOneTol;
    return {ok, std::string("symmetric=") + (symmetric && matrix_symmetric ? "bitwise" : "NO") +
                    " endpoints_zero=" + (endpoints ? "yes" : "NO") + " min_eig=" + fmt(min_eig) +
                    " rank_one_gap=" + fmt(rank_one_gap)};
}

Outcome covariance_convergence() {
    const auto r = check_covariance(criterion3_config());
    const auto& v = find_item(r, "cov(0.5,0.5)");
    const auto& c = find_item(r, "cov(0.25,0.75)");
    const bool ok = r.rejections == 0 && std::fabs(v.estimate - 0.0625) <= kCovarianceTol &&
                    std::fabs(c.estimate - (-0.0430)) <= kCovarianceTol;
    return {ok, "Var(0.5)=" + fmt(v.estimate) + " Cov(0.25,0.75)=" + fmt(c.estimate) +
                    " rejections=" + std::to_string(r.rejections)};
}

Outcome supstat_match() {
    const auto r = check_supstat_distribution(criterion3_config());
    const double ks = find_item(r, "ks_distance").estimate;
    return {ks <= kKsThreshold, "KS=" + fmt(ks) + " (R=2000 each, G=256)"};
}

Outcome sigma_hat_consistency() {
    const auto two = check_sigma_hat(criterion3_config());
    McConfig single(RegressionConfig{0.0, 1.0, 2000, DistributionSpec::uniform(0, 1),
                                     NoiseModel(MarkovChain::single_state(), {1.5})});
    single.seed = kSeed;
    const auto one = check_sigma_hat(single);
    const double m2 = find_item(two, "mean_sigma_hat2").estimate;
    const double m1 = find_item(one, "mean_sigma_hat2").estimate;
    const bool ok = std::fabs(m2 - 2.0) <= kSigmaRelTol * 2.0 && std::fabs(m1 - 2.25) <= kSigmaRelTol * 2.25;
    return {ok, "mean(M=2)=" + fmt(m2) + " vs 2.0, mean(M=1)=" + fmt(m1) + " vs 2.25"};
}

Outcome lorenz_convergence() {
    auto mc = criterion3_config();
    mc.lorenz_n = 10000;
    mc.lorenz_seeds = 50;
    mc.lorenz_grid = 1000;
    mc.lorenz_threshold = kLorenzGapUniform;
    const double wu = find_item(check_lorenz_convergence(mc), "worst_sup_gap").estimate;
    mc.regression.dist = DistributionSpec::exponential(1);
    mc.lorenz_threshold = kLorenzGapExponential;
    const double we = find_item(check_lorenz_convergence(mc), "worst_sup_gap").estimate;
    return {wu <= kLorenzGapUniform && we <= kLorenzGapExponential,
            "worst gap uniform=" + fmt(wu) + " exponential=" + fmt(we)};
}

Outcome brownian_known_answer() {
    const auto grid = kernel_matrix(DistributionSpec::uniform(0, 1), 512, KernelMode::BrownianBridge);
    const std::vector<double> levels{0.95};
    const double q = critical_values(grid, levels, 100000, RandomStream::derive(kSeed, {7}))[0];
    return {std::fabs(q - kKolmogorov95) <= kKolmogorovTol, "q95=" + fmt(q) + " (G=512, reps=1e5)"};
}

Outcome exact_identities() {
    bool ok = true;
    double worst_sum = 0.0;
    double worst_cross = 0.0;
    double worst_invariance = 0.0;
    const DistributionSpec laws[] = {DistributionSpec::uniform(0, 1), DistributionSpec::exponential(1),
                                     DistributionSpec::normal(5, 2)};
    std::uint64_t stream = 0;
    for (const auto& law : laws) {
        for (std::size_t n : {3u, 50u, 2000u, 100000u}) {
            const RegressionConfig cfg{2.0, -1.0, n, law, NoiseModel(two_state(), {1.0, 2.0})};
            auto rng = RandomStream::derive(kSeed, {8, stream++});
            const auto s = generate_sample(cfg, rng);
            const auto p = residual_process(s, ols_fit(s));
            long double sum = 0.0L, abs_sum = 0.0L, cross = 0.0L, abs_cross = 0.0L;
            for (std::size_t i = 0; i < n; ++i) {
                sum += p.residuals[i];
                abs_sum += std::fabs(p.residuals[i]);
                cross += p.residuals[i] * s.x[i];
                abs_cross += std::fabs(p.residuals[i] * s.x[i]);
            }
            worst_sum = std::max(worst_sum, static_cast<double>(std::fabs(sum) / abs_sum));
            worst_cross = std::max(worst_cross, static_cast<double>(std::fabs(cross) / abs_cross));

            const auto bridge = empirical_bridge(p);
            ok = ok && bridge.nodes.front() == 0.0 && bridge.nodes.back() == 0.0;
            double node_max = 0.0;
            for (double v : bridge.nodes) node_max = std::max(node_max, std::fabs(v));
            ok = ok && sup_statistic(bridge) == node_max;

            auto y = s.y;
            for (std::size_t i = 0; i < n; ++i) y[i] = 3.5 * y[i] + 10.0 - 4.0 * s.x[i];
            const auto moved = empirical_bridge(residual_process(s.x, y, ols_fit(s.x, y)));
            for (std::size_t k = 0; k <= n; ++k) {
                worst_invariance = std::max(worst_invariance, std::fabs(moved.nodes[k] - bridge.nodes[k]));
            }
        }
    }
    ok = ok && worst_sum <= kIdentityRelTol && worst_cross <= kIdentityRelTol && worst_invariance <= kIdentityRelTol;
    return {ok, "sum_rel=" + fmt(worst_sum) + " cross_rel=" + fmt(worst_cross) +
                    " invariance=" + fmt(worst_invariance) + " endpoints/sup exact=" + (ok ? "yes" : "see values")};
}

Outcome degenerate_chain() {
    for (auto family : {NoiseFamily::Gaussian, NoiseFamily::Rademacher}) {
        McConfig mc(RegressionConfig{0.0, 1.0, 2000, DistributionSpec::exponential(1),
                                     NoiseModel(MarkovChain::single_state(), {1.3}, family)});
        mc.seed = kSeed;
        const auto r = check_degenerate_chain_equivalence(mc);
        if (r.status != Status::Pass) return {false, to_string(family) + ": " + r.note};
    }
    return {true, "M=1 pipeline bit-identical to chain-free pipeline (gaussian, rademacher)"};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome determinism() {
    const auto root = fs::temp_directory_path() / "regbridge_acceptance";
    fs::remove_all(root);
    auto run = [&](const std::string& name, const std::string& threads) {
        const std::string out = (root / name).string();
        const std::vector<std::string> args{"regbridge", "validate", "--dist", "uniform(0,1)",
                                            "--transition", "[[0.9,0.1],[0.2,0.8]]", "--sigmas", "1,2",
                                            "--threads", threads, "--json", "--out", out};
        std::vector<const char*> argv;
        for (const auto& a : args) argv.push_back(a.c_str());
        std::ostringstream sink;
        return cli::main_entry(static_cast<int>(argv.size()), argv.data(), sink, sink);
    };
    const int c1 = run("a", "1");
    const int c2 = run("b", "1");
    const int c3 = run("c", "4");
    bool identical = c1 == c2 && c2 == c3;
    std::size_t compared = 0;
    for (const char* f : {"report.csv", "report_details.csv", "report.json", "report.txt"}) {
        const auto a = slurp(root / "a" / f);
        identical = identical && !a.empty() && a == slurp(root / "b" / f) && a == slurp(root / "c" / f);
        ++compared;
    }
    return {identical, std::to_string(compared) + " report files identical across 2 runs and threads 1/4 (exit " +
                           std::to_string(c1) + ")"};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"kernel known values", kernel_known_values},
        {"kernel structure", kernel_structure},
        {"covariance convergence", covariance_convergence},
        {"sup-statistic distribution", supstat_match},
        {"sigma_hat consistency", sigma_hat_consistency},
        {"empirical Lorenz convergence", lorenz_convergence},
        {"Brownian-bridge known answer", brownian_known_answer},
        {"exact identities", exact_identities},
        {"degenerate-chain equivalence", degenerate_chain},
        {"validate determinism", determinism},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (!o.pass) ++failures;
        std::cout << (o.pass ? "PASS" : "FAIL") << "  [" << std::setw(2) << i + 1 << "] " << criteria[i].first
                  << ": " << o.detail << "  (" << std::fixed << std::setprecision(2) << secs << " s)"
                  << std::defaultfloat << '\n';
    }
    std::cout << (failures == 0 ? "all acceptance criteria pass" : std::to_string(failures) + " criteria failed")
              << '\n';
    return failures == 0 ? 0 : 1;
}
