#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "regbridge/distributions.hpp"
#include "regbridge/noise.hpp"
#include "regbridge/random.hpp"

namespace regbridge {

/// Y_i = a + b X_(i) + eps_i^{V_i}, X_(i) the i-th order statistic of n draws of F.
struct RegressionConfig {
    double a = 0.0;
    double b = 1.0;
    std::size_t n = 2000;
    DistributionSpec dist;
    NoiseModel noise;

    /// Throws ModelError on n < 3 or Var F = 0.
    void validate() const;
};

struct RegressionSample {
    std::vector<double> x;  // non-decreasing
    std::vector<State> states;
    std::vector<double> y;
    double a = 0.0;
    double b = 0.0;

    std::size_t size() const noexcept { return x.size(); }
};

/// Regressors, chain and noise come from three independent children of rng;
/// noise index i is paired with the i-th order statistic.
RegressionSample generate_sample(const RegressionConfig& config, RandomStream& rng);

/// Same, from pre-drawn noise. Used to build chain-free pipelines.
RegressionSample assemble_sample(double a, double b, std::vector<double> sorted_x, std::vector<State> states,
                                 std::span<const double> noise);

struct OlsFit {
    double a_hat;
    double b_hat;
    double mean_x;
    double mean_y;
    double mean_x2;
    double mean_xy;
};

/// Gauss-Markov estimators. Throws DegenerateDesignError when all x are equal.
OlsFit ols_fit(std::span<const double> x, std::span<const double> y);
inline OlsFit ols_fit(const RegressionSample& s) { return ols_fit(s.x, s.y); }

struct ResidualProcess {
    std::vector<double> residuals;     // size n
    std::vector<double> partial_sums;  // size n + 1, partial_sums[0] = 0
    double sigma_hat2;

    std::size_t size() const noexcept { return residuals.size(); }
};

ResidualProcess residual_process(std::span<const double> x, std::span<const double> y, const OlsFit& fit);
inline ResidualProcess residual_process(const RegressionSample& s, const OlsFit& fit) {
    return residual_process(s.x, s.y, fit);
}

/// Piecewise-linear path on [0, 1] with equally spaced nodes at k / (size - 1).
struct BridgePolygon {
    enum class Kind { RandomPolygon, EmpiricalBridge, LimitPath };

    std::vector<double> nodes;
    Kind kind = Kind::RandomPolygon;

    std::size_t segments() const noexcept { return nodes.size() - 1; }
};

/// Nodes Delta_k / (sigma sqrt n) with the true noise sd sigma.
BridgePolygon random_polygon(const ResidualProcess& process, double sigma);

/// Nodes (Delta_k - (k/n) Delta_n) / sqrt(n sigma_hat^2). Throws DegenerateBridgeError when sigma_hat^2 = 0.
BridgePolygon empirical_bridge(const ResidualProcess& process);

/// Linear interpolation; exact node values at t = k/n.
double polygon_eval(const BridgePolygon& poly, double t);

/// GL_n(t) = (1/n) sum_{i <= [nt]} x_(i). Values need not be sorted.
double empirical_lorenz(std::span<const double> values, double t);

/// Same for many t with one sort.
std::vector<double> empirical_lorenz(std::span<const double> values, std::span<const double> ts);

void write_sample_csv(std::ostream& out, const RegressionSample& sample);
void write_bridge_csv(std::ostream& out, const BridgePolygon& poly);

}  // namespace regbridge
