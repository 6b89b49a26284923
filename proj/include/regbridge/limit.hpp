#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "regbridge/distributions.hpp"
#include "regbridge/random.hpp"
#include "regbridge/regression.hpp"

namespace regbridge {

/// Limit mode uses K(t,s) = min(t,s) - ts - GL0(t) GL0(s) / Var xi.
/// BrownianBridge drops the Lorenz term; it matches no legal F (GL0 = 0
/// would force Var xi = 0) and exists as a known-answer harness.
enum class KernelMode { Limit, BrownianBridge };

/// Covariance kernel of the limit process for the law behind `curve`.
double kernel_value(const LorenzCurve& curve, double variance, double t, double s);

/// Convenience overload. Throws ModelError when Var = 0.
double kernel_value(const DistributionSpec& dist, double t, double s);

double brownian_bridge_kernel(double t, double s);

/// Kernel on the grid t_j = j / G, j = 0..G, with a Cholesky factor of the
/// interior block. Rows and columns 0 and G are identically zero, so paths
/// are sampled on the interior and pinned to 0 at both ends.
class KernelGrid {
public:
    std::size_t grid_size() const noexcept { return grid_size_; }
    const std::vector<double>& times() const noexcept { return times_; }
    /// (G+1) x (G+1).
    const Eigen::MatrixXd& matrix() const noexcept { return matrix_; }
    /// Lower-triangular factor of the (G-1) x (G-1) interior block (+ jitter).
    const Eigen::MatrixXd& factor() const noexcept { return factor_; }
    double jitter_used() const noexcept { return jitter_used_; }
    KernelMode mode() const noexcept { return mode_; }

private:
    friend KernelGrid kernel_matrix(const DistributionSpec&, std::size_t, KernelMode);

    std::size_t grid_size_ = 0;
    std::vector<double> times_;
    Eigen::MatrixXd matrix_;
    Eigen::MatrixXd factor_;
    double jitter_used_ = 0.0;
    KernelMode mode_ = KernelMode::Limit;
};

/// Jitter ladder tried in order while factorizing; anything beyond the last
/// rung raises KernelNotPsdError.
inline constexpr double kJitterLadder[] = {0.0, 1e-12, 1e-10, 1e-8, 1e-6};

KernelGrid kernel_matrix(const DistributionSpec& dist, std::size_t grid_size,
                         KernelMode mode = KernelMode::Limit);

/// Smallest eigenvalue of the symmetrized interior block, before jitter.
double min_interior_eigenvalue(const KernelGrid& grid);

/// One path of the limit process on the grid, drawn with rng.
BridgePolygon sample_limit_path(const KernelGrid& grid, RandomStream& rng);

/// max_k |nodes[k]|, the exact sup of a piecewise-linear path.
double sup_statistic(const BridgePolygon& poly);

/// max_j |poly(j / G)|, j = 0..G. Limit paths only exist on the grid, and a
/// maximum over G points falls short of the true sup by O(G^{-1/2}); comparing
/// a fine polygon against them therefore needs the same grid.
double grid_sup_statistic(const BridgePolygon& poly, std::size_t grid_size);

/// sup-statistics of `reps` limit paths. Path i uses the stream
/// keys.child({LimitPath, i}) so the output is independent of `threads`.
std::vector<double> sample_limit_sup_statistics(const KernelGrid& grid, std::size_t reps, const RandomStream& keys,
                                                std::size_t threads = 1);

/// Quantiles sorted[ceil(level * R) - 1] of the sup-statistic of `reps` limit paths.
std::vector<double> critical_values(const KernelGrid& grid, std::span<const double> levels, std::size_t reps,
                                    const RandomStream& keys, std::size_t threads = 1);

/// Left-continuous empirical quantiles of `values` (not required sorted).
std::vector<double> empirical_quantiles(std::vector<double> values, std::span<const double> levels);

/// sup_x |F_a(x) - F_b(x)| between two empirical distributions.
double ks_distance(std::vector<double> a, std::vector<double> b);

/// Header row `t,t_0,...,t_G`, then one row per t_i.
void write_kernel_csv(std::ostream& out, const KernelGrid& grid);

}  // namespace regbridge
