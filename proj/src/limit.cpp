#include "regbridge/limit.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include <boost/math/distributions/normal.hpp>

#include "regbridge/csv.hpp"
#include "regbridge/error.hpp"
#include "regbridge/parallel.hpp"

namespace regbridge {

namespace {

// Shared by kernel_value and kernel_matrix so grid entries match point
// evaluations bit for bit.
inline double kernel_from_parts(double t, double s, double gl0_t, double gl0_s, double variance) {
    return std::min(t, s) - t * s - gl0_t * gl0_s / variance;
}

void check_unit_interval(double t, const char* what) {
    if (!(t >= 0.0 && t <= 1.0)) {
        std::ostringstream msg;
        msg << what << ": " << t << " is outside [0, 1]";
        throw DomainError(msg.str());
    }
}

const boost::math::normal_distribution<double> kStdNormal{0.0, 1.0};

constexpr std::size_t kPathBlock = 128;

}  // namespace

double brownian_bridge_kernel(double t, double s) {
    check_unit_interval(t, "kernel");
    check_unit_interval(s, "kernel");
    return std::min(t, s) - t * s;
}

double kernel_value(const LorenzCurve& curve, double variance, double t, double s) {
    check_unit_interval(t, "kernel");
    check_unit_interval(s, "kernel");
    if (!(variance > 0.0)) throw ModelError("kernel: Var xi must be > 0");
    return kernel_from_parts(t, s, curve.gl_centered(t), curve.gl_centered(s), variance);
}

double kernel_value(const DistributionSpec& dist, double t, double s) {
    dist.require_positive_variance();
    const LorenzCurve curve(dist);
    return kernel_value(curve, dist.moments().variance, t, s);
}

KernelGrid kernel_matrix(const DistributionSpec& dist, std::size_t grid_size, KernelMode mode) {
    if (grid_size < 2) throw DomainError("kernel_matrix: grid size must be at least 2");
    KernelGrid grid;
    grid.grid_size_ = grid_size;
    grid.mode_ = mode;
    const auto g = static_cast<Eigen::Index>(grid_size);

    grid.times_.resize(grid_size + 1);
    for (std::size_t j = 0; j <= grid_size; ++j) {
        grid.times_[j] = static_cast<double>(j) / static_cast<double>(grid_size);
    }

    std::vector<double> gl0(grid_size + 1, 0.0);
    double variance = 1.0;
    if (mode == KernelMode::Limit) {
        dist.require_positive_variance();
        variance = dist.moments().variance;
        const LorenzCurve curve(dist);
        for (std::size_t j = 0; j <= grid_size; ++j) gl0[j] = curve.gl_centered(grid.times_[j]);
    }

    grid.matrix_.resize(g + 1, g + 1);
    for (Eigen::Index i = 0; i <= g; ++i) {
        for (Eigen::Index j = 0; j <= g; ++j) {
            const auto ui = static_cast<std::size_t>(i);
            const auto uj = static_cast<std::size_t>(j);
            grid.matrix_(i, j) =
                kernel_from_parts(grid.times_[ui], grid.times_[uj], gl0[ui], gl0[uj], variance);
        }
    }

    const Eigen::MatrixXd interior = grid.matrix_.block(1, 1, g - 1, g - 1);
    for (double jitter : kJitterLadder) {
        Eigen::MatrixXd shifted = interior;
        shifted.diagonal().array() += jitter;
        Eigen::LLT<Eigen::MatrixXd> llt(shifted);
        if (llt.info() == Eigen::Success) {
            grid.factor_ = llt.matrixL();
            grid.jitter_used_ = jitter;
            return grid;
        }
    }
    std::ostringstream msg;
    msg << "kernel_matrix: interior block not positive definite even with jitter " << kJitterLadder[4]
        << " (G = " << grid_size << ", " << dist.describe() << ")";
    throw KernelNotPsdError(msg.str(), kJitterLadder[4]);
}

double min_interior_eigenvalue(const KernelGrid& grid) {
    const auto g = static_cast<Eigen::Index>(grid.grid_size());
    const Eigen::MatrixXd block = grid.matrix().block(1, 1, g - 1, g - 1);
    const Eigen::MatrixXd sym = 0.5 * (block + block.transpose());
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
}

BridgePolygon sample_limit_path(const KernelGrid& grid, RandomStream& rng) {
    const auto inner = grid.factor().rows();
    Eigen::VectorXd z(inner);
    for (Eigen::Index i = 0; i < inner; ++i) z(i) = boost::math::quantile(kStdNormal, rng.uniform_open());
    const Eigen::VectorXd path = grid.factor().triangularView<Eigen::Lower>() * z;

    BridgePolygon poly{std::vector<double>(grid.grid_size() + 1, 0.0), BridgePolygon::Kind::LimitPath};
    for (Eigen::Index i = 0; i < inner; ++i) poly.nodes[static_cast<std::size_t>(i) + 1] = path(i);
    return poly;
}

double sup_statistic(const BridgePolygon& poly) {
    double best = 0.0;
    for (double v : poly.nodes) best = std::max(best, std::fabs(v));
    return best;
}

double grid_sup_statistic(const BridgePolygon& poly, std::size_t grid_size) {
    if (grid_size < 1) throw DomainError("grid_sup_statistic: grid size must be at least 1");
    double best = 0.0;
    for (std::size_t j = 0; j <= grid_size; ++j) {
        const double t = static_cast<double>(j) / static_cast<double>(grid_size);
        best = std::max(best, std::fabs(polygon_eval(poly, t)));
    }
    return best;
}

std::vector<double> sample_limit_sup_statistics(const KernelGrid& grid, std::size_t reps, const RandomStream& keys,
                                                std::size_t threads) {
    std::vector<double> sups(reps, 0.0);
    const auto inner = grid.factor().rows();
    const std::size_t blocks = (reps + kPathBlock - 1) / kPathBlock;

    // Fixed block composition keeps every column's arithmetic identical
    // whatever the worker count.
    parallel_for(blocks, threads, [&](std::size_t block) {
        const std::size_t first = block * kPathBlock;
        const std::size_t count = std::min(kPathBlock, reps - first);
        Eigen::MatrixXd z(inner, static_cast<Eigen::Index>(count));
        for (std::size_t c = 0; c < count; ++c) {
            auto rng = keys.child({tag(StreamTag::LimitPath), first + c});
            for (Eigen::Index i = 0; i < inner; ++i) {
                z(i, static_cast<Eigen::Index>(c)) = boost::math::quantile(kStdNormal, rng.uniform_open());
            }
        }
        const Eigen::MatrixXd paths = grid.factor().triangularView<Eigen::Lower>() * z;
        for (std::size_t c = 0; c < count; ++c) {
            sups[first + c] = paths.col(static_cast<Eigen::Index>(c)).cwiseAbs().maxCoeff();
        }
    });
    return sups;
}

std::vector<double> empirical_quantiles(std::vector<double> values, std::span<const double> levels) {
    if (values.empty()) throw DomainError("empirical_quantiles: no values");
    std::sort(values.begin(), values.end());
    std::vector<double> out;
    out.reserve(levels.size());
    const auto r = static_cast<double>(values.size());
    for (double level : levels) {
        if (!(level > 0.0 && level < 1.0)) throw DomainError("empirical_quantiles: level outside (0, 1)");
        auto k = static_cast<std::size_t>(std::ceil(level * r));
        k = std::clamp<std::size_t>(k, 1, values.size());
        out.push_back(values[k - 1]);
    }
    return out;
}

std::vector<double> critical_values(const KernelGrid& grid, std::span<const double> levels, std::size_t reps,
                                    const RandomStream& keys, std::size_t threads) {
    if (reps < 1000) throw DomainError("critical_values: need at least 1000 replications");
    return empirical_quantiles(sample_limit_sup_statistics(grid, reps, keys, threads), levels);
}

double ks_distance(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw DomainError("ks_distance: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const auto na = static_cast<double>(a.size());
    const auto nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double best = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == x) ++i;
        while (j < b.size() && b[j] == x) ++j;
        best = std::max(best, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return best;
}

void write_kernel_csv(std::ostream& out, const KernelGrid& grid) {
    out << 't';
    for (double t : grid.times()) out << ',' << format_double(t);
    out << '\n';
    const auto& m = grid.matrix();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        out << format_double(grid.times()[static_cast<std::size_t>(i)]);
        for (Eigen::Index j = 0; j < m.cols(); ++j) out << ',' << format_double(m(i, j));
        out << '\n';
    }
}

}  // namespace regbridge
