#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "regbridge/random.hpp"

namespace regbridge {

struct Moments {
    double mean;
    double variance;
    double second_moment;
};

enum class Family { Uniform, Exponential, Normal, Empirical };

/// The regressor law F.
///
/// Quantiles follow the left-continuous convention
///     F^{-1}(s) = sup{x : F(x) < s},   0 < s <= 1,
/// which for an atom at x returns x for every s in (F(x-), F(x)].
///
/// Parametric families reject non-positive variance at construction. The
/// empirical family accepts a single atom (variance 0) because quantiles and
/// Lorenz curves are still defined; code that needs Var > 0 calls
/// require_positive_variance().
class DistributionSpec {
public:
    static DistributionSpec uniform(double lo, double hi);
    static DistributionSpec exponential(double rate);
    static DistributionSpec normal(double mean, double sd);
    /// Values need not be sorted; non-empty and finite.
    static DistributionSpec empirical(std::vector<double> values);

    /// Parses `uniform(lo,hi)`, `exp(rate)`, `normal(mean,sd)` or `empirical(path.csv)`.
    static DistributionSpec parse(std::string_view text);

    Family family() const noexcept;
    std::string describe() const;

    double cdf(double x) const;
    /// Throws DomainError for s outside (0,1], RangeError for an infinite value at s = 1.
    double quantile(double s) const;
    /// F^{-1}(1 - q), accurate for tiny q.
    double upper_quantile(double q) const;

    Moments moments() const;
    /// Throws ModelError when Var = 0.
    void require_positive_variance() const;

    /// GL_F(t) in closed form; nullopt for families without one.
    std::optional<double> closed_form_gl(double t) const;

    /// Sorted atoms of the empirical family; empty otherwise.
    std::span<const double> atoms() const noexcept;

private:
    struct Uniform {
        double lo, hi;
    };
    struct Exponential {
        double rate;
    };
    struct Normal {
        double mean, sd;
    };
    struct Empirical {
        std::vector<double> sorted;
        std::vector<double> prefix;  // prefix[k] = sum of the k smallest atoms
        Moments moments;
    };

    using Law = std::variant<Uniform, Exponential, Normal, std::shared_ptr<const Empirical>>;
    explicit DistributionSpec(Law law) : law_(std::move(law)) {}

    Law law_;
};

/// count i.i.d. draws by inverse transform, one uniform per draw.
std::vector<double> sample(const DistributionSpec& spec, std::size_t count, RandomStream& rng);

/// Reads one value per line; blank lines and a non-numeric first line are skipped.
std::vector<double> read_values_csv(const std::string& path);

struct QuadratureOptions {
    double abs_tol = 1e-10;
    std::size_t max_subdivisions = std::size_t{1} << 16;
};

/// General Lorenz curve GL_F(t) = integral of F^{-1} over [0, t] and its
/// centered form GL_F^0(t) = GL_F(t) - t GL_F(1).
class LorenzCurve {
public:
    enum class Mode { ClosedForm, Quadrature };

    /// Closed form when the family has one, quadrature otherwise.
    explicit LorenzCurve(DistributionSpec spec);
    LorenzCurve(DistributionSpec spec, QuadratureOptions quadrature);

    const DistributionSpec& spec() const noexcept { return spec_; }
    Mode mode() const noexcept { return mode_; }

    double gl(double t) const;
    double gl_centered(double t) const;

private:
    double integrate_quantile(double t) const;

    DistributionSpec spec_;
    Mode mode_;
    QuadratureOptions quadrature_;
    double total_;  // GL_F(1)
};

}  // namespace regbridge
