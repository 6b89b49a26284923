#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>

#include "regbridge/distributions.hpp"
#include "regbridge/error.hpp"

using namespace regbridge;

namespace {

// Test-only oracles, independent of the library's closed forms and of its
// tanh-sinh quadrature.

double bisect_quantile(const DistributionSpec& d, double s, double lo, double hi) {
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (d.cdf(mid) < s ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// Composite Gauss-Legendre (5 nodes) on n equal panels.
double gauss_legendre(const std::function<double(double)>& f, double a, double b, int panels) {
    static const double x[] = {0.0, -0.5384693101056831, 0.5384693101056831, -0.9061798459386640,
                               0.9061798459386640};
    static const double w[] = {0.5688888888888889, 0.4786286704993665, 0.4786286704993665, 0.2369268850561891,
                               0.2369268850561891};
    const double h = (b - a) / panels;
    double total = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double mid = a + (p + 0.5) * h;
        for (int k = 0; k < 5; ++k) total += w[k] * f(mid + 0.5 * h * x[k]) * 0.5 * h;
    }
    return total;
}

// Improper integral on (0, t] with geometric panels toward a singular end at 1.
double oracle_gl(const DistributionSpec& d, double t) {
    if (t < 1.0) return gauss_legendre([&](double s) { return d.quantile(s); }, 0.0, t, 4000);
    double total = gauss_legendre([&](double s) { return d.quantile(s); }, 0.0, 0.5, 2000);
    double a = 0.5;
    for (int i = 0; i < 45; ++i) {
        const double b = 1.0 - (1.0 - a) / 2.0;
        total += gauss_legendre([&](double s) { return d.quantile(s); }, a, b, 20);
        a = b;
    }
    return total;
}

}  // namespace

TEST(Quantile, UniformIsIdentity) {
    EXPECT_DOUBLE_EQ(DistributionSpec::uniform(0, 1).quantile(0.3), 0.3);
    EXPECT_EQ(DistributionSpec::uniform(0, 1).quantile(1.0), 1.0);
}

TEST(Quantile, ExponentialMedianMatchesBisection) {
    const auto d = DistributionSpec::exponential(1.0);
    const double oracle = bisect_quantile(d, 0.5, 0.0, 50.0);
    EXPECT_NEAR(oracle, 0.693147, 1e-6);
    EXPECT_NEAR(d.quantile(0.5), oracle, 1e-12);
    EXPECT_NEAR(d.quantile(0.5), std::log(2.0), 1e-15);
}

TEST(Quantile, EmpiricalUsesSupConvention) {
    // F(0) = 1/2 is not < 1/2, so sup{x : F(x) < 1/2} = 0.
    const auto bernoulli = DistributionSpec::empirical({0.0, 1.0});
    EXPECT_EQ(bernoulli.quantile(0.5), 0.0);
    EXPECT_EQ(bernoulli.quantile(0.5000001), 1.0);
    EXPECT_EQ(bernoulli.quantile(1.0), 1.0);

    const auto ties = DistributionSpec::empirical({3.0, 2.0, 1.0, 2.0});
    EXPECT_EQ(ties.quantile(0.25), 1.0);
    EXPECT_EQ(ties.quantile(0.26), 2.0);
    EXPECT_EQ(ties.quantile(0.75), 2.0);
    EXPECT_EQ(ties.quantile(0.76), 3.0);
}

TEST(Quantile, EmpiricalIndexIsRobustToRounding) {
    std::vector<double> v(10);
    std::iota(v.begin(), v.end(), 1.0);
    const auto d = DistributionSpec::empirical(v);
    // 0.3 * 10 is 3.0000000000000004 in binary; the third atom is still right.
    EXPECT_EQ(d.quantile(0.3), 3.0);
    EXPECT_EQ(d.quantile(0.7), 7.0);
}

TEST(Quantile, RejectsOutOfRangeProbabilities) {
    const auto d = DistributionSpec::uniform(0, 1);
    EXPECT_THROW(d.quantile(0.0), DomainError);
    EXPECT_THROW(d.quantile(1.5), DomainError);
    EXPECT_THROW(d.quantile(-0.1), DomainError);
    EXPECT_THROW(d.quantile(std::nan("")), DomainError);
    EXPECT_THROW(DistributionSpec::exponential(1).quantile(1.0), RangeError);
    EXPECT_THROW(DistributionSpec::normal(0, 1).quantile(1.0), RangeError);
}

TEST(Quantile, InvertsCdfOnContinuousFamilies) {
    const DistributionSpec families[] = {DistributionSpec::uniform(-2, 3), DistributionSpec::exponential(1.7),
                                         DistributionSpec::normal(0.5, 2.0)};
    for (const auto& d : families) {
        for (int i = 1; i <= 1000; ++i) {
            const double s = (i - 0.5) / 1000.0;
            EXPECT_NEAR(d.cdf(d.quantile(s)), s, 1e-12) << d.describe() << " s=" << s;
        }
    }
}

TEST(Quantile, NonDecreasing) {
    const DistributionSpec families[] = {DistributionSpec::uniform(0, 1), DistributionSpec::exponential(1),
                                         DistributionSpec::normal(0, 1),
                                         DistributionSpec::empirical({5, 1, 4, 1, 3})};
    for (const auto& d : families) {
        double prev = -INFINITY;
        for (int i = 1; i < 1000; ++i) {
            const double q = d.quantile(i / 1000.0);
            EXPECT_LE(prev, q);
            prev = q;
        }
    }
}

TEST(Sample, UniformIsReproducibleAndInRange) {
    RandomStream a(7), b(7);
    const auto d = DistributionSpec::uniform(0, 1);
    const auto xs = sample(d, 5, a);
    EXPECT_EQ(xs, sample(d, 5, b));
    for (double x : xs) {
        EXPECT_GE(x, 0.0);
        EXPECT_LE(x, 1.0);
    }
}

TEST(Sample, ExponentialMeanByLawOfLargeNumbers) {
    RandomStream rng(11);
    const auto xs = sample(DistributionSpec::exponential(1), 100000, rng);
    const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
    EXPECT_NEAR(mean, 1.0, 0.02);
}

TEST(Sample, DegenerateEmpirical) {
    RandomStream rng(1);
    EXPECT_EQ(sample(DistributionSpec::empirical({7.0}), 3, rng), (std::vector<double>{7, 7, 7}));
    EXPECT_THROW(sample(DistributionSpec::empirical({7.0}), 0, rng), DomainError);
}

TEST(Moments, ClosedFormsMatchQuadrature) {
    struct Case {
        DistributionSpec d;
        Moments expected;
    };
    const Case cases[] = {{DistributionSpec::uniform(0, 1), {0.5, 1.0 / 12.0, 1.0 / 3.0}},
                          {DistributionSpec::exponential(1), {1.0, 1.0, 2.0}}};
    for (const auto& c : cases) {
        const auto m = c.d.moments();
        EXPECT_DOUBLE_EQ(m.mean, c.expected.mean);
        EXPECT_DOUBLE_EQ(m.variance, c.expected.variance);
        EXPECT_DOUBLE_EQ(m.second_moment, c.expected.second_moment);
        // E xi^k = integral over (0,1) of Q(s)^k ds.
        const double mean = gauss_legendre([&](double s) { return c.d.quantile(s); }, 0.0, 1.0, 20000);
        const double second =
            gauss_legendre([&](double s) { return std::pow(c.d.quantile(s), 2); }, 0.0, 1.0, 20000);
        EXPECT_NEAR(mean, m.mean, 1e-4);
        EXPECT_NEAR(second, m.second_moment, 1e-3);
    }
}

TEST(Moments, EmpiricalUsesDivisorN) {
    const auto m = DistributionSpec::empirical({1, 2, 3}).moments();
    EXPECT_DOUBLE_EQ(m.mean, 2.0);
    EXPECT_DOUBLE_EQ(m.variance, 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(m.second_moment, 14.0 / 3.0);
}

TEST(Moments, PositiveVarianceGuard) {
    EXPECT_THROW(DistributionSpec::empirical({7.0}).require_positive_variance(), ModelError);
    EXPECT_NO_THROW(DistributionSpec::empirical({7.0, 8.0}).require_positive_variance());
}

TEST(Lorenz, KnownValues) {
    const LorenzCurve uniform(DistributionSpec::uniform(0, 1));
    const LorenzCurve expo(DistributionSpec::exponential(1));
    EXPECT_DOUBLE_EQ(uniform.gl(0.5), 0.125);
    EXPECT_NEAR(expo.gl(0.5), 0.153426, 1e-6);
    EXPECT_NEAR(expo.gl(0.5), 0.5 * std::log(0.5) + 0.5, 1e-15);
    EXPECT_EQ(uniform.gl(0.0), 0.0);
    EXPECT_EQ(expo.gl(0.0), 0.0);

    EXPECT_DOUBLE_EQ(uniform.gl_centered(0.5), -0.125);
    EXPECT_NEAR(expo.gl_centered(0.5), -0.346574, 1e-6);
    EXPECT_NEAR(expo.gl_centered(0.5), 0.5 * std::log(0.5), 1e-15);
}

TEST(Lorenz, KnownValuesAgreeWithIndependentQuadrature) {
    EXPECT_NEAR(oracle_gl(DistributionSpec::uniform(0, 1), 0.5), 0.125, 1e-12);
    EXPECT_NEAR(oracle_gl(DistributionSpec::exponential(1), 0.5), 0.153426, 1e-6);
    EXPECT_NEAR(oracle_gl(DistributionSpec::exponential(1), 1.0), 1.0, 1e-8);
}

TEST(Lorenz, CenteredCurveVanishesAtEndpoints) {
    const DistributionSpec families[] = {DistributionSpec::uniform(-1, 4), DistributionSpec::exponential(2),
                                         DistributionSpec::normal(3, 1), DistributionSpec::empirical({4, 1, 9})};
    for (const auto& d : families) {
        const LorenzCurve closed(d);
        EXPECT_EQ(closed.gl_centered(0.0), 0.0);
        EXPECT_EQ(closed.gl_centered(1.0), 0.0);
        EXPECT_NEAR(closed.gl(1.0), d.moments().mean, 1e-12);
    }
    const LorenzCurve quad(DistributionSpec::exponential(1), QuadratureOptions{});
    EXPECT_EQ(quad.gl_centered(0.0), 0.0);
    EXPECT_EQ(quad.gl_centered(1.0), 0.0);
    EXPECT_NEAR(quad.gl(1.0), 1.0, 1e-10);
}

TEST(Lorenz, ClosedFormMatchesQuadrature) {
    const DistributionSpec families[] = {DistributionSpec::uniform(0, 1), DistributionSpec::exponential(1),
                                         DistributionSpec::uniform(-2, 5), DistributionSpec::normal(1, 2)};
    for (const auto& d : families) {
        const LorenzCurve closed(d);
        const LorenzCurve quad(d, QuadratureOptions{});
        ASSERT_EQ(quad.mode(), LorenzCurve::Mode::Quadrature);
        for (int i = 0; i <= 100; ++i) {
            const double t = i / 100.0;
            EXPECT_NEAR(closed.gl(t), quad.gl(t), 1e-8) << d.describe() << " t=" << t;
        }
    }
}

TEST(Lorenz, EmpiricalIsExactPiecewiseLinear) {
    const LorenzCurve c(DistributionSpec::empirical({3, 1, 2}));
    EXPECT_DOUBLE_EQ(c.gl(1.0 / 3.0), 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(c.gl(0.5), 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(c.gl(1.0), 2.0);
    EXPECT_DOUBLE_EQ(c.gl(1.0 / 6.0), 1.0 / 6.0);
}

TEST(Lorenz, MonotoneForNonNegativeSupport) {
    const LorenzCurve curves[] = {LorenzCurve(DistributionSpec::uniform(0, 1)),
                                  LorenzCurve(DistributionSpec::exponential(0.5))};
    for (const auto& c : curves) {
        double prev = 0.0;
        for (int i = 1; i <= 1000; ++i) {
            const double v = c.gl(i / 1000.0);
            EXPECT_GE(v, prev);
            prev = v;
        }
    }
}

TEST(Lorenz, CauchySchwarzIncrementBound) {
    const DistributionSpec families[] = {DistributionSpec::uniform(-1, 2), DistributionSpec::exponential(1),
                                         DistributionSpec::normal(-0.5, 1.5)};
    for (const auto& d : families) {
        const LorenzCurve c(d);
        const double m2 = d.moments().second_moment;
        for (int i = 0; i < 1000; ++i) {
            const double t = (i * 0.37 + 0.01) - std::floor(i * 0.37 + 0.01);
            const double s = (i * 0.61 + 0.5) - std::floor(i * 0.61 + 0.5);
            EXPECT_LE(std::fabs(c.gl(t) - c.gl(s)), std::sqrt(std::fabs(t - s) * m2) + 1e-15);
        }
    }
}

TEST(Lorenz, RejectsOutsideUnitInterval) {
    const LorenzCurve c(DistributionSpec::uniform(0, 1));
    EXPECT_THROW(c.gl(-0.01), DomainError);
    EXPECT_THROW(c.gl(1.01), DomainError);
    EXPECT_THROW(c.gl_centered(2.0), DomainError);
}

TEST(Lorenz, QuadratureReportsNonConvergence) {
    // A step quantile with a tiny budget cannot reach the tolerance.
    try {
        const LorenzCurve c(DistributionSpec::empirical({0.0, 1.0, 5.0}), QuadratureOptions{1e-14, 4});
        FAIL() << "expected NumericError";
    } catch (const NumericError& e) {
        EXPECT_GT(e.achieved_tolerance(), 1e-14);
    }
}

TEST(Parse, Families) {
    EXPECT_EQ(DistributionSpec::parse("uniform(0,1)").family(), Family::Uniform);
    EXPECT_EQ(DistributionSpec::parse(" exp(2) ").family(), Family::Exponential);
    EXPECT_EQ(DistributionSpec::parse("normal(0, 1)").family(), Family::Normal);
    EXPECT_DOUBLE_EQ(DistributionSpec::parse("exp(2)").moments().mean, 0.5);
    EXPECT_THROW(DistributionSpec::parse("uniform(1,0)"), ModelError);
    EXPECT_THROW(DistributionSpec::parse("uniform(0)"), ModelError);
    EXPECT_THROW(DistributionSpec::parse("cauchy(0,1)"), ModelError);
    EXPECT_THROW(DistributionSpec::parse("exp(-1)"), ModelError);
    EXPECT_THROW(DistributionSpec::parse("normal(0,abc)"), ModelError);
}

TEST(Parse, EmpiricalFromFile) {
    const auto path = std::filesystem::temp_directory_path() / "regbridge_values.csv";
    {
        std::ofstream out(path);
        out << "value\n3\n1\n\n2\n";
    }
    const auto d = DistributionSpec::parse("empirical(" + path.string() + ")");
    EXPECT_EQ(d.family(), Family::Empirical);
    EXPECT_DOUBLE_EQ(d.moments().mean, 2.0);
    {
        std::ofstream out(path);
        out << "1\nnope\n";
    }
    EXPECT_THROW(DistributionSpec::parse("empirical(" + path.string() + ")"), ModelError);
    std::filesystem::remove(path);
}
