#include "regbridge/regression.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "regbridge/csv.hpp"
#include "regbridge/error.hpp"
#include "regbridge/summation.hpp"

namespace regbridge {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

void check_unit_interval(double t, const char* what) {
    if (!(t >= 0.0 && t <= 1.0)) {
        std::ostringstream msg;
        msg << what << ": t = " << t << " is outside [0, 1]";
        throw DomainError(msg.str());
    }
}

/// [n t] with t*n within a few ulps of an integer taken as that integer.
std::size_t integer_part(double t, std::size_t n) {
    const double p = t * static_cast<double>(n);
    const double r = std::round(p);
    const double k = std::fabs(p - r) <= 8.0 * kEps * std::max(1.0, p) ? r : std::floor(p);
    return std::min(static_cast<std::size_t>(k), n);
}

}  // namespace

void RegressionConfig::validate() const {
    if (n < 3) throw ModelError("regression: n = " + std::to_string(n) + ", need n >= 3");
    dist.require_positive_variance();
    if (!std::isfinite(a) || !std::isfinite(b)) throw ModelError("regression: a and b must be finite");
}

RegressionSample generate_sample(const RegressionConfig& config, RandomStream& rng) {
    config.validate();
    auto regressor_rng = rng.child({tag(StreamTag::Regressor)});
    auto chain_rng = rng.child({tag(StreamTag::Chain)});
    auto noise_rng = rng.child({tag(StreamTag::Noise)});

    auto x = sample(config.dist, config.n, regressor_rng);
    std::stable_sort(x.begin(), x.end());
    auto states = simulate_chain(config.noise.chain(), config.n, chain_rng);
    const auto eps = sample_noise(config.noise, states, noise_rng);
    return assemble_sample(config.a, config.b, std::move(x), std::move(states), eps);
}

RegressionSample assemble_sample(double a, double b, std::vector<double> sorted_x, std::vector<State> states,
                                 std::span<const double> noise) {
    if (sorted_x.size() != states.size() || sorted_x.size() != noise.size()) {
        throw DomainError("assemble_sample: x, states and noise lengths differ");
    }
    RegressionSample s;
    s.a = a;
    s.b = b;
    s.y.resize(sorted_x.size());
    for (std::size_t i = 0; i < sorted_x.size(); ++i) s.y[i] = a + b * sorted_x[i] + noise[i];
    s.x = std::move(sorted_x);
    s.states = std::move(states);
    return s;
}

OlsFit ols_fit(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw DomainError("ols_fit: x and y lengths differ");
    if (x.size() < 2) throw DegenerateDesignError("ols_fit: need at least two points");
    const auto n = static_cast<double>(x.size());

    CompensatedSum sx, sy, sxx, sxy;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx.add(x[i]);
        sy.add(y[i]);
        sxx.add(x[i] * x[i]);
        sxy.add(x[i] * y[i]);
    }
    OlsFit fit{};
    fit.mean_x = sx.value() / n;
    fit.mean_y = sy.value() / n;
    fit.mean_x2 = sxx.value() / n;
    fit.mean_xy = sxy.value() / n;

    // (mean_xy - mean_x mean_y) / (mean_x2 - mean_x^2), evaluated on centered
    // data so the difference of nearly equal raw moments never forms.
    CompensatedSum cxx, cxy;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - fit.mean_x;
        cxx.add(dx * dx);
        cxy.add(dx * (y[i] - fit.mean_y));
    }
    if (!(cxx.value() > 0.0)) {
        throw DegenerateDesignError("ols_fit: all regressors are equal, slope is undefined");
    }
    fit.b_hat = cxy.value() / cxx.value();
    fit.a_hat = fit.mean_y - fit.b_hat * fit.mean_x;
    return fit;
}

ResidualProcess residual_process(std::span<const double> x, std::span<const double> y, const OlsFit& fit) {
    if (x.size() != y.size()) throw DomainError("residual_process: x and y lengths differ");
    const auto n = x.size();
    ResidualProcess p;
    p.residuals.resize(n);
    p.partial_sums.resize(n + 1);
    p.partial_sums[0] = 0.0;

    CompensatedSum run, sq;
    for (std::size_t i = 0; i < n; ++i) {
        const double fitted = fit.a_hat + fit.b_hat * x[i];
        const double r = y[i] - fitted;
        p.residuals[i] = r;
        run.add(r);
        sq.add(r * r);
        p.partial_sums[i + 1] = run.value();
    }
    const double nd = static_cast<double>(n);
    const double mean = run.value() / nd;
    p.sigma_hat2 = std::max(0.0, sq.value() / nd - mean * mean);
    return p;
}

BridgePolygon random_polygon(const ResidualProcess& process, double sigma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw DomainError("random_polygon: sigma must be > 0");
    const auto n = process.size();
    const double scale = sigma * std::sqrt(static_cast<double>(n));
    BridgePolygon poly{std::vector<double>(n + 1), BridgePolygon::Kind::RandomPolygon};
    for (std::size_t k = 0; k <= n; ++k) poly.nodes[k] = process.partial_sums[k] / scale;
    return poly;
}

BridgePolygon empirical_bridge(const ResidualProcess& process) {
    if (!(process.sigma_hat2 > 0.0)) {
        throw DegenerateBridgeError("empirical_bridge: sigma_hat^2 = 0 (perfect fit), bridge undefined");
    }
    const auto n = process.size();
    const double nd = static_cast<double>(n);
    const double scale = std::sqrt(nd * process.sigma_hat2);
    const double last = process.partial_sums[n];
    BridgePolygon poly{std::vector<double>(n + 1), BridgePolygon::Kind::EmpiricalBridge};
    for (std::size_t k = 0; k <= n; ++k) {
        const double frac = static_cast<double>(k) / nd;
        poly.nodes[k] = (process.partial_sums[k] - frac * last) / scale;
    }
    return poly;
}

double polygon_eval(const BridgePolygon& poly, double t) {
    check_unit_interval(t, "polygon_eval");
    if (poly.nodes.empty()) throw DomainError("polygon_eval: empty polygon");
    const auto n = poly.segments();
    if (n == 0) return poly.nodes[0];
    const double p = t * static_cast<double>(n);
    const double r = std::round(p);
    if (std::fabs(p - r) <= 8.0 * kEps * std::max(1.0, p)) return poly.nodes[static_cast<std::size_t>(r)];
    const auto k = std::min(static_cast<std::size_t>(std::floor(p)), n - 1);
    const double frac = p - static_cast<double>(k);
    return poly.nodes[k] + frac * (poly.nodes[k + 1] - poly.nodes[k]);
}

std::vector<double> empirical_lorenz(std::span<const double> values, std::span<const double> ts) {
    if (values.empty()) throw DomainError("empirical_lorenz: no values");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const auto n = sorted.size();
    std::vector<double> prefix(n + 1, 0.0);
    CompensatedSum run;
    for (std::size_t i = 0; i < n; ++i) {
        run.add(sorted[i]);
        prefix[i + 1] = run.value();
    }
    std::vector<double> out;
    out.reserve(ts.size());
    for (double t : ts) {
        check_unit_interval(t, "empirical_lorenz");
        out.push_back(prefix[integer_part(t, n)] / static_cast<double>(n));
    }
    return out;
}

double empirical_lorenz(std::span<const double> values, double t) {
    const double ts[] = {t};
    return empirical_lorenz(values, ts)[0];
}

void write_sample_csv(std::ostream& out, const RegressionSample& sample) {
    out << "i,x,state,y\n";
    for (std::size_t i = 0; i < sample.size(); ++i) {
        out << i + 1 << ',' << format_double(sample.x[i]) << ',' << sample.states[i] + 1 << ','
            << format_double(sample.y[i]) << '\n';
    }
}

void write_bridge_csv(std::ostream& out, const BridgePolygon& poly) {
    out << "t,value\n";
    const auto n = poly.segments();
    for (std::size_t k = 0; k <= n; ++k) {
        const double t = n == 0 ? 0.0 : static_cast<double>(k) / static_cast<double>(n);
        out << format_double(t) << ',' << format_double(poly.nodes[k]) << '\n';
    }
}

}  // namespace regbridge
