#include "regbridge/distributions.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <regex>
#include <sstream>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "regbridge/error.hpp"
#include "regbridge/summation.hpp"

namespace regbridge {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

/// Index arithmetic on s*n: values within a few ulps of an integer are that integer.
double snap_to_integer(double p) {
    const double r = std::round(p);
    return std::fabs(p - r) <= 8.0 * kEps * std::max(1.0, std::fabs(p)) ? r : p;
}

void check_probability(double s) {
    if (!(s > 0.0 && s <= 1.0)) {
        std::ostringstream msg;
        msg << "quantile: probability " << s << " is outside (0, 1]";
        throw DomainError(msg.str());
    }
}

void check_unit_interval(double t, const char* what) {
    if (!(t >= 0.0 && t <= 1.0)) {
        std::ostringstream msg;
        msg << what << ": t = " << t << " is outside [0, 1]";
        throw DomainError(msg.str());
    }
}

const boost::math::normal_distribution<double> kStdNormal{0.0, 1.0};

double parse_number(const std::string& text, const std::string& context) {
    std::string trimmed = text;
    trimmed.erase(0, trimmed.find_first_not_of(" \t"));
    trimmed.erase(trimmed.find_last_not_of(" \t") + 1);
    double value = 0.0;
    const char* first = trimmed.data();
    const char* last = trimmed.data() + trimmed.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (trimmed.empty() || ec != std::errc() || ptr != last || !std::isfinite(value)) {
        throw ModelError("cannot parse number '" + text + "' in " + context);
    }
    return value;
}

std::vector<std::string> split_args(const std::string& args) {
    std::vector<std::string> out;
    std::stringstream ss(args);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(item);
    return out;
}

}  // namespace

DistributionSpec DistributionSpec::uniform(double lo, double hi) {
    if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) {
        std::ostringstream msg;
        msg << "uniform(" << lo << "," << hi << "): need finite lo < hi";
        throw ModelError(msg.str());
    }
    return DistributionSpec(Uniform{lo, hi});
}

DistributionSpec DistributionSpec::exponential(double rate) {
    if (!std::isfinite(rate) || !(rate > 0.0)) {
        std::ostringstream msg;
        msg << "exp(" << rate << "): need a finite rate > 0";
        throw ModelError(msg.str());
    }
    return DistributionSpec(Exponential{rate});
}

DistributionSpec DistributionSpec::normal(double mean, double sd) {
    if (!std::isfinite(mean) || !std::isfinite(sd) || !(sd > 0.0)) {
        std::ostringstream msg;
        msg << "normal(" << mean << "," << sd << "): need finite mean and sd > 0";
        throw ModelError(msg.str());
    }
    return DistributionSpec(Normal{mean, sd});
}

DistributionSpec DistributionSpec::empirical(std::vector<double> values) {
    if (values.empty()) throw ModelError("empirical: no values");
    for (double v : values) {
        if (!std::isfinite(v)) throw ModelError("empirical: non-finite value");
    }
    auto data = std::make_shared<Empirical>();
    data->sorted = std::move(values);
    std::stable_sort(data->sorted.begin(), data->sorted.end());

    const auto n = static_cast<double>(data->sorted.size());
    data->prefix.resize(data->sorted.size() + 1);
    CompensatedSum run;
    data->prefix[0] = 0.0;
    for (std::size_t i = 0; i < data->sorted.size(); ++i) {
        run.add(data->sorted[i]);
        data->prefix[i + 1] = run.value();
    }
    const double mean = data->prefix.back() / n;
    CompensatedSum sq;
    CompensatedSum dev;
    for (double v : data->sorted) {
        sq.add(v * v);
        dev.add((v - mean) * (v - mean));
    }
    data->moments = Moments{mean, dev.value() / n, sq.value() / n};
    return DistributionSpec(std::shared_ptr<const Empirical>(std::move(data)));
}

DistributionSpec DistributionSpec::parse(std::string_view text) {
    static const std::regex pattern(R"(^\s*([A-Za-z]+)\s*\((.*)\)\s*$)");
    const std::string input(text);
    std::smatch m;
    if (!std::regex_match(input, m, pattern)) {
        throw ModelError("cannot parse distribution '" + input +
                         "'; expected e.g. uniform(0,1), exp(1), normal(0,1), empirical(x.csv)");
    }
    std::string name = m[1].str();
    std::transform(name.begin(), name.end(), name.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    const std::string body = m[2].str();

    auto numbers = [&](std::size_t expected) {
        const auto parts = split_args(body);
        if (parts.size() != expected) {
            throw ModelError("distribution '" + input + "' expects " + std::to_string(expected) +
                             " argument(s)");
        }
        std::vector<double> out;
        for (const auto& p : parts) out.push_back(parse_number(p, input));
        return out;
    };

    if (name == "uniform") {
        const auto v = numbers(2);
        return uniform(v[0], v[1]);
    }
    if (name == "exp" || name == "exponential") {
        return exponential(numbers(1)[0]);
    }
    if (name == "normal" || name == "gaussian") {
        const auto v = numbers(2);
        return normal(v[0], v[1]);
    }
    if (name == "empirical") {
        std::string path = body;
        path.erase(0, path.find_first_not_of(" \t"));
        path.erase(path.find_last_not_of(" \t") + 1);
        return empirical(read_values_csv(path));
    }
    throw ModelError("unknown distribution family '" + name +
                     "'; expected uniform, exp, normal or empirical");
}

Family DistributionSpec::family() const noexcept {
    return std::visit(Overloaded{[](const Uniform&) { return Family::Uniform; },
                                 [](const Exponential&) { return Family::Exponential; },
                                 [](const Normal&) { return Family::Normal; },
                                 [](const std::shared_ptr<const Empirical>&) { return Family::Empirical; }},
                      law_);
}

std::string DistributionSpec::describe() const {
    std::ostringstream out;
    out.precision(17);
    std::visit(Overloaded{[&](const Uniform& u) { out << "uniform(" << u.lo << "," << u.hi << ")"; },
                          [&](const Exponential& e) { out << "exp(" << e.rate << ")"; },
                          [&](const Normal& d) { out << "normal(" << d.mean << "," << d.sd << ")"; },
                          [&](const std::shared_ptr<const Empirical>& e) {
                              out << "empirical[" << e->sorted.size() << " atoms]";
                          }},
               law_);
    return out.str();
}

double DistributionSpec::cdf(double x) const {
    return std::visit(
        Overloaded{[&](const Uniform& u) { return std::clamp((x - u.lo) / (u.hi - u.lo), 0.0, 1.0); },
                   [&](const Exponential& e) { return x <= 0.0 ? 0.0 : -std::expm1(-e.rate * x); },
                   [&](const Normal& d) {
                       return 0.5 * std::erfc(-(x - d.mean) / (d.sd * std::numbers::sqrt2));
                   },
                   [&](const std::shared_ptr<const Empirical>& e) {
                       const auto it = std::upper_bound(e->sorted.begin(), e->sorted.end(), x);
                       return static_cast<double>(it - e->sorted.begin()) /
                              static_cast<double>(e->sorted.size());
                   }},
        law_);
}

double DistributionSpec::quantile(double s) const {
    check_probability(s);
    return std::visit(
        Overloaded{[&](const Uniform& u) { return s == 1.0 ? u.hi : u.lo + s * (u.hi - u.lo); },
                   [&](const Exponential& e) {
                       if (s == 1.0) throw RangeError("quantile: exp law has F^{-1}(1) = +inf");
                       return -std::log1p(-s) / e.rate;
                   },
                   [&](const Normal& d) {
                       if (s == 1.0) throw RangeError("quantile: normal law has F^{-1}(1) = +inf");
                       return d.mean + d.sd * boost::math::quantile(kStdNormal, s);
                   },
                   [&](const std::shared_ptr<const Empirical>& e) {
                       // sup{x : F(x) < s} is the ceil(s n)-th smallest atom.
                       const auto n = e->sorted.size();
                       const double k = std::ceil(snap_to_integer(s * static_cast<double>(n)));
                       const auto idx = std::clamp<std::size_t>(static_cast<std::size_t>(k), 1, n);
                       return e->sorted[idx - 1];
                   }},
        law_);
}

double DistributionSpec::upper_quantile(double q) const {
    if (!(q >= 0.0 && q < 1.0)) {
        std::ostringstream msg;
        msg << "upper_quantile: complement " << q << " is outside [0, 1)";
        throw DomainError(msg.str());
    }
    return std::visit(
        Overloaded{[&](const Uniform& u) { return u.hi - q * (u.hi - u.lo); },
                   [&](const Exponential& e) {
                       if (q == 0.0) throw RangeError("upper_quantile: exp law is unbounded");
                       return -std::log(q) / e.rate;
                   },
                   [&](const Normal& d) {
                       if (q == 0.0) throw RangeError("upper_quantile: normal law is unbounded");
                       return d.mean - d.sd * boost::math::quantile(kStdNormal, q);
                   },
                   [&](const std::shared_ptr<const Empirical>&) { return quantile(1.0 - q); }},
        law_);
}

Moments DistributionSpec::moments() const {
    return std::visit(Overloaded{[](const Uniform& u) {
                                     const double mean = 0.5 * (u.lo + u.hi);
                                     const double w = u.hi - u.lo;
                                     const double var = w * w / 12.0;
                                     return Moments{mean, var, var + mean * mean};
                                 },
                                 [](const Exponential& e) {
                                     const double mean = 1.0 / e.rate;
                                     return Moments{mean, mean * mean, 2.0 * mean * mean};
                                 },
                                 [](const Normal& d) {
                                     const double var = d.sd * d.sd;
                                     return Moments{d.mean, var, var + d.mean * d.mean};
                                 },
                                 [](const std::shared_ptr<const Empirical>& e) { return e->moments; }},
                      law_);
}

void DistributionSpec::require_positive_variance() const {
    if (!(moments().variance > 0.0)) {
        throw ModelError("distribution " + describe() + " has zero variance; the model needs Var xi > 0");
    }
}

std::optional<double> DistributionSpec::closed_form_gl(double t) const {
    check_unit_interval(t, "gl");
    if (t == 0.0) return 0.0;
    return std::visit(
        Overloaded{[&](const Uniform& u) { return u.lo * t + 0.5 * (u.hi - u.lo) * t * t; },
                   [&](const Exponential& e) {
                       if (t == 1.0) return 1.0 / e.rate;
                       return ((1.0 - t) * std::log1p(-t) + t) / e.rate;
                   },
                   [&](const Normal& d) {
                       if (t == 1.0) return d.mean;
                       const double z = boost::math::quantile(kStdNormal, t);
                       return d.mean * t - d.sd * boost::math::pdf(kStdNormal, z);
                   },
                   [&](const std::shared_ptr<const Empirical>& e) {
                       // Exact integral of the step quantile: full atoms plus a partial one.
                       const auto n = e->sorted.size();
                       const double nd = static_cast<double>(n);
                       const double p = snap_to_integer(t * nd);
                       const auto full = std::min(static_cast<std::size_t>(std::floor(p)), n);
                       double value = e->prefix[full] / nd;
                       if (full < n) value += (p - static_cast<double>(full)) / nd * e->sorted[full];
                       return value;
                   }},
        law_);
}

std::span<const double> DistributionSpec::atoms() const noexcept {
    if (const auto* e = std::get_if<std::shared_ptr<const Empirical>>(&law_)) {
        return (*e)->sorted;
    }
    return {};
}

std::vector<double> sample(const DistributionSpec& spec, std::size_t count, RandomStream& rng) {
    if (count == 0) throw DomainError("sample: count must be at least 1");
    std::vector<double> out(count);
    for (auto& v : out) v = spec.quantile(rng.uniform_open());
    return out;
}

std::vector<double> read_values_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ModelError("cannot open values file '" + path + "'");
    std::vector<double> values;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos) continue;
        std::string field = line.substr(first);
        field = field.substr(0, field.find(','));
        try {
            values.push_back(parse_number(field, path));
        } catch (const ModelError&) {
            if (line_no == 1) continue;  // header
            throw ModelError(path + ":" + std::to_string(line_no) + ": not a number: '" + line + "'");
        }
    }
    if (values.empty()) throw ModelError("values file '" + path + "' holds no values");
    return values;
}

LorenzCurve::LorenzCurve(DistributionSpec spec)
    : spec_(std::move(spec)), mode_(Mode::ClosedForm), quadrature_{} {
    total_ = gl(1.0);
}

LorenzCurve::LorenzCurve(DistributionSpec spec, QuadratureOptions quadrature)
    : spec_(std::move(spec)), mode_(Mode::Quadrature), quadrature_(quadrature) {
    if (!(quadrature_.abs_tol > 0.0) || quadrature_.max_subdivisions < 2) {
        throw DomainError("LorenzCurve: quadrature needs abs_tol > 0 and max_subdivisions >= 2");
    }
    total_ = gl(1.0);
}

double LorenzCurve::gl(double t) const {
    check_unit_interval(t, "gl");
    if (t == 0.0) return 0.0;
    if (mode_ == Mode::ClosedForm) {
        if (auto v = spec_.closed_form_gl(t)) return *v;
    }
    return integrate_quantile(t);
}

double LorenzCurve::gl_centered(double t) const {
    check_unit_interval(t, "gl_centered");
    if (t == 0.0 || t == 1.0) return 0.0;
    return gl(t) - t * total_;
}

double LorenzCurve::integrate_quantile(double t) const {
    // tanh-sinh never evaluates the endpoints, so the integrable singularity
    // of an unbounded quantile at s = 1 is handled as an improper integral.
    std::size_t levels = 1;
    while ((std::size_t{1} << levels) < quadrature_.max_subdivisions) ++levels;
    boost::math::quadrature::tanh_sinh<double> integrator(levels);
    double error = 0.0;
    double l1 = 0.0;
    const double value = integrator.integrate([this](double s) { return spec_.quantile(s); }, 0.0, t,
                                              0.01 * quadrature_.abs_tol, &error, &l1);
    // Absolute tolerance for curves of unit scale, relative above it.
    if (!(error <= quadrature_.abs_tol * std::max(1.0, l1)) || !std::isfinite(value)) {
        std::ostringstream msg;
        msg << "gl: quadrature on [0, " << t << "] reached error " << error << ", wanted "
            << quadrature_.abs_tol;
        throw NumericError(msg.str(), error);
    }
    return value;
}

}  // namespace regbridge
