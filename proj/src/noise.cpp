#include "regbridge/noise.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <queue>
#include <sstream>

#include <boost/math/distributions/normal.hpp>

#include "regbridge/error.hpp"

namespace regbridge {

namespace {

constexpr double kRowTolerance = 1e-12;

std::string list_indices(const std::vector<std::size_t>& idx) {
    std::ostringstream out;
    for (std::size_t i = 0; i < idx.size(); ++i) out << (i ? ", " : "") << idx[i] + 1;
    return out.str();
}

std::vector<bool> reachable_from(const Eigen::MatrixXd& p, std::size_t start, bool reverse) {
    const auto m = static_cast<std::size_t>(p.rows());
    std::vector<bool> seen(m, false);
    std::queue<std::size_t> q;
    seen[start] = true;
    q.push(start);
    while (!q.empty()) {
        const auto u = q.front();
        q.pop();
        for (std::size_t v = 0; v < m; ++v) {
            const double w = reverse ? p(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(u))
                                     : p(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v));
            if (w > 0.0 && !seen[v]) {
                seen[v] = true;
                q.push(v);
            }
        }
    }
    return seen;
}

/// P^k > 0 entrywise for k the first power of two at or above (M-1)^2 + 1.
bool some_power_positive(const Eigen::MatrixXd& p) {
    const auto m = p.rows();
    Eigen::MatrixXd pattern = (p.array() > 0.0).cast<double>();
    const Eigen::Index bound = (m - 1) * (m - 1) + 1;
    for (Eigen::Index power = 1; power < bound; power *= 2) {
        pattern = ((pattern * pattern).array() > 0.0).cast<double>();
    }
    return (pattern.array() > 0.0).all();
}

const boost::math::normal_distribution<double> kStdNormal{0.0, 1.0};

}  // namespace

Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& transition) {
    const auto m = transition.rows();
    if (m == 0 || transition.cols() != m) {
        throw ChainError(ChainError::Kind::NotSquare, {}, "stationary_distribution: matrix is not square");
    }
    // Balance equations (P^T - I) pi = 0 with the last one replaced by sum pi = 1.
    Eigen::MatrixXd a = transition.transpose() - Eigen::MatrixXd::Identity(m, m);
    a.row(m - 1).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
    rhs(m - 1) = 1.0;

    const Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    if (!lu.isInvertible() || lu.rcond() < 1e-13) {
        throw ChainError(ChainError::Kind::Singular, {},
                         "stationary_distribution: balance system is singular (reducible chain?)");
    }
    Eigen::VectorXd pi = lu.solve(rhs);
    pi += lu.solve(rhs - a * pi);  // one refinement step

    std::vector<std::size_t> bad;
    for (Eigen::Index v = 0; v < m; ++v) {
        if (!(pi(v) > 0.0)) bad.push_back(static_cast<std::size_t>(v));
    }
    if (!bad.empty()) {
        throw ChainError(ChainError::Kind::Singular, bad,
                         "stationary_distribution: non-positive mass at states " + list_indices(bad));
    }
    return pi / pi.sum();
}

std::size_t chain_period(const Eigen::MatrixXd& transition) {
    const auto m = static_cast<std::size_t>(transition.rows());
    std::vector<long> level(m, -1);
    std::queue<std::size_t> q;
    level[0] = 0;
    q.push(0);
    while (!q.empty()) {
        const auto u = q.front();
        q.pop();
        for (std::size_t v = 0; v < m; ++v) {
            if (transition(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v)) > 0.0 && level[v] < 0) {
                level[v] = level[u] + 1;
                q.push(v);
            }
        }
    }
    long g = 0;
    for (std::size_t u = 0; u < m; ++u) {
        if (level[u] < 0) continue;
        for (std::size_t v = 0; v < m; ++v) {
            if (transition(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v)) > 0.0 && level[v] >= 0) {
                g = std::gcd(g, std::labs(level[u] + 1 - level[v]));
            }
        }
    }
    return static_cast<std::size_t>(g);
}

MarkovChain validate_chain(const Eigen::MatrixXd& transition, std::optional<State> initial_state) {
    return MarkovChain(transition, initial_state);
}

MarkovChain::MarkovChain(Eigen::MatrixXd transition, std::optional<State> initial_state)
    : transition_(std::move(transition)), initial_(initial_state) {
    const auto m = transition_.rows();
    if (m == 0 || transition_.cols() != m) {
        std::ostringstream msg;
        msg << "transition matrix is " << transition_.rows() << "x" << transition_.cols() << ", not square";
        throw ChainError(ChainError::Kind::NotSquare, {}, msg.str());
    }

    std::vector<std::size_t> bad_rows;
    for (Eigen::Index i = 0; i < m; ++i) {
        const auto row = transition_.row(i);
        const bool entries_ok = row.allFinite() && (row.array() >= 0.0).all() && (row.array() <= 1.0).all();
        if (!entries_ok || std::fabs(row.sum() - 1.0) > kRowTolerance) bad_rows.push_back(static_cast<std::size_t>(i));
    }
    if (!bad_rows.empty()) {
        throw ChainError(ChainError::Kind::NotStochastic, bad_rows,
                         "transition rows " + list_indices(bad_rows) +
                             " are not probability vectors (entries in [0,1] summing to 1)");
    }

    const auto forward = reachable_from(transition_, 0, false);
    const auto backward = reachable_from(transition_, 0, true);
    std::vector<std::size_t> cut_off;
    for (std::size_t v = 0; v < forward.size(); ++v) {
        if (!forward[v] || !backward[v]) cut_off.push_back(v);
    }
    if (!cut_off.empty()) {
        throw ChainError(ChainError::Kind::Reducible, cut_off,
                         "chain is reducible: states " + list_indices(cut_off) +
                             " do not communicate with state 1");
    }

    if (!some_power_positive(transition_)) {
        const auto period = chain_period(transition_);
        std::vector<std::size_t> all(static_cast<std::size_t>(m));
        std::iota(all.begin(), all.end(), std::size_t{0});
        throw ChainError(ChainError::Kind::Periodic, all,
                         "chain is periodic (period " + std::to_string(period) + ")", period);
    }

    if (initial_ && *initial_ >= static_cast<std::size_t>(m)) {
        throw ChainError(ChainError::Kind::NotSquare, {*initial_},
                         "initial state " + std::to_string(*initial_ + 1) + " is outside 1.." + std::to_string(m));
    }

    stationary_ = stationary_distribution(transition_);

    cumulative_.resize(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        double run = 0.0;
        for (Eigen::Index j = 0; j < m; ++j) {
            run += transition_(i, j);
            cumulative_(i, j) = run;
        }
        cumulative_(i, m - 1) = 1.0;
    }
    stationary_cumulative_.resize(m);
    double run = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) {
        run += stationary_(j);
        stationary_cumulative_(j) = run;
    }
    stationary_cumulative_(m - 1) = 1.0;
}

MarkovChain MarkovChain::single_state() {
    return MarkovChain(Eigen::MatrixXd::Ones(1, 1));
}

std::vector<State> simulate_chain(const MarkovChain& chain, std::size_t n, RandomStream& rng) {
    if (n == 0) throw DomainError("simulate_chain: n must be at least 1");
    const auto m = static_cast<Eigen::Index>(chain.state_count());
    auto pick = [m](auto&& cumulative_at, double u) {
        Eigen::Index j = 0;
        while (j + 1 < m && !(u < cumulative_at(j))) ++j;
        return static_cast<State>(j);
    };

    std::vector<State> states(n);
    const double u0 = rng.uniform_open();
    states[0] = chain.initial_ ? *chain.initial_
                               : pick([&](Eigen::Index j) { return chain.stationary_cumulative_(j); }, u0);
    for (std::size_t i = 1; i < n; ++i) {
        const auto from = static_cast<Eigen::Index>(states[i - 1]);
        states[i] = pick([&](Eigen::Index j) { return chain.cumulative_(from, j); }, rng.uniform_open());
    }
    return states;
}

NoiseFamily parse_noise_family(const std::string& name) {
    if (name == "gaussian" || name == "normal") return NoiseFamily::Gaussian;
    if (name == "uniform" || name == "centered-uniform") return NoiseFamily::CenteredUniform;
    if (name == "rademacher") return NoiseFamily::Rademacher;
    throw ModelError("unknown noise family '" + name + "'; expected gaussian, uniform or rademacher");
}

std::string to_string(NoiseFamily family) {
    switch (family) {
        case NoiseFamily::Gaussian: return "gaussian";
        case NoiseFamily::CenteredUniform: return "uniform";
        case NoiseFamily::Rademacher: return "rademacher";
    }
    return "gaussian";
}

double base_noise(NoiseFamily family, double u) {
    switch (family) {
        case NoiseFamily::Gaussian: return boost::math::quantile(kStdNormal, u);
        case NoiseFamily::CenteredUniform: return std::numbers::sqrt3 * (2.0 * u - 1.0);
        case NoiseFamily::Rademacher: return u < 0.5 ? -1.0 : 1.0;
    }
    return 0.0;
}

NoiseModel::NoiseModel(MarkovChain chain, std::vector<double> state_sd, NoiseFamily family)
    : chain_(std::move(chain)), state_sd_(std::move(state_sd)), family_(family) {
    if (state_sd_.size() != chain_.state_count()) {
        throw ModelError("noise model: " + std::to_string(state_sd_.size()) + " sigmas for " +
                         std::to_string(chain_.state_count()) + " chain states");
    }
    double total = 0.0;
    for (double s : state_sd_) {
        if (!std::isfinite(s) || s < 0.0) throw ModelError("noise model: sigmas must be finite and >= 0");
        total += s * s;
    }
    if (!(total > 0.0)) throw ModelError("noise model: at least one state needs sigma > 0");
}

std::vector<double> sample_noise(const NoiseModel& model, std::span<const State> states, RandomStream& rng) {
    const auto sd = model.state_sd();
    std::vector<double> out(states.size());
    for (std::size_t i = 0; i < states.size(); ++i) {
        if (states[i] >= sd.size()) throw DomainError("sample_noise: state outside the model");
        out[i] = sd[states[i]] * base_noise(model.family(), rng.uniform_open());
    }
    return out;
}

double composite_variance(const NoiseModel& model) {
    const auto& pi = model.chain().stationary();
    const auto sd = model.state_sd();
    double total = 0.0;
    for (std::size_t v = 0; v < sd.size(); ++v) total += sd[v] * sd[v] * pi(static_cast<Eigen::Index>(v));
    return total;
}

Eigen::MatrixXd read_transition_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ModelError("cannot open transition file '" + path + "'");
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t used = 0;
                row.push_back(std::stod(cell, &used));
                if (cell.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(cell);
            } catch (const std::exception&) {
                throw ModelError(path + ":" + std::to_string(line_no) + ": not a probability: '" + cell + "'");
            }
        }
        rows.push_back(std::move(row));
    }
    const auto m = rows.size();
    Eigen::MatrixXd p(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < m; ++i) {
        if (rows[i].size() != m) {
            throw ModelError(path + ": row " + std::to_string(i + 1) + " has " + std::to_string(rows[i].size()) +
                             " entries, expected " + std::to_string(m));
        }
        for (std::size_t j = 0; j < m; ++j) p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
    if (m == 0) throw ModelError(path + ": empty transition matrix");
    return p;
}

}  // namespace regbridge
