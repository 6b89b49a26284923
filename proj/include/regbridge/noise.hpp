#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "regbridge/random.hpp"

namespace regbridge {

/// Zero-based state index. CSV output adds one to match the 1..M labelling.
using State = std::size_t;

/// A validated irreducible, aperiodic, row-stochastic chain on {0, ..., M-1}.
class MarkovChain {
public:
    /// nullopt start means V_1 is drawn from the stationary distribution.
    MarkovChain(Eigen::MatrixXd transition, std::optional<State> initial_state = std::nullopt);

    std::size_t state_count() const noexcept { return static_cast<std::size_t>(transition_.rows()); }
    const Eigen::MatrixXd& transition() const noexcept { return transition_; }
    const Eigen::VectorXd& stationary() const noexcept { return stationary_; }
    std::optional<State> initial_state() const noexcept { return initial_; }

    /// Row cumulative sums; last entry of each row is forced to 1.
    double cumulative(State from, State to) const { return cumulative_(from, to); }

    static MarkovChain single_state();

private:
    Eigen::MatrixXd transition_;
    Eigen::MatrixXd cumulative_;
    Eigen::VectorXd stationary_;
    Eigen::VectorXd stationary_cumulative_;
    std::optional<State> initial_;

    friend std::vector<State> simulate_chain(const MarkovChain&, std::size_t, RandomStream&);
};

/// Validates rows, irreducibility and aperiodicity. Throws ChainError.
MarkovChain validate_chain(const Eigen::MatrixXd& transition, std::optional<State> initial_state = std::nullopt);

/// pi with pi P = pi and sum pi = 1. Throws ChainError(Singular) if the balance system is singular.
Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& transition);

/// Period of the state-0 class of a strongly connected transition graph.
std::size_t chain_period(const Eigen::MatrixXd& transition);

std::vector<State> simulate_chain(const MarkovChain& chain, std::size_t n, RandomStream& rng);

/// Zero-mean, unit-variance base law scaled by the per-state sd.
enum class NoiseFamily { Gaussian, CenteredUniform, Rademacher };

NoiseFamily parse_noise_family(const std::string& name);
std::string to_string(NoiseFamily family);

/// One draw of the base law from a single uniform in (0, 1).
double base_noise(NoiseFamily family, double u);

class NoiseModel {
public:
    NoiseModel(MarkovChain chain, std::vector<double> state_sd, NoiseFamily family = NoiseFamily::Gaussian);

    const MarkovChain& chain() const noexcept { return chain_; }
    std::span<const double> state_sd() const noexcept { return state_sd_; }
    NoiseFamily family() const noexcept { return family_; }

private:
    MarkovChain chain_;
    std::vector<double> state_sd_;
    NoiseFamily family_;
};

/// Independent draws eps_i with mean 0 and variance sd[states[i]]^2; one uniform per draw.
std::vector<double> sample_noise(const NoiseModel& model, std::span<const State> states, RandomStream& rng);

/// sigma^2 = sum_v sigma_v^2 pi_v.
double composite_variance(const NoiseModel& model);

/// Reads M rows of M comma-separated probabilities.
Eigen::MatrixXd read_transition_csv(const std::string& path);

}  // namespace regbridge
