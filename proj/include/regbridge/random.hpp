#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace regbridge {

/// Labels for independent sub-streams. Values are part of the seed derivation,
/// so changing them changes every simulated number.
enum class StreamTag : std::uint64_t {
    Regressor = 1,
    Chain = 2,
    Noise = 3,
    LimitPath = 4,
    Pilot = 5,
    Resample = 6,
};

/// A reproducible source of uniform variates.
///
/// Streams are never shared between replications. A replication derives its
/// own stream from (base seed, check id, replication index, ...), which makes
/// results independent of how replications are scheduled across threads.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed);

    /// Stream keyed by a base seed and a path of labels.
    static RandomStream derive(std::uint64_t base, std::initializer_list<std::uint64_t> path);

    /// Child stream; the parent is not advanced.
    RandomStream child(std::initializer_list<std::uint64_t> path) const;

    /// Uniform on the open interval (0, 1); 53 random bits.
    double uniform_open();

    std::uint64_t next_u64() { return engine_(); }

private:
    RandomStream(std::uint64_t seed, std::initializer_list<std::uint64_t> path, bool);

    std::mt19937_64 engine_;
    std::uint64_t seed_;
};

constexpr std::uint64_t tag(StreamTag t) noexcept { return static_cast<std::uint64_t>(t); }

}  // namespace regbridge
