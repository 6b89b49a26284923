#include "regbridge/random.hpp"

#include <vector>

namespace regbridge {

namespace {

std::vector<std::uint32_t> seed_words(std::uint64_t base, std::initializer_list<std::uint64_t> path) {
    std::vector<std::uint32_t> words;
    words.reserve(2 * (path.size() + 1) + 1);
    words.push_back(static_cast<std::uint32_t>(path.size()));
    words.push_back(static_cast<std::uint32_t>(base));
    words.push_back(static_cast<std::uint32_t>(base >> 32));
    for (std::uint64_t p : path) {
        words.push_back(static_cast<std::uint32_t>(p));
        words.push_back(static_cast<std::uint32_t>(p >> 32));
    }
    return words;
}

}  // namespace

RandomStream::RandomStream(std::uint64_t seed) : RandomStream(seed, {}, true) {}

RandomStream::RandomStream(std::uint64_t seed, std::initializer_list<std::uint64_t> path, bool)
    : seed_(seed) {
    const auto words = seed_words(seed, path);
    std::seed_seq seq(words.begin(), words.end());
    engine_.seed(seq);
    // Remember the full derivation so child() stays a pure function of the path.
    std::uint64_t h = seed;
    for (std::uint64_t p : path) {
        h ^= p + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    seed_ = h;
}

RandomStream RandomStream::derive(std::uint64_t base, std::initializer_list<std::uint64_t> path) {
    return RandomStream(base, path, true);
}

RandomStream RandomStream::child(std::initializer_list<std::uint64_t> path) const {
    return RandomStream(seed_, path, true);
}

double RandomStream::uniform_open() {
    // (k + 0.5) / 2^53 for k uniform on [0, 2^53): never 0, never 1.
    const std::uint64_t k = engine_() >> 11;
    return (static_cast<double>(k) + 0.5) * 0x1.0p-53;
}

}  // namespace regbridge
