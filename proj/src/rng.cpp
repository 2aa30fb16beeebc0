#include "crthte/rng.hpp"

#include <cmath>

#include "crthte/error.hpp"

namespace crthte {

namespace {

inline std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t state = master;
    std::uint64_t a = splitmix64(state);
    state = a ^ (index * 0xD6E8FEB86659FD93ULL + 0xA5A5A5A5A5A5A5A5ULL);
    return splitmix64(state);
}

Rng::Rng(std::uint64_t seed) {
    std::uint64_t state = seed;
    for (auto& word : s_) word = splitmix64(state);
}

std::uint64_t Rng::next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::uniform_below(std::uint64_t bound) {
    if (bound == 0) fail(ErrorCode::DomainError, "uniform_below(0)");
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
        const std::uint64_t r = next_u64();
        if (r >= threshold) return r % bound;
    }
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    // Box-Muller; u clamped away from 0 so log stays finite.
    double u = uniform();
    if (u <= 0.0) u = 0x1.0p-53;
    const double v = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u));
    const double angle = 2.0 * 3.14159265358979323846 * v;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

std::int64_t Rng::hypergeometric(std::int64_t population, std::int64_t marked,
                                 std::int64_t draws) {
    if (population < 0 || marked < 0 || marked > population || draws < 0 ||
        draws > population) {
        fail(ErrorCode::DomainError, "invalid hypergeometric parameters");
    }
    // Sequential sampling; draws is at most a few thousand here.
    std::int64_t hits = 0;
    std::int64_t remaining_marked = marked;
    std::int64_t remaining = population;
    for (std::int64_t d = 0; d < draws; ++d) {
        if (uniform() * static_cast<double>(remaining) <
            static_cast<double>(remaining_marked)) {
            ++hits;
            --remaining_marked;
        }
        --remaining;
    }
    return hits;
}

std::vector<std::int64_t> Rng::multinomial(std::int64_t trials,
                                           const std::vector<double>& weights) {
    double total = 0.0;
    for (double w : weights) {
        if (w < 0.0) fail(ErrorCode::DomainError, "negative multinomial weight");
        total += w;
    }
    if (!(total > 0.0)) fail(ErrorCode::DomainError, "multinomial weights sum to 0");

    std::vector<std::int64_t> counts(weights.size(), 0);
    for (std::int64_t t = 0; t < trials; ++t) {
        double u = uniform() * total;
        std::size_t k = 0;
        for (; k + 1 < weights.size(); ++k) {
            if (u < weights[k]) break;
            u -= weights[k];
        }
        ++counts[k];
    }
    return counts;
}

}  // namespace crthte
