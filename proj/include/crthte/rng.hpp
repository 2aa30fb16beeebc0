#pragma once

#include <cstdint>
#include <vector>

namespace crthte {

// ---------------------------------------------------------------------------
// Deterministic, platform-independent RNG.
//
// xoshiro256++ seeded through splitmix64. Every stochastic operation in the
// library takes an explicit seed or engine so results are reproducible
// bit-for-bit for a given (inputs, seed), independent of thread count.
// ---------------------------------------------------------------------------

std::uint64_t splitmix64(std::uint64_t& state);

// Derives a stream seed for work item `index` from a master seed. Used for
// per-replicate engines so replicates can run on any worker in any order.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    // Uniform on [0, 1) with 53-bit resolution.
    double uniform();

    // Uniform integer on [0, bound), bound >= 1, via rejection sampling.
    std::uint64_t uniform_below(std::uint64_t bound);

    // Standard normal via Box-Muller (second deviate cached).
    double normal();

    // Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(uniform_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // Number of marked items in a size-`draws` sample without replacement
    // from a population of `population` items of which `marked` are marked.
    std::int64_t hypergeometric(std::int64_t population, std::int64_t marked,
                                std::int64_t draws);

    // `trials` categorical draws with probabilities weights[i]/sum(weights).
    std::vector<std::int64_t> multinomial(std::int64_t trials,
                                          const std::vector<double>& weights);

private:
    std::uint64_t s_[4];
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace crthte
