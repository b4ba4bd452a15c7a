/*
 * rng.hpp - reproducible random streams.
 *
 * A run is identified by one 64-bit seed.  Independent streams (one per
 * Monte-Carlo path, or per sampled increment) are keyed by (seed, stream,
 * substream) through a SplitMix64 hash and feed a Mersenne Twister.  A
 * stream's draws depend only on its key, never on which worker runs it.
 */

#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace tpam {

inline std::uint64_t splitmix64(std::uint64_t& state)
{
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

struct StreamKey {
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
    std::uint64_t substream = 0;

    std::string token() const
    {
        return std::to_string(seed) + ":" + std::to_string(stream) + ":" +
               std::to_string(substream);
    }
};

class RngStream {
public:
    explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0, std::uint64_t substream = 0)
        : key_{seed, stream, substream}
    {
        std::uint64_t state = seed;
        const std::uint64_t a = splitmix64(state) ^ stream;
        state = a;
        const std::uint64_t b = splitmix64(state) ^ substream;
        state = b;
        std::uint32_t words[8];
        for (int i = 0; i < 4; ++i) {
            const std::uint64_t w = splitmix64(state);
            words[2 * i] = static_cast<std::uint32_t>(w);
            words[2 * i + 1] = static_cast<std::uint32_t>(w >> 32);
        }
        std::seed_seq seq(words, words + 8);
        engine_.seed(seq);
    }

    double gaussian() { return normal_(engine_); }
    double uniform() { return uniform_(engine_); }
    std::uint64_t bits() { return engine_(); }
    const StreamKey& key() const { return key_; }

private:
    StreamKey key_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace tpam
