#ifndef NK_RANDOM_HPP
#define NK_RANDOM_HPP

#include <cstdint>
#include <random>

namespace nk {

// Seeded generator with independent sub-streams. Uniform doubles are built
// from the top 53 bits so results do not depend on the standard library's
// distribution implementation.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
    {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
        engine_.seed(seq);
    }

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    std::uint64_t next() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

} // namespace nk

#endif
