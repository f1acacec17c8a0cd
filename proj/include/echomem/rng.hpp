#ifndef ECHOMEM_RNG_HPP
#define ECHOMEM_RNG_HPP

#include <cmath>
#include <cstdint>
#include <string_view>

namespace echomem {

// Counter-based random numbers: every draw is a pure function of
// (seed, stream, counter), so results do not depend on which thread
// evaluates which shot.

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// FNV-1a hash of a stream name, for deriving named sub-streams.
constexpr std::uint64_t stream_id(std::string_view name)
{
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (char c : name) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    return h;
}

class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream) : key_(splitmix64(seed ^ splitmix64(stream))) {}

    /// Child stream keyed by an index, e.g. a phase point or a mode.
    CounterRng substream(std::uint64_t index) const { return CounterRng(key_, index + 0x5851F42D4C957F2DULL); }

    std::uint64_t bits(std::uint64_t counter) const { return splitmix64(key_ ^ splitmix64(counter)); }

    /// Uniform in (0, 1).
    double uniform(std::uint64_t counter) const
    {
        return (static_cast<double>(bits(counter) >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller on counters 2c and 2c+1.
    double normal(std::uint64_t counter) const
    {
        const double u1 = uniform(2 * counter);
        const double u2 = uniform(2 * counter + 1);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

private:
    std::uint64_t key_;
};

}  // namespace echomem

#endif
