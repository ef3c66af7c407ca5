#pragma once

#include <cmath>
#include <cstdint>

namespace relpot {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
    std::uint64_t s = a;
    s = splitmix64(s) ^ (b + 0x9E3779B97F4A7C15ull);
    return splitmix64(s);
}

// Gaussian stream addressed by (seed, path, stream_key). Streams are derived
// from the address alone, never from draw order elsewhere, so estimates are
// identical no matter how paths are partitioned across workers. Normals come
// from Box-Muller over splitmix64 counters.
class GaussianStream {
public:
    GaussianStream(std::uint64_t seed, std::uint64_t path, std::uint64_t stream_key)
        : state_(hash_combine(hash_combine(seed, path + 1), stream_key)) {}

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = to_unit(splitmix64(state_)); // (0,1]
        const double u2 = to_unit(splitmix64(state_));
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double th = 2.0 * M_PI * u2;
        spare_ = r * std::sin(th);
        have_spare_ = true;
        return r * std::cos(th);
    }

private:
    static double to_unit(std::uint64_t x) {
        return static_cast<double>((x >> 11) + 1) * 0x1.0p-53; // (0,1]
    }

    std::uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace relpot
