#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace pdmp {

// splitmix64 step; used to derive well-separated stream seeds from a master
// seed without any statistical coupling between (replica, lane) pairs.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t lane) {
    std::uint64_t s = master;
    std::uint64_t a = splitmix64(s);
    s ^= stream + 0x9e3779b97f4a7c15ULL;
    std::uint64_t b = splitmix64(s);
    s ^= lane + 0xd1b54a32d192ed03ULL;
    std::uint64_t c = splitmix64(s);
    return a ^ (b << 1) ^ (c >> 1) ^ splitmix64(s);
}

// Deterministic random stream: mt19937_64 output is fixed by the standard, and
// all variate transforms below are hand-rolled (inverse CDF, Box-Muller) so
// that sequences replay byte-identically across platforms and library versions.
class RngStream {
  public:
    RngStream() : RngStream(0, 0, 0) {}
    RngStream(std::uint64_t master, std::uint64_t stream, std::uint64_t lane)
        : gen_(mix_seed(master, stream, lane)) {}

    // uniform on (0,1]; never returns 0 so -log is always finite
    double uniform() {
        const double u = (gen_() >> 11) * 0x1.0p-53;
        return 1.0 - u;
    }

    // uniform on [0,1)
    double uniform_co() { return (gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform_co(); }

    // Exp(rate) by inversion
    double exponential(double rate) { return -std::log(uniform()) / rate; }

    // standard normal, Box-Muller; the spare is cached, so call order matters
    // for replay (it does not matter for distribution)
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double r = std::sqrt(-2.0 * std::log(uniform()));
        const double theta = 6.283185307179586476925286766559 * uniform_co();
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    // integer in [0, n)
    std::uint64_t below(std::uint64_t n) {
        // rejection-free modulo is biased; use Lemire-style rejection
        while (true) {
            const std::uint64_t x = gen_();
            const std::uint64_t lim = n * ((~std::uint64_t{0}) / n);
            if (x < lim) return x % n;
        }
    }

    std::uint64_t raw() { return gen_(); }

  private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace pdmp
