#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <random>

#include "sgcr/vec3.hpp"

namespace sgcr {

// Deterministic RNG wrapper. Normal draws use Box-Muller so sequences do not
// depend on the standard library's distribution internals.
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    double uniform() {
        // 53-bit mantissa uniform in [0,1).
        return double(engine_() >> 11) * (1.0 / 9007199254740992.0);
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n).
    uint64_t index(uint64_t n) { return uint64_t(uniform() * double(n)) % n; }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform(), u2 = uniform();
        while (u1 <= 1e-300) u1 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    Vec3 normal3() {
        const double a = normal(), b = normal(), c = normal();
        return {a, b, c};
    }

    void save(std::ostream& os) const {
        uint64_t bits;
        std::memcpy(&bits, &spare_, sizeof bits);  // bit-exact round trip
        os << engine_ << ' ' << int(has_spare_) << ' ' << bits;
    }

    void load(std::istream& is) {
        int spare_flag = 0;
        uint64_t bits = 0;
        is >> engine_ >> spare_flag >> bits;
        std::memcpy(&spare_, &bits, sizeof bits);
        has_spare_ = spare_flag != 0;
    }

    // Independent child stream; distinct labels give distinct streams.
    Rng fork(uint64_t label) {
        std::seed_seq seq{engine_(), uint64_t(0x9e3779b97f4a7c15ULL), label};
        std::mt19937_64 child(seq);
        Rng r(0);
        r.engine_ = child;
        return r;
    }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace sgcr
