#include "resflat/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace resflat {

std::vector<double> glorot_uniform(std::uint64_t seed, int fan_in, int fan_out,
                                   std::size_t count) {
    if (fan_in < 1 || fan_out < 1) {
        throw std::invalid_argument("glorot_uniform: fans must be >= 1");
    }
    const double a = std::sqrt(6.0 / (fan_in + fan_out));
    std::vector<double> out;
    out.reserve(count);
    RngState s{seed};
    for (std::size_t i = 0; i < count; ++i) {
        auto [s2, u] = uniform01(s);
        s = s2;
        out.push_back(-a + 2.0 * a * u);
    }
    return out;
}

}  // namespace resflat
