#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>

namespace bsml::testing {

// Distance in representable doubles; max when signs differ (zeros excepted).
inline std::uint64_t ulp_distance(double a, double b) {
    if (a == b) return 0;
    if (std::isnan(a) || std::isnan(b) || std::signbit(a) != std::signbit(b))
        return std::numeric_limits<std::uint64_t>::max();
    std::int64_t ia, ib;
    std::memcpy(&ia, &a, 8);
    std::memcpy(&ib, &b, 8);
    return ia > ib ? std::uint64_t(ia - ib) : std::uint64_t(ib - ia);
}

}  // namespace bsml::testing
