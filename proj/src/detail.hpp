#pragma once

#include <cmath>
#include <vector>

#include "sumprod/fft.hpp"
#include "sumprod/grid.hpp"

namespace sumprod::detail {

inline Shape shape_of(const DyadicGrid& g) {
    Shape s{g.n, {1, 1, 1, 1}};
    for (int i = 0; i < g.n; ++i) s.d[i] = g.dim(i);
    return s;
}

// Grid holding every index sum of nodes of a and b.
inline DyadicGrid sum_grid(const DyadicGrid& a, const DyadicGrid& b) {
    Vec lo{}, hi{};
    const double d = a.delta();
    for (int i = 0; i < a.n; ++i) {
        lo[i] = a.lo[i] + b.lo[i];
        hi[i] = lo[i] + static_cast<double>(a.dim(i) + b.dim(i) - 1) * d;
    }
    return DyadicGrid::make(a.n, a.m, lo, hi);
}

inline DyadicGrid reflected_grid(const DyadicGrid& g) {
    Vec lo{}, hi{};
    const double d = g.delta();
    for (int i = 0; i < g.n; ++i) {
        lo[i] = -g.hi[i] + d;
        hi[i] = -g.lo[i] + d;
    }
    return DyadicGrid::make(g.n, g.m, lo, hi);
}

// Lattice offsets o with |o| <= radius (in nodes).
inline std::vector<IVec> ball_offsets(int n, double radius) {
    const auto k = static_cast<std::int64_t>(std::floor(radius + 1e-9));
    std::vector<IVec> out;
    IVec o{};
    for (int i = 0; i < n; ++i) o[i] = -k;
    const double r2 = radius * radius * (1 + 1e-12) + 1e-12;
    while (true) {
        double d2 = 0;
        for (int i = 0; i < n; ++i) d2 += static_cast<double>(o[i] * o[i]);
        if (d2 <= r2) out.push_back(o);
        int ax = n - 1;
        while (ax >= 0 && ++o[ax] > k) {
            o[ax] = -k;
            --ax;
        }
        if (ax < 0) break;
    }
    return out;
}

}  // namespace sumprod::detail
