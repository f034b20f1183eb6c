#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "sumprod/grid.hpp"
#include "sumprod/measure.hpp"

namespace testutil {

using namespace sumprod;

inline DyadicGrid unit_box(int n, int m, double lo = 0, double hi = 1) {
    Vec l{}, h{};
    for (int i = 0; i < n; ++i) {
        l[i] = lo;
        h[i] = hi;
    }
    return DyadicGrid::make(n, m, l, h);
}

// About `count` random cells of the box, seeded.
inline GridSet random_set(const DyadicGrid& g, std::size_t count, std::uint64_t seed) {
    std::vector<std::uint64_t> cells;
    for (std::size_t i = 0; i < count; ++i)
        cells.push_back(counter_hash(seed, i) % g.cell_count());
    return make_set(g, cells);
}

// Random probability measure on `count` random cells.
inline GridMeasure random_measure(const DyadicGrid& g, std::size_t count, std::uint64_t seed) {
    auto s = random_set(g, count, seed);
    std::vector<double> w;
    double total = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        w.push_back(0.1 + counter_uniform(seed ^ 0xABCDEFULL, i));
        total += w.back();
    }
    for (auto& x : w) x /= total;
    return make_measure(g, s.cells, w);
}

// Brute force sum over cells of a dense array.
inline double dense_sum(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return s;
}

}  // namespace testutil
