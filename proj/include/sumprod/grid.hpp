#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "sumprod/common.hpp"

namespace sumprod {

// Axis-aligned box of lattice nodes at spacing delta = 2^-m. Node i on an axis
// sits at lo + i*delta and owns the delta-cube centred on it. lo and hi are
// multiples of delta, so every grid of the same m shares one global lattice.
struct DyadicGrid {
    int n = 1;
    int m = 0;
    Vec lo{};
    Vec hi{};

    static DyadicGrid make(int n, int m, const Vec& lo, const Vec& hi);
    // Smallest grid whose nodes cover every lattice point nearest to [xmin, xmax].
    static DyadicGrid covering(int n, int m, const Vec& xmin, const Vec& xmax);

    double delta() const;
    std::uint64_t dim(int axis) const;
    std::uint64_t cell_count() const;
    // Global lattice coordinate of node 0 on an axis (lo / delta).
    std::int64_t origin(int axis) const;

    IVec coords(std::uint64_t idx) const;
    std::uint64_t index(const IVec& c) const;
    bool in_box(const IVec& c) const;
    Vec center(std::uint64_t idx) const;
    Vec center_of(const IVec& c) const;
    // Local lattice coordinates of the node nearest to x (may lie outside the box).
    IVec nearest(const Vec& x) const;

    DyadicGrid enlarged(std::int64_t cells) const;
    bool operator==(const DyadicGrid& o) const;
    bool operator!=(const DyadicGrid& o) const { return !(*this == o); }
};

// Union bounding box of two grids at the same scale.
DyadicGrid merge_boxes(const DyadicGrid& a, const DyadicGrid& b);

struct GridSet {
    DyadicGrid grid;
    std::vector<std::uint64_t> cells;  // sorted, unique row-major indices

    std::size_t size() const { return cells.size(); }
    bool empty() const { return cells.empty(); }
    bool contains_cell(std::uint64_t idx) const;
    std::vector<Vec> points() const;
};

GridSet make_set(const DyadicGrid& g, std::vector<std::uint64_t> cells);
GridSet set_from_points(int n, int m, const std::vector<Vec>& pts);
GridSet full_set(const DyadicGrid& g);
// Re-express S on a larger grid of the same scale.
GridSet rebox(const GridSet& s, const DyadicGrid& target);
GridSet set_union(const GridSet& a, const GridSet& b);
bool is_subset(const GridSet& a, const GridSet& b);
bool same_cells(const GridSet& a, const GridSet& b);
GridSet negate(const GridSet& s);
double volume(const GridSet& s);

struct LipschitzMapSpec {
    std::function<Vec(const Vec&)> map;
    double lip_bound = 1.0;
    int out_dim = 0;  // 0 means same as the input dimension
};

GridSet neighborhood(const GridSet& s, double r);
std::uint64_t covering_number(const GridSet& s, double rho);
GridSet separated_subset(const GridSet& s, double rho);
// Each source cell is sampled on a (2*ceil(K))^n sub-lattice so the image of
// the whole cube is represented, not just its centre.
GridSet map_image(const GridSet& s, const LipschitzMapSpec& f);
// Largest |f(x)-f(y)|/|x-y| seen on sampled pairs of cells of s.
double sampled_lipschitz(const GridSet& s, const LipschitzMapSpec& f, int pairs, std::uint64_t seed);

}  // namespace sumprod
