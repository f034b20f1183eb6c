#include "sumprod/grid.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "detail.hpp"

namespace sumprod {

namespace {

bool is_lattice_multiple(double x, int m) {
    double s = std::ldexp(x, m);
    return std::isfinite(s) && s == std::floor(s);
}

struct IVecHash {
    std::size_t operator()(const IVec& v) const {
        std::uint64_t h = 0;
        for (auto c : v) h = splitmix64(h ^ static_cast<std::uint64_t>(c));
        return static_cast<std::size_t>(h);
    }
};

void sort_unique(std::vector<std::uint64_t>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
}

}  // namespace

DyadicGrid DyadicGrid::make(int n, int m, const Vec& lo, const Vec& hi) {
    if (n < 1 || n > kMaxDim) throw domain_error("grid dimension must be in 1..4");
    if (m < 0 || m > 40) throw domain_error("grid scale exponent must be in 0..40");
    DyadicGrid g;
    g.n = n;
    g.m = m;
    for (int i = 0; i < n; ++i) {
        if (!(hi[i] > lo[i])) throw domain_error("grid box must satisfy hi > lo on every axis");
        if (!is_lattice_multiple(lo[i], m) || !is_lattice_multiple(hi[i], m))
            throw domain_error("grid box bounds must be multiples of delta");
        g.lo[i] = lo[i];
        g.hi[i] = hi[i];
    }
    check_budget(g.cell_count(), "grid");
    return g;
}

DyadicGrid DyadicGrid::covering(int n, int m, const Vec& xmin, const Vec& xmax) {
    Vec lo{}, hi{};
    const double d = std::ldexp(1.0, -m);
    for (int i = 0; i < n; ++i) {
        lo[i] = std::floor(xmin[i] / d + 0.5) * d;
        hi[i] = (std::floor(xmax[i] / d + 0.5) + 1) * d;
    }
    return make(n, m, lo, hi);
}

double DyadicGrid::delta() const { return std::ldexp(1.0, -m); }

std::uint64_t DyadicGrid::dim(int axis) const {
    if (axis >= n) return 1;
    return static_cast<std::uint64_t>(std::llround(std::ldexp(hi[axis] - lo[axis], m)));
}

std::uint64_t DyadicGrid::cell_count() const {
    // Saturating product so oversized boxes still fail the budget check.
    std::uint64_t c = 1;
    for (int i = 0; i < n; ++i) {
        std::uint64_t d = dim(i);
        if (d != 0 && c > (~std::uint64_t{0}) / d) return ~std::uint64_t{0};
        c *= d;
    }
    return c;
}

std::int64_t DyadicGrid::origin(int axis) const {
    if (axis >= n) return 0;
    return std::llround(std::ldexp(lo[axis], m));
}

IVec DyadicGrid::coords(std::uint64_t idx) const {
    IVec c{};
    for (int i = n - 1; i >= 0; --i) {
        std::uint64_t d = dim(i);
        c[i] = static_cast<std::int64_t>(idx % d);
        idx /= d;
    }
    return c;
}

std::uint64_t DyadicGrid::index(const IVec& c) const {
    std::uint64_t idx = 0;
    for (int i = 0; i < n; ++i) idx = idx * dim(i) + static_cast<std::uint64_t>(c[i]);
    return idx;
}

bool DyadicGrid::in_box(const IVec& c) const {
    for (int i = 0; i < n; ++i)
        if (c[i] < 0 || static_cast<std::uint64_t>(c[i]) >= dim(i)) return false;
    return true;
}

Vec DyadicGrid::center(std::uint64_t idx) const { return center_of(coords(idx)); }

Vec DyadicGrid::center_of(const IVec& c) const {
    Vec x{};
    const double d = delta();
    for (int i = 0; i < n; ++i) x[i] = static_cast<double>(origin(i) + c[i]) * d;
    return x;
}

IVec DyadicGrid::nearest(const Vec& x) const {
    IVec c{};
    for (int i = 0; i < n; ++i)
        c[i] = static_cast<std::int64_t>(std::floor(std::ldexp(x[i], m) + 0.5)) - origin(i);
    return c;
}

DyadicGrid DyadicGrid::enlarged(std::int64_t cells) const {
    Vec l = lo, h = hi;
    const double d = delta() * static_cast<double>(cells);
    for (int i = 0; i < n; ++i) {
        l[i] -= d;
        h[i] += d;
    }
    return make(n, m, l, h);
}

bool DyadicGrid::operator==(const DyadicGrid& o) const {
    if (n != o.n || m != o.m) return false;
    for (int i = 0; i < n; ++i)
        if (lo[i] != o.lo[i] || hi[i] != o.hi[i]) return false;
    return true;
}

DyadicGrid merge_boxes(const DyadicGrid& a, const DyadicGrid& b) {
    if (a.n != b.n || a.m != b.m) throw domain_error("grids differ in dimension or scale");
    Vec lo{}, hi{};
    for (int i = 0; i < a.n; ++i) {
        lo[i] = std::min(a.lo[i], b.lo[i]);
        hi[i] = std::max(a.hi[i], b.hi[i]);
    }
    return DyadicGrid::make(a.n, a.m, lo, hi);
}

bool GridSet::contains_cell(std::uint64_t idx) const {
    return std::binary_search(cells.begin(), cells.end(), idx);
}

std::vector<Vec> GridSet::points() const {
    std::vector<Vec> out;
    out.reserve(cells.size());
    for (auto c : cells) out.push_back(grid.center(c));
    return out;
}

GridSet make_set(const DyadicGrid& g, std::vector<std::uint64_t> cells) {
    sort_unique(cells);
    if (!cells.empty() && cells.back() >= g.cell_count()) throw domain_error("cell index outside grid box");
    return GridSet{g, std::move(cells)};
}

GridSet set_from_points(int n, int m, const std::vector<Vec>& pts) {
    if (pts.empty()) {
        Vec lo{}, hi{};
        for (int i = 0; i < n; ++i) hi[i] = std::ldexp(1.0, -m);
        return GridSet{DyadicGrid::make(n, m, lo, hi), {}};
    }
    Vec mn = pts[0], mx = pts[0];
    for (const auto& p : pts)
        for (int i = 0; i < n; ++i) {
            mn[i] = std::min(mn[i], p[i]);
            mx[i] = std::max(mx[i], p[i]);
        }
    auto g = DyadicGrid::covering(n, m, mn, mx);
    std::vector<std::uint64_t> cells;
    cells.reserve(pts.size());
    for (const auto& p : pts) cells.push_back(g.index(g.nearest(p)));
    return make_set(g, std::move(cells));
}

GridSet full_set(const DyadicGrid& g) {
    std::vector<std::uint64_t> cells(g.cell_count());
    for (std::uint64_t i = 0; i < cells.size(); ++i) cells[i] = i;
    return GridSet{g, std::move(cells)};
}

GridSet rebox(const GridSet& s, const DyadicGrid& target) {
    if (s.grid == target) return s;
    if (s.grid.n != target.n || s.grid.m != target.m) throw domain_error("rebox across scales");
    std::vector<std::uint64_t> cells;
    cells.reserve(s.cells.size());
    for (auto idx : s.cells) {
        IVec c = s.grid.coords(idx);
        for (int i = 0; i < target.n; ++i) c[i] += s.grid.origin(i) - target.origin(i);
        if (!target.in_box(c)) throw domain_error("rebox target does not contain the set");
        cells.push_back(target.index(c));
    }
    return make_set(target, std::move(cells));
}

GridSet set_union(const GridSet& a, const GridSet& b) {
    auto g = merge_boxes(a.grid, b.grid);
    auto ra = rebox(a, g), rb = rebox(b, g);
    std::vector<std::uint64_t> out;
    std::set_union(ra.cells.begin(), ra.cells.end(), rb.cells.begin(), rb.cells.end(), std::back_inserter(out));
    return GridSet{g, std::move(out)};
}

bool is_subset(const GridSet& a, const GridSet& b) {
    if (a.empty()) return true;
    auto g = merge_boxes(a.grid, b.grid);
    auto ra = rebox(a, g), rb = rebox(b, g);
    return std::includes(rb.cells.begin(), rb.cells.end(), ra.cells.begin(), ra.cells.end());
}

bool same_cells(const GridSet& a, const GridSet& b) {
    if (a.size() != b.size()) return false;
    return is_subset(a, b);
}

GridSet negate(const GridSet& s) {
    const auto& g = s.grid;
    Vec lo{}, hi{};
    const double d = g.delta();
    for (int i = 0; i < g.n; ++i) {
        lo[i] = -g.hi[i] + d;
        hi[i] = -g.lo[i] + d;
    }
    auto ng = DyadicGrid::make(g.n, g.m, lo, hi);
    std::vector<std::uint64_t> cells;
    cells.reserve(s.size());
    for (auto idx : s.cells) {
        IVec c = g.coords(idx);
        for (int i = 0; i < g.n; ++i) c[i] = static_cast<std::int64_t>(g.dim(i)) - 1 - c[i];
        cells.push_back(ng.index(c));
    }
    return make_set(ng, std::move(cells));
}

double volume(const GridSet& s) {
    return static_cast<double>(s.size()) * std::pow(s.grid.delta(), s.grid.n);
}

GridSet neighborhood(const GridSet& s, double r) {
    const auto& g = s.grid;
    const double d = g.delta();
    if (r < d * (1 - 1e-12)) throw domain_error("neighborhood radius must be at least delta");
    const double radius_cells = r / d + std::sqrt(static_cast<double>(g.n)) / 2;
    auto offsets = detail::ball_offsets(g.n, radius_cells);
    auto k = static_cast<std::int64_t>(std::floor(radius_cells + 1e-9));
    auto big = g.enlarged(k);
    if (s.empty()) return GridSet{big, {}};

    const std::uint64_t total = big.cell_count();
    const std::uint64_t candidates = s.size() * offsets.size();
    std::vector<std::uint64_t> out;
    if (total <= 8 * candidates) {
        std::vector<std::uint8_t> mark(total, 0);
        for (auto idx : s.cells) {
            IVec c = g.coords(idx);
            for (const auto& o : offsets) {
                IVec t{};
                for (int i = 0; i < g.n; ++i) t[i] = c[i] + k + o[i];
                mark[big.index(t)] = 1;
            }
        }
        for (std::uint64_t i = 0; i < total; ++i)
            if (mark[i]) out.push_back(i);
        return GridSet{big, std::move(out)};
    }
    out.reserve(candidates);
    for (auto idx : s.cells) {
        IVec c = g.coords(idx);
        for (const auto& o : offsets) {
            IVec t{};
            for (int i = 0; i < g.n; ++i) t[i] = c[i] + k + o[i];
            out.push_back(big.index(t));
        }
    }
    return make_set(big, std::move(out));
}

std::uint64_t covering_number(const GridSet& s, double rho) {
    const auto& g = s.grid;
    if (rho < g.delta() * (1 - 1e-12)) throw domain_error("covering scale rho must be at least delta");
    if (s.empty()) return 0;
    if (g.n == 1) {
        std::vector<std::int64_t> keys;
        keys.reserve(s.size());
        for (auto idx : s.cells) keys.push_back(static_cast<std::int64_t>(std::floor(g.center(idx)[0] / rho)));
        std::sort(keys.begin(), keys.end());
        return static_cast<std::uint64_t>(std::unique(keys.begin(), keys.end()) - keys.begin());
    }
    std::vector<IVec> keys;
    keys.reserve(s.size());
    for (auto idx : s.cells) {
        Vec x = g.center(idx);
        IVec k{};
        for (int i = 0; i < g.n; ++i) k[i] = static_cast<std::int64_t>(std::floor(x[i] / rho));
        keys.push_back(k);
    }
    std::sort(keys.begin(), keys.end());
    return static_cast<std::uint64_t>(std::unique(keys.begin(), keys.end()) - keys.begin());
}

GridSet separated_subset(const GridSet& s, double rho) {
    const auto& g = s.grid;
    if (rho < g.delta() * (1 - 1e-12)) throw domain_error("separation rho must be at least delta");
    std::unordered_map<IVec, std::vector<Vec>, IVecHash> buckets;
    std::vector<std::uint64_t> chosen;
    const double rho2 = rho * rho * (1 - 1e-12);
    for (auto idx : s.cells) {
        Vec x = g.center(idx);
        IVec key{};
        for (int i = 0; i < g.n; ++i) key[i] = static_cast<std::int64_t>(std::floor(x[i] / rho));
        bool ok = true;
        IVec o{};
        for (int i = 0; i < g.n; ++i) o[i] = -1;
        while (ok) {
            IVec kk = key;
            for (int i = 0; i < g.n; ++i) kk[i] += o[i];
            auto it = buckets.find(kk);
            if (it != buckets.end()) {
                for (const auto& p : it->second) {
                    double d2 = 0;
                    for (int i = 0; i < g.n; ++i) d2 += (p[i] - x[i]) * (p[i] - x[i]);
                    if (d2 < rho2) {
                        ok = false;
                        break;
                    }
                }
            }
            int ax = g.n - 1;
            while (ax >= 0 && ++o[ax] > 1) {
                o[ax] = -1;
                --ax;
            }
            if (ax < 0) break;
        }
        if (ok) {
            buckets[key].push_back(x);
            chosen.push_back(idx);
        }
    }
    return GridSet{g, std::move(chosen)};
}

GridSet map_image(const GridSet& s, const LipschitzMapSpec& f) {
    const auto& g = s.grid;
    const int out_n = f.out_dim > 0 ? f.out_dim : g.n;
    if (s.empty()) return set_from_points(out_n, g.m, {});
    const int sub = 2 * std::max(1, static_cast<int>(std::ceil(f.lip_bound - 1e-12)));
    std::uint64_t per_cell = 1;
    for (int i = 0; i < g.n; ++i) per_cell *= static_cast<std::uint64_t>(sub);
    check_budget(s.size() * per_cell, "map_image samples");

    const double d = g.delta();
    std::vector<Vec> images;
    images.reserve(s.size() * per_cell);
    for (auto idx : s.cells) {
        Vec c = g.center(idx);
        for (std::uint64_t j = 0; j < per_cell; ++j) {
            Vec x = c;
            std::uint64_t r = j;
            for (int i = 0; i < g.n; ++i) {
                auto t = static_cast<double>(r % static_cast<std::uint64_t>(sub));
                r /= static_cast<std::uint64_t>(sub);
                x[i] += ((t + 0.5) / sub - 0.5) * d;
            }
            images.push_back(f.map(x));
        }
    }
    return set_from_points(out_n, g.m, images);
}

double sampled_lipschitz(const GridSet& s, const LipschitzMapSpec& f, int pairs, std::uint64_t seed) {
    if (s.size() < 2) return 0;
    const int out_n = f.out_dim > 0 ? f.out_dim : s.grid.n;
    double best = 0;
    for (int p = 0; p < pairs; ++p) {
        auto i = counter_hash(seed, 2 * static_cast<std::uint64_t>(p)) % s.size();
        auto j = counter_hash(seed, 2 * static_cast<std::uint64_t>(p) + 1) % s.size();
        if (i == j) continue;
        Vec x = s.grid.center(s.cells[i]), y = s.grid.center(s.cells[j]);
        Vec fx = f.map(x), fy = f.map(y);
        Vec dx{}, dy{};
        for (int k = 0; k < s.grid.n; ++k) dx[k] = x[k] - y[k];
        for (int k = 0; k < out_n; ++k) dy[k] = fx[k] - fy[k];
        best = std::max(best, norm(dy, out_n) / norm(dx, s.grid.n));
    }
    return best;
}

}  // namespace sumprod
