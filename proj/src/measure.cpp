#include "sumprod/measure.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "detail.hpp"
#include "sumprod/fft.hpp"

namespace sumprod {

using detail::ball_offsets;
using detail::reflected_grid;
using detail::shape_of;
using detail::sum_grid;

namespace {

constexpr std::uint64_t kDirectLimit = 1ULL << 22;

double cell_volume(const DyadicGrid& g) { return std::pow(g.delta(), g.n); }

// Drops FFT noise: anything below rel * max becomes zero.
GridMeasure from_dense_noisy(const DyadicGrid& g, const std::vector<double>& v, double rel = 1e-13) {
    double mx = 0;
    for (double x : v) mx = std::max(mx, x);
    const double floor = mx * rel;
    std::vector<std::uint64_t> cells;
    std::vector<double> w;
    for (std::uint64_t i = 0; i < v.size(); ++i)
        if (v[i] > floor) {
            cells.push_back(i);
            w.push_back(v[i]);
        }
    return make_measure(g, std::move(cells), std::move(w));
}

Vec times(const Vec& a, const Vec& x, int n) {
    Vec r{};
    for (int i = 0; i < n; ++i) r[i] = a[i] * x[i];
    return r;
}

// Box of all coordinate products of two supports.
std::pair<Vec, Vec> product_box(const GridMeasure& a, const GridMeasure& b) {
    const int n = a.grid.n;
    Vec mn{}, mx{};
    for (int i = 0; i < n; ++i) {
        double amin = a.center(0)[i], amax = amin, bmin = b.center(0)[i], bmax = bmin;
        for (std::size_t k = 0; k < a.size(); ++k) {
            amin = std::min(amin, a.center(k)[i]);
            amax = std::max(amax, a.center(k)[i]);
        }
        for (std::size_t k = 0; k < b.size(); ++k) {
            bmin = std::min(bmin, b.center(k)[i]);
            bmax = std::max(bmax, b.center(k)[i]);
        }
        const double c[4] = {amin * bmin, amin * bmax, amax * bmin, amax * bmax};
        mn[i] = *std::min_element(c, c + 4);
        mx[i] = *std::max_element(c, c + 4);
    }
    return {mn, mx};
}

// Adds mass w at point x of grid g, either to the nearest node or split multilinearly.
void deposit(std::vector<double>& acc, const DyadicGrid& g, const Vec& x, double w, Deposit how) {
    if (how == Deposit::nearest) {
        IVec c = g.nearest(x);
        if (!g.in_box(c)) throw domain_error("deposit outside target grid");
        acc[g.index(c)] += w;
        return;
    }
    std::array<std::int64_t, 4> base{};
    std::array<double, 4> frac{};
    for (int i = 0; i < g.n; ++i) {
        const double t = std::ldexp(x[i], g.m) - static_cast<double>(g.origin(i));
        const double f = std::floor(t);
        base[i] = static_cast<std::int64_t>(f);
        frac[i] = t - f;
    }
    for (int corner = 0; corner < (1 << g.n); ++corner) {
        IVec c{};
        double share = w;
        for (int i = 0; i < g.n; ++i) {
            const int bit = (corner >> i) & 1;
            c[i] = base[i] + bit;
            share *= bit ? frac[i] : 1 - frac[i];
        }
        if (share == 0) continue;
        if (!g.in_box(c)) throw domain_error("deposit outside target grid");
        acc[g.index(c)] += share;
    }
}

// Pushes a dense weight field on g forward by coordinate multiplication with y (zeros allowed).
GridMeasure push_dense(const DyadicGrid& g, const std::vector<double>& w, const Vec& y) {
    Vec mn{}, mx{};
    for (int i = 0; i < g.n; ++i) {
        const double a = g.lo[i] * y[i], b = (g.hi[i] - g.delta()) * y[i];
        mn[i] = std::min(a, b);
        mx[i] = std::max(a, b);
    }
    auto tg = DyadicGrid::covering(g.n, g.m, mn, mx);
    std::vector<double> acc(tg.cell_count(), 0.0);
    for (std::uint64_t k = 0; k < w.size(); ++k)
        if (w[k] != 0) deposit(acc, tg, times(g.center(k), y, g.n), w[k], Deposit::nearest);
    return from_dense_noisy(tg, acc, 0);
}

double l2sq_of_weights(const std::vector<double>& w, const DyadicGrid& g) {
    double s = 0;
    for (double x : w) s += x * x;
    return s / cell_volume(g);
}

}  // namespace

std::vector<double> GridMeasure::dense() const {
    std::vector<double> v(grid.cell_count(), 0.0);
    for (std::size_t k = 0; k < cells.size(); ++k) v[cells[k]] = weights[k];
    return v;
}

double GridMeasure::density_l2sq() const {
    double s = 0;
    for (double w : weights) s += w * w;
    return s / cell_volume(grid);
}

GridMeasure make_measure(const DyadicGrid& g, std::vector<std::uint64_t> cells, std::vector<double> weights) {
    if (cells.size() != weights.size()) throw domain_error("cells and weights differ in length");
    std::vector<std::size_t> order(cells.size());
    std::iota(order.begin(), order.end(), 0);
    if (!std::is_sorted(cells.begin(), cells.end()))
        std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return cells[i] < cells[j]; });
    GridMeasure mu;
    mu.grid = g;
    const std::uint64_t total = g.cell_count();
    for (auto k : order) {
        const double w = weights[k];
        if (!(w >= 0) || !std::isfinite(w)) throw domain_error("measure weights must be finite and nonnegative");
        if (cells[k] >= total) throw domain_error("cell index outside grid box");
        if (w == 0) continue;
        if (!mu.cells.empty() && mu.cells.back() == cells[k])
            mu.weights.back() += w;
        else {
            mu.cells.push_back(cells[k]);
            mu.weights.push_back(w);
        }
    }
    mu.mass = 0;
    for (double w : mu.weights) mu.mass += w;
    if (mu.mass > 1 + 1e-9) throw domain_error("measure mass exceeds 1");
    return mu;
}

GridMeasure measure_from_dense(const DyadicGrid& g, const std::vector<double>& dense) {
    std::vector<std::uint64_t> cells;
    std::vector<double> w;
    for (std::uint64_t i = 0; i < dense.size(); ++i)
        if (dense[i] != 0) {
            cells.push_back(i);
            w.push_back(dense[i]);
        }
    return make_measure(g, std::move(cells), std::move(w));
}

GridMeasure point_mass(int n, int m, const Vec& x) {
    auto g = DyadicGrid::covering(n, m, x, x);
    return make_measure(g, {g.index(g.nearest(x))}, {1.0});
}

GridMeasure uniform_on(const GridSet& s) {
    if (s.empty()) throw domain_error("uniform measure on an empty set");
    return make_measure(s.grid, s.cells, std::vector<double>(s.size(), 1.0 / static_cast<double>(s.size())));
}

GridMeasure rebox(const GridMeasure& mu, const DyadicGrid& target) {
    if (mu.grid == target) return mu;
    if (mu.grid.n != target.n || mu.grid.m != target.m) throw domain_error("rebox across scales");
    std::vector<std::uint64_t> cells;
    cells.reserve(mu.size());
    for (auto idx : mu.cells) {
        IVec c = mu.grid.coords(idx);
        for (int i = 0; i < target.n; ++i) c[i] += mu.grid.origin(i) - target.origin(i);
        if (!target.in_box(c)) throw domain_error("rebox target does not contain the measure");
        cells.push_back(target.index(c));
    }
    return make_measure(target, std::move(cells), mu.weights);
}

GridMeasure normalized(const GridMeasure& mu) {
    if (mu.mass <= 0) throw domain_error("cannot normalise a zero measure");
    auto w = mu.weights;
    for (auto& x : w) x /= mu.mass;
    return make_measure(mu.grid, mu.cells, std::move(w));
}

GridSet support(const GridMeasure& mu) { return GridSet{mu.grid, mu.cells}; }

double total_variation(const GridMeasure& a, const GridMeasure& b) {
    auto g = merge_boxes(a.grid, b.grid);
    auto ra = rebox(a, g), rb = rebox(b, g);
    double s = 0;
    std::size_t i = 0, j = 0;
    while (i < ra.size() || j < rb.size()) {
        if (j == rb.size() || (i < ra.size() && ra.cells[i] < rb.cells[j])) {
            s += ra.weights[i++];
        } else if (i == ra.size() || rb.cells[j] < ra.cells[i]) {
            s += rb.weights[j++];
        } else {
            s += std::abs(ra.weights[i++] - rb.weights[j++]);
        }
    }
    return 0.5 * s;
}

GridMeasure reflect(const GridMeasure& mu) {
    const auto& g = mu.grid;
    auto ng = reflected_grid(g);
    std::vector<std::uint64_t> cells;
    cells.reserve(mu.size());
    for (auto idx : mu.cells) {
        IVec c = g.coords(idx);
        for (int i = 0; i < g.n; ++i) c[i] = static_cast<std::int64_t>(g.dim(i)) - 1 - c[i];
        cells.push_back(ng.index(c));
    }
    return make_measure(ng, std::move(cells), mu.weights);
}

GridMeasure mix(const GridMeasure& a, const GridMeasure& b, double t) {
    if (!(t >= 0 && t <= 1)) throw domain_error("mixture weight must lie in [0,1]");
    auto g = merge_boxes(a.grid, b.grid);
    std::vector<double> acc(g.cell_count(), 0.0);
    auto ra = rebox(a, g), rb = rebox(b, g);
    for (std::size_t k = 0; k < ra.size(); ++k) acc[ra.cells[k]] += (1 - t) * ra.weights[k];
    for (std::size_t k = 0; k < rb.size(); ++k) acc[rb.cells[k]] += t * rb.weights[k];
    return measure_from_dense(g, acc);
}

double DensityField::mass() const {
    double s = 0;
    for (double v : values) s += v;
    return s * cell_volume(grid);
}

double DensityField::l2sq() const {
    double s = 0;
    for (double v : values) s += v * v;
    return s * cell_volume(grid);
}

double DensityField::at(const IVec& local) const {
    if (!grid.in_box(local)) return 0;
    return values[grid.index(local)];
}

DensityField smooth(const GridMeasure& nu, double delta1) {
    const auto& g = nu.grid;
    const double d = g.delta();
    if (delta1 < d * (1 - 1e-12)) throw domain_error("smoothing scale must be at least delta");
    const double radius = delta1 / d;
    const auto k = static_cast<std::int64_t>(std::floor(radius + 1e-9));
    auto offsets = ball_offsets(g.n, radius);
    DensityField out;
    out.grid = g.enlarged(k);
    const double norm = 1.0 / (static_cast<double>(offsets.size()) * cell_volume(g));

    if (static_cast<std::uint64_t>(nu.size()) * offsets.size() <= kDirectLimit) {
        out.values.assign(out.grid.cell_count(), 0.0);
        for (std::size_t j = 0; j < nu.size(); ++j) {
            IVec c = g.coords(nu.cells[j]);
            const double w = nu.weights[j] * norm;
            for (const auto& o : offsets) {
                IVec t{};
                for (int i = 0; i < g.n; ++i) t[i] = c[i] + k + o[i];
                out.values[out.grid.index(t)] += w;
            }
        }
        return out;
    }
    Shape ks{g.n, {1, 1, 1, 1}};
    for (int i = 0; i < g.n; ++i) ks.d[i] = static_cast<std::size_t>(2 * k + 1);
    std::vector<double> kernel(ks.total(), 0.0);
    for (const auto& o : offsets) {
        std::array<std::size_t, 4> c{};
        for (int i = 0; i < g.n; ++i) c[i] = static_cast<std::size_t>(o[i] + k);
        kernel[ks.index(c)] = norm;
    }
    out.values = fft_convolve(nu.dense(), shape_of(g), kernel, ks);
    double mx = 0;
    for (double v : out.values) mx = std::max(mx, v);
    for (auto& v : out.values)
        if (v < mx * 1e-13) v = 0;
    return out;
}

DensityField smooth_on(const GridMeasure& nu, double delta1, const DyadicGrid& target) {
    auto f = smooth(nu, delta1);
    DensityField out{target, std::vector<double>(target.cell_count(), 0.0)};
    for (std::uint64_t k = 0; k < f.values.size(); ++k) {
        if (f.values[k] == 0) continue;
        IVec c = f.grid.coords(k);
        for (int i = 0; i < target.n; ++i) c[i] += f.grid.origin(i) - target.origin(i);
        if (!target.in_box(c)) throw domain_error("smoothing target grid too small");
        out.values[target.index(c)] = f.values[k];
    }
    return out;
}

GridMeasure additive_convolve(const GridMeasure& mu, const GridMeasure& nu_in, Sign s) {
    if (mu.grid.n != nu_in.grid.n || mu.grid.m != nu_in.grid.m) throw domain_error("convolution grids differ");
    const GridMeasure nu = s == Sign::minus ? reflect(nu_in) : nu_in;
    auto g = sum_grid(mu.grid, nu.grid);
    if (mu.size() == 0 || nu.size() == 0) return make_measure(g, {}, {});
    if (static_cast<std::uint64_t>(mu.size()) * nu.size() <= kDirectLimit) {
        std::vector<double> acc(g.cell_count(), 0.0);
        for (std::size_t a = 0; a < mu.size(); ++a) {
            const IVec ca = mu.grid.coords(mu.cells[a]);
            for (std::size_t b = 0; b < nu.size(); ++b) {
                IVec cb = nu.grid.coords(nu.cells[b]);
                for (int i = 0; i < g.n; ++i) cb[i] += ca[i];
                acc[g.index(cb)] += mu.weights[a] * nu.weights[b];
            }
        }
        return measure_from_dense(g, acc);
    }
    auto conv = fft_convolve(mu.dense(), shape_of(mu.grid), nu.dense(), shape_of(nu.grid));
    return from_dense_noisy(g, conv);
}

GridMeasure convolution_power(const GridMeasure& mu, int r) {
    if (r < 1) throw domain_error("convolution power needs r >= 1");
    GridMeasure acc = mu;
    for (int i = 1; i < r; ++i) acc = additive_convolve(acc, mu);
    return acc;
}

GridMeasure symmetrize(const GridMeasure& mu, int r) {
    if (r < 1 || r > 4) throw domain_error("symmetrize needs 1 <= r <= 4");
    return convolution_power(additive_convolve(mu, mu, Sign::minus), r);
}

namespace {

GridMeasure mult_pairwise(const GridMeasure& mu, const GridMeasure& nu, Deposit how) {
    const int n = mu.grid.n;
    auto [mn, mx] = product_box(mu, nu);
    auto g = DyadicGrid::covering(n, mu.grid.m, mn, mx);
    if (how == Deposit::linear) g = g.enlarged(1);
    std::vector<double> acc(g.cell_count(), 0.0);
    std::vector<Vec> xs(mu.size()), ys(nu.size());
    for (std::size_t a = 0; a < mu.size(); ++a) xs[a] = mu.center(a);
    for (std::size_t b = 0; b < nu.size(); ++b) ys[b] = nu.center(b);
    for (std::size_t a = 0; a < mu.size(); ++a)
        for (std::size_t b = 0; b < nu.size(); ++b)
            deposit(acc, g, times(xs[a], ys[b], n), mu.weights[a] * nu.weights[b], how);
    return measure_from_dense(g, acc);
}

struct LogAxis {
    int sign = 1;
    double h = 0;
    std::int64_t jmin = 0;
    std::size_t count = 0;
};

// Per-axis sign of a support, or 0 when it touches or straddles zero.
int axis_sign(const GridMeasure& mu, int axis) {
    int s = 0;
    for (std::size_t k = 0; k < mu.size(); ++k) {
        const double x = mu.center(k)[axis];
        const int t = x > 0 ? 1 : (x < 0 ? -1 : 0);
        if (t == 0 || (s != 0 && t != s)) return 0;
        s = t;
    }
    return s;
}

std::vector<double> log_deposit(const GridMeasure& mu, const std::vector<LogAxis>& ax, Shape& shape) {
    const int n = mu.grid.n;
    shape = Shape{n, {1, 1, 1, 1}};
    for (int i = 0; i < n; ++i) shape.d[i] = ax[static_cast<std::size_t>(i)].count;
    std::vector<double> out(shape.total(), 0.0);
    for (std::size_t k = 0; k < mu.size(); ++k) {
        const Vec x = mu.center(k);
        std::array<std::size_t, 4> base{};
        std::array<double, 4> frac{};
        for (int i = 0; i < n; ++i) {
            const auto& a = ax[static_cast<std::size_t>(i)];
            const double t = std::log(std::abs(x[i])) / a.h - static_cast<double>(a.jmin);
            const double f = std::floor(t);
            base[i] = static_cast<std::size_t>(f);
            frac[i] = t - f;
        }
        for (int corner = 0; corner < (1 << n); ++corner) {
            std::array<std::size_t, 4> c{};
            double share = mu.weights[k];
            for (int i = 0; i < n; ++i) {
                const int bit = (corner >> i) & 1;
                c[i] = base[i] + static_cast<std::size_t>(bit);
                share *= bit ? frac[i] : 1 - frac[i];
            }
            if (share != 0) out[shape.index(c)] += share;
        }
    }
    return out;
}

std::vector<LogAxis> log_axes(const GridMeasure& mu, const std::vector<double>& h) {
    std::vector<LogAxis> ax(static_cast<std::size_t>(mu.grid.n));
    for (int i = 0; i < mu.grid.n; ++i) {
        double umin = 1e300, umax = -1e300;
        for (std::size_t k = 0; k < mu.size(); ++k) {
            const double u = std::log(std::abs(mu.center(k)[i]));
            umin = std::min(umin, u);
            umax = std::max(umax, u);
        }
        auto& a = ax[static_cast<std::size_t>(i)];
        a.sign = axis_sign(mu, i);
        a.h = h[static_cast<std::size_t>(i)];
        a.jmin = static_cast<std::int64_t>(std::floor(umin / a.h)) - 1;
        a.count = static_cast<std::size_t>(static_cast<std::int64_t>(std::floor(umax / a.h)) + 2 - a.jmin + 1);
    }
    return ax;
}

GridMeasure mult_fast(const GridMeasure& mu, const GridMeasure& nu, int refine) {
    const int n = mu.grid.n;
    for (int i = 0; i < n; ++i)
        if (axis_sign(mu, i) == 0 || axis_sign(nu, i) == 0)
            throw mode_error("log-domain path needs supports of one sign per coordinate; use the pairwise path");
    if (refine <= 0) refine = n == 1 ? 32 : 1;
    auto [mn, mx] = product_box(mu, nu);
    std::vector<double> h(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        h[static_cast<std::size_t>(i)] =
            mu.grid.delta() / (refine * std::max(std::abs(mn[i]), std::abs(mx[i])));
    auto ax_mu = log_axes(mu, h), ax_nu = log_axes(nu, h);
    std::uint64_t cells = 1;
    for (int i = 0; i < n; ++i)
        cells *= fft_size(ax_mu[static_cast<std::size_t>(i)].count + ax_nu[static_cast<std::size_t>(i)].count);
    check_budget(cells, "log-domain convolution");

    Shape smu, snu;
    auto fmu = log_deposit(mu, ax_mu, smu);
    auto fnu = log_deposit(nu, ax_nu, snu);
    auto conv = fft_convolve(fmu, smu, fnu, snu);
    Shape sc{n, {1, 1, 1, 1}};
    for (int i = 0; i < n; ++i) sc.d[i] = smu.d[i] + snu.d[i] - 1;

    auto g = DyadicGrid::covering(n, mu.grid.m, mn, mx).enlarged(1);
    std::vector<double> acc(g.cell_count(), 0.0);
    double top = 0;
    for (double v : conv) top = std::max(top, v);
    for (std::size_t k = 0; k < conv.size(); ++k) {
        if (conv[k] <= top * 1e-14) continue;
        auto c = sc.coords(k);
        Vec x{};
        for (int i = 0; i < n; ++i) {
            const auto& a = ax_mu[static_cast<std::size_t>(i)];
            const auto& b = ax_nu[static_cast<std::size_t>(i)];
            const double u = static_cast<double>(a.jmin + b.jmin + static_cast<std::int64_t>(c[i])) * a.h;
            x[i] = a.sign * b.sign * std::exp(u);
            // Clamp into the product box; the log grid overshoots by at most one node.
            x[i] = std::clamp(x[i], mn[i], mx[i]);
        }
        deposit(acc, g, x, conv[k], Deposit::linear);
    }
    return measure_from_dense(g, acc);
}

}  // namespace

GridMeasure multiplicative_convolve(const GridMeasure& mu, const GridMeasure& nu, const MultOptions& opt) {
    if (mu.grid.n != nu.grid.n || mu.grid.m != nu.grid.m) throw domain_error("convolution grids differ");
    if (mu.size() == 0 || nu.size() == 0) throw domain_error("multiplicative convolution of an empty measure");
    switch (opt.path) {
        case MultPath::pairwise:
            return mult_pairwise(mu, nu, opt.deposit);
        case MultPath::fast:
            return mult_fast(mu, nu, opt.log_refine);
        case MultPath::automatic:
            break;
    }
    const auto pairs = static_cast<std::uint64_t>(mu.size()) * nu.size();
    bool signed_axes = true;
    for (int i = 0; i < mu.grid.n; ++i) signed_axes = signed_axes && axis_sign(mu, i) != 0 && axis_sign(nu, i) != 0;
    if (pairs <= (1ULL << 26) || !signed_axes) return mult_pairwise(mu, nu, opt.deposit);
    return mult_fast(mu, nu, opt.log_refine);
}

GridMeasure pushforward_mult(const Vec& y, const GridMeasure& nu) {
    for (int i = 0; i < nu.grid.n; ++i)
        if (y[i] == 0) throw domain_error("pushforward by a point with a zero coordinate");
    if (nu.size() == 0) return nu;
    Vec mn{}, mx{};
    for (int i = 0; i < nu.grid.n; ++i) {
        mn[i] = 1e300;
        mx[i] = -1e300;
    }
    for (std::size_t k = 0; k < nu.size(); ++k) {
        Vec p = times(nu.center(k), y, nu.grid.n);
        for (int i = 0; i < nu.grid.n; ++i) {
            mn[i] = std::min(mn[i], p[i]);
            mx[i] = std::max(mx[i], p[i]);
        }
    }
    auto g = DyadicGrid::covering(nu.grid.n, nu.grid.m, mn, mx);
    std::vector<std::uint64_t> cells;
    cells.reserve(nu.size());
    for (std::size_t k = 0; k < nu.size(); ++k) cells.push_back(g.index(g.nearest(times(nu.center(k), y, nu.grid.n))));
    return make_measure(g, std::move(cells), nu.weights);
}

double det_mass_below(const GridMeasure& nu, double threshold) {
    double s = 0;
    for (std::size_t k = 0; k < nu.size(); ++k) {
        const Vec x = nu.center(k);
        double det = 1;
        for (int i = 0; i < nu.grid.n; ++i) det *= x[i];
        if (std::abs(det) <= threshold) s += nu.weights[k];
    }
    return s;
}

std::vector<Vec> direction_net(int n, int count) {
    if (count < 2 * n) throw domain_error("direction_count must be at least 2n");
    std::vector<Vec> dirs;
    const double pi = std::numbers::pi;
    if (n == 2) {
        for (int j = 0; j < count; ++j) {
            const double t = pi * j / count;
            dirs.push_back(Vec{std::cos(t), std::sin(t), 0, 0});
        }
    } else if (n == 3) {
        const double golden = pi * (3 - std::sqrt(5.0));
        for (int j = 0; j < count; ++j) {
            const double z = 1 - (2.0 * j + 1) / count;
            const double r = std::sqrt(std::max(0.0, 1 - z * z));
            dirs.push_back(Vec{r * std::cos(golden * j), r * std::sin(golden * j), z, 0});
        }
    } else if (n == 4) {
        const double g = 1.32471795724474602596;
        const double a1 = 1 / g, a2 = 1 / (g * g);
        for (int j = 0; j < count; ++j) {
            const double u1 = (j + 0.5) / count;
            const double u2 = std::fmod(0.5 + a1 * j, 1.0), u3 = std::fmod(0.5 + a2 * j, 1.0);
            const double eta = std::asin(std::sqrt(u1));
            const double al = 2 * pi * u2, be = 2 * pi * u3;
            dirs.push_back(Vec{std::cos(eta) * std::cos(al), std::cos(eta) * std::sin(al), std::sin(eta) * std::cos(be),
                               std::sin(eta) * std::sin(be)});
        }
    }
    for (int i = 0; i < n; ++i)
        for (double s : {1.0, -1.0}) {
            Vec e{};
            e[i] = s;
            bool present = false;
            for (const auto& v : dirs) {
                double d2 = 0;
                for (int k = 0; k < n; ++k) d2 += (v[k] - e[k]) * (v[k] - e[k]);
                present = present || d2 < 1e-20;
            }
            if (!present) dirs.push_back(e);
        }
    return dirs;
}

namespace {

double angular_step(int n, int count) {
    const double pi = std::numbers::pi;
    if (n == 1) return 0;
    if (n == 2) return pi / count;
    if (n == 3) return std::sqrt(4 * pi / count);
    return std::cbrt(2 * pi * pi / count);
}

double support_diameter(const GridMeasure& mu) {
    double d2 = 0;
    for (int i = 0; i < mu.grid.n; ++i) {
        double lo = 1e300, hi = -1e300;
        for (std::size_t k = 0; k < mu.size(); ++k) {
            lo = std::min(lo, mu.center(k)[i]);
            hi = std::max(hi, mu.center(k)[i]);
        }
        d2 += (hi - lo) * (hi - lo);
    }
    return std::sqrt(d2);
}

std::int64_t window_bins(double rho, double bin) { return std::max<std::int64_t>(1, std::llround(2 * rho / bin)); }

}  // namespace

NonConReport nonconcentration_along(const GridMeasure& mu, const std::vector<double>& rhos,
                                    const std::vector<Vec>& directions, double step) {
    if (rhos.empty()) throw domain_error("nonconcentration needs at least one scale");
    if (mu.size() == 0) throw domain_error("nonconcentration of an empty measure");
    NonConReport r;
    r.scales = rhos;
    r.directions = directions;
    r.bin_width = *std::min_element(rhos.begin(), rhos.end()) / 2;
    r.net_slack = support_diameter(mu) * step;
    const int n = mu.grid.n;
    const std::size_t ns = rhos.size(), nd = directions.size();
    r.per_direction.assign(ns, std::vector<double>(nd, 0.0));
    std::vector<std::vector<std::int64_t>> best_start(ns, std::vector<std::int64_t>(nd, 0));
    std::vector<Vec> xs(mu.size());
    for (std::size_t k = 0; k < mu.size(); ++k) xs[k] = mu.center(k);

    for (std::size_t d = 0; d < nd; ++d) {
        const Vec& v = directions[d];
        std::vector<std::int64_t> bins(mu.size());
        std::int64_t b0 = INT64_MAX, b1 = INT64_MIN;
        for (std::size_t k = 0; k < mu.size(); ++k) {
            double t = 0;
            for (int i = 0; i < n; ++i) t += v[i] * xs[k][i];
            bins[k] = static_cast<std::int64_t>(std::floor(t / r.bin_width));
            b0 = std::min(b0, bins[k]);
            b1 = std::max(b1, bins[k]);
        }
        std::vector<double> prefix(static_cast<std::size_t>(b1 - b0 + 2), 0.0);
        for (std::size_t k = 0; k < mu.size(); ++k) prefix[static_cast<std::size_t>(bins[k] - b0 + 1)] += mu.weights[k];
        for (std::size_t i = 1; i < prefix.size(); ++i) prefix[i] += prefix[i - 1];
        const auto last = static_cast<std::int64_t>(prefix.size()) - 1;
        for (std::size_t s = 0; s < ns; ++s) {
            const auto w = window_bins(rhos[s], r.bin_width);
            double best = -1;
            std::int64_t arg = 0;
            for (std::int64_t start = -w + 1; start <= b1 - b0; ++start) {
                const auto lo = std::clamp<std::int64_t>(start, 0, last);
                const auto hi = std::clamp<std::int64_t>(start + w, 0, last);
                const double m = prefix[static_cast<std::size_t>(hi)] - prefix[static_cast<std::size_t>(lo)];
                if (m > best) {
                    best = m;
                    arg = start + b0;
                }
            }
            r.per_direction[s][d] = best;
            best_start[s][d] = arg;
        }
    }

    for (std::size_t s = 0; s < ns; ++s) {
        std::size_t arg = 0;
        for (std::size_t d = 1; d < nd; ++d)
            if (r.per_direction[s][d] > r.per_direction[s][arg]) arg = d;
        r.sup_mass.push_back(r.per_direction[s][arg]);
        r.worst_direction.push_back(directions[arg]);
        const auto w = window_bins(rhos[s], r.bin_width);
        r.worst_offset.push_back((static_cast<double>(best_start[s][arg]) + static_cast<double>(w) / 2) * r.bin_width);
    }

    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int cnt = 0;
    for (std::size_t s = 0; s < ns; ++s) {
        if (r.sup_mass[s] <= 0) continue;
        const double x = std::log(rhos[s]), y = std::log(r.sup_mass[s]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++cnt;
    }
    const double den = cnt * sxx - sx * sx;
    r.kappa_hat = (cnt >= 2 && den != 0) ? (cnt * sxy - sx * sy) / den : 0.0;
    double excess = 0;
    for (std::size_t s = 0; s < ns; ++s)
        if (r.sup_mass[s] > 0) excess = std::max(excess, std::log(r.sup_mass[s]) - r.kappa_hat * std::log(rhos[s]));
    r.eps_hat = excess / std::log(1 / mu.grid.delta());
    return r;
}

NonConReport projective_nonconcentration(const GridMeasure& mu, const std::vector<double>& rhos, int direction_count) {
    const int n = mu.grid.n;
    return nonconcentration_along(mu, rhos, direction_net(n, direction_count), angular_step(n, direction_count));
}

double window_mass(const GridMeasure& mu, const Vec& v, double a, double rho, double bin_width) {
    const auto w = window_bins(rho, bin_width);
    const auto start = std::llround(a / bin_width - static_cast<double>(w) / 2);
    double s = 0;
    for (std::size_t k = 0; k < mu.size(); ++k) {
        const Vec x = mu.center(k);
        double t = 0;
        for (int i = 0; i < mu.grid.n; ++i) t += v[i] * x[i];
        const auto b = static_cast<std::int64_t>(std::floor(t / bin_width));
        if (b >= start && b < start + w) s += mu.weights[k];
    }
    return s;
}

SubalgebraReport subalgebra_distance(const GridSet& a) {
    const int n = a.grid.n;
    if (n < 2) throw domain_error("subalgebra distance needs n >= 2");
    if (a.empty()) throw domain_error("subalgebra distance of an empty set");
    SubalgebraReport r;
    auto pts = a.points();
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            double mx = 0;
            for (const auto& p : pts) mx = std::max(mx, std::abs(p[i] - p[j]) / std::sqrt(2.0));
            r.pairs.push_back({i, j, mx});
        }
    r.headline = r.pairs.front().value;
    for (const auto& p : r.pairs) r.headline = std::min(r.headline, p.value);
    return r;
}

SubalgebraReport subalgebra_distance(const GridMeasure& mu) { return subalgebra_distance(support(mu)); }

DyadicLevels dyadic_decompose(const GridMeasure& nu, double delta) {
    const auto& g = nu.grid;
    const double q_real = delta / g.delta();
    const auto q = static_cast<std::int64_t>(std::llround(q_real));
    if (q < 1 || std::abs(q_real - static_cast<double>(q)) > 1e-9)
        throw domain_error("decomposition scale must be an integer multiple of the grid delta");
    if (nu.size() == 0) throw domain_error("decomposition of an empty measure");
    DyadicLevels lv;
    lv.delta = delta;
    lv.grid = g.enlarged(3 * q);
    auto dens = smooth_on(nu, 2 * delta, lv.grid);
    auto offsets = ball_offsets(g.n, static_cast<double>(q));

    std::vector<std::vector<std::uint64_t>> members;
    for (std::uint64_t k = 0; k < dens.values.size(); ++k) {
        const double v = dens.values[k];
        if (v <= 0) continue;
        IVec c = lv.grid.coords(k);
        bool on_net = true;
        for (int i = 0; i < g.n; ++i) {
            const auto gc = c[i] + lv.grid.origin(i);
            on_net = on_net && ((gc % q) + q) % q == 0;
        }
        if (!on_net) continue;
        int level = 0;
        if (v > 1) {
            level = static_cast<int>(std::ceil(std::log2(v)));
            while (std::ldexp(1.0, level) < v) ++level;
            while (level > 1 && std::ldexp(1.0, level - 1) >= v) --level;
        }
        auto it = std::find(lv.level.begin(), lv.level.end(), level);
        std::size_t slot = static_cast<std::size_t>(it - lv.level.begin());
        if (it == lv.level.end()) {
            lv.level.push_back(level);
            members.emplace_back();
        }
        lv.centers.push_back(k);
        for (const auto& o : offsets) {
            IVec t = c;
            for (int i = 0; i < g.n; ++i) t[i] += o[i];
            if (lv.grid.in_box(t)) members[slot].push_back(lv.grid.index(t));
        }
    }
    std::vector<std::size_t> order(lv.level.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return lv.level[a] < lv.level[b]; });
    std::vector<int> sorted_levels;
    for (auto o : order) {
        sorted_levels.push_back(lv.level[o]);
        lv.sets.push_back(make_set(lv.grid, std::move(members[o])));
    }
    lv.level = std::move(sorted_levels);
    return lv;
}

SandwichConstants dyadic_sandwich(const GridMeasure& nu, const DyadicLevels& lv) {
    SandwichConstants c;
    const std::uint64_t total = lv.grid.cell_count();
    std::vector<double> all(total, 0.0), positive(total, 0.0);
    for (std::size_t l = 0; l < lv.sets.size(); ++l) {
        const double w = std::ldexp(1.0, lv.level[l]);
        for (auto idx : lv.sets[l].cells) {
            all[idx] += w;
            if (lv.level[l] > 0) positive[idx] += w;
        }
    }
    auto nd = smooth_on(nu, lv.delta, lv.grid);
    auto n3 = smooth_on(nu, 3 * lv.delta, lv.grid);
    for (std::uint64_t k = 0; k < total; ++k) {
        if (nd.values[k] > 0) c.upper = std::max(c.upper, all[k] > 0 ? nd.values[k] / all[k] : HUGE_VAL);
        if (positive[k] > 0) c.lower = std::max(c.lower, n3.values[k] > 0 ? positive[k] / n3.values[k] : HUGE_VAL);
    }
    const auto q = static_cast<double>(std::llround(lv.delta / nu.grid.delta()));
    auto offsets = ball_offsets(nu.grid.n, q);
    std::vector<std::uint32_t> cover(total, 0);
    for (auto k : lv.centers) {
        IVec cc = lv.grid.coords(k);
        for (const auto& o : offsets) {
            IVec t = cc;
            for (int i = 0; i < lv.grid.n; ++i) t[i] += o[i];
            if (lv.grid.in_box(t)) ++cover[lv.grid.index(t)];
        }
    }
    for (auto v : cover) c.max_overlap = std::max<std::size_t>(c.max_overlap, v);
    return c;
}

FlatteningReport flattening_integral(const GridMeasure& nu, double delta1, int samples, std::uint64_t seed,
                                     int threads) {
    if (samples < 16) throw domain_error("flattening_integral needs at least 16 samples");
    if (nu.size() == 0 || nu.mass <= 0) throw domain_error("flattening_integral of an empty measure");
    const auto& g = nu.grid;
    const int n = g.n;
    FlatteningReport r;
    r.delta1 = delta1;
    r.sample_count = samples;
    r.degenerate = nu.size() == 1;

    auto dens = smooth(nu, delta1);
    r.rhs = dens.l2sq();
    const double vol = cell_volume(g);
    std::vector<double> w1(dens.values.size());
    for (std::size_t k = 0; k < w1.size(); ++k) w1[k] = dens.values[k] * vol;
    const Shape s1 = shape_of(dens.grid);

    std::vector<double> cdf(nu.size());
    std::partial_sum(nu.weights.begin(), nu.weights.end(), cdf.begin());

    double ymax = 0;
    for (std::size_t k = 0; k < nu.size(); ++k) ymax = std::max(ymax, norm(nu.center(k), n));
    const double nyquist = 1 / (2 * g.delta());
    r.freq_radius = std::min({1 / (8 * delta1), 1 / (8 * delta1 * std::max(ymax, 1e-300)), nyquist});
    Shape fshape{n, {1, 1, 1, 1}};
    for (int i = 0; i < n; ++i)
        fshape.d[i] = fft_size(4 * static_cast<std::size_t>(static_cast<double>(g.dim(i)) * std::max(1.0, ymax) + 2));
    auto nu_hat = dft_plus(nu.dense(), shape_of(g), fshape);
    std::vector<double> in_ball(fshape.total(), 0.0);
    double node_vol = 1;
    for (int i = 0; i < n; ++i) node_vol /= static_cast<double>(fshape.d[i]) * g.delta();
    for (std::size_t k = 0; k < in_ball.size(); ++k) {
        auto c = fshape.coords(k);
        double xi2 = 0;
        for (int i = 0; i < n; ++i) {
            auto ki = static_cast<double>(c[i]);
            if (c[i] >= fshape.d[i] / 2) ki -= static_cast<double>(fshape.d[i]);
            const double xi = ki / (static_cast<double>(fshape.d[i]) * g.delta());
            xi2 += xi * xi;
        }
        if (xi2 <= r.freq_radius * r.freq_radius) in_ball[k] = std::norm(nu_hat[k]) * node_vol;
    }

    std::vector<double> space(static_cast<std::size_t>(samples)), freq(static_cast<std::size_t>(samples)),
        dets(static_cast<std::size_t>(samples));
    parallel_for(space.size(), threads, [&](std::size_t i) {
        const double u = counter_uniform(seed, i) * nu.mass;
        auto pos = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
        pos = std::min(pos, nu.size() - 1);
        const Vec y = nu.center(pos);
        double det = 1;
        for (int a = 0; a < n; ++a) det *= y[a];
        dets[i] = std::abs(det);

        auto pushed = push_dense(dens.grid, w1, y);
        auto conv = fft_convolve(w1, s1, pushed.dense(), shape_of(pushed.grid));
        space[i] = l2sq_of_weights(conv, g);

        auto pushed_nu = push_dense(g, nu.dense(), y);
        Shape sp = shape_of(pushed_nu.grid);
        bool fits = true;
        for (int a = 0; a < n; ++a) fits = fits && sp.d[a] <= fshape.d[a];
        double f = 0;
        if (fits) {
            auto ph = dft_plus(pushed_nu.dense(), sp, fshape);
            for (std::size_t k = 0; k < ph.size(); ++k)
                if (in_ball[k] != 0) f += in_ball[k] * std::norm(ph[k]);
        }
        freq[i] = f;
    });

    double sum = 0, sumsq = 0, fsum = 0, small = 0;
    const double det_thr = std::pow(delta1, n / 2.0);
    for (std::size_t i = 0; i < space.size(); ++i) {
        sum += space[i];
        sumsq += space[i] * space[i];
        fsum += freq[i];
        if (dets[i] <= det_thr) small += 1;
    }
    const double ns = samples;
    r.lhs = sum / ns;
    r.lhs_stderr = std::sqrt(std::max(0.0, sumsq / ns - r.lhs * r.lhs) / ns);
    r.freq_side = fsum / ns;
    r.space_to_freq = r.freq_side > 0 ? r.lhs / r.freq_side : HUGE_VAL;
    r.small_det_mass = small / ns;
    r.ratio = r.lhs / r.rhs;
    r.eps_hat = std::log(r.ratio) / std::log(delta1);
    return r;
}

std::string flattening_csv_header() {
    return "delta1,lhs,rhs,ratio,eps_hat,sample_count,lhs_stderr,freq_side,space_to_freq,small_det_mass";
}

std::string flattening_csv_row(const FlatteningReport& r) {
    return fmt_num(r.delta1) + "," + fmt_num(r.lhs) + "," + fmt_num(r.rhs) + "," + fmt_num(r.ratio) + "," +
           fmt_num(r.eps_hat) + "," + std::to_string(r.sample_count) + "," + fmt_num(r.lhs_stderr) + "," +
           fmt_num(r.freq_side) + "," + fmt_num(r.space_to_freq) + "," + fmt_num(r.small_det_mass);
}

NonconcParams convert_nonconc_params(const NonconcParams& p) {
    if (!(p.kappa > 0) || !(p.eps >= 0)) throw domain_error("non-concentration parameters need kappa > 0, eps >= 0");
    if (p.form == NonconcForm::two) return {NonconcForm::one, std::min(p.kappa, 1.0), p.eps};
    if (!(p.kappa > 2 * p.eps)) throw domain_error("converting form (1) to form (2) requires kappa1 > 2 eps1");
    return {NonconcForm::two, p.kappa / 2, 2 * p.eps / p.kappa};
}

}  // namespace sumprod
