#include "sumprod/set_calculus.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "detail.hpp"

namespace sumprod {

using detail::shape_of;
using detail::sum_grid;

namespace {

constexpr std::uint64_t kPairwiseLimit = 1ULL << 24;

std::vector<std::uint64_t> from_marks(const std::vector<std::uint8_t>& mark) {
    std::vector<std::uint64_t> out;
    for (std::uint64_t i = 0; i < mark.size(); ++i)
        if (mark[i]) out.push_back(i);
    return out;
}

Vec times(const Vec& a, const Vec& x, int n) {
    Vec r{};
    for (int i = 0; i < n; ++i) r[i] = a[i] * x[i];
    return r;
}

}  // namespace

std::uint64_t n_delta(const GridSet& s) { return covering_number(s, s.grid.delta()); }

GridSet sumset(const GridSet& a_in, const GridSet& b_in, Sign s) {
    if (a_in.grid.n != b_in.grid.n || a_in.grid.m != b_in.grid.m) throw domain_error("sumset grids differ");
    const GridSet b = s == Sign::minus ? negate(b_in) : b_in;
    const GridSet& a = a_in;
    auto g = sum_grid(a.grid, b.grid);
    if (a.empty() || b.empty()) return GridSet{g, {}};

    const std::uint64_t pairs = a.size() * b.size();
    const std::uint64_t total = g.cell_count();
    if (pairs <= kPairwiseLimit) {
        auto add = [&](std::uint64_t ia, std::uint64_t ib) {
            IVec ca = a.grid.coords(ia), cb = b.grid.coords(ib);
            for (int i = 0; i < g.n; ++i) ca[i] += cb[i];
            return g.index(ca);
        };
        if (total <= 16 * pairs) {
            std::vector<std::uint8_t> mark(total, 0);
            for (auto ia : a.cells)
                for (auto ib : b.cells) mark[add(ia, ib)] = 1;
            return GridSet{g, from_marks(mark)};
        }
        std::vector<std::uint64_t> out;
        out.reserve(pairs);
        for (auto ia : a.cells)
            for (auto ib : b.cells) out.push_back(add(ia, ib));
        return make_set(g, std::move(out));
    }
    auto sa = shape_of(a.grid), sb = shape_of(b.grid);
    std::vector<double> fa(sa.total(), 0.0), fb(sb.total(), 0.0);
    for (auto i : a.cells) fa[i] = 1.0;
    for (auto i : b.cells) fb[i] = 1.0;
    auto conv = fft_convolve(fa, sa, fb, sb);
    std::vector<std::uint64_t> out;
    for (std::uint64_t i = 0; i < conv.size(); ++i)
        if (conv[i] > 0.5) out.push_back(i);
    return GridSet{g, std::move(out)};
}

GridSet dilate_set(const Vec& a, const GridSet& x) {
    std::vector<Vec> pts;
    pts.reserve(x.size());
    for (auto idx : x.cells) pts.push_back(times(a, x.grid.center(idx), x.grid.n));
    return set_from_points(x.grid.n, x.grid.m, pts);
}

GridSet product_set(const GridSet& a, const GridSet& x) {
    if (a.grid.n != x.grid.n || a.grid.m != x.grid.m) throw domain_error("product_set grids differ");
    const int n = a.grid.n;
    if (a.empty() || x.empty()) return set_from_points(n, a.grid.m, {});
    check_budget(a.size() * x.size(), "product_set pairs");
    auto pa = a.points(), px = x.points();
    Vec mn{}, mx{};
    for (int i = 0; i < n; ++i) {
        double amin = pa[0][i], amax = amin, xmin = px[0][i], xmax = xmin;
        for (const auto& p : pa) {
            amin = std::min(amin, p[i]);
            amax = std::max(amax, p[i]);
        }
        for (const auto& p : px) {
            xmin = std::min(xmin, p[i]);
            xmax = std::max(xmax, p[i]);
        }
        const double c[4] = {amin * xmin, amin * xmax, amax * xmin, amax * xmax};
        mn[i] = *std::min_element(c, c + 4);
        mx[i] = *std::max_element(c, c + 4);
    }
    auto g = DyadicGrid::covering(n, a.grid.m, mn, mx);
    std::vector<std::uint8_t> mark(g.cell_count(), 0);
    for (const auto& p : pa)
        for (const auto& q : px) mark[g.index(g.nearest(times(p, q, n)))] = 1;
    return GridSet{g, from_marks(mark)};
}

double ruzsa_distance(const GridSet& a, const GridSet& b) {
    if (a.empty() || b.empty()) throw domain_error("ruzsa_distance of an empty set");
    const double nab = static_cast<double>(n_delta(sumset(a, b, Sign::minus)));
    return 0.5 * std::log(nab * nab / (static_cast<double>(n_delta(a)) * static_cast<double>(n_delta(b))));
}

double doubling_constant(const GridSet& a) {
    if (a.empty()) throw domain_error("doubling_constant of an empty set");
    return static_cast<double>(n_delta(sumset(a, a))) / static_cast<double>(n_delta(a));
}

EnergyEstimate additive_energy_grid(const GridSet& a, const GridSet& b, std::uint64_t pair_cap) {
    if (a.grid.n != b.grid.n || a.grid.m != b.grid.m) throw domain_error("energy grids differ");
    EnergyEstimate est;
    if (a.empty() || b.empty()) {
        est.pair_count = 0.0;
        return est;
    }
    const double d = a.grid.delta();
    // On the lattice, delta^{-3n} ||f * g||^2 reduces to the squared discrete convolution.
    auto na = neighborhood(a, d), nb = neighborhood(b, d);
    auto sa = shape_of(na.grid), sb = shape_of(nb.grid);
    std::vector<double> fa(sa.total(), 0.0), fb(sb.total(), 0.0);
    for (auto i : na.cells) fa[i] = 1.0;
    for (auto i : nb.cells) fb[i] = 1.0;
    auto conv = fft_convolve(fa, sa, fb, sb);
    double e = 0;
    for (double v : conv) {
        const double r = std::round(v);
        e += r * r;
    }
    est.fft_estimate = e;

    auto ta = separated_subset(a, d), tb = separated_subset(b, d);
    if (ta.size() * tb.size() <= pair_cap) {
        auto g = sum_grid(ta.grid, tb.grid);
        std::unordered_map<std::uint64_t, std::uint64_t> rep;
        for (auto ia : ta.cells)
            for (auto ib : tb.cells) {
                IVec ca = ta.grid.coords(ia), cb = tb.grid.coords(ib);
                for (int i = 0; i < g.n; ++i) ca[i] += cb[i];
                ++rep[g.index(ca)];
            }
        double pc = 0;
        for (const auto& kv : rep) pc += static_cast<double>(kv.second) * static_cast<double>(kv.second);
        est.pair_count = pc;
    }
    return est;
}

double map_energy(const LipschitzMapSpec& phi, const GridSet& c) {
    const double d = c.grid.delta();
    auto sep = separated_subset(c, d);
    const int out_n = phi.out_dim > 0 ? phi.out_dim : c.grid.n;
    const double thr = (1 + 2 * phi.lip_bound) * d;
    std::vector<Vec> img;
    img.reserve(sep.size());
    for (auto idx : sep.cells) img.push_back(phi.map(sep.grid.center(idx)));

    struct H {
        std::size_t operator()(const IVec& v) const {
            std::uint64_t h = 0;
            for (auto x : v) h = splitmix64(h ^ static_cast<std::uint64_t>(x));
            return static_cast<std::size_t>(h);
        }
    };
    std::unordered_map<IVec, std::vector<std::size_t>, H> buckets;
    auto key = [&](const Vec& y) {
        IVec k{};
        for (int i = 0; i < out_n; ++i) k[i] = static_cast<std::int64_t>(std::floor(y[i] / thr));
        return k;
    };
    for (std::size_t i = 0; i < img.size(); ++i) buckets[key(img[i])].push_back(i);
    const double thr2 = thr * thr * (1 + 1e-12);
    double count = 0;
    for (std::size_t i = 0; i < img.size(); ++i) {
        const IVec k = key(img[i]);
        IVec o{};
        for (int a = 0; a < out_n; ++a) o[a] = -1;
        while (true) {
            IVec kk = k;
            for (int a = 0; a < out_n; ++a) kk[a] += o[a];
            auto it = buckets.find(kk);
            if (it != buckets.end())
                for (auto j : it->second) {
                    double d2 = 0;
                    for (int a = 0; a < out_n; ++a) d2 += (img[i][a] - img[j][a]) * (img[i][a] - img[j][a]);
                    if (d2 <= thr2) count += 1;
                }
            int ax = out_n - 1;
            while (ax >= 0 && ++o[ax] > 1) {
                o[ax] = -1;
                --ax;
            }
            if (ax < 0) break;
        }
    }
    return count;
}

std::vector<GridSet> generated_levels(const GridSet& a, const GridSet& x, int s) {
    if (s < 1 || s > 8) throw domain_error("generated_set needs 1 <= s <= 8");
    std::vector<GridSet> level(static_cast<std::size_t>(s) + 1);
    level[1] = set_union(set_union(a, negate(a)), set_union(x, negate(x)));
    for (int t = 2; t <= s; ++t) {
        GridSet cur = level[static_cast<std::size_t>(t) - 1];
        for (int t1 = 1; 2 * t1 <= t; ++t1) {
            const int t2 = t - t1;
            cur = set_union(cur, sumset(level[static_cast<std::size_t>(t1)], level[static_cast<std::size_t>(t2)]));
        }
        cur = set_union(cur, product_set(a, level[static_cast<std::size_t>(t) - 1]));
        level[static_cast<std::size_t>(t)] = std::move(cur);
    }
    return level;
}

GridSet generated_set(const GridSet& a, const GridSet& x, int s) { return generated_levels(a, x, s).back(); }

GoodMembership good_set_membership(const Vec& a, const GridSet& x, double K) {
    GoodMembership g;
    if (x.empty()) throw domain_error("good_set_membership needs a nonempty set");
    const double nx = static_cast<double>(n_delta(x));
    g.ratio = static_cast<double>(n_delta(sumset(x, dilate_set(a, x)))) / nx;
    g.is_good = norm(a, x.grid.n) <= K && g.ratio <= K;
    return g;
}

GrowthReport growth_statistic(const GridSet& a, const GridSet& x, int samples, std::uint64_t seed, int threads) {
    if (a.empty()) throw domain_error("growth_statistic needs a nonempty A");
    if (x.empty()) throw domain_error("growth_statistic needs a nonempty X");
    if (samples < 1) throw domain_error("growth_statistic needs at least one sample");
    GrowthReport r;
    r.n = x.grid.n;
    r.delta = x.grid.delta();
    r.samples = samples;
    r.n_X = n_delta(x);
    r.n_sum = n_delta(sumset(x, x));
    std::vector<std::uint64_t> counts(static_cast<std::size_t>(samples));
    std::vector<Vec> picks(static_cast<std::size_t>(samples));
    parallel_for(counts.size(), threads, [&](std::size_t i) {
        const auto cell = a.cells[counter_hash(seed, i) % a.size()];
        picks[i] = a.grid.center(cell);
        counts[i] = n_delta(sumset(x, dilate_set(picks[i], x)));
    });
    std::size_t best = 0;
    for (std::size_t i = 1; i < counts.size(); ++i)
        if (counts[i] > counts[best]) best = i;
    r.n_best_dilate = counts[best];
    r.witness_a = picks[best];
    r.ratio = static_cast<double>(r.n_sum + r.n_best_dilate) / static_cast<double>(r.n_X);
    r.eps_hat = -std::log(r.ratio) / std::log(r.delta);
    return r;
}

std::string growth_csv_header(int n) {
    std::string h = "delta,n_X,n_sum,n_best_dilate,ratio,eps_hat";
    for (int i = 0; i < n; ++i) h += ",witness_" + std::to_string(i);
    return h;
}

std::string growth_csv_row(const GrowthReport& r) {
    std::string s = fmt_num(r.delta) + "," + std::to_string(r.n_X) + "," + std::to_string(r.n_sum) + "," +
                    std::to_string(r.n_best_dilate) + "," + fmt_num(r.ratio) + "," + fmt_num(r.eps_hat);
    for (int i = 0; i < r.n; ++i) s += "," + fmt_num(r.witness_a[i]);
    return s;
}

}  // namespace sumprod
