#include "sumprod/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace sumprod {

namespace {

struct Leaf {
    Vec lo{};
    Vec hi{};
    double mass = 0;
};

// Fraction of [a, b] falling in each lattice cell along one axis of g.
std::vector<std::pair<std::int64_t, double>> axis_shares(const DyadicGrid& g, int axis, double a, double b) {
    const double d = g.delta();
    const double o = static_cast<double>(g.origin(axis));
    std::vector<std::pair<std::int64_t, double>> out;
    if (b - a <= 1e-12 * d) {
        out.emplace_back(static_cast<std::int64_t>(std::floor(0.5 * (a + b) / d + 0.5) - o), 1.0);
        return out;
    }
    const auto first = static_cast<std::int64_t>(std::floor(a / d + 0.5));
    const auto last = static_cast<std::int64_t>(std::floor(b / d + 0.5));
    for (auto c = first; c <= last; ++c) {
        const double lo = std::max(a, (static_cast<double>(c) - 0.5) * d);
        const double hi = std::min(b, (static_cast<double>(c) + 0.5) * d);
        if (hi > lo) out.emplace_back(c - static_cast<std::int64_t>(o), (hi - lo) / (b - a));
    }
    return out;
}

void render(std::vector<double>& acc, const DyadicGrid& g, const Leaf& leaf) {
    std::vector<std::vector<std::pair<std::int64_t, double>>> shares;
    for (int i = 0; i < g.n; ++i) shares.push_back(axis_shares(g, i, leaf.lo[i], leaf.hi[i]));
    std::array<std::size_t, 4> pos{};
    while (true) {
        IVec c{};
        double w = leaf.mass;
        for (int i = 0; i < g.n; ++i) {
            c[i] = shares[static_cast<std::size_t>(i)][pos[static_cast<std::size_t>(i)]].first;
            w *= shares[static_cast<std::size_t>(i)][pos[static_cast<std::size_t>(i)]].second;
        }
        if (!g.in_box(c)) throw domain_error("synthesised support leaves its box");
        acc[g.index(c)] += w;
        int ax = g.n - 1;
        while (ax >= 0) {
            auto& p = pos[static_cast<std::size_t>(ax)];
            if (++p < shares[static_cast<std::size_t>(ax)].size()) break;
            p = 0;
            --ax;
        }
        if (ax < 0) break;
    }
}

GridMeasure finish(const DyadicGrid& g, std::vector<double>& acc) {
    double total = 0;
    for (double v : acc) total += v;
    if (total > 0)
        for (auto& v : acc) v /= total;
    return measure_from_dense(g, acc);
}

// Leaves on [0,1]^n.
std::vector<Leaf> unit_leaves(const MeasureSpec& s);

std::vector<Leaf> cantor_leaves(const MeasureSpec& s) {
    auto iv = cantor_intervals(s.ratio, s.depth);
    std::vector<Leaf> out;
    std::uint64_t count = 1;
    for (int i = 0; i < s.n; ++i) count *= iv.size();
    check_budget(count, "cantor leaves");
    const double w = 1.0 / static_cast<double>(count);
    for (std::uint64_t k = 0; k < count; ++k) {
        Leaf l;
        l.mass = w;
        auto r = k;
        for (int i = s.n - 1; i >= 0; --i) {
            const auto& p = iv[r % iv.size()];
            r /= iv.size();
            l.lo[i] = p.first;
            l.hi[i] = p.second;
        }
        out.push_back(l);
    }
    return out;
}

std::vector<Leaf> ifs_leaves(const MeasureSpec& s) {
    if (s.maps.empty()) throw config_error("ifs needs at least one map");
    std::vector<double> w = s.map_weights;
    if (w.empty()) w.assign(s.maps.size(), 1.0 / static_cast<double>(s.maps.size()));
    if (w.size() != s.maps.size()) throw config_error("ifs weights and maps differ in length");
    double tw = 0;
    for (double x : w) {
        if (!(x > 0)) throw config_error("ifs weights must be positive");
        tw += x;
    }
    for (const auto& f : s.maps)
        for (int i = 0; i < s.n; ++i)
            if (!(std::abs(f.scale[i]) < 1) || f.scale[i] == 0) throw config_error("ifs maps must contract");
    std::vector<Leaf> cur(1);
    for (int i = 0; i < s.n; ++i) cur[0].hi[i] = 1;
    cur[0].mass = 1;
    for (int d = 0; d < s.depth; ++d) {
        check_budget(cur.size() * s.maps.size(), "ifs leaves");
        std::vector<Leaf> next;
        next.reserve(cur.size() * s.maps.size());
        for (const auto& l : cur)
            for (std::size_t j = 0; j < s.maps.size(); ++j) {
                Leaf c;
                c.mass = l.mass * w[j] / tw;
                for (int i = 0; i < s.n; ++i) {
                    const double a = s.maps[j].scale[i] * l.lo[i] + s.maps[j].shift[i];
                    const double b = s.maps[j].scale[i] * l.hi[i] + s.maps[j].shift[i];
                    c.lo[i] = std::min(a, b);
                    c.hi[i] = std::max(a, b);
                    if (c.lo[i] < -1e-12 || c.hi[i] > 1 + 1e-12) throw config_error("ifs maps must keep [0,1]^n invariant");
                }
                next.push_back(c);
            }
        cur = std::move(next);
    }
    return cur;
}

std::vector<Leaf> random_leaves(const MeasureSpec& s) {
    if (!(s.kappa > 0) || s.kappa > s.n) throw config_error("random family needs 0 < kappa <= n");
    const double r = std::pow(2.0, -static_cast<double>(s.n) / s.kappa);
    std::vector<Leaf> cur(1);
    for (int i = 0; i < s.n; ++i) cur[0].hi[i] = 1;
    cur[0].mass = 1;
    std::uint64_t counter = 0;
    for (int d = 0; d < s.depth; ++d) {
        const std::uint64_t kids = 1ULL << s.n;
        check_budget(cur.size() * kids, "random leaves");
        std::vector<Leaf> next;
        next.reserve(cur.size() * kids);
        for (const auto& l : cur) {
            std::array<std::array<double, 2>, 4> off{};
            for (int i = 0; i < s.n; ++i) {
                const double len = l.hi[i] - l.lo[i];
                const double slack = len * (0.5 - r);
                off[i][0] = l.lo[i] + counter_uniform(s.seed, counter++) * slack;
                off[i][1] = l.lo[i] + 0.5 * len + counter_uniform(s.seed, counter++) * slack;
            }
            for (std::uint64_t c = 0; c < kids; ++c) {
                Leaf k;
                k.mass = l.mass / static_cast<double>(kids);
                for (int i = 0; i < s.n; ++i) {
                    k.lo[i] = off[i][(c >> i) & 1];
                    k.hi[i] = k.lo[i] + r * (l.hi[i] - l.lo[i]);
                }
                next.push_back(k);
            }
        }
        cur = std::move(next);
    }
    return cur;
}

std::vector<Leaf> unit_leaves(const MeasureSpec& s) {
    switch (s.family) {
        case Family::cantor:
            return cantor_leaves(s);
        case Family::ifs:
            return ifs_leaves(s);
        case Family::random:
            return random_leaves(s);
        case Family::uniform: {
            Leaf l;
            for (int i = 0; i < s.n; ++i) l.hi[i] = 1;
            l.mass = 1;
            return {l};
        }
        default:
            throw config_error("family has no unit-cube construction");
    }
}

GridMeasure complex_cantor(const MeasureSpec& s) {
    if (s.n != 2) throw config_error("complex-cantor needs n = 2");
    if (!(s.radius_lo > 0) || !(s.radius_hi > s.radius_lo)) throw config_error("complex-cantor needs 0 < radius_lo < radius_hi");
    const Vec lo{-s.radius_hi, -s.radius_hi, 0, 0}, hi{s.radius_hi, s.radius_hi, 0, 0};
    auto g = DyadicGrid::covering(2, s.m, lo, hi);
    const double d = g.delta();
    auto iv = cantor_intervals(s.ratio, s.depth);
    check_budget(iv.size() * iv.size(), "complex-cantor leaves");
    std::vector<double> acc(g.cell_count(), 0.0);
    const double span = s.radius_hi - s.radius_lo;
    const double two_pi = 2 * std::numbers::pi;
    for (const auto& rad : iv) {
        const double r0 = s.radius_lo + span * rad.first, r1 = s.radius_lo + span * rad.second;
        const auto sr = static_cast<int>(std::max(1.0, std::ceil((r1 - r0) / (0.5 * d))));
        for (const auto& ang : iv) {
            const double t0 = two_pi * ang.first, t1 = two_pi * ang.second;
            const auto st = static_cast<int>(std::max(1.0, std::ceil((t1 - t0) * r1 / (0.5 * d))));
            const double w = 1.0 / (static_cast<double>(iv.size()) * static_cast<double>(iv.size()) * sr * st);
            for (int a = 0; a < sr; ++a) {
                const double r = r0 + (r1 - r0) * (a + 0.5) / sr;
                for (int b = 0; b < st; ++b) {
                    const double t = t0 + (t1 - t0) * (b + 0.5) / st;
                    IVec c = g.nearest(Vec{r * std::cos(t), r * std::sin(t), 0, 0});
                    acc[g.index(c)] += w;
                }
            }
        }
    }
    return finish(g, acc);
}

void validate(const MeasureSpec& s) {
    if (s.n < 1 || s.n > kMaxDim) throw config_error("dimension n must be in 1..4");
    if (s.m < 0 || s.m > 40) throw config_error("scale m must be in 0..40");
    if (s.depth < 0 || s.depth > 40) throw config_error("depth must be in 0..40");
    for (int i = 0; i < s.n; ++i)
        if (!(s.box_hi[i] > s.box_lo[i])) throw config_error("placement box needs hi > lo on every axis");
    if ((s.family == Family::cantor || s.family == Family::complex_cantor) && !(s.ratio > 0 && s.ratio < 0.5))
        throw config_error("cantor ratio must lie in (0, 1/2)");
}

}  // namespace

std::string family_name(Family f) {
    switch (f) {
        case Family::cantor:
            return "cantor";
        case Family::product:
            return "product";
        case Family::ifs:
            return "ifs";
        case Family::uniform:
            return "uniform";
        case Family::atoms:
            return "atoms";
        case Family::random:
            return "random";
        case Family::complex_cantor:
            return "complex-cantor";
    }
    return "?";
}

Family parse_family(const std::string& s) {
    for (auto f : {Family::cantor, Family::product, Family::ifs, Family::uniform, Family::atoms, Family::random,
                   Family::complex_cantor})
        if (family_name(f) == s) return f;
    throw config_error("unknown measure family '" + s +
                       "' (expected cantor, product, ifs, uniform, atoms, random or complex-cantor)");
}

std::vector<std::pair<double, double>> cantor_intervals(double ratio, int depth) {
    std::vector<std::pair<double, double>> cur{{0.0, 1.0}};
    for (int d = 0; d < depth; ++d) {
        std::vector<std::pair<double, double>> next;
        next.reserve(cur.size() * 2);
        for (const auto& [a, b] : cur) {
            const double len = (b - a) * ratio;
            next.emplace_back(a, a + len);
            next.emplace_back(b - len, b);
        }
        cur = std::move(next);
    }
    return cur;
}

GridMeasure synth_measure(const MeasureSpec& s) {
    validate(s);
    if (s.family == Family::complex_cantor) return complex_cantor(s);
    if (s.family == Family::atoms) {
        if (s.points.empty()) throw config_error("atoms needs at least one point");
        std::vector<double> w = s.point_weights;
        if (w.empty()) w.assign(s.points.size(), 1.0 / static_cast<double>(s.points.size()));
        if (w.size() != s.points.size()) throw config_error("atom weights and points differ in length");
        Vec mn = s.points[0], mx = s.points[0];
        for (const auto& p : s.points)
            for (int i = 0; i < s.n; ++i) {
                mn[i] = std::min(mn[i], p[i]);
                mx[i] = std::max(mx[i], p[i]);
            }
        auto g = DyadicGrid::covering(s.n, s.m, mn, mx);
        std::vector<double> acc(g.cell_count(), 0.0);
        for (std::size_t k = 0; k < s.points.size(); ++k) {
            if (!(w[k] >= 0)) throw config_error("atom weights must be nonnegative");
            acc[g.index(g.nearest(s.points[k]))] += w[k];
        }
        return finish(g, acc);
    }
    auto g = DyadicGrid::covering(s.n, s.m, s.box_lo, s.box_hi);
    std::vector<double> acc(g.cell_count(), 0.0);
    if (s.family == Family::product) {
        if (static_cast<int>(s.factors.size()) != s.n) throw config_error("product needs one factor per axis");
        std::vector<GridMeasure> parts;
        for (int i = 0; i < s.n; ++i) {
            MeasureSpec f = s.factors[static_cast<std::size_t>(i)];
            if (f.n != 1) throw config_error("product factors must be one-dimensional");
            if (f.family == Family::product || f.family == Family::complex_cantor)
                throw config_error("product factors must be plain 1D families");
            f.m = s.m;
            f.box_lo[0] = s.box_lo[i];
            f.box_hi[0] = s.box_hi[i];
            parts.push_back(synth_measure(f));
        }
        std::array<std::size_t, 4> pos{};
        while (true) {
            Vec x{};
            double w = 1;
            for (int i = 0; i < s.n; ++i) {
                const auto& p = parts[static_cast<std::size_t>(i)];
                x[i] = p.center(pos[static_cast<std::size_t>(i)])[0];
                w *= p.weights[pos[static_cast<std::size_t>(i)]];
            }
            acc[g.index(g.nearest(x))] += w;
            int ax = s.n - 1;
            while (ax >= 0) {
                auto& p = pos[static_cast<std::size_t>(ax)];
                if (++p < parts[static_cast<std::size_t>(ax)].size()) break;
                p = 0;
                --ax;
            }
            if (ax < 0) break;
        }
        return finish(g, acc);
    }
    for (auto leaf : unit_leaves(s)) {
        for (int i = 0; i < s.n; ++i) {
            const double span = s.box_hi[i] - s.box_lo[i];
            leaf.lo[i] = s.box_lo[i] + span * leaf.lo[i];
            leaf.hi[i] = s.box_lo[i] + span * leaf.hi[i];
        }
        render(acc, g, leaf);
    }
    return finish(g, acc);
}

}  // namespace sumprod
