#include "sumprod/lattice.hpp"

#include <algorithm>
#include <bitset>
#include <cmath>
#include <map>

#include "sumprod/fft.hpp"

namespace sumprod {

namespace {

IVec add(const IVec& x, const IVec& y, int n, Sign s) {
    IVec r{};
    for (int i = 0; i < n; ++i) r[i] = s == Sign::plus ? x[i] + y[i] : x[i] - y[i];
    return r;
}

void check_pair_cap(const LatticeSet& a, const LatticeSet& b) {
    if (a.n != b.n) throw domain_error("lattice sets differ in dimension");
    if (a.size() > kSumsetSizeCap || b.size() > kSumsetSizeCap)
        throw domain_error("lattice set exceeds the 10^5 sumset cap");
    if (static_cast<std::uint64_t>(a.size()) * b.size() > kSumsetPairCap)
        throw domain_error("|A||B| exceeds the 10^10 sumset cap");
}

}  // namespace

bool LatticeSet::contains(const IVec& p) const { return std::binary_search(points.begin(), points.end(), p); }

LatticeSet make_lattice(int n, std::vector<IVec> pts) {
    if (n < 1 || n > kMaxDim) throw domain_error("lattice dimension must be in 1..4");
    for (auto& p : pts)
        for (int i = n; i < kMaxDim; ++i) p[i] = 0;
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return LatticeSet{n, std::move(pts)};
}

LatticeSet lattice_range(std::int64_t lo, std::int64_t hi) {
    std::vector<IVec> pts;
    for (auto x = lo; x < hi; ++x) pts.push_back(IVec{x, 0, 0, 0});
    return LatticeSet{1, std::move(pts)};
}

LatticeSet random_lattice(int n, std::size_t count, std::int64_t span, std::uint64_t seed, std::uint64_t stream) {
    if (span < 1) throw domain_error("random_lattice needs span >= 1");
    std::vector<IVec> pts(count);
    std::uint64_t counter = stream << 32;
    for (auto& p : pts)
        for (int i = 0; i < n; ++i)
            p[i] = static_cast<std::int64_t>(counter_uniform(seed, counter++) * static_cast<double>(span));
    return make_lattice(n, std::move(pts));
}

LatticeSet exact_sumset(const LatticeSet& a, const LatticeSet& b, Sign s) {
    check_pair_cap(a, b);
    std::vector<IVec> out;
    out.reserve(a.size() * b.size());
    for (const auto& x : a.points)
        for (const auto& y : b.points) out.push_back(add(x, y, a.n, s));
    return make_lattice(a.n, std::move(out));
}

LatticeSet iterated_sumset(const LatticeSet& a, int k, int l) {
    if (k < 0 || l < 0) throw domain_error("iterated sumset needs k, l >= 0");
    LatticeSet acc = make_lattice(a.n, {IVec{}});
    for (int i = 0; i < k; ++i) acc = exact_sumset(acc, a, Sign::plus);
    for (int i = 0; i < l; ++i) acc = exact_sumset(acc, a, Sign::minus);
    return acc;
}

std::uint64_t energy_via_convolution(const LatticeSet& a, const LatticeSet& b) {
    check_pair_cap(a, b);
    if (a.size() == 0 || b.size() == 0) return 0;
    const int n = a.n;
    IVec amin = a.points.front(), amax = amin, bmin = b.points.front(), bmax = bmin;
    for (const auto& p : a.points)
        for (int i = 0; i < n; ++i) {
            amin[i] = std::min(amin[i], p[i]);
            amax[i] = std::max(amax[i], p[i]);
        }
    for (const auto& p : b.points)
        for (int i = 0; i < n; ++i) {
            bmin[i] = std::min(bmin[i], p[i]);
            bmax[i] = std::max(bmax[i], p[i]);
        }
    Shape sa{n, {1, 1, 1, 1}}, sb{n, {1, 1, 1, 1}};
    double box = 1;
    for (int i = 0; i < n; ++i) {
        sa.d[i] = static_cast<std::size_t>(amax[i] - amin[i] + 1);
        sb.d[i] = static_cast<std::size_t>(bmax[i] - bmin[i] + 1);
        box *= static_cast<double>(fft_size(sa.d[i] + sb.d[i] - 1));
    }

    if (box <= static_cast<double>(1 << 22)) {
        std::vector<double> fa(sa.total(), 0.0), fb(sb.total(), 0.0);
        auto local = [n](const IVec& p, const IVec& mn) {
            std::array<std::size_t, 4> c{};
            for (int i = 0; i < n; ++i) c[i] = static_cast<std::size_t>(p[i] - mn[i]);
            return c;
        };
        for (const auto& p : a.points) fa[sa.index(local(p, amin))] = 1.0;
        for (const auto& p : b.points) fb[sb.index(local(p, bmin))] = 1.0;
        auto conv = fft_convolve(fa, sa, fb, sb);
        std::uint64_t e = 0;
        for (double v : conv) {
            auto r = static_cast<std::uint64_t>(std::llround(v));
            e += r * r;
        }
        return e;
    }

    std::vector<IVec> sums;
    sums.reserve(a.size() * b.size());
    for (const auto& x : a.points)
        for (const auto& y : b.points) sums.push_back(add(x, y, n, Sign::plus));
    std::sort(sums.begin(), sums.end());
    std::uint64_t e = 0;
    for (std::size_t i = 0; i < sums.size();) {
        std::size_t j = i;
        while (j < sums.size() && sums[j] == sums[i]) ++j;
        const auto r = static_cast<std::uint64_t>(j - i);
        e += r * r;
        i = j;
    }
    return e;
}

std::uint64_t energy_via_enumeration(const LatticeSet& a, const LatticeSet& b) {
    check_pair_cap(a, b);
    std::uint64_t e = 0;
    for (const auto& x : a.points)
        for (const auto& y : b.points)
            for (const auto& x2 : a.points) {
                IVec y2{};
                for (int i = 0; i < a.n; ++i) y2[i] = x[i] + y[i] - x2[i];
                if (b.contains(y2)) ++e;
            }
    return e;
}

std::uint64_t exact_energy(const LatticeSet& a, const LatticeSet& b) {
    const auto e = energy_via_convolution(a, b);
    if (static_cast<std::uint64_t>(a.size()) * b.size() <= 10'000) {
        const auto e2 = energy_via_enumeration(a, b);
        if (e != e2)
            throw std::logic_error("energy routes disagree: " + std::to_string(e) + " vs " + std::to_string(e2));
    }
    return e;
}

PlunneckeReport plunnecke_check(const LatticeSet& a, const LatticeSet& b, int k, int l) {
    if (b.size() == 0 || a.size() == 0) throw domain_error("plunnecke_check needs nonempty sets");
    PlunneckeReport r;
    r.K = static_cast<double>(exact_sumset(a, b).size()) / static_cast<double>(b.size());
    r.lhs = iterated_sumset(a, k, l).size();
    r.rhs = std::pow(r.K, k + l) * static_cast<double>(b.size());
    r.pass = static_cast<double>(r.lhs) <= r.rhs * (1 + 1e-12);
    return r;
}

RuzsaReport ruzsa_triangle_check(const LatticeSet& a, const LatticeSet& b, const LatticeSet& c) {
    RuzsaReport r;
    r.lhs = b.size() * exact_sumset(a, c, Sign::minus).size();
    r.rhs = exact_sumset(a, b, Sign::minus).size() * exact_sumset(b, c, Sign::minus).size();
    r.pass = r.lhs <= r.rhs;
    return r;
}

namespace {

LatticeSet pick(const LatticeSet& s, const std::vector<bool>& keep) {
    std::vector<IVec> pts;
    for (std::size_t i = 0; i < s.size(); ++i)
        if (keep[i]) pts.push_back(s.points[i]);
    return LatticeSet{s.n, std::move(pts)};
}

LatticeSet pick_mask(const LatticeSet& s, std::uint32_t mask) {
    std::vector<bool> keep(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) keep[i] = (mask >> i) & 1U;
    return pick(s, keep);
}

BsgCertificate certificate(const LatticeSet& a, const LatticeSet& b, LatticeSet as, LatticeSet bs, bool exhaustive) {
    BsgCertificate c;
    const auto sum = exact_sumset(as, bs).size();
    c.doubling = static_cast<double>(sum) / std::sqrt(static_cast<double>(as.size() * bs.size()));
    c.frac_a = static_cast<double>(as.size()) / static_cast<double>(a.size());
    c.frac_b = static_cast<double>(bs.size()) / static_cast<double>(b.size());
    c.a_sub = std::move(as);
    c.b_sub = std::move(bs);
    c.exhaustive = exhaustive;
    return c;
}

BsgCertificate bsg_exhaustive(const LatticeSet& a, const LatticeSet& b, double K) {
    const std::size_t na = a.size(), nb = b.size();
    using Bits = std::bitset<kBsgExhaustiveCap * kBsgExhaustiveCap>;
    std::map<IVec, std::size_t> ids;
    std::vector<std::vector<std::size_t>> sid(na, std::vector<std::size_t>(nb));
    for (std::size_t i = 0; i < na; ++i)
        for (std::size_t j = 0; j < nb; ++j) {
            auto s = add(a.points[i], b.points[j], a.n, Sign::plus);
            sid[i][j] = ids.emplace(s, ids.size()).first->second;
        }
    const std::uint32_t full_a = (1U << na) - 1, full_b = (1U << nb) - 1;
    // row[i][mb] = {a_i + b : b in mb}
    std::vector<std::vector<Bits>> row(na, std::vector<Bits>(full_b + 1));
    for (std::size_t i = 0; i < na; ++i)
        for (std::uint32_t mb = 1; mb <= full_b; ++mb) {
            const auto low = static_cast<std::size_t>(__builtin_ctz(mb));
            row[i][mb] = row[i][mb & (mb - 1)];
            row[i][mb].set(sid[i][low]);
        }

    const double k3 = K * K * K;
    double best = -1;
    std::size_t best_total = 0;
    std::uint32_t best_a = 1, best_b = 1;
    std::vector<Bits> acc(full_a + 1);
    for (std::uint32_t mb = full_b; mb >= 1; --mb) {
        const int cb = __builtin_popcount(mb);
        const double fb = static_cast<double>(cb) / static_cast<double>(nb);
        if (fb < best) continue;
        for (std::uint32_t ma = 1; ma <= full_a; ++ma) {
            const auto low = static_cast<std::size_t>(__builtin_ctz(ma));
            acc[ma] = acc[ma & (ma - 1)] | row[low][mb];
            const int ca = __builtin_popcount(ma);
            const double obj = std::min(static_cast<double>(ca) / static_cast<double>(na), fb);
            if (obj < best) continue;
            const auto total = static_cast<std::size_t>(ca + cb);
            if (obj == best && total <= best_total) continue;
            if (static_cast<double>(acc[ma].count()) <= k3 * std::sqrt(static_cast<double>(ca * cb)) * (1 + 1e-12)) {
                best = obj;
                best_total = total;
                best_a = ma;
                best_b = mb;
            }
        }
    }
    return certificate(a, b, pick_mask(a, best_a), pick_mask(b, best_b), true);
}

BsgCertificate bsg_greedy(const LatticeSet& a, const LatticeSet& b, double K) {
    std::vector<bool> ka(a.size(), true), kb(b.size(), true);
    std::size_t ca = a.size(), cb = b.size();
    const double k3 = K * K * K;
    while (true) {
        std::map<IVec, std::uint64_t> rep;
        for (std::size_t i = 0; i < a.size(); ++i)
            if (ka[i])
                for (std::size_t j = 0; j < b.size(); ++j)
                    if (kb[j]) ++rep[add(a.points[i], b.points[j], a.n, Sign::plus)];
        if (static_cast<double>(rep.size()) <= k3 * std::sqrt(static_cast<double>(ca * cb)) * (1 + 1e-12)) break;
        const double fa = static_cast<double>(ca) / static_cast<double>(a.size());
        const double fb = static_cast<double>(cb) / static_cast<double>(b.size());
        const bool from_a = (fa > fb || (fa == fb && ca >= cb)) && ca > 1;
        // Popularity degree: how much energy each element carries.
        std::size_t worst = 0;
        std::uint64_t worst_deg = ~std::uint64_t{0};
        if (from_a || cb == 1) {
            for (std::size_t i = 0; i < a.size(); ++i) {
                if (!ka[i]) continue;
                std::uint64_t deg = 0;
                for (std::size_t j = 0; j < b.size(); ++j)
                    if (kb[j]) deg += rep[add(a.points[i], b.points[j], a.n, Sign::plus)];
                if (deg < worst_deg) {
                    worst_deg = deg;
                    worst = i;
                }
            }
            ka[worst] = false;
            --ca;
        } else {
            for (std::size_t j = 0; j < b.size(); ++j) {
                if (!kb[j]) continue;
                std::uint64_t deg = 0;
                for (std::size_t i = 0; i < a.size(); ++i)
                    if (ka[i]) deg += rep[add(a.points[i], b.points[j], a.n, Sign::plus)];
                if (deg < worst_deg) {
                    worst_deg = deg;
                    worst = j;
                }
            }
            kb[worst] = false;
            --cb;
        }
    }
    return certificate(a, b, pick(a, ka), pick(b, kb), false);
}

}  // namespace

BsgCertificate bsg_search(const LatticeSet& a, const LatticeSet& b, double K) {
    if (a.n != b.n) throw domain_error("lattice sets differ in dimension");
    if (a.size() == 0 || b.size() == 0) throw domain_error("bsg_search needs nonempty sets");
    if (!(K >= 1)) throw domain_error("bsg_search needs K >= 1");
    if (a.size() <= kBsgExhaustiveCap && b.size() <= kBsgExhaustiveCap) return bsg_exhaustive(a, b, K);
    if (a.size() <= kBsgHeuristicCap && b.size() <= kBsgHeuristicCap) return bsg_greedy(a, b, K);
    throw domain_error("bsg_search is capped at 200 elements per set");
}

}  // namespace sumprod
