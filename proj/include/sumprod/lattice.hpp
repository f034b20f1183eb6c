#pragma once

#include <cstdint>
#include <vector>

#include "sumprod/common.hpp"

namespace sumprod {

// Finite point set in Z^n, kept sorted and duplicate free.
struct LatticeSet {
    int n = 1;
    std::vector<IVec> points;

    std::size_t size() const { return points.size(); }
    bool contains(const IVec& p) const;
};

LatticeSet make_lattice(int n, std::vector<IVec> pts);
LatticeSet lattice_range(std::int64_t lo, std::int64_t hi);  // {lo, ..., hi-1} in Z
// Up to `count` points drawn from [0, span)^n; the draw depends only on (seed, stream).
LatticeSet random_lattice(int n, std::size_t count, std::int64_t span, std::uint64_t seed, std::uint64_t stream);

constexpr std::uint64_t kSumsetPairCap = 10'000'000'000ULL;
constexpr std::size_t kSumsetSizeCap = 100'000;
constexpr std::size_t kBsgExhaustiveCap = 14;
constexpr std::size_t kBsgHeuristicCap = 200;

LatticeSet exact_sumset(const LatticeSet& a, const LatticeSet& b, Sign s = Sign::plus);
// kA - lA
LatticeSet iterated_sumset(const LatticeSet& a, int k, int l);

// sum over s of r(s)^2 where r(s) = #{(a,b) : a+b = s}
std::uint64_t energy_via_convolution(const LatticeSet& a, const LatticeSet& b);
// #{(a,b,a',b') : a+b = a'+b'} by walking (a,b,a') and testing b' = a+b-a'
std::uint64_t energy_via_enumeration(const LatticeSet& a, const LatticeSet& b);
// Convolution route; cross-checked against enumeration when |A||B| <= 10^4.
std::uint64_t exact_energy(const LatticeSet& a, const LatticeSet& b);

struct PlunneckeReport {
    double K = 0;
    std::uint64_t lhs = 0;
    double rhs = 0;
    bool pass = false;
};
PlunneckeReport plunnecke_check(const LatticeSet& a, const LatticeSet& b, int k, int l);

struct RuzsaReport {
    std::uint64_t lhs = 0;  // |B| |A-C|
    std::uint64_t rhs = 0;  // |A-B| |B-C|
    bool pass = false;
};
RuzsaReport ruzsa_triangle_check(const LatticeSet& a, const LatticeSet& b, const LatticeSet& c);

struct BsgCertificate {
    LatticeSet a_sub;
    LatticeSet b_sub;
    double doubling = 0;  // |A'+B'| / sqrt(|A'||B'|)
    double frac_a = 0;
    double frac_b = 0;
    bool exhaustive = false;
};
BsgCertificate bsg_search(const LatticeSet& a, const LatticeSet& b, double K);

}  // namespace sumprod
