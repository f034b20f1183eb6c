#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sumprod/grid.hpp"

namespace sumprod {

// N_delta at the set's own grid scale.
std::uint64_t n_delta(const GridSet& s);

// Cell-index sums: node a + node b lands exactly on node a+b.
GridSet sumset(const GridSet& a, const GridSet& b, Sign s = Sign::plus);
// {a x : x in X} with coordinate-wise products, rebinned to the nearest node.
GridSet dilate_set(const Vec& a, const GridSet& x);
// {a x : a in A, x in X}
GridSet product_set(const GridSet& a, const GridSet& x);

double ruzsa_distance(const GridSet& a, const GridSet& b);
double doubling_constant(const GridSet& a);

struct EnergyEstimate {
    double fft_estimate = 0;            // delta^{-3n} ||1_{A^(delta)} * 1_{B^(delta)}||_2^2
    std::optional<double> pair_count;   // quadruples of delta-separated points with equal sums
};
EnergyEstimate additive_energy_grid(const GridSet& a, const GridSet& b, std::uint64_t pair_cap = 1'000'000);

// Pairs (a, a') of a delta-separated subset of C with |phi(a) - phi(a')| <= (1+2K) delta.
double map_energy(const LipschitzMapSpec& phi, const GridSet& c);

// Level s of the expression DP: sums of levels t1 + t2 <= s, products A * level(s-1).
GridSet generated_set(const GridSet& a, const GridSet& x, int s);
std::vector<GridSet> generated_levels(const GridSet& a, const GridSet& x, int s);

struct GoodMembership {
    bool is_good = false;
    double ratio = 0;  // N(X + aX) / N(X)
};
GoodMembership good_set_membership(const Vec& a, const GridSet& x, double K);

struct GrowthReport {
    int n = 1;
    double delta = 0;
    std::uint64_t n_X = 0;
    std::uint64_t n_sum = 0;
    std::uint64_t n_best_dilate = 0;
    Vec witness_a{};
    double ratio = 0;
    double eps_hat = 0;
    int samples = 0;
};
// sup over a in A is a max over `samples` cells drawn from A with the seed.
GrowthReport growth_statistic(const GridSet& a, const GridSet& x, int samples, std::uint64_t seed, int threads = 1);
std::string growth_csv_header(int n);
std::string growth_csv_row(const GrowthReport& r);

}  // namespace sumprod
