#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <map>
#include <numbers>

#include "helpers.hpp"
#include "sumprod/fourier.hpp"
#include "sumprod/measure.hpp"
#include "sumprod/synth.hpp"

using namespace sumprod;
using testutil::random_measure;
using testutil::unit_box;

namespace {

using Weights = std::map<IVec, double>;

// Weights keyed by global lattice coordinates, so grids with different boxes compare directly.
Weights by_lattice(const GridMeasure& mu) {
    Weights out;
    for (std::size_t k = 0; k < mu.size(); ++k) {
        IVec c = mu.grid.coords(mu.cells[k]);
        for (int i = 0; i < mu.grid.n; ++i) c[i] += mu.grid.origin(i);
        out[c] += mu.weights[k];
    }
    return out;
}

void expect_same_weights(const GridMeasure& a, const GridMeasure& b, double tol) {
    auto wa = by_lattice(a), wb = by_lattice(b);
    for (const auto& [c, w] : wa) EXPECT_NEAR(w, wb.count(c) ? wb[c] : 0.0, tol);
    for (const auto& [c, w] : wb) EXPECT_NEAR(w, wa.count(c) ? wa[c] : 0.0, tol);
}

GridMeasure uniform1(double a, double b, int m) {
    return uniform_on(full_set(DyadicGrid::covering(1, m, {a}, {b})));
}

GridMeasure cantor(int m, int depth) {
    MeasureSpec s;
    s.m = m;
    s.depth = depth;
    return synth_measure(s);
}

// Middle-thirds Cantor function from 40 ternary digits.
double cantor_cdf(double x) {
    if (x <= 0) return 0;
    if (x >= 1) return 1;
    double f = 0, scale = 0.5;
    for (int d = 0; d < 40; ++d) {
        x *= 3;
        const int digit = static_cast<int>(std::floor(x));
        x -= digit;
        if (digit == 1) return f + scale;
        if (digit == 2) f += scale;
        scale /= 2;
    }
    return f;
}

// sup_a mu[a, a + 2 rho] for the Cantor measure placed on [1/2, 1]; windows start at interval endpoints.
double cantor_window_sup(double rho) {
    double best = 0;
    const int depth = 14;
    for (std::uint64_t k = 0; k < (1ULL << depth); ++k) {
        double t = 0, len = 1;
        for (int d = depth - 1; d >= 0; --d) {
            len /= 3;
            if ((k >> d) & 1) t += 2 * len;
        }
        best = std::max(best, cantor_cdf(t + 4 * rho) - cantor_cdf(t));
    }
    return best;
}

double slope(const std::vector<double>& x, const std::vector<double>& y) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(x.size());
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxy / sxx;
}

}  // namespace

TEST(GridMeasure, MakeMergesAndValidates) {
    auto g = unit_box(1, 3);
    auto mu = make_measure(g, {5, 2, 5, 7}, {0.25, 0.25, 0.25, 0});
    EXPECT_EQ(mu.cells, (std::vector<std::uint64_t>{2, 5}));
    EXPECT_DOUBLE_EQ(mu.weights[1], 0.5);
    EXPECT_DOUBLE_EQ(mu.mass, 0.75);
    EXPECT_THROW(make_measure(g, {1}, {-0.1}), domain_error);
    EXPECT_THROW(make_measure(g, {1, 2}, {0.7, 0.7}), domain_error);
    EXPECT_THROW(make_measure(g, {8}, {0.1}), domain_error);
}

TEST(GridMeasure, TotalVariationReflectMix) {
    auto g = unit_box(1, 3);
    auto a = make_measure(g, {1, 2}, {0.5, 0.5}), b = make_measure(g, {2, 3}, {0.25, 0.75});
    EXPECT_DOUBLE_EQ(total_variation(a, b), 0.75);
    EXPECT_DOUBLE_EQ(total_variation(a, a), 0.0);
    auto r = reflect(a);
    auto pts = r.center(0)[0];
    EXPECT_DOUBLE_EQ(pts, -0.25);
    expect_same_weights(reflect(r), a, 0);
    auto m = mix(a, b, 0.5);
    EXPECT_DOUBLE_EQ(m.mass, 1.0);
    EXPECT_DOUBLE_EQ(total_variation(m, a), 0.375);
}

TEST(Smooth, PointMassIsBallDensity) {
    auto pm = point_mass(1, 10, Vec{0.5});
    const double d = pm.grid.delta();
    for (int k : {1, 4, 16}) {
        auto f = smooth(pm, k * d);
        EXPECT_NEAR(f.mass(), 1.0, 1e-12);
        const double expected = 1 / ((2 * k + 1) * d);
        for (double v : f.values)
            if (v > 0) EXPECT_NEAR(v, expected, 1e-9 * expected);
        EXPECT_NEAR(f.l2sq(), expected, 1e-9 * expected);
        EXPECT_NEAR(f.l2sq() * 2 * k * d, 1.0, 1.0 / (2 * k + 1) + 1e-12);
    }
    EXPECT_THROW(smooth(pm, d / 2), domain_error);
}

TEST(Smooth, MassPreservedOnRandomMeasures) {
    for (std::uint64_t s = 0; s < 10; ++s) {
        const int n = 1 + static_cast<int>(s % 3);
        auto g = unit_box(n, n == 3 ? 4 : 6);
        auto mu = random_measure(g, 30, s);
        auto f = smooth(mu, 3 * g.delta());
        EXPECT_NEAR(f.mass(), mu.mass, 1e-6 * mu.mass);
    }
}

TEST(Smooth, ScaleRobustness) {
    for (std::uint64_t s = 0; s < 5; ++s) {
        auto mu = random_measure(unit_box(1, 9), 60, s);
        const double d = 2 * mu.grid.delta();
        const double base = std::sqrt(smooth(mu, d).l2sq());
        for (int a : {2, 3, 4}) EXPECT_LE(std::sqrt(smooth(mu, a * d).l2sq()), a * base);
    }
}

TEST(AdditiveConvolve, PointMassesAdd) {
    auto a = point_mass(2, 6, Vec{0.25, 0.5}), b = point_mass(2, 6, Vec{0.125, -0.25});
    auto c = additive_convolve(a, b);
    ASSERT_EQ(c.size(), 1u);
    EXPECT_DOUBLE_EQ(c.center(0)[0], 0.375);
    EXPECT_DOUBLE_EQ(c.center(0)[1], 0.25);
    auto dmin = additive_convolve(a, b, Sign::minus);
    EXPECT_DOUBLE_EQ(dmin.center(0)[0], 0.125);
    EXPECT_DOUBLE_EQ(dmin.center(0)[1], 0.75);
}

TEST(AdditiveConvolve, UniformTriangle) {
    const int m = 8;
    auto u = uniform1(0, 1 - std::ldexp(1.0, -m), m);
    auto t = additive_convolve(u, u);
    const double N = static_cast<double>(u.size());
    for (std::size_t k = 0; k < t.size(); ++k) {
        const double j = std::round(std::ldexp(t.center(k)[0], m));
        const double count = std::min(j + 1, 2 * N - 1 - j);
        EXPECT_NEAR(t.weights[k], count / (N * N), 1e-12);
    }
}

TEST(AdditiveConvolve, DirectAndFftMatchBrutePairs) {
    for (int size : {200, 2100}) {
        const int m = 12;
        auto g = DyadicGrid::make(1, m, {0}, {std::ldexp(static_cast<double>(size), -m)});
        auto mu = random_measure(g, static_cast<std::size_t>(size) * 4, 3);
        auto nu = random_measure(g, static_cast<std::size_t>(size) * 4, 4);
        Weights brute;
        for (std::size_t i = 0; i < mu.size(); ++i)
            for (std::size_t j = 0; j < nu.size(); ++j) {
                IVec c{};
                c[0] = static_cast<std::int64_t>(mu.cells[i] + nu.cells[j]);
                brute[c] += mu.weights[i] * nu.weights[j];
            }
        auto got = by_lattice(additive_convolve(mu, nu));
        double err = 0;
        for (const auto& [c, w] : brute) err = std::max(err, std::abs(w - (got.count(c) ? got[c] : 0.0)));
        EXPECT_LT(err, 1e-12) << size;
    }
}

TEST(AdditiveConvolve, TransformIsProduct) {
    for (std::uint64_t s = 0; s < 10; ++s) {
        const int n = 1 + static_cast<int>(s % 2);
        auto g = unit_box(n, 5);
        auto mu = random_measure(g, 20, s), nu = random_measure(g, 25, s + 40);
        auto c = additive_convolve(mu, nu);
        EXPECT_NEAR(c.mass, mu.mass * nu.mass, 1e-12);
        for (int t = 0; t < 5; ++t) {
            Vec xi{};
            for (int i = 0; i < n; ++i) xi[i] = -20 + 40 * counter_uniform(s, static_cast<std::uint64_t>(10 * t + i));
            const auto lhs = transform_at(c, xi), rhs = transform_at(mu, xi) * transform_at(nu, xi);
            EXPECT_LE(std::abs(lhs - rhs), 1e-8 * std::max(1e-3, std::abs(rhs)));
        }
    }
}

TEST(Symmetrize, PointMassAndPositivity) {
    auto pm = point_mass(1, 6, Vec{0.75});
    auto s = symmetrize(pm, 1);
    ASSERT_EQ(s.size(), 1u);
    EXPECT_DOUBLE_EQ(s.center(0)[0], 0.0);
    auto mu = random_measure(unit_box(1, 7), 30, 5);
    auto f = fourier_transform(symmetrize(mu, 2), 64);
    double mn = HUGE_VAL;
    for (const auto& v : f.values) {
        mn = std::min(mn, v.real());
        EXPECT_LT(std::abs(v.imag()), 1e-8);
    }
    EXPECT_GE(mn, -1e-8);
    EXPECT_THROW(symmetrize(mu, 5), domain_error);
}

TEST(Symmetrize, UniformMatchesDirichletPower) {
    const int m = 7;
    auto u = uniform1(0.5, 1, m);
    const double N = static_cast<double>(u.size()), d = u.grid.delta();
    auto s2 = symmetrize(u, 2);
    for (double xi : {0.3, 1.7, 5.25, 11.0, 40.5}) {
        const double D = std::sin(std::numbers::pi * xi * N * d) / (N * std::sin(std::numbers::pi * xi * d));
        const auto v = transform_at(s2, Vec{xi});
        EXPECT_NEAR(v.real(), std::pow(D, 4), 1e-6 * std::max(1e-6, std::pow(D, 4)) + 1e-12);
        EXPECT_NEAR(v.imag(), 0, 1e-10);
    }
}

TEST(MultiplicativeConvolve, IdentityAndPushforward) {
    auto mu = random_measure(DyadicGrid::make(1, 8, {0.5}, {1}), 40, 2);
    auto id = point_mass(1, 8, Vec{1});
    expect_same_weights(multiplicative_convolve(id, mu, {MultPath::pairwise}), mu, 1e-15);
    auto y = point_mass(1, 8, Vec{0.75});
    expect_same_weights(multiplicative_convolve(y, mu, {MultPath::pairwise}), pushforward_mult(Vec{0.75}, mu), 1e-15);
}

TEST(MultiplicativeConvolve, FastMatchesPairwiseOnCantor) {
    auto mu = cantor(10, 5);
    auto fast = multiplicative_convolve(mu, mu, {MultPath::fast});
    auto pair = multiplicative_convolve(mu, mu, {MultPath::pairwise, Deposit::linear});
    EXPECT_NEAR(fast.mass, 1.0, 1e-6);
    EXPECT_NEAR(pair.mass, 1.0, 1e-6);
    EXPECT_LE(total_variation(fast, pair), 4 * mu.grid.delta() * 0.75);
}

TEST(MultiplicativeConvolve, FastPathRejectsSignChange) {
    auto g = DyadicGrid::make(1, 6, {-0.5}, {0.5});
    auto mu = random_measure(g, 20, 1);
    EXPECT_THROW(multiplicative_convolve(mu, mu, {MultPath::fast}), mode_error);
    auto auto_path = multiplicative_convolve(mu, mu);
    EXPECT_NEAR(auto_path.mass, mu.mass * mu.mass, 1e-12);
}

TEST(Pushforward, Examples) {
    auto u = uniform1(0.5, 1, 8);
    expect_same_weights(pushforward_mult(Vec{1}, u), u, 0);
    auto p = pushforward_mult(Vec{2}, u);
    EXPECT_DOUBLE_EQ(p.mass, u.mass);
    EXPECT_GE(p.center(0)[0], 1.0 - 1e-12);
    EXPECT_LE(p.center(p.size() - 1)[0], 2.0 + 1e-12);
    auto sup_density = [](const GridMeasure& m) {
        auto f = smooth(m, 4 * m.grid.delta());
        double s = 0;
        for (double v : f.values) s = std::max(s, v);
        return s;
    };
    const double ratio = sup_density(p) / sup_density(u);
    EXPECT_GE(ratio, 0.5 / 2);
    EXPECT_LE(ratio, 0.5 * 2);
    EXPECT_THROW(pushforward_mult(Vec{0}, u), domain_error);
}

TEST(NonConcentration, PointMassAndUniform) {
    std::vector<double> rhos{0.25, 0.125, 0.0625, 0.03125, 0.015625};
    auto pm = projective_nonconcentration(point_mass(1, 10, Vec{0.75}), rhos, 2);
    for (double v : pm.sup_mass) EXPECT_DOUBLE_EQ(v, 1.0);
    EXPECT_NEAR(pm.kappa_hat, 0.0, 1e-12);
    auto u = uniform1(0.5, 1, 10);
    auto r = projective_nonconcentration(u, rhos, 2);
    for (std::size_t i = 0; i < rhos.size(); ++i) EXPECT_NEAR(r.sup_mass[i], std::min(4 * rhos[i], 1.0), 0.01);
    EXPECT_NEAR(r.kappa_hat, 1.0, 0.05);
}

TEST(NonConcentration, CantorAgainstSelfSimilarOracle) {
    auto mu = cantor(12, 8);
    std::vector<double> rhos, lr, lo;
    for (int j = 2; j <= 8; ++j) rhos.push_back(std::ldexp(1.0, -j));
    auto r = projective_nonconcentration(mu, rhos, 2);
    for (std::size_t i = 0; i < rhos.size(); ++i) {
        const double oracle = cantor_window_sup(rhos[i]);
        EXPECT_LE(r.sup_mass[i], 1.5 * oracle);
        EXPECT_GE(r.sup_mass[i], oracle / 1.5);
        lr.push_back(std::log(rhos[i]));
        lo.push_back(std::log(oracle));
    }
    const double oracle_kappa = slope(lr, lo);
    EXPECT_NEAR(oracle_kappa, std::log(2.0) / std::log(3.0), 0.05);
    EXPECT_NEAR(r.kappa_hat, std::log(2.0) / std::log(3.0), 0.05);
}

TEST(NonConcentration, WitnessesReproduceTable) {
    auto mu = random_measure(unit_box(2, 6), 80, 3);
    std::vector<double> rhos{0.25, 0.1, 0.05};
    auto r = projective_nonconcentration(mu, rhos, 8);
    for (std::size_t i = 0; i < rhos.size(); ++i)
        EXPECT_NEAR(window_mass(mu, r.worst_direction[i], r.worst_offset[i], rhos[i], r.bin_width), r.sup_mass[i], 1e-9);
    EXPECT_GT(r.net_slack, 0);
    EXPECT_THROW(projective_nonconcentration(mu, rhos, 3), domain_error);
}

TEST(NonConcentration, DirectionNets) {
    for (int n = 2; n <= 4; ++n) {
        auto dirs = direction_net(n, 24);
        for (int i = 0; i < n; ++i) {
            bool found = false;
            for (const auto& v : dirs) found |= std::abs(v[static_cast<std::size_t>(i)] - 1) < 1e-12;
            EXPECT_TRUE(found) << n << " " << i;
        }
        for (const auto& v : dirs) EXPECT_NEAR(norm(v, n), 1.0, 1e-12);
    }
}

TEST(NonConcentration, HeredityUnderConvolution) {
    for (std::uint64_t s = 0; s < 10; ++s) {
        auto g = unit_box(1, 8);
        auto m = random_measure(g, 40, s), m2 = random_measure(g, 40, s + 100);
        std::vector<double> rhos{0.2, 0.1, 0.05, 0.02};
        auto a = projective_nonconcentration(m, rhos, 2);
        auto b = projective_nonconcentration(additive_convolve(m, m2), rhos, 2);
        for (std::size_t i = 0; i < rhos.size(); ++i)
            EXPECT_LE(b.sup_mass[i], a.sup_mass[i] * (1 + a.bin_width / rhos[i]) + 1e-12);
    }
}

TEST(Subalgebra, Examples) {
    auto diag = set_from_points(2, 6, {Vec{0.5, 0.5}, Vec{0.75, 0.75}});
    EXPECT_DOUBLE_EQ(subalgebra_distance(diag).headline, 0.0);
    auto p = set_from_points(2, 6, {Vec{0.5, 1}});
    EXPECT_NEAR(subalgebra_distance(p).headline, 0.5 / std::sqrt(2.0), 1e-12);
    auto pts = std::vector<Vec>{};
    const double r = 0.25;
    auto g = DyadicGrid::covering(3, 5, {1 - r, 1 - r, 1 - r}, {1 + r, 1 + r, 1 + r});
    double best = 0;
    for (std::uint64_t i = 0; i < g.cell_count(); ++i) {
        Vec x = g.center(i);
        if (std::hypot(x[0] - 1, x[1] - 1, x[2] - 1) <= r) {
            pts.push_back(x);
            best = std::max(best, std::abs(x[0] - x[1]) / std::sqrt(2.0));
        }
    }
    auto rep = subalgebra_distance(set_from_points(3, 5, pts));
    EXPECT_EQ(rep.pairs.size(), 3u);
    EXPECT_NEAR(rep.headline, best, 1e-12);
    EXPECT_THROW(subalgebra_distance(set_from_points(1, 5, {Vec{0.5}})), domain_error);
}

TEST(DyadicDecompose, UniformAndPointMass) {
    const int m = 9;
    auto u = uniform1(0, 1, m);
    const double d = 4 * u.grid.delta();
    auto lv = dyadic_decompose(u, d);
    ASSERT_FALSE(lv.level.empty());
    EXPECT_EQ(lv.level.back(), 0);
    for (int l : lv.level) EXPECT_LE(l, 0);

    auto pm = point_mass(1, m, Vec{0.5});
    auto lp = dyadic_decompose(pm, d);
    const double v = 1 / ((2 * 8 + 1) * pm.grid.delta());
    ASSERT_EQ(lp.level.size(), 1u);
    EXPECT_LT(std::ldexp(1.0, lp.level[0] - 1), v);
    EXPECT_GE(std::ldexp(1.0, lp.level[0]), v);
    EXPECT_NEAR(lp.level[0], std::log2(1 / (4 * d)), 1.0);
}

TEST(DyadicDecompose, SandwichAndLevelCap) {
    for (std::uint64_t s = 0; s < 8; ++s) {
        const int n = 1 + static_cast<int>(s % 2);
        auto g = unit_box(n, n == 1 ? 9 : 6);
        auto mu = random_measure(g, 40, s);
        const double d = 2 * g.delta();
        auto lv = dyadic_decompose(mu, d);
        auto c = dyadic_sandwich(mu, lv);
        EXPECT_LE(c.upper, 32);
        EXPECT_LE(c.lower, 32);
        EXPECT_LE(static_cast<double>(lv.level.back()), 2 * n * std::log2(1 / d) + 2);
    }
}

TEST(Flattening, PointMassRatioIsExact) {
    auto pm = point_mass(1, 8, Vec{1});
    auto r = flattening_integral(pm, pm.grid.delta(), 16, 1);
    EXPECT_TRUE(r.degenerate);
    EXPECT_NEAR(r.ratio, 19.0 / 27.0, 1e-12);
    auto wide = flattening_integral(pm, 32 * pm.grid.delta(), 16, 1);
    EXPECT_NEAR(wide.ratio, 2.0 / 3.0, 0.01);
}

TEST(Flattening, UniformHasNoPowerGain) {
    double prev = HUGE_VAL;
    for (int m : {8, 10}) {
        auto u = uniform1(0.5, 1, m);
        auto r = flattening_integral(mix(u, reflect(u), 0.5), u.grid.delta(), 16, 3);
        EXPECT_LT(r.ratio, 1.0);
        EXPECT_GT(r.ratio, 0.0);
        EXPECT_LT(r.eps_hat, prev);
        EXPECT_GT(r.space_to_freq, 0.25);
        EXPECT_LT(r.space_to_freq, 4.0);
        prev = r.eps_hat;
    }
}

TEST(Flattening, DeterministicAcrossThreads) {
    auto mu = cantor(8, 5);
    auto nu = mix(mu, reflect(mu), 0.5);
    auto a = flattening_integral(nu, nu.grid.delta(), 16, 9, 1);
    auto b = flattening_integral(nu, nu.grid.delta(), 16, 9, 4);
    EXPECT_EQ(flattening_csv_row(a), flattening_csv_row(b));
    EXPECT_THROW(flattening_integral(nu, nu.grid.delta(), 8, 9), domain_error);
}

TEST(Nonconc, ParameterConversion) {
    auto a = convert_nonconc_params({NonconcForm::two, 0.5, 0.1});
    EXPECT_EQ(a.form, NonconcForm::one);
    EXPECT_DOUBLE_EQ(a.kappa, 0.5);
    EXPECT_DOUBLE_EQ(a.eps, 0.1);
    auto b = convert_nonconc_params({NonconcForm::one, 0.4, 0.1});
    EXPECT_EQ(b.form, NonconcForm::two);
    EXPECT_DOUBLE_EQ(b.kappa, 0.2);
    EXPECT_DOUBLE_EQ(b.eps, 0.5);
    EXPECT_DOUBLE_EQ(convert_nonconc_params({NonconcForm::two, 1.5, 0.1}).kappa, 1.0);
    EXPECT_THROW(convert_nonconc_params({NonconcForm::one, 0.2, 0.1}), domain_error);
}

TEST(Measure, InverseChebyshev) {
    for (std::uint64_t s = 0; s < 100; ++s) {
        auto mu = normalized(random_measure(unit_box(1, 8), 30, s));
        const double K = 1.5 + 4 * counter_uniform(s, 99);
        std::vector<double> f(mu.size());
        double mean = 0;
        for (std::size_t k = 0; k < f.size(); ++k) {
            f[k] = std::pow(counter_uniform(s, k), 3);
            mean += f[k] * mu.weights[k];
        }
        double cap = 0;
        for (auto& v : f) cap = std::max(cap, v);
        const double scale = std::min(1.0, K * mean / cap);
        mean = 0;
        for (std::size_t k = 0; k < f.size(); ++k) mean += (f[k] *= scale) * mu.weights[k];
        double big = 0;
        for (std::size_t k = 0; k < f.size(); ++k)
            if (f[k] >= mean / 2) big += mu.weights[k];
        EXPECT_GE(big, 1 / (2 * K));
    }
}

TEST(Measure, DeterminantMassBound) {
    auto u = uniform_on(full_set(unit_box(2, 6)));
    for (double rho : {0.25, 0.125, 0.0625}) {
        auto r = projective_nonconcentration(u, {rho}, 8);
        EXPECT_LE(det_mass_below(u, rho * rho), 2 * r.sup_mass[0]);
    }
}
