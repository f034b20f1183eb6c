#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "sumprod/synth.hpp"

using namespace sumprod;

namespace {

MeasureSpec spec(Family f, int n, int m) {
    MeasureSpec s;
    s.family = f;
    s.n = n;
    s.m = m;
    return s;
}

void expect_in_box(const GridMeasure& mu, const MeasureSpec& s) {
    const double tol = mu.grid.delta();
    for (std::size_t k = 0; k < mu.size(); ++k)
        for (int i = 0; i < s.n; ++i) {
            EXPECT_GE(mu.center(k)[i], s.box_lo[i] - tol);
            EXPECT_LE(mu.center(k)[i], s.box_hi[i] + tol);
        }
}

std::map<double, double> marginal(const GridMeasure& mu, int axis) {
    std::map<double, double> out;
    for (std::size_t k = 0; k < mu.size(); ++k) out[mu.center(k)[axis]] += mu.weights[k];
    return out;
}

}  // namespace

TEST(CantorIntervals, MiddleThirds) {
    auto iv = cantor_intervals(1.0 / 3, 2);
    ASSERT_EQ(iv.size(), 4u);
    const double want[4][2] = {{0, 1.0 / 9}, {2.0 / 9, 1.0 / 3}, {2.0 / 3, 7.0 / 9}, {8.0 / 9, 1}};
    for (int i = 0; i < 4; ++i) {
        EXPECT_NEAR(iv[static_cast<std::size_t>(i)].first, want[i][0], 1e-15);
        EXPECT_NEAR(iv[static_cast<std::size_t>(i)].second, want[i][1], 1e-15);
    }
    for (double r : {0.1, 0.25, 0.4}) {
        auto v = cantor_intervals(r, 6);
        EXPECT_EQ(v.size(), 64u);
        for (const auto& [a, b] : v) EXPECT_NEAR(b - a, std::pow(r, 6), 1e-14);
        for (std::size_t i = 1; i < v.size(); ++i) EXPECT_LT(v[i - 1].second, v[i].first);
    }
}

TEST(Synth, FamiliesAreProbabilityMeasuresInTheirBox) {
    std::vector<MeasureSpec> specs;
    specs.push_back(spec(Family::cantor, 1, 10));
    specs.push_back(spec(Family::cantor, 2, 7));
    specs.push_back(spec(Family::uniform, 3, 4));
    auto rnd = spec(Family::random, 2, 7);
    rnd.depth = 4;
    specs.push_back(rnd);
    auto shifted = spec(Family::cantor, 1, 9);
    shifted.box_lo[0] = -2;
    shifted.box_hi[0] = -1;
    specs.push_back(shifted);
    for (const auto& s : specs) {
        auto mu = synth_measure(s);
        EXPECT_NEAR(mu.mass, 1.0, 1e-12) << family_name(s.family);
        expect_in_box(mu, s);
    }
}

TEST(Synth, UniformIsFlatWithHalfWeightEdges) {
    auto mu = synth_measure(spec(Family::uniform, 2, 5));
    double top = 0;
    for (double w : mu.weights) top = std::max(top, w);
    for (std::size_t k = 0; k < mu.size(); ++k) {
        double expect = top;
        for (int i = 0; i < 2; ++i) {
            const double x = mu.center(k)[i];
            if (std::abs(x - 0.5) < 1e-12 || std::abs(x - 1) < 1e-12) expect /= 2;
        }
        EXPECT_NEAR(mu.weights[k], expect, 1e-15);
    }
}

TEST(Synth, AtomsLandOnNearestCells) {
    auto s = spec(Family::atoms, 2, 6);
    s.points = {Vec{0.5, 0.75}, Vec{0.9, 0.6}};
    s.point_weights = {1, 3};
    auto mu = synth_measure(s);
    ASSERT_EQ(mu.size(), 2u);
    EXPECT_NEAR(mu.weights[0] + mu.weights[1], 1, 1e-15);
    for (std::size_t k = 0; k < 2; ++k) {
        const Vec c = mu.center(k);
        const bool first = std::abs(c[0] - 0.5) < mu.grid.delta();
        EXPECT_NEAR(mu.weights[k], first ? 0.25 : 0.75, 1e-15);
    }
    s.point_weights = {1};
    EXPECT_THROW(synth_measure(s), config_error);
}

TEST(Synth, ProductFactorizes) {
    auto s = spec(Family::product, 2, 7);
    s.factors = {spec(Family::cantor, 1, 7), spec(Family::uniform, 1, 7)};
    auto mu = synth_measure(s);
    auto mx = marginal(mu, 0), my = marginal(mu, 1);
    for (std::size_t k = 0; k < mu.size(); ++k)
        EXPECT_NEAR(mu.weights[k], mx[mu.center(k)[0]] * my[mu.center(k)[1]], 1e-14);
    s.factors.pop_back();
    EXPECT_THROW(synth_measure(s), config_error);
}

TEST(Synth, TwoMapIfsIsTheCantorMeasure) {
    auto ifs = spec(Family::ifs, 1, 10);
    ifs.depth = 6;
    ifs.maps = {AffineMap{Vec{1.0 / 3}, Vec{0}}, AffineMap{Vec{1.0 / 3}, Vec{2.0 / 3}}};
    auto c = spec(Family::cantor, 1, 10);
    c.depth = 6;
    EXPECT_LT(total_variation(synth_measure(ifs), synth_measure(c)), 1e-12);
    ifs.maps[0].scale[0] = 1.5;
    EXPECT_THROW(synth_measure(ifs), config_error);
}

TEST(Synth, RandomFamilyIsSeeded) {
    auto s = spec(Family::random, 1, 10);
    s.depth = 6;
    auto a = synth_measure(s), b = synth_measure(s);
    EXPECT_EQ(a.cells, b.cells);
    EXPECT_EQ(a.weights, b.weights);
    s.seed = 2;
    EXPECT_GT(total_variation(a, synth_measure(s)), 0.1);
    s.kappa = 2;
    EXPECT_THROW(synth_measure(s), config_error);
}

TEST(Synth, ComplexCantorSitsInTheAnnulus) {
    auto s = spec(Family::complex_cantor, 2, 8);
    s.ratio = 0.2;
    s.depth = 3;
    auto mu = synth_measure(s);
    EXPECT_NEAR(mu.mass, 1.0, 1e-12);
    const double tol = mu.grid.delta();
    for (std::size_t k = 0; k < mu.size(); ++k) {
        const double r = std::hypot(mu.center(k)[0], mu.center(k)[1]);
        EXPECT_GE(r, s.radius_lo - tol);
        EXPECT_LE(r, s.radius_hi + tol);
    }
    s.n = 1;
    EXPECT_THROW(synth_measure(s), config_error);
}

TEST(Synth, Validation) {
    auto s = spec(Family::cantor, 1, 8);
    s.ratio = 0.5;
    EXPECT_THROW(synth_measure(s), config_error);
    s = spec(Family::cantor, 5, 8);
    EXPECT_THROW(synth_measure(s), config_error);
    s = spec(Family::uniform, 1, 8);
    s.box_hi[0] = s.box_lo[0];
    EXPECT_THROW(synth_measure(s), config_error);
}

TEST(Synth, FamilyNamesRoundTrip) {
    for (auto f : {Family::cantor, Family::product, Family::ifs, Family::uniform, Family::atoms, Family::random,
                   Family::complex_cantor})
        EXPECT_EQ(parse_family(family_name(f)), f);
    EXPECT_THROW(parse_family("gaussian"), config_error);
}
