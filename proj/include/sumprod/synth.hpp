#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sumprod/measure.hpp"

namespace sumprod {

enum class Family { cantor, product, ifs, uniform, atoms, random, complex_cantor };

// x -> scale * x + shift, coordinate-wise, on [0,1]^n
struct AffineMap {
    Vec scale{};
    Vec shift{};
};

struct MeasureSpec {
    Family family = Family::cantor;
    int n = 1;
    int m = 10;
    // Placement box; the construction on [0,1]^n is mapped affinely onto it.
    Vec box_lo{0.5, 0.5, 0.5, 0.5};
    Vec box_hi{1, 1, 1, 1};

    double ratio = 1.0 / 3;  // cantor, complex_cantor
    int depth = 8;           // cantor, ifs, random, complex_cantor
    std::vector<MeasureSpec> factors;  // product: one n=1 spec per axis
    std::vector<AffineMap> maps;       // ifs
    std::vector<double> map_weights;   // ifs; empty means equal
    std::vector<Vec> points;           // atoms, absolute coordinates
    std::vector<double> point_weights; // atoms; empty means equal
    double kappa = 0.5;                // random: target dimension
    std::uint64_t seed = 1;            // random
    double radius_lo = 0.5;            // complex_cantor annulus
    double radius_hi = 1.0;
};

std::string family_name(Family f);
Family parse_family(const std::string& s);

GridMeasure synth_measure(const MeasureSpec& spec);

// 1D Cantor construction on [0,1]: 2^depth closed intervals of length ratio^depth.
std::vector<std::pair<double, double>> cantor_intervals(double ratio, int depth);

}  // namespace sumprod
