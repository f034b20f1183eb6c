#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sumprod/grid.hpp"

namespace sumprod {

// Nonnegative weight per occupied node; weight is the mass of the node's cell.
struct GridMeasure {
    DyadicGrid grid;
    std::vector<std::uint64_t> cells;  // sorted, unique
    std::vector<double> weights;
    double mass = 0;

    std::size_t size() const { return cells.size(); }
    Vec center(std::size_t k) const { return grid.center(cells[k]); }
    std::vector<double> dense() const;
    // Density view: weight / delta^n.
    double density_l2sq() const;
};

GridMeasure make_measure(const DyadicGrid& g, std::vector<std::uint64_t> cells, std::vector<double> weights);
GridMeasure measure_from_dense(const DyadicGrid& g, const std::vector<double>& dense);
GridMeasure point_mass(int n, int m, const Vec& x);
GridMeasure uniform_on(const GridSet& s);
GridMeasure rebox(const GridMeasure& mu, const DyadicGrid& target);
GridMeasure normalized(const GridMeasure& mu);
GridSet support(const GridMeasure& mu);
// sup |mu(E) - nu(E)| = half the l1 distance of the weights
double total_variation(const GridMeasure& a, const GridMeasure& b);
// mu^-(E) = mu(-E), by index reflection
GridMeasure reflect(const GridMeasure& mu);
// (1-t) a + t b on the merged box
GridMeasure mix(const GridMeasure& a, const GridMeasure& b, double t);

// Dense density sampled on the lattice.
struct DensityField {
    DyadicGrid grid;
    std::vector<double> values;

    double mass() const;
    double l2sq() const;
    double at(const IVec& local) const;
};

// nu * P_{delta1}: the ball kernel sampled on the lattice and normalised to unit mass,
// so mass is preserved exactly; the grid grows by floor(delta1/delta) nodes per side.
DensityField smooth(const GridMeasure& nu, double delta1);
DensityField smooth_on(const GridMeasure& nu, double delta1, const DyadicGrid& target);

GridMeasure additive_convolve(const GridMeasure& mu, const GridMeasure& nu, Sign s = Sign::plus);
GridMeasure convolution_power(const GridMeasure& mu, int r);
// (mu * mu^-)^(r)
GridMeasure symmetrize(const GridMeasure& mu, int r);

enum class MultPath { automatic, fast, pairwise };
enum class Deposit { nearest, linear };

struct MultOptions {
    MultPath path = MultPath::automatic;
    Deposit deposit = Deposit::nearest;  // pairwise path only; the fast path always deposits linearly
    int log_refine = 0;                  // log-grid spacing is delta / (refine * max|product|); 0 picks by dimension
};

GridMeasure multiplicative_convolve(const GridMeasure& mu, const GridMeasure& nu, const MultOptions& opt = {});
GridMeasure pushforward_mult(const Vec& y, const GridMeasure& nu);
double det_mass_below(const GridMeasure& nu, double threshold);

struct NonConReport {
    std::vector<double> scales;
    std::vector<double> sup_mass;
    std::vector<std::vector<double>> per_direction;  // [scale][direction]
    std::vector<Vec> directions;
    std::vector<Vec> worst_direction;
    std::vector<double> worst_offset;
    double bin_width = 0;
    double net_slack = 0;  // diam(supp) * angular step, to be added to every rho
    double kappa_hat = 0;
    double eps_hat = 0;
};

std::vector<Vec> direction_net(int n, int count);
NonConReport nonconcentration_along(const GridMeasure& mu, const std::vector<double>& rhos,
                                    const std::vector<Vec>& directions, double angular_step);
NonConReport projective_nonconcentration(const GridMeasure& mu, const std::vector<double>& rhos, int direction_count);
// Mass of the projection in the histogram window recorded for (v, a).
double window_mass(const GridMeasure& mu, const Vec& v, double a, double rho, double bin_width);

struct SubalgebraPair {
    int i = 0;
    int j = 0;
    double value = 0;  // max over cells of |x^i - x^j| / sqrt 2
};
struct SubalgebraReport {
    std::vector<SubalgebraPair> pairs;
    double headline = 0;  // min over pairs
};
SubalgebraReport subalgebra_distance(const GridSet& a);
SubalgebraReport subalgebra_distance(const GridMeasure& mu);

struct DyadicLevels {
    double delta = 0;
    DyadicGrid grid;
    std::vector<int> level;
    std::vector<GridSet> sets;  // X_i as unions of delta-balls
    std::vector<std::size_t> centers;
};
DyadicLevels dyadic_decompose(const GridMeasure& nu, double delta);

struct SandwichConstants {
    double upper = 0;  // max nu_delta / sum_i 2^i 1_{X_i}
    double lower = 0;  // max sum_{i>0} 2^i 1_{X_i} / nu_{3 delta}
    std::size_t max_overlap = 0;
};
SandwichConstants dyadic_sandwich(const GridMeasure& nu, const DyadicLevels& lv);

struct FlatteningReport {
    double delta1 = 0;
    double lhs = 0;
    double rhs = 0;
    double ratio = 0;
    double eps_hat = 0;
    int sample_count = 0;
    double lhs_stderr = 0;
    double freq_side = 0;      // mean over y of int_{|xi| <= R} |nu^(xi)|^2 |nu^(y xi)|^2
    double freq_radius = 0;
    double space_to_freq = 0;  // lhs / freq_side
    double small_det_mass = 0; // nu{|det y| <= delta1^{n/2}}
    bool degenerate = false;
};
FlatteningReport flattening_integral(const GridMeasure& nu, double delta1, int samples, std::uint64_t seed,
                                     int threads = 1);
std::string flattening_csv_header();
std::string flattening_csv_row(const FlatteningReport& r);

enum class NonconcForm { one = 1, two = 2 };
struct NonconcParams {
    NonconcForm form = NonconcForm::one;
    double kappa = 0;
    double eps = 0;
};
NonconcParams convert_nonconc_params(const NonconcParams& p);

}  // namespace sumprod
