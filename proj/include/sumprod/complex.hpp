#pragma once

#include <vector>

#include "sumprod/fourier.hpp"
#include "sumprod/measure.hpp"

namespace sumprod {

// Measures on C are n = 2 grid measures: axis 1 is the real part, axis 2 the imaginary part.

// True when every cell centre satisfies 1/C0 <= |z| <= C0.
bool on_annulus(const GridMeasure& mu, double C0);

// Transform with the pairing Re(xi z) = xi_r z_r - xi_i z_i: the planar transform
// with the second frequency coordinate negated.
FrequencyField complex_fourier(const GridMeasure& mu, double max_freq, int oversample = 2);
cplx complex_transform_at(const GridMeasure& mu, cplx xi);

struct ComplexMultOptions {
    MultPath path = MultPath::automatic;
    Deposit deposit = Deposit::nearest;  // pairwise path
    int angle_bins = 0;                  // 0 matches the angular step to the planar delta
    int log_refine = 1;
};

// 2^ceil(m/2): the budget-matched angle grid.
int coarse_angle_bins(int m);

GridMeasure complex_mult_convolve(const GridMeasure& mu, const GridMeasure& nu, const ComplexMultOptions& opt = {});
GridMeasure complex_power(const GridMeasure& mu, int k, const ComplexMultOptions& opt = {});

// Directions v = (cos t, -sin t) so that <v, z> = Re(e^{it} z).
NonConReport rotational_nonconcentration(const GridMeasure& mu, const std::vector<double>& rhos, int theta_count);

double distance_to_real_axis(const GridSet& a);

// Annulus sup of |mu_k^| with mu_k the k-fold complex product; argmax in the complex pairing.
// strict admits cell centres within half a cell diagonal of 1/2 <= |z| <= 2.
DecayReport complex_decay_sup(const GridMeasure& mu, int k, double delta, bool strict = true);

}  // namespace sumprod
