#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sumprod/fft.hpp"
#include "sumprod/measure.hpp"

namespace sumprod {

using cplx = std::complex<double>;

// mu^(xi) = sum_c w_c exp(2 pi i <xi, center(c)>) on the nodes xi = k / (N delta).
// The atomic transform is 1/delta-periodic, so one period of N^n values is stored.
struct FrequencyField {
    int n = 1;
    double grid_delta = 0;
    Shape period;
    double max_freq = 0;
    double mass = 0;
    std::vector<cplx> values;

    double spacing(int axis) const;
    cplx at(const IVec& k) const;
    Vec freq(const IVec& k) const;
};

FrequencyField fourier_transform(const GridMeasure& nu, double max_freq, int oversample = 2);
FrequencyField fourier_transform_on(const GridMeasure& nu, const Shape& period, double max_freq);
// Direct O(|supp|) evaluation at one frequency.
cplx transform_at(const GridMeasure& nu, const Vec& xi);

// mu_k: k-fold multiplicative convolution, folded from the left.
GridMeasure multiplicative_power(const GridMeasure& mu, int k, const MultOptions& opt = {});

struct DecayReport {
    int n = 1;
    int k = 1;
    double delta = 0;
    double annulus_lo = 0;
    double annulus_hi = 0;
    double sup = 0;
    Vec argmax{};
    double eps1_hat = 0;
    double mass = 0;
    double spacing = 0;
    double slack = 0;  // mass * 2 pi * diam * spacing
    bool refined = false;
    bool slack_ok = false;
    bool support_in_box = true;
};

// Sup of |transform| over annulus nodes with delta^-1/2 <= |xi| <= delta^-1.
// delta must be at least four grid cells so the annulus stays below the aliasing band.
DecayReport annulus_sup(const GridMeasure& mu_k, int k, double delta);
DecayReport decay_sup(const GridMeasure& mu, int k, double delta, bool strict = true);
DecayReport multi_measure_decay(const std::vector<GridMeasure>& lambdas, double delta, bool strict = true);
std::string decay_csv_header(int n);
std::string decay_csv_row(const DecayReport& r);

// int_{B(0,2/delta)} |nu^|^(2r) by node quadrature.
double ball_integral(const GridMeasure& nu, double delta, double power);
double sigma_exponent(const GridMeasure& mu, int k, int r, double delta);

struct SigmaRow {
    int k = 1;
    int r = 1;
    double sigma = 0;
};
struct SigmaTable {
    double delta = 0;
    std::vector<SigmaRow> rows;
};
SigmaTable sigma_table(const GridMeasure& mu, const std::vector<int>& ks, const std::vector<int>& rs, double delta);

struct SigmaDecrement {
    int k = 1;
    int r = 1;
    int r_prime = 12;
    double sigma_before = 0;  // sigma_{k,2r}
    double sigma_after = 0;   // sigma_{2k,r'}
    double decrement = 0;
};
SigmaDecrement sigma_decrement_experiment(const GridMeasure& mu, int k, int r, double delta);
std::string sigma_csv_header();
std::string sigma_csv_row(const SigmaDecrement& d);

struct RegularityReport {
    double alpha = 0;
    double beta = 0;
    double measured_proj_sup = 0;  // sup_{j,a} (pi_j)_* mu(B(a, delta))
    double measured_l1 = 0;        // int_{B(0,2/delta)} |nu^|
    bool proj_hypothesis = false;
    bool l1_hypothesis = false;
    double lhs = 0;
    Vec argmax{};
    double bound = 0;
    double tau = 0;
    double constant = 0;  // lhs / bound
    bool pass = false;
};
RegularityReport regularity_decay_bound(const GridMeasure& mu, const GridMeasure& nu, double alpha, double beta,
                                        double delta, double module_constant = 1.0);

// Exact rationals for the exponent schedule.
struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;

    static Rational make(std::int64_t num, std::int64_t den = 1);
    // "2/5", "0.4", "3"
    static Rational parse(const std::string& s);
    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
    std::string str() const;
};
Rational operator+(const Rational& a, const Rational& b);
Rational operator-(const Rational& a, const Rational& b);
Rational operator*(const Rational& a, const Rational& b);
Rational operator/(const Rational& a, const Rational& b);
bool operator<(const Rational& a, const Rational& b);
bool operator==(const Rational& a, const Rational& b);
Rational min_of(const Rational& a, const Rational& b);

struct Schedule {
    Rational kappa0;
    Rational kappa1;
    Rational eps;
    std::vector<std::int64_t> r_chain;
    Rational eps1;
    Rational eps1_lower;
    Rational eps3;
};
Schedule schedule_exponents(const Rational& kappa0, int n, int r, const Rational& eps_measured, const Rational& eps2,
                            int k, int chain_length = 3);
std::int64_t next_r(std::int64_t r);

struct NudelReport {
    double delta = 0;
    double delta1 = 0;
    double C = 0;
    double space_l2 = 0;       // ||nu_{delta1}||_2^2 on the lattice
    double freq_l2 = 0;        // int |nu^|^2 |P^_{delta1}|^2 over one period
    double plancherel_gap = 0; // relative
    double ball_l2 = 0;        // int_{B(0,2/delta)} |nu^|^2
    double ratio = 0;          // space_l2 / ball_l2
};
NudelReport nudel_check(const GridMeasure& nu, double delta, double C);

// Sum over S of (-1)^{k-|S|} F(1_S): the z_1...z_k coefficient of a polynomial of degree <= k.
cplx multilinear_coefficient(const std::function<cplx(const std::vector<double>&)>& F, int k);
// G(l_1..l_k) = int exp(2 pi i <xi, x_1...x_k>) dl_1...dl_k by enumeration of cell tuples.
cplx mixed_integral(const std::vector<GridMeasure>& lambdas, const Vec& xi);

struct RescaledPiece {
    IVec sign{};
    IVec l{};
    double mass = 0;
    GridMeasure piece;  // on [1/2,1]^n
};
struct RescaleReport {
    std::vector<RescaledPiece> pieces;
    double total_mass = 0;
    double count_bound = 0;  // (2 eps3 log2 tau + 2)^n 2^n
};
// Orthant split, then |x^i| in (2^{l_i - 1}, 2^{l_i}] rescaled by 2^{-l_i}.
RescaleReport dyadic_rescale_decompose(const GridMeasure& lambda, double eps3, double tau);

}  // namespace sumprod
