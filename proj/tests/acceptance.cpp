// One PASS/FAIL line per acceptance criterion. Exit status is the number of failures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "sumprod/complex.hpp"
#include "sumprod/experiment.hpp"
#include "sumprod/fourier.hpp"
#include "sumprod/lattice.hpp"
#include "sumprod/synth.hpp"

using namespace sumprod;

namespace {

int failures = 0;

class Criterion {
public:
    Criterion(int id, std::string name, double limit_s)
        : id_(id), name_(std::move(name)), limit_(limit_s), t0_(std::chrono::steady_clock::now()) {}

    void check(bool ok, const std::string& what) {
        ok_ = ok_ && ok;
        detail_ += (detail_.empty() ? "" : "; ") + what + (ok ? "" : " [x]");
    }

    ~Criterion() {
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.1fs of %.0fs", secs, limit_);
        const bool ok = ok_ && secs < limit_;
        if (!ok) ++failures;
        std::printf("%s %2d %s: %s (%s)\n", ok ? "PASS" : "FAIL", id_, name_.c_str(), detail_.c_str(), buf);
        std::fflush(stdout);
    }

private:
    int id_;
    std::string name_;
    double limit_;
    std::chrono::steady_clock::time_point t0_;
    bool ok_ = true;
    std::string detail_;
};

std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", x);
    return buf;
}

LatticeSet random_pair_member(int n, std::uint64_t seed, std::uint64_t stream, std::size_t max_size, std::int64_t span) {
    const auto size = 1 + static_cast<std::size_t>(counter_uniform(seed, stream + 1000) * static_cast<double>(max_size));
    return random_lattice(n, size, span, seed, stream);
}

// Quadruples (a, b, a', b') with a + b = a' + b': loop over a, b, a' and look b' up in sorted B.
std::uint64_t quadruple_count(const LatticeSet& a, const LatticeSet& b) {
    std::vector<IVec> sb = b.points;
    std::sort(sb.begin(), sb.end());
    std::uint64_t count = 0;
    for (const auto& x : a.points)
        for (const auto& y : b.points)
            for (const auto& x2 : a.points) {
                IVec want{};
                for (int i = 0; i < a.n; ++i) want[i] = x[i] + y[i] - x2[i];
                count += std::binary_search(sb.begin(), sb.end(), want);
            }
    return count;
}

GridMeasure random_measure(const DyadicGrid& g, std::size_t count, std::uint64_t seed) {
    std::vector<std::uint64_t> cells;
    std::vector<double> w;
    for (std::size_t i = 0; i < count; ++i) {
        cells.push_back(counter_hash(seed, i) % g.cell_count());
        w.push_back(0.1 + counter_uniform(seed ^ 0x5151ULL, i));
    }
    std::sort(cells.begin(), cells.end());
    cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
    w.resize(cells.size());
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    for (auto& x : w) x /= total;
    return make_measure(g, cells, w);
}

DyadicGrid box(int n, int m, double lo, double hi) {
    Vec l{}, h{};
    for (int i = 0; i < n; ++i) {
        l[i] = lo;
        h[i] = hi;
    }
    return DyadicGrid::make(n, m, l, h);
}

GridMeasure cantor(int m, int depth) {
    MeasureSpec s;
    s.m = m;
    s.depth = depth;
    return synth_measure(s);
}

GridMeasure uniform_half(int m) {
    MeasureSpec s;
    s.family = Family::uniform;
    s.m = m;
    return synth_measure(s);
}

// Cantor function from 40 ternary digits.
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

// Largest mass of a window of length L on [0,1]; the sup is attained at a left endpoint of a construction interval.
double cantor_window_sup(double L) {
    double best = 0;
    const int depth = 14;
    for (std::uint64_t k = 0; k < (1ULL << depth); ++k) {
        double t = 0, len = 1;
        for (int d = depth - 1; d >= 0; --d) {
            len /= 3;
            if ((k >> d) & 1) t += 2 * len;
        }
        best = std::max(best, cantor_cdf(t + L) - cantor_cdf(t));
    }
    return best;
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxy / sxx;
}

struct Frac {
    std::int64_t p, q;
};
Frac frac(std::int64_t p, std::int64_t q) {
    const auto g = std::gcd(p, q);
    return {p / g, q / g};
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void oracle_exactness() {
    Criterion c(1, "energy equals quadruple enumeration", 30);
    std::size_t mismatches = 0;
    for (std::uint64_t i = 0; i < 500; ++i) {
        const int n = 1 + static_cast<int>(i % 2);
        auto a = random_pair_member(n, i, 1, 64, 96), b = random_pair_member(n, i, 2, 64, 96);
        mismatches += exact_energy(a, b) != quadruple_count(a, b);
    }
    c.check(mismatches == 0, "500 pairs, " + std::to_string(mismatches) + " mismatches");
}

void inequality_suite() {
    Criterion c(2, "discrete inequality suite", 60);
    int ruzsa = 0, plun = 0, cs = 0;
    for (std::uint64_t i = 0; i < 200; ++i) {
        const int n = 1 + static_cast<int>(i % 2);
        auto a = random_pair_member(n, i, 11, 40, 80), b = random_pair_member(n, i, 12, 40, 80);
        auto d = random_pair_member(n, i, 13, 40, 80);
        ruzsa += ruzsa_triangle_check(a, b, d).pass;
        const int k = 1 + static_cast<int>(i % 3), l = static_cast<int>(i % 3);
        plun += plunnecke_check(a, b, k, l).pass;
        const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
        const auto e = static_cast<double>(exact_energy(a, b));
        const auto s = static_cast<double>(exact_sumset(a, b).size());
        cs += e <= std::pow(na * nb, 1.5) && e * s >= na * na * nb * nb;
    }
    c.check(ruzsa == 200, "ruzsa " + std::to_string(ruzsa) + "/200");
    c.check(plun == 200, "plunnecke " + std::to_string(plun) + "/200");
    c.check(cs == 200, "energy bounds " + std::to_string(cs) + "/200");
}

void plancherel() {
    Criterion c(3, "Plancherel identities", 60);
    double gap = 0;
    for (std::uint64_t i = 0; i < 20; ++i) {
        auto mu = random_measure(box(1, 10, 0, 1), 60, i);
        gap = std::max(gap, nudel_check(mu, 40 * mu.grid.delta(), 10).plancherel_gap);
    }
    c.check(gap <= 1e-8, "max gap " + num(gap));
    double rel = 0;
    for (std::uint64_t i = 0; i < 20; ++i) {
        const int n = 1 + static_cast<int>(i % 2);
        auto g = box(n, n == 1 ? 10 : 6, 0, 1);
        auto mu = random_measure(g, 50, 100 + i), nu = random_measure(g, 50, 200 + i);
        auto conv = additive_convolve(mu, nu);
        for (std::uint64_t t = 0; t < 20; ++t) {
            Vec xi{};
            for (int j = 0; j < n; ++j) xi[j] = -200 + 400 * counter_uniform(i, 10 * t + static_cast<std::uint64_t>(j));
            const cplx want = transform_at(mu, xi) * transform_at(nu, xi);
            rel = std::max(rel, std::abs(transform_at(conv, xi) - want) / std::max(std::abs(want), 1e-6));
        }
    }
    c.check(rel <= 1e-8, "multiplicativity " + num(rel));
}

void sandwich() {
    Criterion c(4, "dyadic decomposition sandwich", 120);
    double worst = 0;
    for (std::uint64_t i = 0; i < 20; ++i) {
        const int n = 1 + static_cast<int>(i % 2);
        auto g = box(n, 9, 0, 1);
        auto mu = random_measure(g, n == 1 ? 120 : 2000, 300 + i);
        auto lv = dyadic_decompose(mu, 2 * g.delta());
        auto s = dyadic_sandwich(mu, lv);
        worst = std::max({worst, s.upper, s.lower});
    }
    c.check(worst <= 32, "C = " + num(worst));
}

void kappa_recovery() {
    Criterion c(5, "non-concentration exponent recovery", 60);
    auto mu = cantor(12, 8);
    std::vector<double> rhos, lr, lo;
    for (int j = 2; j <= 8; ++j) {
        rhos.push_back(std::ldexp(1.0, -j));
        lr.push_back(std::log(rhos.back()));
        lo.push_back(std::log(cantor_window_sup(4 * rhos.back())));
    }
    const double oracle = fit_slope(lr, lo);
    const double kc = projective_nonconcentration(mu, rhos, 2).kappa_hat;
    const double ku = projective_nonconcentration(uniform_half(12), rhos, 2).kappa_hat;
    c.check(std::abs(kc - oracle) <= 0.05 && std::abs(kc - 0.631) <= 0.05,
            "cantor " + num(kc) + " vs oracle " + num(oracle));
    c.check(std::abs(ku - 1) <= 0.05, "uniform " + num(ku));
}

void mult_cross_check() {
    Criterion c(6, "fast vs pairwise multiplicative convolution", 120);
    auto mu = cantor(10, 5);
    auto fast = multiplicative_convolve(mu, mu, {MultPath::fast});
    auto pair = multiplicative_convolve(mu, mu, {MultPath::pairwise, Deposit::linear});
    const double bound_r = 4 * mu.grid.delta() * 0.75;
    const double tv_r = total_variation(fast, pair);
    c.check(tv_r <= bound_r, "R: TV " + num(tv_r) + " <= " + num(bound_r));

    MeasureSpec s;
    s.family = Family::complex_cantor;
    s.n = 2;
    s.m = 10;
    s.depth = 4;
    s.ratio = 0.2;
    auto z = synth_measure(s);
    auto zfast = complex_mult_convolve(z, z, {MultPath::fast});
    auto zpair = complex_mult_convolve(z, z, {MultPath::pairwise, Deposit::linear});
    const double bound_c = 4 * z.grid.delta() * 2 * s.radius_hi;
    const double tv_c = total_variation(zfast, zpair);
    c.check(tv_c <= bound_c, "C: TV " + num(tv_c) + " <= " + num(bound_c));
}

void flattening_trend() {
    Criterion c(7, "flattening decrement trend", 300);
    double prev = -1;
    bool trend = true;
    std::string vals;
    double last = 0, control = 0;
    for (int m : {8, 10, 12}) {
        auto mu = cantor(m, static_cast<int>(std::ceil(m * std::log(2.0) / std::log(3.0))));
        auto nu = mix(mu, reflect(mu), 0.5);
        const double e = flattening_integral(nu, mu.grid.delta(), 64, 7).eps_hat;
        trend = trend && e > 0 && e >= prev;
        prev = last = e;
        vals += (vals.empty() ? "" : ",") + num(e);
        auto pm = point_mass(1, m, Vec{1});
        control = std::max(control, flattening_integral(pm, pm.grid.delta(), 64, 7).eps_hat);
    }
    c.check(trend && last >= 0.02, "cantor eps_hat " + vals);
    c.check(control <= 0.005, "point-mass eps_hat " + num(control));
}

void decay_trend() {
    Criterion c(8, "Fourier decay trend", 300);
    MeasureSpec s;
    s.m = 14;
    s.depth = 9;
    auto mu = synth_measure(s);
    const double delta = std::ldexp(1.0, -12);
    auto r1 = decay_sup(mu, 1, delta), r4 = decay_sup(mu, 4, delta);
    c.check(r4.sup <= 0.5 * r1.sup, "sup k=1 " + num(r1.sup) + ", k=4 " + num(r4.sup));
    c.check(r4.eps1_hat > 0, "eps1_hat(4) " + num(r4.eps1_hat));
    auto pm = point_mass(1, 14, Vec{1});
    double dev = 0;
    for (int k = 1; k <= 4; ++k) dev = std::max(dev, std::abs(decay_sup(pm, k, delta).sup - 1));
    c.check(dev <= 1e-9, "point mass |sup - 1| " + num(dev));
}

void sigma_decrement() {
    Criterion c(9, "sigma-schedule decrement", 300);
    MeasureSpec s;
    s.m = 14;
    s.depth = 9;
    const double delta = std::ldexp(1.0, -12);
    auto d = sigma_decrement_experiment(synth_measure(s), 1, 1, delta);
    c.check(d.r_prime == 12 && d.decrement >= 0.05, "cantor " + num(d.decrement) + " (r'=" + std::to_string(d.r_prime) + ")");
    s.family = Family::uniform;
    const double du = sigma_decrement_experiment(synth_measure(s), 1, 1, delta).decrement;
    c.check(std::abs(du) <= 0.01, "uniform " + num(du));
    const double da = sigma_decrement_experiment(point_mass(1, 14, Vec{1}), 1, 1, delta).decrement;
    c.check(std::abs(da) <= 0.01, "atom " + num(da));
}

void multilinear() {
    Criterion c(10, "multilinear extraction", 30);
    double err = 0;
    for (int k : {2, 3}) {
        auto g = box(1, 6, 0.5, 1);
        std::vector<GridMeasure> lam;
        for (int j = 0; j < k; ++j) {
            auto m = random_measure(g, 12, 40 + static_cast<std::uint64_t>(j));
            for (auto& w : m.weights) w /= k;
            lam.push_back(make_measure(g, m.cells, m.weights));
        }
        double fact = 1;
        for (int j = 2; j <= k; ++j) fact *= j;
        for (double x : {3.3, 17.0, -41.5}) {
            const Vec xi{x};
            auto F = [&](const std::vector<double>& z) {
                std::vector<double> dense(g.cell_count(), 0.0);
                for (int j = 0; j < k; ++j)
                    if (z[static_cast<std::size_t>(j)] != 0)
                        for (std::size_t t = 0; t < lam[static_cast<std::size_t>(j)].size(); ++t)
                            dense[lam[static_cast<std::size_t>(j)].cells[t]] += lam[static_cast<std::size_t>(j)].weights[t];
                auto nz = measure_from_dense(g, dense);
                if (nz.size() == 0) return cplx(0, 0);
                return mixed_integral(std::vector<GridMeasure>(static_cast<std::size_t>(k), nz), xi);
            };
            err = std::max(err, std::abs(multilinear_coefficient(F, k) / fact - mixed_integral(lam, xi)));
        }
    }
    c.check(err <= 1e-10, "max error " + num(err));
}

void exponent_arithmetic() {
    Criterion c(11, "exponent arithmetic", 5);
    int bad = 0, total = 0;
    for (std::int64_t kn = 1; kn <= 8; ++kn)
        for (int n = 1; n <= 4; ++n)
            for (int r = 1; r <= 3; ++r)
                for (int k = 1; k <= 4; ++k) {
                    const std::int64_t e2n = 1 + (kn + n + r) % 5, e2d = 7;
                    auto s = schedule_exponents(Rational::make(kn, 8), n, r, Rational::make(1, 40),
                                                Rational::make(e2n, e2d), k);
                    const auto k1 = frac(kn, 32);
                    const std::int64_t rp = 8 * r * r + 4 * r;
                    // min{e2, e2 kappa0, 1} with e2 = e2n/7 and kappa0 = kn/8
                    Frac m = {e2n, e2d};
                    if (kn < 8) m = {e2n * kn, e2d * 8};
                    if (m.p > m.q) m = {1, 1};
                    const auto e3 = frac(m.p, m.q * 10 * k);
                    ++total;
                    bad += !(s.kappa1.num == k1.p && s.kappa1.den == k1.q && s.r_chain.size() >= 2 &&
                             s.r_chain[1] == rp && s.eps3.num == e3.p && s.eps3.den == e3.q);
                }
    c.check(bad == 0, std::to_string(total - bad) + "/" + std::to_string(total) + " exact");
}

void determinism() {
    Criterion c(12, "sampled experiments are byte-identical across threads", 60);
    namespace fs = std::filesystem;
    const std::vector<std::string> configs = {
        R"({"schema": 1, "experiment": "flatten", "measure": {"family": "cantor", "m": 10, "depth": 7},
            "samples": 64, "seed": 7})",
        R"({"schema": 1, "experiment": "growth", "measure": {"family": "cantor", "n": 2, "m": 6, "depth": 3},
            "samples": 32, "seed": 3})",
        R"({"schema": 1, "experiment": "oracle-suite", "instances": 30, "max_size": 24, "seed": 9})"};
    int same = 0;
    for (const auto& text : configs) {
        auto cfg = parse_config(text);
        std::vector<std::string> csvs;
        for (int threads : {1, 2, 4, 1}) {
            const auto dir = fs::temp_directory_path() / ("sumprod_accept_" + std::to_string(threads));
            fs::remove_all(dir);
            cfg.out_dir = dir.string();
            cfg.threads = threads;
            auto res = run_experiment(cfg);
            std::string all;
            for (const auto& f : res.files) all += slurp(f);
            csvs.push_back(all);
            fs::remove_all(dir);
        }
        same += std::all_of(csvs.begin(), csvs.end(), [&](const std::string& s) { return s == csvs.front(); });
    }
    c.check(same == static_cast<int>(configs.size()), std::to_string(same) + "/" + std::to_string(configs.size()) + " kinds identical");
}

}  // namespace

int main() {
    oracle_exactness();
    inequality_suite();
    plancherel();
    sandwich();
    kappa_recovery();
    mult_cross_check();
    flattening_trend();
    decay_trend();
    sigma_decrement();
    multilinear();
    exponent_arithmetic();
    determinism();
    std::printf("%d criteria failed\n", failures);
    return failures;
}
