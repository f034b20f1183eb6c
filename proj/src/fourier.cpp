#include "sumprod/fourier.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numbers>

#include "detail.hpp"

namespace sumprod {

using detail::ball_offsets;
using detail::shape_of;

namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;
constexpr std::uint64_t kMaxFieldNodes = 1ULL << 24;

void require_analysis_scale(const DyadicGrid& g, double delta) {
    if (!(delta >= 4 * g.delta() * (1 - 1e-12)))
        throw domain_error("analysis delta must be at least four grid cells (" + fmt_num(4 * g.delta()) + ")");
}

double diameter(const GridMeasure& mu) {
    double d2 = 0;
    for (int i = 0; i < mu.grid.n; ++i) {
        double lo = 1e300, hi = -1e300;
        for (std::size_t k = 0; k < mu.size(); ++k) {
            lo = std::min(lo, mu.center(k)[i]);
            hi = std::max(hi, mu.center(k)[i]);
        }
        if (mu.size() > 0) d2 += (hi - lo) * (hi - lo);
    }
    return std::sqrt(d2);
}

bool in_unit_half_box(const GridMeasure& mu) {
    const double tol = 0.5 * mu.grid.delta() + 1e-12;
    for (std::size_t k = 0; k < mu.size(); ++k) {
        const Vec x = mu.center(k);
        for (int i = 0; i < mu.grid.n; ++i)
            if (x[i] < 0.5 - tol || x[i] > 1 + tol) return false;
    }
    return true;
}

// Period long enough for `factor`-fold oversampling and node spacing at most `max_spacing`.
Shape padded_period(const GridMeasure& nu, std::size_t factor, double max_spacing = 0) {
    Shape s{nu.grid.n, {1, 1, 1, 1}};
    std::size_t floor_n = 1;
    if (max_spacing > 0) floor_n = static_cast<std::size_t>(std::ceil(1 / (max_spacing * nu.grid.delta())));
    for (int i = 0; i < nu.grid.n; ++i) s.d[i] = fft_size(std::max(factor * nu.grid.dim(i), floor_n));
    return s;
}

// Visits every node k in [-K, K]^n.
template <class Fn>
void for_box(int n, const std::array<std::int64_t, 4>& K, Fn&& fn) {
    IVec k{};
    for (int i = 0; i < n; ++i) k[i] = -K[i];
    while (true) {
        fn(k);
        int ax = n - 1;
        while (ax >= 0 && ++k[ax] > K[ax]) {
            k[ax] = -K[ax];
            --ax;
        }
        if (ax < 0) break;
    }
}

struct ScanResult {
    double sup = -1;
    Vec argmax{};
};

ScanResult scan_annulus(const FrequencyField& f, double lo, double hi) {
    std::array<std::int64_t, 4> K{};
    for (int i = 0; i < f.n; ++i) K[i] = static_cast<std::int64_t>(std::ceil(hi / f.spacing(i)));
    ScanResult r;
    for_box(f.n, K, [&](const IVec& k) {
        const Vec xi = f.freq(k);
        const double nr = norm(xi, f.n);
        if (nr < lo || nr > hi) return;
        const double v = std::abs(f.at(k));
        if (v > r.sup) {
            r.sup = v;
            r.argmax = xi;
        }
    });
    return r;
}

// Multilinear interpolation of the periodic field at an arbitrary frequency.
cplx interpolate(const FrequencyField& f, const Vec& xi) {
    std::array<std::int64_t, 4> base{};
    std::array<double, 4> frac{};
    for (int i = 0; i < f.n; ++i) {
        const double t = xi[i] / f.spacing(i);
        const double fl = std::floor(t);
        base[i] = static_cast<std::int64_t>(fl);
        frac[i] = t - fl;
    }
    cplx s = 0;
    for (int corner = 0; corner < (1 << f.n); ++corner) {
        IVec k{};
        double w = 1;
        for (int i = 0; i < f.n; ++i) {
            const int bit = (corner >> i) & 1;
            k[i] = base[i] + bit;
            w *= bit ? frac[i] : 1 - frac[i];
        }
        if (w != 0) s += w * f.at(k);
    }
    return s;
}

}  // namespace

double FrequencyField::spacing(int axis) const {
    return 1.0 / (static_cast<double>(period.d[static_cast<std::size_t>(axis)]) * grid_delta);
}

cplx FrequencyField::at(const IVec& k) const {
    std::array<std::size_t, 4> c{};
    for (int i = 0; i < n; ++i) {
        const auto N = static_cast<std::int64_t>(period.d[static_cast<std::size_t>(i)]);
        c[static_cast<std::size_t>(i)] = static_cast<std::size_t>(((k[i] % N) + N) % N);
    }
    return values[period.index(c)];
}

Vec FrequencyField::freq(const IVec& k) const {
    Vec xi{};
    for (int i = 0; i < n; ++i) xi[i] = static_cast<double>(k[i]) * spacing(i);
    return xi;
}

FrequencyField fourier_transform_on(const GridMeasure& nu, const Shape& period, double max_freq) {
    const auto& g = nu.grid;
    if (!(max_freq <= 2 / g.delta() * (1 + 1e-12))) throw domain_error("max_freq exceeds 2/delta");
    std::uint64_t total = 1;
    for (int i = 0; i < g.n; ++i) {
        if (period.d[static_cast<std::size_t>(i)] < g.dim(i)) throw domain_error("frequency period shorter than the grid");
        total *= period.d[static_cast<std::size_t>(i)];
    }
    check_budget(total, "frequency field");
    FrequencyField f;
    f.n = g.n;
    f.grid_delta = g.delta();
    f.period = period;
    f.max_freq = max_freq;
    f.mass = nu.mass;
    f.values = dft_plus(nu.dense(), shape_of(g), period);
    // Node j of the box sits at global lattice coordinate origin + j.
    std::array<std::vector<cplx>, 4> phase;
    for (int i = 0; i < g.n; ++i) {
        const auto N = static_cast<std::int64_t>(period.d[static_cast<std::size_t>(i)]);
        const std::int64_t L = ((g.origin(i) % N) + N) % N;
        auto& p = phase[static_cast<std::size_t>(i)];
        p.resize(static_cast<std::size_t>(N));
        for (std::int64_t k = 0; k < N; ++k) {
            const auto e = static_cast<double>((static_cast<__int128>(L) * k) % N) / static_cast<double>(N);
            p[static_cast<std::size_t>(k)] = std::polar(1.0, kTwoPi * e);
        }
    }
    for (std::size_t idx = 0; idx < f.values.size(); ++idx) {
        auto c = period.coords(idx);
        cplx ph = 1;
        for (int i = 0; i < g.n; ++i) ph *= phase[static_cast<std::size_t>(i)][c[static_cast<std::size_t>(i)]];
        f.values[idx] *= ph;
    }
    return f;
}

FrequencyField fourier_transform(const GridMeasure& nu, double max_freq, int oversample) {
    if (oversample < 1) throw domain_error("oversample must be at least 1");
    return fourier_transform_on(nu, padded_period(nu, static_cast<std::size_t>(oversample)), max_freq);
}

cplx transform_at(const GridMeasure& nu, const Vec& xi) {
    cplx s = 0;
    for (std::size_t k = 0; k < nu.size(); ++k) {
        const Vec x = nu.center(k);
        double t = 0;
        for (int i = 0; i < nu.grid.n; ++i) t += xi[i] * x[i];
        s += nu.weights[k] * std::polar(1.0, kTwoPi * t);
    }
    return s;
}

GridMeasure multiplicative_power(const GridMeasure& mu, int k, const MultOptions& opt) {
    if (k < 1) throw domain_error("multiplicative power needs k >= 1");
    GridMeasure acc = mu;
    for (int i = 1; i < k; ++i) acc = multiplicative_convolve(acc, mu, opt);
    return acc;
}

DecayReport annulus_sup(const GridMeasure& mu_k, int k, double delta) {
    const auto& g = mu_k.grid;
    require_analysis_scale(g, delta);
    DecayReport r;
    r.n = g.n;
    r.k = k;
    r.delta = delta;
    r.annulus_lo = 0.5 / delta;
    r.annulus_hi = 1 / delta;
    r.mass = mu_k.mass;
    const double diam = diameter(mu_k);

    Shape period = padded_period(mu_k, 2, (r.annulus_hi - r.annulus_lo) / 16);
    auto run = [&](const Shape& p) {
        auto f = fourier_transform_on(mu_k, p, r.annulus_hi);
        auto s = scan_annulus(f, r.annulus_lo, r.annulus_hi);
        r.sup = std::max(0.0, s.sup);
        r.argmax = s.argmax;
        r.spacing = 0;
        for (int i = 0; i < g.n; ++i) r.spacing = std::max(r.spacing, f.spacing(i));
        r.slack = r.mass * kTwoPi * diam * r.spacing;
    };
    run(period);
    if (r.slack >= 0.1 * r.sup) {
        const double want = r.slack / (0.1 * std::max(r.sup, 1e-300));
        auto factor = static_cast<std::size_t>(fft_size(static_cast<std::size_t>(std::min(want, 1e9)) + 1));
        while (factor > 1) {
            std::uint64_t total = 1;
            for (int i = 0; i < g.n; ++i) total *= period.d[static_cast<std::size_t>(i)] * factor;
            if (total <= kMaxFieldNodes) break;
            factor /= 2;
        }
        if (factor > 1) {
            for (int i = 0; i < g.n; ++i) period.d[static_cast<std::size_t>(i)] *= factor;
            run(period);
            r.refined = true;
        }
    }
    r.slack_ok = r.slack < 0.1 * r.sup;
    r.eps1_hat = r.sup > 0 ? -std::log(r.sup) / std::log(1 / delta) : HUGE_VAL;
    return r;
}

DecayReport decay_sup(const GridMeasure& mu, int k, double delta, bool strict) {
    if (k < 1 || k > 6) throw domain_error("decay_sup needs 1 <= k <= 6");
    const bool inside = in_unit_half_box(mu);
    if (strict && !inside) throw domain_error("support must lie in [1/2,1]^n (use relaxed mode to override)");
    require_analysis_scale(mu.grid, delta);
    auto r = annulus_sup(multiplicative_power(mu, k), k, delta);
    r.support_in_box = inside;
    return r;
}

DecayReport multi_measure_decay(const std::vector<GridMeasure>& lambdas, double delta, bool strict) {
    if (lambdas.empty()) throw domain_error("multi_measure_decay needs at least one measure");
    bool inside = true;
    for (const auto& l : lambdas) inside = inside && in_unit_half_box(l);
    if (strict && !inside) throw domain_error("every support must lie in [1/2,1]^n (use relaxed mode to override)");
    require_analysis_scale(lambdas.front().grid, delta);
    GridMeasure acc = lambdas.front();
    for (std::size_t i = 1; i < lambdas.size(); ++i) acc = multiplicative_convolve(acc, lambdas[i]);
    auto r = annulus_sup(acc, static_cast<int>(lambdas.size()), delta);
    r.support_in_box = inside;
    return r;
}

std::string decay_csv_header(int n) {
    std::string h = "k,delta,annulus_lo,annulus_hi,sup";
    for (int i = 1; i <= n; ++i) h += ",argmax_" + std::to_string(i);
    return h + ",eps1_hat,mass,spacing,slack,refined,slack_ok,support_in_box";
}

std::string decay_csv_row(const DecayReport& r) {
    const int n = r.n;
    std::string s = std::to_string(r.k) + "," + fmt_num(r.delta) + "," + fmt_num(r.annulus_lo) + "," +
                    fmt_num(r.annulus_hi) + "," + fmt_num(r.sup);
    for (int i = 0; i < n; ++i) s += "," + fmt_num(r.argmax[i]);
    return s + "," + fmt_num(r.eps1_hat) + "," + fmt_num(r.mass) + "," + fmt_num(r.spacing) + "," + fmt_num(r.slack) +
           "," + (r.refined ? "1" : "0") + "," + (r.slack_ok ? "1" : "0") + "," + (r.support_in_box ? "1" : "0");
}

double ball_integral(const GridMeasure& nu, double delta, double power) {
    require_analysis_scale(nu.grid, delta);
    const double R = 2 / delta;
    auto f = fourier_transform_on(nu, padded_period(nu, 2, R / 16), R);
    std::array<std::int64_t, 4> K{};
    double cell = 1;
    for (int i = 0; i < f.n; ++i) {
        K[i] = static_cast<std::int64_t>(std::ceil(R / f.spacing(i)));
        cell *= f.spacing(i);
    }
    double s = 0;
    for_box(f.n, K, [&](const IVec& k) {
        const double nr = norm(f.freq(k), f.n);
        if (nr > R * (1 + 1e-12)) return;
        const double w = std::abs(nr - R) <= 1e-12 * R ? 0.5 : 1.0;
        s += w * std::pow(std::abs(f.at(k)), power);
    });
    return s * cell;
}

double sigma_exponent(const GridMeasure& mu, int k, int r, double delta) {
    if (k < 1 || k > 6 || r < 1) throw domain_error("sigma_exponent needs 1 <= k <= 6 and r >= 1");
    return std::log(ball_integral(multiplicative_power(mu, k), delta, 2.0 * r)) / std::abs(std::log(delta));
}

SigmaTable sigma_table(const GridMeasure& mu, const std::vector<int>& ks, const std::vector<int>& rs, double delta) {
    SigmaTable t;
    t.delta = delta;
    for (int k : ks) {
        if (k < 1 || k > 6) throw domain_error("sigma_table needs 1 <= k <= 6");
        auto mk = multiplicative_power(mu, k);
        for (int r : rs) {
            if (r < 1) throw domain_error("sigma_table needs r >= 1");
            t.rows.push_back({k, r, std::log(ball_integral(mk, delta, 2.0 * r)) / std::abs(std::log(delta))});
        }
    }
    return t;
}

std::int64_t next_r(std::int64_t r) {
    if (r < 1 || r > 1'000'000) throw domain_error("r out of range for the r' recursion");
    return 8 * r * r + 4 * r;
}

SigmaDecrement sigma_decrement_experiment(const GridMeasure& mu, int k, int r, double delta) {
    if (k < 1 || 2 * k > 6) throw domain_error("sigma_decrement_experiment needs 2k <= 6");
    if (r < 1 || r > 4) throw domain_error("sigma_decrement_experiment needs 1 <= r <= 4");
    SigmaDecrement d;
    d.k = k;
    d.r = r;
    d.r_prime = static_cast<int>(next_r(r));
    auto mk = multiplicative_power(mu, k);
    GridMeasure m2k = mk;
    for (int i = 0; i < k; ++i) m2k = multiplicative_convolve(m2k, mu);
    const double L = std::abs(std::log(delta));
    d.sigma_before = std::log(ball_integral(mk, delta, 4.0 * r)) / L;
    d.sigma_after = std::log(ball_integral(m2k, delta, 2.0 * d.r_prime)) / L;
    d.decrement = d.sigma_before - d.sigma_after;
    return d;
}

std::string sigma_csv_header() { return "k,r,r_prime,sigma_before,sigma_after,decrement"; }

std::string sigma_csv_row(const SigmaDecrement& d) {
    return std::to_string(d.k) + "," + std::to_string(d.r) + "," + std::to_string(d.r_prime) + "," +
           fmt_num(d.sigma_before) + "," + fmt_num(d.sigma_after) + "," + fmt_num(d.decrement);
}

RegularityReport regularity_decay_bound(const GridMeasure& mu, const GridMeasure& nu, double alpha, double beta,
                                        double delta, double module_constant) {
    if (mu.grid.n != nu.grid.n || mu.grid.m != nu.grid.m) throw domain_error("regularity bound needs matching grids");
    require_analysis_scale(nu.grid, delta);
    const int n = mu.grid.n;
    RegularityReport r;
    r.alpha = alpha;
    r.beta = beta;
    r.tau = (alpha - beta) / (n + 2);
    r.bound = std::pow(delta, r.tau);

    std::vector<Vec> axes;
    for (int i = 0; i < n; ++i) {
        Vec e{};
        e[i] = 1;
        axes.push_back(e);
    }
    auto nc = nonconcentration_along(mu, {delta}, axes, 0);
    r.measured_proj_sup = nc.sup_mass[0];
    r.proj_hypothesis = r.measured_proj_sup <= std::pow(delta, alpha);
    r.measured_l1 = ball_integral(nu, delta, 1.0);
    r.l1_hypothesis = r.measured_l1 <= std::pow(delta, -beta);

    auto f = fourier_transform_on(nu, padded_period(nu, 16, 1 / (64 * delta)), 2 / delta);
    const double lo = 0.5 / delta, hi = 1 / delta;
    const double target = n == 1 ? 4096 : (n == 2 ? 96 : 16);
    const double step = hi / target;
    std::array<std::int64_t, 4> K{};
    for (int i = 0; i < n; ++i) K[i] = static_cast<std::int64_t>(std::ceil(hi / step));
    std::vector<Vec> xs(mu.size());
    for (std::size_t k = 0; k < mu.size(); ++k) xs[k] = mu.center(k);
    r.lhs = -1;
    for_box(n, K, [&](const IVec& k) {
        Vec xi{};
        for (int i = 0; i < n; ++i) xi[i] = static_cast<double>(k[i]) * step;
        const double nr = norm(xi, n);
        if (nr < lo || nr > hi) return;
        double s = 0;
        for (std::size_t j = 0; j < xs.size(); ++j) {
            Vec eta{};
            for (int i = 0; i < n; ++i) eta[i] = xs[j][i] * xi[i];
            s += mu.weights[j] * std::abs(interpolate(f, eta));
        }
        if (s > r.lhs) {
            r.lhs = s;
            r.argmax = xi;
        }
    });
    r.constant = r.lhs / r.bound;
    r.pass = r.proj_hypothesis && r.l1_hypothesis && r.lhs <= module_constant * r.bound;
    return r;
}

namespace {

std::int64_t checked(__int128 v) {
    if (v > INT64_MAX || v < INT64_MIN) throw domain_error("rational arithmetic overflow");
    return static_cast<std::int64_t>(v);
}

Rational reduce(__int128 num, __int128 den) {
    if (den == 0) throw domain_error("rational with zero denominator");
    if (den < 0) {
        num = -num;
        den = -den;
    }
    __int128 a = num < 0 ? -num : num, b = den;
    while (b) {
        auto t = a % b;
        a = b;
        b = t;
    }
    if (a > 1) {
        num /= a;
        den /= a;
    }
    Rational r;
    r.num = checked(num);
    r.den = checked(den);
    return r;
}

}  // namespace

Rational Rational::make(std::int64_t num, std::int64_t den) { return reduce(num, den); }

Rational Rational::parse(const std::string& s) {
    auto slash = s.find('/');
    auto parse_int = [](const std::string& t) {
        std::int64_t v = 0;
        auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
        if (ec != std::errc() || p != t.data() + t.size() || t.empty()) throw domain_error("bad rational '" + t + "'");
        return v;
    };
    if (slash != std::string::npos) return make(parse_int(s.substr(0, slash)), parse_int(s.substr(slash + 1)));
    auto dot = s.find('.');
    if (dot == std::string::npos) return make(parse_int(s));
    std::string digits = s.substr(0, dot) + s.substr(dot + 1);
    const auto places = s.size() - dot - 1;
    if (places > 18) throw domain_error("too many decimal places in '" + s + "'");
    std::int64_t den = 1;
    for (std::size_t i = 0; i < places; ++i) den *= 10;
    if (digits == "-" || digits == "+" || digits.empty()) throw domain_error("bad rational '" + s + "'");
    if (digits.front() == '+') digits.erase(0, 1);
    return make(parse_int(digits), den);
}

std::string Rational::str() const { return den == 1 ? std::to_string(num) : std::to_string(num) + "/" + std::to_string(den); }

Rational operator+(const Rational& a, const Rational& b) {
    return reduce(static_cast<__int128>(a.num) * b.den + static_cast<__int128>(b.num) * a.den,
                  static_cast<__int128>(a.den) * b.den);
}
Rational operator-(const Rational& a, const Rational& b) {
    return reduce(static_cast<__int128>(a.num) * b.den - static_cast<__int128>(b.num) * a.den,
                  static_cast<__int128>(a.den) * b.den);
}
Rational operator*(const Rational& a, const Rational& b) {
    return reduce(static_cast<__int128>(a.num) * b.num, static_cast<__int128>(a.den) * b.den);
}
Rational operator/(const Rational& a, const Rational& b) {
    if (b.num == 0) throw domain_error("rational division by zero");
    return reduce(static_cast<__int128>(a.num) * b.den, static_cast<__int128>(a.den) * b.num);
}
bool operator<(const Rational& a, const Rational& b) {
    return static_cast<__int128>(a.num) * b.den < static_cast<__int128>(b.num) * a.den;
}
bool operator==(const Rational& a, const Rational& b) { return a.num == b.num && a.den == b.den; }
Rational min_of(const Rational& a, const Rational& b) { return b < a ? b : a; }

Schedule schedule_exponents(const Rational& kappa0, int n, int r, const Rational& eps_measured, const Rational& eps2,
                            int k, int chain_length) {
    const Rational zero = Rational::make(0), one = Rational::make(1);
    if (n < 1 || n > kMaxDim) throw domain_error("n must be in 1..4");
    if (!(zero < kappa0) || Rational::make(n) < kappa0) throw domain_error("kappa0 must lie in (0, n]");
    if (!(zero < eps_measured)) throw domain_error("measured eps must be positive");
    if (!(zero < eps2)) throw domain_error("eps2 must be positive");
    if (r < 1 || k < 1 || chain_length < 1) throw domain_error("r, k and chain_length must be positive");
    Schedule s;
    s.kappa0 = kappa0;
    s.kappa1 = kappa0 / Rational::make(4);
    s.eps = min_of(eps_measured, kappa0) / Rational::make(2);
    std::int64_t cur = r;
    s.r_chain.push_back(cur);
    for (int i = 1; i < chain_length; ++i) s.r_chain.push_back(cur = next_r(cur));
    const Rational denom = Rational::make(4 * (n + 2) * static_cast<std::int64_t>(r));
    s.eps1 = (kappa0 - s.eps - s.kappa1) / denom;
    s.eps1_lower = s.kappa1 / denom;
    s.eps3 = min_of(min_of(eps2, eps2 * kappa0), one) / Rational::make(10 * static_cast<std::int64_t>(k));
    return s;
}

NudelReport nudel_check(const GridMeasure& nu, double delta, double C) {
    if (!(C > 8)) throw domain_error("nudel_check needs C > 8");
    const auto& g = nu.grid;
    for (std::size_t k = 0; k < nu.size(); ++k)
        if (norm(nu.center(k), g.n) > C) throw domain_error("support must lie in B(0, C)");
    NudelReport r;
    r.delta = delta;
    r.C = C;
    r.delta1 = 2 * delta / C;
    if (r.delta1 < g.delta() * (1 - 1e-12)) throw domain_error("delta1 = 2 delta / C is below the grid delta");

    auto dens = smooth(nu, r.delta1);
    r.space_l2 = dens.l2sq();

    const double radius = r.delta1 / g.delta();
    const auto kr = static_cast<std::int64_t>(std::floor(radius + 1e-9));
    auto offsets = ball_offsets(g.n, radius);
    Shape period{g.n, {1, 1, 1, 1}};
    for (int i = 0; i < g.n; ++i) period.d[static_cast<std::size_t>(i)] = fft_size(g.dim(i) + 2 * static_cast<std::size_t>(kr));
    auto f = fourier_transform_on(nu, period, 2 / g.delta());
    const double wk = 1.0 / static_cast<double>(offsets.size());
    double sum = 0, cell = 1;
    for (int i = 0; i < g.n; ++i) cell *= f.spacing(i);
    for (std::size_t idx = 0; idx < f.values.size(); ++idx) {
        auto c = period.coords(idx);
        cplx kh = 0;
        for (const auto& o : offsets) {
            double t = 0;
            for (int i = 0; i < g.n; ++i)
                t += static_cast<double>(o[i]) * static_cast<double>(c[static_cast<std::size_t>(i)]) /
                     static_cast<double>(period.d[static_cast<std::size_t>(i)]);
            kh += wk * std::polar(1.0, kTwoPi * t);
        }
        sum += std::norm(f.values[idx]) * std::norm(kh);
    }
    r.freq_l2 = sum * cell;
    r.plancherel_gap = std::abs(r.space_l2 - r.freq_l2) / r.space_l2;
    r.ball_l2 = ball_integral(nu, delta, 2.0);
    r.ratio = r.space_l2 / r.ball_l2;
    return r;
}

cplx multilinear_coefficient(const std::function<cplx(const std::vector<double>&)>& F, int k) {
    if (k < 1 || k > 20) throw domain_error("multilinear_coefficient needs 1 <= k <= 20");
    cplx s = 0;
    std::vector<double> z(static_cast<std::size_t>(k));
    for (std::uint32_t mask = 0; mask < (1u << k); ++mask) {
        int bits = 0;
        for (int j = 0; j < k; ++j) {
            z[static_cast<std::size_t>(j)] = (mask >> j) & 1u;
            bits += static_cast<int>((mask >> j) & 1u);
        }
        s += ((k - bits) % 2 ? -1.0 : 1.0) * F(z);
    }
    return s;
}

cplx mixed_integral(const std::vector<GridMeasure>& lambdas, const Vec& xi) {
    if (lambdas.empty()) throw domain_error("mixed_integral needs at least one measure");
    const int n = lambdas.front().grid.n;
    std::uint64_t tuples = 1;
    for (const auto& l : lambdas) {
        if (l.grid.n != n) throw domain_error("mixed_integral needs a common dimension");
        tuples = tuples > (1ULL << 40) / std::max<std::size_t>(1, l.size()) ? (1ULL << 41) : tuples * l.size();
    }
    if (tuples > 100'000'000ULL) throw budget_error("mixed_integral tuple enumeration", tuples);
    cplx total = 0;
    std::vector<std::size_t> idx(lambdas.size(), 0);
    const std::size_t depth = lambdas.size();
    std::vector<Vec> prod(depth + 1);
    std::vector<double> w(depth + 1);
    Vec one{};
    for (int i = 0; i < n; ++i) one[i] = 1;
    prod[0] = one;
    w[0] = 1;
    std::function<void(std::size_t)> rec = [&](std::size_t d) {
        if (d == depth) {
            double t = 0;
            for (int i = 0; i < n; ++i) t += xi[i] * prod[d][i];
            total += w[d] * std::polar(1.0, kTwoPi * t);
            return;
        }
        const auto& l = lambdas[d];
        for (std::size_t c = 0; c < l.size(); ++c) {
            const Vec x = l.center(c);
            for (int i = 0; i < n; ++i) prod[d + 1][i] = prod[d][i] * x[i];
            w[d + 1] = w[d] * l.weights[c];
            rec(d + 1);
        }
    };
    rec(0);
    return total;
}

RescaleReport dyadic_rescale_decompose(const GridMeasure& lambda, double eps3, double tau) {
    if (!(tau > 1) || !(eps3 > 0)) throw domain_error("dyadic_rescale_decompose needs tau > 1 and eps3 > 0");
    const int n = lambda.grid.n;
    const double lo = std::pow(tau, -eps3), hi = std::pow(tau, eps3);
    struct Key {
        IVec sign;
        IVec l;
        bool operator<(const Key& o) const { return std::tie(sign, l) < std::tie(o.sign, o.l); }
    };
    std::map<Key, std::vector<std::pair<Vec, double>>> groups;
    for (std::size_t k = 0; k < lambda.size(); ++k) {
        const Vec x = lambda.center(k);
        Key key{};
        Vec y{};
        for (int i = 0; i < n; ++i) {
            const double a = std::abs(x[i]);
            if (a < lo || a > hi)
                throw domain_error("support comes within tau^-eps3 of a coordinate hyperplane or leaves [-tau^eps3, tau^eps3]");
            key.sign[i] = x[i] < 0 ? -1 : 1;
            int l = static_cast<int>(std::ceil(std::log2(a)));
            while (std::ldexp(1.0, l) < a) ++l;
            while (std::ldexp(1.0, l - 1) >= a) --l;
            key.l[i] = l;
            y[i] = std::ldexp(a, -l);
        }
        groups[key].emplace_back(y, lambda.weights[k]);
    }
    RescaleReport rep;
    Vec blo{}, bhi{};
    for (int i = 0; i < n; ++i) {
        blo[i] = 0.5;
        bhi[i] = 1;
    }
    auto g = DyadicGrid::covering(n, lambda.grid.m, blo, bhi);
    for (auto& [key, pts] : groups) {
        RescaledPiece p;
        p.sign = key.sign;
        p.l = key.l;
        std::vector<double> acc(g.cell_count(), 0.0);
        for (const auto& [y, w] : pts) {
            acc[g.index(g.nearest(y))] += w;
            p.mass += w;
        }
        p.piece = measure_from_dense(g, acc);
        rep.total_mass += p.mass;
        rep.pieces.push_back(std::move(p));
    }
    rep.count_bound = std::pow(2 * eps3 * std::log2(tau) + 2, n) * std::pow(2.0, n);
    return rep;
}

}  // namespace sumprod
