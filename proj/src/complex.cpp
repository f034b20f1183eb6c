#include "sumprod/complex.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "detail.hpp"

namespace sumprod {

namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;

void require_plane(const GridMeasure& mu) {
    if (mu.grid.n != 2) throw domain_error("complex measures need n = 2");
}

cplx as_complex(const Vec& x) { return {x[0], x[1]}; }

double max_modulus(const GridMeasure& mu) {
    double r = 0;
    for (std::size_t k = 0; k < mu.size(); ++k) r = std::max(r, std::abs(as_complex(mu.center(k))));
    return r;
}

double min_modulus(const GridMeasure& mu) {
    double r = HUGE_VAL;
    for (std::size_t k = 0; k < mu.size(); ++k) r = std::min(r, std::abs(as_complex(mu.center(k))));
    return r;
}

void deposit_linear(std::vector<double>& acc, const DyadicGrid& g, const Vec& x, double w) {
    std::array<std::int64_t, 2> base{};
    std::array<double, 2> frac{};
    for (int i = 0; i < 2; ++i) {
        const double t = std::ldexp(x[i], g.m) - static_cast<double>(g.origin(i));
        const double f = std::floor(t);
        base[i] = static_cast<std::int64_t>(f);
        frac[i] = t - f;
    }
    for (int corner = 0; corner < 4; ++corner) {
        IVec c{};
        double share = w;
        for (int i = 0; i < 2; ++i) {
            const int bit = (corner >> i) & 1;
            c[i] = base[i] + bit;
            share *= bit ? frac[i] : 1 - frac[i];
        }
        if (share == 0) continue;
        if (!g.in_box(c)) throw domain_error("deposit outside target grid");
        acc[g.index(c)] += share;
    }
}

GridMeasure pairwise(const GridMeasure& mu, const GridMeasure& nu, Deposit how) {
    const double R = max_modulus(mu) * max_modulus(nu);
    auto g = DyadicGrid::covering(2, mu.grid.m, Vec{-R, -R, 0, 0}, Vec{R, R, 0, 0}).enlarged(1);
    std::vector<double> acc(g.cell_count(), 0.0);
    std::vector<cplx> zs(nu.size());
    for (std::size_t b = 0; b < nu.size(); ++b) zs[b] = as_complex(nu.center(b));
    for (std::size_t a = 0; a < mu.size(); ++a) {
        const cplx z = as_complex(mu.center(a));
        for (std::size_t b = 0; b < nu.size(); ++b) {
            const cplx p = z * zs[b];
            const double w = mu.weights[a] * nu.weights[b];
            const Vec x{p.real(), p.imag(), 0, 0};
            if (how == Deposit::nearest)
                acc[g.index(g.nearest(x))] += w;
            else
                deposit_linear(acc, g, x, w);
        }
    }
    return measure_from_dense(g, acc);
}

struct LogPolar {
    double h = 0;  // radial step in log |z|
    std::int64_t jmin = 0;
    std::size_t radial = 0;
    std::size_t angles = 0;
};

LogPolar radial_range(const GridMeasure& mu, double h, std::size_t angles) {
    LogPolar lp;
    lp.h = h;
    lp.angles = angles;
    const double umin = std::log(min_modulus(mu)), umax = std::log(max_modulus(mu));
    lp.jmin = static_cast<std::int64_t>(std::floor(umin / h)) - 1;
    lp.radial = static_cast<std::size_t>(static_cast<std::int64_t>(std::floor(umax / h)) + 2 - lp.jmin + 1);
    return lp;
}

// Nearest-node deposit carrying mass and first moments of the sub-cell offsets.
struct MomentGrids {
    std::vector<double> mass, du, dt;
};

MomentGrids log_polar_deposit(const GridMeasure& mu, const LogPolar& lp) {
    MomentGrids out;
    out.mass.assign(lp.radial * lp.angles, 0.0);
    out.du = out.mass;
    out.dt = out.mass;
    const double ah = kTwoPi / static_cast<double>(lp.angles);
    for (std::size_t k = 0; k < mu.size(); ++k) {
        const cplx z = as_complex(mu.center(k));
        const double u = std::log(std::abs(z)) / lp.h - static_cast<double>(lp.jmin);
        double th = std::arg(z);
        if (th < 0) th += kTwoPi;
        const double t = th / ah;
        const double ru = std::round(u), rt = std::round(t);
        const auto idx = static_cast<std::size_t>(ru) * lp.angles + static_cast<std::size_t>(rt) % lp.angles;
        const double w = mu.weights[k];
        out.mass[idx] += w;
        out.du[idx] += w * (u - ru);
        out.dt[idx] += w * (t - rt);
    }
    return out;
}

GridMeasure log_polar(const GridMeasure& mu, const GridMeasure& nu, const ComplexMultOptions& opt) {
    if (min_modulus(mu) <= 0 || min_modulus(nu) <= 0)
        throw mode_error("log-polar path needs supports away from the origin; use the pairwise path");
    const double delta = mu.grid.delta();
    const double R = max_modulus(mu) * max_modulus(nu), rmin = min_modulus(mu) * min_modulus(nu);
    const int refine = std::max(1, opt.log_refine);
    std::size_t angles = opt.angle_bins > 0 ? static_cast<std::size_t>(opt.angle_bins)
                                            : fft_size(static_cast<std::size_t>(std::ceil(kTwoPi * R * refine / delta)));
    const double h = delta / (refine * R);
    auto lm = radial_range(mu, h, angles), ln = radial_range(nu, h, angles);
    check_budget(static_cast<std::uint64_t>(fft_size(lm.radial + ln.radial)) * fft_size(2 * angles),
                 "log-polar convolution");
    auto fm = log_polar_deposit(mu, lm), fn = log_polar_deposit(nu, ln);
    Shape sm{2, {lm.radial, angles, 1, 1}}, sn{2, {ln.radial, angles, 1, 1}};
    const std::size_t rows = lm.radial + ln.radial - 1, cols = 2 * angles - 1;
    auto fold = [&](const std::vector<double>& conv, std::vector<double>& into) {
        into.resize(rows * angles, 0.0);
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j) into[i * angles + j % angles] += conv[i * cols + j];
    };
    std::vector<double> mass, mu_u, mu_t;
    fold(fft_convolve(fm.mass, sm, fn.mass, sn), mass);
    fold(fft_convolve(fm.du, sm, fn.mass, sn), mu_u);
    fold(fft_convolve(fm.mass, sm, fn.du, sn), mu_u);
    fold(fft_convolve(fm.dt, sm, fn.mass, sn), mu_t);
    fold(fft_convolve(fm.mass, sm, fn.dt, sn), mu_t);

    auto g = DyadicGrid::covering(2, mu.grid.m, Vec{-R, -R, 0, 0}, Vec{R, R, 0, 0}).enlarged(1);
    std::vector<double> acc(g.cell_count(), 0.0);
    double top = 0;
    for (double v : mass) top = std::max(top, v);
    const double ah = kTwoPi / static_cast<double>(angles);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < angles; ++j) {
            const std::size_t idx = i * angles + j;
            const double w = mass[idx];
            if (w <= top * 1e-13) continue;
            const double ou = std::clamp(mu_u[idx] / w, -1.0, 1.0), ot = std::clamp(mu_t[idx] / w, -1.0, 1.0);
            const double u = (static_cast<double>(lm.jmin + ln.jmin + static_cast<std::int64_t>(i)) + ou) * h;
            const double rad = std::clamp(std::exp(u), rmin, R);
            const double th = (static_cast<double>(j) + ot) * ah;
            deposit_linear(acc, g, Vec{rad * std::cos(th), rad * std::sin(th), 0, 0}, w);
        }
    }
    return measure_from_dense(g, acc);
}

}  // namespace

bool on_annulus(const GridMeasure& mu, double C0) {
    require_plane(mu);
    for (std::size_t k = 0; k < mu.size(); ++k) {
        const double r = std::abs(as_complex(mu.center(k)));
        if (r < 1 / C0 || r > C0) return false;
    }
    return true;
}

FrequencyField complex_fourier(const GridMeasure& mu, double max_freq, int oversample) {
    require_plane(mu);
    auto f = fourier_transform(mu, max_freq, oversample);
    const std::size_t N0 = f.period.d[0], N1 = f.period.d[1];
    std::vector<cplx> out(f.values.size());
    for (std::size_t a = 0; a < N0; ++a)
        for (std::size_t b = 0; b < N1; ++b) out[a * N1 + (N1 - b) % N1] = f.values[a * N1 + b];
    f.values = std::move(out);
    return f;
}

cplx complex_transform_at(const GridMeasure& mu, cplx xi) {
    require_plane(mu);
    cplx s = 0;
    for (std::size_t k = 0; k < mu.size(); ++k)
        s += mu.weights[k] * std::polar(1.0, kTwoPi * (xi * as_complex(mu.center(k))).real());
    return s;
}

int coarse_angle_bins(int m) { return 1 << ((m + 1) / 2); }

GridMeasure complex_mult_convolve(const GridMeasure& mu, const GridMeasure& nu, const ComplexMultOptions& opt) {
    require_plane(mu);
    require_plane(nu);
    if (mu.grid.m != nu.grid.m) throw domain_error("convolution grids differ");
    if (mu.size() == 0 || nu.size() == 0) throw domain_error("complex convolution of an empty measure");
    switch (opt.path) {
        case MultPath::pairwise:
            return pairwise(mu, nu, opt.deposit);
        case MultPath::fast:
            return log_polar(mu, nu, opt);
        case MultPath::automatic:
            break;
    }
    const bool away = min_modulus(mu) > 0 && min_modulus(nu) > 0;
    if (static_cast<std::uint64_t>(mu.size()) * nu.size() <= (1ULL << 26) || !away) return pairwise(mu, nu, opt.deposit);
    return log_polar(mu, nu, opt);
}

GridMeasure complex_power(const GridMeasure& mu, int k, const ComplexMultOptions& opt) {
    if (k < 1) throw domain_error("complex power needs k >= 1");
    GridMeasure acc = mu;
    for (int i = 1; i < k; ++i) acc = complex_mult_convolve(acc, mu, opt);
    return acc;
}

NonConReport rotational_nonconcentration(const GridMeasure& mu, const std::vector<double>& rhos, int theta_count) {
    require_plane(mu);
    if (theta_count < 8) throw domain_error("theta_count must be at least 8");
    std::vector<Vec> dirs;
    const double pi = std::numbers::pi;
    for (int j = 0; j < theta_count; ++j) {
        const double t = pi * j / theta_count;
        dirs.push_back(Vec{std::cos(t), -std::sin(t), 0, 0});
    }
    return nonconcentration_along(mu, rhos, dirs, pi / theta_count);
}

double distance_to_real_axis(const GridSet& a) {
    if (a.grid.n != 2) throw domain_error("complex sets need n = 2");
    if (a.empty()) throw domain_error("distance to the real axis of an empty set");
    double d = 0;
    for (const auto& p : a.points()) d = std::max(d, std::abs(p[1]));
    return d;
}

DecayReport complex_decay_sup(const GridMeasure& mu, int k, double delta, bool strict) {
    require_plane(mu);
    if (k < 1 || k > 6) throw domain_error("complex_decay_sup needs 1 <= k <= 6");
    const double tol = mu.grid.delta() * std::numbers::sqrt2 / 2;
    const bool inside = min_modulus(mu) >= 0.5 - tol && max_modulus(mu) <= 2 + tol;
    if (strict && !inside) throw domain_error("support must lie in the annulus 1/2 <= |z| <= 2");
    auto r = annulus_sup(complex_power(mu, k), k, delta);
    r.argmax[1] = -r.argmax[1];
    r.support_in_box = inside;
    return r;
}

}  // namespace sumprod
