#include "sumprod/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <mutex>
#include <stdexcept>

namespace sumprod {

namespace {

// FFTW planning is not thread safe; execution on distinct arrays is.
std::mutex& plan_mutex() {
    static std::mutex mu;
    return mu;
}

struct FftwBuffer {
    explicit FftwBuffer(std::size_t count) : p(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * count))) {
        if (!p) throw std::bad_alloc();
    }
    ~FftwBuffer() { fftw_free(p); }
    FftwBuffer(const FftwBuffer&) = delete;
    FftwBuffer& operator=(const FftwBuffer&) = delete;
    fftw_complex* p;
};

struct Plan {
    fftw_plan p = nullptr;
    ~Plan() {
        if (p) {
            std::lock_guard<std::mutex> lock(plan_mutex());
            fftw_destroy_plan(p);
        }
    }
};

std::array<int, 4> int_dims(const Shape& s) {
    std::array<int, 4> d{};
    for (int i = 0; i < s.n; ++i) d[i] = static_cast<int>(s.d[i]);
    return d;
}

void scatter_padded(const Shape& src, const Shape& dst, auto&& put) {
    const std::size_t total = src.total();
    for (std::size_t j = 0; j < total; ++j) put(dst.index(src.coords(j)), j);
}

}  // namespace

std::size_t Shape::total() const {
    std::size_t t = 1;
    for (int i = 0; i < n; ++i) t *= d[i];
    return t;
}

std::size_t Shape::index(const std::array<std::size_t, 4>& c) const {
    std::size_t idx = 0;
    for (int i = 0; i < n; ++i) idx = idx * d[i] + c[i];
    return idx;
}

std::array<std::size_t, 4> Shape::coords(std::size_t idx) const {
    std::array<std::size_t, 4> c{};
    for (int i = n - 1; i >= 0; --i) {
        c[i] = idx % d[i];
        idx /= d[i];
    }
    return c;
}

bool Shape::operator==(const Shape& o) const {
    if (n != o.n) return false;
    for (int i = 0; i < n; ++i)
        if (d[i] != o.d[i]) return false;
    return true;
}

std::size_t fft_size(std::size_t at_least) {
    std::size_t s = 1;
    while (s < at_least) s <<= 1;
    return s;
}

std::vector<double> fft_convolve(const std::vector<double>& a, const Shape& sa, const std::vector<double>& b,
                                 const Shape& sb) {
    if (sa.n != sb.n) throw std::invalid_argument("fft_convolve: dimension mismatch");
    Shape out{sa.n, {1, 1, 1, 1}}, pad{sa.n, {1, 1, 1, 1}};
    for (int i = 0; i < sa.n; ++i) {
        out.d[i] = sa.d[i] + sb.d[i] - 1;
        pad.d[i] = fft_size(out.d[i]);
    }
    const std::size_t total = pad.total();
    const std::size_t half_last = pad.d[sa.n - 1] / 2 + 1;
    const std::size_t spec = total / pad.d[sa.n - 1] * half_last;

    std::vector<double> ra(total, 0.0), rb(total, 0.0);
    scatter_padded(sa, pad, [&](std::size_t t, std::size_t j) { ra[t] = a[j]; });
    scatter_padded(sb, pad, [&](std::size_t t, std::size_t j) { rb[t] = b[j]; });
    FftwBuffer fa(spec), fb(spec);
    auto dims = int_dims(pad);

    Plan pa, pb, pinv;
    {
        std::lock_guard<std::mutex> lock(plan_mutex());
        pa.p = fftw_plan_dft_r2c(sa.n, dims.data(), ra.data(), fa.p, FFTW_ESTIMATE);
        pb.p = fftw_plan_dft_r2c(sa.n, dims.data(), rb.data(), fb.p, FFTW_ESTIMATE);
        pinv.p = fftw_plan_dft_c2r(sa.n, dims.data(), fa.p, ra.data(), FFTW_ESTIMATE);
    }
    fftw_execute(pa.p);
    fftw_execute(pb.p);
    for (std::size_t k = 0; k < spec; ++k) {
        const double re = fa.p[k][0] * fb.p[k][0] - fa.p[k][1] * fb.p[k][1];
        const double im = fa.p[k][0] * fb.p[k][1] + fa.p[k][1] * fb.p[k][0];
        fa.p[k][0] = re;
        fa.p[k][1] = im;
    }
    fftw_execute(pinv.p);

    std::vector<double> res(out.total());
    const double scale = 1.0 / static_cast<double>(total);
    for (std::size_t j = 0; j < res.size(); ++j) res[j] = ra[pad.index(out.coords(j))] * scale;
    return res;
}

std::vector<std::complex<double>> dft_plus(const std::vector<std::complex<double>>& a, const Shape& sa,
                                           const Shape& N) {
    for (int i = 0; i < sa.n; ++i)
        if (N.d[i] < sa.d[i]) throw std::invalid_argument("dft_plus: padding smaller than input");
    const std::size_t total = N.total();
    FftwBuffer buf(total);
    std::fill_n(&buf.p[0][0], 2 * total, 0.0);
    scatter_padded(sa, N, [&](std::size_t t, std::size_t j) {
        buf.p[t][0] = a[j].real();
        buf.p[t][1] = a[j].imag();
    });
    auto dims = int_dims(N);
    Plan plan;
    {
        std::lock_guard<std::mutex> lock(plan_mutex());
        plan.p = fftw_plan_dft(sa.n, dims.data(), buf.p, buf.p, FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    fftw_execute(plan.p);
    std::vector<std::complex<double>> out(total);
    for (std::size_t k = 0; k < total; ++k) out[k] = {buf.p[k][0], buf.p[k][1]};
    return out;
}

std::vector<std::complex<double>> dft_plus(const std::vector<double>& a, const Shape& sa, const Shape& N) {
    std::vector<std::complex<double>> c(a.begin(), a.end());
    return dft_plus(c, sa, N);
}

}  // namespace sumprod
