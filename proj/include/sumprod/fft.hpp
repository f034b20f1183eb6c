#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <vector>

namespace sumprod {

// Row-major dense array extents; axes >= n have extent 1.
struct Shape {
    int n = 1;
    std::array<std::size_t, 4> d{1, 1, 1, 1};

    std::size_t total() const;
    std::size_t index(const std::array<std::size_t, 4>& c) const;
    std::array<std::size_t, 4> coords(std::size_t idx) const;
    bool operator==(const Shape& o) const;
};

std::size_t fft_size(std::size_t at_least);

// Full linear convolution; result extents are a.d + b.d - 1.
std::vector<double> fft_convolve(const std::vector<double>& a, const Shape& sa,
                                 const std::vector<double>& b, const Shape& sb);

// out[k] = sum_j a[j] exp(+2 pi i <j, k/N>), a zero-padded to extents N.
std::vector<std::complex<double>> dft_plus(const std::vector<double>& a, const Shape& sa, const Shape& N);
std::vector<std::complex<double>> dft_plus(const std::vector<std::complex<double>>& a, const Shape& sa,
                                           const Shape& N);

}  // namespace sumprod
