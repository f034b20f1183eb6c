#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "sumprod/fourier.hpp"
#include "sumprod/grid.hpp"
#include "sumprod/lattice.hpp"
#include "sumprod/measure.hpp"

namespace sumprod {

constexpr std::uint32_t kFormatVersion = 1;

// Little-endian binary layouts, all sharing the header
//   magic[4] | version u32 | n u8 | m u16 | lo f64 x n | hi f64 x n | count u64
// GSET: count u64 cell indices.
// GMES: count (u64 cell, f64 weight) pairs. CPLX is the same layout with n = 2.
// GFRQ: n u8, N u64 x n, grid_delta, max_freq, mass as f64, then N^n (re, im) f64 pairs.
void write_set(std::ostream& out, const GridSet& s);
GridSet read_set(std::istream& in);
void write_measure(std::ostream& out, const GridMeasure& mu, bool complex_plane = false);
// Accepts GMES and CPLX; is_complex reports which tag was found.
GridMeasure read_measure(std::istream& in, bool* is_complex = nullptr);
void write_frequency(std::ostream& out, const FrequencyField& f);
FrequencyField read_frequency(std::istream& in);

void store_set(const std::string& path, const GridSet& s);
GridSet load_set(const std::string& path);
void store_measure(const std::string& path, const GridMeasure& mu, bool complex_plane = false);
GridMeasure load_measure(const std::string& path, bool* is_complex = nullptr);
void store_frequency(const std::string& path, const FrequencyField& f);
FrequencyField load_frequency(const std::string& path);

// "n count" then one point per line.
void write_lattice(std::ostream& out, const LatticeSet& a);
LatticeSet read_lattice(std::istream& in);

// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& bytes);
std::string hex64(std::uint64_t h);

}  // namespace sumprod
