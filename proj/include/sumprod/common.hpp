#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace sumprod {

constexpr int kMaxDim = 4;

using Vec = std::array<double, kMaxDim>;
using IVec = std::array<std::int64_t, kMaxDim>;

enum class Sign { plus, minus };

// Error taxonomy. The CLI maps these onto exit codes.
struct lab_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct domain_error : lab_error {
    using lab_error::lab_error;
};
struct budget_error : lab_error {
    budget_error(const std::string& what, std::uint64_t required)
        : lab_error(what + " (requires " + std::to_string(required) + " cells)"), required_cells(required) {}
    std::uint64_t required_cells;
};
struct mode_error : lab_error {
    using lab_error::lab_error;
};
struct format_error : lab_error {
    using lab_error::lab_error;
};
struct config_error : lab_error {
    using lab_error::lab_error;
};

// Process-wide cell budget, default 2^28.
std::uint64_t cell_budget();
void set_cell_budget(std::uint64_t cells);
void check_budget(std::uint64_t cells, const char* what);

// Counter-based generator: value depends only on (seed, counter).
std::uint64_t splitmix64(std::uint64_t x);
inline std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t counter) {
    return splitmix64(splitmix64(seed) ^ (counter * 0xD1B54A32D192ED03ULL));
}
inline double counter_uniform(std::uint64_t seed, std::uint64_t counter) {
    return static_cast<double>(counter_hash(seed, counter) >> 11) * 0x1.0p-53;
}

double norm(const Vec& v, int n);

// Fixed-format number for CSV/.dat output (%.12g).
std::string fmt_num(double x);

// Runs fn(0..count-1) on up to `threads` workers; the first exception is rethrown.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace sumprod
