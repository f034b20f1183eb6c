#include "sumprod/io.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace sumprod {

namespace {

void put_bytes(std::ostream& out, std::uint64_t v, int bytes) {
    char buf[8];
    for (int i = 0; i < bytes; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out.write(buf, bytes);
}

std::uint64_t get_bytes(std::istream& in, int bytes, const char* what) {
    unsigned char buf[8];
    in.read(reinterpret_cast<char*>(buf), bytes);
    if (in.gcount() != bytes) throw format_error(std::string("truncated file while reading ") + what);
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
}

void put_f64(std::ostream& out, double x) {
    std::uint64_t bits;
    std::memcpy(&bits, &x, 8);
    put_bytes(out, bits, 8);
}

double get_f64(std::istream& in, const char* what) {
    const std::uint64_t bits = get_bytes(in, 8, what);
    double x;
    std::memcpy(&x, &bits, 8);
    return x;
}

void put_header(std::ostream& out, const char* magic, const DyadicGrid& g, std::uint64_t count) {
    out.write(magic, 4);
    put_bytes(out, kFormatVersion, 4);
    put_bytes(out, static_cast<std::uint64_t>(g.n), 1);
    put_bytes(out, static_cast<std::uint64_t>(g.m), 2);
    for (int i = 0; i < g.n; ++i) put_f64(out, g.lo[i]);
    for (int i = 0; i < g.n; ++i) put_f64(out, g.hi[i]);
    put_bytes(out, count, 8);
}

std::string get_magic(std::istream& in) {
    char magic[4];
    in.read(magic, 4);
    if (in.gcount() != 4) throw format_error("truncated file: missing magic");
    return std::string(magic, 4);
}

void check_version(std::istream& in) {
    const auto v = get_bytes(in, 4, "version");
    if (v != kFormatVersion)
        throw format_error("unsupported format version " + std::to_string(v) + " (expected " +
                           std::to_string(kFormatVersion) + ")");
}

struct Header {
    DyadicGrid grid;
    std::uint64_t count = 0;
};

Header get_grid_header(std::istream& in) {
    check_version(in);
    const int n = static_cast<int>(get_bytes(in, 1, "dimension"));
    const int m = static_cast<int>(get_bytes(in, 2, "scale"));
    if (n < 1 || n > kMaxDim) throw format_error("bad dimension " + std::to_string(n) + " in header");
    Vec lo{}, hi{};
    for (int i = 0; i < n; ++i) lo[i] = get_f64(in, "box bounds");
    for (int i = 0; i < n; ++i) hi[i] = get_f64(in, "box bounds");
    Header h;
    try {
        h.grid = DyadicGrid::make(n, m, lo, hi);
    } catch (const budget_error&) {
        throw;
    } catch (const lab_error& e) {
        throw format_error(std::string("bad grid in header: ") + e.what());
    }
    h.count = get_bytes(in, 8, "count");
    if (h.count > h.grid.cell_count()) throw format_error("count exceeds the number of grid cells");
    return h;
}

void expect_end(std::istream& in) {
    if (in.peek() != std::char_traits<char>::eof()) throw format_error("trailing bytes after payload");
}

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw format_error("cannot open " + path + " for writing");
    return f;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw format_error("cannot open " + path);
    return f;
}

}  // namespace

void write_set(std::ostream& out, const GridSet& s) {
    put_header(out, "GSET", s.grid, s.cells.size());
    for (auto c : s.cells) put_bytes(out, c, 8);
}

GridSet read_set(std::istream& in) {
    const auto magic = get_magic(in);
    if (magic != "GSET") throw format_error("bad magic '" + magic + "' (expected GSET)");
    const auto h = get_grid_header(in);
    std::vector<std::uint64_t> cells(h.count);
    for (auto& c : cells) {
        c = get_bytes(in, 8, "cell index");
        if (c >= h.grid.cell_count()) throw format_error("cell index outside grid box");
        if (&c != cells.data() && c <= *(&c - 1)) throw format_error("cell indices not strictly increasing");
    }
    expect_end(in);
    return GridSet{h.grid, std::move(cells)};
}

void write_measure(std::ostream& out, const GridMeasure& mu, bool complex_plane) {
    if (complex_plane && mu.grid.n != 2) throw domain_error("complex measures need n = 2");
    put_header(out, complex_plane ? "CPLX" : "GMES", mu.grid, mu.cells.size());
    for (std::size_t k = 0; k < mu.cells.size(); ++k) {
        put_bytes(out, mu.cells[k], 8);
        put_f64(out, mu.weights[k]);
    }
}

GridMeasure read_measure(std::istream& in, bool* is_complex) {
    const auto magic = get_magic(in);
    if (magic != "GMES" && magic != "CPLX") throw format_error("bad magic '" + magic + "' (expected GMES or CPLX)");
    const auto h = get_grid_header(in);
    if (magic == "CPLX" && h.grid.n != 2) throw format_error("CPLX file with n != 2");
    std::vector<std::uint64_t> cells(h.count);
    std::vector<double> w(h.count);
    for (std::uint64_t k = 0; k < h.count; ++k) {
        cells[k] = get_bytes(in, 8, "cell index");
        w[k] = get_f64(in, "weight");
        if (cells[k] >= h.grid.cell_count()) throw format_error("cell index outside grid box");
        if (k > 0 && cells[k] <= cells[k - 1]) throw format_error("cell indices not strictly increasing");
        if (!(w[k] > 0) || !std::isfinite(w[k])) throw format_error("weights must be finite and positive");
    }
    expect_end(in);
    if (is_complex) *is_complex = magic == "CPLX";
    try {
        return make_measure(h.grid, std::move(cells), std::move(w));
    } catch (const domain_error& e) {
        throw format_error(e.what());
    }
}

void write_frequency(std::ostream& out, const FrequencyField& f) {
    out.write("GFRQ", 4);
    put_bytes(out, kFormatVersion, 4);
    put_bytes(out, static_cast<std::uint64_t>(f.n), 1);
    for (int i = 0; i < f.n; ++i) put_bytes(out, f.period.d[i], 8);
    put_f64(out, f.grid_delta);
    put_f64(out, f.max_freq);
    put_f64(out, f.mass);
    for (const auto& v : f.values) {
        put_f64(out, v.real());
        put_f64(out, v.imag());
    }
}

FrequencyField read_frequency(std::istream& in) {
    const auto magic = get_magic(in);
    if (magic != "GFRQ") throw format_error("bad magic '" + magic + "' (expected GFRQ)");
    check_version(in);
    FrequencyField f;
    f.n = static_cast<int>(get_bytes(in, 1, "dimension"));
    if (f.n < 1 || f.n > kMaxDim) throw format_error("bad dimension in header");
    f.period.n = f.n;
    std::uint64_t total = 1;
    for (int i = 0; i < f.n; ++i) {
        f.period.d[i] = get_bytes(in, 8, "period");
        if (f.period.d[i] == 0) throw format_error("zero period extent");
        total *= f.period.d[i];
        check_budget(total, "frequency field");
    }
    f.grid_delta = get_f64(in, "grid delta");
    f.max_freq = get_f64(in, "max frequency");
    f.mass = get_f64(in, "mass");
    f.values.resize(total);
    for (auto& v : f.values) {
        const double re = get_f64(in, "values");
        v = cplx(re, get_f64(in, "values"));
    }
    expect_end(in);
    return f;
}

void store_set(const std::string& path, const GridSet& s) {
    auto f = open_out(path);
    write_set(f, s);
}
GridSet load_set(const std::string& path) {
    auto f = open_in(path);
    return read_set(f);
}
void store_measure(const std::string& path, const GridMeasure& mu, bool complex_plane) {
    auto f = open_out(path);
    write_measure(f, mu, complex_plane);
}
GridMeasure load_measure(const std::string& path, bool* is_complex) {
    auto f = open_in(path);
    return read_measure(f, is_complex);
}
void store_frequency(const std::string& path, const FrequencyField& f) {
    auto out = open_out(path);
    write_frequency(out, f);
}
FrequencyField load_frequency(const std::string& path) {
    auto f = open_in(path);
    return read_frequency(f);
}

void write_lattice(std::ostream& out, const LatticeSet& a) {
    out << a.n << ' ' << a.size() << '\n';
    for (const auto& p : a.points) {
        for (int i = 0; i < a.n; ++i) out << (i ? " " : "") << p[i];
        out << '\n';
    }
}

LatticeSet read_lattice(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw format_error("empty lattice file");
    std::istringstream head(line);
    long long n = 0, count = -1;
    if (!(head >> n >> count) || n < 1 || n > kMaxDim || count < 0)
        throw format_error("lattice header must be 'n count' with 1 <= n <= 4");
    std::vector<IVec> pts;
    pts.reserve(static_cast<std::size_t>(count));
    for (long long k = 0; k < count; ++k) {
        if (!std::getline(in, line)) throw format_error("lattice file ends after " + std::to_string(k) + " points");
        std::istringstream row(line);
        IVec p{};
        for (int i = 0; i < n; ++i) {
            long long v;
            if (!(row >> v)) throw format_error("lattice point " + std::to_string(k + 1) + " has too few coordinates");
            p[i] = v;
        }
        std::string extra;
        if (row >> extra) throw format_error("lattice point " + std::to_string(k + 1) + " has extra fields");
        pts.push_back(p);
    }
    while (std::getline(in, line))
        if (line.find_first_not_of(" \t\r") != std::string::npos) throw format_error("extra lines after lattice points");
    return make_lattice(static_cast<int>(n), std::move(pts));
}

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t h) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i, h >>= 4) s[static_cast<std::size_t>(i)] = digits[h & 0xF];
    return s;
}

}  // namespace sumprod
