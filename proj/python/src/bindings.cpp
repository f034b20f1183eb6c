#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "sumprod/complex.hpp"
#include "sumprod/experiment.hpp"
#include "sumprod/fourier.hpp"
#include "sumprod/lattice.hpp"
#include "sumprod/synth.hpp"

namespace py = pybind11;
using namespace sumprod;

namespace {

Vec to_vec(const std::vector<double>& v) {
    if (v.size() > kMaxDim) throw domain_error("at most 4 coordinates");
    Vec out{};
    std::copy(v.begin(), v.end(), out.begin());
    return out;
}

LatticeSet to_lattice(const std::vector<std::vector<std::int64_t>>& pts) {
    if (pts.empty()) throw domain_error("empty point list");
    const auto n = static_cast<int>(pts.front().size());
    std::vector<IVec> v;
    for (const auto& p : pts) {
        if (static_cast<int>(p.size()) != n) throw domain_error("points differ in dimension");
        IVec x{};
        std::copy(p.begin(), p.end(), x.begin());
        v.push_back(x);
    }
    return make_lattice(n, std::move(v));
}

MultPath parse_path(const std::string& s) {
    if (s == "auto") return MultPath::automatic;
    if (s == "fast") return MultPath::fast;
    if (s == "pairwise") return MultPath::pairwise;
    throw domain_error("path must be auto, fast or pairwise");
}

py::dict decay_dict(const DecayReport& r) {
    py::dict d;
    d["k"] = r.k;
    d["delta"] = r.delta;
    d["sup"] = r.sup;
    d["eps1_hat"] = r.eps1_hat;
    d["argmax"] = std::vector<double>(r.argmax.begin(), r.argmax.begin() + r.n);
    d["slack"] = r.slack;
    d["slack_ok"] = r.slack_ok;
    return d;
}

}  // namespace

PYBIND11_MODULE(_impl, m) {
    m.doc() = "Discretized sum-product measure lab";

    py::register_exception<config_error>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<budget_error>(m, "BudgetError", PyExc_MemoryError);
    py::register_exception<mode_error>(m, "ModeError", PyExc_ValueError);
    py::register_exception<format_error>(m, "FormatError", PyExc_ValueError);
    py::register_exception<domain_error>(m, "DomainError", PyExc_ValueError);

    py::class_<GridMeasure>(m, "GridMeasure")
        .def_property_readonly("n", [](const GridMeasure& g) { return g.grid.n; })
        .def_property_readonly("m", [](const GridMeasure& g) { return g.grid.m; })
        .def_property_readonly("delta", [](const GridMeasure& g) { return g.grid.delta(); })
        .def_property_readonly("mass", [](const GridMeasure& g) { return g.mass; })
        .def_property_readonly("weights", [](const GridMeasure& g) { return py::array_t<double>(g.weights.size(), g.weights.data()); })
        .def("centers", [](const GridMeasure& g) {
            py::array_t<double> out({g.size(), static_cast<std::size_t>(g.grid.n)});
            auto a = out.mutable_unchecked<2>();
            for (std::size_t k = 0; k < g.size(); ++k) {
                const Vec x = g.center(k);
                for (int i = 0; i < g.grid.n; ++i) a(k, i) = x[i];
            }
            return out;
        })
        .def("__len__", &GridMeasure::size);

    m.def(
        "synth",
        [](const std::string& family, int n, int m_, double ratio, int depth, double kappa, std::uint64_t seed) {
            MeasureSpec s;
            s.family = parse_family(family);
            s.n = n;
            s.m = m_;
            s.ratio = ratio;
            s.depth = depth;
            s.kappa = kappa;
            s.seed = seed;
            return synth_measure(s);
        },
        py::arg("family"), py::arg("n") = 1, py::arg("m") = 10, py::arg("ratio") = 1.0 / 3, py::arg("depth") = 8,
        py::arg("kappa") = 0.5, py::arg("seed") = 1);
    m.def("point_mass", [](int n, int m_, const std::vector<double>& x) { return point_mass(n, m_, to_vec(x)); });
    m.def("total_variation", &total_variation);
    m.def("reflect", &reflect);
    m.def("mix", &mix);
    m.def("symmetrize", &symmetrize);
    m.def("additive_convolve", [](const GridMeasure& a, const GridMeasure& b) { return additive_convolve(a, b); });
    m.def(
        "multiplicative_convolve",
        [](const GridMeasure& a, const GridMeasure& b, const std::string& path) {
            return multiplicative_convolve(a, b, {parse_path(path)});
        },
        py::arg("a"), py::arg("b"), py::arg("path") = "auto");
    m.def("transform_at", [](const GridMeasure& mu, const std::vector<double>& xi) { return transform_at(mu, to_vec(xi)); });

    m.def("nonconcentration", [](const GridMeasure& mu, const std::vector<double>& rhos, int directions) {
        auto r = projective_nonconcentration(mu, rhos, directions);
        py::dict d;
        d["sup_mass"] = r.sup_mass;
        d["kappa_hat"] = r.kappa_hat;
        d["eps_hat"] = r.eps_hat;
        return d;
    });
    m.def(
        "decay_sup", [](const GridMeasure& mu, int k, double delta, bool strict) { return decay_dict(decay_sup(mu, k, delta, strict)); },
        py::arg("mu"), py::arg("k"), py::arg("delta"), py::arg("strict") = true);
    m.def(
        "flattening",
        [](const GridMeasure& nu, double delta1, int samples, std::uint64_t seed, int threads) {
            auto r = flattening_integral(nu, delta1, samples, seed, threads);
            py::dict d;
            d["lhs"] = r.lhs;
            d["rhs"] = r.rhs;
            d["ratio"] = r.ratio;
            d["eps_hat"] = r.eps_hat;
            return d;
        },
        py::arg("nu"), py::arg("delta1"), py::arg("samples") = 64, py::arg("seed") = 1, py::arg("threads") = 1);

    m.def("exact_energy", [](const std::vector<std::vector<std::int64_t>>& a, const std::vector<std::vector<std::int64_t>>& b) {
        return exact_energy(to_lattice(a), to_lattice(b));
    });
    m.def("sumset_size", [](const std::vector<std::vector<std::int64_t>>& a, const std::vector<std::vector<std::int64_t>>& b) {
        return exact_sumset(to_lattice(a), to_lattice(b)).size();
    });

    m.def(
        "schedule",
        [](const std::string& kappa0, int n, int r, const std::string& eps, const std::string& eps2, int k) {
            auto s = schedule_exponents(Rational::parse(kappa0), n, r, Rational::parse(eps), Rational::parse(eps2), k);
            py::dict d;
            d["kappa1"] = s.kappa1.str();
            d["eps"] = s.eps.str();
            d["eps1"] = s.eps1.str();
            d["eps1_lower"] = s.eps1_lower.str();
            d["eps3"] = s.eps3.str();
            d["r_chain"] = s.r_chain;
            return d;
        },
        py::arg("kappa0"), py::arg("n"), py::arg("r"), py::arg("eps"), py::arg("eps2"), py::arg("k"));

    m.def(
        "run_experiment",
        [](const std::string& config_json, const std::string& out_dir, int threads) {
            auto cfg = parse_config(config_json);
            cfg.out_dir = out_dir;
            cfg.threads = threads;
            ExperimentResult res;
            {
                py::gil_scoped_release release;
                res = run_experiment(cfg);
            }
            py::dict d;
            d["all_pass"] = res.all_pass;
            d["files"] = res.files;
            d["summary"] = res.summary;
            return d;
        },
        py::arg("config_json"), py::arg("out_dir"), py::arg("threads") = 1);
}
