#include "sumprod/experiment.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "sumprod/complex.hpp"
#include "sumprod/fourier.hpp"
#include "sumprod/io.hpp"
#include "sumprod/lattice.hpp"
#include "sumprod/set_calculus.hpp"

namespace sumprod {

namespace {

using json = nlohmann::json;

constexpr const char* kVersion = "sumprod 0.1.0";

const std::map<std::string, ExperimentKind>& kinds() {
    static const std::map<std::string, ExperimentKind> table{
        {"nonconc", ExperimentKind::nonconc},           {"energy", ExperimentKind::energy},
        {"growth", ExperimentKind::growth},             {"flatten", ExperimentKind::flatten},
        {"decay", ExperimentKind::decay},               {"sigma", ExperimentKind::sigma},
        {"schedule", ExperimentKind::schedule},         {"complex-decay", ExperimentKind::complex_decay},
        {"oracle-suite", ExperimentKind::oracle_suite},
    };
    return table;
}

// Reads fields of one JSON object and rejects keys nobody asked for.
class Fields {
public:
    Fields(const json& obj, std::string where) : obj_(obj), where_(std::move(where)) {
        if (!obj_.is_object()) throw config_error(where_ + " must be a JSON object");
    }

    template <class T>
    bool get(const char* key, T& into) {
        seen_.insert(key);
        auto it = obj_.find(key);
        if (it == obj_.end()) return false;
        try {
            into = it->template get<T>();
        } catch (const json::exception&) {
            throw config_error(path(key) + " has the wrong type (got " + it->type_name() + ")");
        }
        return true;
    }

    const json* raw(const char* key) {
        seen_.insert(key);
        auto it = obj_.find(key);
        return it == obj_.end() ? nullptr : &*it;
    }

    std::string path(const std::string& key) const { return where_ + "." + key; }

    void finish() const {
        for (auto it = obj_.begin(); it != obj_.end(); ++it)
            if (!seen_.count(it.key())) throw config_error("unknown field " + path(it.key()));
    }

private:
    const json& obj_;
    std::string where_;
    std::set<std::string> seen_;
};

Vec read_vec(const json& v, int n, const std::string& where) {
    Vec out{};
    if (v.is_number()) {
        for (int i = 0; i < n; ++i) out[i] = v.get<double>();
        return out;
    }
    if (!v.is_array() || v.size() != static_cast<std::size_t>(n) || !std::all_of(v.begin(), v.end(), [](auto& e) {
            return e.is_number();
        }))
        throw config_error(where + " must be a number or an array of " + std::to_string(n) + " numbers");
    for (int i = 0; i < n; ++i) out[i] = v[static_cast<std::size_t>(i)].get<double>();
    return out;
}

MeasureSpec read_measure_spec(const json& j, const std::string& where) {
    Fields f(j, where);
    MeasureSpec s;
    std::string family;
    if (!f.get("family", family)) throw config_error(where + ".family is required");
    try {
        s.family = parse_family(family);
    } catch (const lab_error& e) {
        throw config_error(f.path("family") + ": " + e.what());
    }
    f.get("n", s.n);
    if (s.family == Family::complex_cantor) s.n = 2;
    if (s.n < 1 || s.n > kMaxDim) throw config_error(f.path("n") + " must be in 1..4");
    f.get("m", s.m);
    if (s.m < 0 || s.m > 40) throw config_error(f.path("m") + " must be in 0..40");
    if (auto* v = f.raw("box_lo")) s.box_lo = read_vec(*v, s.n, f.path("box_lo"));
    if (auto* v = f.raw("box_hi")) s.box_hi = read_vec(*v, s.n, f.path("box_hi"));
    f.get("ratio", s.ratio);
    f.get("depth", s.depth);
    if (auto* v = f.raw("factors")) {
        if (!v->is_array()) throw config_error(f.path("factors") + " must be an array");
        for (std::size_t i = 0; i < v->size(); ++i)
            s.factors.push_back(read_measure_spec((*v)[i], f.path("factors[" + std::to_string(i) + "]")));
    }
    if (auto* v = f.raw("maps")) {
        if (!v->is_array()) throw config_error(f.path("maps") + " must be an array");
        for (std::size_t i = 0; i < v->size(); ++i) {
            const auto where_i = f.path("maps[" + std::to_string(i) + "]");
            Fields mf((*v)[i], where_i);
            AffineMap am;
            const json* sc = mf.raw("scale");
            const json* sh = mf.raw("shift");
            if (!sc || !sh) throw config_error(where_i + " needs scale and shift");
            am.scale = read_vec(*sc, s.n, where_i + ".scale");
            am.shift = read_vec(*sh, s.n, where_i + ".shift");
            mf.finish();
            s.maps.push_back(am);
        }
    }
    f.get("map_weights", s.map_weights);
    if (auto* v = f.raw("points")) {
        if (!v->is_array()) throw config_error(f.path("points") + " must be an array");
        for (std::size_t i = 0; i < v->size(); ++i)
            s.points.push_back(read_vec((*v)[i], s.n, f.path("points[" + std::to_string(i) + "]")));
    }
    f.get("point_weights", s.point_weights);
    f.get("kappa", s.kappa);
    f.get("seed", s.seed);
    f.get("radius_lo", s.radius_lo);
    f.get("radius_hi", s.radius_hi);
    f.finish();
    return s;
}

json vec_json(const Vec& v, int n) {
    json a = json::array();
    for (int i = 0; i < n; ++i) a.push_back(v[i]);
    return a;
}

json spec_json(const MeasureSpec& s) {
    json j;
    j["family"] = family_name(s.family);
    j["n"] = s.n;
    j["m"] = s.m;
    j["box_lo"] = vec_json(s.box_lo, s.n);
    j["box_hi"] = vec_json(s.box_hi, s.n);
    switch (s.family) {
        case Family::cantor:
            j["ratio"] = s.ratio;
            j["depth"] = s.depth;
            break;
        case Family::product:
            j["factors"] = json::array();
            for (const auto& f : s.factors) j["factors"].push_back(spec_json(f));
            break;
        case Family::ifs:
            j["depth"] = s.depth;
            j["maps"] = json::array();
            for (const auto& m : s.maps) j["maps"].push_back({{"scale", vec_json(m.scale, s.n)}, {"shift", vec_json(m.shift, s.n)}});
            j["map_weights"] = s.map_weights;
            break;
        case Family::uniform:
            break;
        case Family::atoms:
            j["points"] = json::array();
            for (const auto& p : s.points) j["points"].push_back(vec_json(p, s.n));
            j["point_weights"] = s.point_weights;
            break;
        case Family::random:
            j["kappa"] = s.kappa;
            j["depth"] = s.depth;
            j["seed"] = s.seed;
            break;
        case Family::complex_cantor:
            j["ratio"] = s.ratio;
            j["depth"] = s.depth;
            j["radius_lo"] = s.radius_lo;
            j["radius_hi"] = s.radius_hi;
            break;
    }
    return j;
}

void check_grid_budget(const MeasureSpec& s, const std::string& where) {
    const int bits = s.m * s.n;
    if (bits >= 63 || (1ULL << bits) > cell_budget())
        throw budget_error(where + ": 2^(m n) = 2^" + std::to_string(bits) + " cells exceed the budget",
                           bits >= 63 ? ~0ULL : (1ULL << bits));
}

double analysis_delta(const ExperimentConfig& cfg) {
    return cfg.delta > 0 ? cfg.delta : std::ldexp(4.0, -cfg.measure.m);
}

std::vector<double> default_scales(int m) {
    std::vector<double> s;
    for (int j = 2; j <= std::max(2, m - 4); ++j) s.push_back(std::ldexp(1.0, -j));
    return s;
}

struct Output {
    std::string name;
    std::string bytes;
};

std::string join_rows(const std::string& header, const std::vector<std::string>& rows) {
    std::string s = header + "\n";
    for (const auto& r : rows) s += r + "\n";
    return s;
}

void set_stage(std::string* stage, const char* name) {
    if (stage) *stage = name;
}

std::vector<Output> run_kind(const ExperimentConfig& cfg, ExperimentResult& res, std::string* stage) {
    const std::string kind = kind_name(cfg.kind);
    std::vector<Output> out;
    auto synth = [&](const MeasureSpec& s) {
        set_stage(stage, "synth");
        auto mu = synth_measure(s);
        set_stage(stage, "compute");
        return mu;
    };

    switch (cfg.kind) {
        case ExperimentKind::nonconc: {
            auto mu = synth(cfg.measure);
            const auto scales = cfg.scales.empty() ? default_scales(cfg.measure.m) : cfg.scales;
            auto r = projective_nonconcentration(mu, scales, cfg.directions);
            std::vector<std::string> rows, dat;
            for (std::size_t i = 0; i < r.scales.size(); ++i) {
                rows.push_back(fmt_num(r.scales[i]) + "," + fmt_num(r.sup_mass[i]) + "," + fmt_num(r.worst_offset[i]));
                dat.push_back(fmt_num(std::log(r.scales[i])) + " " + fmt_num(std::log(r.sup_mass[i])));
            }
            out.push_back({kind + ".csv", join_rows("rho,sup_mass,worst_offset", rows)});
            out.push_back({kind + "_fit.csv", join_rows("kappa_hat,eps_hat,bin_width,net_slack,directions",
                                                        {fmt_num(r.kappa_hat) + "," + fmt_num(r.eps_hat) + "," +
                                                         fmt_num(r.bin_width) + "," + fmt_num(r.net_slack) + "," +
                                                         std::to_string(r.directions.size())})});
            out.push_back({kind + ".dat", join_rows("# log_rho log_sup_mass", dat)});
            res.summary.push_back("kappa_hat " + fmt_num(r.kappa_hat) + ", eps_hat " + fmt_num(r.eps_hat));
            break;
        }
        case ExperimentKind::energy: {
            auto a = support(synth(cfg.measure));
            auto b = cfg.second ? support(synth(*cfg.second)) : a;
            auto e = additive_energy_grid(a, b, cfg.pair_cap);
            const std::string pc = e.pair_count ? fmt_num(*e.pair_count) : "";
            out.push_back({kind + ".csv", join_rows("n_A,n_B,fft_estimate,pair_count",
                                                    {std::to_string(a.size()) + "," + std::to_string(b.size()) + "," +
                                                     fmt_num(e.fft_estimate) + "," + pc})});
            res.summary.push_back("fft_estimate " + fmt_num(e.fft_estimate));
            break;
        }
        case ExperimentKind::growth: {
            auto a = support(synth(cfg.measure));
            auto x = cfg.second ? support(synth(*cfg.second)) : a;
            auto g = growth_statistic(a, x, cfg.samples, *cfg.seed, cfg.threads);
            out.push_back({kind + ".csv", join_rows(growth_csv_header(g.n), {growth_csv_row(g)})});
            res.summary.push_back("ratio " + fmt_num(g.ratio) + ", eps_hat " + fmt_num(g.eps_hat));
            break;
        }
        case ExperimentKind::flatten: {
            auto mu = synth(cfg.measure);
            auto nu = cfg.symmetrize ? mix(mu, reflect(mu), 0.5) : mu;
            const double d1 = cfg.delta1 > 0 ? cfg.delta1 : mu.grid.delta();
            auto f = flattening_integral(nu, d1, cfg.samples, *cfg.seed, cfg.threads);
            out.push_back({kind + ".csv", join_rows(flattening_csv_header(), {flattening_csv_row(f)})});
            res.summary.push_back("eps_hat " + fmt_num(f.eps_hat) + ", ratio " + fmt_num(f.ratio));
            break;
        }
        case ExperimentKind::decay: {
            auto mu = synth(cfg.measure);
            const double delta = analysis_delta(cfg);
            std::vector<std::string> rows, dat;
            for (int k : cfg.ks) {
                auto r = decay_sup(mu, k, delta);
                rows.push_back(decay_csv_row(r));
                dat.push_back(std::to_string(k) + " " + fmt_num(r.sup));
                res.summary.push_back("k=" + std::to_string(k) + " sup " + fmt_num(r.sup));
            }
            out.push_back({kind + ".csv", join_rows(decay_csv_header(mu.grid.n), rows)});
            out.push_back({kind + ".dat", join_rows("# k sup", dat)});
            break;
        }
        case ExperimentKind::sigma: {
            auto mu = synth(cfg.measure);
            const double delta = analysis_delta(cfg);
            auto t = sigma_table(mu, cfg.ks, cfg.rs, delta);
            std::vector<std::string> rows, dat;
            for (const auto& row : t.rows) {
                rows.push_back(std::to_string(row.k) + "," + std::to_string(row.r) + "," + fmt_num(row.sigma));
                dat.push_back(std::to_string(row.k) + " " + std::to_string(row.r) + " " + fmt_num(row.sigma));
            }
            out.push_back({kind + ".csv", join_rows("k,r,sigma", rows)});
            out.push_back({kind + ".dat", join_rows("# k r sigma", dat)});
            auto d = sigma_decrement_experiment(mu, cfg.k, cfg.r, delta);
            out.push_back({kind + "_decrement.csv", join_rows(sigma_csv_header(), {sigma_csv_row(d)})});
            res.summary.push_back("decrement " + fmt_num(d.decrement));
            break;
        }
        case ExperimentKind::schedule: {
            set_stage(stage, "compute");
            auto parse = [](const std::string& field, const std::string& v) {
                try {
                    return Rational::parse(v);
                } catch (const lab_error& e) {
                    throw config_error(field + ": " + e.what());
                }
            };
            auto s = schedule_exponents(parse("kappa0", cfg.kappa0), cfg.measure.n, cfg.r, parse("eps", cfg.eps),
                                        parse("eps2", cfg.eps2), cfg.k, cfg.chain);
            std::vector<std::string> rows;
            auto add = [&](const std::string& key, const Rational& q) {
                rows.push_back(key + "," + q.str() + "," + fmt_num(q.value()));
            };
            add("kappa0", s.kappa0);
            add("kappa1", s.kappa1);
            add("eps", s.eps);
            add("eps1", s.eps1);
            add("eps1_lower", s.eps1_lower);
            add("eps3", s.eps3);
            for (std::size_t i = 0; i < s.r_chain.size(); ++i)
                add("r" + std::to_string(i), Rational::make(s.r_chain[i]));
            out.push_back({kind + ".csv", join_rows("quantity,exact,value", rows)});
            res.summary.push_back("eps1 " + s.eps1.str() + ", eps3 " + s.eps3.str());
            break;
        }
        case ExperimentKind::complex_decay: {
            if (cfg.measure.n != 2) throw config_error("complex-decay needs a measure with n = 2");
            auto mu = synth(cfg.measure);
            const double delta = analysis_delta(cfg);
            std::vector<std::string> rows, dat;
            for (int k : cfg.ks) {
                auto r = complex_decay_sup(mu, k, delta);
                rows.push_back(decay_csv_row(r));
                dat.push_back(std::to_string(k) + " " + fmt_num(r.sup));
                res.summary.push_back("k=" + std::to_string(k) + " sup " + fmt_num(r.sup));
            }
            out.push_back({kind + ".csv", join_rows(decay_csv_header(2), rows)});
            out.push_back({kind + ".dat", join_rows("# k sup", dat)});
            break;
        }
        case ExperimentKind::oracle_suite: {
            set_stage(stage, "compute");
            const std::int64_t span = 4 * cfg.max_size;
            const std::uint64_t seed = *cfg.seed;
            std::vector<std::string> rows(static_cast<std::size_t>(cfg.instances));
            std::vector<int> ok(static_cast<std::size_t>(cfg.instances), 1);
            parallel_for(static_cast<std::size_t>(cfg.instances), cfg.threads, [&](std::size_t i) {
                auto size = [&](std::uint64_t c) {
                    return 1 + static_cast<std::size_t>(counter_uniform(seed, (i << 8) + c) * cfg.max_size);
                };
                auto a = random_lattice(cfg.lattice_dim, size(0), span, seed, 3 * i + 1);
                auto b = random_lattice(cfg.lattice_dim, size(1), span, seed, 3 * i + 2);
                auto c = random_lattice(cfg.lattice_dim, size(2), span, seed, 3 * i + 3);
                std::string lines;
                auto emit = [&](const char* check, double lhs, double rhs, bool pass) {
                    lines += std::to_string(i) + "," + check + "," + fmt_num(lhs) + "," + fmt_num(rhs) + "," +
                             (pass ? "1" : "0") + "\n";
                    if (!pass) ok[i] = 0;
                };
                const auto conv = energy_via_convolution(a, b), direct = energy_via_enumeration(a, b);
                emit("energy_exact", static_cast<double>(conv), static_cast<double>(direct), conv == direct);
                const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
                emit("energy_upper", static_cast<double>(conv), std::pow(na * nb, 1.5),
                     static_cast<double>(conv) <= std::pow(na * nb, 1.5));
                const double sum = static_cast<double>(exact_sumset(a, b).size());
                emit("energy_lower", static_cast<double>(conv) * sum, na * na * nb * nb,
                     static_cast<double>(conv) * sum >= na * na * nb * nb);
                const auto rz = ruzsa_triangle_check(a, b, c);
                emit("ruzsa_triangle", static_cast<double>(rz.lhs), static_cast<double>(rz.rhs), rz.pass);
                const auto pl = plunnecke_check(a, b, 2, 1);
                emit("plunnecke", static_cast<double>(pl.lhs), pl.rhs, pl.pass);
                lines.pop_back();
                rows[i] = lines;
            });
            out.push_back({kind + ".csv", join_rows("instance,check,lhs,rhs,pass", rows)});
            int passed = 0;
            for (int v : ok) passed += v;
            res.all_pass = passed == cfg.instances;
            res.summary.push_back(std::to_string(passed) + "/" + std::to_string(cfg.instances) + " instances pass");
            break;
        }
    }
    return out;
}

}  // namespace

std::string kind_name(ExperimentKind k) {
    for (const auto& [name, kind] : kinds())
        if (kind == k) return name;
    return "?";
}

ExperimentKind parse_kind(const std::string& s) {
    auto it = kinds().find(s);
    if (it == kinds().end()) {
        std::string known;
        for (const auto& [name, kind] : kinds()) known += (known.empty() ? "" : ", ") + name;
        throw config_error("unknown experiment '" + s + "' (known: " + known + ")");
    }
    return it->second;
}

bool is_sampled(ExperimentKind k) {
    return k == ExperimentKind::growth || k == ExperimentKind::flatten || k == ExperimentKind::oracle_suite;
}

ExperimentConfig parse_config(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw config_error(std::string("config is not valid JSON: ") + e.what());
    }
    Fields f(root, "config");
    ExperimentConfig cfg;
    f.get("schema", cfg.schema);
    if (cfg.schema != kConfigSchema)
        throw config_error("config.schema " + std::to_string(cfg.schema) + " is not supported (expected " +
                           std::to_string(kConfigSchema) + ")");
    std::string kind;
    if (!f.get("experiment", kind)) throw config_error("config.experiment is required");
    cfg.kind = parse_kind(kind);
    if (auto* m = f.raw("measure"))
        cfg.measure = read_measure_spec(*m, "config.measure");
    else if (cfg.kind != ExperimentKind::schedule && cfg.kind != ExperimentKind::oracle_suite)
        throw config_error("config.measure is required for " + kind);
    if (auto* m = f.raw("second")) cfg.second = read_measure_spec(*m, "config.second");
    f.get("scales", cfg.scales);
    f.get("directions", cfg.directions);
    f.get("ks", cfg.ks);
    f.get("rs", cfg.rs);
    f.get("delta", cfg.delta);
    f.get("delta1", cfg.delta1);
    f.get("symmetrize", cfg.symmetrize);
    f.get("samples", cfg.samples);
    std::uint64_t seed = 0;
    if (f.get("seed", seed)) cfg.seed = seed;
    f.get("pair_cap", cfg.pair_cap);
    f.get("kappa0", cfg.kappa0);
    f.get("eps", cfg.eps);
    f.get("eps2", cfg.eps2);
    f.get("r", cfg.r);
    f.get("k", cfg.k);
    f.get("chain", cfg.chain);
    f.get("instances", cfg.instances);
    f.get("max_size", cfg.max_size);
    f.get("lattice_dim", cfg.lattice_dim);
    f.get("out", cfg.out_dir);
    f.get("threads", cfg.threads);
    f.finish();

    if (cfg.samples < 1) throw config_error("config.samples must be positive");
    if (cfg.threads < 1) throw config_error("config.threads must be positive");
    if (cfg.instances < 1 || cfg.max_size < 1) throw config_error("config.instances and config.max_size must be positive");
    if (cfg.lattice_dim < 1 || cfg.lattice_dim > kMaxDim) throw config_error("config.lattice_dim must be in 1..4");
    for (double s : cfg.scales)
        if (!(s > 0 && s < 1)) throw config_error("config.scales must lie in (0, 1)");
    if (cfg.delta < 0 || cfg.delta1 < 0) throw config_error("config.delta and config.delta1 must be nonnegative");
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot read config " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string canonical_config(const ExperimentConfig& cfg) {
    json j;
    j["schema"] = cfg.schema;
    j["experiment"] = kind_name(cfg.kind);
    j["measure"] = spec_json(cfg.measure);
    if (cfg.second) j["second"] = spec_json(*cfg.second);
    j["scales"] = cfg.scales;
    j["directions"] = cfg.directions;
    j["ks"] = cfg.ks;
    j["rs"] = cfg.rs;
    j["delta"] = cfg.delta;
    j["delta1"] = cfg.delta1;
    j["symmetrize"] = cfg.symmetrize;
    j["samples"] = cfg.samples;
    j["seed"] = cfg.seed ? json(*cfg.seed) : json(nullptr);
    j["pair_cap"] = cfg.pair_cap;
    j["kappa0"] = cfg.kappa0;
    j["eps"] = cfg.eps;
    j["eps2"] = cfg.eps2;
    j["r"] = cfg.r;
    j["k"] = cfg.k;
    j["chain"] = cfg.chain;
    j["instances"] = cfg.instances;
    j["max_size"] = cfg.max_size;
    j["lattice_dim"] = cfg.lattice_dim;
    return j.dump();
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, std::string* stage) {
    set_stage(stage, "validate");
    if (is_sampled(cfg.kind) && !cfg.seed)
        throw config_error("experiment " + kind_name(cfg.kind) + " draws samples and needs a seed");
    if (cfg.kind != ExperimentKind::schedule && cfg.kind != ExperimentKind::oracle_suite) {
        check_grid_budget(cfg.measure, "measure");
        if (cfg.second) check_grid_budget(*cfg.second, "second");
    }

    ExperimentResult res;
    auto outputs = run_kind(cfg, res, stage);

    set_stage(stage, "write");
    std::error_code ec;
    std::filesystem::create_directories(cfg.out_dir, ec);
    if (ec) throw format_error("cannot create output directory " + cfg.out_dir + ": " + ec.message());
    json manifest;
    manifest["schema"] = kConfigSchema;
    manifest["experiment"] = kind_name(cfg.kind);
    manifest["version"] = kVersion;
    const auto canon = canonical_config(cfg);
    manifest["config_hash"] = hex64(fnv1a(canon));
    manifest["seed"] = cfg.seed ? json(*cfg.seed) : json(nullptr);
    manifest["files"] = json::array();
    for (const auto& o : outputs) {
        const auto path = (std::filesystem::path(cfg.out_dir) / o.name).string();
        std::ofstream f(path, std::ios::binary);
        f << o.bytes;
        if (!f) throw format_error("cannot write " + path);
        manifest["files"].push_back({{"name", o.name}, {"bytes", o.bytes.size()}, {"fnv1a", hex64(fnv1a(o.bytes))}});
        res.files.push_back(path);
    }
    const auto mpath = (std::filesystem::path(cfg.out_dir) / "manifest.json").string();
    std::ofstream mf(mpath, std::ios::binary);
    mf << manifest.dump(2) << "\n";
    if (!mf) throw format_error("cannot write " + mpath);
    res.files.push_back(mpath);
    set_stage(stage, "done");
    return res;
}

}  // namespace sumprod
