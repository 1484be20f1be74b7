#pragma once

// Experiment drivers: JSON-configured test families, the equivalence /
// decomposition / operator runs behind the CLI, and deterministic CSV + JSON
// emission (same config and seed give byte-identical output at any thread
// count).

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "aniso/atoms.hpp"
#include "aniso/czd.hpp"
#include "aniso/cz_operators.hpp"
#include "aniso/filter_bank.hpp"
#include "aniso/grid_io.hpp"
#include "aniso/maximal.hpp"
#include "aniso/parallel.hpp"
#include "aniso/rng.hpp"

namespace aniso {

using json = nlohmann::json;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FamilySpec {
    int count = 8;
    std::uint64_t seed = 1;
    std::vector<std::string> kinds = {"gaussian", "bump", "band", "atom"};
};

struct ExperimentConfig {
    std::vector<double> anisotropy = {1.0, 2.0};
    std::vector<std::vector<double>> exponents = {{0.75, 0.75}};
    std::vector<std::size_t> dims = {256, 256};
    std::vector<double> half_widths = {4.0, 4.0};
    int k_min = -6, k_max = 2;
    FamilySpec family;
    std::string operator_type = "riesz";
    double operator_delta = 1.0;
    double operator_beta = 0.5;
    double ratio_spread_bound = 10.0;
    int atom_moment_order = -1;  // -1: use min_moment_order
    std::string out_dir = ".";
    int threads = 0;

    Anisotropy aniso() const { return Anisotropy(anisotropy); }
};

inline ExperimentConfig parse_config(const json& j) {
    ExperimentConfig c;
    try {
        if (j.contains("anisotropy")) c.anisotropy = j.at("anisotropy").get<std::vector<double>>();
        if (j.contains("exponents"))
            c.exponents = j.at("exponents").get<std::vector<std::vector<double>>>();
        if (j.contains("grid")) {
            c.dims = j.at("grid").at("dims").get<std::vector<std::size_t>>();
            c.half_widths = j.at("grid").at("half_widths").get<std::vector<double>>();
        }
        if (j.contains("scales")) {
            c.k_min = j.at("scales").at("k_min").get<int>();
            c.k_max = j.at("scales").at("k_max").get<int>();
        }
        if (j.contains("family")) {
            const json& f = j.at("family");
            if (f.contains("count")) c.family.count = f.at("count").get<int>();
            if (f.contains("seed")) c.family.seed = f.at("seed").get<std::uint64_t>();
            if (f.contains("kinds")) c.family.kinds = f.at("kinds").get<std::vector<std::string>>();
        }
        if (j.contains("operator")) {
            const json& o = j.at("operator");
            if (o.contains("type")) c.operator_type = o.at("type").get<std::string>();
            if (o.contains("delta")) c.operator_delta = o.at("delta").get<double>();
            if (o.contains("beta")) c.operator_beta = o.at("beta").get<double>();
        }
        if (j.contains("tolerances") && j.at("tolerances").contains("ratio_spread"))
            c.ratio_spread_bound = j.at("tolerances").at("ratio_spread").get<double>();
        if (j.contains("moment_order")) c.atom_moment_order = j.at("moment_order").get<int>();
        if (j.contains("out_dir")) c.out_dir = j.at("out_dir").get<std::string>();
        if (j.contains("threads")) c.threads = j.at("threads").get<int>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    // structural validation
    if (c.anisotropy.empty()) throw ConfigError("config: anisotropy must be nonempty");
    for (double a : c.anisotropy)
        if (!(a >= 1.0)) throw ConfigError("config: anisotropy entries must be >= 1");
    if (c.dims.size() != c.anisotropy.size() || c.half_widths.size() != c.anisotropy.size())
        throw ConfigError("config: grid dims/half_widths must match the dimension");
    for (std::size_t d : c.dims)
        if (!is_pow2(d)) throw ConfigError("config: grid dims must be powers of two");
    if (c.exponents.empty()) throw ConfigError("config: at least one exponent vector required");
    for (const auto& p : c.exponents) {
        if (p.size() != c.anisotropy.size()) throw ConfigError("config: exponent dimension mismatch");
        for (double v : p)
            if (!(v > 0.0)) throw ConfigError("config: exponents must be > 0");
    }
    if (c.k_max < c.k_min) throw ConfigError("config: scales.k_max < scales.k_min");
    if (c.family.count <= 0) throw ConfigError("config: family.count must be positive");
    for (const auto& k : c.family.kinds)
        if (k != "gaussian" && k != "bump" && k != "band" && k != "atom" && k != "atomsum")
            throw ConfigError("config: unknown family kind '" + k + "'");
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("config: cannot open '" + path + "'");
    json j;
    try {
        is >> j;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: parse failure: ") + e.what());
    }
    return parse_config(j);
}

// ---------------------------------------------------------------------------
// test families

namespace detail {

inline RealGrid family_gaussian(const RealGrid& shape, Rng& rng) {
    const int n = shape.ndim();
    std::vector<double> c(static_cast<std::size_t>(n)), w(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double L = shape.half_width(i);
        c[static_cast<std::size_t>(i)] = rng.uniform(-L / 4.0, L / 4.0);
        w[static_cast<std::size_t>(i)] = rng.uniform(0.25, 0.7) * L / 4.0;
    }
    RealGrid f = shape.like<double>();
    f.fill_from([&](std::span<const double> x) {
        double e = 0.0;
        for (int i = 0; i < n; ++i) {
            const double d = (x[static_cast<std::size_t>(i)] - c[static_cast<std::size_t>(i)]) / w[static_cast<std::size_t>(i)];
            e += d * d;
        }
        return std::exp(-kPi * e);
    });
    return f;
}

inline RealGrid family_bump(const RealGrid& shape, Rng& rng) {
    const int n = shape.ndim();
    std::vector<double> c(static_cast<std::size_t>(n)), w(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double L = shape.half_width(i);
        c[static_cast<std::size_t>(i)] = rng.uniform(-L / 4.0, L / 4.0);
        w[static_cast<std::size_t>(i)] = rng.uniform(0.4, 1.0) * L / 3.0;
    }
    RealGrid f = shape.like<double>();
    f.fill_from([&](std::span<const double> x) {
        double v = 1.0;
        for (int i = 0; i < n; ++i) {
            const double u = (x[static_cast<std::size_t>(i)] - c[static_cast<std::size_t>(i)]) / w[static_cast<std::size_t>(i)];
            if (std::abs(u) >= 1.0) return 0.0;
            v *= std::exp(-1.0 / (1.0 - u * u));
        }
        return v;
    });
    return f;
}

inline RealGrid family_band(const Anisotropy& an, const RealGrid& shape, Rng& rng, double lo,
                            double hi) {
    ComplexGrid spec = shape.like<cplx>();
    std::vector<double> xi(static_cast<std::size_t>(shape.ndim()));
    for (std::size_t f = 0; f < spec.size(); ++f) {
        freq_coords(shape, f, xi);
        const double q = quasi_norm(an, xi);
        if (q < lo || q > hi) continue;
        spec[f] = cplx(rng.normal(), rng.normal());
    }
    // Hermitian symmetrization gives a real field.
    ComplexGrid sym = spec;
    const auto& dims = shape.dims();
    std::vector<std::size_t> gi(dims.size()), mi(dims.size());
    for (std::size_t f = 0; f < spec.size(); ++f) {
        spec.unflatten(f, gi);
        for (std::size_t i = 0; i < dims.size(); ++i) mi[i] = (dims[i] - gi[i]) % dims[i];
        const std::size_t mf = spec.flat_index(mi);
        sym[f] = 0.5 * (spec[f] + std::conj(spec[mf]));
    }
    RealGrid out = from_spectrum_real(sym);
    const double n2 = l2_norm(out);
    if (n2 > 0.0) out *= 1.0 / n2;
    return out;
}

inline RealGrid family_atom(const Anisotropy& an, const ExponentVector& p, const RealGrid& shape,
                            Rng& rng, int s) {
    const int n = shape.ndim();
    std::vector<double> c(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) c[static_cast<std::size_t>(i)] = rng.uniform(-shape.half_width(i) / 4.0, shape.half_width(i) / 4.0);
    const double r = rng.uniform(0.4, 1.0);
    Atom a = random_atom(an, p, kInf, s, AnisoBall{c, r}, rng.raw(), shape.dims(), shape.half_widths());
    return a.to_grid();
}

// Sum of a few atoms at different scales and amplitudes: richer level-set
// structure while keeping every grid moment up to s exactly zero.
inline RealGrid family_atom_sum(const Anisotropy& an, const ExponentVector& p, const RealGrid& shape,
                                Rng& rng, int s) {
    const int n = shape.ndim();
    RealGrid f = shape.like<double>();
    const int pieces = 3;
    for (int q = 0; q < pieces; ++q) {
        std::vector<double> c(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i)
            c[static_cast<std::size_t>(i)] = rng.uniform(-shape.half_width(i) / 3.0, shape.half_width(i) / 3.0);
        const double r = rng.uniform(0.25, 0.9);
        const double amp = std::exp(rng.uniform(-1.5, 1.5));
        Atom a = random_atom(an, p, kInf, s, AnisoBall{c, r}, rng.raw(), shape.dims(), shape.half_widths());
        a.values.add_to(f, amp);
    }
    return f;
}

} // namespace detail

/// Deterministic per-index family: kind cycles through `kinds`, each member
/// drawn from an index-salted stream so parallel construction cannot change
/// the result.
inline std::vector<RealGrid> make_family(const Anisotropy& an, const ExponentVector& p,
                                         const RealGrid& shape, const FamilySpec& spec, int s,
                                         double band_lo = 0.5, double band_hi = 4.0) {
    std::vector<RealGrid> fam(static_cast<std::size_t>(spec.count));
    for (int i = 0; i < spec.count; ++i) {
        Rng rng(spec.seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(i) * 0x100000001b3ULL + 7u);
        const std::string& kind = spec.kinds[static_cast<std::size_t>(i) % spec.kinds.size()];
        if (kind == "gaussian") fam[static_cast<std::size_t>(i)] = detail::family_gaussian(shape, rng);
        else if (kind == "bump") fam[static_cast<std::size_t>(i)] = detail::family_bump(shape, rng);
        else if (kind == "band") fam[static_cast<std::size_t>(i)] = detail::family_band(an, shape, rng, band_lo, band_hi);
        else if (kind == "atomsum") fam[static_cast<std::size_t>(i)] = detail::family_atom_sum(an, p, shape, rng, s);
        else fam[static_cast<std::size_t>(i)] = detail::family_atom(an, p, shape, rng, s);
    }
    return fam;
}

// ---------------------------------------------------------------------------
// result tables

struct ResultTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
    std::map<std::string, double> summary;
    bool failed = false;
    std::string failure;

    static std::string fmt(double v) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return buf;
    }

    std::string to_csv() const {
        std::ostringstream os;
        for (std::size_t i = 0; i < columns.size(); ++i) os << (i ? "," : "") << columns[i];
        os << "\n";
        for (const auto& r : rows) {
            for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
            os << "\n";
        }
        return os.str();
    }

    json summary_json() const {
        json j;
        for (const auto& [k, v] : summary) j[k] = v;
        j["failed"] = failed;
        if (!failure.empty()) j["failure"] = failure;
        return j;
    }
};

namespace detail {

inline double spread(const std::vector<double>& v) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (double x : v) {
        if (!(x > 0.0)) continue;
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    return (std::isfinite(lo) && lo > 0.0) ? hi / lo : 0.0;
}

} // namespace detail

// ---------------------------------------------------------------------------
// drivers

/// Square-function / Hardy equivalence run: per (a, p) and test function,
/// hardy norms (grand and radial), ||S||, ||g||, ||g*_lambda||, with
/// per-exponent ratio spreads; fails the run if a spread exceeds the bound.
inline ResultTable run_equivalence(const ExperimentConfig& cfg) {
    const Anisotropy an = cfg.aniso();
    RealGrid shape(cfg.dims, cfg.half_widths);
    FilterBank bank = build_filter_bank(an, cfg.dims, cfg.half_widths, cfg.k_min, cfg.k_max);
    ResultTable table;
    table.columns = {"exponent", "function", "kind",    "hardy_grand", "hardy_radial",
                     "norm_S",   "norm_g",   "norm_gl", "band_residual", "provenance"};
    const ScaleSet scales = ScaleSet::dyadic(cfg.k_min, cfg.k_max);
    const SchwartzDictionary base = default_dictionary(an.dim());
    for (const auto& pv : cfg.exponents) {
        ExponentVector p(pv);
        const int s = cfg.atom_moment_order >= 0 ? cfg.atom_moment_order : min_moment_order(an, p);
        const double lambda = 1.0 + 2.0 / std::min(p.p_tilde_minus(), 2.0) + 1.0;
        MaximalConfig mcfg(an, p, scales, base);
        std::vector<RealGrid> family = make_family(an, p, shape, cfg.family, s);
        std::string pname;
        for (std::size_t i = 0; i < pv.size(); ++i) pname += (i ? "|" : "") + ResultTable::fmt(pv[i]);
        struct Row {
            double hg, hr, S, g, gl, resid;
            std::string kind;
        };
        std::vector<Row> rows(family.size());
        parallel_for(family.size(), [&](std::size_t fi) {
            RealGrid f = band_project(family[fi], bank);
            const double resid = l2_norm(family[fi]) > 0.0
                                     ? std::sqrt(std::max(0.0, std::pow(l2_norm(family[fi]), 2) -
                                                                   std::pow(l2_norm(f), 2))) /
                                           l2_norm(family[fi])
                                     : 0.0;
            Row r;
            r.kind = cfg.family.kinds[fi % cfg.family.kinds.size()];
            r.resid = resid;
            r.hg = hardy_norm(an, f, p, HardyMethod::Grand, mcfg);
            r.hr = hardy_norm(an, f, p, HardyMethod::Radial, mcfg);
            r.S = mixed_norm(area_function(f, bank), p);
            r.g = mixed_norm(g_function(f, bank), p);
            GLambdaOptions gopt;
            gopt.drop_truncated_scales = true;
            r.gl = mixed_norm(g_lambda(f, bank, lambda, gopt), p);
            rows[fi] = r;
        }, cfg.threads);
        std::vector<double> rS, rg, rgl, rgr;
        for (std::size_t fi = 0; fi < rows.size(); ++fi) {
            const Row& r = rows[fi];
            table.rows.push_back({pname, std::to_string(fi), r.kind, ResultTable::fmt(r.hg),
                                  ResultTable::fmt(r.hr), ResultTable::fmt(r.S), ResultTable::fmt(r.g),
                                  ResultTable::fmt(r.gl), ResultTable::fmt(r.resid),
                                  "hardy_norm;area_function;g_function;g_lambda"});
            if (r.hg > 0.0) {
                rS.push_back(r.S / r.hg);
                rg.push_back(r.g / r.hg);
                rgl.push_back(r.gl / r.hg);
                rgr.push_back(r.hr / r.hg);
            }
        }
        table.summary["spread_S_over_H_" + pname] = detail::spread(rS);
        table.summary["spread_g_over_H_" + pname] = detail::spread(rg);
        table.summary["spread_gl_over_H_" + pname] = detail::spread(rgl);
        table.summary["spread_radial_over_grand_" + pname] = detail::spread(rgr);
        table.summary["lambda_" + pname] = lambda;
        for (const char* key : {"spread_S_over_H_", "spread_g_over_H_", "spread_gl_over_H_"}) {
            const double v = table.summary[key + pname];
            if (v > cfg.ratio_spread_bound) {
                table.failed = true;
                table.failure = std::string(key) + pname + " exceeds bound";
            }
        }
    }
    return table;
}

/// Atomic decomposition run: reconstruction error, atom validation, atomic
/// norm upper bound vs hardy norm, and a CZ g-bound table across sigma
/// quartiles.
inline ResultTable run_decomposition(const ExperimentConfig& cfg) {
    const Anisotropy an = cfg.aniso();
    RealGrid shape(cfg.dims, cfg.half_widths);
    ResultTable table;
    table.columns = {"exponent",      "function",  "kind",       "atoms",   "recon_rel_l2",
                     "atoms_valid",   "atomic_upper", "hardy_grand", "ratio", "provenance"};
    const ScaleSet scales = ScaleSet::dyadic(cfg.k_min, cfg.k_max);
    const SchwartzDictionary base = default_dictionary(an.dim());
    for (const auto& pv : cfg.exponents) {
        ExponentVector p(pv);
        const int s = cfg.atom_moment_order >= 0 ? cfg.atom_moment_order : min_moment_order(an, p);
        MaximalConfig mcfg(an, p, scales, base);
        std::vector<RealGrid> family = make_family(an, p, shape, cfg.family, s);
        std::string pname;
        for (std::size_t i = 0; i < pv.size(); ++i) pname += (i ? "|" : "") + ResultTable::fmt(pv[i]);
        struct Row {
            std::size_t atoms = 0;
            double recon = 0.0, upper = 0.0, hardy = 0.0;
            bool valid = true;
            std::string kind;
        };
        std::vector<Row> rows(family.size());
        parallel_for(family.size(), [&](std::size_t fi) {
            Row r;
            r.kind = cfg.family.kinds[fi % cfg.family.kinds.size()];
            const RealGrid& f = family[fi];
            const double fn = l2_norm(f);
            if (fn == 0.0) {
                rows[fi] = r;
                return;
            }
            RealGrid mf = shape.like<double>();
            AtomicDecomposition dec = atomic_decompose_auto(an, f, p, s, mcfg, AtomicOptions{}, &mf);
            r.atoms = dec.entries.size() + (dec.coarse ? 1 : 0);
            RealGrid rec = synthesize(dec);
            rec -= f;
            r.recon = l2_norm(rec) / fn;
            for (const AtomicEntry& e : dec.entries)
                if (!validate_atom(an, e.atom, 1e-6).pass()) r.valid = false;
            if (dec.coarse && !validate_atom(an, dec.coarse->atom, 1e-6).pass()) r.valid = false;
            r.upper = atomic_norm_upper(dec, an, p);
            r.hardy = mixed_norm(mf, p);
            rows[fi] = r;
        }, cfg.threads);
        std::vector<double> ratios;
        bool all_valid = true;
        double worst_recon = 0.0;
        for (std::size_t fi = 0; fi < rows.size(); ++fi) {
            const Row& r = rows[fi];
            const double ratio = r.hardy > 0.0 ? r.upper / r.hardy : 0.0;
            table.rows.push_back({pname, std::to_string(fi), r.kind, std::to_string(r.atoms),
                                  ResultTable::fmt(r.recon), r.valid ? "1" : "0",
                                  ResultTable::fmt(r.upper), ResultTable::fmt(r.hardy),
                                  ResultTable::fmt(ratio),
                                  "atomic_decompose;validate_atom;atomic_norm_upper;hardy_norm"});
            if (ratio > 0.0) ratios.push_back(ratio);
            all_valid = all_valid && r.valid;
            worst_recon = std::max(worst_recon, r.recon);
        }
        table.summary["ratio_spread_" + pname] = detail::spread(ratios);
        table.summary["worst_recon_" + pname] = worst_recon;
        table.summary["all_atoms_valid_" + pname] = all_valid ? 1.0 : 0.0;
    }
    return table;
}

/// Operator run: atom sweep table for the configured operator plus
/// whole-function ||T f||_p / hardy ratios.
inline ResultTable run_operator(const ExperimentConfig& cfg) {
    const Anisotropy an = cfg.aniso();
    RealGrid shape(cfg.dims, cfg.half_widths);
    ResultTable table;
    table.columns = {"atom_id", "ball_center", "ball_radius", "norm_Lp", "norm_Hardy",
                     "decay_exponent_fit", "flags"};
    ExponentVector p(cfg.exponents.front());
    const int s = cfg.atom_moment_order >= 0 ? cfg.atom_moment_order : min_moment_order(an, p);
    ConvMultiplier T = cfg.operator_type == "identity" ? identity_multiplier(an)
                                                       : riesz_multiplier(an);
    T.delta = cfg.operator_delta;

    std::vector<Atom> atoms;
    for (int i = 0; i < cfg.family.count; ++i) {
        Rng rng(cfg.family.seed * 0x5851f42d4c957f2dULL + static_cast<std::uint64_t>(i) + 11u);
        std::vector<double> c(static_cast<std::size_t>(an.dim()));
        for (int d = 0; d < an.dim(); ++d)
            c[static_cast<std::size_t>(d)] = rng.uniform(-shape.half_width(d) / 8.0, shape.half_width(d) / 8.0);
        const double r = rng.uniform(0.1, 0.3);
        atoms.push_back(random_atom(an, p, 2.0, s, AnisoBall{c, r}, rng.raw(), cfg.dims, cfg.half_widths));
    }
    SweepOptions sopts;
    sopts.scales = ScaleSet::dyadic(cfg.k_min, cfg.k_max);
    SweepTable sweep = operator_atom_sweep(T, atoms, p, sopts);
    for (const SweepRow& r : sweep.rows) {
        std::string center;
        for (std::size_t i = 0; i < r.ball_center.size(); ++i)
            center += (i ? ";" : "") + ResultTable::fmt(r.ball_center[i]);
        table.rows.push_back({std::to_string(r.atom_id), center, ResultTable::fmt(r.ball_radius),
                              ResultTable::fmt(r.norm_Lp), ResultTable::fmt(r.norm_Hardy),
                              ResultTable::fmt(r.decay_exponent), r.flags});
    }
    table.summary["sweep_max_Lp"] = sweep.max_Lp;
    table.summary["sweep_spread_Lp"] = sweep.spread_Lp;
    table.summary["sweep_max_Hardy"] = sweep.max_Hardy;
    table.summary["sweep_spread_Hardy"] = sweep.spread_Hardy;
    table.summary["hypothesis_ok"] = sweep.hypothesis_ok ? 1.0 : 0.0;
    table.summary["target_decay_exponent"] = an.nu() + T.delta;

    // whole-function ratios
    const ScaleSet scales = ScaleSet::dyadic(cfg.k_min, cfg.k_max);
    MaximalConfig mcfg(an, p, scales, default_dictionary(an.dim()));
    std::vector<RealGrid> family = make_family(an, p, shape, cfg.family, s);
    std::vector<double> ratios(family.size(), 0.0);
    parallel_for(family.size(), [&](std::size_t fi) {
        const double h = hardy_norm(an, family[fi], p, HardyMethod::Grand, mcfg);
        if (h <= 0.0) return;
        RealGrid Tf = apply_conv_real(T, family[fi]);
        ratios[fi] = mixed_norm(Tf, p) / h;
    }, cfg.threads);
    std::vector<double> rr;
    for (double v : ratios)
        if (v > 0.0) rr.push_back(v);
    table.summary["Tf_over_H_spread"] = detail::spread(rr);
    return table;
}

/// Writes table.csv and summary.json under dir; creates dir if needed.
inline void write_results(const ResultTable& table, const std::string& dir,
                          const std::string& stem) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream os(dir + "/" + stem + ".csv", std::ios::binary);
        os << table.to_csv();
    }
    {
        std::ofstream os(dir + "/" + stem + "_summary.json");
        os << table.summary_json().dump(2) << "\n";
    }
}

/// Bank descriptor for the CLI `square` subcommand and experiment outputs.
inline json bank_descriptor(const FilterBank& bank) {
    json j;
    j["anisotropy"] = bank.aniso.a();
    j["k_min"] = bank.k_min;
    j["k_max"] = bank.k_max;
    j["profile"] = "exp(-1/(1-u^2)) in u = log2|xi|_a, support [1/2,2]";
    j["covered_fraction"] = bank.covered_fraction;
    j["low_coverage_warning"] = bank.low_coverage_warning;
    return j;
}

/// Decomposition dump: JSON manifest plus one AMN1 patch file per atom with a
/// JSON sidecar carrying ball, params, and the validation report.
inline void dump_decomposition(const AtomicDecomposition& dec, const Anisotropy& an,
                               const std::string& dir) {
    std::filesystem::create_directories(dir);
    json manifest;
    manifest["j_min"] = dec.j_min;
    manifest["j_max"] = dec.j_max;
    manifest["C0"] = dec.C0;
    manifest["dims"] = dec.dims;
    manifest["half_widths"] = dec.half_widths;
    manifest["entries"] = json::array();
    auto dump_entry = [&](const AtomicEntry& e, const std::string& stem) {
        save_grid(e.atom.to_grid(), dir + "/" + stem + ".amn1");
        ValidationReport rep = validate_atom(an, e.atom, 1e-6);
        json s;
        s["j"] = e.j;
        s["k"] = e.k;
        s["kappa"] = e.kappa;
        s["chi_norm"] = e.chi_norm;
        s["ball_center"] = e.atom.ball.center;
        s["ball_radius"] = e.atom.ball.radius;
        s["patch_lo"] = e.atom.values.lo;
        s["patch_ext"] = e.atom.values.ext;
        s["moment_order"] = e.atom.params.s;
        s["validation"] = {{"support_ok", rep.support_ok},
                           {"size_ok", rep.size_ok},
                           {"moments_ok", rep.moments_ok},
                           {"moment_margin", rep.moment_margin}};
        std::ofstream os(dir + "/" + stem + ".json");
        os << s.dump(2) << "\n";
        manifest["entries"].push_back({{"stem", stem}, {"j", e.j}, {"k", e.k}, {"kappa", e.kappa}});
    };
    int idx = 0;
    for (const AtomicEntry& e : dec.entries)
        dump_entry(e, "atom_" + std::to_string(idx++));
    if (dec.coarse) dump_entry(*dec.coarse, "atom_coarse");
    std::ofstream os(dir + "/manifest.json");
    os << manifest.dump(2) << "\n";
}

} // namespace aniso
