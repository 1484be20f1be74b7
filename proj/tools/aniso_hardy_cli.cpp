// Command-line front end: quasi-norm queries, mixed norms, maximal functions,
// atomic decompositions, square functions, operator application, experiment
// runs from JSON configs, and the acceptance selftest.
//
// Exit codes: 0 success, 2 validation failure, 3 config error.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "aniso/experiment.hpp"
#include "aniso/selftest.hpp"

namespace {

std::vector<double> parse_csv_doubles(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
    return out;
}

std::vector<std::size_t> parse_grid_dims(const std::string& s) {
    std::vector<std::size_t> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, 'x')) out.push_back(static_cast<std::size_t>(std::stoull(tok)));
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"anisotropic mixed-norm Hardy space toolkit"};
    app.require_subcommand(1);

    int threads = 0;
    app.add_option("--threads", threads, "worker threads (0 = ANISO_HARDY_THREADS or hardware)");

    // quasinorm
    auto* sc_qn = app.add_subcommand("quasinorm", "anisotropic quasi-norm |x|_a (or bracket <x>_a)");
    std::string qn_a = "1,1", qn_x = "0,0";
    bool qn_bracket = false;
    sc_qn->add_option("--a", qn_a, "anisotropy, comma separated");
    sc_qn->add_option("--x", qn_x, "point, comma separated");
    sc_qn->add_flag("--bracket", qn_bracket, "compute <x>_a instead");

    // mixed-norm
    auto* sc_mn = app.add_subcommand("mixed-norm", "mixed-norm of an AMN1 grid function");
    std::string mn_in, mn_p = "1,1";
    sc_mn->add_option("--in", mn_in, "input .amn1 file")->required();
    sc_mn->add_option("--p", mn_p, "exponent vector, comma separated");

    // maximal
    auto* sc_mx = app.add_subcommand("maximal", "maximal function of an AMN1 grid function");
    std::string mx_in, mx_out, mx_a = "1,1", mx_op = "hl";
    int mx_kmin = -6, mx_kmax = 2;
    sc_mx->add_option("--in", mx_in)->required();
    sc_mx->add_option("--out", mx_out, "output .amn1 path")->required();
    sc_mx->add_option("--a", mx_a, "anisotropy");
    sc_mx->add_option("--op", mx_op, "hl | iterated | radial | nontangential | grand");
    sc_mx->add_option("--kmin", mx_kmin, "dyadic scale range low end");
    sc_mx->add_option("--kmax", mx_kmax, "dyadic scale range high end");

    // decompose
    auto* sc_dc = app.add_subcommand("decompose", "atomic decomposition dump");
    std::string dc_in, dc_out = "decomp", dc_a = "1,2", dc_p = "0.75,0.75";
    int dc_s = -1, dc_kmin = -6, dc_kmax = 2;
    sc_dc->add_option("--in", dc_in)->required();
    sc_dc->add_option("--out", dc_out, "output directory");
    sc_dc->add_option("--a", dc_a, "anisotropy");
    sc_dc->add_option("--p", dc_p, "exponent vector");
    sc_dc->add_option("--s", dc_s, "moment order (-1 = minimal admissible)");
    sc_dc->add_option("--kmin", dc_kmin);
    sc_dc->add_option("--kmax", dc_kmax);

    // square
    auto* sc_sq = app.add_subcommand("square", "square function of an AMN1 grid function");
    std::string sq_in, sq_out, sq_a = "1,2", sq_op = "g", sq_bank_out;
    double sq_lambda = 4.0;
    int sq_kmin = -6, sq_kmax = 4;
    sc_sq->add_option("--in", sq_in)->required();
    sc_sq->add_option("--out", sq_out)->required();
    sc_sq->add_option("--a", sq_a, "anisotropy");
    sc_sq->add_option("--op", sq_op, "s | g | gstar");
    sc_sq->add_option("--lambda", sq_lambda, "g*_lambda exponent");
    sc_sq->add_option("--kmin", sq_kmin);
    sc_sq->add_option("--kmax", sq_kmax);
    sc_sq->add_option("--bank-json", sq_bank_out, "write the bank descriptor JSON here");

    // cz-apply
    auto* sc_cz = app.add_subcommand("cz-apply", "apply a Calderon-Zygmund operator");
    std::string cz_in, cz_out, cz_a = "1,1", cz_type = "riesz";
    sc_cz->add_option("--in", cz_in)->required();
    sc_cz->add_option("--out", cz_out)->required();
    sc_cz->add_option("--a", cz_a, "anisotropy");
    sc_cz->add_option("--multiplier", cz_type, "riesz | identity");

    // experiment run <config>
    auto* sc_xp = app.add_subcommand("experiment", "experiment drivers");
    auto* sc_xp_run = sc_xp->add_subcommand("run", "run a JSON-configured experiment");
    std::string xp_config, xp_out = "results", xp_mode = "equivalence", grid_override;
    std::uint64_t xp_seed = 0;
    sc_xp_run->add_option("config", xp_config, "config JSON path");
    sc_xp_run->add_option("--config", xp_config, "config JSON path (alias)");
    sc_xp_run->add_option("--out", xp_out, "output directory");
    sc_xp_run->add_option("--mode", xp_mode, "equivalence | decomposition | operator");
    auto* seed_opt = sc_xp_run->add_option("--seed", xp_seed, "override family seed");
    sc_xp_run->add_option("--grid", grid_override, "override grid dims, e.g. 256x256");

    // selftest
    auto* sc_st = app.add_subcommand("selftest", "run the acceptance suite");

    CLI11_PARSE(app, argc, argv);
    const bool xp_seed_set = seed_opt->count() > 0;
    if (*sc_xp_run && xp_config.empty()) {
        std::fprintf(stderr, "config error: experiment run requires a config path\n");
        return 3;
    }

    try {
        if (*sc_qn) {
            aniso::Anisotropy an(parse_csv_doubles(qn_a));
            std::vector<double> x = parse_csv_doubles(qn_x);
            const double v = qn_bracket ? aniso::bracket(an, x) : aniso::quasi_norm(an, x);
            std::printf("%.17g\n", v);
            return 0;
        }
        if (*sc_mn) {
            aniso::GridVariant g = aniso::load_grid(mn_in);
            aniso::ExponentVector p(parse_csv_doubles(mn_p));
            const double v = std::holds_alternative<aniso::RealGrid>(g)
                                 ? aniso::mixed_norm(std::get<aniso::RealGrid>(g), p)
                                 : aniso::mixed_norm(std::get<aniso::ComplexGrid>(g), p);
            std::printf("%.17g\n", v);
            return 0;
        }
        if (*sc_mx) {
            aniso::Anisotropy an(parse_csv_doubles(mx_a));
            aniso::RealGrid f = aniso::load_real_grid(mx_in);
            aniso::ScaleSet scales = aniso::ScaleSet::dyadic(mx_kmin, mx_kmax);
            aniso::RealGrid out;
            if (mx_op == "hl") out = aniso::hl_maximal(an, f, scales);
            else if (mx_op == "iterated") out = aniso::iterated_maximal(f);
            else if (mx_op == "radial")
                out = aniso::radial_maximal(an, f, aniso::canonical_bump(an.dim()), scales);
            else if (mx_op == "nontangential")
                out = aniso::nontangential_maximal(an, f, aniso::canonical_bump(an.dim()), scales);
            else if (mx_op == "grand") {
                aniso::ExponentVector p(std::vector<double>(static_cast<std::size_t>(an.dim()), 1.0));
                aniso::MaximalConfig cfg(an, p, scales, aniso::default_dictionary(an.dim()));
                out = aniso::grand_maximal(an, f, cfg.dict, cfg.scales, threads);
            } else {
                std::fprintf(stderr, "unknown maximal op '%s'\n", mx_op.c_str());
                return 3;
            }
            aniso::save_grid(out, mx_out);
            return 0;
        }
        if (*sc_dc) {
            aniso::Anisotropy an(parse_csv_doubles(dc_a));
            aniso::ExponentVector p(parse_csv_doubles(dc_p));
            aniso::RealGrid f = aniso::load_real_grid(dc_in);
            const int s = dc_s >= 0 ? dc_s : aniso::min_moment_order(an, p);
            aniso::MaximalConfig cfg(an, p, aniso::ScaleSet::dyadic(dc_kmin, dc_kmax),
                                     aniso::default_dictionary(an.dim()));
            aniso::AtomicDecomposition dec = aniso::atomic_decompose_auto(an, f, p, s, cfg);
            aniso::dump_decomposition(dec, an, dc_out);
            aniso::RealGrid rec = aniso::synthesize(dec);
            rec -= f;
            const double fn = aniso::l2_norm(f);
            const double err = fn > 0.0 ? aniso::l2_norm(rec) / fn : 0.0;
            std::printf("atoms=%zu coarse=%d recon_rel_l2=%.3e out=%s\n", dec.entries.size(),
                        dec.coarse ? 1 : 0, err, dc_out.c_str());
            return err <= 1e-6 ? 0 : 2;
        }
        if (*sc_sq) {
            aniso::Anisotropy an(parse_csv_doubles(sq_a));
            aniso::RealGrid f = aniso::load_real_grid(sq_in);
            aniso::FilterBank bank =
                aniso::build_filter_bank(an, f.dims(), f.half_widths(), sq_kmin, sq_kmax);
            aniso::RealGrid out;
            if (sq_op == "g") out = aniso::g_function(f, bank);
            else if (sq_op == "s") out = aniso::area_function(f, bank);
            else if (sq_op == "gstar") out = aniso::g_lambda(f, bank, sq_lambda);
            else {
                std::fprintf(stderr, "unknown square op '%s'\n", sq_op.c_str());
                return 3;
            }
            aniso::save_grid(out, sq_out);
            if (!sq_bank_out.empty()) {
                std::ofstream os(sq_bank_out);
                os << aniso::bank_descriptor(bank).dump(2) << "\n";
            }
            return 0;
        }
        if (*sc_cz) {
            aniso::Anisotropy an(parse_csv_doubles(cz_a));
            aniso::RealGrid f = aniso::load_real_grid(cz_in);
            aniso::ConvMultiplier T =
                cz_type == "identity" ? aniso::identity_multiplier(an) : aniso::riesz_multiplier(an);
            aniso::save_grid(aniso::apply_conv_real(T, f), cz_out);
            return 0;
        }
        if (*sc_xp_run) {
            aniso::ExperimentConfig cfg = aniso::load_config(xp_config);
            if (xp_seed_set) cfg.family.seed = xp_seed;
            if (!grid_override.empty()) {
                cfg.dims = parse_grid_dims(grid_override);
                if (cfg.dims.size() != cfg.anisotropy.size())
                    throw aniso::ConfigError("--grid dimension mismatch");
            }
            if (threads > 0) cfg.threads = threads;
            cfg.out_dir = xp_out;
            aniso::ResultTable table;
            if (xp_mode == "equivalence") table = aniso::run_equivalence(cfg);
            else if (xp_mode == "decomposition") table = aniso::run_decomposition(cfg);
            else if (xp_mode == "operator") table = aniso::run_operator(cfg);
            else throw aniso::ConfigError("unknown experiment mode '" + xp_mode + "'");
            aniso::write_results(table, cfg.out_dir, xp_mode);
            std::printf("wrote %s/%s.csv\n", cfg.out_dir.c_str(), xp_mode.c_str());
            if (table.failed) {
                std::fprintf(stderr, "experiment failed: %s\n", table.failure.c_str());
                return 2;
            }
            return 0;
        }
        if (*sc_st) {
            return aniso::Selftest::print_and_exit_code(aniso::run_selftest(threads));
        }
    } catch (const aniso::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
