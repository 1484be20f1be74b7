#pragma once

// Calderon-Zygmund decomposition at a threshold sigma over the level set
// {M_N f > sigma} (Whitney cover + partition of unity + weighted polynomial
// projections), and the full multi-level atomic decomposition with the
// cross-level corrections
//   A_{j,k} = b_{j,k} - sum_i [(f - c_{j+1,i}) eta_{j,k} - c_{j+1,k,i}] eta_{j+1,i},
// kappa_{j,k} = C_0 2^j ||chi_B||_{L^p}, a_{j,k} = A_{j,k}/kappa_{j,k}.
// Levels below j_min collapse into the coarse remainder atom.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "aniso/atoms.hpp"
#include "aniso/maximal.hpp"
#include "aniso/poly.hpp"
#include "aniso/whitney.hpp"

namespace aniso {

inline BoolGrid level_set(const RealGrid& mf, double sigma) {
    BoolGrid omega(mf.dims(), mf.half_widths());
    for (std::size_t i = 0; i < mf.size(); ++i) omega[i] = mf[i] > sigma ? 1 : 0;
    return omega;
}

struct CZBadPart {
    AnisoBall ball;       // B_k^{(A*)}
    Patch values;         // b_k = (f - c_k) eta_k
    PolyCoeffs projection;
};

struct CZDecomposition {
    double sigma = 0.0;
    RealGrid good;
    std::vector<CZBadPart> bad;
    WhitneyCover cover;
    double g_inf_over_sigma = 0.0;
    double max_moment_residual = 0.0;  // normalized, over all bad parts
    bool projection_warnings = false;
};

struct CZOptions {
    double A = 2.0;
    double A_star = 1.1;
    double delta_inner = 1.05;
};

/// f = g + sum_k b_k at threshold sigma; Omega empty gives g = f, Omega
/// equal to the whole grid is a "sigma too small" error.
inline CZDecomposition cz_decompose(const Anisotropy& an, const RealGrid& f,
                                    const ExponentVector& p, double sigma, int s,
                                    const MaximalConfig& cfg, const CZOptions& opts = {}) {
    if (s < min_moment_order(an, p))
        throw std::invalid_argument("cz_decompose: s below the minimal moment order");
    RealGrid mf = grand_maximal(an, f, cfg.dict, cfg.scales);
    BoolGrid omega = level_set(mf, sigma);
    std::size_t inside = 0;
    for (std::size_t i = 0; i < omega.size(); ++i) inside += omega[i] ? 1 : 0;
    CZDecomposition out;
    out.sigma = sigma;
    if (inside == omega.size()) throw std::domain_error("cz_decompose: sigma below min of M_N f");
    out.good = f;
    if (inside == 0) return out;

    QuasiNormTable lut(an, f.dims(), f.half_widths());
    out.cover = whitney_cover(an, omega, opts.A, lut, opts.A_star);
    PartitionOfUnity pou = partition_of_unity(an, out.cover, omega, lut, opts.delta_inner);

    const int n = f.ndim();
    const double cell = f.cell_volume();
    for (std::size_t k = 0; k < out.cover.size(); ++k) {
        PolyCoeffs c = poly_project(an, f, pou.eta[k], s, out.cover.centers[k], out.cover.radii[k]);
        out.projection_warnings = out.projection_warnings || c.regularized;
        CZBadPart bp;
        bp.ball = pou.support_balls[k];
        bp.projection = c;
        bp.values = pou.eta[k];  // same window
        double l2sq = 0.0;
        double max_moment = 0.0;
        pou.eta[k].for_each(f, [&](std::size_t lf, std::size_t gf, const std::vector<std::size_t>& gi) {
            const double eta = pou.eta[k].v[lf];
            bp.values.v[lf] = eta > 0.0 ? (f[gf] - c.eval_cell(f, gi)) * eta : 0.0;
            l2sq += bp.values.v[lf] * bp.values.v[lf];
        });
        // normalized moment residuals of b_k (centered, ball-scaled monomials,
        // discrete support measure)
        std::vector<std::vector<int>> alphas = poly_multi_indices(n, s);
        std::vector<double> mono(alphas.size()), mom(alphas.size(), 0.0);
        WeightedProjector probe(an, f, pou.eta[k], s, out.cover.centers[k], out.cover.radii[k]);
        std::size_t support_cells = 0;
        bp.values.for_each(f, [&](std::size_t lf, std::size_t, const std::vector<std::size_t>& gi) {
            if (bp.values.v[lf] == 0.0) return;
            ++support_cells;
            probe.monomials(f, gi, mono);
            for (std::size_t t = 0; t < mono.size(); ++t) mom[t] += bp.values.v[lf] * mono[t];
        });
        const double l2 = std::sqrt(l2sq * cell);
        const double measure = static_cast<double>(std::max<std::size_t>(support_cells, 1)) * cell;
        for (double m : mom)
            max_moment = std::max(max_moment, std::abs(m * cell) / std::max(1e-300, l2 * std::sqrt(measure)));
        out.max_moment_residual = std::max(out.max_moment_residual, max_moment);
        bp.values.add_to(out.good, -1.0);
        out.bad.push_back(std::move(bp));
    }
    out.g_inf_over_sigma = max_abs(out.good) / sigma;
    return out;
}

struct AtomicOptions {
    CZOptions cz;
    bool require_top_empty = true;  // demand 2^{j_max+1} above max M_N f
};

struct LevelRange {
    int j_min = 0, j_max = 0;
};

/// [floor(log2 min M_N f on supp f), ceil(log2 max M_N f)].
inline LevelRange suggest_level_range(const RealGrid& f, const RealGrid& mf) {
    const double fmax = max_abs(f);
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        hi = std::max(hi, mf[i]);
        if (std::abs(f[i]) > 1e-12 * fmax) lo = std::min(lo, mf[i]);
    }
    LevelRange r;
    if (!(hi > 0.0) || !std::isfinite(lo)) return r;
    r.j_min = static_cast<int>(std::floor(std::log2(lo)));
    r.j_max = static_cast<int>(std::ceil(std::log2(hi)));
    return r;
}

namespace detail {

struct LevelData {
    bool empty = true;
    WhitneyCover cover;
    PartitionOfUnity pou;
    std::vector<PolyCoeffs> proj;  // c_{j,k}
};

inline Patch extract_patch(const RealGrid& dense, const std::vector<std::size_t>& center_idx,
                           double threshold = 0.0) {
    const int n = dense.ndim();
    std::vector<std::ptrdiff_t> mn(static_cast<std::size_t>(n), 0), mx(static_cast<std::size_t>(n), 0);
    std::vector<std::size_t> gi(static_cast<std::size_t>(n));
    bool any = false;
    for (std::size_t f = 0; f < dense.size(); ++f) {
        if (std::abs(dense[f]) <= threshold) continue;
        dense.unflatten(f, gi);
        any = true;
        for (int i = 0; i < n; ++i) {
            const std::size_t ii = static_cast<std::size_t>(i);
            const std::ptrdiff_t d = static_cast<std::ptrdiff_t>(dense.dim(i));
            std::ptrdiff_t off = static_cast<std::ptrdiff_t>(gi[ii]) - static_cast<std::ptrdiff_t>(center_idx[ii]);
            off = ((off % d) + d) % d;
            if (off >= d / 2) off -= d;
            mn[ii] = std::min(mn[ii], off);
            mx[ii] = std::max(mx[ii], off);
        }
    }
    std::vector<std::ptrdiff_t> lo(static_cast<std::size_t>(n));
    std::vector<std::size_t> ext(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const std::size_t ii = static_cast<std::size_t>(i);
        lo[ii] = static_cast<std::ptrdiff_t>(center_idx[ii]) + (any ? mn[ii] : 0);
        ext[ii] = any ? static_cast<std::size_t>(mx[ii] - mn[ii] + 1) : 1;
    }
    Patch p = Patch::make(lo, ext);
    p.for_each(dense, [&](std::size_t lf, std::size_t gf, const std::vector<std::size_t>&) {
        p.v[lf] = dense[gf];
    });
    return p;
}

// Moment residual of a patch against centered ball-scaled monomials up to
// degree s, normalized by ||v||_2 sqrt(support measure); the same quantity
// validate_atom checks.
inline double patch_moment_margin(const Anisotropy& an, const RealGrid& shape, const Patch& values,
                                  const std::vector<double>& center, double radius, int s) {
    const int n = shape.ndim();
    const double cell = shape.cell_volume();
    std::vector<std::vector<int>> alphas = poly_multi_indices(n, s);
    std::vector<double> mom(alphas.size(), 0.0), d(static_cast<std::size_t>(n)), u(static_cast<std::size_t>(n));
    std::vector<double> axis_scale(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) axis_scale[static_cast<std::size_t>(i)] = std::pow(radius, an.a(i));
    double l2sq = 0.0;
    std::size_t cells = 0;
    values.for_each(shape, [&](std::size_t lf, std::size_t, const std::vector<std::size_t>& gi) {
        const double v = values.v[lf];
        if (v == 0.0) return;
        ++cells;
        l2sq += v * v;
        aniso::detail::folded_displacement(shape, gi, center, d);
        for (int i = 0; i < n; ++i) u[static_cast<std::size_t>(i)] = d[static_cast<std::size_t>(i)] / axis_scale[static_cast<std::size_t>(i)];
        for (std::size_t t = 0; t < alphas.size(); ++t) {
            double m = v;
            for (int i = 0; i < n; ++i)
                for (int rep = 0; rep < alphas[t][static_cast<std::size_t>(i)]; ++rep)
                    m *= u[static_cast<std::size_t>(i)];
            mom[t] += m;
        }
    });
    if (cells == 0) return 0.0;
    const double denom = std::sqrt(l2sq * cell) * std::sqrt(static_cast<double>(cells) * cell);
    double worst = 0.0;
    for (double m : mom) worst = std::max(worst, std::abs(m * cell));
    return denom > 0.0 ? worst / denom : 0.0;
}

// Radius of the smallest anisotropic ball centered at `center` containing all
// cells where |values| > 0, plus a one-cell band.
inline double support_radius(const Anisotropy& an, const RealGrid& shape, const Patch& values,
                             const std::vector<double>& center) {
    const int n = shape.ndim();
    std::vector<double> d(static_cast<std::size_t>(n));
    double r = 0.0;
    values.for_each(shape, [&](std::size_t lf, std::size_t, const std::vector<std::size_t>& gi) {
        if (values.v[lf] == 0.0) return;
        aniso::detail::folded_displacement(shape, gi, center, d);
        r = std::max(r, quasi_norm(an, d));
    });
    std::vector<double> diag(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) diag[static_cast<std::size_t>(i)] = shape.spacing(i);
    return r + quasi_norm(an, diag);
}

} // namespace detail

/// Multi-level atomic decomposition of Theorem-3.1 type.  j_min is clamped up
/// until the level set is a proper subset of the grid; with
/// require_top_empty, j_max must satisfy 2^{j_max+1} >= max M_N f.
inline AtomicDecomposition atomic_decompose(const Anisotropy& an, const RealGrid& f,
                                            const ExponentVector& p, int s, int j_min, int j_max,
                                            const MaximalConfig& cfg, const AtomicOptions& opts = {},
                                            RealGrid* mf_out = nullptr,
                                            const RealGrid* mf_in = nullptr) {
    AtomicDecomposition dec;
    dec.dims = f.dims();
    dec.half_widths = f.half_widths();
    dec.j_min = j_min;
    dec.j_max = j_max;
    const double fmax = max_abs(f);
    if (fmax == 0.0) return dec;

    RealGrid mf = mf_in ? *mf_in : grand_maximal(an, f, cfg.dict, cfg.scales);
    if (mf_out) *mf_out = mf;
    const double mfmax = max_abs(mf);
    if (opts.require_top_empty && mfmax > std::ldexp(1.0, j_max + 1))
        throw std::runtime_error("atomic_decompose: j_range too narrow; extend j_max to " +
                                 std::to_string(static_cast<int>(std::ceil(std::log2(mfmax))) ));

    QuasiNormTable lut(an, f.dims(), f.half_widths());
    const int n = f.ndim();

    // Per-level Whitney covers, partitions of unity, projections c_{j,k}.
    std::vector<detail::LevelData> levels;
    int j_lo = j_min;
    for (int j = j_min; j <= j_max; ++j) {
        BoolGrid omega = level_set(mf, std::ldexp(1.0, j));
        std::size_t inside = 0;
        for (std::size_t i = 0; i < omega.size(); ++i) inside += omega[i] ? 1 : 0;
        if (inside == omega.size()) {
            j_lo = j + 1;  // threshold below min M_N f; absorbed by the coarse atom
            levels.clear();
            continue;
        }
        detail::LevelData lv;
        if (inside > 0) {
            lv.empty = false;
            lv.cover = whitney_cover(an, omega, opts.cz.A, lut, opts.cz.A_star);
            lv.pou = partition_of_unity(an, lv.cover, omega, lut, opts.cz.delta_inner);
            lv.proj.reserve(lv.cover.size());
            for (std::size_t k = 0; k < lv.cover.size(); ++k)
                lv.proj.push_back(poly_project(an, f, lv.pou.eta[k], s, lv.cover.centers[k], lv.cover.radii[k]));
        }
        levels.push_back(std::move(lv));
    }
    dec.j_min = j_lo;

    struct RawAtom {
        int j, k;
        Patch values;
        std::vector<double> center;
        double radius, supnorm;
    };
    std::vector<RawAtom> raw;
    RealGrid accum(f.dims(), f.half_widths());  // running sum of all A_{j,k}

    for (std::size_t li = 0; li < levels.size(); ++li) {
        const int j = j_lo + static_cast<int>(li);
        const detail::LevelData& lv = levels[li];
        if (lv.empty) continue;
        const detail::LevelData* up = (li + 1 < levels.size() && !levels[li + 1].empty)
                                          ? &levels[li + 1]
                                          : nullptr;
        // Gram factorizations for the level-(j+1) weights, shared across k.
        std::vector<WeightedProjector> up_proj;
        if (up)
            for (std::size_t i = 0; i < up->cover.size(); ++i)
                up_proj.emplace_back(an, f, up->pou.eta[i], s, up->cover.centers[i], up->cover.radii[i]);

        std::vector<std::vector<std::size_t>> overlaps(lv.cover.size());
        if (up)
            for (std::size_t k = 0; k < lv.cover.size(); ++k)
                for (std::size_t i = 0; i < up->cover.size(); ++i)
                    if (patches_overlap(lv.pou.eta[k], up->pou.eta[i], f.dims()))
                        overlaps[k].push_back(i);

        std::vector<RawAtom> level_raw(lv.cover.size());
        parallel_for(lv.cover.size(), [&](std::size_t k) {
            // union window of eta_{j,k} and every overlapping eta_{j+1,i}
            std::vector<std::ptrdiff_t> lo = lv.pou.eta[k].lo;
            std::vector<std::size_t> ext = lv.pou.eta[k].ext;
            for (std::size_t i : overlaps[k])
                for (int ax = 0; ax < n; ++ax) {
                    const std::size_t ia = static_cast<std::size_t>(ax);
                    circle_interval_union(lo[ia], ext[ia], up->pou.eta[i].lo[ia], up->pou.eta[i].ext[ia],
                                          f.dim(ax), lo[ia], ext[ia]);
                }
            Patch A = Patch::make(lo, ext);
            // b_{j,k} = (f - c_{j,k}) eta_{j,k}
            lv.pou.eta[k].for_each(f, [&](std::size_t lf, std::size_t gf, const std::vector<std::size_t>& gi) {
                const double eta = lv.pou.eta[k].v[lf];
                if (eta > 0.0)
                    A.v[patch_local_index(A, f.dims(), gi)] += (f[gf] - lv.proj[k].eval_cell(f, gi)) * eta;
            });
            for (std::size_t i : overlaps[k]) {
                // rhs_alpha = int (f - c_{j+1,i}) eta_{j,k} u^alpha eta_{j+1,i}
                Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(up_proj[i].basis_size()));
                std::vector<double> mono(up_proj[i].basis_size());
                bool nonzero = false;
                up->pou.eta[i].for_each(f, [&](std::size_t lf_i, std::size_t gf, const std::vector<std::size_t>& gi) {
                    const double eta_i = up->pou.eta[i].v[lf_i];
                    if (eta_i == 0.0) return;
                    const double eta_k = patch_value_at(lv.pou.eta[k], f, gi);
                    if (eta_k == 0.0) return;
                    nonzero = true;
                    const double g = (f[gf] - up->proj[i].eval_cell(f, gi)) * eta_k;
                    up_proj[i].monomials(f, gi, mono);
                    for (std::size_t t = 0; t < mono.size(); ++t)
                        rhs[static_cast<Eigen::Index>(t)] += g * mono[t] * eta_i;
                });
                if (!nonzero) continue;
                PolyCoeffs cki = up_proj[i].project(rhs);
                // subtract [(f - c_{j+1,i}) eta_{j,k} - c_{j+1,k,i}] eta_{j+1,i}
                up->pou.eta[i].for_each(f, [&](std::size_t lf_i, std::size_t gf, const std::vector<std::size_t>& gi) {
                    const double eta_i = up->pou.eta[i].v[lf_i];
                    if (eta_i == 0.0) return;
                    const double eta_k = patch_value_at(lv.pou.eta[k], f, gi);
                    const double g = (f[gf] - up->proj[i].eval_cell(f, gi)) * eta_k;
                    A.v[patch_local_index(A, f.dims(), gi)] -= (g - cki.eval_cell(f, gi)) * eta_i;
                });
            }
            RawAtom ra;
            ra.j = j;
            ra.k = static_cast<int>(k);
            ra.center = lv.cover.centers[k];
            ra.radius = detail::support_radius(an, f, A, ra.center);
            ra.supnorm = A.max_abs();
            // Cancellation slivers (A almost fully cancelled between b and the
            // cross-level correction) carry amplified round-off in their
            // moments; fold them into the coarse remainder, whose own moment
            // budget they cannot disturb (their exact moments are zero).
            if (ra.supnorm > 0.0 &&
                detail::patch_moment_margin(an, f, A, ra.center, ra.radius, s) > 1e-8)
                ra.supnorm = 0.0;
            ra.values = std::move(A);
            level_raw[k] = std::move(ra);
        });
        for (RawAtom& ra : level_raw) {
            if (ra.supnorm > 0.0) {
                ra.values.add_to(accum);
                raw.push_back(std::move(ra));
            }
        }
    }

    // C0 measured from the data, then frozen for this decomposition.
    double C0 = 0.0;
    for (const RawAtom& ra : raw) C0 = std::max(C0, ra.supnorm / std::ldexp(1.0, ra.j));
    dec.C0 = C0;
    for (RawAtom& ra : raw) {
        AtomicEntry e;
        e.j = ra.j;
        e.k = ra.k;
        AnisoBall ball{ra.center, ra.radius};
        const BallRaster raster = rasterize_ball(an, ball, p, f.dims(), f.half_widths());
        e.chi_norm = raster.chi_norm;
        e.kappa = C0 * std::ldexp(1.0, ra.j) * raster.chi_norm;
        Patch vals = std::move(ra.values);
        for (double& v : vals.v) v /= e.kappa;
        e.atom = Atom{ball, std::move(vals), f.dims(), f.half_widths(), AtomParams{p, kInf, s}};
        dec.entries.push_back(std::move(e));
    }

    // Coarse remainder h = f - sum A_{j,k} (= g at the lowest threshold).
    RealGrid h = f;
    h -= accum;
    const double hmax = max_abs(h);
    if (hmax > 1e-14 * fmax) {
        // center the coarse ball at the cell nearest the |h|-centroid
        std::vector<double> centroid(static_cast<std::size_t>(n), 0.0);
        double mass = 0.0;
        std::vector<std::size_t> gi(static_cast<std::size_t>(n));
        for (std::size_t fl = 0; fl < h.size(); ++fl) {
            const double w = std::abs(h[fl]);
            if (w == 0.0) continue;
            h.unflatten(fl, gi);
            for (int i = 0; i < n; ++i)
                centroid[static_cast<std::size_t>(i)] += w * h.coord(i, gi[static_cast<std::size_t>(i)]);
            mass += w;
        }
        std::vector<std::size_t> ci(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            const std::size_t ii = static_cast<std::size_t>(i);
            centroid[ii] /= mass;
            const double rel = (centroid[ii] + h.half_width(i)) / h.spacing(i) - 0.5;
            ci[ii] = static_cast<std::size_t>(((std::llround(rel) % static_cast<long long>(h.dim(i))) +
                                               static_cast<long long>(h.dim(i))) % static_cast<long long>(h.dim(i)));
            centroid[ii] = h.coord(i, ci[ii]);
        }
        AtomicEntry ce;
        ce.j = j_lo - 1;
        ce.k = 0;
        Patch hv = detail::extract_patch(h, ci);
        const double radius = detail::support_radius(an, f, hv, centroid);
        AnisoBall ball{centroid, radius};
        const BallRaster raster = rasterize_ball(an, ball, p, f.dims(), f.half_widths());
        ce.chi_norm = raster.chi_norm;
        ce.kappa = hmax * raster.chi_norm;  // size condition holds with equality
        for (double& v : hv.v) v /= ce.kappa;
        ce.atom = Atom{ball, std::move(hv), f.dims(), f.half_widths(), AtomParams{p, kInf, s}};
        dec.coarse = std::move(ce);
    }
    return dec;
}

/// Level range derived from the data: the grand maximal function is computed
/// once and its log2 range on supp f fixes [j_min, j_max].
inline AtomicDecomposition atomic_decompose_auto(const Anisotropy& an, const RealGrid& f,
                                                 const ExponentVector& p, int s,
                                                 const MaximalConfig& cfg,
                                                 const AtomicOptions& opts = {},
                                                 RealGrid* mf_out = nullptr) {
    if (max_abs(f) == 0.0) {
        AtomicDecomposition dec;
        dec.dims = f.dims();
        dec.half_widths = f.half_widths();
        return dec;
    }
    RealGrid mf = grand_maximal(an, f, cfg.dict, cfg.scales);
    const LevelRange r = suggest_level_range(f, mf);
    if (mf_out) *mf_out = mf;
    return atomic_decompose(an, f, p, s, r.j_min, r.j_max, cfg, opts, nullptr, &mf);
}

struct FiniteTruncation {
    AtomicDecomposition finite;
    std::optional<AtomicEntry> residual_atom;
    double residual_norm = 0.0;
    int J = 0;
    std::vector<double> residual_by_J;  // L^2 norm of the dropped tail per J
};

/// Keeps entries with |k| + |j| <= J, growing J until the L^2 residual of the
/// dropped tail is <= eps; the tail is packaged as one extra atom when it
/// satisfies the atom conditions within tolerance.
inline FiniteTruncation finite_truncate(const Anisotropy& an, const AtomicDecomposition& dec,
                                        const ExponentVector& p, double eps,
                                        double validate_tol = 1e-6) {
    FiniteTruncation out;
    out.finite.dims = dec.dims;
    out.finite.half_widths = dec.half_widths;
    out.finite.j_min = dec.j_min;
    out.finite.j_max = dec.j_max;
    out.finite.C0 = dec.C0;
    out.finite.coarse = dec.coarse;

    int vmax = 0;
    for (const AtomicEntry& e : dec.entries) vmax = std::max(vmax, std::abs(e.j) + std::abs(e.k));
    RealGrid tail(dec.dims, dec.half_widths);
    std::vector<double> res(static_cast<std::size_t>(vmax) + 1, 0.0);
    for (int J = vmax - 1; J >= 0; --J) {
        for (const AtomicEntry& e : dec.entries)
            if (std::abs(e.j) + std::abs(e.k) == J + 1) e.atom.values.add_to(tail, e.kappa);
        res[static_cast<std::size_t>(J)] = l2_norm(tail);
    }
    int J = vmax;
    for (int cand = 0; cand <= vmax; ++cand) {
        if (res[static_cast<std::size_t>(cand)] <= eps) {
            J = cand;
            break;
        }
    }
    out.J = J;
    out.residual_by_J.assign(res.begin(), res.end());
    out.residual_norm = J < vmax ? res[static_cast<std::size_t>(J)] : 0.0;
    if (out.residual_norm > eps)
        throw std::runtime_error("finite_truncate: eps unreachable; achieved residual " +
                                 std::to_string(out.residual_norm));
    for (const AtomicEntry& e : dec.entries)
        if (std::abs(e.j) + std::abs(e.k) <= J) out.finite.entries.push_back(e);

    // Rebuild the dropped tail at the chosen J and try to package it.
    RealGrid tail_at_J(dec.dims, dec.half_widths);
    for (const AtomicEntry& e : dec.entries)
        if (std::abs(e.j) + std::abs(e.k) > J) e.atom.values.add_to(tail_at_J, e.kappa);
    const double tmax = max_abs(tail_at_J);
    if (tmax > 0.0) {
        const int n = tail_at_J.ndim();
        std::vector<std::size_t> ci(static_cast<std::size_t>(n), 0), gi(static_cast<std::size_t>(n));
        double best = -1.0;
        for (std::size_t fl = 0; fl < tail_at_J.size(); ++fl)
            if (std::abs(tail_at_J[fl]) > best) {
                best = std::abs(tail_at_J[fl]);
                tail_at_J.unflatten(fl, ci);
            }
        std::vector<double> center(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) center[static_cast<std::size_t>(i)] = tail_at_J.coord(i, ci[static_cast<std::size_t>(i)]);
        Patch tv = detail::extract_patch(tail_at_J, ci);
        const double radius = detail::support_radius(an, tail_at_J, tv, center);
        AnisoBall ball{center, radius};
        const AtomicEntry* sample = dec.entries.empty() ? nullptr : &dec.entries.front();
        const int s = sample ? sample->atom.params.s : 0;
        const BallRaster raster = rasterize_ball(an, ball, p, dec.dims, dec.half_widths);
        AtomicEntry re;
        re.j = dec.j_max;
        re.k = -1;
        re.chi_norm = raster.chi_norm;
        re.kappa = tmax * raster.chi_norm;
        for (double& v : tv.v) v /= re.kappa;
        re.atom = Atom{ball, std::move(tv), dec.dims, dec.half_widths, AtomParams{p, kInf, s}};
        if (validate_atom(an, re.atom, validate_tol).pass()) out.residual_atom = re;
    }
    return out;
}

} // namespace aniso
