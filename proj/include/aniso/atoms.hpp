#pragma once

// (p,r,s)-atoms: ball-supported functions with the L^r size bound
// ||a||_r <= |B|^{1/r} / ||chi_B||_{L^p} and vanishing moments up to total
// degree s.  Discrete measures are used throughout (cell counts and grid
// quadrature), so generator, validator, and decomposition agree exactly.

#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "aniso/exponents.hpp"
#include "aniso/geometry.hpp"
#include "aniso/grid.hpp"
#include "aniso/mixed_norm.hpp"
#include "aniso/patch.hpp"
#include "aniso/poly.hpp"
#include "aniso/rng.hpp"

namespace aniso {

struct AtomParams {
    ExponentVector p;
    double r = kInf;  // in (1, inf]
    int s = 0;
};

struct Atom {
    AnisoBall ball;
    Patch values;  // zero outside the ball
    std::vector<std::size_t> dims;
    std::vector<double> half_widths;
    AtomParams params;

    RealGrid to_grid() const {
        RealGrid g(dims, half_widths);
        values.add_to(g);
        return g;
    }
};

namespace detail {

// Folded displacement of a cell center from an arbitrary point.
template <class T>
inline void folded_displacement(const Grid<T>& g, const std::vector<std::size_t>& gi,
                                const std::vector<double>& center, std::vector<double>& d) {
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double L = g.half_width(static_cast<int>(i));
        double v = g.coord(static_cast<int>(i), gi[i]) - center[i];
        v -= 2.0 * L * std::round(v / (2.0 * L));
        d[i] = v;
    }
}

inline bool in_ball(const Anisotropy& an, std::span<const double> d, double radius) {
    double s = 0.0;
    for (int i = 0; i < an.dim(); ++i) {
        const double ta = std::pow(radius, an.a(i));
        s += (d[static_cast<std::size_t>(i)] / ta) * (d[static_cast<std::size_t>(i)] / ta);
    }
    return s < 1.0;
}

} // namespace detail

struct BallRaster {
    double chi_norm = 0.0;   // ||chi_B||_{L^p} by grid quadrature
    double measure = 0.0;    // cell count times cell volume
    std::size_t cells = 0;
};

namespace detail {

/// Iterates the cells of the ball's bounding box (clipped to the grid),
/// passing the grid multi-index of each member cell.
template <class Fn>
void for_each_ball_member(const Anisotropy& an, const AnisoBall& ball,
                          const std::vector<std::size_t>& dims,
                          const std::vector<double>& half_widths, Fn&& fn) {
    const int n = static_cast<int>(dims.size());
    RealGrid shape(dims, half_widths);
    std::vector<long> lo(static_cast<std::size_t>(n)), hi(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const std::size_t ii = static_cast<std::size_t>(i);
        const double half = std::pow(ball.radius, an.a(i));
        const double rel = (ball.center[ii] + shape.half_width(i)) / shape.spacing(i) - 0.5;
        const long ci = std::llround(rel);
        long e = static_cast<long>(std::ceil(half / shape.spacing(i)));
        e = std::min<long>(e, static_cast<long>(dims[ii]) / 2);
        lo[ii] = ci - e;
        hi[ii] = ci + e;
    }
    std::vector<std::size_t> gi(static_cast<std::size_t>(n));
    std::vector<double> d(static_cast<std::size_t>(n));
    std::vector<long> cur(lo);
    while (true) {
        for (int i = 0; i < n; ++i) {
            const std::size_t ii = static_cast<std::size_t>(i);
            const long dd = static_cast<long>(dims[ii]);
            gi[ii] = static_cast<std::size_t>(((cur[ii] % dd) + dd) % dd);
        }
        folded_displacement(shape, gi, ball.center, d);
        if (in_ball(an, d, ball.radius)) fn(gi);
        int ax = n - 1;
        while (ax >= 0) {
            if (++cur[static_cast<std::size_t>(ax)] <= hi[static_cast<std::size_t>(ax)]) break;
            cur[static_cast<std::size_t>(ax)] = lo[static_cast<std::size_t>(ax)];
            --ax;
        }
        if (ax < 0) break;
    }
}

} // namespace detail

/// Rasterized indicator data of an anisotropic ball on a grid; the mixed norm
/// is computed from the ball's row structure (identical to the dense grid
/// quadrature, without allocating the grid).
inline BallRaster rasterize_ball(const Anisotropy& an, const AnisoBall& ball,
                                 const ExponentVector& p, const std::vector<std::size_t>& dims,
                                 const std::vector<double>& half_widths) {
    const int n = static_cast<int>(dims.size());
    RealGrid shape(dims, half_widths);
    BallRaster out;
    // counts over axis 0 (the innermost reduction axis), indexed by the
    // remaining axes of the bounding box
    std::map<std::vector<std::size_t>, std::size_t> rows;
    detail::for_each_ball_member(an, ball, dims, half_widths, [&](const std::vector<std::size_t>& gi) {
        ++out.cells;
        std::vector<std::size_t> rest(gi.begin() + 1, gi.end());
        ++rows[rest];
    });
    out.measure = static_cast<double>(out.cells) * shape.cell_volume();
    // inner layer: (count * h_0)^{1/p_0} per row (or 1 for p = inf)
    std::map<std::vector<std::size_t>, double> layer;
    for (const auto& [rest, cnt] : rows) {
        const double p0 = p.p(0);
        layer[rest] = std::isinf(p0) ? 1.0
                                     : std::pow(static_cast<double>(cnt) * shape.spacing(0), 1.0 / p0);
    }
    // remaining layers axis by axis
    for (int ax = 1; ax < n; ++ax) {
        std::map<std::vector<std::size_t>, double> next;
        const double pax = p.p(ax);
        if (std::isinf(pax)) {
            for (const auto& [key, val] : layer) {
                std::vector<std::size_t> rest(key.begin() + 1, key.end());
                auto it = next.find(rest);
                if (it == next.end()) next[rest] = val;
                else it->second = std::max(it->second, val);
            }
        } else {
            std::map<std::vector<std::size_t>, double> maxv, sum;
            for (const auto& [key, val] : layer) {
                std::vector<std::size_t> rest(key.begin() + 1, key.end());
                maxv[rest] = std::max(maxv[rest], val);
            }
            for (const auto& [key, val] : layer) {
                std::vector<std::size_t> rest(key.begin() + 1, key.end());
                if (maxv[rest] > 0.0) sum[rest] += std::pow(val / maxv[rest], pax);
            }
            for (const auto& [rest, s] : sum)
                next[rest] = maxv[rest] * std::pow(s * shape.spacing(ax), 1.0 / pax);
        }
        layer.swap(next);
    }
    out.chi_norm = layer.empty() ? 0.0 : layer.begin()->second;
    return out;
}

/// L^r norm of an atom's values by grid quadrature (max for r = inf).
inline double atom_lr_norm(const Atom& a) {
    if (std::isinf(a.params.r)) return a.values.max_abs();
    RealGrid shape(a.dims, a.half_widths);
    double s = 0.0;
    for (double v : a.values.v) s += std::pow(std::abs(v), a.params.r);
    return std::pow(s * shape.cell_volume(), 1.0 / a.params.r);
}

struct ValidationReport {
    bool support_ok = false, size_ok = false, moments_ok = false;
    double support_margin = 0.0;  // max |a| outside the ball / max |a|
    double size_margin = 0.0;     // ||a||_r / allowed bound
    double moment_margin = 0.0;   // max normalized |moment|
    bool pass() const { return support_ok && size_ok && moments_ok; }
};

/// Checks Definition-style atom conditions: support in the ball (one boundary
/// cell band of slack), the L^r size bound, and vanishing moments normalized
/// by ||a||_2 |B|^{1/2} r^{alpha.a} (centered monomials).
inline ValidationReport validate_atom(const Anisotropy& an, const Atom& atom, double tol) {
    ValidationReport rep;
    RealGrid shape(atom.dims, atom.half_widths);
    const int n = shape.ndim();
    const double cell = shape.cell_volume();

    // one-cell band in quasi-norm units
    std::vector<double> diag(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) diag[static_cast<std::size_t>(i)] = shape.spacing(i);
    const double band = quasi_norm(an, diag);

    const double amax = atom.values.max_abs();
    double outside = 0.0;
    std::vector<double> d(static_cast<std::size_t>(n));
    double l2sq = 0.0;
    std::vector<std::vector<int>> alphas = poly_multi_indices(n, atom.params.s);
    std::vector<double> moments(alphas.size(), 0.0);
    std::vector<double> axis_scale(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        axis_scale[static_cast<std::size_t>(i)] = std::pow(atom.ball.radius, an.a(i));
    atom.values.for_each(shape, [&](std::size_t lf, std::size_t, const std::vector<std::size_t>& gi) {
        const double v = atom.values.v[lf];
        if (v == 0.0) return;
        detail::folded_displacement(shape, gi, atom.ball.center, d);
        if (!detail::in_ball(an, d, atom.ball.radius + band)) outside = std::max(outside, std::abs(v));
        l2sq += v * v;
        std::vector<double> u(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) u[static_cast<std::size_t>(i)] = d[static_cast<std::size_t>(i)] / axis_scale[static_cast<std::size_t>(i)];
        for (std::size_t t = 0; t < alphas.size(); ++t) {
            double m = v;
            for (int i = 0; i < n; ++i)
                for (int rep2 = 0; rep2 < alphas[t][static_cast<std::size_t>(i)]; ++rep2)
                    m *= u[static_cast<std::size_t>(i)];
            moments[t] += m;
        }
    });
    rep.support_margin = amax > 0.0 ? outside / amax : 0.0;
    rep.support_ok = rep.support_margin <= tol;

    const BallRaster raster = rasterize_ball(an, atom.ball, atom.params.p, atom.dims, atom.half_widths);
    const double lr = atom_lr_norm(atom);
    const double bound = std::isinf(atom.params.r)
                             ? 1.0 / raster.chi_norm
                             : std::pow(raster.measure, 1.0 / atom.params.r) / raster.chi_norm;
    rep.size_margin = bound > 0.0 ? lr / bound : (lr > 0.0 ? kInf : 0.0);
    rep.size_ok = rep.size_margin <= 1.0 + tol;

    const double l2 = std::sqrt(l2sq * cell);
    const double denom = l2 * std::sqrt(std::max(raster.measure, cell));
    double mm = 0.0;
    for (double m : moments) mm = std::max(mm, std::abs(m * cell));
    rep.moment_margin = denom > 0.0 ? mm / denom : 0.0;
    rep.moments_ok = rep.moment_margin <= tol;
    return rep;
}

/// One kappa-weighted atom of an atomic decomposition.
struct AtomicEntry {
    int j = 0;
    int k = 0;
    double kappa = 0.0;
    double chi_norm = 0.0;  // ||chi_{B_{j,k}}||_{L^p}, cached at build time
    Atom atom;
};

struct AtomicDecomposition {
    std::vector<AtomicEntry> entries;  // ordered by (j, k)
    std::optional<AtomicEntry> coarse; // absorbs levels below j_min
    int j_min = 0, j_max = 0;
    double C0 = 0.0;                   // measured max ||A_{j,k}||_inf / 2^j
    std::vector<std::size_t> dims;
    std::vector<double> half_widths;
};

/// sum kappa a over entries plus the coarse atom, in fixed (j, k) order.
inline RealGrid synthesize(const AtomicDecomposition& dec) {
    RealGrid out(dec.dims, dec.half_widths);
    for (const AtomicEntry& e : dec.entries) {
        if (e.atom.dims != dec.dims || e.atom.half_widths != dec.half_widths)
            throw std::domain_error("synthesize: non-conformable atom");
        e.atom.values.add_to(out, e.kappa);
    }
    if (dec.coarse) dec.coarse->atom.values.add_to(out, dec.coarse->kappa);
    return out;
}

/// The atomic-norm expression of this particular decomposition:
/// || { sum [ |kappa| chi_B / ||chi_B|| ]^{p_-} }^{1/p_-} ||_{L^p}.
/// An upper bound for the infimal atomic norm, never claimed to equal it.
inline double atomic_norm_upper(const AtomicDecomposition& dec, const Anisotropy& an,
                                const ExponentVector& p) {
    RealGrid acc(dec.dims, dec.half_widths);
    const double pm = p.p_minus();
    auto accumulate = [&](const AtomicEntry& e) {
        if (e.kappa == 0.0) return;
        const double w = std::pow(std::abs(e.kappa) / e.chi_norm, pm);
        detail::for_each_ball_member(an, e.atom.ball, dec.dims, dec.half_widths,
                                     [&](const std::vector<std::size_t>& gi) { acc[acc.flat_index(gi)] += w; });
    };
    for (const AtomicEntry& e : dec.entries) accumulate(e);
    if (dec.coarse) accumulate(*dec.coarse);
    for (auto& v : acc.values()) v = std::pow(v, 1.0 / pm);
    return mixed_norm(acc, p);
}

/// Random atom: smooth radial bump times a random trigonometric polynomial,
/// moments up to s removed by unweighted L^2(B) projection (the polynomial is
/// cut at the ball boundary), rescaled to meet the size bound with equality.
inline Atom random_atom(const Anisotropy& an, const ExponentVector& p, double r, int s,
                        const AnisoBall& ball, std::uint64_t seed,
                        const std::vector<std::size_t>& dims, const std::vector<double>& half_widths) {
    Rng rng(seed);
    RealGrid shape(dims, half_widths);
    const int n = shape.ndim();
    std::vector<std::ptrdiff_t> lo(static_cast<std::size_t>(n));
    std::vector<std::size_t> ext(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const std::size_t ii = static_cast<std::size_t>(i);
        const double half = std::pow(ball.radius, an.a(i));
        std::ptrdiff_t e = static_cast<std::ptrdiff_t>(std::ceil(half / shape.spacing(i)));
        e = std::min<std::ptrdiff_t>(e, static_cast<std::ptrdiff_t>(shape.dim(i)) / 2);
        // nearest cell to the center
        const double rel = (ball.center[ii] + shape.half_width(i)) / shape.spacing(i) - 0.5;
        const std::ptrdiff_t ci = static_cast<std::ptrdiff_t>(std::llround(rel));
        lo[ii] = ci - e;
        ext[ii] = static_cast<std::size_t>(2 * e + 1);
    }

    for (int attempt = 0; attempt < 10; ++attempt) {
        Patch patch = Patch::make(lo, ext);
        // random trig polynomial coefficients
        const int waves = 4;
        std::vector<std::vector<double>> kvec(waves, std::vector<double>(static_cast<std::size_t>(n)));
        std::vector<double> amp(waves), phase(waves);
        for (int w = 0; w < waves; ++w) {
            amp[static_cast<std::size_t>(w)] = rng.normal();
            phase[static_cast<std::size_t>(w)] = rng.uniform(0.0, 2.0 * kPi);
            for (int i = 0; i < n; ++i)
                kvec[static_cast<std::size_t>(w)][static_cast<std::size_t>(i)] =
                    static_cast<double>(1 + rng.integer(3));
        }
        std::vector<double> d(static_cast<std::size_t>(n)), u(static_cast<std::size_t>(n));
        std::vector<double> axis_scale(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i)
            axis_scale[static_cast<std::size_t>(i)] = std::pow(ball.radius, an.a(i));
        double raw_l2 = 0.0;
        patch.for_each(shape, [&](std::size_t lf, std::size_t, const std::vector<std::size_t>& gi) {
            detail::folded_displacement(shape, gi, ball.center, d);
            double q2 = 0.0;
            for (int i = 0; i < n; ++i) {
                u[static_cast<std::size_t>(i)] = d[static_cast<std::size_t>(i)] / axis_scale[static_cast<std::size_t>(i)];
                q2 += u[static_cast<std::size_t>(i)] * u[static_cast<std::size_t>(i)];
            }
            if (q2 >= 1.0) return;
            const double w = std::exp(-1.0 / (1.0 - q2));
            double trig = 0.0;
            for (int wv = 0; wv < waves; ++wv) {
                double arg = phase[static_cast<std::size_t>(wv)];
                for (int i = 0; i < n; ++i)
                    arg += kPi * kvec[static_cast<std::size_t>(wv)][static_cast<std::size_t>(i)] * u[static_cast<std::size_t>(i)];
                trig += amp[static_cast<std::size_t>(wv)] * std::cos(arg);
            }
            patch.v[lf] = w * trig;
            raw_l2 += patch.v[lf] * patch.v[lf];
        });
        if (raw_l2 == 0.0) continue;

        // unweighted L^2(B) projection onto P_s, then cut at the ball boundary
        Patch chi = patch;
        patch.for_each(shape, [&](std::size_t lf, std::size_t, const std::vector<std::size_t>& gi) {
            detail::folded_displacement(shape, gi, ball.center, d);
            chi.v[lf] = detail::in_ball(an, d, ball.radius) ? 1.0 : 0.0;
        });
        RealGrid dense(dims, half_widths);
        patch.add_to(dense);
        PolyCoeffs proj = poly_project(an, dense, chi, s, ball.center, ball.radius);
        double new_l2 = 0.0;
        patch.for_each(shape, [&](std::size_t lf, std::size_t, const std::vector<std::size_t>& gi) {
            if (chi.v[lf] == 0.0) {
                patch.v[lf] = 0.0;
                return;
            }
            patch.v[lf] -= proj.eval_cell(shape, gi);
            new_l2 += patch.v[lf] * patch.v[lf];
        });
        if (new_l2 <= 1e-20 * raw_l2) continue;  // degenerate draw, resample

        Atom atom{ball, std::move(patch), dims, half_widths, AtomParams{p, r, s}};
        const BallRaster raster = rasterize_ball(an, ball, p, dims, half_widths);
        const double bound = std::isinf(r) ? 1.0 / raster.chi_norm
                                           : std::pow(raster.measure, 1.0 / r) / raster.chi_norm;
        const double cur = atom_lr_norm(atom);
        if (cur == 0.0) continue;
        const double scale = bound / cur;
        for (double& v : atom.values.v) v *= scale;
        return atom;
    }
    throw std::runtime_error("random_atom: degenerate draws exhausted retries");
}

} // namespace aniso
