#pragma once

// Whitney covering of open grid sets by anisotropic balls (greedy
// farthest-inside selection, radii d(x_k, complement)/(2A)) and the smooth
// partition of unity eta_k = zeta_k / sum zeta_k subordinate to it.

#include <cmath>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "aniso/geometry.hpp"
#include "aniso/grid.hpp"
#include "aniso/patch.hpp"

namespace aniso {

namespace detail {

inline std::vector<std::size_t> complement_boundary_cells(const BoolGrid& omega) {
    // Complement cells with a face neighbor inside omega; the quasi-norm
    // distance to the complement is always attained on these.
    std::vector<std::size_t> out;
    const int n = omega.ndim();
    std::vector<std::size_t> idx(static_cast<std::size_t>(n)), jdx(static_cast<std::size_t>(n));
    for (std::size_t f = 0; f < omega.size(); ++f) {
        if (omega[f]) continue;
        omega.unflatten(f, idx);
        bool touches = false;
        for (int i = 0; i < n && !touches; ++i) {
            const std::size_t d = omega.dim(i);
            for (int sgn = -1; sgn <= 1 && !touches; sgn += 2) {
                jdx = idx;
                const std::size_t ii = static_cast<std::size_t>(i);
                jdx[ii] = (idx[ii] + d + static_cast<std::size_t>(sgn == 1 ? 1 : d - 1)) % d;
                if (omega[omega.flat_index(jdx)]) touches = true;
            }
        }
        if (touches) out.push_back(f);
    }
    return out;
}

} // namespace detail

/// d(x, Omega^c) = min over complement cells of |x - y|_a (periodic
/// min-image); 0 off Omega.  Exact: the minimizer always lies on a face
/// boundary cell of the complement.
inline double quasi_dist_to_complement(const Anisotropy& an, const BoolGrid& omega,
                                       const QuasiNormTable& lut, std::size_t x_flat) {
    bool has_complement = false;
    for (std::size_t f = 0; f < omega.size(); ++f)
        if (!omega[f]) { has_complement = true; break; }
    if (!has_complement) throw std::domain_error("quasi_dist_to_complement: Omega is the whole grid");
    if (!omega[x_flat]) return 0.0;
    const auto boundary = detail::complement_boundary_cells(omega);
    const int n = omega.ndim();
    std::vector<std::size_t> xi(static_cast<std::size_t>(n)), yi(static_cast<std::size_t>(n));
    std::vector<std::ptrdiff_t> off(static_cast<std::size_t>(n));
    omega.unflatten(x_flat, xi);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t y : boundary) {
        omega.unflatten(y, yi);
        for (int i = 0; i < n; ++i) {
            const std::size_t ii = static_cast<std::size_t>(i);
            off[ii] = static_cast<std::ptrdiff_t>(yi[ii]) - static_cast<std::ptrdiff_t>(xi[ii]);
        }
        best = std::min(best, lut(off));
    }
    return best;
}

/// Full distance field over Omega (0 outside).
inline std::vector<double> quasi_dist_field(const Anisotropy& an, const BoolGrid& omega,
                                            const QuasiNormTable& lut) {
    const auto boundary = detail::complement_boundary_cells(omega);
    if (boundary.empty()) throw std::domain_error("quasi_dist_field: Omega is the whole grid");
    const int n = omega.ndim();
    std::vector<double> dist(omega.size(), 0.0);
    std::vector<std::size_t> xi(static_cast<std::size_t>(n)), yi(static_cast<std::size_t>(n));
    std::vector<std::ptrdiff_t> off(static_cast<std::size_t>(n));
    for (std::size_t f = 0; f < omega.size(); ++f) {
        if (!omega[f]) continue;
        omega.unflatten(f, xi);
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t y : boundary) {
            omega.unflatten(y, yi);
            for (int i = 0; i < n; ++i) {
                const std::size_t ii = static_cast<std::size_t>(i);
                off[ii] = static_cast<std::ptrdiff_t>(yi[ii]) - static_cast<std::ptrdiff_t>(xi[ii]);
            }
            best = std::min(best, lut(off));
        }
        dist[f] = best;
    }
    (void)an;
    return dist;
}

struct WhitneyCover {
    std::vector<std::size_t> center_flat;
    std::vector<std::vector<double>> centers;  // coordinates
    std::vector<double> radii;                 // r_k = d(x_k)/(2A)
    double A = 1.0;
    double A_star = 1.1;
    int max_overlap = 0;  // observed bound R of Lemma-3.3(vi) style counts

    std::size_t size() const { return radii.size(); }
};

namespace detail {

template <class Fn>
void for_each_ball_cell(const Anisotropy& an, const BoolGrid& grid_shape, const QuasiNormTable& lut,
                        const std::vector<std::size_t>& center_idx, double radius, Fn&& fn) {
    const int n = grid_shape.ndim();
    std::vector<std::ptrdiff_t> ext(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double half = std::pow(radius, an.a(i));
        std::ptrdiff_t e = static_cast<std::ptrdiff_t>(std::ceil(half / grid_shape.spacing(i)));
        ext[static_cast<std::size_t>(i)] =
            std::min<std::ptrdiff_t>(e, static_cast<std::ptrdiff_t>(grid_shape.dim(i)) / 2);
    }
    std::vector<std::ptrdiff_t> off(static_cast<std::size_t>(n), 0);
    std::vector<std::size_t> gi(static_cast<std::size_t>(n));
    std::function<void(int)> rec = [&](int ax) {
        if (ax == n) {
            if (lut(off) < radius) {
                for (int i = 0; i < n; ++i) {
                    const std::size_t ii = static_cast<std::size_t>(i);
                    const std::ptrdiff_t d = static_cast<std::ptrdiff_t>(grid_shape.dim(i));
                    gi[ii] = static_cast<std::size_t>(
                        (((static_cast<std::ptrdiff_t>(center_idx[ii]) + off[ii]) % d) + d) % d);
                }
                fn(grid_shape.flat_index(gi), off);
            }
            return;
        }
        for (std::ptrdiff_t o = -ext[static_cast<std::size_t>(ax)]; o <= ext[static_cast<std::size_t>(ax)]; ++o) {
            off[static_cast<std::size_t>(ax)] = o;
            rec(ax + 1);
        }
    };
    rec(0);
}

} // namespace detail

/// Greedy Whitney cover: repeatedly take the uncovered cell of Omega farthest
/// from the complement, with radius d/(2A).  The six covering properties are
/// validated before returning.
inline WhitneyCover whitney_cover(const Anisotropy& an, const BoolGrid& omega, double A,
                                  const QuasiNormTable& lut, double A_star = 1.1) {
    if (!(A >= 1.0)) throw std::invalid_argument("whitney_cover: A must be >= 1");
    WhitneyCover cover;
    cover.A = A;
    cover.A_star = A_star;
    std::size_t inside = 0;
    for (std::size_t f = 0; f < omega.size(); ++f) inside += omega[f] ? 1 : 0;
    if (inside == 0) return cover;
    const std::vector<double> dist = quasi_dist_field(an, omega, lut);

    std::vector<std::uint8_t> covered(omega.size(), 0);
    using Entry = std::pair<double, std::size_t>;
    std::priority_queue<Entry> heap;
    for (std::size_t f = 0; f < omega.size(); ++f)
        if (omega[f]) heap.emplace(dist[f], f);

    const int n = omega.ndim();
    std::vector<std::size_t> idx(static_cast<std::size_t>(n));
    while (!heap.empty()) {
        const auto [d, f] = heap.top();
        heap.pop();
        if (covered[f]) continue;
        const double r = d / (2.0 * A);
        omega.unflatten(f, idx);
        std::vector<double> c(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) c[static_cast<std::size_t>(i)] = omega.coord(i, idx[static_cast<std::size_t>(i)]);
        cover.center_flat.push_back(f);
        cover.centers.push_back(c);
        cover.radii.push_back(r);
        covered[f] = 1;  // the center is always covered even if r is sub-cell
        detail::for_each_ball_cell(an, omega, lut, idx, r,
                                   [&](std::size_t gf, const std::vector<std::ptrdiff_t>&) { covered[gf] = 1; });
    }

    // Validation of the covering properties.
    for (std::size_t f = 0; f < omega.size(); ++f)
        if (omega[f] && !covered[f])
            throw std::runtime_error("whitney_cover: covering property failed (internal error)");
    const std::size_t K = cover.size();
    std::vector<std::ptrdiff_t> off(static_cast<std::size_t>(n));
    std::vector<std::size_t> ii(static_cast<std::size_t>(n)), jj(static_cast<std::size_t>(n));
    for (std::size_t k = 0; k < K; ++k) {
        omega.unflatten(cover.center_flat[k], ii);
        const double Ar = A * cover.radii[k];
        // (iii) B(x_k, A r_k) inside Omega; (iv) A r_k < d(x) < 3 A r_k there
        detail::for_each_ball_cell(an, omega, lut, ii, Ar,
                                   [&](std::size_t gf, const std::vector<std::ptrdiff_t>&) {
                                       if (!omega[gf])
                                           throw std::runtime_error(
                                               "whitney_cover: expanded ball leaves Omega (internal error)");
                                       if (!(dist[gf] > Ar) || !(dist[gf] < 3.0 * Ar))
                                           throw std::runtime_error(
                                               "whitney_cover: distance sandwich failed (internal error)");
                                   });
        // (v) some complement point within 3 A r_k of the center
        if (!(dist[cover.center_flat[k]] < 3.0 * Ar))
            throw std::runtime_error("whitney_cover: no nearby complement point (internal error)");
    }
    int max_overlap = 0;
    for (std::size_t k = 0; k < K; ++k) {
        omega.unflatten(cover.center_flat[k], ii);
        int count = 0;
        for (std::size_t j = 0; j < K; ++j) {
            omega.unflatten(cover.center_flat[j], jj);
            for (int i = 0; i < n; ++i) {
                const std::size_t ix = static_cast<std::size_t>(i);
                off[ix] = static_cast<std::ptrdiff_t>(jj[ix]) - static_cast<std::ptrdiff_t>(ii[ix]);
            }
            const double cd = lut(off);
            if (j != k && cd < (cover.radii[k] + cover.radii[j]) / 4.0)
                throw std::runtime_error("whitney_cover: quarter balls intersect (internal error)");
            if (cd < cover.radii[k] + A * cover.radii[j]) ++count;
        }
        max_overlap = std::max(max_overlap, count);
    }
    cover.max_overlap = max_overlap;
    return cover;
}

/// Smooth weights eta_k supported in the delta_inner-dilated Whitney balls
/// with sum_k eta_k = chi_Omega.
struct PartitionOfUnity {
    std::vector<Patch> eta;
    std::vector<AnisoBall> support_balls;  // B_k^{(A*)}
    double delta_inner = 1.05;
};

namespace detail {

// C^inf cutoff of the scaled quasi-norm q = |u|_a: 1 for q <= 1, 0 for
// q >= delta, exp-smooth in between.
inline double smooth_cutoff(double q, double delta) {
    if (q <= 1.0) return 1.0;
    if (q >= delta) return 0.0;
    const double s = (q - 1.0) / (delta - 1.0);
    const double e1 = std::exp(-1.0 / (1.0 - s));
    const double e0 = std::exp(-1.0 / s);
    return e1 / (e1 + e0);
}

} // namespace detail

inline PartitionOfUnity partition_of_unity(const Anisotropy& an, const WhitneyCover& cover,
                                           const BoolGrid& omega, const QuasiNormTable& lut,
                                           double delta_inner = 1.05) {
    if (!(delta_inner > 1.0) || !(delta_inner < cover.A_star) || !(delta_inner <= cover.A))
        throw std::invalid_argument("partition_of_unity: need 1 < delta_inner < A*, delta_inner <= A");
    PartitionOfUnity pou;
    pou.delta_inner = delta_inner;
    const int n = omega.ndim();
    RealGrid denom(omega.dims(), omega.half_widths());
    std::vector<std::size_t> ci(static_cast<std::size_t>(n));
    for (std::size_t k = 0; k < cover.size(); ++k) {
        const double rk = cover.radii[k];
        omega.unflatten(cover.center_flat[k], ci);
        std::vector<std::ptrdiff_t> lo(static_cast<std::size_t>(n));
        std::vector<std::size_t> ext(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            const std::size_t ii = static_cast<std::size_t>(i);
            const double half = std::pow(delta_inner * rk, an.a(i));
            std::ptrdiff_t e = static_cast<std::ptrdiff_t>(std::ceil(half / omega.spacing(i)));
            e = std::min<std::ptrdiff_t>(e, static_cast<std::ptrdiff_t>(omega.dim(i)) / 2);
            lo[ii] = static_cast<std::ptrdiff_t>(ci[ii]) - e;
            ext[ii] = static_cast<std::size_t>(2 * e + 1);
        }
        Patch zeta = Patch::make(lo, ext);
        std::vector<std::ptrdiff_t> off(static_cast<std::size_t>(n));
        zeta.for_each(omega, [&](std::size_t lf, std::size_t gf, const std::vector<std::size_t>& gi) {
            for (int i = 0; i < n; ++i) {
                const std::size_t ii = static_cast<std::size_t>(i);
                off[ii] = static_cast<std::ptrdiff_t>(gi[ii]) - static_cast<std::ptrdiff_t>(ci[ii]);
            }
            const double q = lut(off) / rk;
            zeta.v[lf] = detail::smooth_cutoff(q, delta_inner);
            denom[gf] += zeta.v[lf];
        });
        pou.eta.push_back(std::move(zeta));
        pou.support_balls.push_back(AnisoBall{cover.centers[k], cover.A_star * rk});
    }
    for (std::size_t f = 0; f < omega.size(); ++f)
        if (omega[f] && denom[f] < 1e-14)
            throw std::runtime_error("partition_of_unity: cover misses an interior point (internal error)");
    for (Patch& eta : pou.eta) {
        eta.for_each(omega, [&](std::size_t lf, std::size_t gf, const std::vector<std::size_t>&) {
            eta.v[lf] = denom[gf] > 0.0 ? eta.v[lf] / denom[gf] : 0.0;
        });
    }
    return pou;
}

} // namespace aniso
