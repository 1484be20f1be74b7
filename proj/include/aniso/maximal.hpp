#pragma once

// Maximal operators: Hardy-Littlewood over anisotropic cubes, the iterated
// 1-d maximal composition, radial and non-tangential maximal functions over a
// dyadic scale set, the dictionary grand maximal function, and the Hardy
// quasi-norm built from them.  Everything is periodic with min-image
// distances; sups over t in (0,inf) are discretized by a ScaleSet.

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "aniso/exponents.hpp"
#include "aniso/fft.hpp"
#include "aniso/grid.hpp"
#include "aniso/mixed_norm.hpp"
#include "aniso/parallel.hpp"
#include "aniso/schwartz.hpp"

namespace aniso {

/// Finite increasing set of scales t standing in for sup over t in (0,inf).
struct ScaleSet {
    std::vector<double> scales;

    static ScaleSet dyadic(int j_min, int j_max) {
        ScaleSet s;
        for (int j = j_min; j <= j_max; ++j) s.scales.push_back(std::ldexp(1.0, j));
        return s;
    }
    /// 2^{j/per_octave} between the same endpoints.
    static ScaleSet fractional(int j_min, int j_max, int per_octave) {
        ScaleSet s;
        for (int q = j_min * per_octave; q <= j_max * per_octave; ++q)
            s.scales.push_back(std::pow(2.0, static_cast<double>(q) / per_octave));
        return s;
    }
    bool valid() const {
        if (scales.empty()) return false;
        for (std::size_t i = 1; i < scales.size(); ++i)
            if (!(scales[i] > scales[i - 1])) return false;
        return scales[0] > 0.0;
    }
};

namespace detail {

// Periodic windowed sum with half-width k along a strided axis.
inline void axis_window_sum(std::vector<double>& v, std::size_t total, std::size_t d,
                            std::size_t stride, std::size_t block, std::size_t k) {
    std::vector<double> line(d), pref(2 * d + 1, 0.0);
    for (std::size_t outer = 0; outer < total; outer += block) {
        for (std::size_t inner = 0; inner < stride; ++inner) {
            const std::size_t base = outer + inner;
            for (std::size_t j = 0; j < d; ++j) line[j] = v[base + j * stride];
            for (std::size_t j = 0; j < 2 * d; ++j) pref[j + 1] = pref[j] + line[j % d];
            for (std::size_t j = 0; j < d; ++j) {
                const std::size_t lo = j + d - k, hi = j + d + k + 1;
                v[base + j * stride] = pref[hi] - pref[lo];
            }
        }
    }
}

} // namespace detail

/// max over r in scales of the average of |f| over the anisotropic cube
/// Q_a(x, r) (sides 2 r^{a_i}), via separable periodic window sums.  Scales
/// whose cube side exceeds the box are skipped; a lower bound for the true
/// sup over all cubes containing x, monotone under scale refinement.
inline RealGrid hl_maximal(const Anisotropy& an, const RealGrid& f, const ScaleSet& scales,
                           int* skipped = nullptr) {
    if (!scales.valid()) throw std::invalid_argument("hl_maximal: invalid scale set");
    RealGrid out = f.like<double>();
    RealGrid absf = abs_grid(f);
    if (skipped) *skipped = 0;
    const int n = f.ndim();
    for (double r : scales.scales) {
        std::vector<std::size_t> k(static_cast<std::size_t>(n));
        bool fits = true;
        double cells = 1.0;
        for (int i = 0; i < n; ++i) {
            const double half = std::pow(r, an.a(i));
            const std::size_t ki = static_cast<std::size_t>(std::floor(half / f.spacing(i)));
            if (2 * ki + 1 > f.dim(i)) { fits = false; break; }
            k[static_cast<std::size_t>(i)] = ki;
            cells *= static_cast<double>(2 * ki + 1);
        }
        if (!fits) {
            if (skipped) ++*skipped;
            continue;
        }
        std::vector<double> buf = absf.values();
        std::size_t stride = 1;
        for (int i = n; i-- > 0;) {
            const std::size_t d = f.dim(i);
            detail::axis_window_sum(buf, f.size(), d, stride, stride * d, k[static_cast<std::size_t>(i)]);
            stride *= d;
        }
        const double inv = 1.0 / cells;
        for (std::size_t j = 0; j < out.size(); ++j) out[j] = std::max(out[j], buf[j] * inv);
    }
    return out;
}

namespace detail {

// 1-d maximal over periodic arcs of length <= box: for every start l the
// suffix maxima of the running averages give max over arcs [l, r) in O(d),
// so a full line costs O(d^2).
inline void line_interval_maximal(std::vector<double>& line) {
    const std::size_t d = line.size();
    std::vector<double> pref(2 * d + 1, 0.0);
    for (std::size_t j = 0; j < 2 * d; ++j) pref[j + 1] = pref[j] + std::abs(line[j % d]);
    std::vector<double> out(d, 0.0), suffix(d + 1);
    for (std::size_t l = 0; l < d; ++l) {
        // suffix[len] = max over arc lengths in [len, d] of the average of [l, l+len)
        suffix[d] = (pref[l + d] - pref[l]) / static_cast<double>(d);
        for (std::size_t len = d - 1; len >= 1; --len)
            suffix[len] = std::max((pref[l + len] - pref[l]) / static_cast<double>(len), suffix[len + 1]);
        for (std::size_t off = 0; off < d; ++off) {
            const std::size_t j = (l + off) % d;
            out[j] = std::max(out[j], suffix[off + 1]);
        }
    }
    line = out;
}

} // namespace detail

/// Composition M_n(...(M_1 f)...) of 1-d maximal operators along the axes,
/// each the sup over all periodic grid arcs containing the point (all arc
/// endpoints are used, not a dyadic subset).
inline RealGrid iterated_maximal(const RealGrid& f) {
    RealGrid out = abs_grid(f);
    std::vector<double>& v = out.values();
    const int n = f.ndim();
    std::size_t stride_tail = f.size();
    for (int ax = 0; ax < n; ++ax) {  // x_1 innermost first
        const std::size_t d = f.dim(ax);
        stride_tail /= d;
        const std::size_t stride = stride_tail, block = stride * d;
        std::vector<double> line(d);
        for (std::size_t outer = 0; outer < f.size(); outer += block) {
            for (std::size_t inner = 0; inner < stride; ++inner) {
                const std::size_t base = outer + inner;
                for (std::size_t j = 0; j < d; ++j) line[j] = v[base + j * stride];
                detail::line_interval_maximal(line);
                for (std::size_t j = 0; j < d; ++j) v[base + j * stride] = line[j];
            }
        }
    }
    return out;
}

namespace detail {

inline double profile_axis_extent(const SchwartzProfile& phi, int axis) {
    double e = 0.0;
    for (const auto& t : phi.terms()) {
        const Factor1D& f = t.axis[static_cast<std::size_t>(axis)];
        const double r = std::isfinite(phi.support_radius()) ? 1.0 / f.scale() : 6.0 / f.scale();
        e = std::max(e, r);
    }
    return e;
}

} // namespace detail

/// Samples of phi_t(x) = t^{-nu} phi(t^{-a} x), periodized over the box by
/// per-axis image summation (tensor terms keep this separable).
inline RealGrid sample_dilated_profile(const Anisotropy& an, const SchwartzProfile& phi, double t,
                                       const RealGrid& shape) {
    if (!(t > 0.0)) throw std::domain_error("sample_dilated_profile: t must be > 0");
    const int n = shape.ndim();
    RealGrid out = shape.like<double>();
    const double tnu = std::pow(t, -an.nu());
    std::vector<std::vector<double>> axis_vals(static_cast<std::size_t>(n));
    for (const auto& term : phi.terms()) {
        for (int i = 0; i < n; ++i) {
            const std::size_t ii = static_cast<std::size_t>(i);
            const std::size_t d = shape.dim(i);
            const double L = shape.half_width(i);
            const double ta = std::pow(t, an.a(i));
            const double ext = detail::profile_axis_extent(phi, i) * ta;
            const long mrange = std::max<long>(0, static_cast<long>(std::ceil((ext + L) / (2.0 * L))));
            axis_vals[ii].assign(d, 0.0);
            for (std::size_t j = 0; j < d; ++j) {
                const double x = shape.coord(i, j);
                double s = 0.0;
                for (long m = -mrange; m <= mrange; ++m)
                    s += term.axis[ii].deriv(0, (x + 2.0 * L * static_cast<double>(m)) / ta);
                axis_vals[ii][j] = s;
            }
        }
        std::vector<std::size_t> idx(static_cast<std::size_t>(n), 0);
        for (std::size_t fidx = 0; fidx < out.size(); ++fidx) {
            out.unflatten(fidx, idx);
            double p = term.coef;
            for (int i = 0; i < n; ++i) p *= axis_vals[static_cast<std::size_t>(i)][idx[static_cast<std::size_t>(i)]];
            out[fidx] += p;
        }
    }
    out *= tnu;
    return out;
}

/// f * phi_t via frequency multiplication by the sampled transform of phi_t.
inline RealGrid convolve_profile(const Anisotropy& an, const ComplexGrid& f_spectrum,
                                 const SchwartzProfile& phi, double t, const RealGrid& shape) {
    RealGrid kt = sample_dilated_profile(an, phi, t, shape);
    ComplexGrid ks = spectrum(kt);
    for (std::size_t i = 0; i < ks.size(); ++i) ks[i] *= f_spectrum[i];
    return from_spectrum_real(ks);
}

/// max over t in scales of |f * phi_t|.
inline RealGrid radial_maximal(const Anisotropy& an, const RealGrid& f, const SchwartzProfile& phi,
                               const ScaleSet& scales) {
    if (phi.integral() == 0.0) throw std::domain_error("radial_maximal: integral of phi must be nonzero");
    if (!scales.valid()) throw std::invalid_argument("radial_maximal: invalid scale set");
    const ComplexGrid fs = spectrum(f);
    RealGrid out = f.like<double>();
    std::vector<RealGrid> layers(scales.scales.size());
    parallel_for(scales.scales.size(), [&](std::size_t si) {
        layers[si] = convolve_profile(an, fs, phi, scales.scales[si], f);
    });
    for (const RealGrid& layer : layers)
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(out[i], std::abs(layer[i]));
    return out;
}

namespace detail {

// Periodic sliding max with half-width k via block decomposition: left/right
// partial maxima over blocks of size w = 2k+1 on the doubled line, window max
// = max(right[lo], left[hi]).
inline void sliding_max_periodic(const std::vector<double>& in, std::size_t k, std::vector<double>& out) {
    const std::size_t d = in.size();
    out.assign(d, 0.0);
    if (2 * k + 1 >= d) {
        const double m = *std::max_element(in.begin(), in.end());
        std::fill(out.begin(), out.end(), m);
        return;
    }
    const std::size_t w = 2 * k + 1;
    const std::size_t ext = d + 2 * k;
    std::vector<double> left(ext), right(ext);
    for (std::size_t i = 0; i < ext; ++i) {
        const double v = in[i % d];
        left[i] = (i % w == 0) ? v : std::max(left[i - 1], v);
    }
    for (std::size_t i = ext; i-- > 0;) {
        const double v = in[i % d];
        right[i] = (i % w == w - 1 || i + 1 == ext) ? v : std::max(right[i + 1], v);
    }
    for (std::size_t j = 0; j < d; ++j) {
        const std::size_t lo = j, hi = j + 2 * k;  // window [j-k, j+k] shifted by +k
        out[j] = std::max(right[lo], left[hi]);
    }
}

} // namespace detail

/// max over grid y with |y - x|_a < t (periodic min-image) of layer(y).
/// n = 2 uses an exact rectangle decomposition of the discrete ellipse with
/// separable block sliding maxima; other dimensions use the explicit offset
/// stencil.
inline RealGrid ball_max_filter(const Anisotropy& an, const RealGrid& layer, double t) {
    const int n = layer.ndim();
    RealGrid out = layer.like<double>();
    auto max_offsets = [&](int i) -> std::ptrdiff_t {
        const double half = std::pow(t, an.a(i));
        std::ptrdiff_t e = static_cast<std::ptrdiff_t>(std::ceil(half / layer.spacing(i))) - 1;
        return std::max<std::ptrdiff_t>(e, 0);
    };
    if (n == 2) {
        const std::size_t d0 = layer.dim(0), d1 = layer.dim(1);
        const double h0 = layer.spacing(0), h1 = layer.spacing(1);
        const double ta0 = std::pow(t, an.a(0)), ta1 = std::pow(t, an.a(1));
        // Row offsets along axis 0, inner sliding window along axis 1.
        const std::ptrdiff_t e0 = std::min<std::ptrdiff_t>(max_offsets(0), static_cast<std::ptrdiff_t>(d0) / 2);
        std::vector<std::pair<std::ptrdiff_t, std::size_t>> rows;  // (|row offset|, inner half-width cells)
        for (std::ptrdiff_t r = 0; r <= e0; ++r) {
            const double y = static_cast<double>(r) * h0;
            const double rem = 1.0 - (y / ta0) * (y / ta0);
            if (rem <= 0.0) break;
            const double wlen = ta1 * std::sqrt(rem);
            std::ptrdiff_t w = static_cast<std::ptrdiff_t>(std::ceil(wlen / h1)) - 1;
            if (w < 0) {
                if (r == 0) continue;
                break;
            }
            w = std::min<std::ptrdiff_t>(w, static_cast<std::ptrdiff_t>(d1) / 2);
            rows.emplace_back(r, static_cast<std::size_t>(w));
        }
        if (rows.empty()) return layer;
        // Distinct inner widths, each with the largest |row offset| attaining at
        // least that width: the union of these rectangles is the discrete ball.
        std::vector<std::pair<std::size_t, std::ptrdiff_t>> rects;  // (inner half-width, outer half-extent)
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const std::size_t w = rows[i].second;
            if (!rects.empty() && rects.back().first == w) continue;
            std::ptrdiff_t ymax = rows[i].first;
            for (std::size_t j = i; j < rows.size() && rows[j].second >= w; ++j) ymax = rows[j].first;
            rects.emplace_back(w, ymax);
        }
        std::vector<double> line(d1), smax, col(d0), cmax;
        RealGrid temp = layer.like<double>();
        bool first = true;
        for (const auto& [w, ymax] : rects) {
            // inner-axis pass
            for (std::size_t i0 = 0; i0 < d0; ++i0) {
                for (std::size_t i1 = 0; i1 < d1; ++i1) line[i1] = layer[i0 * d1 + i1];
                detail::sliding_max_periodic(line, w, smax);
                for (std::size_t i1 = 0; i1 < d1; ++i1) temp[i0 * d1 + i1] = smax[i1];
            }
            // outer-axis pass
            for (std::size_t i1 = 0; i1 < d1; ++i1) {
                for (std::size_t i0 = 0; i0 < d0; ++i0) col[i0] = temp[i0 * d1 + i1];
                detail::sliding_max_periodic(col, static_cast<std::size_t>(ymax), cmax);
                if (first)
                    for (std::size_t i0 = 0; i0 < d0; ++i0) out[i0 * d1 + i1] = cmax[i0];
                else
                    for (std::size_t i0 = 0; i0 < d0; ++i0)
                        out[i0 * d1 + i1] = std::max(out[i0 * d1 + i1], cmax[i0]);
            }
            first = false;
        }
        return out;
    }
    // Generic path: explicit folded offset stencil.
    std::vector<std::ptrdiff_t> ext(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        ext[static_cast<std::size_t>(i)] =
            std::min<std::ptrdiff_t>(max_offsets(i), static_cast<std::ptrdiff_t>(layer.dim(i)) / 2);
    std::vector<std::vector<std::ptrdiff_t>> offsets;
    std::vector<std::ptrdiff_t> cur(static_cast<std::size_t>(n), 0);
    std::function<void(int)> rec = [&](int ax) {
        if (ax == n) {
            double s = 0.0;
            for (int i = 0; i < n; ++i) {
                const double len = static_cast<double>(cur[static_cast<std::size_t>(i)]) * layer.spacing(i);
                const double ta = std::pow(t, an.a(i));
                s += (len / ta) * (len / ta);
            }
            if (s < 1.0) offsets.push_back(cur);
            return;
        }
        for (std::ptrdiff_t o = -ext[static_cast<std::size_t>(ax)]; o <= ext[static_cast<std::size_t>(ax)]; ++o) {
            cur[static_cast<std::size_t>(ax)] = o;
            rec(ax + 1);
        }
    };
    rec(0);
    std::vector<std::size_t> idx(static_cast<std::size_t>(n));
    for (std::size_t f = 0; f < layer.size(); ++f) {
        layer.unflatten(f, idx);
        double m = 0.0;
        std::vector<std::size_t> jdx(static_cast<std::size_t>(n));
        for (const auto& off : offsets) {
            for (int i = 0; i < n; ++i) {
                const std::ptrdiff_t d = static_cast<std::ptrdiff_t>(layer.dim(i));
                jdx[static_cast<std::size_t>(i)] = static_cast<std::size_t>(
                    ((static_cast<std::ptrdiff_t>(idx[static_cast<std::size_t>(i)]) + off[static_cast<std::size_t>(i)]) % d + d) % d);
            }
            m = std::max(m, layer[layer.flat_index(jdx)]);
        }
        out[f] = m;
    }
    return out;
}

/// sup over t in scales and |y - x|_a < t of |f * phi_t(y)|.
inline RealGrid nontangential_maximal(const Anisotropy& an, const RealGrid& f,
                                      const SchwartzProfile& phi, const ScaleSet& scales) {
    if (!scales.valid()) throw std::invalid_argument("nontangential_maximal: invalid scale set");
    const ComplexGrid fs = spectrum(f);
    std::vector<RealGrid> layers(scales.scales.size());
    parallel_for(scales.scales.size(), [&](std::size_t si) {
        const double t = scales.scales[si];
        RealGrid conv = convolve_profile(an, fs, phi, t, f);
        for (auto& v : conv.values()) v = std::abs(v);
        layers[si] = ball_max_filter(an, conv, t);
    });
    RealGrid out = f.like<double>();
    for (const RealGrid& layer : layers)
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(out[i], layer[i]);
    return out;
}

/// Pointwise max over dictionary members of the non-tangential maximal
/// function; callers pass a dictionary already normalized to ||phi||_{S_N}=1.
inline RealGrid grand_maximal(const Anisotropy& an, const RealGrid& f,
                              const SchwartzDictionary& dict, const ScaleSet& scales,
                              int threads = 0) {
    if (dict.members.empty()) throw std::domain_error("grand_maximal: empty dictionary");
    std::vector<RealGrid> per(dict.members.size());
    parallel_for(dict.members.size(), [&](std::size_t mi) {
        per[mi] = nontangential_maximal(an, f, dict.members[mi], scales);
    }, threads);
    RealGrid out = f.like<double>();
    for (const RealGrid& g : per)
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(out[i], g[i]);
    return out;
}

/// Precomputed pieces of the Hardy quasi-norm for one (a, p) configuration:
/// the grand maximal order N, the dictionary normalized for it, and the
/// canonical radial bump.
struct MaximalConfig {
    ScaleSet scales;
    SchwartzDictionary dict;  // normalized for (an, N)
    int N = 0;
    SchwartzProfile radial_phi;

    MaximalConfig(const Anisotropy& an, const ExponentVector& p, ScaleSet sc,
                  const SchwartzDictionary& base)
        : scales(std::move(sc)),
          dict(base.normalized_for(an, grand_maximal_order(an, p))),
          N(grand_maximal_order(an, p)),
          radial_phi(canonical_bump(an.dim())) {}
};

enum class HardyMethod { Grand, Radial };

inline double hardy_norm(const Anisotropy& an, const RealGrid& f, const ExponentVector& p,
                         HardyMethod method, const MaximalConfig& cfg) {
    RealGrid m = (method == HardyMethod::Grand)
                     ? grand_maximal(an, f, cfg.dict, cfg.scales)
                     : radial_maximal(an, f, cfg.radial_phi, cfg.scales);
    return mixed_norm(m, p);
}

} // namespace aniso
