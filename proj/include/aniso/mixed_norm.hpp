#pragma once

// The iterated mixed-norm Lebesgue quasi-norm ||f||_{L^p}: innermost axis x_1
// first, midpoint-rule Riemann sums per layer, exact max for p_i = inf.
// Each layer is accumulated with the column maximum factored out, so small
// exponents stay in range without a separate log-space path.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "aniso/exponents.hpp"
#include "aniso/grid.hpp"

namespace aniso {

struct MixedNormResult {
    double value = 0.0;
    bool overflow = false;
};

namespace detail {

// Reduce the leading (slowest) axis of a row-major buffer with exponent p and
// axis spacing h: out[r] = (sum_j buf[j*rest+r]^p h)^{1/p}, or max for p=inf.
inline void reduce_leading_axis(const std::vector<double>& buf, std::size_t d, std::size_t rest,
                                double p, double h, std::vector<double>& out) {
    out.assign(rest, 0.0);
    if (std::isinf(p)) {
        for (std::size_t j = 0; j < d; ++j)
            for (std::size_t r = 0; r < rest; ++r)
                out[r] = std::max(out[r], buf[j * rest + r]);
        return;
    }
    std::vector<double> m(rest, 0.0);
    for (std::size_t j = 0; j < d; ++j)
        for (std::size_t r = 0; r < rest; ++r)
            m[r] = std::max(m[r], buf[j * rest + r]);
    std::vector<double> s(rest, 0.0);
    for (std::size_t j = 0; j < d; ++j)
        for (std::size_t r = 0; r < rest; ++r)
            if (m[r] > 0.0) s[r] += std::pow(buf[j * rest + r] / m[r], p);
    for (std::size_t r = 0; r < rest; ++r)
        out[r] = m[r] > 0.0 ? m[r] * std::pow(s[r] * h, 1.0 / p) : 0.0;
}

} // namespace detail

template <class T>
MixedNormResult mixed_norm_checked(const Grid<T>& f, const ExponentVector& p) {
    if (p.dim() != f.ndim()) throw std::invalid_argument("mixed_norm: exponent dimension mismatch");
    std::vector<double> cur(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
        cur[i] = std::abs(f[i]);
        if (std::isnan(cur[i])) throw std::domain_error("mixed_norm: NaN in values");
    }
    std::size_t rest = f.size();
    std::vector<double> next;
    for (int ax = 0; ax < f.ndim(); ++ax) {
        const std::size_t d = f.dim(ax);
        rest /= d;
        detail::reduce_leading_axis(cur, d, rest, p.p(ax), f.spacing(ax), next);
        cur.swap(next);
    }
    MixedNormResult r;
    r.value = cur[0];
    r.overflow = std::isinf(r.value);
    return r;
}

template <class T>
double mixed_norm(const Grid<T>& f, const ExponentVector& p) {
    return mixed_norm_checked(f, p).value;
}

/// ||chi_{Q_a(x,r)}||_{L^p} = prod_i 2^{1/p_i} r^{a_i/p_i}; an infinite
/// exponent contributes factor 1 (the sup of an indicator).
inline double char_cube_norm(const Anisotropy& an, const ExponentVector& p, double r) {
    if (!(r > 0.0)) throw std::domain_error("char_cube_norm: r must be > 0");
    if (p.dim() != an.dim()) throw std::invalid_argument("char_cube_norm: dimension mismatch");
    double v = 1.0;
    for (int i = 0; i < an.dim(); ++i) {
        const double pi = p.p(i);
        if (std::isinf(pi)) continue;
        v *= std::pow(2.0, 1.0 / pi) * std::pow(r, an.a(i) / pi);
    }
    return v;
}

/// int |f g| by the same midpoint quadrature the norms use.
template <class T, class U>
double holder_pairing(const Grid<T>& f, const Grid<U>& g) {
    if (!f.conformable(g)) throw std::domain_error("holder_pairing: non-conformable grids");
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) s += std::abs(f[i]) * std::abs(g[i]);
    return s * f.cell_volume();
}

} // namespace aniso
