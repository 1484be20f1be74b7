#pragma once

// Iterative radix-2 complex FFT (grids are power-of-two by construction) and
// continuous-transform sampling helpers.  The convention throughout matches
// fhat(xi) = int f(x) e^{-2 pi i x.xi} dx, sampled on the frequency lattice
// xi_m = m / (2 L_i), m in [-d_i/2, d_i/2); spectrum() returns those samples
// including the phase factors from cell-centered spatial sampling, so that
// from_spectrum(spectrum(f)) == f to machine precision and Plancherel holds
// with the lattice cell Delta xi = prod 1/(2 L_i).

#include <cmath>
#include <complex>
#include <map>
#include <stdexcept>
#include <vector>

#include "aniso/grid.hpp"

namespace aniso {
namespace fft {

inline const std::vector<cplx>& twiddles(std::size_t n) {
    thread_local std::map<std::size_t, std::vector<cplx>> cache;
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    std::vector<cplx> w(n / 2);
    for (std::size_t k = 0; k < n / 2; ++k) {
        const double ang = -2.0 * kPi * static_cast<double>(k) / static_cast<double>(n);
        w[k] = cplx(std::cos(ang), std::sin(ang));
    }
    return cache.emplace(n, std::move(w)).first->second;
}

/// In-place radix-2 transform of a contiguous length-n buffer.
inline void transform(cplx* z, std::size_t n, bool inverse) {
    if (n == 1) return;
    if (!is_pow2(n)) throw std::invalid_argument("fft: length must be a power of two");
    // bit reversal
    for (std::size_t i = 0, j = 0; i < n; ++i) {
        if (j > i) std::swap(z[i], z[j]);
        std::size_t m = n >> 1;
        while (m >= 1 && (j & m)) { j ^= m; m >>= 1; }
        j |= m;
    }
    const std::vector<cplx>& w = twiddles(n);
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t half = len >> 1, step = n / len;
        for (std::size_t blk = 0; blk < n; blk += len) {
            for (std::size_t k = 0; k < half; ++k) {
                cplx tw = w[k * step];
                if (inverse) tw = std::conj(tw);
                const cplx odd = z[blk + k + half] * tw;
                const cplx even = z[blk + k];
                z[blk + k] = even + odd;
                z[blk + k + half] = even - odd;
            }
        }
    }
}

/// Unnormalized n-d DFT over every axis of a row-major complex array.
inline void transform_nd(std::vector<cplx>& v, const std::vector<std::size_t>& dims, bool inverse) {
    std::size_t total = 1;
    for (std::size_t d : dims) total *= d;
    if (v.size() != total) throw std::invalid_argument("fft: size mismatch");
    std::vector<cplx> scratch;
    std::size_t stride = 1;  // stride of the current axis, walking from last to first
    for (std::size_t ax = dims.size(); ax-- > 0;) {
        const std::size_t d = dims[ax];
        const std::size_t block = stride * d;
        if (stride == 1) {
            for (std::size_t base = 0; base < total; base += d) transform(&v[base], d, inverse);
        } else {
            scratch.resize(d);
            for (std::size_t outer = 0; outer < total; outer += block) {
                for (std::size_t inner = 0; inner < stride; ++inner) {
                    const std::size_t base = outer + inner;
                    for (std::size_t k = 0; k < d; ++k) scratch[k] = v[base + k * stride];
                    transform(scratch.data(), d, inverse);
                    for (std::size_t k = 0; k < d; ++k) v[base + k * stride] = scratch[k];
                }
            }
        }
        stride = block;
    }
}

} // namespace fft

/// Folded integer frequency for DFT bin q on an axis of length d.
inline std::ptrdiff_t folded_freq_index(std::size_t q, std::size_t d) {
    return static_cast<std::ptrdiff_t>(q) < static_cast<std::ptrdiff_t>(d) / 2
               ? static_cast<std::ptrdiff_t>(q)
               : static_cast<std::ptrdiff_t>(q) - static_cast<std::ptrdiff_t>(d);
}

namespace fft {

// Per-axis phase e^{-2 pi i x_j xi_m} decomposes as ph(m) e^{-2 pi i j m / d}
// with ph(m) = e^{i pi m} e^{-i pi m / d} from x_j = -L + (j + 1/2) h.
inline std::vector<cplx> axis_phases(std::size_t d) {
    std::vector<cplx> ph(d);
    for (std::size_t q = 0; q < d; ++q) {
        const double m = static_cast<double>(folded_freq_index(q, d));
        const double ang = kPi * m - kPi * m / static_cast<double>(d);
        ph[q] = cplx(std::cos(ang), std::sin(ang));
    }
    return ph;
}

template <class T>
void apply_phases(std::vector<cplx>& v, const Grid<T>& shape, bool conjugate) {
    const auto& dims = shape.dims();
    std::vector<std::vector<cplx>> ph(dims.size());
    for (std::size_t i = 0; i < dims.size(); ++i) ph[i] = axis_phases(dims[i]);
    std::vector<std::size_t> idx(dims.size());
    for (std::size_t f = 0; f < v.size(); ++f) {
        std::size_t rem = f;
        cplx m(1.0, 0.0);
        for (std::size_t i = dims.size(); i-- > 0;) {
            idx[i] = rem % dims[i];
            rem /= dims[i];
        }
        for (std::size_t i = 0; i < dims.size(); ++i) m *= ph[i][idx[i]];
        v[f] *= conjugate ? std::conj(m) : m;
    }
}

} // namespace fft

/// Samples of the continuous Fourier transform on the frequency lattice.
template <class T>
ComplexGrid spectrum(const Grid<T>& f) {
    ComplexGrid out = f.template like<cplx>();
    for (std::size_t i = 0; i < f.size(); ++i) out[i] = cplx(f[i]);
    fft::transform_nd(out.values(), f.dims(), false);
    fft::apply_phases(out.values(), f, false);
    out *= cplx(f.cell_volume(), 0.0);
    return out;
}

inline ComplexGrid from_spectrum(const ComplexGrid& spec) {
    ComplexGrid out = spec;
    fft::apply_phases(out.values(), spec, true);
    fft::transform_nd(out.values(), spec.dims(), true);
    double dxi = 1.0;
    for (int i = 0; i < spec.ndim(); ++i) dxi /= 2.0 * spec.half_width(i);
    out *= cplx(dxi, 0.0);
    return out;
}

/// Inverse transform of a spectrum known to come from real data.
inline RealGrid from_spectrum_real(const ComplexGrid& spec) {
    ComplexGrid full = from_spectrum(spec);
    RealGrid out = spec.like<double>();
    for (std::size_t i = 0; i < full.size(); ++i) out[i] = full[i].real();
    return out;
}

/// Frequency-lattice cell volume prod_i 1/(2 L_i).
template <class T>
double freq_cell_volume(const Grid<T>& g) {
    double dxi = 1.0;
    for (int i = 0; i < g.ndim(); ++i) dxi /= 2.0 * g.half_width(i);
    return dxi;
}

/// Physical frequency coordinates xi of the DFT bin with flat index f.
template <class T>
void freq_coords(const Grid<T>& g, std::size_t f, std::span<double> xi) {
    const auto& dims = g.dims();
    for (std::size_t i = dims.size(); i-- > 0;) {
        const std::size_t q = f % dims[i];
        f /= dims[i];
        xi[i] = static_cast<double>(folded_freq_index(q, dims[i])) / (2.0 * g.half_width(static_cast<int>(i)));
    }
}

} // namespace aniso
