#pragma once

// Frequency-side anisotropic Littlewood-Paley analysis: the normalized filter
// bank phihat_k(xi) = etahat(2^{k a} xi) / sqrt(sum_j etahat(2^{j a} xi)^2)
// with the squared partition of unity holding exactly on the covered band,
// the square functions S, g, g*_lambda, the Peetre maximal function, and the
// Calderon reproducing formula.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "aniso/fft.hpp"
#include "aniso/grid.hpp"
#include "aniso/parallel.hpp"

namespace aniso {

/// rho_a(x) = 2^{nu j} on the dyadic shell 2^j <= |x|_a < 2^{j+1}, rho_a(0)=0;
/// a dyadic rounding of |x|_a^nu.
struct RhoWeight {
    Anisotropy aniso;

    double from_norm(double q) const {
        if (q == 0.0) return 0.0;
        return std::exp2(aniso.nu() * std::floor(std::log2(q)));
    }
    double operator()(std::span<const double> x) const { return from_norm(quasi_norm(aniso, x)); }
};

class FilterBank {
public:
    Anisotropy aniso;
    int k_min = 0, k_max = 0;
    std::vector<std::size_t> dims;
    std::vector<double> half_widths;
    std::vector<std::vector<double>> phat;  // per scale k, lattice samples of phihat_k
    std::vector<std::uint8_t> covered;      // squared sum >= threshold
    std::vector<double> xi_norm;            // |xi|_a per lattice point
    double covered_fraction = 0.0;
    bool low_coverage_warning = false;

    int num_scales() const { return k_max - k_min + 1; }
    int scale_index(int k) const { return k - k_min; }
    bool has_scale(int k) const { return k >= k_min && k <= k_max; }
};

namespace detail {

inline double log_bump(double u) {
    if (!(std::abs(u) < 1.0)) return 0.0;
    return std::exp(-1.0 / (1.0 - u * u));
}

} // namespace detail

/// Builds the bank on the grid's frequency lattice.  The profile is the
/// smooth bump exp(-1/(1-u^2)) in u = log2 |xi|_a, supported in
/// |xi|_a in [1/2, 2] before dilation.
inline FilterBank build_filter_bank(const Anisotropy& an, const std::vector<std::size_t>& dims,
                                    const std::vector<double>& half_widths, int k_min, int k_max) {
    if (k_max < k_min) throw std::invalid_argument("build_filter_bank: empty scale range");
    FilterBank b;
    b.aniso = an;
    b.k_min = k_min;
    b.k_max = k_max;
    b.dims = dims;
    b.half_widths = half_widths;
    RealGrid shape(dims, half_widths);
    const std::size_t total = shape.size();
    b.xi_norm.resize(total);
    std::vector<double> xi(dims.size());
    for (std::size_t f = 0; f < total; ++f) {
        freq_coords(shape, f, xi);
        b.xi_norm[f] = quasi_norm(an, xi);
    }
    const int ns = b.num_scales();
    b.phat.assign(static_cast<std::size_t>(ns), std::vector<double>(total, 0.0));
    b.covered.assign(total, 0);
    std::size_t ncov = 0;
    for (std::size_t f = 0; f < total; ++f) {
        if (b.xi_norm[f] == 0.0) continue;
        const double u = std::log2(b.xi_norm[f]);
        double denom2 = 0.0;
        for (int k = k_min; k <= k_max; ++k) {
            const double v = detail::log_bump(u + static_cast<double>(k));
            b.phat[static_cast<std::size_t>(k - k_min)][f] = v;
            denom2 += v * v;
        }
        if (denom2 >= 1e-8) {
            b.covered[f] = 1;
            ++ncov;
            const double denom = std::sqrt(denom2);
            for (int s = 0; s < ns; ++s) b.phat[static_cast<std::size_t>(s)][f] /= denom;
        } else {
            for (int s = 0; s < ns; ++s) b.phat[static_cast<std::size_t>(s)][f] = 0.0;
        }
    }
    b.covered_fraction = static_cast<double>(ncov) / static_cast<double>(total);
    if (ncov == 0) throw std::runtime_error("build_filter_bank: no covered frequencies");
    b.low_coverage_warning = b.covered_fraction < 0.5;
    return b;
}

/// f * phi_k by frequency multiplication; exact for sampled band-limited f.
template <class T>
RealGrid lp_convolve(const Grid<T>& f, const FilterBank& bank, int k) {
    if (!bank.has_scale(k)) throw std::invalid_argument("lp_convolve: scale outside bank range");
    ComplexGrid s = spectrum(f);
    const auto& mult = bank.phat[static_cast<std::size_t>(bank.scale_index(k))];
    for (std::size_t i = 0; i < s.size(); ++i) s[i] *= mult[i];
    return from_spectrum_real(s);
}

/// All per-scale layers f * phi_k, k = k_min..k_max.
template <class T>
std::vector<RealGrid> lp_layers(const Grid<T>& f, const FilterBank& bank, int threads = 0) {
    ComplexGrid s = spectrum(f);
    std::vector<RealGrid> layers(static_cast<std::size_t>(bank.num_scales()));
    parallel_for(layers.size(), [&](std::size_t si) {
        ComplexGrid m = s;
        const auto& mult = bank.phat[si];
        for (std::size_t i = 0; i < m.size(); ++i) m[i] *= mult[i];
        layers[si] = from_spectrum_real(m);
    }, threads);
    return layers;
}

/// g(f)(x) = [sum_k |f * phi_k(x)|^2]^{1/2}.
template <class T>
RealGrid g_function(const Grid<T>& f, const FilterBank& bank) {
    std::vector<RealGrid> layers = lp_layers(f, bank);
    RealGrid out(bank.dims, bank.half_widths);
    for (const RealGrid& l : layers)
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += l[i] * l[i];
    for (auto& v : out.values()) v = std::sqrt(v);
    return out;
}

namespace detail {

// Circular correlation out(x) = sum_offsets w(delta) g(x + delta), with w
// indexed by folded offset cells (plain DFT, no sampling phases needed).
inline RealGrid stencil_correlate(const RealGrid& g, const std::vector<double>& w) {
    std::vector<cplx> G(g.size()), W(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        G[i] = cplx(g[i]);
        W[i] = cplx(w[i]);
    }
    fft::transform_nd(G, g.dims(), false);
    fft::transform_nd(W, g.dims(), false);
    for (std::size_t i = 0; i < G.size(); ++i) G[i] *= std::conj(W[i]);
    fft::transform_nd(G, g.dims(), true);
    RealGrid out = g.like<double>();
    const double inv = 1.0 / static_cast<double>(g.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = G[i].real() * inv;
    return out;
}

} // namespace detail

/// Lusin area function S(f)(x) = [sum_k 2^{-k nu} int_{B_a(x, 2^k)}
/// |f * phi_k(y)|^2 dy]^{1/2}; scales whose ball does not fit the box are
/// skipped (count reported through `skipped`).
template <class T>
RealGrid area_function(const Grid<T>& f, const FilterBank& bank, int* skipped = nullptr) {
    const Anisotropy& an = bank.aniso;
    std::vector<RealGrid> layers = lp_layers(f, bank);
    RealGrid shape(bank.dims, bank.half_widths);
    QuasiNormTable lut(an, bank.dims, bank.half_widths);
    RealGrid acc = shape.like<double>();
    if (skipped) *skipped = 0;
    const double cell = shape.cell_volume();
    for (int k = bank.k_min; k <= bank.k_max; ++k) {
        const double t = std::ldexp(1.0, k);
        bool fits = true;
        for (int i = 0; i < an.dim(); ++i)
            if (std::pow(t, an.a(i)) > shape.half_width(i)) fits = false;
        if (!fits) {
            if (skipped) ++*skipped;
            continue;
        }
        std::vector<double> ind(shape.size(), 0.0);
        for (std::size_t j = 0; j < ind.size(); ++j) ind[j] = lut.raw()[j] < t ? 1.0 : 0.0;
        RealGrid sq = shape.like<double>();
        const RealGrid& layer = layers[static_cast<std::size_t>(bank.scale_index(k))];
        for (std::size_t j = 0; j < sq.size(); ++j) sq[j] = layer[j] * layer[j];
        RealGrid avg = detail::stencil_correlate(sq, ind);
        const double wk = std::pow(t, -an.nu()) * cell;
        for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += std::max(0.0, avg[j]) * wk;
    }
    for (auto& v : acc.values()) v = std::sqrt(v);
    return acc;
}

/// c_lambda = int (1 + |z|_a)^{-lambda nu} dz = nu nu_n B(nu, (lambda-1) nu).
inline double g_lambda_constant(const Anisotropy& an, double lambda) {
    const double nu = an.nu();
    const double lb = std::lgamma(nu) + std::lgamma((lambda - 1.0) * nu) - std::lgamma(lambda * nu);
    return nu * an.unit_ball_volume() * std::exp(lb);
}

struct GLambdaOptions {
    bool drop_truncated_scales = true;  // tail mass > 1e-4 of c_lambda drops the scale
    double tail_tolerance = 1e-4;
    std::vector<int>* dropped = nullptr;
    std::vector<double>* tail_fractions = nullptr;
};

/// g*_lambda(f)(x) = {sum_k 2^{-k nu} int [2^k/(2^k + |x-y|_a)]^{lambda nu}
/// |f * phi_k(y)|^2 dy}^{1/2}, the spatial weight sampled on the box.
template <class T>
RealGrid g_lambda(const Grid<T>& f, const FilterBank& bank, double lambda,
                  const GLambdaOptions& opts = {}) {
    if (!(lambda > 1.0)) throw std::domain_error("g_lambda: lambda must exceed 1");
    const Anisotropy& an = bank.aniso;
    std::vector<RealGrid> layers = lp_layers(f, bank);
    RealGrid shape(bank.dims, bank.half_widths);
    QuasiNormTable lut(an, bank.dims, bank.half_widths);
    RealGrid acc = shape.like<double>();
    const double cell = shape.cell_volume();
    const double clam = g_lambda_constant(an, lambda);
    const double lnu = lambda * an.nu();
    for (int k = bank.k_min; k <= bank.k_max; ++k) {
        const double t = std::ldexp(1.0, k);
        std::vector<double> w(shape.size());
        double wsum = 0.0;
        const double tnu = std::pow(t, -an.nu());
        for (std::size_t j = 0; j < w.size(); ++j) {
            w[j] = tnu * std::pow(t / (t + lut.raw()[j]), lnu);
            wsum += w[j];
        }
        const double tail = 1.0 - wsum * cell / clam;
        if (opts.tail_fractions) opts.tail_fractions->push_back(tail);
        if (opts.drop_truncated_scales && tail > opts.tail_tolerance) {
            if (opts.dropped) opts.dropped->push_back(k);
            continue;
        }
        RealGrid sq = shape.like<double>();
        const RealGrid& layer = layers[static_cast<std::size_t>(bank.scale_index(k))];
        for (std::size_t j = 0; j < sq.size(); ++j) sq[j] = layer[j] * layer[j];
        RealGrid conv = detail::stencil_correlate(sq, w);
        for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += std::max(0.0, conv[j]) * cell;
    }
    for (auto& v : acc.values()) v = std::sqrt(v);
    return acc;
}

/// Peetre maximal: max over grid y of |f * phi_{-k}(x+y)| / (1 + 2^{nu k}
/// rho_a(y))^t; the grid max replaces the essential sup.  O(N^2), desk scale.
template <class T>
RealGrid peetre_maximal(const Grid<T>& f, const FilterBank& bank, int k, double t) {
    if (!(t > 0.0)) throw std::domain_error("peetre_maximal: t must be > 0");
    if (!bank.has_scale(-k)) throw std::invalid_argument("peetre_maximal: -k outside bank range");
    const Anisotropy& an = bank.aniso;
    RealGrid conv = lp_convolve(f, bank, -k);
    QuasiNormTable lut(an, bank.dims, bank.half_widths);
    RhoWeight rho{an};
    const double scale = std::exp2(an.nu() * static_cast<double>(k));
    std::vector<double> wt(conv.size());
    for (std::size_t j = 0; j < wt.size(); ++j)
        wt[j] = std::pow(1.0 + scale * rho.from_norm(lut.raw()[j]), -t);
    RealGrid out = conv.like<double>();
    const auto& dims = conv.dims();
    const int n = conv.ndim();
    std::vector<std::size_t> xi(static_cast<std::size_t>(n)), yi(static_cast<std::size_t>(n));
    for (std::size_t x = 0; x < out.size(); ++x) {
        conv.unflatten(x, xi);
        double m = 0.0;
        for (std::size_t y = 0; y < wt.size(); ++y) {
            conv.unflatten(y, yi);
            std::size_t xplusy = 0;
            for (int i = 0; i < n; ++i) {
                const std::size_t ii = static_cast<std::size_t>(i);
                xplusy = xplusy * dims[ii] + (xi[ii] + yi[ii]) % dims[ii];
            }
            m = std::max(m, std::abs(conv[xplusy]) * wt[y]);
        }
        out[x] = m;
    }
    return out;
}

/// f = sum_k f * psi_k * phi_k realized with psihat = phihat: the inverse
/// transform of fhat . sum_k phihat_k^2, i.e. f restricted to the covered band.
template <class T>
RealGrid reproduce(const Grid<T>& f, const FilterBank& bank) {
    ComplexGrid s = spectrum(f);
    for (std::size_t i = 0; i < s.size(); ++i) {
        double m = 0.0;
        for (const auto& ph : bank.phat) m += ph[i] * ph[i];
        s[i] *= m;
    }
    return from_spectrum_real(s);
}

/// Projection of f onto the covered band (used to precondition test
/// functions before equivalence experiments); identical to reproduce().
template <class T>
RealGrid band_project(const Grid<T>& f, const FilterBank& bank) {
    return reproduce(f, bank);
}

} // namespace aniso
