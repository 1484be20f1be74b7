#pragma once

// Shared generators and quadrature oracles for the acceptance suite.

#include "aniso/filter_bank.hpp"
#include "aniso/grid.hpp"
#include "aniso/rng.hpp"

namespace aniso {
namespace selftest_detail {

/// Random real field with spectrum supported in lo <= |xi|_a <= hi, then
/// projected onto the bank's covered band; unit L^2 norm.
inline RealGrid covered_band_function(const Anisotropy& an, const RealGrid& shape,
                                      const FilterBank& bank, Rng& rng, double lo, double hi) {
    ComplexGrid spec = shape.like<cplx>();
    std::vector<double> xi(static_cast<std::size_t>(shape.ndim()));
    for (std::size_t f = 0; f < spec.size(); ++f) {
        freq_coords(shape, f, xi);
        const double q = quasi_norm(an, xi);
        if (q < lo || q > hi) continue;
        spec[f] = cplx(rng.normal(), rng.normal());
    }
    ComplexGrid sym = spec;
    const auto& dims = shape.dims();
    std::vector<std::size_t> gi(dims.size()), mi(dims.size());
    for (std::size_t f = 0; f < spec.size(); ++f) {
        spec.unflatten(f, gi);
        for (std::size_t i = 0; i < dims.size(); ++i) mi[i] = (dims[i] - gi[i]) % dims[i];
        sym[f] = 0.5 * (spec[f] + std::conj(spec[spec.flat_index(mi)]));
    }
    RealGrid out = band_project(from_spectrum_real(sym), bank);
    const double n2 = l2_norm(out);
    if (n2 > 0.0) out *= 1.0 / n2;
    return out;
}

/// Smooth random field for level-set experiments (low-frequency content).
inline RealGrid random_smooth_field(const Anisotropy& an, const RealGrid& shape, Rng& rng) {
    ComplexGrid spec = shape.like<cplx>();
    std::vector<double> xi(static_cast<std::size_t>(shape.ndim()));
    for (std::size_t f = 0; f < spec.size(); ++f) {
        freq_coords(shape, f, xi);
        const double q = quasi_norm(an, xi);
        if (q == 0.0 || q > 1.0) continue;
        spec[f] = cplx(rng.normal(), rng.normal());
    }
    ComplexGrid sym = spec;
    const auto& dims = shape.dims();
    std::vector<std::size_t> gi(dims.size()), mi(dims.size());
    for (std::size_t f = 0; f < spec.size(); ++f) {
        spec.unflatten(f, gi);
        for (std::size_t i = 0; i < dims.size(); ++i) mi[i] = (dims[i] - gi[i]) % dims[i];
        sym[f] = 0.5 * (spec[f] + std::conj(spec[spec.flat_index(mi)]));
    }
    return from_spectrum_real(sym);
}

/// c_lambda = int (1+|z|_a)^{-lambda nu} dz by 1-d polar quadrature in
/// log-radius (independent of the Beta-function route used internally).
inline double oracle_c_lambda(const Anisotropy& an, double lambda) {
    const double nu = an.nu();
    // rho = e^u, integrand rho^{nu} (1+rho)^{-lambda nu} du over u
    const double ulo = -40.0, uhi = 30.0;
    const int nseg = 1 << 16;
    const double h = (uhi - ulo) / nseg;
    auto f = [&](double u) {
        const double rho = std::exp(u);
        return std::exp(nu * u) * std::pow(1.0 + rho, -lambda * nu);
    };
    double s = f(ulo) + f(uhi);
    for (int i = 1; i < nseg; ++i) s += f(ulo + i * h) * (i % 2 ? 4.0 : 2.0);
    return nu * an.unit_ball_volume() * s * h / 3.0;
}

} // namespace selftest_detail
} // namespace aniso
