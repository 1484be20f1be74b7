#pragma once

// Anisotropic dilations t^a x, the homogeneous quasi-norm |x|_a, the bracket
// <x>_a, and anisotropic balls/cubes with their measures.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace aniso {

inline constexpr double kPi = 3.14159265358979323846;

/// Anisotropy vector a in [1,inf)^n with the derived quantities used
/// everywhere else: the homogeneous dimension nu = sum a_i, the extreme
/// entries a_- and a_+, and the unit-ball volume nu_n (the unit anisotropic
/// ball coincides with the Euclidean unit ball, so nu_n is the Euclidean
/// ball volume pi^{n/2}/Gamma(n/2+1)).
class Anisotropy {
public:
    Anisotropy() : Anisotropy(std::vector<double>{1.0}) {}

    explicit Anisotropy(std::vector<double> a) : a_(std::move(a)) {
        if (a_.empty()) throw std::invalid_argument("Anisotropy: empty vector");
        for (double ai : a_) {
            if (!(ai >= 1.0) || !std::isfinite(ai))
                throw std::invalid_argument("Anisotropy: entries must be finite and >= 1");
        }
        nu_ = std::accumulate(a_.begin(), a_.end(), 0.0);
        a_minus_ = *std::min_element(a_.begin(), a_.end());
        a_plus_ = *std::max_element(a_.begin(), a_.end());
        const double n = static_cast<double>(a_.size());
        unit_ball_volume_ = std::pow(kPi, n / 2.0) / std::tgamma(n / 2.0 + 1.0);
    }

    Anisotropy(std::initializer_list<double> a) : Anisotropy(std::vector<double>(a)) {}

    int dim() const { return static_cast<int>(a_.size()); }
    const std::vector<double>& a() const { return a_; }
    double a(int i) const { return a_[static_cast<std::size_t>(i)]; }
    double nu() const { return nu_; }
    double a_minus() const { return a_minus_; }
    double a_plus() const { return a_plus_; }
    /// Lebesgue measure of B_a(0,1) (equals the Euclidean unit ball).
    double unit_ball_volume() const { return unit_ball_volume_; }

    bool isotropic() const { return a_minus_ == 1.0 && a_plus_ == 1.0; }

private:
    std::vector<double> a_;
    double nu_ = 0, a_minus_ = 1, a_plus_ = 1, unit_ball_volume_ = 0;
};

/// t^a x = (t^{a_1} x_1, ..., t^{a_n} x_n), t >= 0.
inline std::vector<double> dilate(const Anisotropy& an, double t, std::span<const double> x) {
    if (!(t >= 0.0)) throw std::domain_error("dilate: t must be >= 0");
    if (static_cast<int>(x.size()) != an.dim())
        throw std::invalid_argument("dilate: dimension mismatch");
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        y[i] = std::pow(t, an.a()[i]) * x[i];
    return y;
}

namespace detail {

// sum_i x_i^2 / t^{2 a_i}, strictly decreasing in t for x != 0.
inline double quasi_norm_residual(const Anisotropy& an, std::span<const double> x, double t) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] == 0.0) continue;
        const double r = x[i] / std::pow(t, an.a()[i]);
        s += r * r;
    }
    return s;
}

} // namespace detail

/// The anisotropic homogeneous quasi-norm: |0|_a = 0 and otherwise the unique
/// t0 > 0 with sum_i x_i^2 / t0^{2 a_i} = 1.  Bisection to ~1e-6 relative,
/// then Newton polish to 1e-12.
inline double quasi_norm(const Anisotropy& an, std::span<const double> x) {
    if (static_cast<int>(x.size()) != an.dim())
        throw std::invalid_argument("quasi_norm: dimension mismatch");
    double lo = 0.0, hi = 0.0;
    bool all_zero = true;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!std::isfinite(x[i])) throw std::domain_error("quasi_norm: non-finite input");
        if (x[i] == 0.0) continue;
        all_zero = false;
        const double b = std::pow(std::abs(x[i]), 1.0 / an.a()[i]);
        lo = std::max(lo, b);
        hi += b;
    }
    if (all_zero) return 0.0;
    // Residual is >= 1 at lo and <= 1 at hi (Lemma-2.2(iii) sandwich).
    if (!(detail::quasi_norm_residual(an, x, lo) >= 1.0 - 1e-9) ||
        !(detail::quasi_norm_residual(an, x, hi) <= 1.0 + 1e-9))
        throw std::runtime_error("quasi_norm: bracketing failed (internal error)");
    double a = lo, b = hi;
    for (int it = 0; it < 64 && (b - a) > 1e-6 * b; ++it) {
        const double mid = 0.5 * (a + b);
        (detail::quasi_norm_residual(an, x, mid) > 1.0 ? a : b) = mid;
    }
    double t = 0.5 * (a + b);
    // Newton on g(t) = sum x_i^2 t^{-2 a_i} - 1; g'(t) < 0.
    for (int it = 0; it < 40; ++it) {
        double g = -1.0, dg = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (x[i] == 0.0) continue;
            const double ai = an.a()[i];
            const double term = x[i] * x[i] * std::pow(t, -2.0 * ai);
            g += term;
            dg += -2.0 * ai * term / t;
        }
        const double step = g / dg;
        double tn = t - step;
        if (tn <= a || tn >= b) tn = 0.5 * (a + b);  // safeguard inside bracket
        (detail::quasi_norm_residual(an, x, tn) > 1.0 ? a : b) = tn;
        if (std::abs(tn - t) <= 1e-13 * t) { t = tn; break; }
        t = tn;
    }
    return t;
}

inline double quasi_norm(const Anisotropy& an, std::initializer_list<double> x) {
    return quasi_norm(an, std::span<const double>(x.begin(), x.size()));
}

/// Anisotropic bracket <x>_a = |(1,x)|_{(1,a)}; always >= 1 and smooth.
inline double bracket(const Anisotropy& an, std::span<const double> x) {
    std::vector<double> ea(an.dim() + 1), ex(an.dim() + 1);
    ea[0] = 1.0;
    ex[0] = 1.0;
    for (int i = 0; i < an.dim(); ++i) {
        ea[static_cast<std::size_t>(i) + 1] = an.a()[static_cast<std::size_t>(i)];
        ex[static_cast<std::size_t>(i) + 1] = x[static_cast<std::size_t>(i)];
    }
    return quasi_norm(Anisotropy(ea), ex);
}

inline double bracket(const Anisotropy& an, std::initializer_list<double> x) {
    return bracket(an, std::span<const double>(x.begin(), x.size()));
}

/// Ball B_a(x, r) = { y : |y - x|_a < r }; |B| = nu_n r^nu.
struct AnisoBall {
    std::vector<double> center;
    double radius = 0.0;

    bool contains(const Anisotropy& an, std::span<const double> y) const {
        std::vector<double> d(y.size());
        for (std::size_t i = 0; i < y.size(); ++i) d[i] = y[i] - center[i];
        return quasi_norm(an, d) < radius;
    }
    AnisoBall dilated(double delta) const { return AnisoBall{center, delta * radius}; }
};

/// Cube Q_a(x, r) = x + r^a (-1,1)^n; |Q| = 2^n r^nu.
struct AnisoCube {
    std::vector<double> center;
    double r = 0.0;

    double measure(const Anisotropy& an) const {
        return std::pow(2.0, an.dim()) * std::pow(r, an.nu());
    }
    bool contains(const Anisotropy& an, std::span<const double> y) const {
        for (int i = 0; i < an.dim(); ++i) {
            const std::size_t ii = static_cast<std::size_t>(i);
            if (std::abs(y[ii] - center[ii]) >= std::pow(r, an.a()[ii])) return false;
        }
        return true;
    }
};

/// |B_a(x, r)| = nu_n r^nu.
inline double ball_volume(const Anisotropy& an, double r) {
    if (!(r > 0.0)) throw std::domain_error("ball_volume: r must be > 0");
    return an.unit_ball_volume() * std::pow(r, an.nu());
}

} // namespace aniso
