#pragma once

// Mixed-norm exponent vectors p = (p_1,...,p_n) in (0,inf]^n and the derived
// quantities p_- = min{1, p_i}, p_+ = max p_i, ptilde_- = min p_i, plus the
// per-axis conjugate exponents and the paper's two integer order formulas.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "aniso/geometry.hpp"

namespace aniso {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

class ExponentVector {
public:
    ExponentVector() : ExponentVector(std::vector<double>{1.0}) {}

    explicit ExponentVector(std::vector<double> p) : p_(std::move(p)) {
        if (p_.empty()) throw std::invalid_argument("ExponentVector: empty");
        for (double pi : p_) {
            if (std::isnan(pi) || !(pi > 0.0))
                throw std::invalid_argument("ExponentVector: entries must be > 0 (inf allowed)");
        }
        p_tilde_minus_ = *std::min_element(p_.begin(), p_.end());
        p_plus_ = *std::max_element(p_.begin(), p_.end());
        p_minus_ = std::min(1.0, p_tilde_minus_);
    }
    ExponentVector(std::initializer_list<double> p) : ExponentVector(std::vector<double>(p)) {}

    int dim() const { return static_cast<int>(p_.size()); }
    const std::vector<double>& p() const { return p_; }
    double p(int i) const { return p_[static_cast<std::size_t>(i)]; }
    double p_minus() const { return p_minus_; }
    double p_plus() const { return p_plus_; }
    double p_tilde_minus() const { return p_tilde_minus_; }

    bool all_finite() const {
        return std::all_of(p_.begin(), p_.end(), [](double v) { return std::isfinite(v); });
    }

    ExponentVector scaled(double s) const {
        std::vector<double> q(p_.size());
        for (std::size_t i = 0; i < p_.size(); ++i)
            q[i] = std::isfinite(p_[i]) ? s * p_[i] : kInf;
        return ExponentVector(q);
    }

private:
    std::vector<double> p_;
    double p_minus_ = 1, p_plus_ = 1, p_tilde_minus_ = 1;
};

/// Per-axis conjugates: 1/p_i + 1/p_i' = 1, with 1' = inf and inf' = 1.
inline ExponentVector conjugate_exponents(const ExponentVector& p) {
    std::vector<double> q(static_cast<std::size_t>(p.dim()));
    for (int i = 0; i < p.dim(); ++i) {
        const double pi = p.p(i);
        if (pi < 1.0) throw std::domain_error("conjugate_exponents: requires p_i >= 1");
        if (pi == 1.0) q[static_cast<std::size_t>(i)] = kInf;
        else if (std::isinf(pi)) q[static_cast<std::size_t>(i)] = 1.0;
        else q[static_cast<std::size_t>(i)] = pi / (pi - 1.0);
    }
    return ExponentVector(q);
}

/// Grand maximal order N_p = floor(nu (a_+/a_-)(1/p_- + 1) + nu + 2 a_+) + 1.
inline int grand_maximal_order(const Anisotropy& an, const ExponentVector& p) {
    const double v = an.nu() * (an.a_plus() / an.a_minus()) * (1.0 / p.p_minus() + 1.0) +
                     an.nu() + 2.0 * an.a_plus();
    return static_cast<int>(std::floor(v)) + 1;
}

/// Minimal vanishing-moment order max(0, floor((nu/a_-)(1/ptilde_- - 1))).
inline int min_moment_order(const Anisotropy& an, const ExponentVector& p) {
    const double pt = p.p_tilde_minus();
    if (std::isinf(pt)) return 0;
    const double v = (an.nu() / an.a_minus()) * (1.0 / pt - 1.0);
    return std::max(0, static_cast<int>(std::floor(v)));
}

} // namespace aniso
