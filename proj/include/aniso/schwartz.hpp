#pragma once

// Analytic Schwartz profiles: each member is a sum of tensor-product terms
// whose 1-d factors come from families closed under differentiation
// (polynomial x gaussian, trig-modulated gaussian, and the compact bump
// e^{-1/(1-u^2)}), so arbitrary-order partials evaluate exactly from
// precomputed coefficient chains.  Includes the S_N norm
//   sup_x <x>_a^N max_{|alpha|<=N} |d^alpha phi(x)|
// and the default 8-member dictionary standing in for the S_N unit ball.

#include <cmath>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "aniso/geometry.hpp"

namespace aniso {

namespace detail {

struct Poly {
    std::vector<double> c;  // c[i] * u^i

    double eval(double u) const {
        double v = 0.0;
        for (std::size_t i = c.size(); i-- > 0;) v = v * u + c[i];
        return v;
    }
    Poly derivative() const {
        if (c.size() <= 1) return Poly{{0.0}};
        Poly d;
        d.c.resize(c.size() - 1);
        for (std::size_t i = 1; i < c.size(); ++i) d.c[i - 1] = c[i] * static_cast<double>(i);
        return d;
    }
    Poly times_u(int k = 1) const {
        Poly r;
        r.c.assign(c.size() + static_cast<std::size_t>(k), 0.0);
        for (std::size_t i = 0; i < c.size(); ++i) r.c[i + static_cast<std::size_t>(k)] = c[i];
        return r;
    }
    Poly scaled(double s) const {
        Poly r = *this;
        for (double& v : r.c) v *= s;
        return r;
    }
    static Poly add(const Poly& a, const Poly& b) {
        Poly r;
        r.c.assign(std::max(a.c.size(), b.c.size()), 0.0);
        for (std::size_t i = 0; i < a.c.size(); ++i) r.c[i] += a.c[i];
        for (std::size_t i = 0; i < b.c.size(); ++i) r.c[i] += b.c[i];
        return r;
    }
    static Poly mul(const Poly& a, const Poly& b) {
        Poly r;
        r.c.assign(a.c.size() + b.c.size() - 1, 0.0);
        for (std::size_t i = 0; i < a.c.size(); ++i)
            for (std::size_t j = 0; j < b.c.size(); ++j) r.c[i + j] += a.c[i] * b.c[j];
        return r;
    }
};

} // namespace detail

/// One axis factor F(s u) of a tensor term; derivative order k evaluates
/// s^k F^{(k)}(s u) from coefficient chains built at construction.
class Factor1D {
public:
    enum class Kind { PolyGauss, TrigGauss, Bump };

    static Factor1D poly_gauss(detail::Poly p, double scale, int max_order) {
        Factor1D f;
        f.kind_ = Kind::PolyGauss;
        f.scale_ = scale;
        f.p_.push_back(p);
        for (int k = 0; k < max_order; ++k) {
            // (P e^{-pi u^2})' = (P' - 2 pi u P) e^{-pi u^2}
            const detail::Poly& cur = f.p_.back();
            f.p_.push_back(detail::Poly::add(cur.derivative(), cur.times_u().scaled(-2.0 * kPi)));
        }
        return f;
    }

    static Factor1D trig_gauss(detail::Poly p, detail::Poly q, double omega, double scale,
                               int max_order) {
        Factor1D f;
        f.kind_ = Kind::TrigGauss;
        f.scale_ = scale;
        f.omega_ = omega;
        f.p_.push_back(p);
        f.q_.push_back(q);
        for (int k = 0; k < max_order; ++k) {
            // d/du [(P cos + Q sin) g] = ((P' + w Q - 2 pi u P) cos + (Q' - w P - 2 pi u Q) sin) g
            const detail::Poly &P = f.p_.back(), &Q = f.q_.back();
            detail::Poly Pn = detail::Poly::add(detail::Poly::add(P.derivative(), Q.scaled(omega)),
                                                P.times_u().scaled(-2.0 * kPi));
            detail::Poly Qn = detail::Poly::add(detail::Poly::add(Q.derivative(), P.scaled(-omega)),
                                                Q.times_u().scaled(-2.0 * kPi));
            f.p_.push_back(std::move(Pn));
            f.q_.push_back(std::move(Qn));
        }
        return f;
    }

    /// R(u) (1-u^2)^{-m} e^{-1/(1-u^2)} on |u| < 1 (base profile has R=1, m=0).
    static Factor1D bump(detail::Poly r0, int m0, double scale, int max_order) {
        Factor1D f;
        f.kind_ = Kind::Bump;
        f.scale_ = scale;
        f.p_.push_back(r0);
        f.m_.push_back(m0);
        const detail::Poly one_minus_u2{{1.0, 0.0, -1.0}};
        for (int k = 0; k < max_order; ++k) {
            const detail::Poly& R = f.p_.back();
            const int m = f.m_.back();
            // R -> R'(1-u^2)^2 + 2 m u R (1-u^2) - 2 u R,  m -> m + 2
            detail::Poly t1 = detail::Poly::mul(R.derivative(), detail::Poly::mul(one_minus_u2, one_minus_u2));
            detail::Poly t2 = detail::Poly::mul(R.times_u().scaled(2.0 * m), one_minus_u2);
            detail::Poly t3 = R.times_u().scaled(-2.0);
            f.p_.push_back(detail::Poly::add(detail::Poly::add(t1, t2), t3));
            f.m_.push_back(m + 2);
        }
        return f;
    }

    int max_order() const { return static_cast<int>(p_.size()) - 1; }
    double scale() const { return scale_; }

    double deriv(int k, double x) const {
        const double u = scale_ * x;
        const double sk = std::pow(scale_, k);
        switch (kind_) {
            case Kind::PolyGauss:
                return sk * p_[static_cast<std::size_t>(k)].eval(u) * std::exp(-kPi * u * u);
            case Kind::TrigGauss: {
                const double w = omega_ * u;
                return sk * (p_[static_cast<std::size_t>(k)].eval(u) * std::cos(w) +
                             q_[static_cast<std::size_t>(k)].eval(u) * std::sin(w)) *
                       std::exp(-kPi * u * u);
            }
            case Kind::Bump: {
                const double t = 1.0 - u * u;
                if (t <= 0.0) return 0.0;
                const double lg = -1.0 / t - static_cast<double>(m_[static_cast<std::size_t>(k)]) * std::log(t);
                if (lg < -745.0) return 0.0;
                return sk * p_[static_cast<std::size_t>(k)].eval(u) * std::exp(lg);
            }
        }
        return 0.0;
    }

    double eval(double x) const { return deriv(0, x); }

    /// 1-d integral over R of the zeroth-order factor (adaptive Simpson).
    double integral() const {
        const double b = (kind_ == Kind::Bump) ? 1.0 / scale_ : 9.0 / scale_;
        return simpson(-b, b, 1 << 14);
    }

private:
    double simpson(double a, double b, int nseg) const {
        const double h = (b - a) / nseg;
        double s = eval(a) + eval(b);
        for (int i = 1; i < nseg; ++i) s += eval(a + i * h) * (i % 2 ? 4.0 : 2.0);
        return s * h / 3.0;
    }

    Kind kind_ = Kind::PolyGauss;
    double scale_ = 1.0, omega_ = 0.0;
    std::vector<detail::Poly> p_, q_;
    std::vector<int> m_;
};

/// A Schwartz function given as a sum of tensor-product terms, with exact
/// partial derivatives up to a construction-time order cap.
class SchwartzProfile {
public:
    struct Term {
        double coef = 1.0;
        std::vector<Factor1D> axis;
    };

    SchwartzProfile(std::string name, int n, std::vector<Term> terms, double support_radius)
        : name_(std::move(name)), n_(n), terms_(std::move(terms)), support_radius_(support_radius) {
        integral_ = 0.0;
        for (const Term& t : terms_) {
            double v = t.coef;
            for (const Factor1D& f : t.axis) v *= f.integral();
            integral_ += v;
        }
    }

    const std::string& name() const { return name_; }
    int dim() const { return n_; }
    double integral() const { return integral_; }
    /// Euclidean support radius (inf for globally supported members).
    double support_radius() const { return support_radius_; }
    int max_order() const {
        int m = terms_.empty() ? 0 : terms_[0].axis[0].max_order();
        for (const Term& t : terms_)
            for (const Factor1D& f : t.axis) m = std::min(m, f.max_order());
        return m;
    }

    double eval(std::span<const double> x) const {
        double v = 0.0;
        for (const Term& t : terms_) {
            double p = t.coef;
            for (int i = 0; i < n_ && p != 0.0; ++i) p *= t.axis[static_cast<std::size_t>(i)].eval(x[static_cast<std::size_t>(i)]);
            v += p;
        }
        return v;
    }

    double partial(std::span<const int> alpha, std::span<const double> x) const {
        double v = 0.0;
        for (const Term& t : terms_) {
            double p = t.coef;
            for (int i = 0; i < n_ && p != 0.0; ++i)
                p *= t.axis[static_cast<std::size_t>(i)].deriv(alpha[static_cast<std::size_t>(i)], x[static_cast<std::size_t>(i)]);
            v += p;
        }
        return v;
    }

    SchwartzProfile scaled(double c) const {
        SchwartzProfile r = *this;
        for (Term& t : r.terms_) t.coef *= c;
        r.integral_ *= c;
        return r;
    }

    const std::vector<Term>& terms() const { return terms_; }

private:
    std::string name_;
    int n_ = 0;
    std::vector<Term> terms_;
    double integral_ = 0.0;
    double support_radius_ = 0.0;
};

namespace detail {

inline std::vector<std::vector<int>> multi_indices_upto(int n, int N) {
    std::vector<std::vector<int>> out;
    std::vector<int> a(static_cast<std::size_t>(n), 0);
    std::function<void(int, int)> rec = [&](int pos, int left) {
        if (pos == n - 1) {
            for (int v = 0; v <= left; ++v) {
                a[static_cast<std::size_t>(pos)] = v;
                out.push_back(a);
            }
            return;
        }
        for (int v = 0; v <= left; ++v) {
            a[static_cast<std::size_t>(pos)] = v;
            rec(pos + 1, left - v);
        }
    };
    if (n == 0) return out;
    rec(0, N);
    return out;
}

} // namespace detail

/// ||phi||_{S_N} = sup_x <x>_a^N max_{|alpha|<=N} |d^alpha phi(x)|, by a dense
/// scan refined around the maximizer until the change drops below 0.1%.
inline double schwartz_norm(const SchwartzProfile& phi, const Anisotropy& an, int N) {
    if (N > phi.max_order()) throw std::domain_error("schwartz_norm: N exceeds available derivative order");
    if (an.dim() != phi.dim()) throw std::invalid_argument("schwartz_norm: dimension mismatch");
    const int n = phi.dim();
    const auto alphas = detail::multi_indices_upto(n, N);
    auto weight_value = [&](std::span<const double> x) {
        double m = 0.0;
        for (const auto& al : alphas) m = std::max(m, std::abs(phi.partial(al, x)));
        std::vector<double> xx(x.begin(), x.end());
        return m * std::pow(bracket(an, xx), static_cast<double>(N));
    };
    double R = std::isfinite(phi.support_radius())
                   ? phi.support_radius() * 1.02
                   : 4.0 + std::sqrt(static_cast<double>(N));
    std::vector<double> lo(static_cast<std::size_t>(n), -R), hi(static_cast<std::size_t>(n), R);
    std::vector<double> best_x(static_cast<std::size_t>(n), 0.0);
    double best = 0.0;
    const int res = (n >= 3) ? 13 : 33;
    for (int pass = 0; pass < 8; ++pass) {
        double pass_best = 0.0;
        std::vector<double> pass_x = best_x;
        std::vector<int> idx(static_cast<std::size_t>(n), 0);
        std::vector<double> x(static_cast<std::size_t>(n));
        bool done = false;
        while (!done) {
            for (int i = 0; i < n; ++i) {
                const std::size_t ii = static_cast<std::size_t>(i);
                x[ii] = lo[ii] + (hi[ii] - lo[ii]) * idx[ii] / (res - 1);
            }
            const double v = weight_value(x);
            if (v > pass_best) {
                pass_best = v;
                pass_x = x;
            }
            int ax = n - 1;
            while (ax >= 0) {
                if (++idx[static_cast<std::size_t>(ax)] < res) break;
                idx[static_cast<std::size_t>(ax)] = 0;
                --ax;
            }
            done = ax < 0;
        }
        const double prev = best;
        if (pass_best > best) {
            best = pass_best;
            best_x = pass_x;
        }
        if (pass > 0 && best > 0.0 && std::abs(best - prev) < 1e-3 * best) break;
        for (int i = 0; i < n; ++i) {
            const std::size_t ii = static_cast<std::size_t>(i);
            const double half = (hi[ii] - lo[ii]) / (res - 1) * 2.0;
            lo[ii] = best_x[ii] - half;
            hi[ii] = best_x[ii] + half;
        }
    }
    return best;
}

/// Finite stand-in for the sup over the S_N unit ball in the grand maximal
/// function; members get rescaled to ||phi||_{S_N} = 1 before use.
struct SchwartzDictionary {
    std::vector<SchwartzProfile> members;

    SchwartzDictionary normalized_for(const Anisotropy& an, int N) const {
        SchwartzDictionary d;
        d.members.reserve(members.size());
        for (const SchwartzProfile& m : members) {
            const double sn = schwartz_norm(m, an, N);
            d.members.push_back(m.scaled(sn > 0.0 ? 1.0 / sn : 1.0));
        }
        return d;
    }
};

namespace detail {

// Expands cos(sum_i w_i x_i) * gaussian into tensor terms via the real part
// of prod_i (cos(w_i x_i) + i sin(w_i x_i)).
inline void append_modulated_terms(std::vector<SchwartzProfile::Term>& out, int n,
                                   const std::vector<double>& w, int max_order) {
    const Poly one{{1.0}}, zero{{0.0}};
    const std::size_t combos = static_cast<std::size_t>(1) << n;
    for (std::size_t mask = 0; mask < combos; ++mask) {
        const int sines = __builtin_popcount(static_cast<unsigned>(mask));
        if (sines % 2 != 0) continue;  // imaginary part
        const double sign = (sines % 4 == 0) ? 1.0 : -1.0;
        SchwartzProfile::Term t;
        t.coef = sign;
        for (int i = 0; i < n; ++i) {
            const bool is_sin = (mask >> i) & 1u;
            if (w[static_cast<std::size_t>(i)] == 0.0)
                t.axis.push_back(Factor1D::poly_gauss(one, 1.0, max_order));
            else
                t.axis.push_back(Factor1D::trig_gauss(is_sin ? zero : one, is_sin ? one : zero,
                                                      w[static_cast<std::size_t>(i)], 1.0, max_order));
        }
        out.push_back(std::move(t));
    }
}

} // namespace detail

/// Product bump scaled so the support cube fits inside the Euclidean unit
/// ball; the canonical Phi of the radial maximal function.
inline SchwartzProfile canonical_bump(int n, int max_order = 32) {
    const double s = std::sqrt(static_cast<double>(n));
    SchwartzProfile::Term t;
    for (int i = 0; i < n; ++i)
        t.axis.push_back(Factor1D::bump(detail::Poly{{1.0}}, 0, s, max_order));
    return SchwartzProfile("bump", n, {std::move(t)}, 1.0);
}

inline SchwartzDictionary default_dictionary(int n, int max_order = 32) {
    using detail::Poly;
    const Poly one{{1.0}};
    SchwartzDictionary d;

    auto gauss_term = [&](std::vector<double> scales) {
        SchwartzProfile::Term t;
        for (int i = 0; i < n; ++i)
            t.axis.push_back(Factor1D::poly_gauss(one, scales[static_cast<std::size_t>(i)], max_order));
        return t;
    };

    const double inf = std::numeric_limits<double>::infinity();
    d.members.push_back(SchwartzProfile("gaussian", n, {gauss_term(std::vector<double>(static_cast<std::size_t>(n), 1.0))}, inf));

    {
        std::vector<SchwartzProfile::Term> terms;
        std::vector<double> w(static_cast<std::size_t>(n), 0.0);
        w[0] = 2.0 * kPi;
        detail::append_modulated_terms(terms, n, w, max_order);
        d.members.push_back(SchwartzProfile("modulated-x1", n, std::move(terms), inf));
    }
    {
        std::vector<SchwartzProfile::Term> terms;
        std::vector<double> w(static_cast<std::size_t>(n), kPi);
        detail::append_modulated_terms(terms, n, w, max_order);
        d.members.push_back(SchwartzProfile("modulated-diag", n, std::move(terms), inf));
    }

    d.members.push_back(canonical_bump(n, max_order));

    {
        const double s = std::sqrt(static_cast<double>(n));
        SchwartzProfile::Term t;
        t.coef = s;  // chain-rule factor of d/dx psi(s x)
        t.axis.push_back(Factor1D::bump(Poly{{0.0, -2.0}}, 2, s, max_order));
        for (int i = 1; i < n; ++i) t.axis.push_back(Factor1D::bump(one, 0, s, max_order));
        d.members.push_back(SchwartzProfile("bump-dx1", n, {std::move(t)}, 1.0));
    }
    {
        const double s = std::sqrt(static_cast<double>(n));
        SchwartzProfile::Term t;
        t.coef = s;
        if (n >= 2) {
            t.axis.push_back(Factor1D::bump(one, 0, s, max_order));
            t.axis.push_back(Factor1D::bump(Poly{{0.0, -2.0}}, 2, s, max_order));
            for (int i = 2; i < n; ++i) t.axis.push_back(Factor1D::bump(one, 0, s, max_order));
        } else {
            // 1-d: second derivative of the bump instead
            t.axis.push_back(Factor1D::bump(Poly{{-2.0, 0.0, -2.0, 0.0, 4.0}}, 4, s, max_order));
        }
        d.members.push_back(SchwartzProfile("bump-dx2", n, {std::move(t)}, 1.0));
    }
    {
        std::vector<double> s(static_cast<std::size_t>(n), 1.0);
        s[0] = 2.0;
        if (n >= 2) s[1] = 0.5;
        d.members.push_back(SchwartzProfile("squeezed-gaussian", n, {gauss_term(s)}, inf));
    }
    {
        // (1 - (2 pi / n)|x|^2) e^{-pi |x|^2}: integral exactly zero.
        std::vector<SchwartzProfile::Term> terms;
        terms.push_back(gauss_term(std::vector<double>(static_cast<std::size_t>(n), 1.0)));
        for (int j = 0; j < n; ++j) {
            SchwartzProfile::Term t;
            t.coef = -2.0 * kPi / static_cast<double>(n);
            for (int i = 0; i < n; ++i)
                t.axis.push_back(Factor1D::poly_gauss(i == j ? Poly{{0.0, 0.0, 1.0}} : one, 1.0, max_order));
            terms.push_back(std::move(t));
        }
        d.members.push_back(SchwartzProfile("mexican-hat", n, std::move(terms), inf));
    }
    return d;
}

} // namespace aniso
