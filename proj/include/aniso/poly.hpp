#pragma once

// Weighted polynomial projections onto P_s: Gram systems assembled in
// ball-scaled coordinates u_i = (x_i - c_i)/r^{a_i} (min-image folded), so
// condition numbers stay O(1) regardless of the ball radius.

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "aniso/geometry.hpp"
#include "aniso/grid.hpp"
#include "aniso/patch.hpp"

namespace aniso {

inline std::vector<std::vector<int>> poly_multi_indices(int n, int s) {
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
    rec(0, s);
    return out;
}

/// Polynomial in the monomial basis {u^alpha : |alpha| <= s} over ball-scaled
/// coordinates anchored at `center` with per-axis scale r^{a_i}.
struct PolyCoeffs {
    int degree = 0;
    std::vector<double> center;
    std::vector<double> axis_scale;  // r^{a_i}
    std::vector<std::vector<int>> alphas;
    Eigen::VectorXd coef;
    bool regularized = false;
    double condition = 0.0;

    double eval_scaled(std::span<const double> u) const {
        double v = 0.0;
        for (Eigen::Index t = 0; t < coef.size(); ++t) {
            double m = coef[t];
            const auto& al = alphas[static_cast<std::size_t>(t)];
            for (std::size_t i = 0; i < al.size(); ++i)
                for (int rep = 0; rep < al[i]; ++rep) m *= u[i];
            v += m;
        }
        return v;
    }

    /// Evaluates at a grid cell, folding the displacement periodically.
    template <class T>
    double eval_cell(const Grid<T>& g, const std::vector<std::size_t>& gi) const {
        std::vector<double> u(center.size());
        for (std::size_t i = 0; i < u.size(); ++i) {
            const double L = g.half_width(static_cast<int>(i));
            double d = g.coord(static_cast<int>(i), gi[i]) - center[i];
            d -= 2.0 * L * std::round(d / (2.0 * L));
            u[i] = d / axis_scale[i];
        }
        return eval_scaled(u);
    }
};

/// Projector onto P_s in L^2(eta dx) for one fixed weight patch: the Gram
/// matrix gets assembled and factorized once, then any number of right-hand
/// sides can be projected against it.
class WeightedProjector {
public:
    WeightedProjector(const Anisotropy& an, const RealGrid& shape, const Patch& eta, int s,
                      std::vector<double> center, double radius)
        : center_(std::move(center)), eta_(&eta) {
        const int n = shape.ndim();
        axis_scale_.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i)
            axis_scale_[static_cast<std::size_t>(i)] = std::pow(radius, an.a(i));
        alphas_ = poly_multi_indices(n, s);
        degree_ = s;
        const Eigen::Index m = static_cast<Eigen::Index>(alphas_.size());
        Eigen::MatrixXd G = Eigen::MatrixXd::Zero(m, m);
        std::vector<double> mono(alphas_.size());
        double wsum = 0.0;
        eta.for_each(shape, [&](std::size_t lf, std::size_t, const std::vector<std::size_t>& gi) {
            const double w = eta.v[lf];
            if (w == 0.0) return;
            wsum += w;
            monomials(shape, gi, mono);
            for (Eigen::Index a = 0; a < m; ++a)
                for (Eigen::Index b = a; b < m; ++b)
                    G(a, b) += mono[static_cast<std::size_t>(a)] * mono[static_cast<std::size_t>(b)] * w;
        });
        if (wsum <= 0.0) throw std::domain_error("WeightedProjector: weight has zero mass");
        for (Eigen::Index a = 0; a < m; ++a)
            for (Eigen::Index b = 0; b < a; ++b) G(a, b) = G(b, a);
        // Minimal-norm pseudo-inverse solve: the right-hand sides below are
        // always in range(G) (both come from the same weighted samples), so
        // rank-deficient Grams on thin balls still give exact orthogonality
        // <f - c, q eta> = 0, which a damped solve would not.
        svd_.compute(G, Eigen::ComputeThinU | Eigen::ComputeThinV);
        svd_.setThreshold(1e-12);
        const double smax = svd_.singularValues()(0);
        const double smin = svd_.singularValues()(svd_.singularValues().size() - 1);
        condition_ = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
        regularized_ = svd_.rank() < m;
    }

    /// Monomial values u^alpha at a grid cell (folded, ball-scaled).
    template <class T>
    void monomials(const Grid<T>& g, const std::vector<std::size_t>& gi, std::vector<double>& out) const {
        const std::size_t n = center_.size();
        std::vector<double> u(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double L = g.half_width(static_cast<int>(i));
            double d = g.coord(static_cast<int>(i), gi[i]) - center_[i];
            d -= 2.0 * L * std::round(d / (2.0 * L));
            u[i] = d / axis_scale_[i];
        }
        for (std::size_t t = 0; t < alphas_.size(); ++t) {
            double m = 1.0;
            for (std::size_t i = 0; i < n; ++i)
                for (int rep = 0; rep < alphas_[t][i]; ++rep) m *= u[i];
            out[t] = m;
        }
    }

    std::size_t basis_size() const { return alphas_.size(); }

    /// Projection from an assembled right-hand side rhs_alpha = <g, u^alpha eta>.
    PolyCoeffs project(const Eigen::VectorXd& rhs) const {
        PolyCoeffs out;
        out.degree = degree_;
        out.center = center_;
        out.axis_scale = axis_scale_;
        out.alphas = alphas_;
        out.coef = svd_.solve(rhs);
        out.regularized = regularized_;
        out.condition = condition_;
        return out;
    }

    /// Projection of grid values: rhs_alpha = sum f u^alpha eta.
    PolyCoeffs project_function(const RealGrid& f) const {
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(alphas_.size()));
        std::vector<double> mono(alphas_.size());
        eta_->for_each(f, [&](std::size_t lf, std::size_t gf, const std::vector<std::size_t>& gi) {
            const double w = eta_->v[lf];
            if (w == 0.0) return;
            monomials(f, gi, mono);
            for (std::size_t t = 0; t < mono.size(); ++t)
                rhs[static_cast<Eigen::Index>(t)] += f[gf] * mono[t] * w;
        });
        return project(rhs);
    }

    double condition() const { return condition_; }
    bool regularized() const { return regularized_; }

private:
    std::vector<double> center_, axis_scale_;
    std::vector<std::vector<int>> alphas_;
    int degree_ = 0;
    const Patch* eta_;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd_;
    double condition_ = 0.0;
    bool regularized_ = false;
};

/// The unique c in P_s with <f - c, q eta> = 0 for all q in P_s.
inline PolyCoeffs poly_project(const Anisotropy& an, const RealGrid& f, const Patch& eta, int s,
                               const std::vector<double>& center, double radius) {
    WeightedProjector proj(an, f, eta, s, center, radius);
    return proj.project_function(f);
}

} // namespace aniso
