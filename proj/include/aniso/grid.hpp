#pragma once

// Uniform periodic grids on a box prod_i [-L_i, L_i), sampled at cell centers
// x_i = -L_i + (j + 1/2) h_i with h_i = 2 L_i / dims_i.  Row-major storage,
// axis 0 slowest.  The universal function carrier for every operator here.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "aniso/geometry.hpp"

namespace aniso {

using cplx = std::complex<double>;

inline bool is_pow2(std::size_t v) { return v != 0 && (v & (v - 1)) == 0; }

template <class T>
class Grid {
public:
    Grid() = default;

    Grid(std::vector<std::size_t> dims, std::vector<double> half_widths, T fill = T{})
        : dims_(std::move(dims)), halfw_(std::move(half_widths)) {
        if (dims_.empty() || dims_.size() != halfw_.size())
            throw std::invalid_argument("Grid: dims/half_widths mismatch");
        std::size_t total = 1;
        for (std::size_t i = 0; i < dims_.size(); ++i) {
            if (!is_pow2(dims_[i])) throw std::invalid_argument("Grid: dims must be powers of two");
            if (!(halfw_[i] > 0.0)) throw std::invalid_argument("Grid: half_widths must be > 0");
            total *= dims_[i];
        }
        v_.assign(total, fill);
    }

    int ndim() const { return static_cast<int>(dims_.size()); }
    const std::vector<std::size_t>& dims() const { return dims_; }
    std::size_t dim(int i) const { return dims_[static_cast<std::size_t>(i)]; }
    const std::vector<double>& half_widths() const { return halfw_; }
    double half_width(int i) const { return halfw_[static_cast<std::size_t>(i)]; }
    double spacing(int i) const {
        return 2.0 * halfw_[static_cast<std::size_t>(i)] / static_cast<double>(dims_[static_cast<std::size_t>(i)]);
    }
    double cell_volume() const {
        double v = 1.0;
        for (int i = 0; i < ndim(); ++i) v *= spacing(i);
        return v;
    }
    double coord(int axis, std::size_t j) const {
        return -half_width(axis) + (static_cast<double>(j) + 0.5) * spacing(axis);
    }
    std::size_t size() const { return v_.size(); }

    T& operator[](std::size_t flat) { return v_[flat]; }
    const T& operator[](std::size_t flat) const { return v_[flat]; }
    std::vector<T>& values() { return v_; }
    const std::vector<T>& values() const { return v_; }

    std::size_t flat_index(std::span<const std::size_t> idx) const {
        std::size_t f = 0;
        for (std::size_t i = 0; i < dims_.size(); ++i) f = f * dims_[i] + idx[i];
        return f;
    }
    void unflatten(std::size_t flat, std::span<std::size_t> idx) const {
        for (std::size_t i = dims_.size(); i-- > 0;) {
            idx[i] = flat % dims_[i];
            flat /= dims_[i];
        }
    }
    /// Coordinates of the cell center for a flat index.
    void coords(std::size_t flat, std::span<double> x) const {
        for (std::size_t i = dims_.size(); i-- > 0;) {
            x[i] = coord(static_cast<int>(i), flat % dims_[i]);
            flat /= dims_[i];
        }
    }

    bool conformable(const Grid& o) const {
        return dims_ == o.dims_ && halfw_ == o.halfw_;
    }
    template <class U>
    bool conformable(const Grid<U>& o) const {
        return dims_ == o.dims() && halfw_ == o.half_widths();
    }

    /// Same shape, value type U, zero-filled.
    template <class U = T>
    Grid<U> like() const {
        return Grid<U>(dims_, halfw_);
    }

    void fill_from(const std::function<T(std::span<const double>)>& fn) {
        std::vector<double> x(dims_.size());
        for (std::size_t f = 0; f < v_.size(); ++f) {
            coords(f, x);
            v_[f] = fn(x);
        }
    }

    Grid& operator+=(const Grid& o) { bin(o, [](T& a, const T& b) { a += b; }); return *this; }
    Grid& operator-=(const Grid& o) { bin(o, [](T& a, const T& b) { a -= b; }); return *this; }
    Grid& operator*=(T s) { for (auto& a : v_) a *= s; return *this; }

private:
    template <class F>
    void bin(const Grid& o, F&& f) {
        if (!conformable(o)) throw std::domain_error("Grid: non-conformable operands");
        for (std::size_t i = 0; i < v_.size(); ++i) f(v_[i], o.v_[i]);
    }

    std::vector<std::size_t> dims_;
    std::vector<double> halfw_;
    std::vector<T> v_;
};

using RealGrid = Grid<double>;
using ComplexGrid = Grid<cplx>;
using BoolGrid = Grid<std::uint8_t>;

inline RealGrid abs_grid(const ComplexGrid& g) {
    RealGrid out = g.like<double>();
    for (std::size_t i = 0; i < g.size(); ++i) out[i] = std::abs(g[i]);
    return out;
}

inline RealGrid abs_grid(const RealGrid& g) {
    RealGrid out = g;
    for (auto& v : out.values()) v = std::abs(v);
    return out;
}

inline double max_abs(const RealGrid& g) {
    double m = 0.0;
    for (double v : g.values()) m = std::max(m, std::abs(v));
    return m;
}

inline double l2_norm(const RealGrid& g) {
    double s = 0.0;
    for (double v : g.values()) s += v * v;
    return std::sqrt(s * g.cell_volume());
}

inline double l2_norm(const ComplexGrid& g) {
    double s = 0.0;
    for (const cplx& v : g.values()) s += std::norm(v);
    return std::sqrt(s * g.cell_volume());
}

/// Periodic min-image displacement table of anisotropic quasi-norms:
/// lut[flat offset] = |Delta|_a where Delta_i is the offset folded to
/// [-d_i/2, d_i/2) cells times the spacing.  Built once per (a, grid shape);
/// every ball/stencil query goes through it.
class QuasiNormTable {
public:
    QuasiNormTable() = default;

    QuasiNormTable(const Anisotropy& an, const std::vector<std::size_t>& dims,
                   const std::vector<double>& half_widths)
        : dims_(dims) {
        std::size_t total = 1;
        for (std::size_t d : dims) total *= d;
        lut_.resize(total);
        const std::size_t n = dims.size();
        std::vector<double> h(n);
        for (std::size_t i = 0; i < n; ++i)
            h[i] = 2.0 * half_widths[i] / static_cast<double>(dims[i]);
        std::vector<std::size_t> idx(n);
        std::vector<double> d(n);
        for (std::size_t f = 0; f < total; ++f) {
            std::size_t rem = f;
            for (std::size_t i = n; i-- > 0;) {
                idx[i] = rem % dims[i];
                rem /= dims[i];
            }
            for (std::size_t i = 0; i < n; ++i) {
                std::ptrdiff_t o = static_cast<std::ptrdiff_t>(idx[i]);
                const std::ptrdiff_t di = static_cast<std::ptrdiff_t>(dims[i]);
                if (o >= di / 2) o -= di;  // fold to [-d/2, d/2)
                d[i] = static_cast<double>(o) * h[i];
            }
            lut_[f] = quasi_norm(an, d);
        }
    }

    /// Quasi-norm of the folded offset (in cells) between two flat indices.
    double operator()(std::span<const std::ptrdiff_t> offset) const {
        std::size_t f = 0;
        for (std::size_t i = 0; i < dims_.size(); ++i) {
            const std::ptrdiff_t di = static_cast<std::ptrdiff_t>(dims_[i]);
            std::ptrdiff_t o = ((offset[i] % di) + di) % di;
            f = f * dims_[i] + static_cast<std::size_t>(o);
        }
        return lut_[f];
    }

    const std::vector<double>& raw() const { return lut_; }
    const std::vector<std::size_t>& dims() const { return dims_; }

private:
    std::vector<std::size_t> dims_;
    std::vector<double> lut_;
};

} // namespace aniso
