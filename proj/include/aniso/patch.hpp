#pragma once

// Periodic axis-aligned windows holding sparse per-ball data (partition
// weights, bad parts, atoms) without allocating whole-grid buffers.

#include <cstddef>
#include <functional>
#include <vector>

#include "aniso/grid.hpp"

namespace aniso {

struct Patch {
    std::vector<std::ptrdiff_t> lo;  // first cell per axis (taken mod dims)
    std::vector<std::size_t> ext;    // cells per axis
    std::vector<double> v;           // row-major over ext

    std::size_t size() const { return v.size(); }

    static Patch make(std::vector<std::ptrdiff_t> lo, std::vector<std::size_t> ext) {
        Patch p;
        p.lo = std::move(lo);
        p.ext = std::move(ext);
        std::size_t total = 1;
        for (std::size_t e : p.ext) total *= e;
        p.v.assign(total, 0.0);
        return p;
    }

    /// Calls fn(local flat index, grid flat index, grid multi-index) per cell.
    template <class T, class Fn>
    void for_each(const Grid<T>& g, Fn&& fn) const {
        const std::size_t n = ext.size();
        std::vector<std::size_t> li(n, 0), gi(n);
        for (std::size_t f = 0; f < v.size(); ++f) {
            std::size_t rem = f;
            for (std::size_t i = n; i-- > 0;) {
                li[i] = rem % ext[i];
                rem /= ext[i];
            }
            for (std::size_t i = 0; i < n; ++i) {
                const std::ptrdiff_t d = static_cast<std::ptrdiff_t>(g.dim(static_cast<int>(i)));
                gi[i] = static_cast<std::size_t>((((lo[i] + static_cast<std::ptrdiff_t>(li[i])) % d) + d) % d);
            }
            fn(f, g.flat_index(gi), gi);
        }
    }

    void add_to(RealGrid& g, double scale = 1.0) const {
        for_each(g, [&](std::size_t lf, std::size_t gf, const std::vector<std::size_t>&) {
            g[gf] += scale * v[lf];
        });
    }

    double max_abs() const {
        double m = 0.0;
        for (double x : v) m = std::max(m, std::abs(x));
        return m;
    }
};

/// Value of a patch at an arbitrary grid cell (0 outside the window).
template <class T>
double patch_value_at(const Patch& p, const Grid<T>& g, const std::vector<std::size_t>& gi) {
    std::size_t lf = 0;
    for (std::size_t i = 0; i < p.ext.size(); ++i) {
        const std::ptrdiff_t d = static_cast<std::ptrdiff_t>(g.dim(static_cast<int>(i)));
        std::ptrdiff_t off = static_cast<std::ptrdiff_t>(gi[i]) - p.lo[i];
        off = ((off % d) + d) % d;
        if (off >= static_cast<std::ptrdiff_t>(p.ext[i])) return 0.0;
        lf = lf * p.ext[i] + static_cast<std::size_t>(off);
    }
    return p.v[lf];
}

/// Local flat index of a grid cell inside the patch window, or npos.
inline std::size_t patch_local_index(const Patch& p, const std::vector<std::size_t>& dims,
                                     const std::vector<std::size_t>& gi) {
    std::size_t lf = 0;
    for (std::size_t i = 0; i < p.ext.size(); ++i) {
        const std::ptrdiff_t d = static_cast<std::ptrdiff_t>(dims[i]);
        std::ptrdiff_t off = static_cast<std::ptrdiff_t>(gi[i]) - p.lo[i];
        off = ((off % d) + d) % d;
        if (off >= static_cast<std::ptrdiff_t>(p.ext[i])) return static_cast<std::size_t>(-1);
        lf = lf * p.ext[i] + static_cast<std::size_t>(off);
    }
    return lf;
}

/// Smallest periodic interval covering two periodic intervals on a circle.
inline void circle_interval_union(std::ptrdiff_t lo1, std::size_t ext1, std::ptrdiff_t lo2,
                                  std::size_t ext2, std::size_t d, std::ptrdiff_t& lo,
                                  std::size_t& ext) {
    if (ext1 >= d || ext2 >= d) {
        lo = 0;
        ext = d;
        return;
    }
    const double dd = static_cast<double>(d);
    const std::ptrdiff_t shift =
        static_cast<std::ptrdiff_t>(std::llround((static_cast<double>(lo1) - static_cast<double>(lo2)) / dd)) *
        static_cast<std::ptrdiff_t>(d);
    const std::ptrdiff_t a2 = lo2 + shift;
    const std::ptrdiff_t start = std::min(lo1, a2);
    const std::ptrdiff_t end = std::max(lo1 + static_cast<std::ptrdiff_t>(ext1),
                                        a2 + static_cast<std::ptrdiff_t>(ext2));
    lo = start;
    ext = static_cast<std::size_t>(end - start);
    if (ext >= d) {
        lo = 0;
        ext = d;
    }
}

/// Do two periodic index intervals [lo, lo+ext) intersect on a circle of d?
inline bool circle_intervals_overlap(std::ptrdiff_t lo1, std::size_t ext1, std::ptrdiff_t lo2,
                                     std::size_t ext2, std::size_t d) {
    if (ext1 >= d || ext2 >= d) return true;
    const auto dd = static_cast<std::ptrdiff_t>(d);
    std::ptrdiff_t a = ((lo1 % dd) + dd) % dd;
    std::ptrdiff_t b = ((lo2 % dd) + dd) % dd;
    // gap from end of interval 1 to start of interval 2, going forward
    const std::ptrdiff_t fwd = ((b - a) % dd + dd) % dd;
    const std::ptrdiff_t back = ((a - b) % dd + dd) % dd;
    return fwd < static_cast<std::ptrdiff_t>(ext1) || back < static_cast<std::ptrdiff_t>(ext2);
}

inline bool patches_overlap(const Patch& p, const Patch& q, const std::vector<std::size_t>& dims) {
    for (std::size_t i = 0; i < dims.size(); ++i)
        if (!circle_intervals_overlap(p.lo[i], p.ext[i], q.lo[i], q.ext[i], dims[i])) return false;
    return true;
}

} // namespace aniso
