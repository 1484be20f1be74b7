#pragma once

// The "AMN1" grid-function container: magic "AMN1", u32 version=1, u32 n,
// u32 dims[n], f64 half_widths[n], u8 is_complex, then little-endian f64
// row-major payload (interleaved re/im when complex).  Byte-exact across
// platforms; big-endian hosts swap on the way in and out.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "aniso/grid.hpp"

namespace aniso {

namespace detail {

inline bool host_little_endian() { return std::endian::native == std::endian::little; }

template <class T>
T byteswap_if_needed(T v) {
    if (host_little_endian()) return v;
    unsigned char* p = reinterpret_cast<unsigned char*>(&v);
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(p[i], p[sizeof(T) - 1 - i]);
    return v;
}

template <class T>
void write_le(std::ostream& os, T v) {
    v = byteswap_if_needed(v);
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_le(std::istream& is, const std::string& path, const char* what) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is)
        throw std::runtime_error("AMN1: truncated file '" + path + "' reading " + what + " at offset " +
                                 std::to_string(static_cast<long long>(is.tellg())));
    return byteswap_if_needed(v);
}

} // namespace detail

using GridVariant = std::variant<RealGrid, ComplexGrid>;

template <class T>
void save_grid(const Grid<T>& g, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("AMN1: cannot open '" + path + "' for writing");
    os.write("AMN1", 4);
    detail::write_le<std::uint32_t>(os, 1);
    detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(g.ndim()));
    for (int i = 0; i < g.ndim(); ++i)
        detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(g.dim(i)));
    for (int i = 0; i < g.ndim(); ++i) detail::write_le<double>(os, g.half_width(i));
    const bool is_complex = std::is_same_v<T, cplx>;
    detail::write_le<std::uint8_t>(os, is_complex ? 1 : 0);
    for (std::size_t i = 0; i < g.size(); ++i) {
        if constexpr (std::is_same_v<T, cplx>) {
            detail::write_le<double>(os, g[i].real());
            detail::write_le<double>(os, g[i].imag());
        } else {
            detail::write_le<double>(os, static_cast<double>(g[i]));
        }
    }
    if (!os) throw std::runtime_error("AMN1: write failed for '" + path + "'");
}

inline GridVariant load_grid(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("AMN1: cannot open '" + path + "'");
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "AMN1", 4) != 0)
        throw std::runtime_error("AMN1: bad magic in '" + path + "' at offset 0");
    const auto version = detail::read_le<std::uint32_t>(is, path, "version");
    if (version != 1)
        throw std::runtime_error("AMN1: unsupported version " + std::to_string(version) + " in '" + path + "'");
    const auto n = detail::read_le<std::uint32_t>(is, path, "dimension");
    if (n == 0 || n > 8) throw std::runtime_error("AMN1: implausible dimension in '" + path + "'");
    std::vector<std::size_t> dims(n);
    for (auto& d : dims) d = detail::read_le<std::uint32_t>(is, path, "dims");
    std::vector<double> halfw(n);
    for (auto& h : halfw) h = detail::read_le<double>(is, path, "half_widths");
    const auto is_complex = detail::read_le<std::uint8_t>(is, path, "complex flag");
    if (is_complex) {
        ComplexGrid g(dims, halfw);
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double re = detail::read_le<double>(is, path, "payload");
            const double im = detail::read_le<double>(is, path, "payload");
            g[i] = cplx(re, im);
        }
        return g;
    }
    RealGrid g(dims, halfw);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = detail::read_le<double>(is, path, "payload");
    return g;
}

inline RealGrid load_real_grid(const std::string& path) {
    GridVariant v = load_grid(path);
    if (std::holds_alternative<RealGrid>(v)) return std::get<RealGrid>(v);
    throw std::runtime_error("AMN1: expected real payload in '" + path + "'");
}

} // namespace aniso
