#pragma once

// HKF1 field files: magic "HKFIELD1", u32 LE n, u32 LE N, then N^{2n}
// float64 LE values in grid order. A JSON sidecar carries the metadata.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include <json.hpp>

#include "common.hpp"
#include "torus.hpp"

namespace hklab {

inline constexpr char kFieldMagic[8] = {'H', 'K', 'F', 'I', 'E', 'L', 'D', '1'};

namespace detail {

template <typename U>
void put_le(std::ostream& os, U v)
{
    std::array<char, sizeof(U)> b{};
    for (std::size_t i = 0; i < sizeof(U); ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    os.write(b.data(), b.size());
}

template <typename U>
U get_le(std::istream& is)
{
    std::array<unsigned char, sizeof(U)> b{};
    is.read(reinterpret_cast<char*>(b.data()), b.size());
    if (!is) throw domain_error("field file truncated");
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(b[i]) << (8 * i);
    return v;
}

} // namespace detail

inline nlohmann::json field_sidecar(const TorusField& u)
{
    nlohmann::json axes = nlohmann::json::array();
    for (int a = 1; a <= u.grid.n; ++a) {
        axes.push_back("x" + std::to_string(a));
        axes.push_back("y" + std::to_string(a));
    }
    return {{"format", "HKF1"},     {"n", u.grid.n},         {"N", u.grid.N},
            {"h", u.grid.h()},      {"axis_order", axes},    {"count", u.size()},
            {"mean_zero", u.mean_zero}};
}

/// Writes `path` and `path + ".json"`.
inline void write_field(const std::string& path, const TorusField& u)
{
    std::ofstream os(path, std::ios::binary);
    if (!os) throw domain_error("cannot open '" + path + "' for writing");
    os.write(kFieldMagic, sizeof kFieldMagic);
    detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(u.grid.n));
    detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(u.grid.N));
    for (double v : u.values) detail::put_le<std::uint64_t>(os, std::bit_cast<std::uint64_t>(v));
    if (!os) throw domain_error("write to '" + path + "' failed");
    std::ofstream side(path + ".json");
    side << field_sidecar(u).dump(2) << '\n';
}

inline TorusField read_field(const std::string& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) throw domain_error("cannot open '" + path + "'");
    char magic[8];
    is.read(magic, sizeof magic);
    if (!is || std::memcmp(magic, kFieldMagic, sizeof magic) != 0) throw domain_error("'" + path + "' is not an HKF1 file");
    const auto n = detail::get_le<std::uint32_t>(is);
    const auto N = detail::get_le<std::uint32_t>(is);
    TorusField u(TorusGrid(static_cast<int>(n), static_cast<int>(N)));
    for (double& v : u.values) v = std::bit_cast<double>(detail::get_le<std::uint64_t>(is));
    if (!u.finite()) throw domain_error("'" + path + "' contains non-finite values");
    return u;
}

} // namespace hklab
