#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "raman2d/errors.hpp"

namespace raman2d::io {

static_assert(std::endian::native == std::endian::little,
              "serialization assumes a little-endian host");

inline void write_u16(std::ostream& out, uint16_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
inline void write_u32(std::ostream& out, uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
inline void write_u64(std::ostream& out, uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
inline void write_f64(std::ostream& out, double v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
inline void write_f64s(std::ostream& out, const std::vector<double>& v) {
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
}

inline uint16_t read_u16(std::istream& in, const std::string& path) {
    uint16_t v;
    if (!in.read(reinterpret_cast<char*>(&v), sizeof v))
        throw CorruptionError("truncated file: " + path);
    return v;
}
inline uint32_t read_u32(std::istream& in, const std::string& path) {
    uint32_t v;
    if (!in.read(reinterpret_cast<char*>(&v), sizeof v))
        throw CorruptionError("truncated file: " + path);
    return v;
}
inline uint64_t read_u64(std::istream& in, const std::string& path) {
    uint64_t v;
    if (!in.read(reinterpret_cast<char*>(&v), sizeof v))
        throw CorruptionError("truncated file: " + path);
    return v;
}
inline double read_f64(std::istream& in, const std::string& path) {
    double v;
    if (!in.read(reinterpret_cast<char*>(&v), sizeof v))
        throw CorruptionError("truncated file: " + path);
    return v;
}
inline std::vector<double> read_f64s(std::istream& in, std::size_t n, const std::string& path) {
    std::vector<double> v(n);
    if (!in.read(reinterpret_cast<char*>(v.data()),
                 static_cast<std::streamsize>(n * sizeof(double))))
        throw CorruptionError("truncated file: " + path);
    return v;
}
inline std::string read_bytes(std::istream& in, std::size_t n, const std::string& path) {
    std::string s(n, '\0');
    if (!in.read(s.data(), static_cast<std::streamsize>(n)))
        throw CorruptionError("truncated file: " + path);
    return s;
}

}  // namespace raman2d::io
