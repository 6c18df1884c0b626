#include "raman2d/profile.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "raman2d/errors.hpp"
#include "raman2d/ini.hpp"
#include "raman2d/io_util.hpp"

namespace raman2d {

bool PowerProfile2D::same_grids(const PowerProfile2D& other) const {
    return freq_thz == other.freq_thz && z_m == other.z_m;
}

void PowerProfile2D::validate() const {
    if (values.rows() != freq_thz.size() || values.cols() != z_m.size())
        throw ShapeError("profile: value matrix does not match grids");
    for (double v : values.data())
        if (!std::isfinite(v)) throw NumericError("profile: non-finite value");
    if (!z_m.empty() && z_m.front() != 0.0)
        throw ShapeError("profile: z grid must start at 0");
}

double mae(const PowerProfile2D& a, const PowerProfile2D& b) {
    if (!a.values.same_shape(b.values) || !a.same_grids(b))
        throw ShapeError("mae: profile grids do not match");
    double worst = 0.0;
    const auto& da = a.values.data();
    const auto& db = b.values.data();
    for (std::size_t i = 0; i < da.size(); ++i)
        worst = std::max(worst, std::abs(da[i] - db[i]));
    return worst;
}

namespace {
constexpr char kMagic[4] = {'R', 'P', 'P', '2'};
constexpr uint16_t kVersion = 1;
}  // namespace

void save_profile(const PowerProfile2D& profile, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write profile file: " + path);
    out.write(kMagic, 4);
    io::write_u16(out, kVersion);
    io::write_u16(out, static_cast<uint16_t>(profile.freq_thz.size()));
    io::write_u16(out, static_cast<uint16_t>(profile.z_m.size()));
    io::write_f64s(out, profile.freq_thz);
    io::write_f64s(out, profile.z_m);
    io::write_f64s(out, profile.values.data());
    if (!out) throw std::runtime_error("short write to profile file: " + path);
}

PowerProfile2D load_profile(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open profile file: " + path);
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
        throw FormatError("profile file has wrong magic: " + path);
    const uint16_t version = io::read_u16(in, path);
    if (version != kVersion)
        throw FormatError("profile file has unsupported version: " + path);
    const uint16_t channels = io::read_u16(in, path);
    const uint16_t zpoints = io::read_u16(in, path);
    PowerProfile2D profile;
    profile.freq_thz = io::read_f64s(in, channels, path);
    profile.z_m = io::read_f64s(in, zpoints, path);
    profile.values = Matrix(channels, zpoints);
    profile.values.data() = io::read_f64s(in, std::size_t(channels) * zpoints, path);
    return profile;
}

void write_profile_csv(const PowerProfile2D& profile, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write csv file: " + path);
    out << "freq_thz\\z_m";
    for (double z : profile.z_m) out << "," << IniDoc::format_double(z);
    out << "\n";
    for (std::size_t r = 0; r < profile.values.rows(); ++r) {
        out << IniDoc::format_double(profile.freq_thz[r]);
        for (std::size_t c = 0; c < profile.values.cols(); ++c)
            out << "," << IniDoc::format_double(profile.values(r, c));
        out << "\n";
    }
}

}  // namespace raman2d
