#pragma once

#include <string>
#include <vector>

#include "raman2d/matrix.hpp"

namespace raman2d {

// 2D signal power evolution P(f, z) on the measurement grid, dBm.
struct PowerProfile2D {
    std::vector<double> freq_thz;  // ascending channel frequencies
    std::vector<double> z_m;       // 0 .. span, uniform
    Matrix values;                 // [channels x distance points]

    bool same_grids(const PowerProfile2D& other) const;
    void validate() const;  // shape/finiteness invariants
};

// Maximum absolute error over the full frequency x distance grid, dB.
double mae(const PowerProfile2D& a, const PowerProfile2D& b);

// Self-describing binary block, magic "RPP2", little-endian 64-bit floats.
void save_profile(const PowerProfile2D& profile, const std::string& path);
PowerProfile2D load_profile(const std::string& path);

// CSV for plotting: first row is the z grid, first column the channel
// frequencies.
void write_profile_csv(const PowerProfile2D& profile, const std::string& path);

}  // namespace raman2d
