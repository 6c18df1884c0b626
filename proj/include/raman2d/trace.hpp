#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "raman2d/config.hpp"
#include "raman2d/matrix.hpp"
#include "raman2d/profile.hpp"

namespace raman2d {

// Per-channel OTDR traces on the instrument's fine distance grid.
struct TraceSet {
    Matrix values_dbm;    // [channels x fine grid]
    double resolution_m = 0.0;
    double span_m = 0.0;  // nominal span; last sample may fall short of it

    std::size_t num_points() const { return values_dbm.cols(); }
    double z_at(std::size_t i) const { return static_cast<double>(i) * resolution_m; }
};

// Interpolates the simulated fine-grid signal onto the OTDR grid and, when
// a seed is given, adds independent Gaussian noise in the dB domain with
// sigma(z) = noise_sigma0_db + noise_slope_db_per_km * z.
TraceSet emulate_traces(const Matrix& fine_dbm, const std::vector<double>& fine_z_m,
                        const PipelineConfig& cfg, std::optional<uint64_t> seed);

// Least-squares polynomial smoothing. Edges are handled by fitting the
// polynomial over the first/last full window and evaluating it at the edge
// positions, so the series keeps its length.
std::vector<double> savgol_smooth(const std::vector<double>& series, int window, int order);

// Full projection matrix of the filter (window x window); row r gives the
// weights producing the smoothed value at in-window position r.
Matrix savgol_projection(int window, int order);

// Linear interpolation onto the coarse measurement grid
// (0 : target_resolution : span). The nominal span may exceed the last
// trace sample by less than one resolution step; that tail is linearly
// extrapolated from the final segment.
Matrix downsample(const TraceSet& traces, double target_resolution_m);

// emulate -> smooth per channel -> downsample, grids attached.
PowerProfile2D measure(const Matrix& fine_dbm, const std::vector<double>& fine_z_m,
                       const std::vector<double>& freq_thz, const PipelineConfig& cfg,
                       std::optional<uint64_t> seed);

}  // namespace raman2d
