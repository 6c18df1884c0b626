#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "raman2d/config.hpp"
#include "raman2d/matrix.hpp"
#include "raman2d/profile.hpp"

namespace raman2d {

constexpr double kLn10 = 2.302585092994046;

inline double dbm_to_w(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }
inline double w_to_dbm(double w) { return 10.0 * std::log10(w * 1e3); }
// dB/km -> linear 1/km.
inline double db_per_km_to_linear(double db) { return db * kLn10 / 10.0; }

// Counter-propagating pump set: injected powers with their fixed
// frequencies and per-pump upper bounds.
struct PumpSetting {
    std::vector<double> powers_w;
    std::vector<double> frequencies_thz;
    std::vector<double> p_max_w;

    void validate() const;
};

PumpSetting make_setting(const PlantConfig& cfg, const std::vector<double>& powers_w);

// Pump power along the span from the coupled backward solve.
struct PumpField {
    std::vector<double> z_m;  // ascending, signal coordinates
    Matrix powers_w;          // [pumps x grid]
};

// Fine-grid signal solution before the measurement chain.
struct FineSignal {
    std::vector<double> z_m;
    Matrix values_dbm;  // [channels x grid]
};

// Triangular Raman gain profile, 1/(W km). Scales with pump frequency
// relative to the highest configured pump.
double raman_gain(double delta_f_thz, double pump_freq_thz, const PlantConfig& cfg);

// Piecewise-linear fiber loss, dB/km. Throws DomainError outside the
// configured curve.
double attenuation(double freq_thz, const PlantConfig& cfg);

// Integrates the pump-pump coupled equations from the far end toward the
// signal launch with fixed-step RK4.
PumpField solve_pump_evolution(const PumpSetting& setting, const PlantConfig& cfg);

// Per-channel signal propagation over the precomputed pump field; channels
// are mutually independent. Returns dBm on the integration grid.
FineSignal solve_signal_profile(const PumpSetting& setting, const PlantConfig& cfg);

// Simulated testbed: physics plus the OTDR measurement chain. Pure; safe
// to call concurrently.
class Plant {
  public:
    Plant(PlantConfig plant_cfg, PipelineConfig pipeline_cfg);

    // Applies pump powers and measures the resulting 2D profile. Without a
    // seed the measurement chain runs noiseless.
    PowerProfile2D apply(const PumpSetting& setting,
                         std::optional<uint64_t> noise_seed = std::nullopt) const;
    PowerProfile2D apply_powers(const std::vector<double>& powers_w,
                                std::optional<uint64_t> noise_seed = std::nullopt) const;

    const PlantConfig& plant_config() const { return plant_; }
    const PipelineConfig& pipeline_config() const { return pipeline_; }

  private:
    PlantConfig plant_;
    PipelineConfig pipeline_;
};

}  // namespace raman2d
