#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "raman2d/ini.hpp"

namespace raman2d {

// Simulated fiber testbed: span geometry, loss and Raman gain curves,
// channel plan and the counter-propagating pump ladder.
struct PlantConfig {
    double fiber_length_km = 50.0;
    double integration_step_m = 10.0;
    double probe_power_dbm = -16.0;
    std::vector<double> channel_freqs_thz;                    // ascending, 100 GHz spaced
    std::vector<std::pair<double, double>> attenuation_curve; // (THz, dB/km), ascending
    double raman_peak_gain = 0.39;       // 1/(W km) at the reference pump frequency
    double raman_peak_shift_thz = 13.2;
    double raman_cutoff_shift_thz = 15.0;
    std::vector<double> pump_frequencies_thz;
    std::vector<double> pump_p_max_w;
    bool pump_pump_coupling = true;
    bool frequency_ratio_depletion = true;

    std::size_t num_channels() const { return channel_freqs_thz.size(); }
    std::size_t num_pumps() const { return pump_frequencies_thz.size(); }
    std::size_t num_steps() const;  // integration steps along the span

    void validate() const;  // throws std::invalid_argument on violations
};

// OTDR measurement chain emulation.
struct PipelineConfig {
    double otdr_resolution_m = 8.2;
    int sg_window = 19;
    int sg_order = 2;
    double target_resolution_m = 500.0;
    double noise_sigma0_db = 0.05;
    double noise_slope_db_per_km = 0.004;

    void validate() const;
};

struct TrainConfig {
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    int batch_size = 32;
    int max_epochs = 500;
    int patience = 20;
    uint64_t seed = 1;
    std::string val_metric = "mse";  // "mse" or "mae" on normalized powers

    void validate() const;
};

struct DeConfig {
    int population_size = 20;
    double weight_f = 0.7;
    double crossover_cr = 0.9;
    int max_iterations = 100;
    double mae_stop_db = 0.2;
    double init_sigma_frac = 0.1;  // warm-start spread as a fraction of p_max
    uint64_t seed = 1;

    void validate() const;
};

struct ExperimentConfig {
    PlantConfig plant;
    PipelineConfig pipeline;
    TrainConfig train;
    DeConfig de;

    uint64_t master_seed = 20220901;
    int n_samples = 2000;
    int n_train = 1500;
    int n_test = 300;
    int n_val = 200;
    double hard_case_threshold_db = 1.0;
    int hard_case_limit = 0;        // 0 = no limit
    double histogram_bin_db = 0.05;
    bool noisy = true;
    int workers = 0;                // 0 = hardware concurrency

    void validate() const;
};

PlantConfig default_plant_config();
PipelineConfig default_pipeline_config();
ExperimentConfig default_experiment_config();
// Paper-scale sizes: 4900 samples split 4100/500/300.
void apply_paper_scale(ExperimentConfig& cfg);

// INI round trip. to_ini emits every tunable; from_ini overlays the doc
// onto the given defaults so partial configs are valid.
IniDoc to_ini(const ExperimentConfig& cfg);
ExperimentConfig from_ini(const IniDoc& doc, ExperimentConfig base);

// Canonical [plant] + [pipeline] INI text; used as the dataset provenance
// fingerprint.
std::string plant_pipeline_snapshot(const PlantConfig& plant, const PipelineConfig& pipeline);

}  // namespace raman2d
