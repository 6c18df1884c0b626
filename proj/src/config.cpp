#include "raman2d/config.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "raman2d/errors.hpp"

namespace raman2d {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

std::size_t PlantConfig::num_steps() const {
    return static_cast<std::size_t>(std::llround(fiber_length_km * 1000.0 / integration_step_m));
}

void PlantConfig::validate() const {
    require(fiber_length_km > 0, "plant: fiber_length_km must be positive");
    require(integration_step_m > 0, "plant: integration_step_m must be positive");
    const double steps = fiber_length_km * 1000.0 / integration_step_m;
    require(std::abs(steps - std::llround(steps)) < 1e-9,
            "plant: integration_step_m must divide the span evenly");
    require(!channel_freqs_thz.empty(), "plant: channel_freqs_thz must not be empty");
    for (std::size_t i = 0; i < channel_freqs_thz.size(); ++i) {
        const double f = channel_freqs_thz[i];
        require(f >= 191.8 - 1e-9 && f <= 196.2 + 1e-9,
                "plant: channel frequencies must lie in [191.8, 196.2] THz");
        if (i > 0)
            require(std::abs(channel_freqs_thz[i] - channel_freqs_thz[i - 1] - 0.1) < 1e-9,
                    "plant: channel frequencies must ascend with 0.1 THz spacing");
    }
    require(attenuation_curve.size() >= 2, "plant: attenuation_curve needs at least two anchors");
    for (std::size_t i = 0; i < attenuation_curve.size(); ++i) {
        require(attenuation_curve[i].second > 0, "plant: attenuation values must be positive");
        if (i > 0)
            require(attenuation_curve[i].first > attenuation_curve[i - 1].first,
                    "plant: attenuation anchors must ascend in frequency");
    }
    require(raman_peak_gain > 0, "plant: raman_peak_gain must be positive");
    require(raman_peak_shift_thz > 0 && raman_cutoff_shift_thz > raman_peak_shift_thz,
            "plant: raman gain shifts must satisfy 0 < peak < cutoff");
    require(!pump_frequencies_thz.empty(), "plant: pump_frequencies_thz must not be empty");
    require(pump_p_max_w.size() == pump_frequencies_thz.size(),
            "plant: pump_p_max_w size must match pump_frequencies_thz");
    const bool ascending = pump_frequencies_thz.size() < 2 ||
                           pump_frequencies_thz[1] > pump_frequencies_thz[0];
    for (std::size_t j = 0; j < pump_frequencies_thz.size(); ++j) {
        const double f = pump_frequencies_thz[j];
        require(f >= 203.9 - 1e-9 && f <= 211.1 + 1e-9,
                "plant: pump frequencies must lie in [203.9, 211.1] THz");
        require(pump_p_max_w[j] > 0, "plant: pump_p_max_w must be positive");
        if (j > 0) {
            if (ascending)
                require(pump_frequencies_thz[j] > pump_frequencies_thz[j - 1],
                        "plant: pump frequencies must be strictly monotonic");
            else
                require(pump_frequencies_thz[j] < pump_frequencies_thz[j - 1],
                        "plant: pump frequencies must be strictly monotonic");
        }
    }
}

void PipelineConfig::validate() const {
    require(otdr_resolution_m > 0, "pipeline: otdr_resolution_m must be positive");
    require(sg_window > 0 && sg_window % 2 == 1, "pipeline: sg_window must be odd and positive");
    require(sg_order >= 0 && sg_window > sg_order, "pipeline: sg_window must exceed sg_order");
    require(target_resolution_m > otdr_resolution_m,
            "pipeline: target_resolution_m must exceed otdr_resolution_m");
    require(noise_sigma0_db >= 0 && noise_slope_db_per_km >= 0,
            "pipeline: noise parameters must be non-negative");
}

void TrainConfig::validate() const {
    require(learning_rate > 0, "train: learning_rate must be positive");
    require(adam_beta1 > 0 && adam_beta1 < 1 && adam_beta2 > 0 && adam_beta2 < 1,
            "train: adam betas must lie in (0, 1)");
    require(adam_eps > 0, "train: adam_eps must be positive");
    require(batch_size > 0, "train: batch_size must be positive");
    require(max_epochs > 0, "train: max_epochs must be positive");
    require(patience > 0 && patience < max_epochs, "train: patience must lie in [1, max_epochs)");
    require(val_metric == "mse" || val_metric == "mae", "train: val_metric must be mse or mae");
}

void DeConfig::validate() const {
    require(population_size >= 4, "de: population_size must be at least 4");
    require(weight_f > 0 && weight_f <= 2.0, "de: weight_f must lie in (0, 2]");
    require(crossover_cr >= 0 && crossover_cr <= 1.0, "de: crossover_cr must lie in [0, 1]");
    require(max_iterations >= 1, "de: max_iterations must be at least 1");
    require(mae_stop_db >= 0, "de: mae_stop_db must be non-negative");
    require(init_sigma_frac >= 0, "de: init_sigma_frac must be non-negative");
}

void ExperimentConfig::validate() const {
    plant.validate();
    pipeline.validate();
    train.validate();
    de.validate();
    require(n_samples >= 1, "experiment: n_samples must be at least 1");
    require(n_train >= 1 && n_test >= 1 && n_val >= 1, "experiment: split sizes must be positive");
    require(n_train + n_test + n_val <= n_samples,
            "experiment: split sizes exceed n_samples");
    require(hard_case_threshold_db > 0, "experiment: hard_case_threshold_db must be positive");
    require(hard_case_limit >= 0, "experiment: hard_case_limit must be non-negative");
    require(histogram_bin_db > 0, "experiment: histogram_bin_db must be positive");
    require(workers >= 0, "experiment: workers must be non-negative");
}

PlantConfig default_plant_config() {
    PlantConfig cfg;
    cfg.channel_freqs_thz.resize(44);
    for (int i = 0; i < 44; ++i) cfg.channel_freqs_thz[i] = (1918.0 + i) / 10.0;
    // Standard SMF loss anchors, extended collinearly to the edges of the
    // combined signal + pump band so every queried frequency is covered.
    const double f_lo = 193.4, a_lo = 0.20;
    const double f_hi = 207.0, a_hi = 0.25;
    const double slope = (a_hi - a_lo) / (f_hi - f_lo);
    cfg.attenuation_curve = {
        {191.8, a_lo + slope * (191.8 - f_lo)},
        {f_lo, a_lo},
        {f_hi, a_hi},
        {211.1, a_hi + slope * (211.1 - f_hi)},
    };
    cfg.pump_frequencies_thz = {210.2, 208.8, 206.9, 204.6};
    cfg.pump_p_max_w = {0.3, 0.3, 0.3, 0.3};
    return cfg;
}

PipelineConfig default_pipeline_config() { return PipelineConfig{}; }

ExperimentConfig default_experiment_config() {
    ExperimentConfig cfg;
    cfg.plant = default_plant_config();
    cfg.pipeline = default_pipeline_config();
    return cfg;
}

void apply_paper_scale(ExperimentConfig& cfg) {
    cfg.n_samples = 4900;
    cfg.n_train = 4100;
    cfg.n_test = 500;
    cfg.n_val = 300;
}

IniDoc to_ini(const ExperimentConfig& cfg) {
    IniDoc doc;
    doc.set_double("plant", "fiber_length_km", cfg.plant.fiber_length_km);
    doc.set_double("plant", "integration_step_m", cfg.plant.integration_step_m);
    doc.set_double("plant", "probe_power_dbm", cfg.plant.probe_power_dbm);
    doc.set_doubles("plant", "channel_freqs_thz", cfg.plant.channel_freqs_thz);
    {
        std::string curve;
        for (std::size_t i = 0; i < cfg.plant.attenuation_curve.size(); ++i) {
            if (i) curve += ", ";
            curve += IniDoc::format_double(cfg.plant.attenuation_curve[i].first) + ":" +
                     IniDoc::format_double(cfg.plant.attenuation_curve[i].second);
        }
        doc.set("plant", "attenuation_curve_db_per_km", curve);
    }
    doc.set_double("plant", "raman_peak_gain_per_w_km", cfg.plant.raman_peak_gain);
    doc.set_double("plant", "raman_peak_shift_thz", cfg.plant.raman_peak_shift_thz);
    doc.set_double("plant", "raman_cutoff_shift_thz", cfg.plant.raman_cutoff_shift_thz);
    doc.set_doubles("plant", "pump_frequencies_thz", cfg.plant.pump_frequencies_thz);
    doc.set_doubles("plant", "pump_p_max_w", cfg.plant.pump_p_max_w);
    doc.set_bool("plant", "pump_pump_coupling", cfg.plant.pump_pump_coupling);
    doc.set_bool("plant", "frequency_ratio_depletion", cfg.plant.frequency_ratio_depletion);

    doc.set_double("pipeline", "otdr_resolution_m", cfg.pipeline.otdr_resolution_m);
    doc.set_int("pipeline", "sg_window", cfg.pipeline.sg_window);
    doc.set_int("pipeline", "sg_order", cfg.pipeline.sg_order);
    doc.set_double("pipeline", "target_resolution_m", cfg.pipeline.target_resolution_m);
    doc.set_double("pipeline", "noise_sigma0_db", cfg.pipeline.noise_sigma0_db);
    doc.set_double("pipeline", "noise_slope_db_per_km", cfg.pipeline.noise_slope_db_per_km);

    doc.set_double("train", "learning_rate", cfg.train.learning_rate);
    doc.set_double("train", "adam_beta1", cfg.train.adam_beta1);
    doc.set_double("train", "adam_beta2", cfg.train.adam_beta2);
    doc.set_double("train", "adam_eps", cfg.train.adam_eps);
    doc.set_int("train", "batch_size", cfg.train.batch_size);
    doc.set_int("train", "max_epochs", cfg.train.max_epochs);
    doc.set_int("train", "patience", cfg.train.patience);
    doc.set_u64("train", "seed", cfg.train.seed);
    doc.set("train", "val_metric", cfg.train.val_metric);

    doc.set_int("de", "population_size", cfg.de.population_size);
    doc.set_double("de", "weight_f", cfg.de.weight_f);
    doc.set_double("de", "crossover_cr", cfg.de.crossover_cr);
    doc.set_int("de", "max_iterations", cfg.de.max_iterations);
    doc.set_double("de", "mae_stop_db", cfg.de.mae_stop_db);
    doc.set_double("de", "init_sigma_frac", cfg.de.init_sigma_frac);
    doc.set_u64("de", "seed", cfg.de.seed);

    doc.set_u64("experiment", "master_seed", cfg.master_seed);
    doc.set_int("experiment", "n_samples", cfg.n_samples);
    doc.set_int("experiment", "n_train", cfg.n_train);
    doc.set_int("experiment", "n_test", cfg.n_test);
    doc.set_int("experiment", "n_val", cfg.n_val);
    doc.set_double("experiment", "hard_case_threshold_db", cfg.hard_case_threshold_db);
    doc.set_int("experiment", "hard_case_limit", cfg.hard_case_limit);
    doc.set_double("experiment", "histogram_bin_db", cfg.histogram_bin_db);
    doc.set_bool("experiment", "noisy", cfg.noisy);
    // workers is a runtime knob, not an experiment parameter: results are
    // worker-count independent by contract, so it stays out of snapshots.
    return doc;
}

std::string plant_pipeline_snapshot(const PlantConfig& plant, const PipelineConfig& pipeline) {
    ExperimentConfig cfg = default_experiment_config();
    cfg.plant = plant;
    cfg.pipeline = pipeline;
    const IniDoc full = to_ini(cfg);
    IniDoc doc;
    for (const auto& sec : full.sections()) {
        if (sec.name != "plant" && sec.name != "pipeline") continue;
        for (const auto& [k, v] : sec.entries) doc.set(sec.name, k, v);
    }
    return doc.serialize();
}

namespace {

std::vector<std::pair<double, double>> parse_curve(const std::string& text) {
    std::vector<std::pair<double, double>> curve;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos)
            throw FormatError("attenuation_curve_db_per_km: expected THz:dB_per_km pairs");
        curve.emplace_back(std::stod(item.substr(0, colon)), std::stod(item.substr(colon + 1)));
    }
    return curve;
}

}  // namespace

ExperimentConfig from_ini(const IniDoc& doc, ExperimentConfig cfg) {
    auto dbl = [&](const char* s, const char* k, double& out) {
        if (doc.has(s, k)) out = doc.get_double(s, k);
    };
    auto i32 = [&](const char* s, const char* k, int& out) {
        if (doc.has(s, k)) out = static_cast<int>(doc.get_int(s, k));
    };
    auto u64 = [&](const char* s, const char* k, uint64_t& out) {
        if (doc.has(s, k)) out = doc.get_u64(s, k);
    };
    auto bol = [&](const char* s, const char* k, bool& out) {
        if (doc.has(s, k)) out = doc.get_bool(s, k);
    };
    auto vec = [&](const char* s, const char* k, std::vector<double>& out) {
        if (doc.has(s, k)) out = doc.get_doubles(s, k);
    };

    dbl("plant", "fiber_length_km", cfg.plant.fiber_length_km);
    dbl("plant", "integration_step_m", cfg.plant.integration_step_m);
    dbl("plant", "probe_power_dbm", cfg.plant.probe_power_dbm);
    vec("plant", "channel_freqs_thz", cfg.plant.channel_freqs_thz);
    if (doc.has("plant", "attenuation_curve_db_per_km"))
        cfg.plant.attenuation_curve = parse_curve(doc.get("plant", "attenuation_curve_db_per_km"));
    dbl("plant", "raman_peak_gain_per_w_km", cfg.plant.raman_peak_gain);
    dbl("plant", "raman_peak_shift_thz", cfg.plant.raman_peak_shift_thz);
    dbl("plant", "raman_cutoff_shift_thz", cfg.plant.raman_cutoff_shift_thz);
    vec("plant", "pump_frequencies_thz", cfg.plant.pump_frequencies_thz);
    vec("plant", "pump_p_max_w", cfg.plant.pump_p_max_w);
    bol("plant", "pump_pump_coupling", cfg.plant.pump_pump_coupling);
    bol("plant", "frequency_ratio_depletion", cfg.plant.frequency_ratio_depletion);

    dbl("pipeline", "otdr_resolution_m", cfg.pipeline.otdr_resolution_m);
    i32("pipeline", "sg_window", cfg.pipeline.sg_window);
    i32("pipeline", "sg_order", cfg.pipeline.sg_order);
    dbl("pipeline", "target_resolution_m", cfg.pipeline.target_resolution_m);
    dbl("pipeline", "noise_sigma0_db", cfg.pipeline.noise_sigma0_db);
    dbl("pipeline", "noise_slope_db_per_km", cfg.pipeline.noise_slope_db_per_km);

    dbl("train", "learning_rate", cfg.train.learning_rate);
    dbl("train", "adam_beta1", cfg.train.adam_beta1);
    dbl("train", "adam_beta2", cfg.train.adam_beta2);
    dbl("train", "adam_eps", cfg.train.adam_eps);
    i32("train", "batch_size", cfg.train.batch_size);
    i32("train", "max_epochs", cfg.train.max_epochs);
    i32("train", "patience", cfg.train.patience);
    u64("train", "seed", cfg.train.seed);
    if (doc.has("train", "val_metric")) cfg.train.val_metric = doc.get("train", "val_metric");

    i32("de", "population_size", cfg.de.population_size);
    dbl("de", "weight_f", cfg.de.weight_f);
    dbl("de", "crossover_cr", cfg.de.crossover_cr);
    i32("de", "max_iterations", cfg.de.max_iterations);
    dbl("de", "mae_stop_db", cfg.de.mae_stop_db);
    dbl("de", "init_sigma_frac", cfg.de.init_sigma_frac);
    u64("de", "seed", cfg.de.seed);

    u64("experiment", "master_seed", cfg.master_seed);
    i32("experiment", "n_samples", cfg.n_samples);
    i32("experiment", "n_train", cfg.n_train);
    i32("experiment", "n_test", cfg.n_test);
    i32("experiment", "n_val", cfg.n_val);
    dbl("experiment", "hard_case_threshold_db", cfg.hard_case_threshold_db);
    i32("experiment", "hard_case_limit", cfg.hard_case_limit);
    dbl("experiment", "histogram_bin_db", cfg.histogram_bin_db);
    bol("experiment", "noisy", cfg.noisy);
    i32("experiment", "workers", cfg.workers);  // accepted for convenience
    return cfg;
}

}  // namespace raman2d
