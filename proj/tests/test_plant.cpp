#include <doctest.h>

#include <cmath>

#include "raman2d/errors.hpp"
#include "raman2d/plant.hpp"

using namespace raman2d;

namespace {

PlantConfig single_pump_config(double freq_thz, double p_max = 0.3) {
    PlantConfig cfg = default_plant_config();
    cfg.pump_frequencies_thz = {freq_thz};
    cfg.pump_p_max_w = {p_max};
    return cfg;
}

}  // namespace

TEST_CASE("raman gain triangle") {
    const PlantConfig cfg = default_plant_config();
    const double ref = 210.2;
    CHECK(raman_gain(0.0, ref, cfg) == 0.0);
    CHECK(raman_gain(-3.0, ref, cfg) == 0.0);
    CHECK(raman_gain(13.2, ref, cfg) == doctest::Approx(cfg.raman_peak_gain).epsilon(1e-12));
    CHECK(raman_gain(6.6, ref, cfg) == doctest::Approx(cfg.raman_peak_gain / 2).epsilon(1e-12));
    CHECK(raman_gain(15.0, ref, cfg) == 0.0);
    CHECK(raman_gain(17.0, ref, cfg) == 0.0);
    // Linear descent between peak and cutoff.
    CHECK(raman_gain(14.1, ref, cfg) == doctest::Approx(cfg.raman_peak_gain * 0.5).epsilon(1e-12));
    // Scales with the pump frequency relative to the highest pump.
    CHECK(raman_gain(13.2, 204.6, cfg) ==
          doctest::Approx(cfg.raman_peak_gain * 204.6 / 210.2).epsilon(1e-12));
}

TEST_CASE("attenuation interpolates the configured curve") {
    const PlantConfig cfg = default_plant_config();
    CHECK(attenuation(193.4, cfg) == doctest::Approx(0.20).epsilon(1e-12));
    CHECK(attenuation(207.0, cfg) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(attenuation(200.2, cfg) == doctest::Approx(0.225).epsilon(1e-12));
    CHECK_THROWS_AS(attenuation(150.0, cfg), DomainError);
    CHECK_THROWS_AS(attenuation(230.0, cfg), DomainError);
}

TEST_CASE("pump setting bounds are enforced") {
    const PlantConfig cfg = default_plant_config();
    CHECK_THROWS_AS(make_setting(cfg, {0.5, 0.1, 0.1, 0.1}), std::invalid_argument);
    CHECK_THROWS_AS(make_setting(cfg, {-0.01, 0.1, 0.1, 0.1}), std::invalid_argument);
    CHECK_THROWS_AS(make_setting(cfg, {0.1, 0.1, 0.1}), std::invalid_argument);
    CHECK_NOTHROW(make_setting(cfg, {0.3, 0.3, 0.3, 0.3}));

    PumpSetting bad = make_setting(cfg, {0.1, 0.1, 0.1, 0.1});
    bad.frequencies_thz = {210.2, 208.8, 208.8, 204.6};  // duplicate
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("zero pumps give an identically zero pump field") {
    const PlantConfig cfg = default_plant_config();
    const PumpField field = solve_pump_evolution(make_setting(cfg, {0, 0, 0, 0}), cfg);
    for (double v : field.powers_w.data()) CHECK(v == 0.0);
}

TEST_CASE("pump field meets the injection boundary condition") {
    const PlantConfig cfg = default_plant_config();
    const std::vector<double> powers = {0.25, 0.1, 0.05, 0.3};
    const PumpField field = solve_pump_evolution(make_setting(cfg, powers), cfg);
    const std::size_t last = field.z_m.size() - 1;
    CHECK(field.z_m[last] == 50000.0);
    for (std::size_t j = 0; j < powers.size(); ++j)
        CHECK(field.powers_w(j, last) == doctest::Approx(powers[j]).epsilon(1e-12));
    for (double v : field.powers_w.data()) CHECK(v >= 0.0);
}

TEST_CASE("uncoupled single pump decays exponentially") {
    PlantConfig cfg = single_pump_config(210.2);
    cfg.pump_pump_coupling = false;
    const double alpha_db = attenuation(210.2, cfg);
    const PumpField field = solve_pump_evolution(make_setting(cfg, {0.2}), cfg);
    for (std::size_t i = 0; i < field.z_m.size(); i += 100) {
        const double z_km = field.z_m[i] / 1000.0;
        const double expected = 0.2 * std::pow(10.0, -alpha_db * (50.0 - z_km) / 10.0);
        CHECK(field.powers_w(0, i) == doctest::Approx(expected).epsilon(1e-6));
    }
}

TEST_CASE("pump coupling transfers power downhill in frequency") {
    PlantConfig cfg = default_plant_config();
    cfg.pump_frequencies_thz = {210.2, 204.6};
    cfg.pump_p_max_w = {0.3, 0.3};
    const PumpSetting setting = make_setting(cfg, {0.2, 0.2});
    const PumpField coupled = solve_pump_evolution(setting, cfg);

    PlantConfig uncoupled_cfg = cfg;
    uncoupled_cfg.pump_pump_coupling = false;
    const PumpField uncoupled = solve_pump_evolution(setting, uncoupled_cfg);

    // Fine-grid oracle: same equations at a 0.1 m step agree with the
    // 10 m solve, confirming the integrator is converged.
    PlantConfig fine_cfg = cfg;
    fine_cfg.integration_step_m = 0.1;
    const PumpField fine = solve_pump_evolution(setting, fine_cfg);
    for (std::size_t i = 0; i < coupled.z_m.size(); i += 500) {
        const std::size_t fi = i * 100;
        CHECK(coupled.powers_w(0, i) == doctest::Approx(fine.powers_w(0, fi)).epsilon(1e-9));
        CHECK(coupled.powers_w(1, i) == doctest::Approx(fine.powers_w(1, fi)).epsilon(1e-9));
    }

    // Higher-frequency pump is depleted, lower-frequency pump enriched,
    // at every distance.
    for (std::size_t i = 0; i + 1 < coupled.z_m.size(); ++i) {
        CHECK(coupled.powers_w(0, i) <= uncoupled.powers_w(0, i) * (1 + 1e-12));
        CHECK(coupled.powers_w(1, i) >= uncoupled.powers_w(1, i) * (1 - 1e-12));
    }
}

TEST_CASE("photon-rate sum is conserved without attenuation") {
    PlantConfig cfg = default_plant_config();
    cfg.pump_frequencies_thz = {210.2, 204.6};
    cfg.pump_p_max_w = {0.3, 0.3};
    // Effectively lossless fiber; validation requires positive loss.
    cfg.attenuation_curve = {{191.8, 1e-12}, {211.1, 1e-12}};
    const PumpField field = solve_pump_evolution(make_setting(cfg, {0.25, 0.15}), cfg);
    const double f0 = 210.2, f1 = 204.6;
    const double start = field.powers_w(0, field.z_m.size() - 1) / f0 +
                         field.powers_w(1, field.z_m.size() - 1) / f1;
    for (std::size_t i = 0; i < field.z_m.size(); i += 50) {
        const double sum = field.powers_w(0, i) / f0 + field.powers_w(1, i) / f1;
        CHECK(sum == doctest::Approx(start).epsilon(1e-9));
    }
}

TEST_CASE("signal profile: zero pumps decay linearly in dB") {
    const PlantConfig cfg = default_plant_config();
    const FineSignal fine = solve_signal_profile(make_setting(cfg, {0, 0, 0, 0}), cfg);
    for (std::size_t i = 0; i < cfg.num_channels(); i += 7) {
        const double alpha = attenuation(cfg.channel_freqs_thz[i], cfg);
        for (std::size_t k = 0; k < fine.z_m.size(); k += 1000) {
            const double expected = cfg.probe_power_dbm - alpha * fine.z_m[k] / 1000.0;
            CHECK(fine.values_dbm(i, k) == doctest::Approx(expected).epsilon(1e-9));
        }
    }
}

TEST_CASE("signal profile: launch boundary condition") {
    const PlantConfig cfg = default_plant_config();
    const FineSignal fine = solve_signal_profile(make_setting(cfg, {0.2, 0.05, 0.15, 0.1}), cfg);
    for (std::size_t i = 0; i < cfg.num_channels(); ++i)
        CHECK(fine.values_dbm(i, 0) == doctest::Approx(-16.0).epsilon(1e-12));
}

TEST_CASE("undepleted single pump matches the closed-form on/off gain") {
    PlantConfig cfg = single_pump_config(204.6);
    cfg.pump_pump_coupling = false;
    const double p_inj = 0.25;
    const FineSignal pumped = solve_signal_profile(make_setting(cfg, {p_inj}), cfg);
    const FineSignal dark = solve_signal_profile(make_setting(cfg, {0.0}), cfg);
    const double alpha_p = db_per_km_to_linear(attenuation(204.6, cfg));
    const double l_eff = (1.0 - std::exp(-alpha_p * 50.0)) / alpha_p;
    const std::size_t last = pumped.z_m.size() - 1;
    for (std::size_t i = 0; i < cfg.num_channels(); ++i) {
        const double g = raman_gain(204.6 - cfg.channel_freqs_thz[i], 204.6, cfg);
        const double expected_db = (10.0 / kLn10) * g * p_inj * l_eff;
        const double onoff = pumped.values_dbm(i, last) - dark.values_dbm(i, last);
        CHECK(std::abs(onoff - expected_db) < 0.01);
        CHECK(std::abs(onoff - expected_db) < 1e-6);  // integrator is far tighter
    }
}

TEST_CASE("monotone gain in each pump") {
    const PlantConfig cfg = default_plant_config();
    const std::vector<double> base = {0.15, 0.15, 0.15, 0.15};
    const FineSignal ref = solve_signal_profile(make_setting(cfg, base), cfg);
    const std::size_t last = ref.z_m.size() - 1;
    for (std::size_t j = 0; j < 4; ++j) {
        std::vector<double> bumped = base;
        bumped[j] += 0.1;
        const FineSignal up = solve_signal_profile(make_setting(cfg, bumped), cfg);
        for (std::size_t i = 0; i < cfg.num_channels(); ++i)
            CHECK(up.values_dbm(i, last) >= ref.values_dbm(i, last) - 1e-9);
    }
}

TEST_CASE("channels are mutually independent") {
    PlantConfig cfg = default_plant_config();
    const PumpSetting setting = make_setting(cfg, {0.2, 0.1, 0.25, 0.05});
    const FineSignal full = solve_signal_profile(setting, cfg);

    PlantConfig sub_cfg = cfg;
    sub_cfg.channel_freqs_thz.assign(cfg.channel_freqs_thz.begin() + 10,
                                     cfg.channel_freqs_thz.begin() + 20);
    const PumpSetting sub_setting = make_setting(sub_cfg, {0.2, 0.1, 0.25, 0.05});
    const FineSignal sub = solve_signal_profile(sub_setting, sub_cfg);
    for (std::size_t i = 0; i < 10; ++i)
        for (std::size_t k = 0; k < full.z_m.size(); k += 500)
            CHECK(sub.values_dbm(i, k) == full.values_dbm(i + 10, k));
}

TEST_CASE("plant apply: zero pumps give the attenuation ramp on the coarse grid") {
    const Plant plant(default_plant_config(), default_pipeline_config());
    const PowerProfile2D profile = plant.apply_powers({0, 0, 0, 0});
    CHECK(profile.values.rows() == 44);
    CHECK(profile.values.cols() == 101);
    CHECK(profile.z_m.front() == 0.0);
    CHECK(profile.z_m.back() == 50000.0);
    for (std::size_t i = 0; i < profile.freq_thz.size(); i += 11) {
        const double alpha = attenuation(profile.freq_thz[i], plant.plant_config());
        for (std::size_t k = 0; k < profile.z_m.size(); k += 20) {
            const double expected = -16.0 - alpha * profile.z_m[k] / 1000.0;
            CHECK(profile.values(i, k) == doctest::Approx(expected).epsilon(1e-9));
        }
    }
}

TEST_CASE("plant apply is deterministic per seed") {
    const Plant plant(default_plant_config(), default_pipeline_config());
    const std::vector<double> powers = {0.12, 0.07, 0.22, 0.18};
    const PowerProfile2D a = plant.apply_powers(powers, 42);
    const PowerProfile2D b = plant.apply_powers(powers, 42);
    CHECK(a.values == b.values);
    const PowerProfile2D c = plant.apply_powers(powers, 43);
    CHECK(mae(a, c) > 0.0);
}

TEST_CASE("max pumps beat zero pumps in every channel at the far end") {
    const Plant plant(default_plant_config(), default_pipeline_config());
    const PowerProfile2D dark = plant.apply_powers({0, 0, 0, 0});
    const PowerProfile2D lit = plant.apply_powers({0.3, 0.3, 0.3, 0.3});
    const std::size_t last = dark.values.cols() - 1;
    for (std::size_t i = 0; i < dark.values.rows(); ++i)
        CHECK(lit.values(i, last) > dark.values(i, last));
}

TEST_CASE("plant config validation") {
    PlantConfig cfg = default_plant_config();
    cfg.integration_step_m = 7.0;  // does not divide 50 km
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = default_plant_config();
    cfg.channel_freqs_thz[5] = 193.0;  // breaks uniform spacing
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = default_plant_config();
    cfg.attenuation_curve[1].second = -0.1;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
