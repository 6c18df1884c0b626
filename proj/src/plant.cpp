#include "raman2d/plant.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "raman2d/errors.hpp"
#include "raman2d/trace.hpp"

namespace raman2d {

void PumpSetting::validate() const {
    if (powers_w.size() != frequencies_thz.size() || powers_w.size() != p_max_w.size())
        throw std::invalid_argument("pump setting: field sizes do not match");
    if (powers_w.empty()) throw std::invalid_argument("pump setting: no pumps");
    for (std::size_t j = 0; j < powers_w.size(); ++j) {
        if (!(powers_w[j] >= 0.0 && powers_w[j] <= p_max_w[j] + 1e-12))
            throw std::invalid_argument("pump setting: power " + std::to_string(j) +
                                        " outside [0, p_max]");
        if (frequencies_thz[j] < 203.9 - 1e-9 || frequencies_thz[j] > 211.1 + 1e-9)
            throw std::invalid_argument("pump setting: frequency outside [203.9, 211.1] THz");
    }
    const bool ascending = frequencies_thz.size() < 2 || frequencies_thz[1] > frequencies_thz[0];
    for (std::size_t j = 1; j < frequencies_thz.size(); ++j) {
        const bool ok = ascending ? frequencies_thz[j] > frequencies_thz[j - 1]
                                  : frequencies_thz[j] < frequencies_thz[j - 1];
        if (!ok) throw std::invalid_argument("pump setting: frequencies must be strictly monotonic");
    }
}

PumpSetting make_setting(const PlantConfig& cfg, const std::vector<double>& powers_w) {
    PumpSetting s;
    s.powers_w = powers_w;
    s.frequencies_thz = cfg.pump_frequencies_thz;
    s.p_max_w = cfg.pump_p_max_w;
    s.validate();
    return s;
}

double raman_gain(double delta_f_thz, double pump_freq_thz, const PlantConfig& cfg) {
    if (delta_f_thz <= 0.0 || delta_f_thz >= cfg.raman_cutoff_shift_thz) return 0.0;
    double reference = cfg.pump_frequencies_thz.empty() ? pump_freq_thz : cfg.pump_frequencies_thz[0];
    for (double f : cfg.pump_frequencies_thz) reference = std::max(reference, f);
    const double peak = cfg.raman_peak_gain * (pump_freq_thz / reference);
    if (delta_f_thz <= cfg.raman_peak_shift_thz)
        return peak * delta_f_thz / cfg.raman_peak_shift_thz;
    return peak * (cfg.raman_cutoff_shift_thz - delta_f_thz) /
           (cfg.raman_cutoff_shift_thz - cfg.raman_peak_shift_thz);
}

double attenuation(double freq_thz, const PlantConfig& cfg) {
    const auto& curve = cfg.attenuation_curve;
    if (curve.size() < 2 || freq_thz < curve.front().first - 1e-9 ||
        freq_thz > curve.back().first + 1e-9)
        throw DomainError("attenuation: frequency " + std::to_string(freq_thz) +
                          " THz outside curve domain [" + std::to_string(curve.front().first) +
                          ", " + std::to_string(curve.back().first) + "]");
    std::size_t hi = 1;
    while (hi + 1 < curve.size() && curve[hi].first < freq_thz) ++hi;
    const auto& [f0, a0] = curve[hi - 1];
    const auto& [f1, a1] = curve[hi];
    const double t = (freq_thz - f0) / (f1 - f0);
    return a0 + t * (a1 - a0);
}

PumpField solve_pump_evolution(const PumpSetting& setting, const PlantConfig& cfg) {
    setting.validate();
    cfg.validate();
    const std::size_t np = setting.powers_w.size();
    const std::size_t steps = cfg.num_steps();
    const double h = cfg.integration_step_m;
    const double span = cfg.fiber_length_km * 1000.0;

    // Per-meter loss and pairwise coupling coefficients.
    std::vector<double> alpha(np);
    for (std::size_t j = 0; j < np; ++j)
        alpha[j] = db_per_km_to_linear(attenuation(setting.frequencies_thz[j], cfg)) / 1000.0;
    Matrix coupling(np, np, 0.0);
    if (cfg.pump_pump_coupling) {
        for (std::size_t j = 0; j < np; ++j) {
            for (std::size_t k = 0; k < np; ++k) {
                if (j == k) continue;
                const double fj = setting.frequencies_thz[j];
                const double fk = setting.frequencies_thz[k];
                if (fk > fj) {
                    coupling(j, k) = raman_gain(fk - fj, fk, cfg) / 1000.0;
                } else {
                    const double ratio = cfg.frequency_ratio_depletion ? fj / fk : 1.0;
                    coupling(j, k) = -ratio * raman_gain(fj - fk, fj, cfg) / 1000.0;
                }
            }
        }
    }

    auto deriv = [&](const std::vector<double>& p, std::vector<double>& dp) {
        for (std::size_t j = 0; j < np; ++j) {
            double rate = -alpha[j];
            for (std::size_t k = 0; k < np; ++k) rate += coupling(j, k) * p[k];
            dp[j] = rate * p[j];
        }
    };

    PumpField field;
    field.z_m.resize(steps + 1);
    for (std::size_t i = 0; i <= steps; ++i) field.z_m[i] = static_cast<double>(i) * h;
    field.powers_w = Matrix(np, steps + 1);

    // Integrate in u = span - z from the injection end (z = span, u = 0).
    std::vector<double> state = setting.powers_w;
    std::vector<double> k1(np), k2(np), k3(np), k4(np), tmp(np);
    auto store = [&](std::size_t iu) {
        const std::size_t iz = steps - iu;
        for (std::size_t j = 0; j < np; ++j) field.powers_w(j, iz) = state[j];
    };
    store(0);
    for (std::size_t i = 0; i < steps; ++i) {
        deriv(state, k1);
        for (std::size_t j = 0; j < np; ++j) tmp[j] = state[j] + 0.5 * h * k1[j];
        deriv(tmp, k2);
        for (std::size_t j = 0; j < np; ++j) tmp[j] = state[j] + 0.5 * h * k2[j];
        deriv(tmp, k3);
        for (std::size_t j = 0; j < np; ++j) tmp[j] = state[j] + h * k3[j];
        deriv(tmp, k4);
        for (std::size_t j = 0; j < np; ++j) {
            state[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            if (state[j] < 0.0 && state[j] > -1e-18) state[j] = 0.0;  // RK4 round-off at zero
            if (!std::isfinite(state[j]))
                throw NumericError("pump integration blew up at step " + std::to_string(i + 1) +
                                   " (u = " + std::to_string((i + 1) * h) + " m)");
        }
        store(i + 1);
    }
    (void)span;
    return field;
}

FineSignal solve_signal_profile(const PumpSetting& setting, const PlantConfig& cfg) {
    const PumpField field = solve_pump_evolution(setting, cfg);
    const std::size_t np = setting.powers_w.size();
    const std::size_t nc = cfg.num_channels();
    const std::size_t steps = cfg.num_steps();
    const double h = cfg.integration_step_m;
    const double probe_w = dbm_to_w(cfg.probe_power_dbm);

    FineSignal out;
    out.z_m = field.z_m;
    out.values_dbm = Matrix(nc, steps + 1);

    // Gain picked up by channel i from pump j, per W per m.
    Matrix gain(nc, np);
    std::vector<double> alpha(nc);
    for (std::size_t i = 0; i < nc; ++i) {
        const double fi = cfg.channel_freqs_thz[i];
        alpha[i] = db_per_km_to_linear(attenuation(fi, cfg)) / 1000.0;
        for (std::size_t j = 0; j < np; ++j)
            gain(i, j) = raman_gain(setting.frequencies_thz[j] - fi, setting.frequencies_thz[j], cfg) / 1000.0;
    }

    for (std::size_t i = 0; i < nc; ++i) {
        // Net growth rate at the nodes and midpoints; midpoint pump powers
        // by linear interpolation.
        double p = probe_w;
        out.values_dbm(i, 0) = w_to_dbm(p);
        const double* g = gain.row(i);
        const double a = alpha[i];
        for (std::size_t k = 0; k < steps; ++k) {
            double s0 = 0.0, s1 = 0.0;
            for (std::size_t j = 0; j < np; ++j) {
                const double p0 = field.powers_w(j, k);
                const double p1 = field.powers_w(j, k + 1);
                s0 += g[j] * p0;
                s1 += g[j] * p1;
            }
            const double g0 = -a + s0;
            const double gh = -a + 0.5 * (s0 + s1);
            const double g1 = -a + s1;
            const double k1 = g0 * p;
            const double k2 = gh * (p + 0.5 * h * k1);
            const double k3 = gh * (p + 0.5 * h * k2);
            const double k4 = g1 * (p + h * k3);
            p += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            if (!std::isfinite(p) || p <= 0.0)
                throw NumericError("signal integration blew up at step " + std::to_string(k + 1) +
                                   " for channel " + std::to_string(i));
            out.values_dbm(i, k + 1) = w_to_dbm(p);
        }
    }
    return out;
}

Plant::Plant(PlantConfig plant_cfg, PipelineConfig pipeline_cfg)
    : plant_(std::move(plant_cfg)), pipeline_(std::move(pipeline_cfg)) {
    plant_.validate();
    pipeline_.validate();
}

PowerProfile2D Plant::apply(const PumpSetting& setting, std::optional<uint64_t> noise_seed) const {
    const FineSignal fine = solve_signal_profile(setting, plant_);
    return measure(fine.values_dbm, fine.z_m, plant_.channel_freqs_thz, pipeline_, noise_seed);
}

PowerProfile2D Plant::apply_powers(const std::vector<double>& powers_w,
                                   std::optional<uint64_t> noise_seed) const {
    return apply(make_setting(plant_, powers_w), noise_seed);
}

}  // namespace raman2d
