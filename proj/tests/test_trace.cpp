#include <doctest.h>

#include <cmath>
#include <vector>

#include "raman2d/errors.hpp"
#include "raman2d/rng.hpp"
#include "raman2d/trace.hpp"

using namespace raman2d;

namespace {

// Uniform fine grid helper.
std::vector<double> make_grid(double step, double span) {
    std::vector<double> z;
    for (double v = 0.0; v <= span + 1e-9; v += step) z.push_back(v);
    return z;
}

// Independent ordinary-least-squares quadratic fit evaluated at the window
// center, used as the oracle for the interior of the filter.
double quadratic_fit_center(const std::vector<double>& y, std::size_t lo, int window) {
    const int m = (window - 1) / 2;
    double s0 = 0, s1 = 0, s2 = 0, s3 = 0, s4 = 0;
    double b0 = 0, b1 = 0, b2 = 0;
    for (int k = 0; k < window; ++k) {
        const double t = k - m;
        const double v = y[lo + k];
        s0 += 1;
        s1 += t;
        s2 += t * t;
        s3 += t * t * t;
        s4 += t * t * t * t;
        b0 += v;
        b1 += t * v;
        b2 += t * t * v;
    }
    // Solve the 3x3 normal equations by Cramer's rule.
    const double det = s0 * (s2 * s4 - s3 * s3) - s1 * (s1 * s4 - s3 * s2) +
                       s2 * (s1 * s3 - s2 * s2);
    const double det0 = b0 * (s2 * s4 - s3 * s3) - s1 * (b1 * s4 - s3 * b2) +
                        s2 * (b1 * s3 - s2 * b2);
    return det0 / det;  // constant term = value at t = 0
}

}  // namespace

TEST_CASE("savgol preserves polynomials up to its order, including edges") {
    std::vector<double> series(200);
    for (std::size_t k = 0; k < series.size(); ++k)
        series[k] = 3.0 + 2.0 * k + 0.5 * static_cast<double>(k) * k;
    const auto smooth = savgol_smooth(series, 19, 2);
    REQUIRE(smooth.size() == series.size());
    for (std::size_t k = 0; k < series.size(); ++k)
        CHECK(smooth[k] == doctest::Approx(series[k]).epsilon(1e-9));

    // Constant series pass through untouched.
    std::vector<double> flat(64, -21.5);
    const auto fs = savgol_smooth(flat, 19, 2);
    for (double v : fs) CHECK(v == doctest::Approx(-21.5).epsilon(1e-12));
}

TEST_CASE("savgol equals the per-window least-squares fit at interior points") {
    Rng rng(99);
    std::vector<double> series(120);
    for (double& v : series) v = rng.uniform(-5.0, 5.0);
    const int window = 19, order = 2, m = 9;
    const auto smooth = savgol_smooth(series, window, order);
    for (std::size_t i = m; i + m < series.size(); ++i) {
        const double oracle = quadratic_fit_center(series, i - m, window);
        CHECK(smooth[i] == doctest::Approx(oracle).epsilon(1e-9));
    }
}

TEST_CASE("savgol is linear") {
    Rng rng(5);
    std::vector<double> x(80), y(80);
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = rng.gaussian();
        y[i] = rng.gaussian();
    }
    const double a = 1.7, b = -0.3;
    std::vector<double> combo(80);
    for (std::size_t i = 0; i < x.size(); ++i) combo[i] = a * x[i] + b * y[i];
    const auto sx = savgol_smooth(x, 19, 2);
    const auto sy = savgol_smooth(y, 19, 2);
    const auto sc = savgol_smooth(combo, 19, 2);
    for (std::size_t i = 0; i < x.size(); ++i)
        CHECK(sc[i] == doctest::Approx(a * sx[i] + b * sy[i]).epsilon(1e-12));
}

TEST_CASE("savgol argument checks") {
    std::vector<double> series(30, 1.0);
    CHECK_THROWS_AS(savgol_smooth(series, 18, 2), std::invalid_argument);  // even window
    CHECK_THROWS_AS(savgol_smooth(series, 5, 5), std::invalid_argument);   // order >= window
    CHECK_THROWS_AS(savgol_smooth(std::vector<double>(10, 0.0), 19, 2), std::invalid_argument);
}

TEST_CASE("emulate_traces: identity on a matching noiseless grid") {
    PipelineConfig cfg;
    const auto z = make_grid(8.2, 8.2 * 700);
    Matrix fine(3, z.size());
    Rng rng(7);
    for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t k = 0; k < z.size(); ++k) fine(c, k) = -16.0 + rng.gaussian();
    const TraceSet traces = emulate_traces(fine, z, cfg, std::nullopt);
    REQUIRE(traces.num_points() == z.size());
    for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t k = 0; k < z.size(); ++k)
            CHECK(traces.values_dbm(c, k) == doctest::Approx(fine(c, k)).epsilon(1e-12));
}

TEST_CASE("emulate_traces rejects overly coarse grids") {
    PipelineConfig cfg;
    const auto z = make_grid(20.0, 50000.0);
    Matrix fine(1, z.size(), -16.0);
    CHECK_THROWS_AS(emulate_traces(fine, z, cfg, std::nullopt), ResolutionError);
}

TEST_CASE("emulate_traces noise magnitude follows the configured law") {
    PipelineConfig cfg;
    // sigma(0) = 0.05, sigma(50 km) = 0.25 under the defaults.
    CHECK(cfg.noise_sigma0_db == doctest::Approx(0.05));
    CHECK(cfg.noise_sigma0_db + cfg.noise_slope_db_per_km * 50.0 == doctest::Approx(0.25));

    // 10000 channels sampled at z = 0: empirical sigma within 5%.
    const auto z = make_grid(8.2, 8.2 * 3);
    Matrix fine(10000, z.size(), -16.0);
    const TraceSet traces = emulate_traces(fine, z, cfg, 12345);
    double var = 0.0;
    for (std::size_t c = 0; c < fine.rows(); ++c) {
        const double d = traces.values_dbm(c, 0) + 16.0;
        var += d * d;
    }
    const double sigma = std::sqrt(var / fine.rows());
    CHECK(sigma > 0.95 * 0.05);
    CHECK(sigma < 1.05 * 0.05);
}

TEST_CASE("emulate_traces noise is seed-deterministic") {
    PipelineConfig cfg;
    const auto z = make_grid(8.2, 8200.0);
    Matrix fine(4, z.size(), -20.0);
    const TraceSet a = emulate_traces(fine, z, cfg, 77);
    const TraceSet b = emulate_traces(fine, z, cfg, 77);
    CHECK(a.values_dbm == b.values_dbm);
    const TraceSet c = emulate_traces(fine, z, cfg, 78);
    CHECK(!(a.values_dbm == c.values_dbm));
}

TEST_CASE("downsample: exact on linear traces, 101 columns for 50 km") {
    TraceSet traces;
    traces.resolution_m = 8.2;
    traces.span_m = 50000.0;
    const std::size_t npts = static_cast<std::size_t>(std::floor(50000.0 / 8.2)) + 1;
    traces.values_dbm = Matrix(2, npts);
    const double slope = -0.0002, offset = -16.0;
    for (std::size_t k = 0; k < npts; ++k) {
        traces.values_dbm(0, k) = offset + slope * (8.2 * k);
        traces.values_dbm(1, k) = 1.0 + 0.5 * slope * (8.2 * k);
    }
    const Matrix out = downsample(traces, 500.0);
    REQUIRE(out.cols() == 101);
    for (std::size_t i = 0; i < 101; ++i) {
        CHECK(out(0, i) == doctest::Approx(offset + slope * (500.0 * i)).epsilon(1e-9));
        CHECK(out(1, i) == doctest::Approx(1.0 + 0.5 * slope * (500.0 * i)).epsilon(1e-9));
    }
}

TEST_CASE("downsample interpolation error obeys the curvature bound") {
    TraceSet traces;
    traces.resolution_m = 8.2;
    traces.span_m = 50000.0;
    const std::size_t npts = static_cast<std::size_t>(std::floor(50000.0 / 8.2)) + 1;
    traces.values_dbm = Matrix(1, npts);
    const double curvature = 3e-9;  // d2y/dz2, 1/m^2 scale
    auto quad = [&](double zm) { return -16.0 + 1e-4 * zm - 0.5 * curvature * zm * zm; };
    for (std::size_t k = 0; k < npts; ++k) traces.values_dbm(0, k) = quad(8.2 * k);
    const Matrix out = downsample(traces, 500.0);
    // Interior points: |err| <= curvature * h^2 / 8. The final point sits
    // past the last sample and is linearly extrapolated over d = span -
    // last_sample, giving |err| <= curvature * (h + d) * d / 2.
    const double h = 8.2;
    const double interior_bound = curvature * h * h / 8.0;
    const double d = 50000.0 - 8.2 * (npts - 1);
    const double tail_bound = curvature * (h + d) * d / 2.0;
    // A pure quadratic attains the bounds exactly, so allow rounding slack.
    for (std::size_t i = 0; i < 100; ++i)
        CHECK(std::abs(out(0, i) - quad(500.0 * i)) <= interior_bound * (1 + 1e-9) + 1e-12);
    CHECK(std::abs(out(0, 100) - quad(50000.0)) <= tail_bound * (1 + 1e-9) + 1e-12);
}

TEST_CASE("measure: noiseless linear input passes through to the coarse grid") {
    PlantConfig plant = default_plant_config();
    PipelineConfig cfg;
    const auto z = make_grid(10.0, 50000.0);
    Matrix fine(44, z.size());
    for (std::size_t c = 0; c < 44; ++c)
        for (std::size_t k = 0; k < z.size(); ++k)
            fine(c, k) = -16.0 - (0.19 + 0.001 * c) * z[k] / 1000.0;
    const PowerProfile2D profile = measure(fine, z, plant.channel_freqs_thz, cfg, std::nullopt);
    REQUIRE(profile.values.rows() == 44);
    REQUIRE(profile.values.cols() == 101);
    CHECK(profile.z_m.back() == doctest::Approx(50000.0));
    for (std::size_t c = 0; c < 44; c += 9)
        for (std::size_t i = 0; i < 101; i += 10) {
            const double expected = -16.0 - (0.19 + 0.001 * c) * (500.0 * i) / 1000.0;
            CHECK(profile.values(c, i) == doctest::Approx(expected).epsilon(1e-9));
        }
}

TEST_CASE("measure is deterministic and noise stays below the raw sigma envelope") {
    PlantConfig plant = default_plant_config();
    PipelineConfig cfg;
    const auto z = make_grid(10.0, 50000.0);
    Matrix fine(44, z.size());
    for (std::size_t c = 0; c < 44; ++c)
        for (std::size_t k = 0; k < z.size(); ++k) fine(c, k) = -16.0 - 0.0002 * z[k];
    const PowerProfile2D noisy1 = measure(fine, z, plant.channel_freqs_thz, cfg, 9001);
    const PowerProfile2D noisy2 = measure(fine, z, plant.channel_freqs_thz, cfg, 9001);
    CHECK(noisy1.values == noisy2.values);

    const PowerProfile2D clean = measure(fine, z, plant.channel_freqs_thz, cfg, std::nullopt);
    std::size_t below_02 = 0;
    std::size_t total = 0;
    for (std::size_t c = 0; c < 44; ++c)
        for (std::size_t i = 0; i < 101; ++i) {
            const double delta = std::abs(noisy1.values(c, i) - clean.values(c, i));
            ++total;
            if (delta < 0.2) ++below_02;
        }
    // Smoothing gain of SG(19,2) keeps 99% of cells within 0.2 dB.
    CHECK(static_cast<double>(below_02) / static_cast<double>(total) >= 0.99);
}

TEST_CASE("mae semantics") {
    PowerProfile2D a;
    a.freq_thz = {191.8, 191.9};
    a.z_m = {0.0, 500.0, 1000.0};
    a.values = Matrix(2, 3, -16.0);
    PowerProfile2D b = a;
    CHECK(mae(a, b) == 0.0);
    for (double& v : b.values.data()) v += 0.3;
    CHECK(mae(a, b) == doctest::Approx(0.3).epsilon(1e-12));
    b = a;
    b.values(1, 2) += 1.7;
    CHECK(mae(a, b) == doctest::Approx(1.7).epsilon(1e-12));
    PowerProfile2D c = a;
    c.z_m = {0.0, 400.0, 800.0};
    CHECK_THROWS_AS(mae(a, c), ShapeError);
}

TEST_CASE("mae is a metric over random profiles") {
    Rng rng(314);
    auto random_profile = [&]() {
        PowerProfile2D p;
        p.freq_thz = {191.8, 191.9, 192.0};
        p.z_m = {0.0, 500.0};
        p.values = Matrix(3, 2);
        for (double& v : p.values.data()) v = rng.uniform(-30.0, -10.0);
        return p;
    };
    for (int trial = 0; trial < 50; ++trial) {
        const PowerProfile2D x = random_profile();
        const PowerProfile2D y = random_profile();
        const PowerProfile2D z = random_profile();
        CHECK(mae(x, y) == doctest::Approx(mae(y, x)).epsilon(1e-15));
        CHECK(mae(x, x) == 0.0);
        CHECK(mae(x, z) <= mae(x, y) + mae(y, z) + 1e-12);
    }
}
