#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "raman2d/dataset.hpp"
#include "raman2d/errors.hpp"

using namespace raman2d;

namespace {

// Small plant so dataset tests stay fast: short span, few channels.
Plant small_plant() {
    PlantConfig plant = default_plant_config();
    plant.fiber_length_km = 5.0;
    plant.channel_freqs_thz.assign(plant.channel_freqs_thz.begin(),
                                   plant.channel_freqs_thz.begin() + 6);
    PipelineConfig pipeline;
    return Plant(plant, pipeline);
}

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name)
        : path((std::filesystem::temp_directory_path() / name).string()) {}
    ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("sample_pumps stays in bounds with the right mean") {
    const std::vector<double> p_max = {0.3, 0.3, 0.3, 0.3};
    Rng rng(2024);
    const std::size_t n = 100000;
    std::vector<double> mean(4, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto p = sample_pumps(p_max, rng);
        for (std::size_t j = 0; j < 4; ++j) {
            REQUIRE(p[j] >= 0.0);
            REQUIRE(p[j] <= 0.3);
            mean[j] += p[j];
        }
    }
    // Uniform mean p_max/2 within 3 sigma / sqrt(n).
    const double tol = 3.0 * (0.3 / std::sqrt(12.0)) / std::sqrt(static_cast<double>(n));
    for (std::size_t j = 0; j < 4; ++j)
        CHECK(std::abs(mean[j] / static_cast<double>(n) - 0.15) < tol);

    Rng a(55), b(55);
    CHECK(sample_pumps(p_max, a) == sample_pumps(p_max, b));
}

TEST_CASE("child seeds are pairwise distinct") {
    std::set<uint64_t> seen;
    for (uint64_t i = 0; i < 200000; ++i) seen.insert(child_seed(123456789, i));
    CHECK(seen.size() == 200000);
}

TEST_CASE("generate is worker-count independent") {
    const Plant plant = small_plant();
    const Dataset a = generate(24, 777, plant, true, 1);
    const Dataset b = generate(24, 777, plant, true, 8);
    REQUIRE(a.size() == 24);
    REQUIRE(b.size() == 24);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a.samples[i].powers_w == b.samples[i].powers_w);
        CHECK(a.samples[i].profile.values == b.samples[i].profile.values);
    }
    CHECK(a.provenance == b.provenance);
}

TEST_CASE("generate with forced zero pumps reproduces the plant ramp") {
    const Plant plant = small_plant();
    Dataset ds = generate(1, 42, plant, false, 1);
    ds.samples[0].powers_w = {0, 0, 0, 0};
    const PowerProfile2D expected = plant.apply_powers({0, 0, 0, 0});
    const PowerProfile2D actual = plant.apply_powers(ds.samples[0].powers_w);
    CHECK(mae(expected, actual) == 0.0);
}

TEST_CASE("label/feature consistency within the noise envelope") {
    const Plant plant = small_plant();
    const Dataset ds = generate(6, 31337, plant, true, 2);
    const PipelineConfig& pcfg = plant.pipeline_config();
    for (const Sample& s : ds.samples) {
        const PowerProfile2D clean = plant.apply_powers(s.powers_w);
        REQUIRE(clean.same_grids(s.profile));
        for (std::size_t c = 0; c < clean.values.rows(); ++c)
            for (std::size_t k = 0; k < clean.values.cols(); ++k) {
                const double sigma =
                    pcfg.noise_sigma0_db + pcfg.noise_slope_db_per_km * clean.z_m[k] / 1000.0;
                CHECK(std::abs(clean.values(c, k) - s.profile.values(c, k)) <= 3.0 * sigma);
            }
    }
}

TEST_CASE("split is seeded, disjoint and exact") {
    const Plant plant = small_plant();
    Dataset ds = generate(49, 99, plant, false, 2);
    split_dataset(ds, 41, 5, 3, 4242);
    CHECK(ds.train_idx.size() == 41);
    CHECK(ds.test_idx.size() == 5);
    CHECK(ds.val_idx.size() == 3);
    std::set<uint32_t> all;
    for (auto i : ds.train_idx) all.insert(i);
    for (auto i : ds.test_idx) all.insert(i);
    for (auto i : ds.val_idx) all.insert(i);
    CHECK(all.size() == 49);

    Dataset ds2 = ds;
    split_dataset(ds2, 41, 5, 3, 4242);
    CHECK(ds2.train_idx == ds.train_idx);
    CHECK(ds2.test_idx == ds.test_idx);
    CHECK(ds2.val_idx == ds.val_idx);

    // Truncating the train subset leaves test/val untouched.
    Dataset ds3 = ds;
    ds3.train_idx.resize(30);
    CHECK(ds3.test_idx == ds.test_idx);
    CHECK(ds3.val_idx == ds.val_idx);

    CHECK_THROWS_AS(split_dataset(ds, 45, 5, 3, 1), std::invalid_argument);
}

TEST_CASE("dataset file round trip is bit exact") {
    const Plant plant = small_plant();
    Dataset ds = generate(10, 2718, plant, true, 2);
    split_dataset(ds, 6, 2, 2, 5);
    TempFile file("raman2d_test_dataset.rds");
    save_dataset(ds, file.path);
    const Dataset back = load_dataset(file.path);
    CHECK(back.master_seed == ds.master_seed);
    CHECK(back.provenance == ds.provenance);
    CHECK(back.train_idx == ds.train_idx);
    CHECK(back.test_idx == ds.test_idx);
    CHECK(back.val_idx == ds.val_idx);
    REQUIRE(back.size() == ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        CHECK(back.samples[i].powers_w == ds.samples[i].powers_w);
        CHECK(back.samples[i].profile.values == ds.samples[i].profile.values);
        CHECK(back.samples[i].profile.freq_thz == ds.samples[i].profile.freq_thz);
        CHECK(back.samples[i].profile.z_m == ds.samples[i].profile.z_m);
    }
}

TEST_CASE("dataset file size follows the format arithmetic") {
    const Plant plant = small_plant();
    Dataset ds = generate(10, 1, plant, false, 2);
    split_dataset(ds, 6, 2, 2, 5);
    TempFile file("raman2d_test_dataset_size.rds");
    save_dataset(ds, file.path);
    const std::size_t nc = ds.samples[0].profile.freq_thz.size();
    const std::size_t nz = ds.samples[0].profile.z_m.size();
    const std::size_t header = 4 + 2 + 4 + ds.provenance.size() + 8 + 4 + 3 * 2 +
                               (nc + nz) * 8 + 3 * 4 + (6 + 2 + 2) * 4;
    const std::size_t body = 10 * (4 + nc * nz) * 8;
    CHECK(std::filesystem::file_size(file.path) == header + body);
}

TEST_CASE("dataset load rejects bad files") {
    TempFile file("raman2d_test_dataset_bad.rds");
    {
        std::ofstream out(file.path, std::ios::binary);
        out << "NOPE this is not a dataset";
    }
    CHECK_THROWS_AS(load_dataset(file.path), FormatError);

    const Plant plant = small_plant();
    Dataset ds = generate(4, 9, plant, false, 1);
    split_dataset(ds, 2, 1, 1, 5);
    TempFile trunc("raman2d_test_dataset_trunc.rds");
    save_dataset(ds, trunc.path);
    const auto size = std::filesystem::file_size(trunc.path);
    std::filesystem::resize_file(trunc.path, size - 64);
    CHECK_THROWS_AS(load_dataset(trunc.path), CorruptionError);
}
