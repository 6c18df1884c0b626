#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "raman2d/plant.hpp"
#include "raman2d/profile.hpp"
#include "raman2d/rng.hpp"

namespace raman2d {

struct Sample {
    std::vector<double> powers_w;
    PowerProfile2D profile;
};

// Supervised set of (pump powers -> measured 2D profile) pairs with split
// indices and the config snapshot they were generated from.
struct Dataset {
    std::vector<Sample> samples;
    uint64_t master_seed = 0;
    std::vector<uint32_t> train_idx;
    std::vector<uint32_t> test_idx;
    std::vector<uint32_t> val_idx;
    std::string provenance;  // INI snapshot of plant + pipeline configs

    std::size_t size() const { return samples.size(); }
};

// One pump-power draw: independent uniform per pump on [0, p_max].
std::vector<double> sample_pumps(const std::vector<double>& p_max_w, Rng& rng);

// Probes the plant with n random pump settings. Sample i derives its seeds
// from child_seed(master_seed, i), so the result is independent of worker
// count and evaluation order.
Dataset generate(std::size_t n, uint64_t master_seed, const Plant& plant, bool noisy,
                 int workers = 1);

// Seeded permutation followed by contiguous train / test / val assignment.
void split_dataset(Dataset& ds, std::size_t n_train, std::size_t n_test, std::size_t n_val,
                   uint64_t seed);

// Single binary file, magic "RDS1". Round trip is bit-exact.
void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

}  // namespace raman2d
