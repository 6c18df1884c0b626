#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "raman2d/config.hpp"
#include "raman2d/dataset.hpp"
#include "raman2d/plant.hpp"
#include "raman2d/profile.hpp"

namespace raman2d {

enum class Act { None, Relu, Logistic };

struct LayerSpec {
    enum class Kind { Input, Conv, MaxPool, Flatten, Dense } kind;
    int in_c = 0, in_h = 0, in_w = 0;
    int out_c = 0, out_h = 0, out_w = 0;
    int kernel = 0;  // conv kernel edge or pool edge
    Act act = Act::None;
    std::size_t weight_offset = 0;  // into the flat store
    std::size_t weight_count = 0;   // kernel weights + biases

    std::size_t out_size() const {
        return static_cast<std::size_t>(out_c) * out_h * out_w;
    }
};

// Layered CNN with a flat 64-bit weight store, input normalization
// statistics and the per-pump output scale. The logistic head keeps every
// output in [0, p_max] for any weights.
struct NetworkModel {
    std::vector<LayerSpec> layers;
    std::vector<double> weights;
    double input_mean = 0.0;
    double input_std = 1.0;
    std::vector<double> output_scale;  // p_max per pump, W

    std::string descriptor() const;
    std::size_t num_outputs() const { return layers.back().out_size(); }
};

// Default topology for a channels x distance profile input.
std::string default_descriptor(std::size_t channels, std::size_t z_points);

// Parses a descriptor, resolves shapes and seeds the weights.
NetworkModel make_network(const std::string& descriptor, std::vector<double> output_scale,
                          uint64_t seed);

// Inverse prediction: profile -> pump powers in watts, each in [0, p_max].
std::vector<double> forward(const NetworkModel& model, const PowerProfile2D& profile);

struct TrainHistory {
    std::vector<double> train_loss;  // per epoch, MSE on normalized powers
    std::vector<double> val_metric;  // per epoch
    int best_epoch = -1;
    double best_val = 0.0;
};

// Adam + early stopping on the validation metric; restores the best
// validation weights. Optionally caps the train split at train_size.
TrainHistory train(NetworkModel& model, const Dataset& ds, const TrainConfig& tc,
                   std::size_t train_size = 0);

// Max relative error between analytic and central finite-difference
// gradients over >= probes weights spanning every parameterized layer.
double grad_check(const NetworkModel& model, const Sample& sample, double epsilon_scale,
                  uint64_t seed, int probes = 200);

// Coefficient of determination per pump.
std::vector<double> r2_score(const std::vector<std::vector<double>>& predicted,
                             const std::vector<std::vector<double>>& truth);

struct EvalReport {
    std::vector<double> r2;                      // per pump
    std::vector<double> mae_list_db;             // per test sample
    double mu_db = 0.0;
    double sigma_db = 0.0;                       // population std of the list
    std::vector<std::vector<double>> predicted;  // W, per test sample
    std::vector<std::vector<double>> truth;      // W, per test sample
};

// R2 on the test split, then plant-verified profile MAE per test sample
// (noise seeded per sample when noisy).
EvalReport evaluate_model(const NetworkModel& model, const Dataset& ds, const Plant& plant,
                          uint64_t seed, bool noisy, int workers = 1);

// Checkpoint file, magic "RNN1"; load rejects architecture mismatches.
void save_checkpoint(const NetworkModel& model, const std::string& path);
NetworkModel load_checkpoint(const std::string& path);

}  // namespace raman2d
