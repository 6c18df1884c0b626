#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "raman2d/config.hpp"
#include "raman2d/dataset.hpp"
#include "raman2d/evolve.hpp"
#include "raman2d/network.hpp"

namespace raman2d {

// Artifact locations for one experiment directory.
struct Paths {
    std::string out_dir = "out";

    std::string config() const { return out_dir + "/config.ini"; }
    std::string dataset() const { return out_dir + "/dataset.rds"; }
    std::string checkpoint() const { return out_dir + "/checkpoint.rnn"; }
    std::string history() const { return out_dir + "/history.csv"; }
    std::string history_for(std::size_t size) const {
        return out_dir + "/history_" + std::to_string(size) + ".csv";
    }
    std::string sweep_summary() const { return out_dir + "/sweep_summary.csv"; }
    std::string eval_r2() const { return out_dir + "/eval_r2.csv"; }
    std::string eval_predictions() const { return out_dir + "/eval_predictions.csv"; }
    std::string eval_hist() const { return out_dir + "/eval_hist.csv"; }
    std::string eval_summary() const { return out_dir + "/eval_summary.json"; }
    std::string hard_cases() const { return out_dir + "/hard_cases.csv"; }
    std::string finetune_results() const { return out_dir + "/finetune_results.csv"; }
    std::string finetune_runs() const { return out_dir + "/finetune_runs.json"; }
    std::string case_target(int id) const {
        return out_dir + "/case_" + std::to_string(id) + "_target.csv";
    }
    std::string case_achieved(int id) const {
        return out_dir + "/case_" + std::to_string(id) + "_achieved.csv";
    }
    std::string de_log(int id, const std::string& mode) const {
        return out_dir + "/de_case_" + std::to_string(id) + "_" + mode + ".log";
    }
    std::string report() const { return out_dir + "/report.json"; }
};

// Module seeds derived from the master seed; one tag per consumer.
struct SeedChain {
    uint64_t dataset;
    uint64_t split;
    uint64_t network_init;
    uint64_t train;
    uint64_t evaluate;
    uint64_t finetune;
};
SeedChain derive_seeds(uint64_t master_seed);

int effective_workers(const ExperimentConfig& cfg);

void cmd_gen_dataset(const ExperimentConfig& cfg, const Paths& paths);
// Empty sizes trains once on the full train split; otherwise one run per
// size, keeping the checkpoint with the best validation metric.
void cmd_train(const ExperimentConfig& cfg, const Paths& paths,
               const std::vector<std::size_t>& train_sizes = {});
void cmd_evaluate(const ExperimentConfig& cfg, const Paths& paths);
void cmd_finetune(const ExperimentConfig& cfg, const Paths& paths);
void cmd_report(const ExperimentConfig& cfg, const Paths& paths);

// 64-bit FNV-1a of a file's bytes, as fixed-width hex.
std::string file_fnv64(const std::string& path);

// Schema check for a report bundle; throws FormatError on violations.
void validate_report_json(const std::string& json_text);

}  // namespace raman2d
