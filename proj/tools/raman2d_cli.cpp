#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "raman2d/config.hpp"
#include "raman2d/experiment.hpp"

namespace {

struct GlobalOpts {
    std::string config_path;
    std::string scale = "desk";
    std::string out_dir = "out";
    uint64_t seed = 0;
    bool seed_set = false;
    bool noiseless = false;
    int workers = -1;
};

raman2d::ExperimentConfig resolve_config(const GlobalOpts& opts) {
    raman2d::ExperimentConfig cfg = raman2d::default_experiment_config();
    if (opts.scale == "paper")
        raman2d::apply_paper_scale(cfg);
    else if (opts.scale != "desk")
        throw std::invalid_argument("--scale must be desk or paper");
    if (!opts.config_path.empty())
        cfg = raman2d::from_ini(raman2d::IniDoc::parse_file(opts.config_path), cfg);
    if (opts.seed_set) cfg.master_seed = opts.seed;
    if (opts.noiseless) cfg.noisy = false;
    if (opts.workers >= 0) cfg.workers = opts.workers;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"2D Raman gain profile designer: simulated plant, CNN inverse model and "
                 "differential-evolution fine-tuning"};
    app.require_subcommand(1);

    GlobalOpts opts;
    app.add_option("--config", opts.config_path, "INI config overlaying the defaults")
        ->check(CLI::ExistingFile);
    app.add_option("--seed", opts.seed, "master seed")->each([&](const std::string&) {
        opts.seed_set = true;
    });
    app.add_option("--scale", opts.scale, "experiment scale: desk or paper");
    app.add_option("--out", opts.out_dir, "artifact directory");
    app.add_flag("--noiseless", opts.noiseless, "disable measurement noise everywhere");
    app.add_option("--workers", opts.workers, "worker threads (0 = all cores)");

    auto* cmd_default = app.add_subcommand("default-config", "print the default configuration");
    std::string default_out;
    cmd_default->add_option("--to", default_out, "write to a file instead of stdout");

    auto* cmd_gen = app.add_subcommand("gen-dataset", "probe the plant and write the dataset");
    auto* cmd_train = app.add_subcommand("train", "train the inverse model");
    std::size_t train_size = 0;
    std::vector<std::size_t> train_sizes;
    cmd_train->add_option("--train-size", train_size, "truncate the train split to N samples");
    cmd_train->add_option("--train-sizes", train_sizes,
                          "comma-separated sweep of train sizes")
        ->delimiter(',');
    auto* cmd_eval = app.add_subcommand("evaluate", "R2 scores and plant-verified MAE");
    auto* cmd_fine = app.add_subcommand("finetune", "differential evolution on the hard cases");
    auto* cmd_report = app.add_subcommand("report", "consolidated report bundle");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    try {
        raman2d::ExperimentConfig cfg = resolve_config(opts);
        raman2d::Paths paths;
        paths.out_dir = opts.out_dir;

        if (cmd_default->parsed()) {
            const raman2d::IniDoc doc = raman2d::to_ini(cfg);
            if (default_out.empty())
                std::cout << doc.serialize();
            else
                doc.write_file(default_out);
        } else if (cmd_gen->parsed()) {
            raman2d::cmd_gen_dataset(cfg, paths);
            std::cout << "dataset written to " << paths.dataset() << "\n";
        } else if (cmd_train->parsed()) {
            std::vector<std::size_t> sizes = train_sizes;
            if (sizes.empty() && train_size > 0) sizes.assign(1, train_size);
            raman2d::cmd_train(cfg, paths, sizes);
            std::cout << "checkpoint written to " << paths.checkpoint() << "\n";
        } else if (cmd_eval->parsed()) {
            raman2d::cmd_evaluate(cfg, paths);
            std::cout << "evaluation written to " << paths.eval_summary() << "\n";
        } else if (cmd_fine->parsed()) {
            raman2d::cmd_finetune(cfg, paths);
            std::cout << "fine-tune results written to " << paths.finetune_results() << "\n";
        } else if (cmd_report->parsed()) {
            raman2d::cmd_report(cfg, paths);
            std::cout << "report written to " << paths.report() << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
