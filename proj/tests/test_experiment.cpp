#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "raman2d/errors.hpp"
#include "raman2d/experiment.hpp"
#include "raman2d/profile.hpp"

using namespace raman2d;

namespace {

// Desk-scale physics on a reduced channel plan so the whole command chain
// runs in a couple of seconds.
ExperimentConfig tiny_config() {
    ExperimentConfig cfg = default_experiment_config();
    cfg.plant.channel_freqs_thz.resize(12);
    cfg.master_seed = 20240101;
    cfg.n_samples = 16;
    cfg.n_train = 10;
    cfg.n_test = 4;
    cfg.n_val = 2;
    cfg.train.max_epochs = 3;
    cfg.train.patience = 2;
    cfg.de.population_size = 6;
    cfg.de.max_iterations = 2;
    cfg.hard_case_limit = 1;
    cfg.workers = 2;
    return cfg;
}

struct TempDir {
    std::filesystem::path dir;
    explicit TempDir(const std::string& name)
        : dir(std::filesystem::temp_directory_path() / name) {
        std::filesystem::remove_all(dir);
        std::filesystem::create_directories(dir);
    }
    ~TempDir() { std::filesystem::remove_all(dir); }
    std::string str() const { return dir.string(); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

PowerProfile2D demo_profile() {
    PowerProfile2D p;
    p.freq_thz = {191.8, 191.9, 192.0};
    p.z_m = {0.0, 500.0, 1000.0, 1500.0};
    p.values = Matrix(3, 4);
    for (std::size_t r = 0; r < 3; ++r)
        for (std::size_t c = 0; c < 4; ++c) p.values(r, c) = -16.0 - 0.1 * (r + 2.0 * c);
    return p;
}

}  // namespace

TEST_CASE("profile binary round trip and format errors") {
    TempDir tmp("raman2d_profile_io");
    const std::string path = tmp.str() + "/p.rpp2";
    const PowerProfile2D p = demo_profile();
    save_profile(p, path);
    const PowerProfile2D back = load_profile(path);
    CHECK(back.freq_thz == p.freq_thz);
    CHECK(back.z_m == p.z_m);
    CHECK(back.values == p.values);

    {
        std::ofstream out(path, std::ios::binary);
        out << "BAD!";
    }
    CHECK_THROWS_AS(load_profile(path), FormatError);
}

TEST_CASE("profile csv layout: z grid row then one row per channel") {
    TempDir tmp("raman2d_profile_csv");
    const std::string path = tmp.str() + "/p.csv";
    write_profile_csv(demo_profile(), path);
    std::ifstream in(path);
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "freq_thz\\z_m,0.0,500.0,1000.0,1500.0");
    REQUIRE(std::getline(in, line));
    CHECK(line.substr(0, 6) == "191.8,");
    std::size_t rows = 1;
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 3);
}

TEST_CASE("full command chain produces a valid, reproducible report") {
    const ExperimentConfig cfg = tiny_config();
    TempDir tmp("raman2d_chain");
    Paths paths;
    paths.out_dir = tmp.str();

    cmd_gen_dataset(cfg, paths);
    CHECK(std::filesystem::exists(paths.dataset()));
    cmd_train(cfg, paths);
    CHECK(std::filesystem::exists(paths.checkpoint()));
    CHECK(std::filesystem::exists(paths.history()));
    cmd_evaluate(cfg, paths);
    CHECK(std::filesystem::exists(paths.eval_r2()));
    CHECK(std::filesystem::exists(paths.eval_summary()));
    CHECK(std::filesystem::exists(paths.eval_hist()));
    cmd_finetune(cfg, paths);
    CHECK(std::filesystem::exists(paths.finetune_results()));
    cmd_report(cfg, paths);
    REQUIRE(std::filesystem::exists(paths.report()));

    const std::string report_text = slurp(paths.report());
    CHECK_NOTHROW(validate_report_json(report_text));

    // Every profile file referenced by the fine-tune stage exists.
    const std::string runs = slurp(paths.finetune_runs());
    CHECK(runs.find("case_1_target.csv") != std::string::npos);
    CHECK(std::filesystem::exists(paths.case_target(1)));
    CHECK(std::filesystem::exists(paths.case_achieved(1)));

    // Rerunning evaluate/finetune/report over the same artifacts yields a
    // byte-identical bundle.
    const std::string dataset_hash = file_fnv64(paths.dataset());
    const std::string ckpt_hash = file_fnv64(paths.checkpoint());
    cmd_evaluate(cfg, paths);
    cmd_finetune(cfg, paths);
    cmd_report(cfg, paths);
    CHECK(file_fnv64(paths.dataset()) == dataset_hash);
    CHECK(file_fnv64(paths.checkpoint()) == ckpt_hash);
    CHECK(slurp(paths.report()) == report_text);
}

TEST_CASE("gen-dataset is reproducible file-for-file") {
    const ExperimentConfig cfg = tiny_config();
    TempDir a("raman2d_gen_a");
    TempDir b("raman2d_gen_b");
    Paths pa, pb;
    pa.out_dir = a.str();
    pb.out_dir = b.str();
    cmd_gen_dataset(cfg, pa);
    cmd_gen_dataset(cfg, pb);
    CHECK(file_fnv64(pa.dataset()) == file_fnv64(pb.dataset()));
}

TEST_CASE("train sweep emits one history per size and a summary") {
    const ExperimentConfig cfg = tiny_config();
    TempDir tmp("raman2d_sweep");
    Paths paths;
    paths.out_dir = tmp.str();
    cmd_gen_dataset(cfg, paths);
    cmd_train(cfg, paths, {4, 10});
    CHECK(std::filesystem::exists(paths.history_for(4)));
    CHECK(std::filesystem::exists(paths.history_for(10)));
    CHECK(std::filesystem::exists(paths.sweep_summary()));
    CHECK(std::filesystem::exists(paths.checkpoint()));
    const std::string summary = slurp(paths.sweep_summary());
    CHECK(summary.find("train_size,epochs_run,best_epoch,best_val") == 0);

    CHECK_THROWS_AS(cmd_train(cfg, paths, {4, 999}), std::invalid_argument);
}

TEST_CASE("missing artifacts name the producing command") {
    const ExperimentConfig cfg = tiny_config();
    TempDir tmp("raman2d_missing");
    Paths paths;
    paths.out_dir = tmp.str();
    CHECK_THROWS_WITH_AS(cmd_train(cfg, paths), doctest::Contains("gen-dataset"),
                         std::runtime_error);
    cmd_gen_dataset(cfg, paths);
    CHECK_THROWS_WITH_AS(cmd_evaluate(cfg, paths), doctest::Contains("train"),
                         std::runtime_error);
    CHECK_THROWS_WITH_AS(cmd_report(cfg, paths), doctest::Contains("train"), std::runtime_error);
}

TEST_CASE("config drift against dataset provenance is rejected") {
    ExperimentConfig cfg = tiny_config();
    TempDir tmp("raman2d_drift");
    Paths paths;
    paths.out_dir = tmp.str();
    cmd_gen_dataset(cfg, paths);
    cfg.plant.raman_peak_gain = 0.5;
    CHECK_THROWS_WITH_AS(cmd_train(cfg, paths), doctest::Contains("provenance"),
                         std::runtime_error);
}

TEST_CASE("report schema validation rejects corrupted bundles") {
    CHECK_THROWS_AS(validate_report_json("not json at all"), FormatError);
    CHECK_THROWS_AS(validate_report_json("{\"schema\":\"raman2d-report-v1\"}"), FormatError);
    CHECK_THROWS_AS(validate_report_json("{\"schema\":\"other\"}"), FormatError);
}

TEST_CASE("derived seeds are stable and distinct") {
    const SeedChain a = derive_seeds(42);
    const SeedChain b = derive_seeds(42);
    CHECK(a.dataset == b.dataset);
    CHECK(a.train == b.train);
    const SeedChain c = derive_seeds(43);
    CHECK(a.dataset != c.dataset);
    std::set<uint64_t> all = {a.dataset, a.split, a.network_init, a.train, a.evaluate, a.finetune};
    CHECK(all.size() == 6);
}
