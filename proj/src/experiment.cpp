#include "raman2d/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "raman2d/errors.hpp"
#include "raman2d/io_util.hpp"
#include "raman2d/profile.hpp"

namespace raman2d {

using nlohmann::json;

namespace {

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create directory " + dir + ": " + ec.message());
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    return out;
}

void require_artifact(const std::string& path, const std::string& producer) {
    if (!std::filesystem::exists(path))
        throw std::runtime_error("missing artifact " + path + " - run `raman2d " + producer +
                                 "` first");
}

std::string fmt(double v) { return IniDoc::format_double(v); }

// Artifacts reference each other by file name so a bundle is byte-stable
// regardless of where the experiment directory lives.
std::string rel(const std::string& path) {
    return std::filesystem::path(path).filename().string();
}

Dataset load_dataset_checked(const ExperimentConfig& cfg, const Paths& paths) {
    require_artifact(paths.dataset(), "gen-dataset");
    Dataset ds = load_dataset(paths.dataset());
    const std::string expected = plant_pipeline_snapshot(cfg.plant, cfg.pipeline);
    if (ds.provenance.compare(0, expected.size(), expected) != 0)
        throw std::runtime_error(
            "config does not match the dataset provenance; regenerate the dataset or fix the "
            "config");
    return ds;
}

struct HardCase {
    int id = 0;                // 1-based, worst first
    std::size_t test_pos = 0;  // position in the test split
    uint32_t sample = 0;       // dataset sample index
    double measured_mae_db = 0.0;
};

std::vector<HardCase> select_hard_cases(const std::vector<double>& mae_list,
                                        const std::vector<uint32_t>& test_idx, double threshold_db,
                                        int limit, bool decile_fallback, double* threshold_used) {
    std::vector<std::size_t> order(mae_list.size());
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return mae_list[a] > mae_list[b]; });
    double threshold = threshold_db;
    std::size_t count = 0;
    for (double v : mae_list)
        if (v > threshold) ++count;
    if (decile_fallback && count < 5) {
        const std::size_t decile = std::max<std::size_t>(1, mae_list.size() / 10);
        threshold = mae_list[order[std::min(decile, mae_list.size()) - 1]] - 1e-12;
        count = decile;
    }
    if (threshold_used) *threshold_used = threshold;
    std::vector<HardCase> cases;
    for (std::size_t k = 0; k < order.size() && mae_list[order[k]] > threshold; ++k) {
        HardCase hc;
        hc.id = static_cast<int>(k + 1);
        hc.test_pos = order[k];
        hc.sample = test_idx[order[k]];
        hc.measured_mae_db = mae_list[order[k]];
        cases.push_back(hc);
        if (limit > 0 && cases.size() >= static_cast<std::size_t>(limit)) break;
    }
    return cases;
}

}  // namespace

SeedChain derive_seeds(uint64_t master_seed) {
    SeedChain s;
    s.dataset = child_seed(master_seed, 1);
    s.split = child_seed(master_seed, 2);
    s.network_init = child_seed(master_seed, 3);
    s.train = child_seed(master_seed, 4);
    s.evaluate = child_seed(master_seed, 5);
    s.finetune = child_seed(master_seed, 6);
    return s;
}

int effective_workers(const ExperimentConfig& cfg) {
    if (cfg.workers > 0) return cfg.workers;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

std::string file_fnv64(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file for hashing: " + path);
    uint64_t hash = 0xCBF29CE484222325ull;
    char buf[1 << 16];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        const std::streamsize n = in.gcount();
        for (std::streamsize i = 0; i < n; ++i) {
            hash ^= static_cast<unsigned char>(buf[i]);
            hash *= 0x100000001B3ull;
        }
        if (!in) break;
    }
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(hash));
    return hex;
}

void cmd_gen_dataset(const ExperimentConfig& cfg, const Paths& paths) {
    cfg.validate();
    ensure_dir(paths.out_dir);
    const SeedChain seeds = derive_seeds(cfg.master_seed);
    const Plant plant(cfg.plant, cfg.pipeline);
    Dataset ds = generate(static_cast<std::size_t>(cfg.n_samples), seeds.dataset, plant, cfg.noisy,
                          effective_workers(cfg));
    split_dataset(ds, cfg.n_train, cfg.n_test, cfg.n_val, seeds.split);
    save_dataset(ds, paths.dataset());
    to_ini(cfg).write_file(paths.config());
}

void cmd_train(const ExperimentConfig& cfg, const Paths& paths,
               const std::vector<std::size_t>& train_sizes) {
    cfg.validate();
    ensure_dir(paths.out_dir);
    const SeedChain seeds = derive_seeds(cfg.master_seed);
    const Dataset ds = load_dataset_checked(cfg, paths);
    if (ds.samples.empty()) throw std::runtime_error("dataset is empty");

    const std::size_t nc = ds.samples[0].profile.freq_thz.size();
    const std::size_t nz = ds.samples[0].profile.z_m.size();
    TrainConfig tc = cfg.train;
    tc.seed = child_seed(seeds.train, cfg.train.seed);

    auto write_history = [](const std::string& path, const TrainHistory& h) {
        std::ofstream out = open_out(path);
        out << "epoch,train_loss,val_metric\n";
        for (std::size_t e = 0; e < h.train_loss.size(); ++e)
            out << e << "," << fmt(h.train_loss[e]) << "," << fmt(h.val_metric[e]) << "\n";
    };

    std::vector<std::size_t> sizes = train_sizes;
    if (sizes.empty()) sizes.push_back(ds.train_idx.size());
    const bool sweep = sizes.size() > 1;
    for (std::size_t s : sizes)
        if (s < 1 || s > ds.train_idx.size())
            throw std::invalid_argument("train size " + std::to_string(s) +
                                        " exceeds the train split (" +
                                        std::to_string(ds.train_idx.size()) + ")");

    NetworkModel best_model;
    double best_val = std::numeric_limits<double>::infinity();
    std::size_t best_size = 0;
    std::vector<std::string> summary_rows;
    for (std::size_t s : sizes) {
        NetworkModel model = make_network(default_descriptor(nc, nz), cfg.plant.pump_p_max_w,
                                          seeds.network_init);
        const TrainHistory h = train(model, ds, tc, s);
        write_history(sweep ? paths.history_for(s) : paths.history(), h);
        summary_rows.push_back(std::to_string(s) + "," + std::to_string(h.train_loss.size()) + "," +
                               std::to_string(h.best_epoch) + "," + fmt(h.best_val));
        if (h.best_val < best_val) {
            best_val = h.best_val;
            best_model = std::move(model);
            best_size = s;
        }
    }
    if (sweep) {
        std::ofstream out = open_out(paths.sweep_summary());
        out << "train_size,epochs_run,best_epoch,best_val\n";
        for (const auto& row : summary_rows) out << row << "\n";
        // Keep a canonical history.csv pointing at the chosen size.
        std::filesystem::copy_file(paths.history_for(best_size), paths.history(),
                                   std::filesystem::copy_options::overwrite_existing);
    }
    save_checkpoint(best_model, paths.checkpoint());
}

void cmd_evaluate(const ExperimentConfig& cfg, const Paths& paths) {
    cfg.validate();
    ensure_dir(paths.out_dir);
    const SeedChain seeds = derive_seeds(cfg.master_seed);
    const Dataset ds = load_dataset_checked(cfg, paths);
    require_artifact(paths.checkpoint(), "train");
    const NetworkModel model = load_checkpoint(paths.checkpoint());
    const Plant plant(cfg.plant, cfg.pipeline);

    const EvalReport report =
        evaluate_model(model, ds, plant, seeds.evaluate, cfg.noisy, effective_workers(cfg));

    {
        std::ofstream out = open_out(paths.eval_r2());
        out << "pump,r2\n";
        for (std::size_t j = 0; j < report.r2.size(); ++j)
            out << "p" << (j + 1) << "," << fmt(report.r2[j]) << "\n";
    }
    {
        std::ofstream out = open_out(paths.eval_predictions());
        out << "test_pos,sample";
        for (std::size_t j = 0; j < report.truth[0].size(); ++j) out << ",true_p" << (j + 1);
        for (std::size_t j = 0; j < report.predicted[0].size(); ++j) out << ",pred_p" << (j + 1);
        out << ",mae_db\n";
        for (std::size_t i = 0; i < report.mae_list_db.size(); ++i) {
            out << i << "," << ds.test_idx[i];
            for (double v : report.truth[i]) out << "," << fmt(v);
            for (double v : report.predicted[i]) out << "," << fmt(v);
            out << "," << fmt(report.mae_list_db[i]) << "\n";
        }
    }
    // Histogram over [0, max MAE] with the configured bin width.
    const double max_mae =
        *std::max_element(report.mae_list_db.begin(), report.mae_list_db.end());
    const std::size_t nbins =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(max_mae / cfg.histogram_bin_db)));
    std::vector<std::size_t> bins(nbins, 0);
    for (double v : report.mae_list_db) {
        std::size_t b = static_cast<std::size_t>(v / cfg.histogram_bin_db);
        if (b >= nbins) b = nbins - 1;
        ++bins[b];
    }
    {
        std::ofstream out = open_out(paths.eval_hist());
        out << "bin_lo_db,bin_hi_db,count\n";
        for (std::size_t b = 0; b < nbins; ++b)
            out << fmt(b * cfg.histogram_bin_db) << "," << fmt((b + 1) * cfg.histogram_bin_db)
                << "," << bins[b] << "\n";
    }

    const std::vector<HardCase> hard = select_hard_cases(
        report.mae_list_db, ds.test_idx, cfg.hard_case_threshold_db, 0, false, nullptr);
    {
        std::ofstream out = open_out(paths.hard_cases());
        out << "id,test_pos,sample,cnn_mae_db\n";
        for (const HardCase& hc : hard)
            out << hc.id << "," << hc.test_pos << "," << hc.sample << ","
                << fmt(hc.measured_mae_db) << "\n";
    }

    json summary;
    summary["schema"] = "raman2d-eval-v1";
    summary["count"] = report.mae_list_db.size();
    summary["r2"] = report.r2;
    summary["mae_mu_db"] = report.mu_db;
    summary["mae_sigma_db"] = report.sigma_db;
    summary["mae_list_db"] = report.mae_list_db;
    summary["noisy"] = cfg.noisy;
    summary["hard_case_threshold_db"] = cfg.hard_case_threshold_db;
    json hc_json = json::array();
    for (const HardCase& hc : hard)
        hc_json.push_back({{"id", hc.id},
                           {"test_pos", hc.test_pos},
                           {"sample", hc.sample},
                           {"cnn_mae_db", hc.measured_mae_db}});
    summary["hard_cases"] = hc_json;
    std::ofstream out = open_out(paths.eval_summary());
    out << summary.dump(2) << "\n";
}

void cmd_finetune(const ExperimentConfig& cfg, const Paths& paths) {
    cfg.validate();
    ensure_dir(paths.out_dir);
    const SeedChain seeds = derive_seeds(cfg.master_seed);
    const Dataset ds = load_dataset_checked(cfg, paths);
    require_artifact(paths.checkpoint(), "train");
    require_artifact(paths.eval_summary(), "evaluate");
    const NetworkModel model = load_checkpoint(paths.checkpoint());
    const Plant plant(cfg.plant, cfg.pipeline);
    const int workers = effective_workers(cfg);

    json summary;
    {
        std::ifstream in(paths.eval_summary());
        in >> summary;
    }
    const std::vector<double> mae_list = summary.at("mae_list_db").get<std::vector<double>>();

    double threshold_used = cfg.hard_case_threshold_db;
    const std::vector<HardCase> cases =
        select_hard_cases(mae_list, ds.test_idx, cfg.hard_case_threshold_db, cfg.hard_case_limit,
                          true, &threshold_used);
    if (cases.empty()) throw std::runtime_error("no hard cases to fine-tune");

    json runs = json::array();
    std::ofstream results = open_out(paths.finetune_results());
    results << "id,test_pos,sample,cnn_mae_measured_db,cnn_mae_db,cnn_de_mae_db,random_de_mae_db\n";

    for (const HardCase& hc : cases) {
        const Sample& sample = ds.samples[hc.sample];
        const PowerProfile2D& target = sample.profile;
        const std::vector<double> cnn_pred = forward(model, target);
        const double cnn_mae_noiseless = mae(target, plant.apply_powers(cnn_pred));

        auto run_mode = [&](DeInit mode, uint64_t tag) {
            DeConfig de_cfg = cfg.de;
            de_cfg.seed = child_seed(seeds.finetune,
                                     child_seed(cfg.de.seed, static_cast<uint64_t>(hc.id) * 2 + tag));
            const std::string mode_name = mode == DeInit::CnnAssisted ? "cnn" : "random";
            std::ofstream log = open_out(paths.de_log(hc.id, mode_name));
            log << "# iteration best_mae_db best_powers_w\n";
            DeLogger logger = [&log](int iter, double best, const std::vector<double>& powers) {
                log << iter << " " << fmt(best);
                for (double p : powers) log << " " << fmt(p);
                log << "\n";
            };
            return finetune(target, plant, de_cfg, mode,
                            mode == DeInit::CnnAssisted ? &cnn_pred : nullptr, cfg.noisy, workers,
                            logger);
        };
        const DeRun cnn_run = run_mode(DeInit::CnnAssisted, 0);
        const DeRun rand_run = run_mode(DeInit::Random, 1);

        write_profile_csv(target, paths.case_target(hc.id));
        write_profile_csv(plant.apply_powers(cnn_run.best_powers_w), paths.case_achieved(hc.id));

        results << hc.id << "," << hc.test_pos << "," << hc.sample << ","
                << fmt(hc.measured_mae_db) << "," << fmt(cnn_mae_noiseless) << ","
                << fmt(cnn_run.best_mae_db) << "," << fmt(rand_run.best_mae_db) << "\n";

        auto run_json = [&](const DeRun& r) {
            return json{{"init_mode", r.init_mode},
                        {"best_powers_w", r.best_powers_w},
                        {"best_mae_db", r.best_mae_db},
                        {"evaluations", r.evaluations},
                        {"history_db", r.history_db}};
        };
        runs.push_back({{"id", hc.id},
                        {"test_pos", hc.test_pos},
                        {"sample", hc.sample},
                        {"cnn_mae_measured_db", hc.measured_mae_db},
                        {"cnn_mae_db", cnn_mae_noiseless},
                        {"target_file", rel(paths.case_target(hc.id))},
                        {"achieved_file", rel(paths.case_achieved(hc.id))},
                        {"cnn_assisted", run_json(cnn_run)},
                        {"random_init", run_json(rand_run)}});
    }

    json doc;
    doc["schema"] = "raman2d-finetune-v1";
    doc["threshold_used_db"] = threshold_used;
    doc["cases"] = runs;
    std::ofstream out = open_out(paths.finetune_runs());
    out << doc.dump(2) << "\n";
}

void cmd_report(const ExperimentConfig& cfg, const Paths& paths) {
    cfg.validate();
    require_artifact(paths.dataset(), "gen-dataset");
    require_artifact(paths.checkpoint(), "train");
    require_artifact(paths.history(), "train");
    require_artifact(paths.eval_summary(), "evaluate");
    require_artifact(paths.eval_r2(), "evaluate");
    require_artifact(paths.eval_hist(), "evaluate");
    require_artifact(paths.eval_predictions(), "evaluate");
    require_artifact(paths.finetune_runs(), "finetune");
    require_artifact(paths.finetune_results(), "finetune");

    json eval_summary, finetune_runs;
    {
        std::ifstream in(paths.eval_summary());
        in >> eval_summary;
    }
    {
        std::ifstream in(paths.finetune_runs());
        in >> finetune_runs;
    }

    const SeedChain seeds = derive_seeds(cfg.master_seed);
    json report;
    report["schema"] = "raman2d-report-v1";
    report["master_seed"] = cfg.master_seed;
    report["config_ini"] = to_ini(cfg).serialize();
    report["seeds"] = {{"dataset", seeds.dataset},   {"split", seeds.split},
                       {"network_init", seeds.network_init}, {"train", seeds.train},
                       {"evaluate", seeds.evaluate}, {"finetune", seeds.finetune}};
    report["dataset"] = {{"file", rel(paths.dataset())},
                         {"fnv64", file_fnv64(paths.dataset())},
                         {"n", cfg.n_samples},
                         {"split", {cfg.n_train, cfg.n_test, cfg.n_val}}};
    report["checkpoint"] = {{"file", rel(paths.checkpoint())},
                            {"fnv64", file_fnv64(paths.checkpoint())}};
    report["history_file"] = rel(paths.history());
    report["r2"] = eval_summary.at("r2");
    report["mae"] = {{"mu_db", eval_summary.at("mae_mu_db")},
                     {"sigma_db", eval_summary.at("mae_sigma_db")},
                     {"count", eval_summary.at("count")},
                     {"histogram_bin_db", cfg.histogram_bin_db},
                     {"histogram_file", rel(paths.eval_hist())},
                     {"list_file", rel(paths.eval_predictions())}};
    report["hard_cases"] = {{"threshold_db", eval_summary.at("hard_case_threshold_db")},
                            {"threshold_used_db", finetune_runs.at("threshold_used_db")},
                            {"cases", finetune_runs.at("cases")}};

    // Every profile file named in the report must exist.
    for (const auto& c : report["hard_cases"]["cases"]) {
        require_artifact(paths.out_dir + "/" + c.at("target_file").get<std::string>(),
                         "finetune");
        require_artifact(paths.out_dir + "/" + c.at("achieved_file").get<std::string>(),
                         "finetune");
    }

    const std::string text = report.dump(2) + "\n";
    validate_report_json(text);
    std::ofstream out = open_out(paths.report());
    out << text;
}

void validate_report_json(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw FormatError(std::string("report bundle is not valid JSON: ") + e.what());
    }
    auto need = [&](const json& node, const char* key, const char* where) -> const json& {
        if (!node.contains(key))
            throw FormatError(std::string("report bundle missing key ") + where + "." + key);
        return node.at(key);
    };
    if (need(doc, "schema", "$").get<std::string>() != "raman2d-report-v1")
        throw FormatError("report bundle has unknown schema");
    need(doc, "master_seed", "$");
    need(doc, "config_ini", "$");
    need(doc, "seeds", "$");
    const json& r2 = need(doc, "r2", "$");
    if (!r2.is_array() || r2.empty())
        throw FormatError("report bundle r2 must be a non-empty array");
    const json& mae = need(doc, "mae", "$");
    need(mae, "mu_db", "mae");
    need(mae, "sigma_db", "mae");
    need(mae, "count", "mae");
    const json& hard = need(doc, "hard_cases", "$");
    need(hard, "threshold_db", "hard_cases");
    const json& cases = need(hard, "cases", "hard_cases");
    if (!cases.is_array()) throw FormatError("report bundle hard_cases.cases must be an array");
    for (const auto& c : cases) {
        need(c, "cnn_mae_db", "case");
        need(c, "cnn_assisted", "case");
        need(c, "random_init", "case");
        need(c.at("cnn_assisted"), "best_mae_db", "case.cnn_assisted");
        need(c.at("random_init"), "best_mae_db", "case.random_init");
    }
}

}  // namespace raman2d
