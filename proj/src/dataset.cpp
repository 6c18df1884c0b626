#include "raman2d/dataset.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "raman2d/config.hpp"
#include "raman2d/errors.hpp"
#include "raman2d/io_util.hpp"
#include "raman2d/parallel.hpp"

namespace raman2d {

std::vector<double> sample_pumps(const std::vector<double>& p_max_w, Rng& rng) {
    std::vector<double> powers(p_max_w.size());
    for (std::size_t j = 0; j < p_max_w.size(); ++j) powers[j] = rng.uniform(0.0, p_max_w[j]);
    return powers;
}

namespace {

std::string provenance_snapshot(const Plant& plant, uint64_t master_seed) {
    std::string out = plant_pipeline_snapshot(plant.plant_config(), plant.pipeline_config());
    IniDoc doc;
    doc.set_u64("provenance", "master_seed", master_seed);
    doc.set("provenance", "child_seed_mix",
            "splitmix64(parent + (index + 1) * 0x9E3779B97F4A7C15)");
    out += "\n" + doc.serialize();
    return out;
}

}  // namespace

Dataset generate(std::size_t n, uint64_t master_seed, const Plant& plant, bool noisy,
                 int workers) {
    if (n < 1) throw std::invalid_argument("generate: n must be at least 1");
    Dataset ds;
    ds.master_seed = master_seed;
    ds.provenance = provenance_snapshot(plant, master_seed);
    ds.samples.resize(n);
    const std::vector<double>& p_max = plant.plant_config().pump_p_max_w;
    parallel_for(n, workers, [&](std::size_t i) {
        try {
            const uint64_t si = child_seed(master_seed, i);
            Rng rng(child_seed(si, 0));
            Sample& s = ds.samples[i];
            s.powers_w = sample_pumps(p_max, rng);
            std::optional<uint64_t> noise_seed;
            if (noisy) noise_seed = child_seed(si, 1);
            s.profile = plant.apply_powers(s.powers_w, noise_seed);
        } catch (const std::exception& e) {
            throw std::runtime_error("generate: sample " + std::to_string(i) + ": " + e.what());
        }
    });
    return ds;
}

void split_dataset(Dataset& ds, std::size_t n_train, std::size_t n_test, std::size_t n_val,
                   uint64_t seed) {
    const std::size_t n = ds.size();
    if (n_train + n_test + n_val > n)
        throw std::invalid_argument("split: sizes exceed the dataset");
    std::vector<uint32_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0u);
    Rng rng(seed);
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.below(i));
        std::swap(perm[i - 1], perm[j]);
    }
    ds.train_idx.assign(perm.begin(), perm.begin() + n_train);
    ds.test_idx.assign(perm.begin() + n_train, perm.begin() + n_train + n_test);
    ds.val_idx.assign(perm.begin() + n_train + n_test, perm.begin() + n_train + n_test + n_val);
}

namespace {
constexpr char kMagic[4] = {'R', 'D', 'S', '1'};
constexpr uint16_t kVersion = 1;

void write_indices(std::ostream& out, const std::vector<uint32_t>& idx) {
    io::write_u32(out, static_cast<uint32_t>(idx.size()));
    out.write(reinterpret_cast<const char*>(idx.data()),
              static_cast<std::streamsize>(idx.size() * sizeof(uint32_t)));
}

std::vector<uint32_t> read_indices(std::istream& in, const std::string& path) {
    const uint32_t n = io::read_u32(in, path);
    std::vector<uint32_t> idx(n);
    if (!in.read(reinterpret_cast<char*>(idx.data()),
                 static_cast<std::streamsize>(n * sizeof(uint32_t))))
        throw CorruptionError("truncated file: " + path);
    return idx;
}
}  // namespace

void save_dataset(const Dataset& ds, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write dataset file: " + path);
    out.write(kMagic, 4);
    io::write_u16(out, kVersion);
    io::write_u32(out, static_cast<uint32_t>(ds.provenance.size()));
    out.write(ds.provenance.data(), static_cast<std::streamsize>(ds.provenance.size()));
    io::write_u64(out, ds.master_seed);
    io::write_u32(out, static_cast<uint32_t>(ds.size()));
    const std::size_t np = ds.samples.empty() ? 0 : ds.samples[0].powers_w.size();
    const std::size_t nc = ds.samples.empty() ? 0 : ds.samples[0].profile.freq_thz.size();
    const std::size_t nz = ds.samples.empty() ? 0 : ds.samples[0].profile.z_m.size();
    io::write_u16(out, static_cast<uint16_t>(np));
    io::write_u16(out, static_cast<uint16_t>(nc));
    io::write_u16(out, static_cast<uint16_t>(nz));
    if (!ds.samples.empty()) {
        io::write_f64s(out, ds.samples[0].profile.freq_thz);
        io::write_f64s(out, ds.samples[0].profile.z_m);
    }
    write_indices(out, ds.train_idx);
    write_indices(out, ds.test_idx);
    write_indices(out, ds.val_idx);
    for (const Sample& s : ds.samples) {
        if (s.powers_w.size() != np || s.profile.values.rows() != nc ||
            s.profile.values.cols() != nz)
            throw ShapeError("save_dataset: inconsistent sample shapes");
        io::write_f64s(out, s.powers_w);
        io::write_f64s(out, s.profile.values.data());
    }
    if (!out) throw std::runtime_error("short write to dataset file: " + path);
}

Dataset load_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open dataset file: " + path);
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
        throw FormatError("dataset file has wrong magic: " + path);
    const uint16_t version = io::read_u16(in, path);
    if (version != kVersion) throw FormatError("dataset file has unsupported version: " + path);
    Dataset ds;
    const uint32_t prov_len = io::read_u32(in, path);
    ds.provenance = io::read_bytes(in, prov_len, path);
    ds.master_seed = io::read_u64(in, path);
    const uint32_t n = io::read_u32(in, path);
    const uint16_t np = io::read_u16(in, path);
    const uint16_t nc = io::read_u16(in, path);
    const uint16_t nz = io::read_u16(in, path);
    std::vector<double> freq, z;
    if (n > 0) {
        freq = io::read_f64s(in, nc, path);
        z = io::read_f64s(in, nz, path);
    }
    ds.train_idx = read_indices(in, path);
    ds.test_idx = read_indices(in, path);
    ds.val_idx = read_indices(in, path);
    ds.samples.resize(n);
    for (uint32_t i = 0; i < n; ++i) {
        Sample& s = ds.samples[i];
        s.powers_w = io::read_f64s(in, np, path);
        s.profile.freq_thz = freq;
        s.profile.z_m = z;
        s.profile.values = Matrix(nc, nz);
        s.profile.values.data() = io::read_f64s(in, std::size_t(nc) * nz, path);
    }
    // Trailing garbage would mean the writer and reader disagree.
    char extra;
    if (in.read(&extra, 1)) throw CorruptionError("trailing bytes in dataset file: " + path);
    return ds;
}

}  // namespace raman2d
