#include "raman2d/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "raman2d/errors.hpp"
#include "raman2d/io_util.hpp"
#include "raman2d/parallel.hpp"
#include "raman2d/rng.hpp"

namespace raman2d {

namespace {

// Fixed-order dot product with independent accumulators so the compiler
// can vectorize without changing results between runs.
double dot8(const double* a, const double* b, std::size_t n) {
    double s0 = 0, s1 = 0, s2 = 0, s3 = 0, s4 = 0, s5 = 0, s6 = 0, s7 = 0;
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
        s4 += a[i + 4] * b[i + 4];
        s5 += a[i + 5] * b[i + 5];
        s6 += a[i + 6] * b[i + 6];
        s7 += a[i + 7] * b[i + 7];
    }
    double tail = 0;
    for (; i < n; ++i) tail += a[i] * b[i];
    return (((s0 + s1) + (s2 + s3)) + ((s4 + s5) + (s6 + s7))) + tail;
}

void axpy(double* y, double a, const double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    return out;
}

Act parse_act(const std::string& s) {
    if (s == "relu") return Act::Relu;
    if (s == "logistic") return Act::Logistic;
    if (s == "none") return Act::None;
    throw FormatError("network descriptor: unknown activation " + s);
}

const char* act_name(Act a) {
    switch (a) {
        case Act::Relu: return "relu";
        case Act::Logistic: return "logistic";
        default: return "none";
    }
}

std::vector<LayerSpec> parse_descriptor(const std::string& text) {
    std::vector<LayerSpec> layers;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const auto tok = split_ws(line);
        if (tok.empty()) continue;
        LayerSpec spec;
        if (tok[0] == "input") {
            if (tok.size() != 2) throw FormatError("network descriptor: input needs CxHxW");
            spec.kind = LayerSpec::Kind::Input;
            if (std::sscanf(tok[1].c_str(), "%dx%dx%d", &spec.out_c, &spec.out_h, &spec.out_w) != 3)
                throw FormatError("network descriptor: bad input shape " + tok[1]);
        } else if (tok[0] == "conv") {
            if (tok.size() < 3) throw FormatError("network descriptor: conv needs filters and kernel");
            spec.kind = LayerSpec::Kind::Conv;
            spec.out_c = std::stoi(tok[1]);
            int kh = 0, kw = 0;
            if (std::sscanf(tok[2].c_str(), "%dx%d", &kh, &kw) != 2 || kh != kw)
                throw FormatError("network descriptor: conv kernel must be square KxK");
            spec.kernel = kh;
            spec.act = tok.size() > 3 ? parse_act(tok[3]) : Act::None;
        } else if (tok[0] == "maxpool") {
            if (tok.size() != 2) throw FormatError("network descriptor: maxpool needs a size");
            spec.kind = LayerSpec::Kind::MaxPool;
            spec.kernel = std::stoi(tok[1]);
        } else if (tok[0] == "flatten") {
            spec.kind = LayerSpec::Kind::Flatten;
        } else if (tok[0] == "dense") {
            if (tok.size() < 2) throw FormatError("network descriptor: dense needs a unit count");
            spec.kind = LayerSpec::Kind::Dense;
            spec.out_c = std::stoi(tok[1]);
            spec.act = tok.size() > 2 ? parse_act(tok[2]) : Act::None;
        } else {
            throw FormatError("network descriptor: unknown layer " + tok[0]);
        }
        layers.push_back(spec);
    }
    if (layers.empty() || layers.front().kind != LayerSpec::Kind::Input)
        throw FormatError("network descriptor: must start with an input layer");

    // Resolve shapes and weight offsets.
    std::size_t offset = 0;
    for (std::size_t l = 1; l < layers.size(); ++l) {
        LayerSpec& s = layers[l];
        const LayerSpec& prev = layers[l - 1];
        s.in_c = prev.out_c;
        s.in_h = prev.out_h;
        s.in_w = prev.out_w;
        switch (s.kind) {
            case LayerSpec::Kind::Conv:
                if (s.in_h < s.kernel || s.in_w < s.kernel)
                    throw FormatError("network descriptor: conv input smaller than kernel");
                s.out_h = s.in_h - s.kernel + 1;
                s.out_w = s.in_w - s.kernel + 1;
                s.weight_offset = offset;
                s.weight_count =
                    static_cast<std::size_t>(s.out_c) * s.in_c * s.kernel * s.kernel + s.out_c;
                break;
            case LayerSpec::Kind::MaxPool:
                s.out_c = s.in_c;
                s.out_h = s.in_h / s.kernel;
                s.out_w = s.in_w / s.kernel;
                if (s.out_h == 0 || s.out_w == 0)
                    throw FormatError("network descriptor: maxpool input too small");
                break;
            case LayerSpec::Kind::Flatten:
                s.out_c = s.in_c * s.in_h * s.in_w;
                s.out_h = s.out_w = 1;
                break;
            case LayerSpec::Kind::Dense:
                s.out_h = s.out_w = 1;
                s.weight_offset = offset;
                s.weight_count = static_cast<std::size_t>(s.out_c) *
                                     (static_cast<std::size_t>(s.in_c) * s.in_h * s.in_w) +
                                 s.out_c;
                break;
            default:
                throw FormatError("network descriptor: input layer must come first");
        }
        offset += s.weight_count;
    }
    return layers;
}

std::size_t total_weights(const std::vector<LayerSpec>& layers) {
    std::size_t n = 0;
    for (const auto& s : layers) n += s.weight_count;
    return n;
}

// Scratch buffers reused across forward/backward passes.
struct Workspace {
    std::vector<std::vector<double>> act;     // per layer output
    std::vector<std::vector<double>> grad;    // per layer output gradient
    std::vector<std::vector<double>> col;     // conv im2col patches
    std::vector<std::vector<double>> dcol;    // conv patch gradients
    std::vector<std::vector<uint32_t>> argmax;

    explicit Workspace(const NetworkModel& model) {
        const auto& layers = model.layers;
        act.resize(layers.size());
        grad.resize(layers.size());
        col.resize(layers.size());
        dcol.resize(layers.size());
        argmax.resize(layers.size());
        for (std::size_t l = 0; l < layers.size(); ++l) {
            act[l].resize(layers[l].out_size());
            grad[l].resize(layers[l].out_size());
            if (layers[l].kind == LayerSpec::Kind::Conv) {
                const auto& s = layers[l];
                const std::size_t patch = static_cast<std::size_t>(s.in_c) * s.kernel * s.kernel;
                const std::size_t npos = static_cast<std::size_t>(s.out_h) * s.out_w;
                col[l].resize(patch * npos);
                dcol[l].resize(patch * npos);
            }
            if (layers[l].kind == LayerSpec::Kind::MaxPool)
                argmax[l].resize(layers[l].out_size());
        }
    }
};

void im2col(const LayerSpec& s, const double* in, double* col) {
    const std::size_t npos = static_cast<std::size_t>(s.out_h) * s.out_w;
    std::size_t r = 0;
    for (int c = 0; c < s.in_c; ++c) {
        const double* plane = in + static_cast<std::size_t>(c) * s.in_h * s.in_w;
        for (int ky = 0; ky < s.kernel; ++ky) {
            for (int kx = 0; kx < s.kernel; ++kx, ++r) {
                double* dst = col + r * npos;
                for (int oy = 0; oy < s.out_h; ++oy) {
                    const double* src = plane + static_cast<std::size_t>(oy + ky) * s.in_w + kx;
                    std::memcpy(dst + static_cast<std::size_t>(oy) * s.out_w, src,
                                sizeof(double) * s.out_w);
                }
            }
        }
    }
}

void col2im_add(const LayerSpec& s, const double* dcol, double* din) {
    const std::size_t npos = static_cast<std::size_t>(s.out_h) * s.out_w;
    std::size_t r = 0;
    for (int c = 0; c < s.in_c; ++c) {
        double* plane = din + static_cast<std::size_t>(c) * s.in_h * s.in_w;
        for (int ky = 0; ky < s.kernel; ++ky) {
            for (int kx = 0; kx < s.kernel; ++kx, ++r) {
                const double* src = dcol + r * npos;
                for (int oy = 0; oy < s.out_h; ++oy) {
                    double* dst = plane + static_cast<std::size_t>(oy + ky) * s.in_w + kx;
                    axpy(dst, 1.0, src + static_cast<std::size_t>(oy) * s.out_w, s.out_w);
                }
            }
        }
    }
}

void apply_activation(Act act, double* x, std::size_t n) {
    switch (act) {
        case Act::Relu:
            for (std::size_t i = 0; i < n; ++i) x[i] = x[i] > 0.0 ? x[i] : 0.0;
            break;
        case Act::Logistic:
            for (std::size_t i = 0; i < n; ++i) x[i] = 1.0 / (1.0 + std::exp(-x[i]));
            break;
        case Act::None:
            break;
    }
}

// Multiplies the output gradient by the activation derivative, using the
// stored post-activation values.
void activation_backward(Act act, const double* out, double* g, std::size_t n) {
    switch (act) {
        case Act::Relu:
            for (std::size_t i = 0; i < n; ++i)
                if (out[i] <= 0.0) g[i] = 0.0;
            break;
        case Act::Logistic:
            for (std::size_t i = 0; i < n; ++i) g[i] *= out[i] * (1.0 - out[i]);
            break;
        case Act::None:
            break;
    }
}

// Forward pass over pre-normalized input already placed in ws.act[0].
void forward_pass(const NetworkModel& model, Workspace& ws) {
    const auto& layers = model.layers;
    for (std::size_t l = 1; l < layers.size(); ++l) {
        const LayerSpec& s = layers[l];
        const double* in = ws.act[l - 1].data();
        double* out = ws.act[l].data();
        switch (s.kind) {
            case LayerSpec::Kind::Conv: {
                const std::size_t patch = static_cast<std::size_t>(s.in_c) * s.kernel * s.kernel;
                const std::size_t npos = static_cast<std::size_t>(s.out_h) * s.out_w;
                im2col(s, in, ws.col[l].data());
                const double* w = model.weights.data() + s.weight_offset;
                const double* bias = w + static_cast<std::size_t>(s.out_c) * patch;
                for (int oc = 0; oc < s.out_c; ++oc) {
                    double* row = out + static_cast<std::size_t>(oc) * npos;
                    std::fill(row, row + npos, bias[oc]);
                    const double* wrow = w + static_cast<std::size_t>(oc) * patch;
                    for (std::size_t r = 0; r < patch; ++r)
                        axpy(row, wrow[r], ws.col[l].data() + r * npos, npos);
                }
                apply_activation(s.act, out, s.out_size());
                break;
            }
            case LayerSpec::Kind::MaxPool: {
                const int k = s.kernel;
                for (int c = 0; c < s.out_c; ++c) {
                    const double* plane = in + static_cast<std::size_t>(c) * s.in_h * s.in_w;
                    for (int oy = 0; oy < s.out_h; ++oy) {
                        for (int ox = 0; ox < s.out_w; ++ox) {
                            std::size_t best = static_cast<std::size_t>(oy * k) * s.in_w + ox * k;
                            double bv = plane[best];
                            for (int dy = 0; dy < k; ++dy)
                                for (int dx = 0; dx < k; ++dx) {
                                    const std::size_t idx =
                                        static_cast<std::size_t>(oy * k + dy) * s.in_w + ox * k + dx;
                                    if (plane[idx] > bv) {
                                        bv = plane[idx];
                                        best = idx;
                                    }
                                }
                            const std::size_t o =
                                (static_cast<std::size_t>(c) * s.out_h + oy) * s.out_w + ox;
                            out[o] = bv;
                            ws.argmax[l][o] =
                                static_cast<uint32_t>(static_cast<std::size_t>(c) * s.in_h * s.in_w + best);
                        }
                    }
                }
                break;
            }
            case LayerSpec::Kind::Flatten:
                std::copy(ws.act[l - 1].begin(), ws.act[l - 1].end(), ws.act[l].begin());
                break;
            case LayerSpec::Kind::Dense: {
                const std::size_t nin = ws.act[l - 1].size();
                const double* w = model.weights.data() + s.weight_offset;
                const double* bias = w + static_cast<std::size_t>(s.out_c) * nin;
                for (int i = 0; i < s.out_c; ++i)
                    out[i] = bias[i] + dot8(w + static_cast<std::size_t>(i) * nin, in, nin);
                apply_activation(s.act, out, s.out_size());
                break;
            }
            default:
                break;
        }
    }
}

// Backward pass; ws.grad[last] must hold dL/d(output). Accumulates weight
// gradients into grad_w.
void backward_pass(const NetworkModel& model, Workspace& ws, double* grad_w) {
    const auto& layers = model.layers;
    for (std::size_t l = layers.size() - 1; l >= 1; --l) {
        const LayerSpec& s = layers[l];
        double* g = ws.grad[l].data();
        activation_backward(s.act, ws.act[l].data(), g, s.out_size());
        double* gin = ws.grad[l - 1].data();
        switch (s.kind) {
            case LayerSpec::Kind::Conv: {
                const std::size_t patch = static_cast<std::size_t>(s.in_c) * s.kernel * s.kernel;
                const std::size_t npos = static_cast<std::size_t>(s.out_h) * s.out_w;
                const double* w = model.weights.data() + s.weight_offset;
                double* gw = grad_w + s.weight_offset;
                double* gbias = gw + static_cast<std::size_t>(s.out_c) * patch;
                std::fill(ws.dcol[l].begin(), ws.dcol[l].end(), 0.0);
                for (int oc = 0; oc < s.out_c; ++oc) {
                    const double* grow = g + static_cast<std::size_t>(oc) * npos;
                    double sum = 0.0;
                    for (std::size_t p = 0; p < npos; ++p) sum += grow[p];
                    gbias[oc] += sum;
                    double* gwrow = gw + static_cast<std::size_t>(oc) * patch;
                    const double* wrow = w + static_cast<std::size_t>(oc) * patch;
                    for (std::size_t r = 0; r < patch; ++r) {
                        gwrow[r] += dot8(grow, ws.col[l].data() + r * npos, npos);
                        axpy(ws.dcol[l].data() + r * npos, wrow[r], grow, npos);
                    }
                }
                std::fill(ws.grad[l - 1].begin(), ws.grad[l - 1].end(), 0.0);
                col2im_add(s, ws.dcol[l].data(), gin);
                break;
            }
            case LayerSpec::Kind::MaxPool:
                std::fill(ws.grad[l - 1].begin(), ws.grad[l - 1].end(), 0.0);
                for (std::size_t o = 0; o < s.out_size(); ++o) gin[ws.argmax[l][o]] += g[o];
                break;
            case LayerSpec::Kind::Flatten:
                std::copy(ws.grad[l].begin(), ws.grad[l].end(), ws.grad[l - 1].begin());
                break;
            case LayerSpec::Kind::Dense: {
                const std::size_t nin = ws.act[l - 1].size();
                const double* w = model.weights.data() + s.weight_offset;
                double* gw = grad_w + s.weight_offset;
                double* gbias = gw + static_cast<std::size_t>(s.out_c) * nin;
                const double* in = ws.act[l - 1].data();
                std::fill(ws.grad[l - 1].begin(), ws.grad[l - 1].end(), 0.0);
                for (int i = 0; i < s.out_c; ++i) {
                    gbias[i] += g[i];
                    axpy(gw + static_cast<std::size_t>(i) * nin, g[i], in, nin);
                    axpy(gin, g[i], w + static_cast<std::size_t>(i) * nin, nin);
                }
                break;
            }
            default:
                break;
        }
    }
}

void fill_input(const NetworkModel& model, Workspace& ws, const PowerProfile2D& profile) {
    const LayerSpec& in = model.layers.front();
    if (profile.values.rows() != static_cast<std::size_t>(in.out_h) ||
        profile.values.cols() != static_cast<std::size_t>(in.out_w) || in.out_c != 1)
        throw ShapeError("forward: profile shape does not match the network input");
    const double inv = 1.0 / model.input_std;
    const auto& src = profile.values.data();
    for (std::size_t i = 0; i < src.size(); ++i)
        ws.act[0][i] = (src[i] - model.input_mean) * inv;
}

// MSE on normalized outputs; fills ws.grad[last] with dL/d(output).
double loss_and_output_grad(const NetworkModel& model, Workspace& ws,
                            const std::vector<double>& target_norm) {
    const std::size_t m = model.num_outputs();
    const double* y = ws.act.back().data();
    double* g = ws.grad.back().data();
    double loss = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        const double d = y[j] - target_norm[j];
        loss += d * d;
        g[j] = 2.0 * d / static_cast<double>(m);
    }
    return loss / static_cast<double>(m);
}

std::vector<double> normalized_target(const NetworkModel& model,
                                      const std::vector<double>& powers_w) {
    std::vector<double> t(powers_w.size());
    for (std::size_t j = 0; j < t.size(); ++j) t[j] = powers_w[j] / model.output_scale[j];
    return t;
}

}  // namespace

std::string NetworkModel::descriptor() const {
    std::string out;
    for (const auto& s : layers) {
        switch (s.kind) {
            case LayerSpec::Kind::Input:
                out += "input " + std::to_string(s.out_c) + "x" + std::to_string(s.out_h) + "x" +
                       std::to_string(s.out_w) + "\n";
                break;
            case LayerSpec::Kind::Conv:
                out += "conv " + std::to_string(s.out_c) + " " + std::to_string(s.kernel) + "x" +
                       std::to_string(s.kernel) + " " + act_name(s.act) + "\n";
                break;
            case LayerSpec::Kind::MaxPool:
                out += "maxpool " + std::to_string(s.kernel) + "\n";
                break;
            case LayerSpec::Kind::Flatten:
                out += "flatten\n";
                break;
            case LayerSpec::Kind::Dense:
                out += "dense " + std::to_string(s.out_c) + " " + act_name(s.act) + "\n";
                break;
        }
    }
    return out;
}

std::string default_descriptor(std::size_t channels, std::size_t z_points) {
    std::string out = "input 1x" + std::to_string(channels) + "x" + std::to_string(z_points) + "\n";
    out += "conv 16 3x3 relu\n";
    out += "maxpool 2\n";
    out += "conv 32 3x3 relu\n";
    out += "maxpool 2\n";
    out += "flatten\n";
    out += "dense 128 relu\n";
    out += "dense 4 logistic\n";
    return out;
}

NetworkModel make_network(const std::string& descriptor, std::vector<double> output_scale,
                          uint64_t seed) {
    NetworkModel model;
    model.layers = parse_descriptor(descriptor);
    model.output_scale = std::move(output_scale);
    if (model.num_outputs() != model.output_scale.size())
        throw std::invalid_argument("make_network: output_scale size does not match the head");
    for (double s : model.output_scale)
        if (!(s > 0)) throw std::invalid_argument("make_network: output_scale must be positive");
    model.weights.assign(total_weights(model.layers), 0.0);

    Rng rng(seed);
    for (const auto& s : model.layers) {
        if (s.weight_count == 0) continue;
        std::size_t fan_in = 0;
        std::size_t kernel_weights = 0;
        if (s.kind == LayerSpec::Kind::Conv) {
            fan_in = static_cast<std::size_t>(s.in_c) * s.kernel * s.kernel;
            kernel_weights = static_cast<std::size_t>(s.out_c) * fan_in;
        } else {
            fan_in = static_cast<std::size_t>(s.in_c) * s.in_h * s.in_w;
            kernel_weights = static_cast<std::size_t>(s.out_c) * fan_in;
        }
        // He init for ReLU layers, Xavier for the bounded head; biases zero.
        const double std_dev = s.act == Act::Relu ? std::sqrt(2.0 / static_cast<double>(fan_in))
                                                  : std::sqrt(1.0 / static_cast<double>(fan_in));
        for (std::size_t i = 0; i < kernel_weights; ++i)
            model.weights[s.weight_offset + i] = std_dev * rng.gaussian();
    }
    return model;
}

std::vector<double> forward(const NetworkModel& model, const PowerProfile2D& profile) {
    Workspace ws(model);
    fill_input(model, ws, profile);
    forward_pass(model, ws);
    std::vector<double> out(model.num_outputs());
    for (std::size_t j = 0; j < out.size(); ++j)
        out[j] = ws.act.back()[j] * model.output_scale[j];
    return out;
}

TrainHistory train(NetworkModel& model, const Dataset& ds, const TrainConfig& tc,
                   std::size_t train_size) {
    tc.validate();
    std::vector<uint32_t> train_idx = ds.train_idx;
    if (train_size > 0 && train_size < train_idx.size()) train_idx.resize(train_size);
    if (train_idx.empty() || ds.val_idx.empty())
        throw std::invalid_argument("train: dataset needs nonempty train and val splits");

    // Global input statistics over the training profiles.
    double sum = 0.0;
    std::size_t count = 0;
    for (uint32_t i : train_idx) {
        for (double v : ds.samples[i].profile.values.data()) sum += v;
        count += ds.samples[i].profile.values.data().size();
    }
    const double mean = sum / static_cast<double>(count);
    double var = 0.0;
    for (uint32_t i : train_idx)
        for (double v : ds.samples[i].profile.values.data()) var += (v - mean) * (v - mean);
    var /= static_cast<double>(count);
    model.input_mean = mean;
    model.input_std = var > 0 ? std::sqrt(var) : 1.0;

    Workspace ws(model);
    const std::size_t nw = model.weights.size();
    std::vector<double> grad(nw, 0.0), adam_m(nw, 0.0), adam_v(nw, 0.0);
    std::vector<double> best_weights = model.weights;

    TrainHistory history;
    history.best_val = std::numeric_limits<double>::infinity();
    int epochs_since_best = 0;
    long adam_t = 0;

    std::vector<uint32_t> order(train_idx);
    const std::size_t bsz = static_cast<std::size_t>(tc.batch_size);

    auto val_metric = [&]() {
        double total = 0.0;
        for (uint32_t i : ds.val_idx) {
            fill_input(model, ws, ds.samples[i].profile);
            forward_pass(model, ws);
            const auto t = normalized_target(model, ds.samples[i].powers_w);
            double m = 0.0;
            for (std::size_t j = 0; j < t.size(); ++j) {
                const double d = ws.act.back()[j] - t[j];
                m += tc.val_metric == "mae" ? std::abs(d) : d * d;
            }
            total += m / static_cast<double>(t.size());
        }
        return total / static_cast<double>(ds.val_idx.size());
    };

    for (int epoch = 0; epoch < tc.max_epochs; ++epoch) {
        // Seeded epoch shuffle.
        Rng shuffle_rng(child_seed(tc.seed, static_cast<uint64_t>(epoch) + 1));
        for (std::size_t i = order.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(shuffle_rng.below(i));
            std::swap(order[i - 1], order[j]);
        }

        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += bsz) {
            const std::size_t stop = std::min(start + bsz, order.size());
            std::fill(grad.begin(), grad.end(), 0.0);
            for (std::size_t b = start; b < stop; ++b) {
                const Sample& s = ds.samples[order[b]];
                fill_input(model, ws, s.profile);
                forward_pass(model, ws);
                loss_sum += loss_and_output_grad(model, ws, normalized_target(model, s.powers_w));
                backward_pass(model, ws, grad.data());
            }
            const double inv_batch = 1.0 / static_cast<double>(stop - start);
            ++adam_t;
            const double c1 = 1.0 - std::pow(tc.adam_beta1, static_cast<double>(adam_t));
            const double c2 = 1.0 - std::pow(tc.adam_beta2, static_cast<double>(adam_t));
            for (std::size_t i = 0; i < nw; ++i) {
                const double g = grad[i] * inv_batch;
                adam_m[i] = tc.adam_beta1 * adam_m[i] + (1.0 - tc.adam_beta1) * g;
                adam_v[i] = tc.adam_beta2 * adam_v[i] + (1.0 - tc.adam_beta2) * g * g;
                model.weights[i] -=
                    tc.learning_rate * (adam_m[i] / c1) / (std::sqrt(adam_v[i] / c2) + tc.adam_eps);
            }
        }
        const double train_loss = loss_sum / static_cast<double>(order.size());
        const double val = val_metric();
        if (!std::isfinite(train_loss) || !std::isfinite(val))
            throw NumericError("training diverged at epoch " + std::to_string(epoch));
        history.train_loss.push_back(train_loss);
        history.val_metric.push_back(val);

        if (val < history.best_val) {
            history.best_val = val;
            history.best_epoch = epoch;
            best_weights = model.weights;
            epochs_since_best = 0;
        } else if (++epochs_since_best >= tc.patience) {
            break;
        }
    }
    model.weights = std::move(best_weights);
    return history;
}

double grad_check(const NetworkModel& model, const Sample& sample, double epsilon_scale,
                  uint64_t seed, int probes) {
    NetworkModel probe = model;  // local copy; weights get perturbed
    Workspace ws(probe);
    const auto target = normalized_target(probe, sample.powers_w);

    auto loss_only = [&]() {
        fill_input(probe, ws, sample.profile);
        forward_pass(probe, ws);
        const double* y = ws.act.back().data();
        double loss = 0.0;
        for (std::size_t j = 0; j < target.size(); ++j) {
            const double d = y[j] - target[j];
            loss += d * d;
        }
        return loss / static_cast<double>(target.size());
    };

    // Analytic gradient.
    std::vector<double> grad(probe.weights.size(), 0.0);
    fill_input(probe, ws, sample.profile);
    forward_pass(probe, ws);
    loss_and_output_grad(probe, ws, target);
    backward_pass(probe, ws, grad.data());

    std::vector<const LayerSpec*> with_weights;
    for (const auto& s : probe.layers)
        if (s.weight_count > 0) with_weights.push_back(&s);

    Rng rng(seed);
    double worst = 0.0;
    int done = 0;
    while (done < probes) {
        for (const LayerSpec* s : with_weights) {
            const std::size_t idx = s->weight_offset + rng.below(s->weight_count);
            const double w0 = probe.weights[idx];
            const double eps = epsilon_scale * std::max(std::abs(w0), 1e-2);
            probe.weights[idx] = w0 + eps;
            const double lp = loss_only();
            probe.weights[idx] = w0 - eps;
            const double lm = loss_only();
            probe.weights[idx] = w0;
            const double numeric = (lp - lm) / (2.0 * eps);
            const double denom = std::max({std::abs(grad[idx]), std::abs(numeric), 1e-6});
            worst = std::max(worst, std::abs(grad[idx] - numeric) / denom);
            ++done;
        }
    }
    return worst;
}

std::vector<double> r2_score(const std::vector<std::vector<double>>& predicted,
                             const std::vector<std::vector<double>>& truth) {
    if (predicted.size() != truth.size() || truth.size() < 2)
        throw std::invalid_argument("r2_score: need equally sized lists with at least 2 entries");
    const std::size_t np = truth[0].size();
    std::vector<double> r2(np);
    for (std::size_t j = 0; j < np; ++j) {
        double mean = 0.0;
        for (const auto& t : truth) mean += t[j];
        mean /= static_cast<double>(truth.size());
        double ss_res = 0.0, ss_tot = 0.0;
        for (std::size_t i = 0; i < truth.size(); ++i) {
            ss_res += (predicted[i][j] - truth[i][j]) * (predicted[i][j] - truth[i][j]);
            ss_tot += (truth[i][j] - mean) * (truth[i][j] - mean);
        }
        if (ss_tot <= 0.0)
            throw std::invalid_argument("r2_score: truth variance is zero for pump " +
                                        std::to_string(j + 1));
        r2[j] = 1.0 - ss_res / ss_tot;
    }
    return r2;
}

EvalReport evaluate_model(const NetworkModel& model, const Dataset& ds, const Plant& plant,
                          uint64_t seed, bool noisy, int workers) {
    if (ds.test_idx.empty()) throw std::invalid_argument("evaluate: test split is empty");
    const std::size_t nt = ds.test_idx.size();
    EvalReport report;
    report.predicted.resize(nt);
    report.truth.resize(nt);
    report.mae_list_db.resize(nt);
    parallel_for(nt, workers, [&](std::size_t i) {
        const Sample& s = ds.samples[ds.test_idx[i]];
        report.predicted[i] = forward(model, s.profile);
        report.truth[i] = s.powers_w;
        std::optional<uint64_t> noise_seed;
        if (noisy) noise_seed = child_seed(seed, i);
        const PowerProfile2D achieved = plant.apply_powers(report.predicted[i], noise_seed);
        report.mae_list_db[i] = mae(s.profile, achieved);
    });
    report.r2 = r2_score(report.predicted, report.truth);
    double mu = 0.0;
    for (double v : report.mae_list_db) mu += v;
    mu /= static_cast<double>(nt);
    double var = 0.0;
    for (double v : report.mae_list_db) var += (v - mu) * (v - mu);
    report.mu_db = mu;
    report.sigma_db = std::sqrt(var / static_cast<double>(nt));
    return report;
}

namespace {
constexpr char kCkptMagic[4] = {'R', 'N', 'N', '1'};
constexpr uint16_t kCkptVersion = 1;
}  // namespace

void save_checkpoint(const NetworkModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint file: " + path);
    out.write(kCkptMagic, 4);
    io::write_u16(out, kCkptVersion);
    const std::string desc = model.descriptor();
    io::write_u32(out, static_cast<uint32_t>(desc.size()));
    out.write(desc.data(), static_cast<std::streamsize>(desc.size()));
    io::write_f64(out, model.input_mean);
    io::write_f64(out, model.input_std);
    io::write_u16(out, static_cast<uint16_t>(model.output_scale.size()));
    io::write_f64s(out, model.output_scale);
    io::write_u64(out, model.weights.size());
    io::write_f64s(out, model.weights);
    if (!out) throw std::runtime_error("short write to checkpoint file: " + path);
}

NetworkModel load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint file: " + path);
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kCkptMagic, 4) != 0)
        throw FormatError("checkpoint file has wrong magic: " + path);
    if (io::read_u16(in, path) != kCkptVersion)
        throw FormatError("checkpoint file has unsupported version: " + path);
    const uint32_t desc_len = io::read_u32(in, path);
    const std::string desc = io::read_bytes(in, desc_len, path);
    NetworkModel model;
    model.layers = parse_descriptor(desc);
    model.input_mean = io::read_f64(in, path);
    model.input_std = io::read_f64(in, path);
    const uint16_t ns = io::read_u16(in, path);
    model.output_scale = io::read_f64s(in, ns, path);
    const uint64_t nw = io::read_u64(in, path);
    if (nw != total_weights(model.layers))
        throw FormatError("checkpoint weight count does not match its architecture: " + path);
    if (model.output_scale.size() != model.num_outputs())
        throw FormatError("checkpoint output scale does not match its architecture: " + path);
    model.weights = io::read_f64s(in, nw, path);
    return model;
}

}  // namespace raman2d
