#include "raman2d/trace.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "raman2d/errors.hpp"
#include "raman2d/rng.hpp"

namespace raman2d {

namespace {

// Solves the small SPD system A x = b in place (Gaussian elimination with
// partial pivoting); dimensions here are (order + 1) <= window.
std::vector<double> solve_dense(Matrix a, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
        if (std::abs(a(pivot, col)) < 1e-14)
            throw std::invalid_argument("savgol: singular normal equations");
        if (pivot != col) {
            for (std::size_t c = 0; c < n; ++c) std::swap(a(pivot, c), a(col, c));
            std::swap(b[pivot], b[col]);
        }
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a(r, col) / a(col, col);
            for (std::size_t c = col; c < n; ++c) a(r, c) -= f * a(col, c);
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t c = i + 1; c < n; ++c) s -= a(i, c) * x[c];
        x[i] = s / a(i, i);
    }
    return x;
}

}  // namespace

Matrix savgol_projection(int window, int order) {
    if (window <= 0 || window % 2 == 0)
        throw std::invalid_argument("savgol: window must be odd and positive");
    if (order < 0 || order >= window)
        throw std::invalid_argument("savgol: order must satisfy 0 <= order < window");
    const int m = (window - 1) / 2;
    const int nb = order + 1;
    // Design matrix on centered positions t = -m .. m.
    Matrix design(window, nb);
    for (int r = 0; r < window; ++r) {
        double p = 1.0;
        for (int c = 0; c < nb; ++c) {
            design(r, c) = p;
            p *= static_cast<double>(r - m);
        }
    }
    Matrix ata(nb, nb, 0.0);
    for (int i = 0; i < nb; ++i)
        for (int j = 0; j < nb; ++j) {
            double s = 0.0;
            for (int r = 0; r < window; ++r) s += design(r, i) * design(r, j);
            ata(i, j) = s;
        }
    // P = A (A^T A)^-1 A^T, assembled column by column.
    Matrix proj(window, window);
    for (int c = 0; c < window; ++c) {
        std::vector<double> atcol(nb);
        for (int i = 0; i < nb; ++i) atcol[i] = design(c, i);
        const std::vector<double> coeff = solve_dense(ata, atcol);
        for (int r = 0; r < window; ++r) {
            double s = 0.0;
            for (int i = 0; i < nb; ++i) s += design(r, i) * coeff[i];
            proj(r, c) = s;
        }
    }
    return proj;
}

std::vector<double> savgol_smooth(const std::vector<double>& series, int window, int order) {
    if (window <= 0 || window % 2 == 0)
        throw std::invalid_argument("savgol: window must be odd and positive");
    if (order < 0 || order >= window)
        throw std::invalid_argument("savgol: order must be less than window");
    const std::size_t n = series.size();
    if (n < static_cast<std::size_t>(window))
        throw std::invalid_argument("savgol: series shorter than window");

    const Matrix proj = savgol_projection(window, order);
    const int m = (window - 1) / 2;
    std::vector<double> out(n);

    // Leading edge: polynomial fitted over the first window.
    for (int r = 0; r < m; ++r) {
        double s = 0.0;
        for (int c = 0; c < window; ++c) s += proj(r, c) * series[c];
        out[r] = s;
    }
    // Interior: convolution with the center row.
    const double* center = proj.row(m);
    for (std::size_t i = m; i + m < n; ++i) {
        double s = 0.0;
        const double* src = series.data() + (i - m);
        for (int c = 0; c < window; ++c) s += center[c] * src[c];
        out[i] = s;
    }
    // Trailing edge: polynomial fitted over the last window.
    for (int r = m + 1; r < window; ++r) {
        double s = 0.0;
        const double* src = series.data() + (n - window);
        for (int c = 0; c < window; ++c) s += proj(r, c) * src[c];
        out[n - window + r] = s;
    }
    return out;
}

TraceSet emulate_traces(const Matrix& fine_dbm, const std::vector<double>& fine_z_m,
                        const PipelineConfig& cfg, std::optional<uint64_t> seed) {
    cfg.validate();
    if (fine_dbm.cols() != fine_z_m.size() || fine_z_m.size() < 2)
        throw ShapeError("emulate_traces: grid does not match the input matrix");
    const double in_step = fine_z_m[1] - fine_z_m[0];
    // Smooth ODE output may be mildly coarser than the instrument grid;
    // more than 2x coarser cannot be emulated faithfully.
    if (in_step > 2.0 * cfg.otdr_resolution_m + 1e-12)
        throw ResolutionError("emulate_traces: input grid step " + std::to_string(in_step) +
                              " m too coarse for " + std::to_string(cfg.otdr_resolution_m) +
                              " m traces");

    const double span = fine_z_m.back();
    const double res = cfg.otdr_resolution_m;
    const std::size_t npts = static_cast<std::size_t>(std::floor(span / res + 1e-9)) + 1;
    const std::size_t nch = fine_dbm.rows();

    TraceSet traces;
    traces.resolution_m = res;
    traces.span_m = span;
    traces.values_dbm = Matrix(nch, npts);

    const double inv_step = 1.0 / in_step;
    const std::size_t last = fine_z_m.size() - 1;
    for (std::size_t c = 0; c < nch; ++c) {
        const double* src = fine_dbm.row(c);
        double* dst = traces.values_dbm.row(c);
        for (std::size_t i = 0; i < npts; ++i) {
            const double z = static_cast<double>(i) * res;
            double pos = z * inv_step;
            std::size_t k = static_cast<std::size_t>(pos);
            if (k >= last) k = last - 1;
            const double t = pos - static_cast<double>(k);
            dst[i] = src[k] + t * (src[k + 1] - src[k]);
        }
    }
    if (seed) {
        for (std::size_t c = 0; c < nch; ++c) {
            Rng rng(child_seed(*seed, c));
            double* dst = traces.values_dbm.row(c);
            for (std::size_t i = 0; i < npts; ++i) {
                const double z_km = static_cast<double>(i) * res / 1000.0;
                const double sigma = cfg.noise_sigma0_db + cfg.noise_slope_db_per_km * z_km;
                dst[i] += sigma * rng.gaussian();
            }
        }
    }
    return traces;
}

Matrix downsample(const TraceSet& traces, double target_resolution_m) {
    if (target_resolution_m <= traces.resolution_m)
        throw std::invalid_argument("downsample: target resolution must exceed trace resolution");
    const std::size_t npts =
        static_cast<std::size_t>(std::floor(traces.span_m / target_resolution_m + 1e-9)) + 1;
    const double last_sample = traces.z_at(traces.num_points() - 1);
    const double target_span = static_cast<double>(npts - 1) * target_resolution_m;
    if (target_span > last_sample + traces.resolution_m)
        throw std::invalid_argument("downsample: target grid extends beyond the trace span");

    const std::size_t nch = traces.values_dbm.rows();
    Matrix out(nch, npts);
    const double inv_res = 1.0 / traces.resolution_m;
    const std::size_t last = traces.num_points() - 1;
    for (std::size_t c = 0; c < nch; ++c) {
        const double* src = traces.values_dbm.row(c);
        double* dst = out.row(c);
        for (std::size_t i = 0; i < npts; ++i) {
            const double z = static_cast<double>(i) * target_resolution_m;
            double pos = z * inv_res;
            std::size_t k = static_cast<std::size_t>(pos);
            if (k >= last) k = last - 1;  // tail: extrapolate the final segment
            const double t = pos - static_cast<double>(k);
            dst[i] = src[k] + t * (src[k + 1] - src[k]);
        }
    }
    return out;
}

PowerProfile2D measure(const Matrix& fine_dbm, const std::vector<double>& fine_z_m,
                       const std::vector<double>& freq_thz, const PipelineConfig& cfg,
                       std::optional<uint64_t> seed) {
    if (fine_dbm.rows() != freq_thz.size())
        throw ShapeError("measure: channel count does not match frequency grid");
    TraceSet traces = emulate_traces(fine_dbm, fine_z_m, cfg, seed);
    std::vector<double> row(traces.num_points());
    for (std::size_t c = 0; c < traces.values_dbm.rows(); ++c) {
        const double* src = traces.values_dbm.row(c);
        row.assign(src, src + traces.num_points());
        const std::vector<double> smooth = savgol_smooth(row, cfg.sg_window, cfg.sg_order);
        std::copy(smooth.begin(), smooth.end(), traces.values_dbm.row(c));
    }
    PowerProfile2D profile;
    profile.freq_thz = freq_thz;
    profile.values = downsample(traces, cfg.target_resolution_m);
    profile.z_m.resize(profile.values.cols());
    for (std::size_t i = 0; i < profile.z_m.size(); ++i)
        profile.z_m[i] = static_cast<double>(i) * cfg.target_resolution_m;
    return profile;
}

}  // namespace raman2d
