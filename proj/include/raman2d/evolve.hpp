#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "raman2d/config.hpp"
#include "raman2d/matrix.hpp"
#include "raman2d/plant.hpp"
#include "raman2d/profile.hpp"
#include "raman2d/rng.hpp"

namespace raman2d {

enum class DeInit { CnnAssisted, Random };

// Candidate cost; eval_index is a stable identifier used to derive
// per-evaluation noise seeds, so results do not depend on evaluation
// timing or worker count.
using CostFn = std::function<double(const std::vector<double>& candidate, uint64_t eval_index)>;

struct DeRun {
    std::vector<double> best_powers_w;
    double best_mae_db = 0.0;
    std::vector<double> history_db;  // best-so-far cost per iteration, non-increasing
    uint64_t evaluations = 0;        // optimization cost calls (excludes report re-evaluation)
    std::string init_mode;
};

// Warm-started or uniform initial population, NP x dim, clipped to
// [0, bounds].
Matrix init_population(DeInit mode, const std::vector<double>* warm_start,
                       const std::vector<double>& bounds, int population_size, double sigma_frac,
                       Rng& rng);

// One DE/rand/1/bin generation with greedy selection; trials are clipped
// to [0, bounds]. Trial costs may be evaluated concurrently; selection is
// applied synchronously after all trials are scored.
void de_step(Matrix& population, std::vector<double>& costs, const std::vector<double>& bounds,
             const DeConfig& cfg, Rng& rng, const CostFn& cost_fn, uint64_t eval_base,
             int workers = 1);

using DeLogger = std::function<void(int iteration, double best_db,
                                    const std::vector<double>& best_powers)>;

// Full fine-tune loop against the plant with MAE cost. Cost evaluations
// use the noisy measurement chain when noisy is set; the returned best is
// re-evaluated noiselessly (for warm starts the initial prediction is
// included in that final comparison).
DeRun finetune(const PowerProfile2D& target, const Plant& plant, const DeConfig& cfg,
               DeInit init_mode, const std::vector<double>* cnn_prediction, bool noisy,
               int workers = 1, const DeLogger& logger = nullptr);

}  // namespace raman2d
