#include "raman2d/evolve.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "raman2d/parallel.hpp"

namespace raman2d {

namespace {

double clip(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

}  // namespace

Matrix init_population(DeInit mode, const std::vector<double>* warm_start,
                       const std::vector<double>& bounds, int population_size, double sigma_frac,
                       Rng& rng) {
    if (population_size < 4)
        throw std::invalid_argument("init_population: population size must be at least 4");
    const std::size_t dim = bounds.size();
    Matrix pop(population_size, dim);
    if (mode == DeInit::CnnAssisted) {
        if (!warm_start) throw std::invalid_argument("init_population: warm start vector missing");
        if (warm_start->size() != dim)
            throw std::invalid_argument("init_population: warm start dimension mismatch");
        for (std::size_t j = 0; j < dim; ++j) {
            if ((*warm_start)[j] < 0.0 || (*warm_start)[j] > bounds[j])
                throw std::invalid_argument("init_population: warm start outside bounds");
            pop(0, j) = (*warm_start)[j];
        }
        for (int i = 1; i < population_size; ++i)
            for (std::size_t j = 0; j < dim; ++j)
                pop(i, j) = clip((*warm_start)[j] + sigma_frac * bounds[j] * rng.gaussian(), 0.0,
                                 bounds[j]);
    } else {
        for (int i = 0; i < population_size; ++i)
            for (std::size_t j = 0; j < dim; ++j) pop(i, j) = rng.uniform(0.0, bounds[j]);
    }
    return pop;
}

void de_step(Matrix& population, std::vector<double>& costs, const std::vector<double>& bounds,
             const DeConfig& cfg, Rng& rng, const CostFn& cost_fn, uint64_t eval_base,
             int workers) {
    const std::size_t np = population.rows();
    const std::size_t dim = population.cols();
    if (np < 4) throw std::invalid_argument("de_step: population size must be at least 4");
    if (costs.size() != np) throw std::invalid_argument("de_step: costs misaligned with population");
    if (bounds.size() != dim) throw std::invalid_argument("de_step: bounds dimension mismatch");

    // Trial generation is serial so the RNG stream is consumed in a fixed
    // order; only the cost evaluations run concurrently.
    Matrix trials(np, dim);
    for (std::size_t i = 0; i < np; ++i) {
        std::size_t r1, r2, r3;
        do r1 = rng.below(np); while (r1 == i);
        do r2 = rng.below(np); while (r2 == i || r2 == r1);
        do r3 = rng.below(np); while (r3 == i || r3 == r1 || r3 == r2);
        const std::size_t j_rand = rng.below(dim);
        for (std::size_t j = 0; j < dim; ++j) {
            const bool cross = rng.uniform01() < cfg.crossover_cr || j == j_rand;
            double v = population(i, j);
            if (cross)
                v = clip(population(r1, j) + cfg.weight_f * (population(r2, j) - population(r3, j)),
                         0.0, bounds[j]);
            trials(i, j) = v;
        }
    }

    std::vector<double> trial_costs(np);
    std::vector<std::vector<double>> candidates(np);
    for (std::size_t i = 0; i < np; ++i)
        candidates[i].assign(trials.row(i), trials.row(i) + dim);
    parallel_for(np, workers, [&](std::size_t i) {
        trial_costs[i] = cost_fn(candidates[i], eval_base + i);
    });

    for (std::size_t i = 0; i < np; ++i) {
        if (trial_costs[i] <= costs[i]) {
            for (std::size_t j = 0; j < dim; ++j) population(i, j) = trials(i, j);
            costs[i] = trial_costs[i];
        }
    }
}

DeRun finetune(const PowerProfile2D& target, const Plant& plant, const DeConfig& cfg,
               DeInit init_mode, const std::vector<double>* cnn_prediction, bool noisy,
               int workers, const DeLogger& logger) {
    cfg.validate();
    const std::vector<double>& bounds = plant.plant_config().pump_p_max_w;
    const std::size_t np = static_cast<std::size_t>(cfg.population_size);

    DeRun run;
    run.init_mode = init_mode == DeInit::CnnAssisted ? "cnn-assisted" : "random";

    CostFn cost_fn = [&](const std::vector<double>& candidate, uint64_t eval_index) {
        std::optional<uint64_t> noise_seed;
        if (noisy) noise_seed = child_seed(cfg.seed, eval_index);
        return mae(target, plant.apply_powers(candidate, noise_seed));
    };

    Rng rng(cfg.seed);
    Matrix pop = init_population(init_mode, cnn_prediction, bounds, cfg.population_size,
                                 cfg.init_sigma_frac, rng);

    std::vector<double> costs(np);
    {
        std::vector<std::vector<double>> members(np);
        for (std::size_t i = 0; i < np; ++i)
            members[i].assign(pop.row(i), pop.row(i) + pop.cols());
        parallel_for(np, workers, [&](std::size_t i) { costs[i] = cost_fn(members[i], i); });
    }
    run.evaluations = np;

    auto best_index = [&]() {
        std::size_t best = 0;
        for (std::size_t i = 1; i < np; ++i)
            if (costs[i] < costs[best]) best = i;
        return best;
    };

    std::size_t bi = best_index();
    std::vector<double> best_member(pop.row(bi), pop.row(bi) + pop.cols());
    double best_cost = costs[bi];
    run.history_db.push_back(best_cost);
    if (logger) logger(0, best_cost, best_member);

    // Convergence is checked after each generation, so at least one
    // generation always runs.
    for (int iter = 1; iter <= cfg.max_iterations; ++iter) {
        de_step(pop, costs, bounds, cfg, rng, cost_fn, run.evaluations, workers);
        run.evaluations += np;
        bi = best_index();
        if (costs[bi] < best_cost) {
            best_cost = costs[bi];
            best_member.assign(pop.row(bi), pop.row(bi) + pop.cols());
        }
        run.history_db.push_back(best_cost);
        if (logger) logger(iter, best_cost, best_member);
        if (best_cost <= cfg.mae_stop_db) break;
    }

    // Report on a reproducible noiseless basis. The warm-start point joins
    // the comparison so an assisted run never reports worse than its
    // initialization.
    double final_mae = mae(target, plant.apply_powers(best_member));
    run.best_powers_w = best_member;
    if (init_mode == DeInit::CnnAssisted && cnn_prediction) {
        const double init_mae = mae(target, plant.apply_powers(*cnn_prediction));
        if (init_mae < final_mae) {
            final_mae = init_mae;
            run.best_powers_w = *cnn_prediction;
        }
    }
    run.best_mae_db = final_mae;
    return run;
}

}  // namespace raman2d
