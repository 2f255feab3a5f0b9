#include "routerdc/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>

#include "routerdc/optimizer.hpp"

namespace routerdc {

TrainResult train(const std::vector<Query>& dataset, const ScoreMatrix& scores,
                  const EncoderShape& shape, const FeaturizerConfig& featurizer,
                  const std::vector<std::string>& llm_names, const TrainConfig& config,
                  const StepObserver& observer) {
    config.validate(llm_names.size());
    if (dataset.empty()) throw ValidationError("training set is empty");
    if (llm_names != scores.llm_names())
        throw ValidationError("LLM name order does not match the score matrix columns");

    const bool wants_sample_sample =
        config.lambda > 0.0 &&
        (config.loss_mode == LossMode::routerdc || config.loss_mode == LossMode::kl_plus_sample_sample);
    for (const Query& q : dataset) {
        scores.row_of(q.id);  // throws when a score row is missing
        if (wants_sample_sample && !q.cluster_id)
            throw ValidationError("query '" + q.id + "' has no cluster id; run clustering first");
    }

    Rng rng(config.seed);
    RouterParameters params = init_router_parameters(shape, featurizer, llm_names, config.seed);
    AdamW optimizer(total_parameter_count(params), config);

    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    std::size_t cursor = 0;

    TrainResult result;
    result.loss_log.reserve(static_cast<std::size_t>(config.steps));

    const auto t_start = std::chrono::steady_clock::now();
    for (int step = 0; step < config.steps; ++step) {
        if (cursor >= order.size()) {
            rng.shuffle(order);
            cursor = 0;
        }
        std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(config.batch_size),
                                                 order.size() - cursor);
        std::vector<const Query*> batch;
        batch.reserve(take);
        for (std::size_t i = 0; i < take; ++i) batch.push_back(&dataset[order[cursor + i]]);
        cursor += take;

        BatchLossResult loss = total_loss(batch, params, config, scores, rng);
        if (!std::isfinite(loss.value))
            throw std::runtime_error("non-finite loss at step " + std::to_string(step));
        optimizer.step(params, loss.grads);

        result.loss_log.push_back({step, loss.value});
        if (observer) observer(step, loss.value, params);
    }
    const auto t_end = std::chrono::steady_clock::now();
    const double wall_s = std::chrono::duration<double>(t_end - t_start).count();
    std::cerr << "train: " << config.steps << " steps in " << wall_s << " s ("
              << (config.steps > 0 ? wall_s / config.steps * 1e3 : 0.0) << " ms/step)\n";

    result.checkpoint.format_version = kCheckpointFormatVersion;
    result.checkpoint.params = std::move(params);
    result.checkpoint.train_config = config;
    result.checkpoint.rng_seed = config.seed;
    return result;
}

void write_loss_log(const std::vector<LossLogEntry>& log, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    char buf[64];
    for (const LossLogEntry& e : log) {
        std::snprintf(buf, sizeof(buf), "%.17g", e.loss);
        out << e.step << "\t" << buf << "\n";
    }
}

}  // namespace routerdc
