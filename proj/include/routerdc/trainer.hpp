#pragma once

#include <functional>
#include <string>
#include <vector>

#include "routerdc/checkpoint.hpp"
#include "routerdc/losses.hpp"
#include "routerdc/types.hpp"

namespace routerdc {

struct LossLogEntry {
    int step = 0;
    double loss = 0.0;
};

struct TrainResult {
    Checkpoint checkpoint;
    std::vector<LossLogEntry> loss_log;
};

// Invoked after each optimizer step with the current parameters; must not
// mutate anything the trainer owns.
using StepObserver = std::function<void(int step, double loss, const RouterParameters& params)>;

// Algorithm: seeded epoch shuffling, mini-batches without replacement, the
// configured loss, one AdamW update per step. Every query needs a cluster id
// when the sample-sample term is active, and a row in the score matrix.
// Deterministic: the same inputs and seed reproduce the checkpoint bit-exactly.
TrainResult train(const std::vector<Query>& dataset, const ScoreMatrix& scores,
                  const EncoderShape& shape, const FeaturizerConfig& featurizer,
                  const std::vector<std::string>& llm_names, const TrainConfig& config,
                  const StepObserver& observer = nullptr);

// Two-column loss log, one line per step.
void write_loss_log(const std::vector<LossLogEntry>& log, const std::string& path);

}  // namespace routerdc
