#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "routerdc/types.hpp"

namespace routerdc {

// Synthetic fixture families:
//   experts    - one expert LLM per task (score 1.0), everyone else ~0.2
//   co_experts - two co-expert LLMs per task, pool size 2 * tasks
//   costed     - an expensive expert and a cheap near-expert over three
//                request-size subpopulations, with per-cell costs
enum class SynthMode { experts, co_experts, costed };

std::string to_string(SynthMode m);
SynthMode synth_mode_from_string(const std::string& s);

struct SynthConfig {
    SynthMode mode = SynthMode::experts;
    int tasks = 3;
    int llms = 4;
    int per_task = 200;       // training queries per task
    int test_per_task = 60;
    int samples_per_cell = 20;  // M; 20 keeps the +-0.05 score noise exact
    std::uint64_t seed = 7;

    void validate() const;
};

struct SynthDataset {
    std::vector<LLMDescriptor> pool;
    std::vector<Query> train_queries;
    std::vector<Query> test_queries;
    std::vector<GenerationRecord> train_generations;
    std::vector<GenerationRecord> test_generations;
    ScoreMatrix train_scores;  // the generating ("true") matrix
    ScoreMatrix test_scores;
};

// Deterministic given the config; the generations reproduce the true score
// matrices exactly under open-ended scoring.
SynthDataset synthesize(const SynthConfig& config);

// Writes pool.jsonl, queries_{train,test}.jsonl, generations_{train,test}.jsonl
// and scores_{train,test}.jsonl into the directory.
void write_synth(const SynthDataset& dataset, const std::string& out_dir);

}  // namespace routerdc
