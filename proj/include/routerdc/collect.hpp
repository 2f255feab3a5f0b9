#pragma once

#include <string>
#include <vector>

#include "routerdc/types.hpp"

namespace routerdc {

struct FailedCell {
    std::string query_id;
    std::string llm_name;
    std::string reason;
};

struct CollectResult {
    std::vector<GenerationRecord> records;  // sorted by (query_id, llm, sample_index)
    std::vector<FailedCell> failures;       // per-cell failures, run continues
};

// Gathers generations from OpenAI-compatible completion endpoints: M sampled
// outputs per open (query, LLM) cell, one option_probs record per
// multiple-choice cell (from per-option echoed logprobs). At most
// max_concurrent_requests requests run at once. Completed cells append to
// journal_path immediately; the sorted final record set is returned (and the
// journal rewritten sorted) when the run finishes. A bearer token is read from
// ROUTERDC_API_KEY, falling back to OPENAI_API_KEY.
CollectResult collect_generations(const std::vector<LLMDescriptor>& pool,
                                  const std::vector<Query>& queries, const IngestConfig& config,
                                  const std::string& journal_path);

}  // namespace routerdc
