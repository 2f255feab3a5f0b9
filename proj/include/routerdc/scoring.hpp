#pragma once

#include <map>
#include <string>
#include <vector>

#include "routerdc/types.hpp"

namespace routerdc {

// Answer extraction used by open-ended scoring and the voting baseline.
// Returns the empty string when nothing can be extracted.
std::string extract_answer(const std::string& text, ExtractionRule rule);

// 1 iff the extracted answers match under the rule; unextractable answers
// compare unequal.
int evaluate_open(const std::string& prediction, const std::string& gold, ExtractionRule rule);

// Fraction of the M sampled outputs that are correct. All records must belong
// to (query, one LLM).
double score_open(const Query& query, const std::vector<GenerationRecord>& generations,
                  ExtractionRule rule);

// Normalized gold-option probability if the argmax option is correct, else 0
// (or the normalized gold probability regardless when punishing is disabled).
// Argmax ties break by option order.
double score_multiple_choice(const Query& query, const std::map<std::string, double>& option_probs,
                             const ScoringConfig& config);

// score + cost_weight * cost; training-time only, never used for accuracy.
double apply_cost_adjustment(double score, double cost, double cost_weight);

// Assembles the n x T matrix of suitability scores. Columns default to the
// sorted set of LLM names appearing in the generations; pass a pool to pin the
// column set (and to source per-call costs when cost_weight != 0). Cells with
// no generations score 0 with a warning on stderr.
ScoreMatrix build_score_matrix(const std::vector<Query>& queries,
                               const std::vector<GenerationRecord>& generations,
                               const ScoringConfig& config,
                               const std::vector<LLMDescriptor>& pool = {});

}  // namespace routerdc
