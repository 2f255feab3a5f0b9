#pragma once

#include <span>
#include <vector>

#include "routerdc/encoder.hpp"
#include "routerdc/params.hpp"
#include "routerdc/rng.hpp"
#include "routerdc/types.hpp"

namespace routerdc {

// Positive / negative LLM index sets for one query. Positives are ordered by
// descending score, negatives by ascending score (ties by ascending index).
struct SelectionSets {
    std::vector<std::size_t> positives;
    std::vector<std::size_t> negatives;
};

// Top-K+ scores form the positives; the bottom-K- scores strictly below 0.5
// (excluding positives) form the negatives, possibly fewer than K- or none.
SelectionSets build_selection_sets(std::span<const double> score_row, int k_plus, int k_minus);

// ---- losses on raw similarity values -------------------------------------
// These carry the exact formulas and their derivatives; the model-level
// wrappers below route gradients through the encoder and the LLM embeddings.

struct SimLossResult {
    double value = 0.0;
    std::vector<double> d_positions;  // d(loss)/d(positive sims)
    std::vector<double> d_negatives;  // d(loss)/d(negative sims)
};

// Sum over positives of -log( e^{s+} / (e^{s+} + sum_j e^{s-_j}) ).
// Exactly zero (with zero gradients) when there are no negatives.
SimLossResult sample_llm_loss_from_sims(std::span<const double> positive_sims,
                                        std::span<const double> negative_sims);

// Single-positive contrastive term used by the sample-sample loss.
SimLossResult contrastive_sim_loss(double positive_sim, std::span<const double> negative_sims);

struct SimVecLossResult {
    double value = 0.0;
    std::vector<double> d_sims;
};

// KL between the routing distribution softmax(sims) and softmax(target_scores).
// router_first matches the written formula order; target_first is the reverse.
SimVecLossResult kl_loss_from_sims(std::span<const double> sims, std::span<const double> target_scores,
                                   KlDirection direction);

// Cross-entropy of softmax(sims) against a one-hot label.
SimVecLossResult cross_entropy_from_sims(std::span<const double> sims, std::size_t label);

// ---- model-level losses ----------------------------------------------------
// Each accumulates d/d(embedding) into the EncodeCache(s) and d/d(k_t) into
// the gradient buffer; run encode_backward afterwards to reach the head
// weights. Gradients flow only to the k's named in the selection sets.

double sample_llm_loss(EncodeCache& query, const RouterParameters& params, const SelectionSets& sets,
                       GradientBuffer& grads);

// Returns weight * loss and accumulates weight-scaled gradients, so one call
// realizes the lambda-weighted term of the joint objective.
double sample_sample_loss(EncodeCache& anchor, EncodeCache& in_group,
                          std::span<EncodeCache*> out_group, double weight = 1.0);

double kl_baseline_loss(EncodeCache& query, const RouterParameters& params,
                        std::span<const double> score_row, GradientBuffer& grads,
                        KlDirection direction = KlDirection::router_first);

double cosine_classifier_loss(EncodeCache& query, const RouterParameters& params,
                              std::span<const double> score_row, GradientBuffer& grads);

// ---- batch objective -------------------------------------------------------

// Fixed peer choices for one batch; positions index into the batch.
struct PeerAssignments {
    // in_group[i] == -1 when the batch holds no same-cluster peer for i.
    std::vector<int> in_group;
    std::vector<std::vector<int>> out_group;
};

// Uniform draws from the mini-batch: one in-group peer and up to H out-group
// peers per element.
PeerAssignments sample_peer_assignments(const std::vector<const Query*>& batch, int h_out_group,
                                        Rng& rng);

struct BatchLossResult {
    double value = 0.0;
    GradientBuffer grads;
};

// Sum over the batch of the configured loss plus lambda times the
// sample-sample term, with gradients for all parameters. Every query needs a
// cluster id (when lambda > 0) and a score row.
BatchLossResult total_loss(const std::vector<const Query*>& batch, const RouterParameters& params,
                           const TrainConfig& config, const ScoreMatrix& scores,
                           const PeerAssignments& peers);

// Convenience overload matching the training loop: draws peer assignments
// from `rng` and evaluates.
BatchLossResult total_loss(const std::vector<const Query*>& batch, const RouterParameters& params,
                           const TrainConfig& config, const ScoreMatrix& scores, Rng& rng);

// Training-time score row with the optional cost adjustment applied.
std::vector<double> adjusted_score_row(const ScoreMatrix& scores, std::size_t row,
                                       double cost_weight);

}  // namespace routerdc
