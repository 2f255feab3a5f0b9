#include "routerdc/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "routerdc/scoring.hpp"

namespace routerdc {

namespace {

// d(k_t) accumulation helper: cosine backward between a cache embedding and
// one LLM embedding, in double.
void sim_backward_to_llm(EncodeCache& cache, const RouterParameters& params, std::size_t t,
                         double upstream, GradientBuffer& grads) {
    std::vector<double> k(params.shape.embed_dim);
    for (int d = 0; d < params.shape.embed_dim; ++d)
        k[d] = static_cast<double>(params.llm_embeddings[t][d]);
    cosine_backward(cache.embedding, k, upstream, cache.embedding_grad, grads.embeddings[t]);
}

std::vector<double> llm_sims(const EncodeCache& cache, const RouterParameters& params) {
    return similarities(cache.embedding, params);
}

}  // namespace

SelectionSets build_selection_sets(std::span<const double> score_row, int k_plus, int k_minus) {
    const std::size_t t = score_row.size();
    if (t == 0) throw ValidationError("selection sets need a non-empty score row");
    if (k_plus < 1) throw ValidationError("K+ must be >= 1");
    if (k_minus < 0) throw ValidationError("K- must be >= 0");

    std::vector<std::size_t> order(t);
    std::iota(order.begin(), order.end(), 0);

    SelectionSets sets;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (score_row[a] != score_row[b]) return score_row[a] > score_row[b];
        return a < b;
    });
    std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(k_plus), t);
    sets.positives.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take));

    std::vector<bool> is_positive(t, false);
    for (std::size_t idx : sets.positives) is_positive[idx] = true;

    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (score_row[a] != score_row[b]) return score_row[a] < score_row[b];
        return a < b;
    });
    for (std::size_t idx : order) {
        if (sets.negatives.size() == static_cast<std::size_t>(k_minus)) break;
        if (is_positive[idx]) continue;
        if (score_row[idx] < 0.5) sets.negatives.push_back(idx);
    }
    return sets;
}

SimLossResult sample_llm_loss_from_sims(std::span<const double> positive_sims,
                                        std::span<const double> negative_sims) {
    if (positive_sims.empty()) throw ValidationError("sample-LLM loss needs at least one positive");
    SimLossResult r;
    r.d_positions.assign(positive_sims.size(), 0.0);
    r.d_negatives.assign(negative_sims.size(), 0.0);
    if (negative_sims.empty()) return r;  // each term is -log 1 = 0

    for (std::size_t u = 0; u < positive_sims.size(); ++u) {
        double a = positive_sims[u];
        // Stable log(1 + sum_j e^{n_j - a}) with weights for the gradient.
        double shift = 0.0;
        for (double n : negative_sims) shift = std::max(shift, n - a);
        double denom = std::exp(-shift);
        for (double n : negative_sims) denom += std::exp(n - a - shift);
        r.value += shift + std::log(denom);
        double p_pos = std::exp(-shift) / denom;  // e^a / (e^a + sum e^n)
        r.d_positions[u] += p_pos - 1.0;
        for (std::size_t j = 0; j < negative_sims.size(); ++j)
            r.d_negatives[j] += std::exp(negative_sims[j] - a - shift) / denom;
    }
    return r;
}

SimLossResult contrastive_sim_loss(double positive_sim, std::span<const double> negative_sims) {
    double buf[1] = {positive_sim};
    return sample_llm_loss_from_sims(std::span<const double>(buf, 1), negative_sims);
}

SimVecLossResult kl_loss_from_sims(std::span<const double> sims, std::span<const double> target_scores,
                                   KlDirection direction) {
    if (sims.size() != target_scores.size())
        throw ValidationError("KL loss: similarity and score row lengths differ");
    for (double s : target_scores)
        if (!std::isfinite(s)) throw ValidationError("KL loss: non-finite target score");
    std::vector<double> r = softmax(sims);
    std::vector<double> q = softmax(target_scores);

    SimVecLossResult out;
    out.d_sims.assign(sims.size(), 0.0);
    if (direction == KlDirection::router_first) {
        // KL(R || Q) = sum_t R_t ln(R_t / Q_t)
        double kl = 0.0;
        std::vector<double> log_ratio(sims.size());
        for (std::size_t t = 0; t < sims.size(); ++t) {
            log_ratio[t] = std::log(r[t]) - std::log(q[t]);
            kl += r[t] * log_ratio[t];
        }
        out.value = kl;
        for (std::size_t t = 0; t < sims.size(); ++t) out.d_sims[t] = r[t] * (log_ratio[t] - kl);
    } else {
        // KL(Q || R) = sum_t Q_t ln(Q_t / R_t); gradient is R - Q.
        double kl = 0.0;
        for (std::size_t t = 0; t < sims.size(); ++t) kl += q[t] * (std::log(q[t]) - std::log(r[t]));
        out.value = kl;
        for (std::size_t t = 0; t < sims.size(); ++t) out.d_sims[t] = r[t] - q[t];
    }
    return out;
}

SimVecLossResult cross_entropy_from_sims(std::span<const double> sims, std::size_t label) {
    if (label >= sims.size()) throw ValidationError("cross entropy label out of range");
    std::vector<double> p = softmax(sims);
    SimVecLossResult out;
    out.value = -std::log(p[label]);
    out.d_sims.assign(sims.size(), 0.0);
    for (std::size_t t = 0; t < sims.size(); ++t) out.d_sims[t] = p[t] - (t == label ? 1.0 : 0.0);
    return out;
}

double sample_llm_loss(EncodeCache& query, const RouterParameters& params, const SelectionSets& sets,
                       GradientBuffer& grads) {
    if (sets.positives.empty()) throw ValidationError("sample-LLM loss needs a non-empty positive set");
    std::vector<double> k(params.shape.embed_dim);
    auto sim_of = [&](std::size_t t) {
        for (int d = 0; d < params.shape.embed_dim; ++d)
            k[d] = static_cast<double>(params.llm_embeddings[t][d]);
        return cosine_sim(query.embedding, k);
    };
    std::vector<double> pos_sims, neg_sims;
    pos_sims.reserve(sets.positives.size());
    neg_sims.reserve(sets.negatives.size());
    for (std::size_t t : sets.positives) pos_sims.push_back(sim_of(t));
    for (std::size_t t : sets.negatives) neg_sims.push_back(sim_of(t));

    SimLossResult r = sample_llm_loss_from_sims(pos_sims, neg_sims);
    for (std::size_t u = 0; u < sets.positives.size(); ++u)
        if (r.d_positions[u] != 0.0)
            sim_backward_to_llm(query, params, sets.positives[u], r.d_positions[u], grads);
    for (std::size_t j = 0; j < sets.negatives.size(); ++j)
        if (r.d_negatives[j] != 0.0)
            sim_backward_to_llm(query, params, sets.negatives[j], r.d_negatives[j], grads);
    return r.value;
}

double sample_sample_loss(EncodeCache& anchor, EncodeCache& in_group,
                          std::span<EncodeCache*> out_group, double weight) {
    double pos_sim = cosine_sim(anchor.embedding, in_group.embedding);
    std::vector<double> neg_sims;
    neg_sims.reserve(out_group.size());
    for (EncodeCache* neg : out_group) neg_sims.push_back(cosine_sim(anchor.embedding, neg->embedding));

    SimLossResult r = contrastive_sim_loss(pos_sim, neg_sims);
    double up = weight * r.d_positions[0];
    if (up != 0.0)
        cosine_backward(anchor.embedding, in_group.embedding, up, anchor.embedding_grad,
                        in_group.embedding_grad);
    for (std::size_t j = 0; j < out_group.size(); ++j) {
        up = weight * r.d_negatives[j];
        if (up != 0.0)
            cosine_backward(anchor.embedding, out_group[j]->embedding, up, anchor.embedding_grad,
                            out_group[j]->embedding_grad);
    }
    return weight * r.value;
}

double kl_baseline_loss(EncodeCache& query, const RouterParameters& params,
                        std::span<const double> score_row, GradientBuffer& grads,
                        KlDirection direction) {
    std::vector<double> sims = llm_sims(query, params);
    SimVecLossResult r = kl_loss_from_sims(sims, score_row, direction);
    for (std::size_t t = 0; t < sims.size(); ++t)
        if (r.d_sims[t] != 0.0) sim_backward_to_llm(query, params, t, r.d_sims[t], grads);
    return r.value;
}

double cosine_classifier_loss(EncodeCache& query, const RouterParameters& params,
                              std::span<const double> score_row, GradientBuffer& grads) {
    if (params.num_llms() < 2)
        throw ValidationError("cosine classifier needs at least two LLMs");
    std::size_t label = 0;
    for (std::size_t t = 1; t < score_row.size(); ++t)
        if (score_row[t] > score_row[label]) label = t;
    std::vector<double> sims = llm_sims(query, params);
    SimVecLossResult r = cross_entropy_from_sims(sims, label);
    for (std::size_t t = 0; t < sims.size(); ++t)
        if (r.d_sims[t] != 0.0) sim_backward_to_llm(query, params, t, r.d_sims[t], grads);
    return r.value;
}

PeerAssignments sample_peer_assignments(const std::vector<const Query*>& batch, int h_out_group,
                                        Rng& rng) {
    const std::size_t b = batch.size();
    PeerAssignments peers;
    peers.in_group.assign(b, -1);
    peers.out_group.assign(b, {});

    for (std::size_t i = 0; i < b; ++i) {
        if (!batch[i]->cluster_id)
            throw ValidationError("query '" + batch[i]->id + "' is missing a cluster assignment");
    }
    for (std::size_t i = 0; i < b; ++i) {
        int my_group = *batch[i]->cluster_id;
        std::vector<int> in, out;
        for (std::size_t j = 0; j < b; ++j) {
            if (j == i) continue;
            if (*batch[j]->cluster_id == my_group)
                in.push_back(static_cast<int>(j));
            else
                out.push_back(static_cast<int>(j));
        }
        if (!in.empty()) peers.in_group[i] = in[rng.below(in.size())];
        std::size_t want = std::min<std::size_t>(static_cast<std::size_t>(h_out_group), out.size());
        for (std::size_t k = 0; k < want; ++k) {
            std::size_t pick = k + rng.below(out.size() - k);
            std::swap(out[k], out[pick]);
            peers.out_group[i].push_back(out[k]);
        }
    }
    return peers;
}

std::vector<double> adjusted_score_row(const ScoreMatrix& scores, std::size_t row,
                                       double cost_weight) {
    std::vector<double> adjusted(scores.score_row(row), scores.score_row(row) + scores.num_llms());
    if (cost_weight != 0.0 && scores.has_costs()) {
        for (std::size_t t = 0; t < scores.num_llms(); ++t)
            adjusted[t] = apply_cost_adjustment(adjusted[t], -scores.cost(row, t), cost_weight);
    }
    return adjusted;
}

BatchLossResult total_loss(const std::vector<const Query*>& batch, const RouterParameters& params,
                           const TrainConfig& config, const ScoreMatrix& scores,
                           const PeerAssignments& peers) {
    BatchLossResult result{0.0, GradientBuffer(params)};
    if (batch.empty()) return result;
    if (peers.in_group.size() != batch.size() || peers.out_group.size() != batch.size())
        throw ValidationError("peer assignment size does not match the batch");

    std::vector<EncodeCache> caches;
    caches.reserve(batch.size());
    std::vector<std::size_t> rows;
    rows.reserve(batch.size());
    for (const Query* q : batch) {
        rows.push_back(scores.row_of(q->id));
        caches.push_back(encode_with_cache(q->text, params));
    }

    const bool wants_sample_sample =
        config.lambda > 0.0 &&
        (config.loss_mode == LossMode::routerdc || config.loss_mode == LossMode::kl_plus_sample_sample);

    for (std::size_t i = 0; i < batch.size(); ++i) {
        std::vector<double> row = adjusted_score_row(scores, rows[i], config.cost_weight);

        switch (config.loss_mode) {
            case LossMode::routerdc: {
                // A query whose whole score row is zero carries no routing
                // signal; it is skipped (but still serves as a peer above).
                bool all_zero_row =
                    std::all_of(row.begin(), row.end(), [](double s) { return s == 0.0; });
                if (all_zero_row) continue;
                SelectionSets sets = build_selection_sets(row, config.k_plus, config.k_minus);
                result.value += sample_llm_loss(caches[i], params, sets, result.grads);
                break;
            }
            case LossMode::kl_baseline:
            case LossMode::kl_plus_sample_sample:
                result.value +=
                    kl_baseline_loss(caches[i], params, row, result.grads, config.kl_direction);
                break;
            case LossMode::cosine_classifier:
                result.value += cosine_classifier_loss(caches[i], params, row, result.grads);
                break;
        }

        if (wants_sample_sample && peers.in_group[i] >= 0) {
            std::vector<EncodeCache*> negs;
            for (int j : peers.out_group[i]) negs.push_back(&caches[static_cast<std::size_t>(j)]);
            result.value += sample_sample_loss(caches[i], caches[static_cast<std::size_t>(peers.in_group[i])],
                                               negs, config.lambda);
        }
    }

    for (std::size_t i = 0; i < batch.size(); ++i)
        encode_backward(caches[i], params, result.grads.encoder);
    return result;
}

BatchLossResult total_loss(const std::vector<const Query*>& batch, const RouterParameters& params,
                           const TrainConfig& config, const ScoreMatrix& scores, Rng& rng) {
    const bool wants_sample_sample =
        config.lambda > 0.0 &&
        (config.loss_mode == LossMode::routerdc || config.loss_mode == LossMode::kl_plus_sample_sample);
    PeerAssignments peers;
    if (wants_sample_sample) {
        peers = sample_peer_assignments(batch, config.h_out_group, rng);
    } else {
        peers.in_group.assign(batch.size(), -1);
        peers.out_group.assign(batch.size(), {});
    }
    return total_loss(batch, params, config, scores, peers);
}

}  // namespace routerdc
