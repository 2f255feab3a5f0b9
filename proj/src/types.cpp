#include "routerdc/types.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace routerdc {

std::string to_string(QueryKind kind) {
    return kind == QueryKind::open ? "open" : "multiple_choice";
}

QueryKind query_kind_from_string(const std::string& s) {
    if (s == "open") return QueryKind::open;
    if (s == "multiple_choice") return QueryKind::multiple_choice;
    throw ValidationError("unknown query kind: " + s);
}

void Query::validate() const {
    if (id.empty()) throw ValidationError("query id must be non-empty");
    if (kind == QueryKind::multiple_choice) {
        if (options.empty())
            throw ValidationError("multiple_choice query '" + id + "' has no options");
        std::set<std::string> labels(options.begin(), options.end());
        if (labels.size() != options.size())
            throw ValidationError("query '" + id + "' has duplicate option labels");
        if (!labels.count(gold))
            throw ValidationError("query '" + id + "' gold '" + gold + "' is not an option label");
    } else if (!options.empty()) {
        throw ValidationError("open query '" + id + "' must not carry options");
    }
}

void validate_pool(const std::vector<LLMDescriptor>& pool) {
    std::set<std::string> names;
    for (const auto& llm : pool) {
        if (llm.name.empty()) throw ValidationError("LLM name must be non-empty");
        if (!names.insert(llm.name).second)
            throw ValidationError("duplicate LLM name '" + llm.name + "' in pool");
        if (llm.cost_per_call && (*llm.cost_per_call < 0.0 || !std::isfinite(*llm.cost_per_call)))
            throw ValidationError("LLM '" + llm.name + "' cost_per_call must be finite and >= 0");
    }
}

ScoreMatrix::ScoreMatrix(std::vector<std::string> query_ids, std::vector<std::string> llm_names,
                         std::vector<double> scores, std::vector<double> costs)
    : query_ids_(std::move(query_ids)),
      llm_names_(std::move(llm_names)),
      scores_(std::move(scores)),
      costs_(std::move(costs)) {
    const std::size_t n = query_ids_.size();
    const std::size_t t = llm_names_.size();
    if (scores_.size() != n * t)
        throw ValidationError("score matrix shape mismatch: " + std::to_string(scores_.size()) +
                              " values for " + std::to_string(n) + "x" + std::to_string(t));
    if (!costs_.empty() && costs_.size() != n * t)
        throw ValidationError("cost matrix shape mismatch");
    for (double s : scores_) {
        if (!std::isfinite(s)) throw ValidationError("score matrix contains a non-finite value");
        if (s < 0.0 || s > 1.0)
            throw ValidationError("score " + std::to_string(s) + " outside [0,1]");
    }
    for (double c : costs_) {
        if (!std::isfinite(c)) throw ValidationError("cost matrix contains a non-finite value");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!query_index_.emplace(query_ids_[i], i).second)
            throw ValidationError("duplicate query id '" + query_ids_[i] + "' in score matrix");
    }
    for (std::size_t j = 0; j < t; ++j) {
        if (!llm_index_.emplace(llm_names_[j], j).second)
            throw ValidationError("duplicate LLM name '" + llm_names_[j] + "' in score matrix");
    }
}

std::size_t ScoreMatrix::row_of(const std::string& query_id) const {
    auto it = query_index_.find(query_id);
    if (it == query_index_.end())
        throw ValidationError("query id '" + query_id + "' not present in score matrix");
    return it->second;
}

std::size_t ScoreMatrix::col_of(const std::string& llm_name) const {
    auto it = llm_index_.find(llm_name);
    if (it == llm_index_.end())
        throw ValidationError("LLM '" + llm_name + "' not present in score matrix");
    return it->second;
}

void IngestConfig::validate() const {
    if (samples_per_cell < 1) throw ValidationError("samples_per_cell (M) must be >= 1");
    if (temperature < 0.0) throw ValidationError("temperature must be >= 0");
    if (max_concurrent_requests < 1) throw ValidationError("max_concurrent_requests must be >= 1");
    if (retry_limit < 0) throw ValidationError("retry_limit must be >= 0");
}

std::string to_string(ExtractionRule rule) {
    switch (rule) {
        case ExtractionRule::delimiter_suffix: return "delimiter_suffix";
        case ExtractionRule::exact_match: return "exact_match";
        case ExtractionRule::numeric_match: return "numeric_match";
    }
    return "delimiter_suffix";
}

ExtractionRule extraction_rule_from_string(const std::string& s) {
    if (s == "delimiter_suffix") return ExtractionRule::delimiter_suffix;
    if (s == "exact_match") return ExtractionRule::exact_match;
    if (s == "numeric_match") return ExtractionRule::numeric_match;
    throw ValidationError("unknown extraction rule: " + s);
}

std::string to_string(Reducer r) {
    switch (r) {
        case Reducer::tsne: return "tsne";
        case Reducer::pca: return "pca";
        case Reducer::none: return "none";
    }
    return "tsne";
}

Reducer reducer_from_string(const std::string& s) {
    if (s == "tsne") return Reducer::tsne;
    if (s == "pca") return Reducer::pca;
    if (s == "none") return Reducer::none;
    throw ValidationError("unknown reducer: " + s);
}

std::string to_string(GroupSource g) {
    return g == GroupSource::clustering ? "clustering" : "task_identity";
}

GroupSource group_source_from_string(const std::string& s) {
    if (s == "clustering") return GroupSource::clustering;
    if (s == "task_identity") return GroupSource::task_identity;
    throw ValidationError("unknown group source: " + s);
}

void ClusterConfig::validate() const {
    if (num_groups < 2) throw ValidationError("number of groups N must be >= 2");
    if (reduced_dim < 1) throw ValidationError("reduced_dim must be >= 1");
    if (tsne_perplexity <= 0.0) throw ValidationError("tsne_perplexity must be > 0");
    if (kmeans_max_iters < 1) throw ValidationError("kmeans_max_iters must be >= 1");
    if (kmeans_tol < 0.0) throw ValidationError("kmeans_tol must be >= 0");
}

std::string to_string(LossMode m) {
    switch (m) {
        case LossMode::routerdc: return "routerdc";
        case LossMode::kl_baseline: return "kl_baseline";
        case LossMode::cosine_classifier: return "cosine_classifier";
        case LossMode::kl_plus_sample_sample: return "kl_plus_sample_sample";
    }
    return "routerdc";
}

LossMode loss_mode_from_string(const std::string& s) {
    if (s == "routerdc") return LossMode::routerdc;
    if (s == "kl_baseline") return LossMode::kl_baseline;
    if (s == "cosine_classifier") return LossMode::cosine_classifier;
    if (s == "kl_plus_sample_sample") return LossMode::kl_plus_sample_sample;
    throw ValidationError("unknown loss mode: " + s);
}

std::string to_string(KlDirection d) {
    return d == KlDirection::router_first ? "router_first" : "target_first";
}

KlDirection kl_direction_from_string(const std::string& s) {
    if (s == "router_first") return KlDirection::router_first;
    if (s == "target_first") return KlDirection::target_first;
    throw ValidationError("unknown KL direction: " + s);
}

void TrainConfig::validate() const {
    if (k_plus < 1) throw ValidationError("K+ must be >= 1");
    if (k_minus < 0) throw ValidationError("K- must be >= 0");
    if (h_out_group < 0) throw ValidationError("H must be >= 0");
    if (lambda < 0.0) throw ValidationError("lambda must be >= 0");
    if (batch_size < 1) throw ValidationError("batch size must be >= 1");
    if (lambda > 0.0 && batch_size < 2)
        throw ValidationError("batch size must be >= 2 when lambda > 0 (in-group sampling needs peers)");
    if (learning_rate <= 0.0) throw ValidationError("learning rate must be > 0");
    if (weight_decay < 0.0) throw ValidationError("weight decay must be >= 0");
    if (steps < 0) throw ValidationError("steps must be >= 0");
    if (adam_beta1 < 0.0 || adam_beta1 >= 1.0) throw ValidationError("adam_beta1 must be in [0,1)");
    if (adam_beta2 < 0.0 || adam_beta2 >= 1.0) throw ValidationError("adam_beta2 must be in [0,1)");
    if (adam_epsilon <= 0.0) throw ValidationError("adam_epsilon must be > 0");
}

void TrainConfig::validate(std::size_t num_llms) const {
    validate();
    // K+ is capped at T elsewhere; K- is a cap, not a hard bound, so that
    // pools smaller than K+ + K- still train (negatives simply run short).
    if (num_llms == 0) throw ValidationError("LLM pool must be non-empty");
}

}  // namespace routerdc
