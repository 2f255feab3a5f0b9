#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace routerdc {

// Thrown by readers and constructors when an input violates an invariant.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class QueryKind { open, multiple_choice };

std::string to_string(QueryKind kind);
QueryKind query_kind_from_string(const std::string& s);

// One routing unit. `options` holds the answer labels of a multiple-choice
// question (the full option text, if any, lives inside `text`).
struct Query {
    std::string id;
    std::string text;
    QueryKind kind = QueryKind::open;
    std::vector<std::string> options;
    std::string gold;
    std::optional<std::string> task_label;
    std::optional<int> cluster_id;

    void validate() const;
};

struct LLMDescriptor {
    std::string name;
    std::optional<std::string> endpoint;
    std::optional<double> cost_per_call;
    bool available = true;
};

void validate_pool(const std::vector<LLMDescriptor>& pool);

// Dense per-(query, LLM) suitability scores in [0,1] plus optional costs.
class ScoreMatrix {
public:
    ScoreMatrix() = default;
    ScoreMatrix(std::vector<std::string> query_ids, std::vector<std::string> llm_names,
                std::vector<double> scores, std::vector<double> costs = {});

    std::size_t num_queries() const { return query_ids_.size(); }
    std::size_t num_llms() const { return llm_names_.size(); }
    bool has_costs() const { return !costs_.empty(); }

    const std::vector<std::string>& query_ids() const { return query_ids_; }
    const std::vector<std::string>& llm_names() const { return llm_names_; }

    double score(std::size_t row, std::size_t col) const { return scores_[row * llm_names_.size() + col]; }
    double cost(std::size_t row, std::size_t col) const { return costs_[row * llm_names_.size() + col]; }
    const double* score_row(std::size_t row) const { return scores_.data() + row * llm_names_.size(); }
    const double* cost_row(std::size_t row) const { return costs_.data() + row * llm_names_.size(); }

    // Index of a query id; throws ValidationError if absent.
    std::size_t row_of(const std::string& query_id) const;
    std::size_t col_of(const std::string& llm_name) const;

    const std::vector<double>& raw_scores() const { return scores_; }
    const std::vector<double>& raw_costs() const { return costs_; }

private:
    std::vector<std::string> query_ids_;
    std::vector<std::string> llm_names_;
    std::vector<double> scores_;  // row-major num_queries x num_llms
    std::vector<double> costs_;   // empty or same shape as scores_
    std::map<std::string, std::size_t> query_index_;
    std::map<std::string, std::size_t> llm_index_;
};

// One sampled LLM output (open-ended) or the per-option probabilities of a
// multiple-choice answer. Exactly one of output_text / option_probs is set.
struct GenerationRecord {
    std::string query_id;
    std::string llm_name;
    int sample_index = 0;
    std::optional<std::string> output_text;
    std::optional<std::map<std::string, double>> option_probs;

    bool is_open() const { return output_text.has_value(); }
};

struct IngestConfig {
    int samples_per_cell = 10;  // M
    double temperature = 0.2;
    int max_concurrent_requests = 4;
    int retry_limit = 2;
    int request_timeout_ms = 30000;
    std::string open_prompt_template = "{text}";
    std::string choice_prompt_template = "{text}\nAnswer: {option}";

    void validate() const;
};

enum class ExtractionRule { delimiter_suffix, exact_match, numeric_match };

std::string to_string(ExtractionRule rule);
ExtractionRule extraction_rule_from_string(const std::string& s);

struct ScoringConfig {
    bool punish_wrong_choice = true;
    double cost_weight = 0.0;
    ExtractionRule answer_extraction_rule = ExtractionRule::delimiter_suffix;
};

enum class Reducer { tsne, pca, none };
enum class GroupSource { clustering, task_identity };

std::string to_string(Reducer r);
Reducer reducer_from_string(const std::string& s);
std::string to_string(GroupSource g);
GroupSource group_source_from_string(const std::string& s);

struct ClusterConfig {
    int num_groups = 5;  // N
    Reducer reducer = Reducer::tsne;
    int reduced_dim = 2;
    double tsne_perplexity = 30.0;
    int tsne_iters = 1000;
    double tsne_learning_rate = 200.0;
    double tsne_early_exaggeration = 12.0;
    int tsne_exaggeration_iters = 250;
    int kmeans_max_iters = 100;
    double kmeans_tol = 1e-6;
    std::uint64_t seed = 0;
    GroupSource group_source = GroupSource::clustering;

    void validate() const;
};

enum class LossMode { routerdc, kl_baseline, cosine_classifier, kl_plus_sample_sample };
enum class KlDirection { router_first, target_first };

std::string to_string(LossMode m);
LossMode loss_mode_from_string(const std::string& s);
std::string to_string(KlDirection d);
KlDirection kl_direction_from_string(const std::string& s);

struct TrainConfig {
    int k_plus = 3;
    int k_minus = 3;
    int h_out_group = 3;  // H
    double lambda = 1.0;
    int num_groups = 5;  // N, mirrored from clustering for bookkeeping
    int batch_size = 64;
    double learning_rate = 5e-5;
    double weight_decay = 0.01;
    int steps = 1000;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    std::uint64_t seed = 0;
    LossMode loss_mode = LossMode::routerdc;
    KlDirection kl_direction = KlDirection::router_first;
    // Weight of the training-time cost adjustment applied when the score
    // matrix carries costs; 0 disables it. Mirrors ScoringConfig::cost_weight.
    double cost_weight = 0.0;

    // Checks the invariants that do not depend on the pool size.
    void validate() const;
    // Full check once the number of LLMs is known.
    void validate(std::size_t num_llms) const;
};

}  // namespace routerdc
