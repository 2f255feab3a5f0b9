#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "routerdc/params.hpp"
#include "routerdc/types.hpp"

namespace routerdc {

// Correctness bit of one (query, LLM) cell of a test score matrix: open-ended
// scores threshold at 0.5 (majority of the M samples), multiple-choice scores
// count as correct when positive.
bool correctness_bit(const Query& query, double score);

struct AccuracyReport {
    std::map<std::string, double> per_task;  // task label -> accuracy
    double average = 0.0;                    // unweighted mean over tasks
    double overall = 0.0;                    // mean over all queries
};

// Accuracy of routing each query with the given parameters, measured against
// the per-LLM correctness recorded in the test matrix. Queries without a task
// label fall into the task "".
AccuracyReport routing_accuracy(const RouterParameters& params, const std::vector<Query>& queries,
                                const ScoreMatrix& scores,
                                const std::set<std::string>& exclude = {});

// Upper bound: route every query to the argmax of its true score row.
AccuracyReport oracle_accuracy(const std::vector<Query>& queries, const ScoreMatrix& scores);

// Degenerate router that always picks one LLM.
AccuracyReport single_llm_accuracy(const std::string& llm_name, const std::vector<Query>& queries,
                                   const ScoreMatrix& scores);

// Majority vote over every LLM's first sampled answer per query, ties broken
// by LLM order.
AccuracyReport voting_baseline(const std::vector<Query>& queries,
                               const std::vector<GenerationRecord>& generations,
                               const std::vector<std::string>& llm_names, ExtractionRule rule);

// Row-stochastic task x LLM matrix of routing fractions.
struct TaskLlmMatrix {
    std::vector<std::string> tasks;
    std::vector<std::string> llms;
    std::vector<double> values;  // row-major tasks x llms

    double at(std::size_t task, std::size_t llm) const { return values[task * llms.size() + llm]; }
};

TaskLlmMatrix assignment_matrix(const RouterParameters& params, const std::vector<Query>& queries);

// Mean cosine similarity between each task's query embeddings and each LLM.
TaskLlmMatrix similarity_heatmap(const RouterParameters& params, const std::vector<Query>& queries);

struct CostCurvePoint {
    double cost_weight = 0.0;
    double mean_cost = 0.0;
    double accuracy = 0.0;
};

// One point per trained variant: mean per-query cost of the routed LLM and
// overall accuracy, sorted by mean cost. The test matrix must carry costs.
std::vector<CostCurvePoint> cost_accuracy_curve(
    const std::vector<std::pair<double, const RouterParameters*>>& variants,
    const std::vector<Query>& queries, const ScoreMatrix& scores);

struct EvalReport {
    // method name -> accuracies
    std::map<std::string, AccuracyReport> methods;
    // method name -> routing fractions (router methods only)
    std::map<std::string, TaskLlmMatrix> assignments;
    std::map<std::string, TaskLlmMatrix> heatmaps;
    std::vector<CostCurvePoint> cost_curve;
    std::string config_hash;
    std::string checkpoint_id;
};

// Writes report.json (machine-readable, round-trips through read_report),
// report.txt (aligned tables), and one TSV per matrix/curve into `dir`.
void emit_report(const EvalReport& report, const std::string& dir);
EvalReport read_report(const std::string& json_path);

}  // namespace routerdc
