#include "routerdc/eval.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <json.hpp>

#include "routerdc/encoder.hpp"
#include "routerdc/router.hpp"
#include "routerdc/scoring.hpp"

namespace routerdc {

namespace {

using nlohmann::json;

std::string task_of(const Query& q) { return q.task_label.value_or(""); }

AccuracyReport accumulate_accuracy(const std::vector<Query>& queries,
                                   const std::vector<bool>& correct) {
    AccuracyReport report;
    std::map<std::string, std::pair<double, double>> per_task;  // hits, totals
    double hits = 0.0;
    for (std::size_t i = 0; i < queries.size(); ++i) {
        auto& bucket = per_task[task_of(queries[i])];
        bucket.second += 1.0;
        if (correct[i]) {
            bucket.first += 1.0;
            hits += 1.0;
        }
    }
    double sum = 0.0;
    for (const auto& [task, bucket] : per_task) {
        report.per_task[task] = bucket.first / bucket.second;
        sum += report.per_task[task];
    }
    report.average = per_task.empty() ? 0.0 : sum / static_cast<double>(per_task.size());
    report.overall = queries.empty() ? 0.0 : hits / static_cast<double>(queries.size());
    return report;
}

TaskLlmMatrix make_task_llm_matrix(const std::vector<Query>& queries,
                                   const std::vector<std::string>& llms) {
    TaskLlmMatrix m;
    std::set<std::string> tasks;
    for (const Query& q : queries) tasks.insert(task_of(q));
    m.tasks.assign(tasks.begin(), tasks.end());
    m.llms = llms;
    m.values.assign(m.tasks.size() * m.llms.size(), 0.0);
    return m;
}

std::size_t task_row(const TaskLlmMatrix& m, const Query& q) {
    auto it = std::lower_bound(m.tasks.begin(), m.tasks.end(), task_of(q));
    return static_cast<std::size_t>(it - m.tasks.begin());
}

json matrix_to_json(const TaskLlmMatrix& m) {
    return json{{"tasks", m.tasks}, {"llms", m.llms}, {"values", m.values}};
}

TaskLlmMatrix matrix_from_json(const json& j) {
    TaskLlmMatrix m;
    m.tasks = j.at("tasks").get<std::vector<std::string>>();
    m.llms = j.at("llms").get<std::vector<std::string>>();
    m.values = j.at("values").get<std::vector<double>>();
    if (m.values.size() != m.tasks.size() * m.llms.size())
        throw ValidationError("matrix shape mismatch in report");
    return m;
}

void write_matrix_tsv(const TaskLlmMatrix& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << "task";
    for (const auto& llm : m.llms) out << "\t" << llm;
    out << "\n";
    for (std::size_t t = 0; t < m.tasks.size(); ++t) {
        out << m.tasks[t];
        for (std::size_t l = 0; l < m.llms.size(); ++l) out << "\t" << m.at(t, l);
        out << "\n";
    }
}

}  // namespace

bool correctness_bit(const Query& query, double score) {
    if (query.kind == QueryKind::open) return score >= 0.5;
    return score > 0.0;
}

AccuracyReport routing_accuracy(const RouterParameters& params, const std::vector<Query>& queries,
                                const ScoreMatrix& scores, const std::set<std::string>& exclude) {
    std::vector<bool> correct(queries.size(), false);
    for (std::size_t i = 0; i < queries.size(); ++i) {
        std::size_t row = scores.row_of(queries[i].id);
        RouteResult r = route(queries[i].text, params, exclude);
        std::size_t col = scores.col_of(r.chosen_llm);
        correct[i] = correctness_bit(queries[i], scores.score(row, col));
    }
    return accumulate_accuracy(queries, correct);
}

AccuracyReport oracle_accuracy(const std::vector<Query>& queries, const ScoreMatrix& scores) {
    std::vector<bool> correct(queries.size(), false);
    for (std::size_t i = 0; i < queries.size(); ++i) {
        std::size_t row = scores.row_of(queries[i].id);
        std::size_t best = 0;
        for (std::size_t t = 1; t < scores.num_llms(); ++t)
            if (scores.score(row, t) > scores.score(row, best)) best = t;
        correct[i] = correctness_bit(queries[i], scores.score(row, best));
    }
    return accumulate_accuracy(queries, correct);
}

AccuracyReport single_llm_accuracy(const std::string& llm_name, const std::vector<Query>& queries,
                                   const ScoreMatrix& scores) {
    std::size_t col = scores.col_of(llm_name);
    std::vector<bool> correct(queries.size(), false);
    for (std::size_t i = 0; i < queries.size(); ++i)
        correct[i] = correctness_bit(queries[i], scores.score(scores.row_of(queries[i].id), col));
    return accumulate_accuracy(queries, correct);
}

AccuracyReport voting_baseline(const std::vector<Query>& queries,
                               const std::vector<GenerationRecord>& generations,
                               const std::vector<std::string>& llm_names, ExtractionRule rule) {
    // First sampled record per (query, llm).
    std::map<std::pair<std::string, std::string>, const GenerationRecord*> first;
    for (const GenerationRecord& r : generations) {
        auto key = std::make_pair(r.query_id, r.llm_name);
        auto it = first.find(key);
        if (it == first.end() || r.sample_index < it->second->sample_index) first[key] = &r;
    }

    std::vector<bool> correct(queries.size(), false);
    for (std::size_t i = 0; i < queries.size(); ++i) {
        const Query& q = queries[i];
        // Answers in LLM order; the tie-break picks the earliest LLM's answer.
        std::vector<std::string> answers;
        for (const std::string& llm : llm_names) {
            auto it = first.find({q.id, llm});
            if (it == first.end())
                throw ValidationError("voting baseline: no generation for (" + q.id + ", " + llm + ")");
            const GenerationRecord& r = *it->second;
            if (q.kind == QueryKind::open) {
                if (!r.output_text)
                    throw ValidationError("voting baseline: open query '" + q.id +
                                          "' has a record without output_text");
                answers.push_back(extract_answer(*r.output_text, rule));
            } else {
                if (!r.option_probs)
                    throw ValidationError("voting baseline: multiple_choice query '" + q.id +
                                          "' has a record without option_probs");
                std::string best_label;
                double best = -1.0;
                for (const std::string& label : q.options) {
                    auto pit = r.option_probs->find(label);
                    double p = pit == r.option_probs->end() ? 0.0 : pit->second;
                    if (p > best) {
                        best = p;
                        best_label = label;
                    }
                }
                answers.push_back(best_label);
            }
        }
        std::map<std::string, int> counts;
        for (const std::string& a : answers) ++counts[a];
        std::string winner;
        int best_count = 0;
        for (const std::string& a : answers) {  // LLM order resolves ties
            if (counts[a] > best_count) {
                best_count = counts[a];
                winner = a;
            }
        }
        if (q.kind == QueryKind::open) {
            std::string gold = extract_answer(q.gold, rule);
            correct[i] = !winner.empty() && !gold.empty() && winner == gold;
        } else {
            correct[i] = winner == q.gold;
        }
    }
    return accumulate_accuracy(queries, correct);
}

TaskLlmMatrix assignment_matrix(const RouterParameters& params, const std::vector<Query>& queries) {
    TaskLlmMatrix m = make_task_llm_matrix(queries, params.llm_names);
    std::vector<double> row_totals(m.tasks.size(), 0.0);
    for (const Query& q : queries) {
        RouteResult r = route(q.text, params);
        std::size_t t = task_row(m, q);
        std::size_t l = params.llm_index(r.chosen_llm);
        m.values[t * m.llms.size() + l] += 1.0;
        row_totals[t] += 1.0;
    }
    for (std::size_t t = 0; t < m.tasks.size(); ++t)
        for (std::size_t l = 0; l < m.llms.size(); ++l)
            if (row_totals[t] > 0.0) m.values[t * m.llms.size() + l] /= row_totals[t];
    return m;
}

TaskLlmMatrix similarity_heatmap(const RouterParameters& params, const std::vector<Query>& queries) {
    TaskLlmMatrix m = make_task_llm_matrix(queries, params.llm_names);
    std::vector<double> row_totals(m.tasks.size(), 0.0);
    for (const Query& q : queries) {
        std::vector<double> e = encode(q.text, params);
        std::vector<double> sims = similarities(e, params);
        std::size_t t = task_row(m, q);
        for (std::size_t l = 0; l < m.llms.size(); ++l) m.values[t * m.llms.size() + l] += sims[l];
        row_totals[t] += 1.0;
    }
    for (std::size_t t = 0; t < m.tasks.size(); ++t)
        for (std::size_t l = 0; l < m.llms.size(); ++l)
            if (row_totals[t] > 0.0) m.values[t * m.llms.size() + l] /= row_totals[t];
    return m;
}

std::vector<CostCurvePoint> cost_accuracy_curve(
    const std::vector<std::pair<double, const RouterParameters*>>& variants,
    const std::vector<Query>& queries, const ScoreMatrix& scores) {
    if (!scores.has_costs())
        throw ValidationError("cost-accuracy curve needs a score matrix with costs");
    std::vector<CostCurvePoint> points;
    for (const auto& [weight, params] : variants) {
        CostCurvePoint pt;
        pt.cost_weight = weight;
        std::vector<bool> correct(queries.size(), false);
        double total_cost = 0.0;
        for (std::size_t i = 0; i < queries.size(); ++i) {
            std::size_t row = scores.row_of(queries[i].id);
            RouteResult r = route(queries[i].text, *params);
            std::size_t col = scores.col_of(r.chosen_llm);
            total_cost += scores.cost(row, col);
            correct[i] = correctness_bit(queries[i], scores.score(row, col));
        }
        pt.mean_cost = queries.empty() ? 0.0 : total_cost / static_cast<double>(queries.size());
        pt.accuracy = accumulate_accuracy(queries, correct).overall;
        points.push_back(pt);
    }
    std::sort(points.begin(), points.end(),
              [](const CostCurvePoint& a, const CostCurvePoint& b) { return a.mean_cost < b.mean_cost; });
    return points;
}

void emit_report(const EvalReport& report, const std::string& dir) {
    if (report.methods.empty())
        throw ValidationError("refusing to emit an empty report (no methods evaluated)");
    for (const auto& [method, acc] : report.methods) {
        if (acc.per_task.empty())
            throw ValidationError("method '" + method + "' has no task results");
    }
    std::filesystem::create_directories(dir);

    json doc;
    doc["config_hash"] = report.config_hash;
    doc["checkpoint_id"] = report.checkpoint_id;
    json methods = json::object();
    for (const auto& [method, acc] : report.methods) {
        methods[method] = json{{"per_task", acc.per_task}, {"average", acc.average}, {"overall", acc.overall}};
    }
    doc["methods"] = methods;
    json assignments = json::object();
    for (const auto& [method, m] : report.assignments) assignments[method] = matrix_to_json(m);
    doc["assignments"] = assignments;
    json heatmaps = json::object();
    for (const auto& [method, m] : report.heatmaps) heatmaps[method] = matrix_to_json(m);
    doc["heatmaps"] = heatmaps;
    json curve = json::array();
    for (const auto& pt : report.cost_curve)
        curve.push_back(json{{"cost_weight", pt.cost_weight}, {"mean_cost", pt.mean_cost}, {"accuracy", pt.accuracy}});
    doc["cost_curve"] = curve;

    {
        std::ofstream out(dir + "/report.json", std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write report.json");
        out << doc.dump(2) << "\n";
    }

    // Human-readable tables.
    std::set<std::string> tasks;
    for (const auto& [method, acc] : report.methods)
        for (const auto& [task, v] : acc.per_task) tasks.insert(task);
    std::ostringstream txt;
    txt << "Accuracy by task (fraction correct)\n";
    txt << std::left << std::setw(28) << "method";
    for (const auto& task : tasks) txt << std::setw(14) << (task.empty() ? "(unlabeled)" : task);
    txt << std::setw(14) << "avg" << "\n";
    for (const auto& [method, acc] : report.methods) {
        txt << std::left << std::setw(28) << method;
        for (const auto& task : tasks) {
            auto it = acc.per_task.find(task);
            if (it == acc.per_task.end())
                txt << std::setw(14) << "-";
            else
                txt << std::setw(14) << std::fixed << std::setprecision(4) << it->second;
        }
        txt << std::setw(14) << std::fixed << std::setprecision(4) << acc.average << "\n";
    }
    if (!report.cost_curve.empty()) {
        txt << "\nCost / accuracy curve\n";
        txt << std::left << std::setw(14) << "cost_weight" << std::setw(14) << "mean_cost"
            << std::setw(14) << "accuracy" << "\n";
        for (const auto& pt : report.cost_curve)
            txt << std::left << std::setw(14) << pt.cost_weight << std::setw(14) << pt.mean_cost
                << std::setw(14) << pt.accuracy << "\n";
    }
    txt << "\nconfig_hash: " << report.config_hash << "\ncheckpoint_id: " << report.checkpoint_id << "\n";
    {
        std::ofstream out(dir + "/report.txt", std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write report.txt");
        out << txt.str();
    }

    for (const auto& [method, m] : report.assignments)
        write_matrix_tsv(m, dir + "/assignment_" + method + ".tsv");
    for (const auto& [method, m] : report.heatmaps)
        write_matrix_tsv(m, dir + "/heatmap_" + method + ".tsv");
    if (!report.cost_curve.empty()) {
        std::ofstream out(dir + "/cost_curve.tsv", std::ios::binary | std::ios::trunc);
        out << "cost_weight\tmean_cost\taccuracy\n";
        for (const auto& pt : report.cost_curve)
            out << pt.cost_weight << "\t" << pt.mean_cost << "\t" << pt.accuracy << "\n";
    }
}

EvalReport read_report(const std::string& json_path) {
    std::ifstream in(json_path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + json_path + "'");
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed report: ") + e.what());
    }
    EvalReport report;
    report.config_hash = doc.at("config_hash").get<std::string>();
    report.checkpoint_id = doc.at("checkpoint_id").get<std::string>();
    for (const auto& [method, j] : doc.at("methods").items()) {
        AccuracyReport acc;
        acc.per_task = j.at("per_task").get<std::map<std::string, double>>();
        acc.average = j.at("average").get<double>();
        acc.overall = j.at("overall").get<double>();
        report.methods[method] = std::move(acc);
    }
    for (const auto& [method, j] : doc.at("assignments").items())
        report.assignments[method] = matrix_from_json(j);
    for (const auto& [method, j] : doc.at("heatmaps").items())
        report.heatmaps[method] = matrix_from_json(j);
    for (const auto& j : doc.at("cost_curve")) {
        CostCurvePoint pt;
        pt.cost_weight = j.at("cost_weight").get<double>();
        pt.mean_cost = j.at("mean_cost").get<double>();
        pt.accuracy = j.at("accuracy").get<double>();
        report.cost_curve.push_back(pt);
    }
    return report;
}

}  // namespace routerdc
