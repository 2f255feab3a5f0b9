#include "routerdc/io.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

namespace routerdc {

namespace {

using nlohmann::json;

[[noreturn]] void line_error(const std::string& path, std::size_t line, const std::string& what) {
    throw ValidationError(path + ":" + std::to_string(line) + ": " + what);
}

// Streams non-empty lines, handing each parsed JSON object to `fn`.
template <typename Fn>
void for_each_record(const std::string& path, Fn&& fn) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            line_error(path, lineno, std::string("malformed JSON: ") + e.what());
        }
        if (!j.is_object()) line_error(path, lineno, "record is not a JSON object");
        fn(j, lineno);
    }
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    return out;
}

json query_to_json(const Query& q) {
    json j{{"id", q.id}, {"text", q.text}, {"kind", to_string(q.kind)}, {"gold", q.gold}};
    if (q.kind == QueryKind::multiple_choice) j["options"] = q.options;
    if (q.task_label) j["task_label"] = *q.task_label;
    if (q.cluster_id) j["cluster_id"] = *q.cluster_id;
    return j;
}

}  // namespace

std::vector<Query> read_queries(const std::string& path) {
    std::vector<Query> queries;
    std::set<std::string> seen;
    for_each_record(path, [&](const json& j, std::size_t lineno) {
        Query q;
        try {
            q.id = j.at("id").get<std::string>();
            q.text = j.at("text").get<std::string>();
            q.kind = query_kind_from_string(j.at("kind").get<std::string>());
            if (j.contains("options")) q.options = j.at("options").get<std::vector<std::string>>();
            q.gold = j.at("gold").get<std::string>();
            if (j.contains("task_label")) q.task_label = j.at("task_label").get<std::string>();
            if (j.contains("cluster_id")) {
                int c = j.at("cluster_id").get<int>();
                if (c < 0) throw ValidationError("cluster_id must be non-negative");
                q.cluster_id = c;
            }
            q.validate();
        } catch (const json::exception& e) {
            line_error(path, lineno, std::string("bad query record: ") + e.what());
        } catch (const ValidationError& e) {
            line_error(path, lineno, e.what());
        }
        if (!seen.insert(q.id).second) line_error(path, lineno, "duplicate query id '" + q.id + "'");
        queries.push_back(std::move(q));
    });
    return queries;
}

void write_queries(const std::vector<Query>& queries, const std::string& path) {
    auto out = open_out(path);
    for (const Query& q : queries) out << query_to_json(q).dump() << "\n";
}

std::vector<GenerationRecord> read_generations(const std::string& path,
                                               const std::vector<Query>& queries) {
    std::map<std::string, const Query*> by_id;
    for (const Query& q : queries) by_id.emplace(q.id, &q);

    std::vector<GenerationRecord> records;
    // (query, llm) -> sample indices seen, for duplicate detection.
    std::map<std::pair<std::string, std::string>, std::set<int>> seen;

    for_each_record(path, [&](const json& j, std::size_t lineno) {
        GenerationRecord r;
        try {
            r.query_id = j.at("query_id").get<std::string>();
            r.llm_name = j.at("llm").get<std::string>();
            r.sample_index = j.value("sample_index", 0);
            if (j.contains("output_text")) r.output_text = j.at("output_text").get<std::string>();
            if (j.contains("option_probs"))
                r.option_probs = j.at("option_probs").get<std::map<std::string, double>>();
        } catch (const json::exception& e) {
            line_error(path, lineno, std::string("bad generation record: ") + e.what());
        }

        if (r.output_text && r.option_probs)
            line_error(path, lineno, "record mixes output_text and option_probs");
        if (!r.output_text && !r.option_probs)
            line_error(path, lineno, "record carries neither output_text nor option_probs");
        if (r.sample_index < 0) line_error(path, lineno, "sample_index must be >= 0");

        auto it = by_id.find(r.query_id);
        if (it == by_id.end())
            line_error(path, lineno, "orphan query_id '" + r.query_id + "' (not in the query set)");
        const Query& q = *it->second;

        if (q.kind == QueryKind::open && r.option_probs)
            line_error(path, lineno, "open query '" + q.id + "' cannot carry option_probs");
        if (q.kind == QueryKind::multiple_choice && r.output_text)
            line_error(path, lineno,
                       "multiple_choice query '" + q.id + "' needs option_probs, not output_text");
        if (r.option_probs) {
            std::set<std::string> labels(q.options.begin(), q.options.end());
            for (const auto& [label, prob] : *r.option_probs) {
                if (!labels.count(label))
                    line_error(path, lineno, "option_probs key '" + label + "' is not an option of '" + q.id + "'");
                if (!std::isfinite(prob) || prob < 0.0)
                    line_error(path, lineno, "probability for option '" + label + "' must be finite and >= 0");
            }
        }

        auto& indices = seen[{r.query_id, r.llm_name}];
        if (!indices.insert(r.sample_index).second)
            line_error(path, lineno, "duplicate sample_index " + std::to_string(r.sample_index) +
                                         " for (" + r.query_id + ", " + r.llm_name + ")");
        records.push_back(std::move(r));
    });

    // Sample indices within each group must form 0..M-1.
    for (const auto& [key, indices] : seen) {
        if (*indices.rbegin() != static_cast<int>(indices.size()) - 1)
            throw ValidationError("generation group (" + key.first + ", " + key.second +
                                  ") has gaps in sample_index");
    }
    return records;
}

void write_generations(const std::vector<GenerationRecord>& records, const std::string& path) {
    auto out = open_out(path);
    for (const GenerationRecord& r : records) {
        json j{{"query_id", r.query_id}, {"llm", r.llm_name}, {"sample_index", r.sample_index}};
        if (r.output_text) j["output_text"] = *r.output_text;
        if (r.option_probs) j["option_probs"] = *r.option_probs;
        out << j.dump() << "\n";
    }
}

void write_score_matrix(const ScoreMatrix& matrix, const std::string& path) {
    auto out = open_out(path);
    out << json{{"llm_names", matrix.llm_names()}}.dump() << "\n";
    for (std::size_t i = 0; i < matrix.num_queries(); ++i) {
        json row{{"query_id", matrix.query_ids()[i]}};
        row["scores"] = std::vector<double>(matrix.score_row(i), matrix.score_row(i) + matrix.num_llms());
        if (matrix.has_costs())
            row["costs"] = std::vector<double>(matrix.cost_row(i), matrix.cost_row(i) + matrix.num_llms());
        out << row.dump() << "\n";
    }
}

ScoreMatrix read_score_matrix(const std::string& path) {
    std::vector<std::string> llm_names;
    std::vector<std::string> query_ids;
    std::vector<double> scores;
    std::vector<double> costs;
    bool header_seen = false;
    bool any_costs = false;

    for_each_record(path, [&](const json& j, std::size_t lineno) {
        if (!header_seen) {
            try {
                llm_names = j.at("llm_names").get<std::vector<std::string>>();
            } catch (const json::exception& e) {
                line_error(path, lineno, std::string("bad header (expected llm_names): ") + e.what());
            }
            if (llm_names.empty()) line_error(path, lineno, "llm_names must be non-empty");
            header_seen = true;
            return;
        }
        try {
            query_ids.push_back(j.at("query_id").get<std::string>());
            auto row = j.at("scores").get<std::vector<double>>();
            if (row.size() != llm_names.size())
                line_error(path, lineno, "row has " + std::to_string(row.size()) + " scores, header names " +
                                             std::to_string(llm_names.size()) + " LLMs");
            for (double s : row) {
                if (!std::isfinite(s) || s < 0.0 || s > 1.0)
                    line_error(path, lineno, "score " + std::to_string(s) + " outside [0,1]");
            }
            scores.insert(scores.end(), row.begin(), row.end());
            if (j.contains("costs")) {
                auto crow = j.at("costs").get<std::vector<double>>();
                if (crow.size() != llm_names.size())
                    line_error(path, lineno, "cost row length mismatch");
                if (!any_costs && query_ids.size() > 1)
                    line_error(path, lineno, "costs must be present on every row or none");
                any_costs = true;
                costs.insert(costs.end(), crow.begin(), crow.end());
            } else if (any_costs) {
                line_error(path, lineno, "costs must be present on every row or none");
            }
        } catch (const json::exception& e) {
            line_error(path, lineno, std::string("bad score row: ") + e.what());
        }
    });

    if (!header_seen) throw ValidationError(path + ": missing header line with llm_names");
    return ScoreMatrix(std::move(query_ids), std::move(llm_names), std::move(scores), std::move(costs));
}

void write_clusters(const std::vector<Query>& queries, const std::string& path) {
    auto out = open_out(path);
    for (const Query& q : queries) {
        if (!q.cluster_id)
            throw ValidationError("query '" + q.id + "' has no cluster assignment to write");
        out << json{{"query_id", q.id}, {"cluster_id", *q.cluster_id}}.dump() << "\n";
    }
}

std::map<std::string, int> read_clusters(const std::string& path) {
    std::map<std::string, int> clusters;
    for_each_record(path, [&](const json& j, std::size_t lineno) {
        try {
            std::string id = j.at("query_id").get<std::string>();
            int c = j.at("cluster_id").get<int>();
            if (c < 0) line_error(path, lineno, "cluster_id must be non-negative");
            if (!clusters.emplace(id, c).second)
                line_error(path, lineno, "duplicate cluster assignment for '" + id + "'");
        } catch (const json::exception& e) {
            line_error(path, lineno, std::string("bad cluster record: ") + e.what());
        }
    });
    return clusters;
}

void apply_clusters(std::vector<Query>& queries, const std::map<std::string, int>& clusters) {
    for (Query& q : queries) {
        auto it = clusters.find(q.id);
        if (it == clusters.end())
            throw ValidationError("query '" + q.id + "' has no cluster assignment");
        q.cluster_id = it->second;
    }
}

std::vector<LLMDescriptor> read_pool(const std::string& path) {
    std::vector<LLMDescriptor> pool;
    for_each_record(path, [&](const json& j, std::size_t lineno) {
        LLMDescriptor d;
        try {
            d.name = j.at("name").get<std::string>();
            if (j.contains("endpoint")) d.endpoint = j.at("endpoint").get<std::string>();
            if (j.contains("cost_per_call")) d.cost_per_call = j.at("cost_per_call").get<double>();
            d.available = j.value("available", true);
        } catch (const json::exception& e) {
            line_error(path, lineno, std::string("bad pool record: ") + e.what());
        }
        pool.push_back(std::move(d));
    });
    validate_pool(pool);
    return pool;
}

void write_pool(const std::vector<LLMDescriptor>& pool, const std::string& path) {
    validate_pool(pool);
    auto out = open_out(path);
    for (const LLMDescriptor& d : pool) {
        json j{{"name", d.name}, {"available", d.available}};
        if (d.endpoint) j["endpoint"] = *d.endpoint;
        if (d.cost_per_call) j["cost_per_call"] = *d.cost_per_call;
        out << j.dump() << "\n";
    }
}

}  // namespace routerdc
