#include "routerdc/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <set>

namespace routerdc {

namespace {

std::string trim(const std::string& s) {
    std::size_t begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    std::size_t end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

std::string strip_commas(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s)
        if (c != ',') out.push_back(c);
    return out;
}

// Last number in the text (optional sign, digits, optional decimal part),
// commas inside digit runs ignored.
std::string last_number(const std::string& text) {
    std::string cleaned = strip_commas(text);
    std::string best;
    std::size_t i = 0;
    while (i < cleaned.size()) {
        char c = cleaned[i];
        bool starts_number = std::isdigit(static_cast<unsigned char>(c)) ||
                             ((c == '-' || c == '+') && i + 1 < cleaned.size() &&
                              std::isdigit(static_cast<unsigned char>(cleaned[i + 1])));
        if (!starts_number) {
            ++i;
            continue;
        }
        std::size_t start = i;
        if (c == '-' || c == '+') ++i;
        while (i < cleaned.size() && std::isdigit(static_cast<unsigned char>(cleaned[i]))) ++i;
        if (i + 1 < cleaned.size() && cleaned[i] == '.' &&
            std::isdigit(static_cast<unsigned char>(cleaned[i + 1]))) {
            ++i;
            while (i < cleaned.size() && std::isdigit(static_cast<unsigned char>(cleaned[i]))) ++i;
        }
        best = cleaned.substr(start, i - start);
    }
    return best;
}

}  // namespace

std::string extract_answer(const std::string& text, ExtractionRule rule) {
    switch (rule) {
        case ExtractionRule::delimiter_suffix: {
            std::size_t pos = text.rfind("####");
            if (pos == std::string::npos) return "";
            return strip_commas(trim(text.substr(pos + 4)));
        }
        case ExtractionRule::exact_match:
            return trim(text);
        case ExtractionRule::numeric_match:
            return last_number(text);
    }
    return "";
}

int evaluate_open(const std::string& prediction, const std::string& gold, ExtractionRule rule) {
    std::string p = extract_answer(prediction, rule);
    std::string g = extract_answer(gold, rule);
    if (p.empty() || g.empty()) return 0;
    if (rule == ExtractionRule::numeric_match) {
        char* pend = nullptr;
        char* gend = nullptr;
        double pv = std::strtod(p.c_str(), &pend);
        double gv = std::strtod(g.c_str(), &gend);
        return pv == gv ? 1 : 0;
    }
    return p == g ? 1 : 0;
}

double score_open(const Query& query, const std::vector<GenerationRecord>& generations,
                  ExtractionRule rule) {
    if (generations.empty())
        throw ValidationError("score_open for '" + query.id + "' needs at least one generation");
    const std::string& llm = generations.front().llm_name;
    int correct = 0;
    for (const GenerationRecord& r : generations) {
        if (r.query_id != query.id)
            throw ValidationError("generation for '" + r.query_id + "' mixed into scoring of '" +
                                  query.id + "'");
        if (r.llm_name != llm)
            throw ValidationError("generations for '" + query.id + "' mix LLMs '" + llm + "' and '" +
                                  r.llm_name + "'");
        if (!r.output_text)
            throw ValidationError("open query '" + query.id + "' has a record without output_text");
        correct += evaluate_open(*r.output_text, query.gold, rule);
    }
    return static_cast<double>(correct) / static_cast<double>(generations.size());
}

double score_multiple_choice(const Query& query, const std::map<std::string, double>& option_probs,
                             const ScoringConfig& config) {
    if (query.kind != QueryKind::multiple_choice)
        throw ValidationError("score_multiple_choice called on open query '" + query.id + "'");
    std::set<std::string> labels(query.options.begin(), query.options.end());
    double total = 0.0;
    for (const auto& [label, prob] : option_probs) {
        if (!labels.count(label))
            throw ValidationError("unknown option label '" + label + "' for query '" + query.id + "'");
        if (!std::isfinite(prob) || prob < 0.0)
            throw ValidationError("option probability for '" + label + "' must be finite and >= 0");
        total += prob;
    }
    if (total <= 0.0)
        throw ValidationError("all option probabilities are zero for query '" + query.id + "'");

    // Argmax in option order so ties break deterministically (A before B ...).
    std::string predicted;
    double best = -1.0;
    for (const std::string& label : query.options) {
        auto it = option_probs.find(label);
        double p = it == option_probs.end() ? 0.0 : it->second;
        if (p > best) {
            best = p;
            predicted = label;
        }
    }

    auto gold_it = option_probs.find(query.gold);
    double gold_prob = gold_it == option_probs.end() ? 0.0 : gold_it->second;
    if (config.punish_wrong_choice && predicted != query.gold) return 0.0;
    return gold_prob / total;
}

double apply_cost_adjustment(double score, double cost, double cost_weight) {
    if (!std::isfinite(cost)) throw ValidationError("cost must be finite");
    return score + cost_weight * cost;
}

ScoreMatrix build_score_matrix(const std::vector<Query>& queries,
                               const std::vector<GenerationRecord>& generations,
                               const ScoringConfig& config,
                               const std::vector<LLMDescriptor>& pool) {
    std::vector<std::string> llm_names;
    if (!pool.empty()) {
        for (const auto& d : pool) llm_names.push_back(d.name);
    } else {
        std::set<std::string> names;
        for (const auto& r : generations) names.insert(r.llm_name);
        llm_names.assign(names.begin(), names.end());
    }

    std::map<std::string, std::size_t> col;
    for (std::size_t j = 0; j < llm_names.size(); ++j) col[llm_names[j]] = j;
    std::map<std::string, std::size_t> row;
    for (std::size_t i = 0; i < queries.size(); ++i) row[queries[i].id] = i;

    // Bucket records per cell, keeping file order within a cell.
    std::map<std::pair<std::size_t, std::size_t>, std::vector<const GenerationRecord*>> cells;
    for (const auto& r : generations) {
        auto rit = row.find(r.query_id);
        if (rit == row.end())
            throw ValidationError("generation references unknown query '" + r.query_id + "'");
        auto cit = col.find(r.llm_name);
        if (cit == col.end())
            throw ValidationError("generation references LLM '" + r.llm_name + "' outside the pool");
        cells[{rit->second, cit->second}].push_back(&r);
    }

    std::vector<double> scores(queries.size() * llm_names.size(), 0.0);
    for (std::size_t i = 0; i < queries.size(); ++i) {
        const Query& q = queries[i];
        for (std::size_t j = 0; j < llm_names.size(); ++j) {
            auto it = cells.find({i, j});
            if (it == cells.end()) {
                std::cerr << "warning: no generations for (" << q.id << ", " << llm_names[j]
                          << "); scoring cell as 0\n";
                continue;
            }
            const auto& recs = it->second;
            if (q.kind == QueryKind::open) {
                std::vector<GenerationRecord> group;
                group.reserve(recs.size());
                for (const auto* r : recs) group.push_back(*r);
                scores[i * llm_names.size() + j] = score_open(q, group, config.answer_extraction_rule);
            } else {
                if (recs.size() != 1)
                    throw ValidationError("multiple_choice cell (" + q.id + ", " + llm_names[j] +
                                          ") must hold exactly one option_probs record, found " +
                                          std::to_string(recs.size()));
                if (!recs.front()->option_probs)
                    throw ValidationError("multiple_choice cell (" + q.id + ", " + llm_names[j] +
                                          ") record lacks option_probs");
                scores[i * llm_names.size() + j] =
                    score_multiple_choice(q, *recs.front()->option_probs, config);
            }
        }
    }

    std::vector<double> costs;
    if (config.cost_weight != 0.0 && !pool.empty()) {
        costs.assign(queries.size() * llm_names.size(), 0.0);
        for (std::size_t j = 0; j < llm_names.size(); ++j) {
            double c = pool[j].cost_per_call.value_or(0.0);
            for (std::size_t i = 0; i < queries.size(); ++i) costs[i * llm_names.size() + j] = c;
        }
    }

    std::vector<std::string> query_ids;
    for (const Query& q : queries) query_ids.push_back(q.id);
    return ScoreMatrix(std::move(query_ids), std::move(llm_names), std::move(scores), std::move(costs));
}

}  // namespace routerdc
