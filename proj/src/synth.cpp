#include "routerdc/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "routerdc/io.hpp"
#include "routerdc/rng.hpp"

namespace routerdc {

namespace {

struct TaskTemplate {
    std::string label;
    // Renders one query text plus its short gold answer.
    std::string (*render)(Rng&, std::string& gold);
};

const char* kWords[] = {"swift", "bright", "calm",  "heavy", "narrow", "mellow",
                        "stern", "quiet",  "vivid", "rough", "sharp",  "plain"};

std::string render_arith(Rng& rng, std::string& gold) {
    int a = static_cast<int>(rng.below(90)) + 10;
    int b = static_cast<int>(rng.below(90)) + 10;
    int page = static_cast<int>(rng.below(400)) + 1;
    gold = std::to_string(a + b);
    return "Add the amounts " + std::to_string(a) + " and " + std::to_string(b) +
           " recorded on ledger page " + std::to_string(page) + " and report the total.";
}

std::string render_lexicon(Rng& rng, std::string& gold) {
    const char* w = kWords[rng.below(std::size(kWords))];
    int entry = static_cast<int>(rng.below(500)) + 1;
    gold = w;
    return std::string("Recall glossary entry ") + std::to_string(entry) +
           " and state the catalogued keyword for the style tag '" + w + "'.";
}

std::string render_logcheck(Rng& rng, std::string& gold) {
    static const int codes[] = {200, 201, 301, 403, 404, 500, 503};
    int code = codes[rng.below(std::size(codes))];
    int line = static_cast<int>(rng.below(900)) + 100;
    gold = std::to_string(code);
    return "Inspect service log line " + std::to_string(line) +
           " and report the status code printed after the marker; the trace shows status " +
           std::to_string(code) + ".";
}

std::string render_size(Rng& rng, std::string& gold, const char* size_word, const char* batch_word) {
    int a = static_cast<int>(rng.below(90)) + 10;
    int b = static_cast<int>(rng.below(90)) + 10;
    int req = static_cast<int>(rng.below(700)) + 1;
    gold = std::to_string(a + b);
    return std::string(size_word) + " request " + std::to_string(req) + ": combine " +
           std::to_string(a) + " with " + std::to_string(b) + " inside the " + batch_word + " batch.";
}

std::string render_small(Rng& rng, std::string& gold) { return render_size(rng, gold, "Tiny", "compact"); }
std::string render_mid(Rng& rng, std::string& gold) { return render_size(rng, gold, "Standard", "regular"); }
std::string render_large(Rng& rng, std::string& gold) { return render_size(rng, gold, "Bulk", "extended"); }

const TaskTemplate kGeneralTasks[] = {
    {"arith", render_arith}, {"lexicon", render_lexicon}, {"logcheck", render_logcheck}};
const TaskTemplate kSizeTasks[] = {
    {"size_small", render_small}, {"size_mid", render_mid}, {"size_large", render_large}};

// 0.2 plus seeded noise of -0.05 / 0 / +0.05.
double noisy_low_score(Rng& rng) { return 0.2 + 0.05 * (static_cast<double>(rng.below(3)) - 1.0); }

std::string correct_output(const std::string& gold, Rng& rng) {
    static const char* kLead[] = {"Worked through the steps.", "Checked it twice.",
                                  "The records agree.", "After simplifying:"};
    return std::string(kLead[rng.below(std::size(kLead))]) + " #### " + gold;
}

std::string wrong_output(const std::string& gold, Rng& rng) {
    // A visibly different answer: numeric answers drift, words mutate.
    bool numeric = !gold.empty() && std::isdigit(static_cast<unsigned char>(gold[0]));
    std::string bad = numeric ? std::to_string(std::stol(gold) + 1 + static_cast<long>(rng.below(7)))
                              : gold + "ish";
    return "Hard to say for sure. #### " + bad;
}

struct CellPlan {
    double score = 0.0;  // realized as count / M exactly
    double cost = 0.0;
};

}  // namespace

std::string to_string(SynthMode m) {
    switch (m) {
        case SynthMode::experts: return "experts";
        case SynthMode::co_experts: return "co_experts";
        case SynthMode::costed: return "costed";
    }
    return "experts";
}

SynthMode synth_mode_from_string(const std::string& s) {
    if (s == "experts") return SynthMode::experts;
    if (s == "co_experts") return SynthMode::co_experts;
    if (s == "costed") return SynthMode::costed;
    throw ValidationError("unknown synth mode: " + s);
}

void SynthConfig::validate() const {
    if (tasks < 1) throw ValidationError("synth needs at least one task");
    if (per_task < 1 || test_per_task < 1) throw ValidationError("per-task counts must be >= 1");
    if (samples_per_cell < 1) throw ValidationError("samples per cell must be >= 1");
    if (mode == SynthMode::experts && llms < tasks)
        throw ValidationError("experts mode needs at least one LLM per task");
    if (mode == SynthMode::costed && tasks != 3)
        throw ValidationError("costed mode uses exactly the three size subpopulations");
}

SynthDataset synthesize(const SynthConfig& config) {
    config.validate();
    Rng rng(config.seed);
    SynthDataset out;

    // Pool.
    int num_llms = config.llms;
    if (config.mode == SynthMode::co_experts) num_llms = 2 * config.tasks;
    if (config.mode == SynthMode::costed) num_llms = 4;
    static const char* kNames[] = {"alpha-7b", "bravo-7b", "charlie-8b", "delta-8b",
                                   "echo-7b",  "foxtrot-8b", "golf-7b",  "hotel-8b",
                                   "india-7b", "juliet-8b"};
    for (int t = 0; t < num_llms; ++t) {
        LLMDescriptor d;
        if (config.mode == SynthMode::costed) {
            static const char* kCostNames[] = {"grand-72b", "swift-7b", "drift-7b", "ember-7b"};
            d.name = kCostNames[t];
        } else if (t < static_cast<int>(std::size(kNames))) {
            d.name = kNames[t];
        } else {
            d.name = "pool-llm-" + std::to_string(t);
        }
        out.pool.push_back(std::move(d));
    }
    if (config.mode == SynthMode::costed) {
        out.pool[0].cost_per_call = 0.5;  // representative; per-cell costs vary by size
        out.pool[1].cost_per_call = 0.02;
        out.pool[2].cost_per_call = 0.02;
        out.pool[3].cost_per_call = 0.02;
    }

    const TaskTemplate* templates =
        config.mode == SynthMode::costed ? kSizeTasks : kGeneralTasks;
    const std::size_t template_count =
        config.mode == SynthMode::costed ? std::size(kSizeTasks) : std::size(kGeneralTasks);

    // Per-query plan: scores (and costs) per LLM, then generations realizing
    // them exactly as counts out of M.
    const int M = config.samples_per_cell;
    auto plan_cell = [&](int task, int llm) {
        CellPlan plan;
        switch (config.mode) {
            case SynthMode::experts:
                plan.score = (llm == task % num_llms) ? 1.0 : noisy_low_score(rng);
                break;
            case SynthMode::co_experts:
                plan.score = (llm == 2 * task || llm == 2 * task + 1) ? 1.0 : noisy_low_score(rng);
                break;
            case SynthMode::costed: {
                static const double kPrimeCost[] = {0.2, 0.5, 0.8};  // by size subpopulation
                if (llm == 0) {
                    plan.score = 1.0;
                    plan.cost = kPrimeCost[task];
                } else if (llm == 1) {
                    plan.score = 0.9;
                    plan.cost = 0.02;
                } else {
                    plan.score = noisy_low_score(rng);
                    plan.cost = 0.02;
                }
                break;
            }
        }
        // Snap to an exact fraction of M so rescoring the generations
        // reproduces the matrix bit-for-bit.
        plan.score = std::llround(plan.score * M) / static_cast<double>(M);
        return plan;
    };

    auto build_split = [&](const std::string& id_prefix, int per_task, std::vector<Query>& queries,
                           std::vector<GenerationRecord>& generations) {
        std::vector<double> scores;
        std::vector<double> costs;
        std::vector<std::string> query_ids;
        for (int task = 0; task < config.tasks; ++task) {
            const TaskTemplate& tpl = templates[task % template_count];
            std::string label = tpl.label;
            if (task >= static_cast<int>(template_count))
                label += "_" + std::to_string(task / template_count);
            for (int i = 0; i < per_task; ++i) {
                Query q;
                q.id = id_prefix + "_" + std::to_string(task) + "_" + std::to_string(i);
                std::string answer;
                q.text = tpl.render(rng, answer);
                q.kind = QueryKind::open;
                q.gold = "#### " + answer;
                q.task_label = label;
                query_ids.push_back(q.id);

                for (int llm = 0; llm < num_llms; ++llm) {
                    CellPlan plan = plan_cell(task, llm);
                    scores.push_back(plan.score);
                    if (config.mode == SynthMode::costed) costs.push_back(plan.cost);

                    int correct = static_cast<int>(std::llround(plan.score * M));
                    std::vector<bool> is_correct(M, false);
                    std::fill(is_correct.begin(), is_correct.begin() + correct, true);
                    rng.shuffle(is_correct);
                    for (int m = 0; m < M; ++m) {
                        GenerationRecord r;
                        r.query_id = q.id;
                        r.llm_name = out.pool[llm].name;
                        r.sample_index = m;
                        r.output_text = is_correct[m] ? correct_output(answer, rng)
                                                      : wrong_output(answer, rng);
                        generations.push_back(std::move(r));
                    }
                }
                queries.push_back(std::move(q));
            }
        }
        std::vector<std::string> llm_names;
        for (const auto& d : out.pool) llm_names.push_back(d.name);
        return ScoreMatrix(std::move(query_ids), std::move(llm_names), std::move(scores),
                           std::move(costs));
    };

    out.train_scores = build_split("tr", config.per_task, out.train_queries, out.train_generations);
    out.test_scores = build_split("te", config.test_per_task, out.test_queries, out.test_generations);
    return out;
}

void write_synth(const SynthDataset& dataset, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    write_pool(dataset.pool, out_dir + "/pool.jsonl");
    write_queries(dataset.train_queries, out_dir + "/queries_train.jsonl");
    write_queries(dataset.test_queries, out_dir + "/queries_test.jsonl");
    write_generations(dataset.train_generations, out_dir + "/generations_train.jsonl");
    write_generations(dataset.test_generations, out_dir + "/generations_test.jsonl");
    write_score_matrix(dataset.train_scores, out_dir + "/scores_train.jsonl");
    write_score_matrix(dataset.test_scores, out_dir + "/scores_test.jsonl");
}

}  // namespace routerdc
