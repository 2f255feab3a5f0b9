#include <doctest.h>

#include <set>

#include "routerdc/scoring.hpp"
#include "routerdc/synth.hpp"
#include "test_helpers.hpp"

using namespace routerdc;

TEST_CASE("synth fixtures are deterministic") {
    testutil::TempDir tmp_a("synth_a"), tmp_b("synth_b");
    SynthConfig cfg;
    cfg.per_task = 12;
    cfg.test_per_task = 4;
    cfg.samples_per_cell = 4;
    write_synth(synthesize(cfg), tmp_a.root());
    write_synth(synthesize(cfg), tmp_b.root());
    for (const char* name : {"pool.jsonl", "queries_train.jsonl", "queries_test.jsonl",
                             "generations_train.jsonl", "generations_test.jsonl",
                             "scores_train.jsonl", "scores_test.jsonl"}) {
        CHECK(testutil::slurp(tmp_a.path(name)) == testutil::slurp(tmp_b.path(name)));
    }
    SUBCASE("another seed changes the files") {
        testutil::TempDir tmp_c("synth_c");
        cfg.seed += 1;
        write_synth(synthesize(cfg), tmp_c.root());
        CHECK(testutil::slurp(tmp_a.path("queries_train.jsonl")) !=
              testutil::slurp(tmp_c.path("queries_train.jsonl")));
    }
}

TEST_CASE("experts mode has the expected shape and score structure") {
    SynthConfig cfg;
    cfg.tasks = 3;
    cfg.llms = 4;
    cfg.per_task = 10;
    cfg.test_per_task = 5;
    cfg.samples_per_cell = 20;
    SynthDataset d = synthesize(cfg);

    CHECK(d.pool.size() == 4);
    CHECK(d.train_queries.size() == 30);
    CHECK(d.test_queries.size() == 15);
    CHECK(d.train_generations.size() == 30u * 4u * 20u);
    REQUIRE(d.train_scores.num_queries() == 30);

    // Expert structure: task j's expert is LLM j with score exactly 1.0;
    // everyone else sits in {0.15, 0.2, 0.25}.
    for (std::size_t i = 0; i < d.train_queries.size(); ++i) {
        std::size_t task = i / 10;
        std::size_t row = d.train_scores.row_of(d.train_queries[i].id);
        for (std::size_t t = 0; t < 4; ++t) {
            double s = d.train_scores.score(row, t);
            if (t == task) {
                CHECK(s == 1.0);
            } else {
                CHECK(s >= 0.15);
                CHECK(s <= 0.25);
            }
        }
    }
}

TEST_CASE("generations reproduce the true score matrix exactly") {
    SynthConfig cfg;
    cfg.per_task = 6;
    cfg.test_per_task = 3;
    cfg.samples_per_cell = 20;
    SynthDataset d = synthesize(cfg);

    ScoringConfig scoring;
    ScoreMatrix rescored = build_score_matrix(d.train_queries, d.train_generations, scoring, d.pool);
    REQUIRE(rescored.num_queries() == d.train_scores.num_queries());
    REQUIRE(rescored.llm_names() == d.train_scores.llm_names());
    for (std::size_t i = 0; i < rescored.num_queries(); ++i)
        for (std::size_t t = 0; t < rescored.num_llms(); ++t)
            CHECK(rescored.score(i, t) == d.train_scores.score(i, t));
}

TEST_CASE("co-expert mode gives two perfect LLMs per task") {
    SynthConfig cfg;
    cfg.mode = SynthMode::co_experts;
    cfg.tasks = 3;
    cfg.per_task = 8;
    cfg.test_per_task = 4;
    cfg.samples_per_cell = 10;
    SynthDataset d = synthesize(cfg);
    CHECK(d.pool.size() == 6);
    for (std::size_t i = 0; i < d.train_queries.size(); ++i) {
        std::size_t task = i / 8;
        std::size_t row = d.train_scores.row_of(d.train_queries[i].id);
        int perfect = 0;
        for (std::size_t t = 0; t < 6; ++t)
            if (d.train_scores.score(row, t) == 1.0) ++perfect;
        CHECK(perfect == 2);
        CHECK(d.train_scores.score(row, 2 * task) == 1.0);
        CHECK(d.train_scores.score(row, 2 * task + 1) == 1.0);
    }
}

TEST_CASE("costed mode carries per-cell costs") {
    SynthConfig cfg;
    cfg.mode = SynthMode::costed;
    cfg.per_task = 6;
    cfg.test_per_task = 3;
    cfg.samples_per_cell = 20;
    SynthDataset d = synthesize(cfg);
    REQUIRE(d.pool.size() == 4);
    REQUIRE(d.train_scores.has_costs());

    // The expert is perfect but expensive by subpopulation; the near-expert
    // is cheap and scores 0.9 everywhere.
    const double expected_prime_cost[3] = {0.2, 0.5, 0.8};
    for (std::size_t i = 0; i < d.train_queries.size(); ++i) {
        std::size_t task = i / 6;
        std::size_t row = d.train_scores.row_of(d.train_queries[i].id);
        CHECK(d.train_scores.score(row, 0) == 1.0);
        CHECK(d.train_scores.cost(row, 0) == expected_prime_cost[task]);
        CHECK(d.train_scores.score(row, 1) == doctest::Approx(0.9));
        CHECK(d.train_scores.cost(row, 1) == 0.02);
    }
}

TEST_CASE("task labels separate the three families") {
    SynthConfig cfg;
    cfg.per_task = 4;
    cfg.test_per_task = 2;
    cfg.samples_per_cell = 2;
    SynthDataset d = synthesize(cfg);
    std::set<std::string> labels;
    for (const auto& q : d.train_queries) labels.insert(*q.task_label);
    CHECK(labels == std::set<std::string>{"arith", "lexicon", "logcheck"});
}
