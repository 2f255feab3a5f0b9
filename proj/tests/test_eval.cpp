#include <doctest.h>

#include "routerdc/eval.hpp"
#include "routerdc/router.hpp"
#include "test_helpers.hpp"

using namespace routerdc;

namespace {

// Two tasks x two queries each, three LLMs with hand-set correctness.
struct EvalFixture {
    std::vector<Query> queries;
    ScoreMatrix scores;
};

EvalFixture fixture() {
    EvalFixture f;
    const char* tasks[2] = {"alpha_task", "beta_task"};
    for (int i = 0; i < 4; ++i) {
        Query q;
        q.id = "q" + std::to_string(i);
        q.text = std::string(i < 2 ? "alpha words here " : "beta words there ") + std::to_string(i);
        q.gold = "#### 1";
        q.task_label = tasks[i / 2];
        f.queries.push_back(std::move(q));
    }
    // llm0 is correct on the alpha task, llm1 on beta, llm2 nowhere.
    f.scores = ScoreMatrix({"q0", "q1", "q2", "q3"}, {"llm0", "llm1", "llm2"},
                           {1.0, 0.2, 0.0,
                            0.9, 0.1, 0.1,
                            0.2, 1.0, 0.0,
                            0.0, 0.8, 0.2});
    return f;
}

RouterParameters tiny_params(int t = 3, std::uint64_t seed = 20) {
    EncoderShape shape;
    shape.hash_dim = 64;
    shape.hidden_dim = 8;
    shape.embed_dim = 4;
    FeaturizerConfig feat;
    feat.hash_dim = 64;
    std::vector<std::string> names;
    for (int i = 0; i < t; ++i) names.push_back("llm" + std::to_string(i));
    return init_router_parameters(shape, feat, names, seed);
}

}  // namespace

TEST_CASE("correctness bit thresholds") {
    Query open;
    open.id = "o";
    open.text = "t";
    open.gold = "#### 1";
    CHECK(correctness_bit(open, 0.5));
    CHECK(correctness_bit(open, 0.9));
    CHECK(!correctness_bit(open, 0.4));
    Query mc = open;
    mc.kind = QueryKind::multiple_choice;
    mc.options = {"A"};
    mc.gold = "A";
    CHECK(correctness_bit(mc, 0.01));
    CHECK(!correctness_bit(mc, 0.0));
}

TEST_CASE("oracle accuracy is the matrix upper bound") {
    EvalFixture f = fixture();
    AccuracyReport oracle = oracle_accuracy(f.queries, f.scores);
    CHECK(oracle.overall == doctest::Approx(1.0));
    CHECK(oracle.per_task.at("alpha_task") == doctest::Approx(1.0));

    SUBCASE("any router is bounded by the oracle") {
        auto params = tiny_params();
        AccuracyReport routed = routing_accuracy(params, f.queries, f.scores);
        CHECK(routed.overall <= oracle.overall + 1e-12);
    }
}

TEST_CASE("single-LLM accuracy equals its column mean") {
    EvalFixture f = fixture();
    AccuracyReport a = single_llm_accuracy("llm0", f.queries, f.scores);
    CHECK(a.overall == doctest::Approx(0.5));  // correct on q0, q1 only
    CHECK(a.per_task.at("alpha_task") == doctest::Approx(1.0));
    CHECK(a.per_task.at("beta_task") == doctest::Approx(0.0));
    CHECK(a.average == doctest::Approx(0.5));
    AccuracyReport c = single_llm_accuracy("llm2", f.queries, f.scores);
    CHECK(c.overall == doctest::Approx(0.0));
}

TEST_CASE("routing accuracy checks the routed cell's bit") {
    EvalFixture f = fixture();
    auto params = tiny_params();
    // Collapse all embeddings so routing always picks llm0 (tie-break).
    params.llm_embeddings[1] = params.llm_embeddings[0];
    params.llm_embeddings[2] = params.llm_embeddings[0];
    AccuracyReport r = routing_accuracy(params, f.queries, f.scores);
    CHECK(r.overall == doctest::Approx(0.5));
    SUBCASE("query missing from the matrix is an error") {
        Query extra;
        extra.id = "ghost";
        extra.text = "t";
        extra.gold = "#### 1";
        auto queries = f.queries;
        queries.push_back(extra);
        CHECK_THROWS_AS(routing_accuracy(params, queries, f.scores), ValidationError);
    }
}

TEST_CASE("voting baseline") {
    EvalFixture f = fixture();
    std::vector<std::string> llms{"llm0", "llm1", "llm2"};
    auto record = [](const std::string& qid, const std::string& llm, const std::string& text) {
        GenerationRecord r;
        r.query_id = qid;
        r.llm_name = llm;
        r.sample_index = 0;
        r.output_text = text;
        return r;
    };
    SUBCASE("strict majority wins") {
        std::vector<GenerationRecord> gens;
        for (const auto& q : f.queries) {
            gens.push_back(record(q.id, "llm0", "#### 1"));
            gens.push_back(record(q.id, "llm1", "#### 1"));
            gens.push_back(record(q.id, "llm2", "#### 23"));
        }
        AccuracyReport r = voting_baseline(f.queries, gens, llms, ExtractionRule::delimiter_suffix);
        CHECK(r.overall == doctest::Approx(1.0));
    }
    SUBCASE("all distinct answers fall back to the first LLM") {
        std::vector<GenerationRecord> gens;
        for (const auto& q : f.queries) {
            gens.push_back(record(q.id, "llm0", "#### 7"));
            gens.push_back(record(q.id, "llm1", "#### 1"));
            gens.push_back(record(q.id, "llm2", "#### 9"));
        }
        AccuracyReport r = voting_baseline(f.queries, gens, llms, ExtractionRule::delimiter_suffix);
        CHECK(r.overall == doctest::Approx(0.0));  // llm0's wrong answer wins every tie
    }
    SUBCASE("unanimously correct") {
        std::vector<GenerationRecord> gens;
        for (const auto& q : f.queries)
            for (const auto& llm : llms) gens.push_back(record(q.id, llm, "yes #### 1"));
        AccuracyReport r = voting_baseline(f.queries, gens, llms, ExtractionRule::delimiter_suffix);
        CHECK(r.overall == doctest::Approx(1.0));
    }
    SUBCASE("missing generations are an error") {
        std::vector<GenerationRecord> gens{record("q0", "llm0", "#### 1")};
        CHECK_THROWS_AS(voting_baseline(f.queries, gens, llms, ExtractionRule::delimiter_suffix),
                        ValidationError);
    }
}

TEST_CASE("assignment matrix structure") {
    EvalFixture f = fixture();
    auto params = tiny_params();

    SUBCASE("rows sum to one") {
        TaskLlmMatrix m = assignment_matrix(params, f.queries);
        REQUIRE(m.tasks.size() == 2);
        for (std::size_t t = 0; t < m.tasks.size(); ++t) {
            double sum = 0.0;
            for (std::size_t l = 0; l < m.llms.size(); ++l) sum += m.at(t, l);
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
    SUBCASE("a degenerate router is all mass in one column") {
        params.llm_embeddings[1] = params.llm_embeddings[0];
        params.llm_embeddings[2] = params.llm_embeddings[0];
        TaskLlmMatrix m = assignment_matrix(params, f.queries);
        for (std::size_t t = 0; t < m.tasks.size(); ++t) {
            CHECK(m.at(t, 0) == doctest::Approx(1.0));
            CHECK(m.at(t, 1) == 0.0);
        }
    }
}

TEST_CASE("similarity heatmap stays in the cosine range") {
    EvalFixture f = fixture();
    auto params = tiny_params();
    TaskLlmMatrix m = similarity_heatmap(params, f.queries);
    for (double v : m.values) {
        CHECK(v >= -1.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("cost-accuracy curve") {
    EvalFixture f = fixture();
    ScoreMatrix priced({"q0", "q1", "q2", "q3"}, {"llm0", "llm1", "llm2"},
                       f.scores.raw_scores(),
                       {0.9, 0.1, 0.1,
                        0.9, 0.1, 0.1,
                        0.9, 0.1, 0.1,
                        0.9, 0.1, 0.1});
    auto params = tiny_params();

    SUBCASE("degenerate router pays its column's mean cost") {
        params.llm_embeddings[1] = params.llm_embeddings[0];
        params.llm_embeddings[2] = params.llm_embeddings[0];
        auto points = cost_accuracy_curve({{0.0, &params}}, f.queries, priced);
        REQUIRE(points.size() == 1);
        CHECK(points[0].mean_cost == doctest::Approx(0.9));
        CHECK(points[0].accuracy == doctest::Approx(0.5));
    }
    SUBCASE("points come back sorted by cost") {
        auto cheap = tiny_params(3, 21);
        auto points = cost_accuracy_curve({{0.5, &params}, {0.0, &cheap}}, f.queries, priced);
        REQUIRE(points.size() == 2);
        CHECK(points[0].mean_cost <= points[1].mean_cost);
    }
    SUBCASE("costs are required") {
        CHECK_THROWS_AS(cost_accuracy_curve({{0.0, &params}}, f.queries, f.scores), ValidationError);
    }
}

TEST_CASE("report emission and round-trip") {
    testutil::TempDir tmp("report");
    EvalFixture f = fixture();
    auto params = tiny_params();

    EvalReport report;
    report.methods["routerdc"] = routing_accuracy(params, f.queries, f.scores);
    report.methods["oracle"] = oracle_accuracy(f.queries, f.scores);
    report.assignments["routerdc"] = assignment_matrix(params, f.queries);
    report.heatmaps["routerdc"] = similarity_heatmap(params, f.queries);
    report.config_hash = "cfg123";
    report.checkpoint_id = "abc456";

    emit_report(report, tmp.root());
    CHECK(std::filesystem::exists(tmp.path("report.json")));
    CHECK(std::filesystem::exists(tmp.path("report.txt")));
    CHECK(std::filesystem::exists(tmp.path("assignment_routerdc.tsv")));

    EvalReport loaded = read_report(tmp.path("report.json"));
    CHECK(loaded.config_hash == "cfg123");
    CHECK(loaded.checkpoint_id == "abc456");
    CHECK(loaded.methods.at("routerdc").overall ==
          doctest::Approx(report.methods.at("routerdc").overall));
    CHECK(loaded.methods.at("oracle").per_task == report.methods.at("oracle").per_task);
    CHECK(loaded.assignments.at("routerdc").values == report.assignments.at("routerdc").values);

    SUBCASE("provenance fields land in the human-readable table") {
        std::string txt = testutil::slurp(tmp.path("report.txt"));
        CHECK(txt.find("cfg123") != std::string::npos);
        CHECK(txt.find("abc456") != std::string::npos);
    }
    SUBCASE("an empty report is refused") {
        EvalReport empty;
        CHECK_THROWS_AS(emit_report(empty, tmp.root()), ValidationError);
    }
}
