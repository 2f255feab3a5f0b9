#include <doctest.h>

#include <cmath>

#include "routerdc/types.hpp"

using namespace routerdc;

TEST_CASE("query invariants") {
    Query q;
    q.id = "q1";
    q.text = "hello";
    q.kind = QueryKind::open;
    q.gold = "#### 1";
    CHECK_NOTHROW(q.validate());

    SUBCASE("open query with options rejected") {
        q.options = {"A"};
        CHECK_THROWS_AS(q.validate(), ValidationError);
    }
    SUBCASE("multiple choice needs gold among options") {
        q.kind = QueryKind::multiple_choice;
        q.options = {"A", "B"};
        q.gold = "C";
        CHECK_THROWS_AS(q.validate(), ValidationError);
        q.gold = "B";
        CHECK_NOTHROW(q.validate());
    }
    SUBCASE("multiple choice without options rejected") {
        q.kind = QueryKind::multiple_choice;
        q.gold = "A";
        CHECK_THROWS_AS(q.validate(), ValidationError);
    }
}

TEST_CASE("score matrix validation") {
    SUBCASE("accepts a consistent matrix") {
        ScoreMatrix m({"q1", "q2"}, {"a", "b"}, {0.1, 0.9, 1.0, 0.0});
        CHECK(m.num_queries() == 2);
        CHECK(m.num_llms() == 2);
        CHECK(m.score(0, 1) == doctest::Approx(0.9));
        CHECK(m.row_of("q2") == 1);
        CHECK(m.col_of("b") == 1);
    }
    SUBCASE("rejects out-of-range scores") {
        CHECK_THROWS_AS(ScoreMatrix({"q1"}, {"a"}, {1.5}), ValidationError);
        CHECK_THROWS_AS(ScoreMatrix({"q1"}, {"a"}, {-0.1}), ValidationError);
    }
    SUBCASE("rejects non-finite values") {
        CHECK_THROWS_AS(ScoreMatrix({"q1"}, {"a"}, {std::nan("")}), ValidationError);
    }
    SUBCASE("rejects shape mismatch") {
        CHECK_THROWS_AS(ScoreMatrix({"q1"}, {"a", "b"}, {0.5}), ValidationError);
    }
    SUBCASE("rejects duplicate labels") {
        CHECK_THROWS_AS(ScoreMatrix({"q1", "q1"}, {"a"}, {0.5, 0.5}), ValidationError);
        CHECK_THROWS_AS(ScoreMatrix({"q1"}, {"a", "a"}, {0.5, 0.5}), ValidationError);
    }
    SUBCASE("missing lookups throw") {
        ScoreMatrix m({"q1"}, {"a"}, {0.5});
        CHECK_THROWS_AS(m.row_of("nope"), ValidationError);
        CHECK_THROWS_AS(m.col_of("nope"), ValidationError);
    }
}

TEST_CASE("train config invariants") {
    TrainConfig c;
    CHECK_NOTHROW(c.validate());
    SUBCASE("batch of one is fine when lambda is zero") {
        c.batch_size = 1;
        c.lambda = 0.0;
        CHECK_NOTHROW(c.validate());
    }
    SUBCASE("in-group sampling needs peers") {
        c.batch_size = 1;
        c.lambda = 1.0;
        CHECK_THROWS_AS(c.validate(), ValidationError);
    }
    SUBCASE("k bounds") {
        c.k_plus = 0;
        CHECK_THROWS_AS(c.validate(), ValidationError);
        c.k_plus = 1;
        c.k_minus = -1;
        CHECK_THROWS_AS(c.validate(), ValidationError);
    }
}
