#include <doctest.h>

#include <atomic>
#include <chrono>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "routerdc/collect.hpp"
#include "routerdc/io.hpp"
#include "test_helpers.hpp"

using namespace routerdc;
using nlohmann::json;

namespace {

// In-process OpenAI-compatible completions stub with controllable behavior.
class StubEndpoint {
public:
    std::atomic<int> in_flight{0};
    std::atomic<int> max_in_flight{0};
    std::atomic<int> requests{0};
    int fail_first_n = 0;          // respond 500 to the first N requests
    int delay_ms = 0;

    StubEndpoint() {
        server_.Post("/v1/completions", [this](const httplib::Request& req, httplib::Response& res) {
            int now = ++in_flight;
            int seen = max_in_flight.load();
            while (now > seen && !max_in_flight.compare_exchange_weak(seen, now)) {
            }
            int count = ++requests;
            if (delay_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
            if (count <= fail_first_n) {
                res.status = 500;
                res.set_content("{\"error\":\"boom\"}", "application/json");
                --in_flight;
                return;
            }
            json body = json::parse(req.body);
            json choices = json::array();
            int n = body.value("n", 1);
            bool echo = body.value("echo", false);
            std::string prompt = body.value("prompt", "");
            for (int i = 0; i < n; ++i) {
                json choice;
                if (echo) {
                    // Per-option likelihood probe: score by the option letter
                    // baked into the prompt tail ("Answer: X").
                    double lp = -10.0;
                    if (!prompt.empty()) {
                        char opt = prompt.back();
                        lp = opt == 'C' ? -1.0 : (opt == 'B' ? -2.0 : -4.0);
                    }
                    choice["text"] = prompt;
                    choice["logprobs"] = json{{"token_logprobs", {nullptr, lp}}};
                } else {
                    // Deterministic text derived from the prompt and index.
                    choice["text"] = "echo(" + std::to_string(prompt.size()) + "," +
                                     std::to_string(i) + ") #### 19";
                }
                choices.push_back(choice);
            }
            res.set_content(json{{"choices", choices}}.dump(), "application/json");
            --in_flight;
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        REQUIRE(port_ > 0);
        worker_ = std::thread([this] { server_.listen_after_bind(); });
        for (int i = 0; i < 500 && !server_.is_running(); ++i)
            std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }
    ~StubEndpoint() {
        server_.stop();
        worker_.join();
    }

    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/completions"; }

private:
    httplib::Server server_;
    std::thread worker_;
    int port_ = 0;
};

std::vector<Query> open_queries(int n) {
    std::vector<Query> queries;
    for (int i = 0; i < n; ++i) {
        Query q;
        q.id = "q" + std::to_string(i);
        q.text = "question number " + std::to_string(i);
        q.gold = "#### 19";
        queries.push_back(std::move(q));
    }
    return queries;
}

}  // namespace

TEST_CASE("collect gathers M samples per open cell") {
    StubEndpoint stub;
    testutil::TempDir tmp("collect");
    std::vector<LLMDescriptor> pool{{"llmA", stub.url(), {}, true}, {"llmB", stub.url(), {}, true}};
    IngestConfig cfg;
    cfg.samples_per_cell = 3;
    cfg.max_concurrent_requests = 2;

    CollectResult r = collect_generations(pool, open_queries(2), cfg, tmp.path("gen.jsonl"));
    CHECK(r.failures.empty());
    CHECK(r.records.size() == 12);  // 2 queries x 2 LLMs x M=3

    // Sorted and parseable by the standard reader.
    auto loaded = read_generations(tmp.path("gen.jsonl"), open_queries(2));
    CHECK(loaded.size() == 12);
    for (std::size_t i = 1; i < r.records.size(); ++i) {
        auto key = [](const GenerationRecord& g) {
            return std::make_tuple(g.query_id, g.llm_name, g.sample_index);
        };
        CHECK(key(r.records[i - 1]) < key(r.records[i]));
    }
}

TEST_CASE("deterministic stub output is reproduced across runs") {
    StubEndpoint stub;
    testutil::TempDir tmp("collect_det");
    std::vector<LLMDescriptor> pool{{"llmA", stub.url(), {}, true}};
    IngestConfig cfg;
    cfg.samples_per_cell = 1;
    cfg.temperature = 0.0;
    CollectResult a = collect_generations(pool, open_queries(3), cfg, tmp.path("a.jsonl"));
    CollectResult b = collect_generations(pool, open_queries(3), cfg, tmp.path("b.jsonl"));
    CHECK(testutil::slurp(tmp.path("a.jsonl")) == testutil::slurp(tmp.path("b.jsonl")));
    REQUIRE(a.records.size() == b.records.size());
}

TEST_CASE("a failing cell does not disturb the others") {
    StubEndpoint stub;
    stub.fail_first_n = 3;  // first request fails through all its retries
    testutil::TempDir tmp("collect_fail");
    std::vector<LLMDescriptor> pool{{"llmA", stub.url(), {}, true}};
    IngestConfig cfg;
    cfg.samples_per_cell = 2;
    cfg.retry_limit = 2;
    cfg.max_concurrent_requests = 1;  // deterministic request order

    CollectResult r = collect_generations(pool, open_queries(3), cfg, tmp.path("gen.jsonl"));
    REQUIRE(r.failures.size() == 1);
    CHECK(r.failures[0].query_id == "q0");
    CHECK(r.records.size() == 4);  // the two healthy cells
}

TEST_CASE("bounded concurrency is respected") {
    StubEndpoint stub;
    stub.delay_ms = 25;
    testutil::TempDir tmp("collect_conc");
    std::vector<LLMDescriptor> pool{{"llmA", stub.url(), {}, true}, {"llmB", stub.url(), {}, true}};
    IngestConfig cfg;
    cfg.samples_per_cell = 1;
    cfg.max_concurrent_requests = 2;

    collect_generations(pool, open_queries(4), cfg, tmp.path("gen.jsonl"));
    CHECK(stub.max_in_flight.load() <= 2);
    CHECK(stub.max_in_flight.load() >= 1);
    CHECK(stub.requests.load() == 8);
}

TEST_CASE("multiple-choice cells use per-option logprobs") {
    StubEndpoint stub;
    testutil::TempDir tmp("collect_mc");
    std::vector<LLMDescriptor> pool{{"llmA", stub.url(), {}, true}};
    Query mc;
    mc.id = "m1";
    mc.text = "pick a letter";
    mc.kind = QueryKind::multiple_choice;
    mc.options = {"A", "B", "C"};
    mc.gold = "C";
    IngestConfig cfg;

    CollectResult r = collect_generations(pool, {mc}, cfg, tmp.path("gen.jsonl"));
    REQUIRE(r.records.size() == 1);
    REQUIRE(r.records[0].option_probs.has_value());
    const auto& probs = *r.records[0].option_probs;
    // Stub logprobs: A -4, B -2, C -1; shifted exponentials keep the order.
    CHECK(probs.at("C") == doctest::Approx(1.0));
    CHECK(probs.at("B") == doctest::Approx(std::exp(-1.0)));
    CHECK(probs.at("A") == doctest::Approx(std::exp(-3.0)));
}

TEST_CASE("an LLM without an endpoint is rejected") {
    std::vector<LLMDescriptor> pool{{"llmA", std::nullopt, {}, true}};
    IngestConfig cfg;
    testutil::TempDir tmp("collect_noep");
    CHECK_THROWS_AS(collect_generations(pool, open_queries(1), cfg, tmp.path("g.jsonl")),
                    ValidationError);
}
