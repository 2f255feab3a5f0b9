#include <doctest.h>

#include <algorithm>

#include "routerdc/encoder.hpp"
#include "routerdc/router.hpp"
#include "routerdc/types.hpp"

using namespace routerdc;

namespace {

RouterParameters tiny_params(int t = 3, std::uint64_t seed = 6) {
    EncoderShape shape;
    shape.hash_dim = 32;
    shape.hidden_dim = 8;
    shape.embed_dim = 4;
    FeaturizerConfig feat;
    feat.hash_dim = 32;
    std::vector<std::string> names;
    for (int i = 0; i < t; ++i) names.push_back("llm" + std::to_string(i));
    return init_router_parameters(shape, feat, names, seed);
}

}  // namespace

TEST_CASE("route picks the highest similarity") {
    auto params = tiny_params(3);
    const std::string text = "which llm should take this";
    RouteResult r = route(text, params);
    std::vector<double> sims = similarities(encode(text, params), params);
    std::size_t best = 0;
    for (std::size_t t = 1; t < sims.size(); ++t)
        if (sims[t] > sims[best]) best = t;
    CHECK(r.chosen_llm == params.llm_names[best]);
    CHECK(r.similarities == sims);

    SUBCASE("probability argmax agrees with similarity argmax") {
        std::size_t p_best = 0;
        for (std::size_t t = 1; t < r.probabilities.size(); ++t)
            if (r.probabilities[t] > r.probabilities[p_best]) p_best = t;
        CHECK(p_best == best);
        double sum = 0.0;
        for (double p : r.probabilities) sum += p;
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
    SUBCASE("route agrees with route_distribution argmax") {
        auto dist = route_distribution(text, params);
        std::size_t d_best = 0;
        for (std::size_t t = 1; t < dist.size(); ++t)
            if (dist[t] > dist[d_best]) d_best = t;
        CHECK(params.llm_names[d_best] == r.chosen_llm);
    }
}

TEST_CASE("masking the winner falls back to the runner-up") {
    auto params = tiny_params(4);
    const std::string text = "masking check";
    RouteResult full = route(text, params);
    RouteResult masked = route(text, params, {full.chosen_llm});
    CHECK(masked.chosen_llm != full.chosen_llm);

    // The masked result equals routing over the reduced pool.
    std::vector<double> sims = full.similarities;
    std::size_t winner = params.llm_index(full.chosen_llm);
    std::size_t second = winner == 0 ? 1 : 0;
    for (std::size_t t = 0; t < sims.size(); ++t) {
        if (t == winner) continue;
        if (sims[t] > sims[second]) second = t;
    }
    CHECK(masked.chosen_llm == params.llm_names[second]);
    CHECK(masked.probabilities[winner] == 0.0);
    double sum = 0.0;
    for (double p : masked.probabilities) sum += p;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("single-LLM pool routes to it regardless of similarity") {
    auto params = tiny_params(1);
    RouteResult r = route("anything at all", params);
    CHECK(r.chosen_llm == "llm0");
}

TEST_CASE("route input validation") {
    auto params = tiny_params(2);
    CHECK_THROWS_AS(route("", params), ValidationError);
    CHECK_THROWS_AS(route("x", params, {"llm0", "llm1"}), ValidationError);
    CHECK_THROWS_AS(route("x", params, {"unknown"}), ValidationError);
}

TEST_CASE("ties break by ascending index") {
    auto params = tiny_params(3);
    // Identical embeddings make every similarity equal.
    params.llm_embeddings[1] = params.llm_embeddings[0];
    params.llm_embeddings[2] = params.llm_embeddings[0];
    RouteResult r = route("tied pool", params);
    CHECK(r.chosen_llm == "llm0");
    RouteResult masked = route("tied pool", params, {"llm0"});
    CHECK(masked.chosen_llm == "llm1");
}
