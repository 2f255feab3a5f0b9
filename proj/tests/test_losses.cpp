#include <doctest.h>

#include <cmath>

#include "routerdc/losses.hpp"
#include "test_helpers.hpp"

using namespace routerdc;

namespace {

RouterParameters tiny_params(int t = 3, std::uint64_t seed = 42) {
    EncoderShape shape;
    shape.hash_dim = 16;
    shape.hidden_dim = 8;
    shape.embed_dim = 4;
    FeaturizerConfig feat;
    feat.hash_dim = 16;
    std::vector<std::string> names;
    for (int i = 0; i < t; ++i) names.push_back("llm" + std::to_string(i));
    return init_router_parameters(shape, feat, names, seed);
}

// Value-only recomputation used as the finite-difference target.
double sample_llm_value(const std::string& text, const RouterParameters& params,
                        const SelectionSets& sets) {
    std::vector<double> sims = similarities(encode(text, params), params);
    std::vector<double> pos, neg;
    for (std::size_t t : sets.positives) pos.push_back(sims[t]);
    for (std::size_t t : sets.negatives) neg.push_back(sims[t]);
    return sample_llm_loss_from_sims(pos, neg).value;
}

// Independent scalar KL oracle, straight from the definition.
double kl_oracle(std::vector<double> p, std::vector<double> q) {
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) acc += p[i] * std::log(p[i] / q[i]);
    return acc;
}

}  // namespace

TEST_CASE("selection sets follow the top/bottom rule") {
    SUBCASE("worked example") {
        std::vector<double> row{0.9, 0.8, 0.7, 0.4, 0.2, 0.0, 0.6};
        SelectionSets sets = build_selection_sets(row, 3, 3);
        CHECK(sets.positives == std::vector<std::size_t>{0, 1, 2});
        CHECK(sets.negatives == std::vector<std::size_t>{5, 4, 3});
    }
    SUBCASE("scores at or above one half never become negatives") {
        std::vector<double> row{0.9, 0.8, 0.7, 0.6, 0.5};
        SelectionSets sets = build_selection_sets(row, 2, 3);
        CHECK(sets.positives == std::vector<std::size_t>{0, 1});
        CHECK(sets.negatives.empty());
    }
    SUBCASE("ties break by ascending index") {
        std::vector<double> row{0.3, 0.3, 0.3, 0.3, 0.3, 0.3};
        SelectionSets sets = build_selection_sets(row, 3, 2);
        CHECK(sets.positives == std::vector<std::size_t>{0, 1, 2});
        CHECK(sets.negatives == std::vector<std::size_t>{3, 4});
    }
    SUBCASE("positives cap at the pool size") {
        std::vector<double> row{0.9, 0.1};
        SelectionSets sets = build_selection_sets(row, 5, 3);
        CHECK(sets.positives == std::vector<std::size_t>{0, 1});
        CHECK(sets.negatives.empty());  // 0.1 is a positive already
    }
    SUBCASE("negatives never overlap positives even when K+ + K- exceeds T") {
        std::vector<double> row{0.4, 0.3, 0.2, 0.1};
        SelectionSets sets = build_selection_sets(row, 3, 3);
        CHECK(sets.positives == std::vector<std::size_t>{0, 1, 2});
        CHECK(sets.negatives == std::vector<std::size_t>{3});
    }
}

TEST_CASE("sample-LLM loss closed-form values") {
    SUBCASE("all similarities equal: each term is ln(1 + |negatives|)") {
        std::vector<double> pos{0.4, 0.4, 0.4};
        std::vector<double> neg{0.4, 0.4, 0.4};
        CHECK(sample_llm_loss_from_sims(pos, neg).value ==
              doctest::Approx(3.0 * std::log(4.0)).epsilon(1e-12));
    }
    SUBCASE("one positive at +1, one negative at -1") {
        std::vector<double> pos{1.0};
        std::vector<double> neg{-1.0};
        CHECK(sample_llm_loss_from_sims(pos, neg).value ==
              doctest::Approx(std::log(1.0 + std::exp(-2.0))).epsilon(1e-12));
        CHECK(sample_llm_loss_from_sims(pos, neg).value == doctest::Approx(0.126928).epsilon(1e-5));
    }
    SUBCASE("no negatives means exactly zero loss and zero gradients") {
        std::vector<double> pos{0.9, -0.2};
        SimLossResult r = sample_llm_loss_from_sims(pos, {});
        CHECK(r.value == 0.0);
        for (double g : r.d_positions) CHECK(g == 0.0);
    }
    SUBCASE("empty positive set rejected") {
        CHECK_THROWS_AS(sample_llm_loss_from_sims({}, std::vector<double>{0.1}), ValidationError);
    }
    SUBCASE("monotone: raising a positive lowers the loss, raising a negative lifts it") {
        Rng rng(71);
        for (int trial = 0; trial < 25; ++trial) {
            std::size_t np = 1 + rng.below(3), nn = 1 + rng.below(3);
            std::vector<double> pos, neg;
            for (std::size_t i = 0; i < np; ++i) pos.push_back(rng.uniform(-1.0, 1.0));
            for (std::size_t i = 0; i < nn; ++i) neg.push_back(rng.uniform(-1.0, 1.0));
            double base = sample_llm_loss_from_sims(pos, neg).value;

            std::size_t pi = rng.below(np);
            std::vector<double> pos_up = pos;
            pos_up[pi] += rng.uniform(0.01, 0.5);
            CHECK(sample_llm_loss_from_sims(pos_up, neg).value < base);

            std::size_t ni = rng.below(nn);
            std::vector<double> neg_up = neg;
            neg_up[ni] += rng.uniform(0.01, 0.5);
            CHECK(sample_llm_loss_from_sims(pos, neg_up).value > base);
        }
    }
    SUBCASE("stable under extreme synthetic similarity values") {
        std::vector<double> pos{-800.0};
        std::vector<double> neg{700.0, -700.0};
        SimLossResult r = sample_llm_loss_from_sims(pos, neg);
        CHECK(std::isfinite(r.value));
        CHECK(r.value == doctest::Approx(1500.0).epsilon(1e-9));  // dominated by the hot negative
    }
}

TEST_CASE("sample-sample loss closed-form values") {
    SUBCASE("all sims equal with three negatives is ln 4") {
        std::vector<double> neg{0.7, 0.7, 0.7};
        CHECK(contrastive_sim_loss(0.7, neg).value == doctest::Approx(std::log(4.0)).epsilon(1e-12));
    }
    SUBCASE("positive at 1 and three negatives at 0") {
        std::vector<double> neg{0.0, 0.0, 0.0};
        CHECK(contrastive_sim_loss(1.0, neg).value ==
              doctest::Approx(std::log(1.0 + 3.0 / std::exp(1.0))).epsilon(1e-12));
        CHECK(contrastive_sim_loss(1.0, neg).value == doctest::Approx(0.743668).epsilon(1e-5));
    }
    SUBCASE("no out-group peers means zero") {
        CHECK(contrastive_sim_loss(0.3, {}).value == 0.0);
    }
}

TEST_CASE("KL loss values and direction") {
    SUBCASE("identical distributions give zero") {
        std::vector<double> sims{0.2, 0.2, 0.2};
        std::vector<double> target{0.7, 0.7, 0.7};
        CHECK(kl_loss_from_sims(sims, target, KlDirection::router_first).value ==
              doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("router (0.8808, 0.1192) against a uniform target") {
        // Scalar oracle evaluation: KL = 0.327814..., frozen here.
        std::vector<double> sims{1.0, -1.0};
        std::vector<double> target{0.0, 0.0};
        std::vector<double> r = softmax(sims);
        double expected = kl_oracle(r, {0.5, 0.5});
        CHECK(expected == doctest::Approx(0.327814).epsilon(1e-5));
        CHECK(kl_loss_from_sims(sims, target, KlDirection::router_first).value ==
              doctest::Approx(expected).epsilon(1e-12));
    }
    SUBCASE("reverse direction matches its own oracle") {
        std::vector<double> sims{0.5, -0.3, 0.1};
        std::vector<double> target{2.0, 0.0, 1.0};
        double expected = kl_oracle(softmax(target), softmax(sims));
        CHECK(kl_loss_from_sims(sims, target, KlDirection::target_first).value ==
              doctest::Approx(expected).epsilon(1e-12));
    }
    SUBCASE("loss is non-negative") {
        Rng rng(3);
        for (int trial = 0; trial < 30; ++trial) {
            std::vector<double> sims, target;
            for (int t = 0; t < 4; ++t) {
                sims.push_back(rng.uniform(-1.0, 1.0));
                target.push_back(rng.uniform(0.0, 1.0));
            }
            CHECK(kl_loss_from_sims(sims, target, KlDirection::router_first).value >= -1e-12);
        }
    }
}

TEST_CASE("cosine classifier equals the K+=1 sample-LLM special case") {
    SUBCASE("uniform similarities give ln T") {
        std::vector<double> sims{0.1, 0.1, 0.1, 0.1};
        CHECK(cross_entropy_from_sims(sims, 2).value == doctest::Approx(std::log(4.0)).epsilon(1e-12));
    }
    SUBCASE("a peaked router drives the loss to zero") {
        std::vector<double> sims{60.0, 0.0, 0.0};
        CHECK(cross_entropy_from_sims(sims, 0).value == doctest::Approx(0.0).epsilon(1e-9));
    }
    SUBCASE("equivalence on random instances") {
        Rng rng(31);
        double max_diff = 0.0;
        for (int trial = 0; trial < 100; ++trial) {
            std::size_t t_count = 3 + rng.below(4);
            std::vector<double> sims, scores;
            for (std::size_t t = 0; t < t_count; ++t) {
                sims.push_back(rng.uniform(-1.0, 1.0));
                scores.push_back(rng.uniform(0.0, 1.0));
            }
            std::size_t label = 0;
            for (std::size_t t = 1; t < t_count; ++t)
                if (scores[t] > scores[label]) label = t;
            // I+ = {argmax}, I- = everyone else, no 0.5 filter.
            std::vector<double> pos{sims[label]};
            std::vector<double> neg;
            for (std::size_t t = 0; t < t_count; ++t)
                if (t != label) neg.push_back(sims[t]);
            double a = cross_entropy_from_sims(sims, label).value;
            double b = sample_llm_loss_from_sims(pos, neg).value;
            max_diff = std::max(max_diff, std::abs(a - b));
        }
        CHECK(max_diff < 1e-9);
    }
}

TEST_CASE("model-level gradients match finite differences") {
    auto params = tiny_params(4, 11);
    testutil::widen_embeddings(params);
    const std::string text = "route this query to the right expert";

    SUBCASE("sample-LLM loss") {
        std::vector<double> row{0.9, 0.8, 0.1, 0.3};
        SelectionSets sets = build_selection_sets(row, 2, 2);
        REQUIRE(sets.positives.size() == 2);
        REQUIRE(sets.negatives.size() == 2);

        GradientBuffer grads(params);
        EncodeCache cache = encode_with_cache(text, params);
        sample_llm_loss(cache, params, sets, grads);
        encode_backward(cache, params, grads.encoder);

        auto value = [&]() { return sample_llm_value(text, params, sets); };
        auto r = testutil::finite_difference_check(params, value, grads.pack());
        CHECK(r.max_rel_error < 1e-4);
    }

    SUBCASE("gradients flow only to selected embeddings") {
        std::vector<double> row{0.9, 0.8, 0.1, 0.3};
        SelectionSets sets = build_selection_sets(row, 1, 1);  // {0} and {2}
        GradientBuffer grads(params);
        EncodeCache cache = encode_with_cache(text, params);
        sample_llm_loss(cache, params, sets, grads);
        auto norm = [&](std::size_t t) {
            double acc = 0.0;
            for (double g : grads.embeddings[t]) acc += g * g;
            return acc;
        };
        CHECK(norm(0) > 0.0);
        CHECK(norm(2) > 0.0);
        CHECK(norm(1) == 0.0);
        CHECK(norm(3) == 0.0);
    }

    SUBCASE("sample-sample loss") {
        const std::string anchor_text = "first text in the cluster";
        const std::string pos_text = "second text in the cluster";
        const std::vector<std::string> neg_texts{"far away text", "another distant text"};

        auto value = [&]() {
            std::vector<double> anchor = encode(anchor_text, params);
            std::vector<double> pos = encode(pos_text, params);
            std::vector<double> negs;
            std::vector<double> neg_sims;
            for (const auto& t : neg_texts)
                neg_sims.push_back(cosine_sim(anchor, encode(t, params)));
            return contrastive_sim_loss(cosine_sim(anchor, pos), neg_sims).value;
        };

        GradientBuffer grads(params);
        EncodeCache anchor = encode_with_cache(anchor_text, params);
        EncodeCache pos = encode_with_cache(pos_text, params);
        std::vector<EncodeCache> negs;
        for (const auto& t : neg_texts) negs.push_back(encode_with_cache(t, params));
        std::vector<EncodeCache*> neg_ptrs;
        for (auto& n : negs) neg_ptrs.push_back(&n);
        sample_sample_loss(anchor, pos, neg_ptrs);
        encode_backward(anchor, params, grads.encoder);
        encode_backward(pos, params, grads.encoder);
        for (auto& n : negs) encode_backward(n, params, grads.encoder);

        auto r = testutil::finite_difference_check(params, value, grads.pack());
        CHECK(r.max_rel_error < 1e-4);
    }

    SUBCASE("KL loss, both directions") {
        std::vector<double> row{0.9, 0.2, 0.7, 0.4};
        for (KlDirection dir : {KlDirection::router_first, KlDirection::target_first}) {
            auto value = [&]() {
                std::vector<double> sims = similarities(encode(text, params), params);
                return kl_loss_from_sims(sims, row, dir).value;
            };
            GradientBuffer grads(params);
            EncodeCache cache = encode_with_cache(text, params);
            kl_baseline_loss(cache, params, row, grads, dir);
            encode_backward(cache, params, grads.encoder);
            auto r = testutil::finite_difference_check(params, value, grads.pack());
            CHECK(r.max_rel_error < 1e-4);
        }
    }

    SUBCASE("cosine classifier loss") {
        std::vector<double> row{0.1, 0.8, 0.2, 0.4};
        auto value = [&]() {
            std::vector<double> sims = similarities(encode(text, params), params);
            return cross_entropy_from_sims(sims, 1).value;
        };
        GradientBuffer grads(params);
        EncodeCache cache = encode_with_cache(text, params);
        cosine_classifier_loss(cache, params, row, grads);
        encode_backward(cache, params, grads.encoder);
        auto r = testutil::finite_difference_check(params, value, grads.pack());
        CHECK(r.max_rel_error < 1e-4);
    }
}

namespace {

struct BatchFixture {
    std::vector<Query> queries;
    ScoreMatrix scores;
    std::vector<const Query*> batch;
};

BatchFixture batch_fixture(int cluster_of_all = -1) {
    BatchFixture f;
    std::vector<std::string> texts{"alpha alpha text", "alpha beta text", "gamma delta text",
                                   "gamma epsilon text"};
    std::vector<int> clusters = cluster_of_all >= 0
                                    ? std::vector<int>(4, cluster_of_all)
                                    : std::vector<int>{0, 0, 1, 1};
    std::vector<double> scores;
    Rng rng(5);
    for (int i = 0; i < 4; ++i) {
        Query q;
        q.id = "q" + std::to_string(i);
        q.text = texts[static_cast<std::size_t>(i)];
        q.gold = "#### 1";
        q.cluster_id = clusters[static_cast<std::size_t>(i)];
        f.queries.push_back(std::move(q));
        for (int t = 0; t < 3; ++t) scores.push_back(rng.below(10) / 10.0);
    }
    f.scores = ScoreMatrix({"q0", "q1", "q2", "q3"}, {"llm0", "llm1", "llm2"}, std::move(scores));
    for (const Query& q : f.queries) f.batch.push_back(&q);
    return f;
}

}  // namespace

TEST_CASE("total loss composition") {
    auto params = tiny_params(3, 21);
    TrainConfig cfg;
    cfg.k_plus = 2;
    cfg.k_minus = 1;
    cfg.h_out_group = 2;

    SUBCASE("lambda zero reduces to the sample-LLM sum") {
        BatchFixture f = batch_fixture();
        cfg.lambda = 0.0;
        Rng rng(9);
        BatchLossResult total = total_loss(f.batch, params, cfg, f.scores, rng);

        double expected = 0.0;
        GradientBuffer grads(params);
        for (const Query* q : f.batch) {
            std::vector<double> row(f.scores.score_row(f.scores.row_of(q->id)),
                                    f.scores.score_row(f.scores.row_of(q->id)) + 3);
            if (std::all_of(row.begin(), row.end(), [](double s) { return s == 0.0; })) continue;
            SelectionSets sets = build_selection_sets(row, cfg.k_plus, cfg.k_minus);
            expected += sample_llm_value(q->text, params, sets);
        }
        CHECK(total.value == doctest::Approx(expected).epsilon(1e-12));
    }

    SUBCASE("a single-cluster batch has zero sample-sample terms") {
        BatchFixture f = batch_fixture(0);
        cfg.lambda = 1.0;
        Rng rng_a(9), rng_b(9);
        BatchLossResult with_ss = total_loss(f.batch, params, cfg, f.scores, rng_a);
        cfg.lambda = 0.0;
        BatchLossResult without_ss = total_loss(f.batch, params, cfg, f.scores, rng_b);
        CHECK(with_ss.value == doctest::Approx(without_ss.value).epsilon(1e-12));
    }

    SUBCASE("an all-zero score row is skipped") {
        BatchFixture f = batch_fixture();
        std::vector<double> scores = f.scores.raw_scores();
        for (int t = 0; t < 3; ++t) scores[t] = 0.0;  // q0's row
        ScoreMatrix zeroed({"q0", "q1", "q2", "q3"}, {"llm0", "llm1", "llm2"}, std::move(scores));
        cfg.lambda = 0.0;
        Rng rng(9);
        BatchLossResult all = total_loss(f.batch, params, cfg, zeroed, rng);
        std::vector<const Query*> rest(f.batch.begin() + 1, f.batch.end());
        Rng rng2(9);
        BatchLossResult without_q0 = total_loss(rest, params, cfg, zeroed, rng2);
        CHECK(all.value == doctest::Approx(without_q0.value).epsilon(1e-12));
    }

    SUBCASE("missing cluster id is an error when the sample-sample term is active") {
        BatchFixture f = batch_fixture();
        f.queries[2].cluster_id.reset();
        cfg.lambda = 1.0;
        Rng rng(9);
        CHECK_THROWS_AS(total_loss(f.batch, params, cfg, f.scores, rng), ValidationError);
    }

    SUBCASE("missing score row is an error") {
        BatchFixture f = batch_fixture();
        ScoreMatrix partial({"q0"}, {"llm0", "llm1", "llm2"}, {0.1, 0.2, 0.3});
        cfg.lambda = 0.0;
        Rng rng(9);
        CHECK_THROWS_AS(total_loss(f.batch, params, cfg, partial, rng), ValidationError);
    }

    SUBCASE("gradient matches finite differences with the joint objective") {
        BatchFixture f = batch_fixture();
        testutil::widen_embeddings(params);
        cfg.lambda = 1.0;
        Rng rng(13);
        PeerAssignments peers = sample_peer_assignments(f.batch, cfg.h_out_group, rng);

        BatchLossResult analytic = total_loss(f.batch, params, cfg, f.scores, peers);
        auto value = [&]() { return total_loss(f.batch, params, cfg, f.scores, peers).value; };
        auto r = testutil::finite_difference_check(params, value, analytic.grads.pack());
        CHECK(r.max_rel_error < 1e-4);
    }
}

TEST_CASE("permutation symmetry of the sample-LLM objective") {
    auto params = tiny_params(4, 77);
    const std::string text = "permutation check";
    std::vector<double> row{0.9, 0.1, 0.6, 0.2};
    SelectionSets sets = build_selection_sets(row, 2, 2);

    GradientBuffer grads(params);
    EncodeCache cache = encode_with_cache(text, params);
    double base = sample_llm_loss(cache, params, sets, grads);

    // Swap LLMs 0 and 3 everywhere: value invariant, gradients permuted.
    RouterParameters permuted = params;
    std::swap(permuted.llm_embeddings[0], permuted.llm_embeddings[3]);
    std::vector<double> prow{row[3], row[1], row[2], row[0]};
    SelectionSets psets = build_selection_sets(prow, 2, 2);
    GradientBuffer pgrads(permuted);
    EncodeCache pcache = encode_with_cache(text, permuted);
    double permuted_value = sample_llm_loss(pcache, permuted, psets, pgrads);

    CHECK(base == doctest::Approx(permuted_value).epsilon(1e-12));
    for (int d = 0; d < params.shape.embed_dim; ++d) {
        CHECK(grads.embeddings[0][d] == doctest::Approx(pgrads.embeddings[3][d]).epsilon(1e-12));
        CHECK(grads.embeddings[3][d] == doctest::Approx(pgrads.embeddings[0][d]).epsilon(1e-12));
    }
}

TEST_CASE("tied top scores leave the loss invariant under embedding swap") {
    auto params = tiny_params(4, 99);
    const std::string text = "tied positives";
    std::vector<double> row{0.8, 0.8, 0.1, 0.2};  // LLMs 0 and 1 tie at the top
    SelectionSets sets = build_selection_sets(row, 2, 2);

    GradientBuffer grads(params);
    EncodeCache cache = encode_with_cache(text, params);
    double base = sample_llm_loss(cache, params, sets, grads);

    RouterParameters swapped = params;
    std::swap(swapped.llm_embeddings[0], swapped.llm_embeddings[1]);
    GradientBuffer sgrads(swapped);
    EncodeCache scache = encode_with_cache(text, swapped);
    double swapped_value = sample_llm_loss(scache, swapped, sets, sgrads);
    CHECK(base == doctest::Approx(swapped_value).epsilon(1e-12));
}

TEST_CASE("peer sampling respects groups and batch bounds") {
    BatchFixture f = batch_fixture();
    Rng rng(41);
    PeerAssignments peers = sample_peer_assignments(f.batch, 3, rng);
    for (std::size_t i = 0; i < f.batch.size(); ++i) {
        REQUIRE(peers.in_group[i] >= 0);  // every element has one same-cluster peer here
        CHECK(*f.batch[static_cast<std::size_t>(peers.in_group[i])]->cluster_id ==
              *f.batch[i]->cluster_id);
        CHECK(peers.in_group[i] != static_cast<int>(i));
        CHECK(peers.out_group[i].size() == 2);  // only two out-group members exist
        for (int j : peers.out_group[i])
            CHECK(*f.batch[static_cast<std::size_t>(j)]->cluster_id != *f.batch[i]->cluster_id);
    }
}
