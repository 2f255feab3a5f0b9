// routerdc - train and serve a contrastive query router over a pool of LLMs.
//
// Subcommands: synth, ingest, score, cluster, train, route, serve, eval.
// A JSON config file (--config) supplies defaults; explicit flags win.
// Data goes to files, logs to stderr; every run prints its resolved config.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include <CLI11.hpp>
#include <json.hpp>

#include "routerdc/checkpoint.hpp"
#include "routerdc/cluster.hpp"
#include "routerdc/collect.hpp"
#include "routerdc/encoder.hpp"
#include "routerdc/eval.hpp"
#include "routerdc/io.hpp"
#include "routerdc/router.hpp"
#include "routerdc/scoring.hpp"
#include "routerdc/server.hpp"
#include "routerdc/synth.hpp"
#include "routerdc/trainer.hpp"

using namespace routerdc;
using nlohmann::json;

namespace {

constexpr int kExitSuccess = 0;
constexpr int kExitError = 1;
constexpr int kExitUsage = 2;

// All tunables reachable from the config file, one flat section per concern.
struct RunConfig {
    EncoderShape shape{4096, 256, 768};
    FeaturizerConfig featurizer;
    TrainConfig train;
    ClusterConfig cluster;
    ScoringConfig scoring;
    IngestConfig ingest;
};

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed,
                         const std::string& section) {
    for (const auto& [key, value] : j.items()) {
        if (!allowed.count(key))
            throw ValidationError("unknown config key '" + key + "' in section '" + section + "'");
    }
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

RunConfig load_run_config(const std::string& path) {
    RunConfig cfg;
    if (path.empty()) return cfg;
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed config file: ") + e.what());
    }
    reject_unknown_keys(doc, {"model", "train", "cluster", "scoring", "ingest"}, "(top level)");

    if (doc.contains("model")) {
        const json& m = doc.at("model");
        reject_unknown_keys(m, {"hash_dim", "hidden_dim", "embed_dim", "ngram_orders",
                                "word_unigrams", "hash_seed"},
                            "model");
        maybe(m, "hash_dim", cfg.shape.hash_dim);
        maybe(m, "hidden_dim", cfg.shape.hidden_dim);
        maybe(m, "embed_dim", cfg.shape.embed_dim);
        maybe(m, "ngram_orders", cfg.featurizer.ngram_orders);
        maybe(m, "word_unigrams", cfg.featurizer.word_unigrams);
        maybe(m, "hash_seed", cfg.featurizer.hash_seed);
        cfg.featurizer.hash_dim = cfg.shape.hash_dim;
    }
    if (doc.contains("train")) {
        const json& t = doc.at("train");
        reject_unknown_keys(t, {"k_plus", "k_minus", "h_out_group", "lambda", "num_groups",
                                "batch_size", "learning_rate", "weight_decay", "steps",
                                "adam_beta1", "adam_beta2", "adam_epsilon", "seed", "loss_mode",
                                "kl_direction", "cost_weight"},
                            "train");
        maybe(t, "k_plus", cfg.train.k_plus);
        maybe(t, "k_minus", cfg.train.k_minus);
        maybe(t, "h_out_group", cfg.train.h_out_group);
        maybe(t, "lambda", cfg.train.lambda);
        maybe(t, "num_groups", cfg.train.num_groups);
        maybe(t, "batch_size", cfg.train.batch_size);
        maybe(t, "learning_rate", cfg.train.learning_rate);
        maybe(t, "weight_decay", cfg.train.weight_decay);
        maybe(t, "steps", cfg.train.steps);
        maybe(t, "adam_beta1", cfg.train.adam_beta1);
        maybe(t, "adam_beta2", cfg.train.adam_beta2);
        maybe(t, "adam_epsilon", cfg.train.adam_epsilon);
        maybe(t, "seed", cfg.train.seed);
        maybe(t, "cost_weight", cfg.train.cost_weight);
        if (t.contains("loss_mode")) cfg.train.loss_mode = loss_mode_from_string(t.at("loss_mode"));
        if (t.contains("kl_direction"))
            cfg.train.kl_direction = kl_direction_from_string(t.at("kl_direction"));
    }
    if (doc.contains("cluster")) {
        const json& c = doc.at("cluster");
        reject_unknown_keys(c, {"num_groups", "reducer", "reduced_dim", "tsne_perplexity",
                                "tsne_iters", "tsne_learning_rate", "tsne_early_exaggeration",
                                "tsne_exaggeration_iters", "kmeans_max_iters", "kmeans_tol", "seed",
                                "group_source"},
                            "cluster");
        maybe(c, "num_groups", cfg.cluster.num_groups);
        maybe(c, "reduced_dim", cfg.cluster.reduced_dim);
        maybe(c, "tsne_perplexity", cfg.cluster.tsne_perplexity);
        maybe(c, "tsne_iters", cfg.cluster.tsne_iters);
        maybe(c, "tsne_learning_rate", cfg.cluster.tsne_learning_rate);
        maybe(c, "tsne_early_exaggeration", cfg.cluster.tsne_early_exaggeration);
        maybe(c, "tsne_exaggeration_iters", cfg.cluster.tsne_exaggeration_iters);
        maybe(c, "kmeans_max_iters", cfg.cluster.kmeans_max_iters);
        maybe(c, "kmeans_tol", cfg.cluster.kmeans_tol);
        maybe(c, "seed", cfg.cluster.seed);
        if (c.contains("reducer")) cfg.cluster.reducer = reducer_from_string(c.at("reducer"));
        if (c.contains("group_source"))
            cfg.cluster.group_source = group_source_from_string(c.at("group_source"));
    }
    if (doc.contains("scoring")) {
        const json& s = doc.at("scoring");
        reject_unknown_keys(s, {"punish_wrong_choice", "cost_weight", "answer_extraction_rule"},
                            "scoring");
        maybe(s, "punish_wrong_choice", cfg.scoring.punish_wrong_choice);
        maybe(s, "cost_weight", cfg.scoring.cost_weight);
        if (s.contains("answer_extraction_rule"))
            cfg.scoring.answer_extraction_rule =
                extraction_rule_from_string(s.at("answer_extraction_rule"));
    }
    if (doc.contains("ingest")) {
        const json& i = doc.at("ingest");
        reject_unknown_keys(i, {"samples_per_cell", "temperature", "max_concurrent_requests",
                                "retry_limit", "request_timeout_ms", "open_prompt_template",
                                "choice_prompt_template"},
                            "ingest");
        maybe(i, "samples_per_cell", cfg.ingest.samples_per_cell);
        maybe(i, "temperature", cfg.ingest.temperature);
        maybe(i, "max_concurrent_requests", cfg.ingest.max_concurrent_requests);
        maybe(i, "retry_limit", cfg.ingest.retry_limit);
        maybe(i, "request_timeout_ms", cfg.ingest.request_timeout_ms);
        maybe(i, "open_prompt_template", cfg.ingest.open_prompt_template);
        maybe(i, "choice_prompt_template", cfg.ingest.choice_prompt_template);
    }
    return cfg;
}

json resolved_config_json(const RunConfig& cfg) {
    return json{
        {"model",
         {{"hash_dim", cfg.shape.hash_dim},
          {"hidden_dim", cfg.shape.hidden_dim},
          {"embed_dim", cfg.shape.embed_dim},
          {"ngram_orders", cfg.featurizer.ngram_orders},
          {"word_unigrams", cfg.featurizer.word_unigrams},
          {"hash_seed", cfg.featurizer.hash_seed}}},
        {"train",
         {{"k_plus", cfg.train.k_plus},
          {"k_minus", cfg.train.k_minus},
          {"h_out_group", cfg.train.h_out_group},
          {"lambda", cfg.train.lambda},
          {"num_groups", cfg.train.num_groups},
          {"batch_size", cfg.train.batch_size},
          {"learning_rate", cfg.train.learning_rate},
          {"weight_decay", cfg.train.weight_decay},
          {"steps", cfg.train.steps},
          {"adam_beta1", cfg.train.adam_beta1},
          {"adam_beta2", cfg.train.adam_beta2},
          {"adam_epsilon", cfg.train.adam_epsilon},
          {"seed", cfg.train.seed},
          {"loss_mode", to_string(cfg.train.loss_mode)},
          {"kl_direction", to_string(cfg.train.kl_direction)},
          {"cost_weight", cfg.train.cost_weight}}},
        {"cluster",
         {{"num_groups", cfg.cluster.num_groups},
          {"reducer", to_string(cfg.cluster.reducer)},
          {"reduced_dim", cfg.cluster.reduced_dim},
          {"tsne_perplexity", cfg.cluster.tsne_perplexity},
          {"tsne_iters", cfg.cluster.tsne_iters},
          {"kmeans_max_iters", cfg.cluster.kmeans_max_iters},
          {"kmeans_tol", cfg.cluster.kmeans_tol},
          {"seed", cfg.cluster.seed},
          {"group_source", to_string(cfg.cluster.group_source)}}},
        {"scoring",
         {{"punish_wrong_choice", cfg.scoring.punish_wrong_choice},
          {"cost_weight", cfg.scoring.cost_weight},
          {"answer_extraction_rule", to_string(cfg.scoring.answer_extraction_rule)}}},
        {"ingest",
         {{"samples_per_cell", cfg.ingest.samples_per_cell},
          {"temperature", cfg.ingest.temperature},
          {"max_concurrent_requests", cfg.ingest.max_concurrent_requests},
          {"retry_limit", cfg.ingest.retry_limit},
          {"request_timeout_ms", cfg.ingest.request_timeout_ms}}}};
}

// FNV-1a of the resolved config, reported by eval for provenance.
std::string config_hash(const json& j) {
    std::string text = j.dump();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) h = (h ^ c) * 1099511628211ull;
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void log_resolved_config(const RunConfig& cfg, const std::string& subcommand) {
    json j = resolved_config_json(cfg);
    std::cerr << "resolved config [" << subcommand << "]: " << j.dump() << "\n";
}

std::string env_or_empty(const char* name) {
    const char* v = std::getenv(name);
    return v ? v : "";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"routerdc - contrastive query router for LLM pools"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand

    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string global_out;
    app.add_option("--config", config_path, "JSON config file; flags override it")
        ->envname("ROUTERDC_CONFIG");
    app.add_option_function<std::uint64_t>(
           "--seed", [&](std::uint64_t s) { seed = s; seed_set = true; },
           "seed applied to every stage of the subcommand");
    app.add_option("--out-dir", global_out,
                   "default directory for outputs the subcommand does not place explicitly");

    // ---- synth ----
    auto* synth_cmd = app.add_subcommand("synth", "generate synthetic fixture files");
    std::string synth_out = "synth";
    SynthConfig synth_cfg;
    std::string synth_mode = "experts";
    auto* synth_out_opt = synth_cmd->add_option("--out-dir", synth_out, "output directory");
    synth_cmd->add_option("--mode", synth_mode, "experts | co_experts | costed");
    synth_cmd->add_option("--tasks", synth_cfg.tasks, "number of tasks");
    synth_cmd->add_option("--llms", synth_cfg.llms, "pool size (experts mode)");
    synth_cmd->add_option("--per-task", synth_cfg.per_task, "training queries per task");
    synth_cmd->add_option("--test-per-task", synth_cfg.test_per_task, "test queries per task");
    synth_cmd->add_option("--samples-per-query", synth_cfg.samples_per_cell,
                          "sampled generations per (query, LLM)");

    // ---- ingest ----
    auto* ingest_cmd = app.add_subcommand("ingest", "collect generations from live endpoints");
    std::string ingest_pool, ingest_queries, ingest_out = "generations.jsonl";
    ingest_cmd->add_option("--pool", ingest_pool, "pool file with endpoints")->required();
    ingest_cmd->add_option("--queries", ingest_queries, "queries file")->required();
    auto* ingest_out_opt = ingest_cmd->add_option("--out", ingest_out, "output generations file");

    // ---- score ----
    auto* score_cmd = app.add_subcommand("score", "turn generations into a score matrix");
    std::string score_queries, score_generations, score_pool, score_out = "scores.jsonl";
    score_cmd->add_option("--queries", score_queries)->required();
    score_cmd->add_option("--generations", score_generations)->required();
    score_cmd->add_option("--pool", score_pool, "pool file pinning the LLM columns");
    auto* score_out_opt = score_cmd->add_option("--out", score_out);

    // ---- cluster ----
    auto* cluster_cmd = app.add_subcommand("cluster", "group queries for the sample-sample loss");
    std::string cluster_queries, cluster_out = "clusters.jsonl";
    cluster_cmd->add_option("--queries", cluster_queries)->required();
    auto* cluster_out_opt = cluster_cmd->add_option("--out", cluster_out);
    std::string cluster_reducer, cluster_source;
    int cluster_n = -1;
    double cluster_perplexity = -1.0;
    cluster_cmd->add_option("--n", cluster_n, "number of groups");
    cluster_cmd->add_option("--reducer", cluster_reducer, "tsne | pca | none");
    cluster_cmd->add_option("--perplexity", cluster_perplexity);
    cluster_cmd->add_option("--group-source", cluster_source, "clustering | task_identity");

    // ---- train ----
    auto* train_cmd = app.add_subcommand("train", "train the router");
    std::string train_queries, train_scores, train_clusters, train_out = ".";
    train_cmd->add_option("--queries", train_queries)->required();
    train_cmd->add_option("--scores", train_scores)->required();
    train_cmd->add_option("--clusters", train_clusters, "cluster assignments file");
    auto* train_out_opt =
        train_cmd->add_option("--out-dir", train_out, "directory for checkpoint.json + loss_log.tsv");
    int train_steps = -1, train_batch = -1, train_kp = -1, train_km = -1, train_h = -1;
    double train_lr = -1.0, train_lambda = -1.0, train_wd = -1.0, train_cw = std::nan("");
    std::string train_mode;
    int model_hash_dim = -1, model_hidden = -1, model_p = -1;
    train_cmd->add_option("--steps", train_steps);
    train_cmd->add_option("--batch-size", train_batch);
    train_cmd->add_option("--k-plus", train_kp);
    train_cmd->add_option("--k-minus", train_km);
    train_cmd->add_option("--h-peers", train_h, "out-group peers per anchor (H)");
    train_cmd->add_option("--lr", train_lr);
    train_cmd->add_option("--lambda", train_lambda);
    train_cmd->add_option("--weight-decay", train_wd);
    train_cmd->add_option("--cost-weight", train_cw);
    train_cmd->add_option("--loss-mode", train_mode,
                          "routerdc | kl_baseline | cosine_classifier | kl_plus_sample_sample");
    train_cmd->add_option("--hash-dim", model_hash_dim);
    train_cmd->add_option("--hidden", model_hidden);
    train_cmd->add_option("--p", model_p, "embedding dimension");

    // ---- route ----
    auto* route_cmd = app.add_subcommand("route", "route one query with a trained checkpoint");
    std::string route_ckpt, route_text, route_out = "-";
    std::vector<std::string> route_exclude;
    route_cmd->add_option("--checkpoint", route_ckpt)->required();
    route_cmd->add_option("--text", route_text)->required();
    route_cmd->add_option("--exclude", route_exclude, "LLM names to mask")->take_all();
    route_cmd->add_option("--out", route_out, "output file, '-' for stdout");

    // ---- serve ----
    auto* serve_cmd = app.add_subcommand("serve", "run the HTTP routing gateway");
    std::string serve_ckpt, serve_bind = "127.0.0.1:8080";
    serve_cmd->add_option("--checkpoint", serve_ckpt)->required();
    serve_cmd->add_option("--bind", serve_bind, "host:port");

    // ---- eval ----
    auto* eval_cmd = app.add_subcommand("eval", "measure routing quality and baselines");
    std::string eval_queries, eval_scores, eval_generations, eval_out = "report";
    std::vector<std::string> eval_ckpts, eval_baselines;
    eval_cmd->add_option("--queries", eval_queries)->required();
    eval_cmd->add_option("--scores", eval_scores)->required();
    eval_cmd->add_option("--checkpoint", eval_ckpts, "checkpoint(s), labeled by loss mode")
        ->take_all();
    eval_cmd->add_option("--baseline", eval_baselines,
                         "oracle | voting | single:<llm> | single:all (repeatable)")
        ->take_all();
    eval_cmd->add_option("--generations", eval_generations, "needed by the voting baseline");
    auto* eval_out_opt = eval_cmd->add_option("--out-dir", eval_out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        std::cerr << json{{"error", e.what()}, {"exit", kExitUsage}}.dump() << "\n";
        return kExitUsage;
    }

    try {
        RunConfig cfg = load_run_config(config_path);
        cfg.featurizer.hash_dim = cfg.shape.hash_dim;
        if (seed_set) {
            cfg.train.seed = seed;
            cfg.cluster.seed = seed;
            synth_cfg.seed = seed;
        }
        if (!global_out.empty()) {
            std::filesystem::create_directories(global_out);
            auto inherit = [&](CLI::Option* opt, std::string& value, bool is_dir) {
                if (opt->count() > 0) return;  // explicit flag wins
                value = is_dir ? global_out : global_out + "/" + value;
            };
            inherit(synth_out_opt, synth_out, true);
            inherit(ingest_out_opt, ingest_out, false);
            inherit(score_out_opt, score_out, false);
            inherit(cluster_out_opt, cluster_out, false);
            inherit(train_out_opt, train_out, true);
            inherit(eval_out_opt, eval_out, true);
        }

        if (*synth_cmd) {
            synth_cfg.mode = synth_mode_from_string(synth_mode);
            log_resolved_config(cfg, "synth");
            SynthDataset data = synthesize(synth_cfg);
            write_synth(data, synth_out);
            std::cerr << "synth: wrote " << data.train_queries.size() << " train / "
                      << data.test_queries.size() << " test queries for " << data.pool.size()
                      << " LLMs into " << synth_out << "\n";
        } else if (*ingest_cmd) {
            log_resolved_config(cfg, "ingest");
            auto pool = read_pool(ingest_pool);
            auto queries = read_queries(ingest_queries);
            CollectResult r = collect_generations(pool, queries, cfg.ingest, ingest_out);
            std::cerr << "ingest: " << r.records.size() << " records, " << r.failures.size()
                      << " failed cells\n";
        } else if (*score_cmd) {
            log_resolved_config(cfg, "score");
            auto queries = read_queries(score_queries);
            auto generations = read_generations(score_generations, queries);
            std::vector<LLMDescriptor> pool;
            if (!score_pool.empty()) pool = read_pool(score_pool);
            ScoreMatrix matrix = build_score_matrix(queries, generations, cfg.scoring, pool);
            write_score_matrix(matrix, score_out);
            std::cerr << "score: wrote " << matrix.num_queries() << "x" << matrix.num_llms()
                      << " matrix to " << score_out << "\n";
        } else if (*cluster_cmd) {
            if (cluster_n > 0) cfg.cluster.num_groups = cluster_n;
            if (cluster_perplexity > 0) cfg.cluster.tsne_perplexity = cluster_perplexity;
            if (!cluster_reducer.empty()) cfg.cluster.reducer = reducer_from_string(cluster_reducer);
            if (!cluster_source.empty())
                cfg.cluster.group_source = group_source_from_string(cluster_source);
            log_resolved_config(cfg, "cluster");
            auto queries = read_queries(cluster_queries);
            Matrix embeddings;
            if (cfg.cluster.group_source == GroupSource::clustering) {
                // The grouping encoder is the untrained featurizer + head.
                RouterParameters probe = init_router_parameters(
                    cfg.shape, cfg.featurizer, {"probe"}, cfg.cluster.seed);
                embeddings = Matrix(queries.size(), static_cast<std::size_t>(cfg.shape.embed_dim));
                for (std::size_t i = 0; i < queries.size(); ++i) {
                    std::vector<double> e = encode(queries[i].text, probe);
                    std::copy(e.begin(), e.end(), embeddings.row(i));
                }
            }
            assign_groups(queries, embeddings, cfg.cluster);
            write_clusters(queries, cluster_out);
            std::cerr << "cluster: wrote " << queries.size() << " assignments to " << cluster_out
                      << "\n";
        } else if (*train_cmd) {
            if (train_steps >= 0) cfg.train.steps = train_steps;
            if (train_batch > 0) cfg.train.batch_size = train_batch;
            if (train_kp > 0) cfg.train.k_plus = train_kp;
            if (train_km >= 0) cfg.train.k_minus = train_km;
            if (train_h >= 0) cfg.train.h_out_group = train_h;
            if (train_lr > 0) cfg.train.learning_rate = train_lr;
            if (train_lambda >= 0) cfg.train.lambda = train_lambda;
            if (train_wd >= 0) cfg.train.weight_decay = train_wd;
            if (!std::isnan(train_cw)) cfg.train.cost_weight = train_cw;
            if (!train_mode.empty()) cfg.train.loss_mode = loss_mode_from_string(train_mode);
            if (model_hash_dim > 0) {
                cfg.shape.hash_dim = model_hash_dim;
                cfg.featurizer.hash_dim = model_hash_dim;
            }
            if (model_hidden > 0) cfg.shape.hidden_dim = model_hidden;
            if (model_p > 0) cfg.shape.embed_dim = model_p;
            log_resolved_config(cfg, "train");

            auto queries = read_queries(train_queries);
            ScoreMatrix scores = read_score_matrix(train_scores);
            if (!train_clusters.empty()) apply_clusters(queries, read_clusters(train_clusters));
            std::filesystem::create_directories(train_out);
            TrainResult result = train(queries, scores, cfg.shape, cfg.featurizer,
                                       scores.llm_names(), cfg.train);
            save_checkpoint(result.checkpoint, train_out + "/checkpoint.json");
            write_loss_log(result.loss_log, train_out + "/loss_log.tsv");
            std::cerr << "train: checkpoint " << checkpoint_id(result.checkpoint.params)
                      << " written to " << train_out << "\n";
        } else if (*route_cmd) {
            Checkpoint ckpt = load_checkpoint(route_ckpt);
            RouteResult r = route(route_text, ckpt.params,
                                  std::set<std::string>(route_exclude.begin(), route_exclude.end()));
            json probs = json::object();
            for (std::size_t t = 0; t < ckpt.params.num_llms(); ++t)
                probs[ckpt.params.llm_names[t]] = r.probabilities[t];
            json out{{"chosen_llm", r.chosen_llm}, {"probabilities", probs}};
            if (route_out == "-") {
                std::cout << out.dump() << "\n";
            } else {
                std::ofstream f(route_out, std::ios::binary | std::ios::trunc);
                if (!f) throw std::runtime_error("cannot open '" + route_out + "'");
                f << out.dump() << "\n";
            }
        } else if (*serve_cmd) {
            Checkpoint ckpt = load_checkpoint(serve_ckpt);
            auto colon = serve_bind.rfind(':');
            if (colon == std::string::npos)
                throw ValidationError("--bind must look like host:port");
            std::string host = serve_bind.substr(0, colon);
            int port = std::stoi(serve_bind.substr(colon + 1));
            RouterService service(std::move(ckpt), env_or_empty("ROUTERDC_SERVE_TOKEN"));
            std::cerr << "serve: listening on " << host << ":" << port << "\n";
            service.listen(host, port);
        } else if (*eval_cmd) {
            log_resolved_config(cfg, "eval");
            auto queries = read_queries(eval_queries);
            ScoreMatrix scores = read_score_matrix(eval_scores);

            EvalReport report;
            report.config_hash = config_hash(resolved_config_json(cfg));
            std::vector<Checkpoint> checkpoints;
            for (const std::string& path : eval_ckpts) checkpoints.push_back(load_checkpoint(path));
            for (const Checkpoint& ckpt : checkpoints) {
                std::string method = to_string(ckpt.train_config.loss_mode);
                if (report.methods.count(method))
                    method += "@" + checkpoint_id(ckpt.params).substr(0, 6);
                report.methods[method] = routing_accuracy(ckpt.params, queries, scores);
                report.assignments[method] = assignment_matrix(ckpt.params, queries);
                report.heatmaps[method] = similarity_heatmap(ckpt.params, queries);
                if (report.checkpoint_id.empty()) report.checkpoint_id = checkpoint_id(ckpt.params);
            }
            if (scores.has_costs() && !checkpoints.empty()) {
                std::vector<std::pair<double, const RouterParameters*>> variants;
                for (const Checkpoint& ckpt : checkpoints)
                    variants.emplace_back(ckpt.train_config.cost_weight, &ckpt.params);
                report.cost_curve = cost_accuracy_curve(variants, queries, scores);
            }
            for (const std::string& baseline : eval_baselines) {
                if (baseline == "oracle") {
                    report.methods["oracle"] = oracle_accuracy(queries, scores);
                } else if (baseline == "voting") {
                    if (eval_generations.empty())
                        throw ValidationError("the voting baseline needs --generations");
                    auto generations = read_generations(eval_generations, queries);
                    report.methods["voting"] = voting_baseline(
                        queries, generations, scores.llm_names(), cfg.scoring.answer_extraction_rule);
                } else if (baseline.rfind("single:", 0) == 0) {
                    std::string name = baseline.substr(7);
                    if (name == "all") {
                        for (const std::string& llm : scores.llm_names())
                            report.methods["single:" + llm] =
                                single_llm_accuracy(llm, queries, scores);
                    } else {
                        report.methods["single:" + name] = single_llm_accuracy(name, queries, scores);
                    }
                } else {
                    throw ValidationError("unknown baseline '" + baseline + "'");
                }
            }
            emit_report(report, eval_out);
            std::cerr << "eval: report written to " << eval_out << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << json{{"error", e.what()}, {"command", argv[1] ? argv[1] : ""}}.dump() << "\n";
        return kExitError;
    }
    return kExitSuccess;
}
