#include "routerdc/collect.hpp"

#include <algorithm>
#include <condition_variable>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "routerdc/io.hpp"

namespace routerdc {

namespace {

using nlohmann::json;

struct Endpoint {
    std::string scheme_host_port;  // e.g. http://127.0.0.1:8080
    std::string path;              // e.g. /v1/completions
};

Endpoint split_endpoint(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
        throw ValidationError("endpoint '" + url + "' must include a scheme");
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/v1/completions"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

std::string bearer_token() {
    if (const char* v = std::getenv("ROUTERDC_API_KEY"); v && *v) return v;
    if (const char* v = std::getenv("OPENAI_API_KEY"); v && *v) return v;
    return "";
}

std::string expand_template(std::string tmpl, const std::string& text, const std::string& option) {
    auto replace_all = [](std::string& s, const std::string& from, const std::string& to) {
        std::size_t pos = 0;
        while ((pos = s.find(from, pos)) != std::string::npos) {
            s.replace(pos, from.size(), to);
            pos += to.size();
        }
    };
    replace_all(tmpl, "{text}", text);
    replace_all(tmpl, "{option}", option);
    return tmpl;
}

// One POST with retry on transport errors, 5xx and 429.
json post_completion(httplib::Client& client, const Endpoint& ep, const json& payload,
                     int retry_limit, const std::string& token) {
    httplib::Headers headers;
    if (!token.empty()) headers.emplace("Authorization", "Bearer " + token);
    std::string body = payload.dump();
    std::string last_error;
    for (int attempt = 0; attempt <= retry_limit; ++attempt) {
        if (attempt > 0)
            std::this_thread::sleep_for(std::chrono::milliseconds(50 * attempt));
        auto res = client.Post(ep.path, headers, body, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 500 || res->status == 429) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200)
            throw std::runtime_error("HTTP " + std::to_string(res->status) + ": " + res->body);
        try {
            return json::parse(res->body);
        } catch (const json::exception& e) {
            throw std::runtime_error(std::string("malformed endpoint response: ") + e.what());
        }
    }
    throw std::runtime_error("endpoint unreachable after " + std::to_string(retry_limit) +
                             " retries (" + last_error + ")");
}

std::vector<GenerationRecord> fetch_open_cell(httplib::Client& client, const Endpoint& ep,
                                              const LLMDescriptor& llm, const Query& q,
                                              const IngestConfig& config, const std::string& token) {
    json payload{{"model", llm.name},
                 {"prompt", expand_template(config.open_prompt_template, q.text, "")},
                 {"temperature", config.temperature},
                 {"n", config.samples_per_cell},
                 {"max_tokens", 256}};
    json response = post_completion(client, ep, payload, config.retry_limit, token);
    if (!response.contains("choices") || !response["choices"].is_array())
        throw std::runtime_error("response lacks a 'choices' array");
    const auto& choices = response["choices"];
    if (static_cast<int>(choices.size()) != config.samples_per_cell)
        throw std::runtime_error("expected " + std::to_string(config.samples_per_cell) +
                                 " choices, endpoint returned " + std::to_string(choices.size()));
    std::vector<GenerationRecord> records;
    for (int m = 0; m < config.samples_per_cell; ++m) {
        GenerationRecord r;
        r.query_id = q.id;
        r.llm_name = llm.name;
        r.sample_index = m;
        if (!choices[m].contains("text"))
            throw std::runtime_error("choice " + std::to_string(m) + " lacks 'text'");
        r.output_text = choices[m]["text"].get<std::string>();
        records.push_back(std::move(r));
    }
    return records;
}

// Per-option continuation log-likelihood via echoed logprobs; probabilities
// are exp(loglik - max loglik), which the scale-invariant score normalizes.
GenerationRecord fetch_choice_cell(httplib::Client& client, const Endpoint& ep,
                                   const LLMDescriptor& llm, const Query& q,
                                   const IngestConfig& config, const std::string& token) {
    std::map<std::string, double> logliks;
    for (const std::string& option : q.options) {
        json payload{{"model", llm.name},
                     {"prompt", expand_template(config.choice_prompt_template, q.text, option)},
                     {"temperature", 0.0},
                     {"n", 1},
                     {"max_tokens", 0},
                     {"echo", true},
                     {"logprobs", 1}};
        json response = post_completion(client, ep, payload, config.retry_limit, token);
        if (!response.contains("choices") || response["choices"].empty())
            throw std::runtime_error("response lacks choices");
        const json& choice = response["choices"][0];
        if (!choice.contains("logprobs") || !choice["logprobs"].contains("token_logprobs"))
            throw std::runtime_error(
                "endpoint returned no logprobs; provide precomputed option_probs files instead");
        double total = 0.0;
        for (const auto& lp : choice["logprobs"]["token_logprobs"]) {
            if (!lp.is_null()) total += lp.get<double>();
        }
        logliks[option] = total;
    }
    double max_ll = -std::numeric_limits<double>::infinity();
    for (const auto& [opt, ll] : logliks) max_ll = std::max(max_ll, ll);

    GenerationRecord r;
    r.query_id = q.id;
    r.llm_name = llm.name;
    r.sample_index = 0;
    std::map<std::string, double> probs;
    for (const auto& [opt, ll] : logliks) probs[opt] = std::exp(ll - max_ll);
    r.option_probs = std::move(probs);
    return r;
}

}  // namespace

CollectResult collect_generations(const std::vector<LLMDescriptor>& pool,
                                  const std::vector<Query>& queries, const IngestConfig& config,
                                  const std::string& journal_path) {
    config.validate();
    validate_pool(pool);
    for (const auto& llm : pool) {
        if (!llm.endpoint)
            throw ValidationError("LLM '" + llm.name + "' has no endpoint; cannot collect live");
    }

    struct Cell {
        const Query* query;
        const LLMDescriptor* llm;
    };
    std::vector<Cell> cells;
    for (const Query& q : queries)
        for (const LLMDescriptor& llm : pool) cells.push_back({&q, &llm});

    const std::string token = bearer_token();

    std::ofstream journal(journal_path, std::ios::binary | std::ios::trunc);
    if (!journal) throw std::runtime_error("cannot open journal '" + journal_path + "'");

    CollectResult result;
    std::mutex output_mutex;
    std::size_t next_cell = 0;
    std::mutex queue_mutex;

    auto worker = [&]() {
        // One client per worker keeps connections isolated.
        std::map<std::string, std::unique_ptr<httplib::Client>> clients;
        for (;;) {
            std::size_t idx;
            {
                std::lock_guard<std::mutex> lock(queue_mutex);
                if (next_cell >= cells.size()) return;
                idx = next_cell++;
            }
            const Cell& cell = cells[idx];
            Endpoint ep = split_endpoint(*cell.llm->endpoint);
            auto& client = clients[ep.scheme_host_port];
            if (!client) {
                client = std::make_unique<httplib::Client>(ep.scheme_host_port);
                client->set_connection_timeout(0, config.request_timeout_ms * 1000);
                client->set_read_timeout(config.request_timeout_ms / 1000,
                                         (config.request_timeout_ms % 1000) * 1000);
            }
            try {
                std::vector<GenerationRecord> records;
                if (cell.query->kind == QueryKind::open) {
                    records = fetch_open_cell(*client, ep, *cell.llm, *cell.query, config, token);
                } else {
                    records.push_back(
                        fetch_choice_cell(*client, ep, *cell.llm, *cell.query, config, token));
                }
                std::lock_guard<std::mutex> lock(output_mutex);
                for (const GenerationRecord& r : records) {
                    json j{{"query_id", r.query_id}, {"llm", r.llm_name}, {"sample_index", r.sample_index}};
                    if (r.output_text) j["output_text"] = *r.output_text;
                    if (r.option_probs) j["option_probs"] = *r.option_probs;
                    journal << j.dump() << "\n";
                }
                journal.flush();
                for (GenerationRecord& r : records) result.records.push_back(std::move(r));
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(output_mutex);
                result.failures.push_back({cell.query->id, cell.llm->name, e.what()});
                std::cerr << "warning: cell (" << cell.query->id << ", " << cell.llm->name
                          << ") failed: " << e.what() << "\n";
            }
        }
    };

    std::size_t n_workers = std::min<std::size_t>(
        static_cast<std::size_t>(config.max_concurrent_requests), std::max<std::size_t>(cells.size(), 1));
    std::vector<std::thread> threads;
    for (std::size_t i = 0; i < n_workers; ++i) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    journal.close();

    auto order = [](const GenerationRecord& a, const GenerationRecord& b) {
        if (a.query_id != b.query_id) return a.query_id < b.query_id;
        if (a.llm_name != b.llm_name) return a.llm_name < b.llm_name;
        return a.sample_index < b.sample_index;
    };
    std::sort(result.records.begin(), result.records.end(), order);
    std::sort(result.failures.begin(), result.failures.end(), [](const FailedCell& a, const FailedCell& b) {
        return std::tie(a.query_id, a.llm_name) < std::tie(b.query_id, b.llm_name);
    });
    write_generations(result.records, journal_path);  // final, sorted
    return result;
}

}  // namespace routerdc
