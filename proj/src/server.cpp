#include "routerdc/server.hpp"

#include <atomic>
#include <mutex>
#include <set>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "routerdc/router.hpp"

namespace routerdc {

namespace {

using nlohmann::json;

// One immutable view of checkpoint + availability; swapped wholesale so every
// request sees a consistent state.
struct Snapshot {
    Checkpoint checkpoint;
    std::map<std::string, bool> available;
};

}  // namespace

struct RouterService::Impl {
    std::mutex snapshot_mutex;
    std::shared_ptr<const Snapshot> snapshot;
    std::string auth_token;
    httplib::Server server;
    std::thread worker;
    std::atomic<bool> running{false};

    std::shared_ptr<const Snapshot> current() {
        std::lock_guard<std::mutex> lock(snapshot_mutex);
        return snapshot;
    }

    void swap_in(std::shared_ptr<const Snapshot> next) {
        std::lock_guard<std::mutex> lock(snapshot_mutex);
        snapshot = std::move(next);
    }

    bool authorized(const httplib::Request& req) const {
        if (auth_token.empty()) return true;
        return req.get_header_value("Authorization") == "Bearer " + auth_token;
    }

    static void reply_error(httplib::Response& res, int status, const std::string& message) {
        res.status = status;
        res.set_content(json{{"error", message}}.dump() + "\n", "application/json");
    }

    void setup_routes() {
        server.Post("/route", [this](const httplib::Request& req, httplib::Response& res) {
            if (!authorized(req)) return reply_error(res, 401, "missing or invalid bearer token");
            json body;
            try {
                body = json::parse(req.body);
            } catch (const json::exception& e) {
                return reply_error(res, 400, std::string("invalid JSON body: ") + e.what());
            }
            std::string text = body.value("text", "");
            if (text.empty()) return reply_error(res, 400, "field 'text' must be a non-empty string");

            auto snap = current();
            std::set<std::string> exclude;
            if (body.contains("exclude")) {
                try {
                    for (const auto& name : body.at("exclude").get<std::vector<std::string>>())
                        exclude.insert(name);
                } catch (const json::exception&) {
                    return reply_error(res, 400, "field 'exclude' must be a list of LLM names");
                }
            }
            const auto& names = snap->checkpoint.params.llm_names;
            for (const std::string& name : exclude) {
                if (std::find(names.begin(), names.end(), name) == names.end())
                    return reply_error(res, 400, "unknown LLM '" + name + "' in exclude list");
            }
            // Unavailable LLMs are masked exactly like request-level exclusions.
            for (const auto& [name, avail] : snap->available)
                if (!avail) exclude.insert(name);
            if (exclude.size() >= names.size())
                return reply_error(res, 503, "every LLM is excluded or unavailable");

            RouteResult r;
            try {
                r = route(text, snap->checkpoint.params, exclude);
            } catch (const std::exception& e) {
                return reply_error(res, 400, e.what());
            }
            json probs = json::object();
            json sims = json::object();
            for (std::size_t t = 0; t < names.size(); ++t) {
                sims[names[t]] = r.similarities[t];
                if (!exclude.count(names[t])) probs[names[t]] = r.probabilities[t];
            }
            json out{{"chosen_llm", r.chosen_llm},
                     {"probabilities", probs},
                     {"similarities", sims},
                     {"excluded", std::vector<std::string>(exclude.begin(), exclude.end())}};
            res.set_content(out.dump() + "\n", "application/json");
        });

        server.Get("/llms", [this](const httplib::Request& req, httplib::Response& res) {
            if (!authorized(req)) return reply_error(res, 401, "missing or invalid bearer token");
            auto snap = current();
            json out = json::array();
            for (const std::string& name : snap->checkpoint.params.llm_names)
                out.push_back(json{{"name", name}, {"available", snap->available.at(name)}});
            res.set_content(out.dump() + "\n", "application/json");
        });

        server.Get("/health", [this](const httplib::Request& req, httplib::Response& res) {
            if (!authorized(req)) return reply_error(res, 401, "missing or invalid bearer token");
            auto snap = current();
            json out{{"status", "ok"},
                     {"checkpoint",
                      {{"id", checkpoint_id(snap->checkpoint.params)},
                       {"format_version", snap->checkpoint.format_version},
                       {"tool", snap->checkpoint.tool},
                       {"tool_version", snap->checkpoint.tool_version},
                       {"llm_count", snap->checkpoint.params.num_llms()},
                       {"embed_dim", snap->checkpoint.params.shape.embed_dim}}}};
            res.set_content(out.dump() + "\n", "application/json");
        });

        server.Post(R"(/llms/([^/]+)/availability)",
                    [this](const httplib::Request& req, httplib::Response& res) {
                        if (!authorized(req))
                            return reply_error(res, 401, "missing or invalid bearer token");
                        std::string name = req.matches[1];
                        json body;
                        try {
                            body = json::parse(req.body);
                        } catch (const json::exception& e) {
                            return reply_error(res, 400, std::string("invalid JSON body: ") + e.what());
                        }
                        if (!body.contains("available") || !body.at("available").is_boolean())
                            return reply_error(res, 400, "field 'available' must be a boolean");

                        auto snap = current();
                        if (!snap->available.count(name))
                            return reply_error(res, 400, "unknown LLM '" + name + "'");
                        auto next = std::make_shared<Snapshot>(*snap);
                        next->available[name] = body.at("available").get<bool>();
                        swap_in(std::move(next));
                        res.set_content(json{{"name", name}, {"available", body.at("available")}}.dump() + "\n",
                                        "application/json");
                    });
    }
};

RouterService::RouterService(Checkpoint checkpoint, std::string auth_token)
    : impl_(std::make_unique<Impl>()) {
    checkpoint.params.validate();
    auto snap = std::make_shared<Snapshot>();
    for (const std::string& name : checkpoint.params.llm_names) snap->available[name] = true;
    snap->checkpoint = std::move(checkpoint);
    impl_->snapshot = std::move(snap);
    impl_->auth_token = std::move(auth_token);
    impl_->setup_routes();
}

RouterService::~RouterService() { stop(); }

void RouterService::listen(const std::string& host, int port) {
    impl_->running = true;
    impl_->server.listen(host, port);
}

int RouterService::listen_on_any_port(const std::string& host) {
    int port = impl_->server.bind_to_any_port(host);
    if (port <= 0) throw std::runtime_error("cannot bind a port on " + host);
    impl_->running = true;
    impl_->worker = std::thread([this] { impl_->server.listen_after_bind(); });
    return port;
}

void RouterService::stop() {
    if (impl_->running.exchange(false)) {
        impl_->server.stop();
        if (impl_->worker.joinable()) impl_->worker.join();
    }
}

bool RouterService::wait_until_ready(int timeout_ms) const {
    for (int waited = 0; waited < timeout_ms; waited += 10) {
        if (impl_->server.is_running()) return true;
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    return impl_->server.is_running();
}

void RouterService::set_availability(const std::string& llm_name, bool available) {
    auto snap = impl_->current();
    if (!snap->available.count(llm_name)) throw ValidationError("unknown LLM '" + llm_name + "'");
    auto next = std::make_shared<Snapshot>(*snap);
    next->available[llm_name] = available;
    impl_->swap_in(std::move(next));
}

void RouterService::reload(Checkpoint checkpoint) {
    checkpoint.params.validate();
    auto next = std::make_shared<Snapshot>();
    for (const std::string& name : checkpoint.params.llm_names) next->available[name] = true;
    next->checkpoint = std::move(checkpoint);
    impl_->swap_in(std::move(next));
}

}  // namespace routerdc
