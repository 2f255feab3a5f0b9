#pragma once

#include <memory>
#include <string>

#include "routerdc/checkpoint.hpp"

namespace routerdc {

// HTTP routing gateway over an immutable checkpoint snapshot. Endpoints:
//   POST /route {"text": ..., "exclude": [...]?}
//   GET  /llms
//   GET  /health
//   POST /llms/<name>/availability {"available": bool}
// The service only selects an LLM; it never forwards the query. When an auth
// token is configured, requests must carry "Authorization: Bearer <token>".
class RouterService {
public:
    explicit RouterService(Checkpoint checkpoint, std::string auth_token = {});
    ~RouterService();

    RouterService(const RouterService&) = delete;
    RouterService& operator=(const RouterService&) = delete;

    // Binds and serves until stop(); blocks the calling thread.
    void listen(const std::string& host, int port);
    // Binds an ephemeral port, serves on a background thread, returns the port.
    int listen_on_any_port(const std::string& host);
    void stop();
    bool wait_until_ready(int timeout_ms = 5000) const;

    // Atomic swaps visible to subsequent requests.
    void set_availability(const std::string& llm_name, bool available);
    void reload(Checkpoint checkpoint);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace routerdc
