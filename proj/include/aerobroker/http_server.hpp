#pragma once

#include <memory>
#include <string>

#include "aerobroker/api.hpp"

namespace aerobroker::http {

/// HTTP front end for an Api. Header X-Api-Key authenticates,
/// X-Idempotency-Key deduplicates retried mutations.
class Server {
public:
    explicit Server(api::Api& api);
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    /// Binds; port 0 picks a free port. Returns the bound port or -1.
    int bind(const std::string& host, int port);
    /// Serves until stop() is called.
    bool listen();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace aerobroker::http
