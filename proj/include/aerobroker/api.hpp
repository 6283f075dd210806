#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>

#include "aerobroker/broker.hpp"

// Request dispatch shared by the HTTP server, the CLI and the Python module.
// Bodies are JSON objects in the canonical document vocabulary; responses
// are canonical JSON.
namespace aerobroker::api {

struct Request {
    std::string method;  // GET, POST, DELETE
    std::string path;
    std::string body;
    std::optional<std::string> api_key;          // X-Api-Key
    std::optional<std::string> idempotency_key;  // X-Idempotency-Key
};

struct Response {
    int status = 200;
    canon::Value body;

    std::string text() const { return canon::write(body); }
};

struct AuthConfig {
    std::string admin_key;
    /// API key -> display name of the party it acts for.
    std::map<std::string, std::string> api_keys;
};

using Clock = std::function<Timestamp()>;

Clock system_clock();

int http_status(ErrorCode code);
canon::Value error_body(ErrorCode code, std::string_view message);

class Api {
public:
    Api(broker::Broker& broker, AuthConfig auth, Clock clock = system_clock());

    /// Authenticates by API key, then dispatches. Never throws a
    /// BrokerError: failures become structured error responses.
    Response handle(const Request& request);

    /// Dispatch for an already authenticated principal.
    Response dispatch(const broker::Principal& who, std::string_view method, std::string_view path,
                      const canon::Value& body, const std::optional<std::string>& idempotency_key = std::nullopt);

    broker::Broker& broker() { return broker_; }
    Timestamp now() const { return clock_(); }

private:
    Response route(const broker::Principal& who, std::string_view method, std::string_view path,
                   const canon::Value& body, const std::optional<std::string>& idempotency_key);

    broker::Broker& broker_;
    AuthConfig auth_;
    Clock clock_;
};

}  // namespace aerobroker::api
