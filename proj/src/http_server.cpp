#include "aerobroker/http_server.hpp"

#include <httplib.h>

namespace aerobroker::http {

struct Server::Impl {
    api::Api& api;
    httplib::Server server;

    explicit Impl(api::Api& a) : api(a) {}

    void handle(const httplib::Request& req, httplib::Response& res) {
        api::Request r;
        r.method = req.method;
        r.path = req.path;
        r.body = req.body;
        if (req.has_header("X-Api-Key")) r.api_key = req.get_header_value("X-Api-Key");
        if (req.has_header("X-Idempotency-Key")) r.idempotency_key = req.get_header_value("X-Idempotency-Key");
        auto out = api.handle(r);
        res.status = out.status;
        res.set_content(out.text(), "application/json");
    }
};

Server::Server(api::Api& api) : impl_(std::make_unique<Impl>(api)) {
    auto h = [this](const httplib::Request& req, httplib::Response& res) { impl_->handle(req, res); };
    impl_->server.Get(R"(/.*)", h);
    impl_->server.Post(R"(/.*)", h);
    impl_->server.Delete(R"(/.*)", h);
}

Server::~Server() { stop(); }

int Server::bind(const std::string& host, int port) {
    if (port == 0) return impl_->server.bind_to_any_port(host);
    return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool Server::listen() { return impl_->server.listen_after_bind(); }

void Server::stop() {
    if (impl_->server.is_running()) impl_->server.stop();
}

}  // namespace aerobroker::http
