#include "aerobroker/config.hpp"

#include <fstream>
#include <set>

#include "aerobroker/file_io.hpp"

namespace aerobroker::config {

using canon::Value;

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

Timestamp timeout(const Value& v, std::string_view key) {
    auto t = v.as_int();
    if (t < 0) fail(ErrorCode::ConfigInvalid, std::string(key) + " must be non-negative");
    return t;
}

}  // namespace

Config parse(std::string_view text, const std::filesystem::path& base_dir) {
    static const std::set<std::string, std::less<>> known = {
        "listen",           "data_dir",   "bypass_timeout_s", "payment_cancellation_timeout_s",
        "disclosure_rules", "vocabulary", "admin_key",        "api_keys",
    };
    Config cfg;
    cfg.data_dir = base_dir / "data";
    try {
        Value root = canon::parse(text);
        for (const auto& [key, value] : root.as_object()) {
            if (!known.count(key)) fail(ErrorCode::ConfigInvalid, "unknown config key '" + key + "'");
        }
        if (const Value* v = root.find("listen")) {
            const auto& s = v->as_string();
            auto colon = s.rfind(':');
            if (colon == std::string::npos) fail(ErrorCode::ConfigInvalid, "listen must be host:port");
            cfg.listen_host = s.substr(0, colon);
            try {
                std::size_t used = 0;
                cfg.listen_port = std::stoi(s.substr(colon + 1), &used);
                if (used != s.size() - colon - 1) throw std::invalid_argument("trailing");
            } catch (const std::exception&) {
                fail(ErrorCode::ConfigInvalid, "listen port is not a number");
            }
            if (cfg.listen_port < 0 || cfg.listen_port > 65535) fail(ErrorCode::ConfigInvalid, "listen port out of range");
        }
        if (const Value* v = root.find("data_dir")) cfg.data_dir = resolve(base_dir, v->as_string());
        if (const Value* v = root.find("bypass_timeout_s")) cfg.bypass_timeout = timeout(*v, "bypass_timeout_s");
        if (const Value* v = root.find("payment_cancellation_timeout_s"))
            cfg.payment_timeout = timeout(*v, "payment_cancellation_timeout_s");
        if (const Value* v = root.find("disclosure_rules")) cfg.disclosure_rules = resolve(base_dir, v->as_string());
        if (const Value* v = root.find("vocabulary")) cfg.vocabulary = resolve(base_dir, v->as_string());
        if (const Value* v = root.find("admin_key")) cfg.auth.admin_key = v->as_string();
        if (const Value* v = root.find("api_keys")) {
            for (const auto& [key, name] : v->as_object()) {
                if (key.empty()) fail(ErrorCode::ConfigInvalid, "empty API key");
                if (key == cfg.auth.admin_key) fail(ErrorCode::ConfigInvalid, "a party key equals the admin key");
                cfg.auth.api_keys.emplace(key, name.as_string());
            }
        }
    } catch (const BrokerError& e) {
        if (e.code() == ErrorCode::ConfigInvalid) throw;
        fail(ErrorCode::ConfigInvalid, e.what());
    }
    return cfg;
}

Config load(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) fail(ErrorCode::ConfigInvalid, "config file not found: " + path.string());
    auto base = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
    return parse(io::read_file(path), base);
}

broker::Settings settings(const Config& cfg) {
    broker::Settings s;
    s.bypass_timeout = cfg.bypass_timeout;
    s.payment_timeout = cfg.payment_timeout;
    if (cfg.vocabulary) s.vocabulary = policy::Vocabulary::load_file(cfg.vocabulary->string());
    if (cfg.disclosure_rules) s.disclosure = canonical_form::DisclosureRules::load_file(cfg.disclosure_rules->string());
    return s;
}

}  // namespace aerobroker::config
