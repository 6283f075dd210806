#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "aerobroker/api.hpp"
#include "aerobroker/broker.hpp"

namespace aerobroker::config {

/// Service configuration file (JSON object):
///   listen                          "host:port", default 127.0.0.1:8787
///   data_dir                        default "data"
///   bypass_timeout_s                default 259200 (72 h)
///   payment_cancellation_timeout_s  default 604800 (7 days)
///   disclosure_rules                optional path to a disclosure-rule table
///   vocabulary                      optional path to a vocabulary registry
///   admin_key                       operator API key
///   api_keys                        {"<key>": "<party display name>"}
/// Relative paths resolve against the config file's directory.
struct Config {
    std::string listen_host = "127.0.0.1";
    int listen_port = 8787;
    std::filesystem::path data_dir = "data";
    Timestamp bypass_timeout = escrow::kDefaultBypassTimeout;
    Timestamp payment_timeout = contract::kDefaultPaymentTimeout;
    std::optional<std::filesystem::path> disclosure_rules;
    std::optional<std::filesystem::path> vocabulary;
    api::AuthConfig auth;
};

/// Throws ConfigInvalid.
Config parse(std::string_view text, const std::filesystem::path& base_dir);
Config load(const std::filesystem::path& path);

/// Loads the vocabulary and disclosure tables the config points at.
broker::Settings settings(const Config& cfg);

}  // namespace aerobroker::config
