#include <doctest.h>

#include <unistd.h>

#include <filesystem>

#include "aerobroker/config.hpp"
#include "aerobroker/file_io.hpp"

using namespace aerobroker;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const BrokerError& e) {
        return e.code();
    }
    FAIL("expected a BrokerError");
    return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("defaults") {
    auto c = config::parse("{}", "/etc/broker");
    CHECK(c.listen_host == "127.0.0.1");
    CHECK(c.listen_port == 8787);
    CHECK(c.data_dir == fs::path("/etc/broker/data"));
    CHECK(c.bypass_timeout == 72 * 3600);
    CHECK(c.payment_timeout == 7 * 86400);
    CHECK_FALSE(c.vocabulary);
    CHECK(c.auth.api_keys.empty());
}

TEST_CASE("every field") {
    auto c = config::parse(R"({"listen":"0.0.0.0:9000","data_dir":"state","bypass_timeout_s":60,
        "payment_cancellation_timeout_s":120,"disclosure_rules":"/abs/rules.tsv","vocabulary":"vocab.tsv",
        "admin_key":"adm","api_keys":{"k1":"acme"}})",
                           "/srv");
    CHECK(c.listen_host == "0.0.0.0");
    CHECK(c.listen_port == 9000);
    CHECK(c.data_dir == fs::path("/srv/state"));
    CHECK(c.bypass_timeout == 60);
    CHECK(c.payment_timeout == 120);
    CHECK(*c.disclosure_rules == fs::path("/abs/rules.tsv"));
    CHECK(*c.vocabulary == fs::path("/srv/vocab.tsv"));
    CHECK(c.auth.admin_key == "adm");
    CHECK(c.auth.api_keys.at("k1") == "acme");
}

TEST_CASE("invalid configs") {
    for (const char* text : {"not json", "[]", R"({"unknown":1})", R"({"listen":"nohost"})", R"({"listen":"h:70000"})",
                             R"({"listen":"h:12x"})", R"({"bypass_timeout_s":-1})", R"({"bypass_timeout_s":"60"})",
                             R"({"admin_key":"a","api_keys":{"a":"acme"}})", R"({"api_keys":{"":"acme"}})"}) {
        INFO(text);
        CHECK(code_of([&] { config::parse(text, "."); }) == ErrorCode::ConfigInvalid);
    }
    CHECK(code_of([] { config::load("/definitely/not/here.json"); }) == ErrorCode::ConfigInvalid);
}

TEST_CASE("settings load the shipped tables") {
    auto dir = fs::temp_directory_path() / ("aerobroker-unit-config-" + std::to_string(::getpid()));
    fs::create_directories(dir);
    fs::copy_file(AEROBROKER_DATA_DIR "/vocabulary.tsv", dir / "vocabulary.tsv", fs::copy_options::overwrite_existing);
    fs::copy_file(AEROBROKER_DATA_DIR "/disclosure_rules.tsv", dir / "rules.tsv", fs::copy_options::overwrite_existing);
    io::write_file(dir / "broker.json",
                   R"({"vocabulary":"vocabulary.tsv","disclosure_rules":"rules.tsv","bypass_timeout_s":5})");
    auto s = config::settings(config::load(dir / "broker.json"));
    CHECK(s.bypass_timeout == 5);
    CHECK(s.vocabulary.entries().size() == policy::Vocabulary::standard().entries().size());
    CHECK(s.disclosure.rules().size() == canonical_form::DisclosureRules::standard().rules().size());

    io::write_file(dir / "broker.json", R"({"vocabulary":"missing.tsv"})");
    CHECK(code_of([&] { config::settings(config::load(dir / "broker.json")); }) == ErrorCode::ConfigInvalid);
    fs::remove_all(dir);
}

}
