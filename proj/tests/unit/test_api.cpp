#include <doctest.h>

#include "aerobroker/api.hpp"
#include "support/api_flow.hpp"

using namespace aerobroker;
using testing::Client;
using testing::json;

namespace {

struct Service {
    Timestamp now = 1'700'000'000;
    broker::Broker broker{{}, broker::seeded_random(3)};
    api::Api api{broker, testing::test_auth(), [this] { return now; }};
    Client client{testing::in_process(api)};
};

}  // namespace

TEST_SUITE("api") {

TEST_CASE("health needs no key; everything else does") {
    Service s;
    CHECK(s.client.ok("GET", "/health", "")["ok"] == true);
    CHECK(s.client.error("GET", "/parties", "", nullptr, 401) == "Unauthenticated");
    CHECK(s.client.error("GET", "/parties", "wrong", nullptr, 401) == "Unauthenticated");
    // A configured key whose party is not registered yet.
    CHECK(s.client.error("GET", "/parties", "k-acme", nullptr, 401) == "Unauthenticated");
}

TEST_CASE("full brokerage over the request interface") {
    Service s;
    auto ids = testing::run_brokerage(s.client, s.now);
    std::string base = "/contracts/" + ids.contract;

    auto token = s.client.ok("GET", "/tokens/" + ids.token, "k-orbit");
    CHECK(token["valid"] == true);
    CHECK(s.client.ok("GET", base + "/token", "k-acme")["valid"] == true);
    auto validity = s.client.ok("GET", base + "/validity", "k-orbit");
    CHECK(validity["all_green"] == true);
    CHECK(validity["ledger"]["verdict"] == "match");
    auto events = s.client.ok("GET", base + "/events", "k-orbit")["events"];
    CHECK(events.size() == 7);
    CHECK(events[0]["action"] == "create_draft");
    CHECK(events[2]["action"] == "counter_offer");
    auto rec = s.client.ok("GET", "/ledger/contracts/" + ids.contract, "k-orbit");
    CHECK(rec["records"].size() == 2);
    auto chain = s.client.ok("GET", "/ledger/verify", "k-delta");
    CHECK(chain["ok"] == true);
    CHECK(chain["height"] == 2);
    CHECK(s.client.ok("GET", "/accounts/" + ids.provider, "k-acme")["balance"] == 850);
    CHECK(s.client.ok("GET", "/escrow/holds/" + ids.hold, "k-acme")["state"] == "Released");
    CHECK(s.client.ok("GET", "/contracts", "k-orbit")["contracts"].size() == 1);
    CHECK(s.client.ok("GET", "/contracts", "k-delta")["contracts"].empty());
    CHECK(s.client.ok("GET", "/contracts", "root-key")["contracts"].size() == 1);

    s.now += 86401;
    auto tick = s.client.ok("POST", "/admin/tick", "root-key", json::object());
    CHECK(tick["expired"].size() == 1);
    CHECK(s.client.ok("GET", "/tokens/" + ids.token, "k-orbit")["valid"] == false);
}

TEST_CASE("validity of a caller-held document") {
    Service s;
    auto ids = testing::run_brokerage(s.client, s.now);
    std::string base = "/contracts/" + ids.contract;
    auto view = s.client.ok("GET", base, "k-orbit");
    auto doc = view["contract"];
    auto same = s.client.ok("POST", base + "/validity", "k-orbit", {{"document", doc}});
    CHECK(same["ledger"]["verdict"] == "match");
    doc["price"] = 1;
    auto changed = s.client.ok("POST", base + "/validity", "k-orbit", {{"document", doc}});
    CHECK(changed["ledger"]["verdict"] == "mismatch");
    CHECK(changed["all_green"] == false);
}

TEST_CASE("status codes and error bodies") {
    Service s;
    auto ids = testing::run_brokerage(s.client, s.now);
    std::string base = "/contracts/" + ids.contract;
    CHECK(s.client.error("GET", "/nowhere", "k-orbit", nullptr, 404) == "NotFound");
    CHECK(s.client.error("GET", base, "k-delta", nullptr, 403) == "Forbidden");
    CHECK(s.client.error("GET", "/contracts/" + std::string(32, '0'), "k-orbit", nullptr, 404) == "UnknownContract");
    CHECK(s.client.error("GET", "/contracts/zz", "k-orbit", nullptr, 400) == "ParseError");
    CHECK(s.client.error("POST", base + "/activate", "k-orbit", nullptr, 409) == "WrongStatus");
    CHECK(s.client.error("POST", base + "/proposals", "k-orbit", {{"diff", {{"price", 1}}}}, 409) == "WrongStatus");
    CHECK(s.client.error("POST", "/parties", "k-orbit", testing::party_body("x", "both", 9), 403) == "Forbidden");
    CHECK(s.client.error("POST", "/parties", "root-key", testing::party_body("acme", "both", 9), 409) ==
          "DuplicateParty");
    CHECK(s.client.error("GET", "/accounts/" + ids.consumer, "k-acme", nullptr, 403) == "Forbidden");
    CHECK(s.client.error("GET", "/tokens/" + std::string(32, 'a'), "k-orbit", nullptr, 404) == "UnknownToken");
    auto r = s.client.send("POST", "/contracts", "k-orbit", "{not json", "");
    CHECK(r.status == 400);
    CHECK(r.body["error"]["code"] == "ParseError");
    auto arr = s.client.send("POST", "/contracts", "k-orbit", "[1]", "");
    CHECK(arr.body["error"]["code"] == "InvalidArgument");
    for (auto code : {ErrorCode::InsufficientFunds, ErrorCode::TooEarly, ErrorCode::ChainCorrupt})
        CHECK(api::http_status(code) >= 400);
}

TEST_CASE("idempotency header returns the first result") {
    Service s;
    testing::run_brokerage(s.client, s.now);
    auto before = s.broker.event_count();
    json dep = {{"party", s.broker.parties().find_by_name("orbit")->id.hex()}, {"amount", 10}};
    auto a = s.client.raw("POST", "/accounts/deposit", "root-key", dep, "retry-1");
    auto b = s.client.raw("POST", "/accounts/deposit", "root-key", dep, "retry-1");
    CHECK(a.status == 200);
    CHECK(a.body == b.body);
    CHECK(s.broker.event_count() == before + 1);
}

TEST_CASE("wrong actors never mutate") {
    // Every mutating endpoint, sent by each principal that is not its
    // designated actor, must fail and append nothing.
    Service s;
    auto ids = testing::run_brokerage(s.client, s.now);
    // A second contract left Accepted with a live hold, for the escrow routes.
    auto draft = s.client.ok("POST", "/contracts", "k-orbit",
                             {{"asset_id", ids.asset},
                              {"purpose", "research"},
                              {"temporal_validity", {{"start", s.now}, {"end", s.now + 10}}}},
                             201);
    std::string c2 = draft["contract"]["contract_id"];
    auto acc = s.client.ok("POST", "/contracts/" + c2 + "/response", "k-orbit", {{"decision", "accept"}});
    auto proof = crypto::sign(escrow::proof_message(parse_hex<ContractId>(c2), 900, s.now), testing::key_for(2).secret_key);
    auto hold = s.client.ok("POST", "/escrow/holds", "k-orbit",
                            {{"contract_id", c2}, {"created_at", s.now}, {"signature", proof.hex()}}, 201);
    std::string h2 = hold["hold_id"];

    struct Case {
        std::string method, path;
        json body;
        std::vector<std::string> wrong;
    };
    std::string b1 = "/contracts/" + ids.contract, b2 = "/contracts/" + c2;
    std::vector<Case> cases = {
        {"POST", "/parties", testing::party_body("zed", "both", 9), {"k-acme", "k-orbit", "k-delta"}},
        {"POST", "/accounts/deposit", {{"party", ids.consumer}, {"amount", 5}}, {"k-acme", "k-orbit", "k-delta"}},
        {"POST", "/assets", testing::asset_body(parse_hex<PartyId>(ids.provider)), {"root-key", "k-orbit", "k-delta"}},
        {"DELETE", "/assets/" + ids.asset, nullptr, {"root-key", "k-orbit", "k-delta"}},
        {"POST", "/contracts", {{"asset_id", ids.asset}, {"purpose", "research"}}, {"root-key", "k-acme"}},
        {"POST", b2 + "/proposals", {{"diff", {{"price", 1}}}}, {"root-key", "k-acme", "k-delta"}},
        {"POST", b2 + "/response", {{"decision", "reject"}}, {"root-key", "k-delta"}},
        {"POST", b2 + "/signatures", {{"signature", testing::sign_hex(acc, 1)}}, {"root-key", "k-orbit", "k-delta"}},
        {"POST", b1 + "/terminate", {{"reason", "x"}}, {"root-key", "k-delta"}},
        {"POST", b2 + "/cancel", nullptr, {"root-key", "k-delta"}},
        {"POST", b2 + "/activate", nullptr, {"root-key", "k-delta"}},
        {"POST", "/escrow/holds/" + h2 + "/confirm", nullptr, {"root-key", "k-orbit", "k-delta"}},
        {"POST", "/escrow/holds/" + h2 + "/bypass", {{"proof", json::object()}}, {"root-key", "k-acme", "k-delta"}},
        {"POST", "/escrow/holds/" + h2 + "/refund", nullptr, {"root-key", "k-delta"}},
        {"POST", "/admin/tick", json::object(), {"k-acme", "k-orbit", "k-delta"}},
    };
    auto state = canon::write(s.broker.canonical_state());
    auto events = s.broker.event_count();
    for (const auto& c : cases)
        for (const auto& key : c.wrong) {
            auto r = s.client.raw(c.method, c.path, key, c.body);
            INFO(c.method << " " << c.path << " as " << key << " -> " << r.body.dump());
            CHECK(r.status >= 400);
            CHECK(r.body.contains("error"));
        }
    CHECK(s.broker.event_count() == events);
    CHECK(canon::write(s.broker.canonical_state()) == state);
}

}
