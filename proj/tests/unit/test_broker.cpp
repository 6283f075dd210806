#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <set>

#include "aerobroker/broker.hpp"
#include "aerobroker/file_io.hpp"
#include "support/ledger_chain.hpp"
#include "support/workload.hpp"

using namespace aerobroker;
using namespace aerobroker::broker;
using testing::Command;
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

fs::path temp_dir(const std::string& tag) {
    auto p = fs::temp_directory_path() / ("aerobroker-unit-" + tag + "-" + std::to_string(::getpid()));
    fs::remove_all(p);
    return p;
}

// A provider, a consumer, one listed asset and funds.
struct Market {
    Broker& b;
    PartyId provider, consumer;
    AssetId asset;
    Timestamp now = 1'700'000'000;

    explicit Market(Broker& broker) : b(broker) {
        provider = add("acme", "provider", 1);
        consumer = add("orbit", "consumer", 2);
        Value args;
        auto a = testing::make_asset(1, provider);
        args.set("asset", canonical_form::to_value(a));
        Value pol;
        pol.set("terms", canon::Value(canon::Array{canonical_form::term_to_flat_value(testing::term(
                             policy::PolicyCategory::PrivacyAndProtection, policy::TermKind::Obligation,
                             "applicable law", policy::Label{"EU"}))}));
        pol.set("sensitivity_level", Value(std::int64_t{2}));
        pol.set("price_listing", Value(std::int64_t{900}));
        args.set("policy", pol);
        asset = a.id;
        b.submit(Principal::of(provider), "register_asset", args, now);
        Value dep;
        dep.set("party", canon::hex_value(consumer));
        dep.set("amount", Value(std::int64_t{5000}));
        b.submit(Principal::root(), "deposit", dep, now);
    }

    PartyId add(const std::string& name, const std::string& role, std::uint8_t n) {
        Value a;
        a.set("display_name", Value(name));
        a.set("role", Value(role));
        a.set("industry", Value("aviation"));
        a.set("public_key", canon::hex_value(testing::key_for(n).public_key));
        auto r = b.submit(Principal::root(), "register_party", a, now);
        return parse_hex<PartyId>(r.at("id").as_string());
    }

    ContractId draft() {
        Value a;
        a.set("asset_id", canon::hex_value(asset));
        a.set("purpose", Value("research"));
        Value p;
        p.set("end", Value(now + 1000));
        p.set("start", Value(now));
        a.set("temporal_validity", p);
        auto r = b.submit(Principal::of(consumer), "draft_contract", a, now);
        return parse_hex<ContractId>(r.at("contract").at("contract_id").as_string());
    }

    Value on(ContractId id, const std::string& type, PartyId who, Value a = {}) {
        a.set("contract_id", canon::hex_value(id));
        return b.submit(Principal::of(who), type, a, now);
    }

    void sign(ContractId id, PartyId who) {
        auto c = b.contracts().get(id);
        Value a;
        a.set("signature", canon::hex_value(crypto::sign(canonical_form::signing_digest(c).data,
                                                         testing::key_for(who == provider ? 1 : 2).secret_key)));
        on(id, "sign", who, a);
    }

    HoldId hold(ContractId id) {
        auto c = b.contracts().get(id);
        Value a;
        a.set("created_at", Value(now));
        a.set("signature", canon::hex_value(crypto::sign(escrow::proof_message(c.id, c.price, now),
                                                         testing::key_for(2).secret_key)));
        auto r = on(id, "place_hold", consumer, a);
        return parse_hex<HoldId>(r.at("hold_id").as_string());
    }

    ContractId active() {
        auto id = draft();
        Value accept;
        accept.set("decision", Value("accept"));
        on(id, "respond", consumer, accept);
        sign(id, provider);
        sign(id, consumer);
        auto h = hold(id);
        Value hv;
        hv.set("hold_id", canon::hex_value(h));
        b.submit(Principal::of(provider), "confirm_hold", hv, now);
        on(id, "activate", consumer);
        return id;
    }
};

}  // namespace

TEST_SUITE("broker") {

TEST_CASE("a full brokerage anchors and issues a token") {
    Broker b({}, seeded_random(1));
    Market m(b);
    auto id = m.active();
    auto c = b.contracts().get(id);
    CHECK(c.status == contract::ContractStatus::Active);
    CHECK(b.ledger().height() == 2);  // accept and activate
    CHECK(b.escrow().balance(m.provider) == c.price);
    auto token = b.token_for(id);
    REQUIRE(token);
    CHECK(token_valid(*token, c, m.now));
    CHECK_FALSE(token_valid(*token, c, c.temporal_validity.end));
    auto report = b.validity(id, m.now + 1);
    CHECK(report.all_green());
    CHECK(report.ledger == LedgerVerdict::Match);
    CHECK(report.anchored_records == 2);
}

TEST_CASE("termination revokes the token and anchors") {
    Broker b({}, seeded_random(2));
    Market m(b);
    auto id = m.active();
    Value a;
    a.set("reason", Value("breach"));
    m.on(id, "terminate", m.provider, a);
    CHECK(b.token_for(id)->revoked);
    CHECK(b.ledger().height() == 3);
    CHECK_FALSE(b.validity(id, m.now).all_green());
    CHECK(b.validity(id, m.now).ledger == LedgerVerdict::Match);
}

TEST_CASE("validity of a tampered copy") {
    Broker b({}, seeded_random(3));
    Market m(b);
    auto id = m.active();
    auto copy = b.contracts().get(id);
    copy.price += 1;
    auto r = b.validity_of_copy(copy, m.now);
    CHECK(r.ledger == LedgerVerdict::Mismatch);
    CHECK_FALSE(r.all_green());
    auto unanchored = copy;
    unanchored.id = testing::id_of<ContractId>(99);
    CHECK(b.validity_of_copy(unanchored, m.now).ledger == LedgerVerdict::NotAnchored);
}

TEST_CASE("authorization") {
    Broker b({}, seeded_random(4));
    Market m(b);
    Value dep;
    dep.set("party", canon::hex_value(m.consumer));
    dep.set("amount", Value(std::int64_t{1}));
    CHECK(code_of([&] { b.submit(Principal::of(m.consumer), "deposit", dep, 0); }) == ErrorCode::Forbidden);
    CHECK(code_of([&] { b.submit(Principal::root(), "draft_contract", Value(), 0); }) == ErrorCode::Forbidden);
    CHECK(code_of([&] { b.submit(Principal::of(testing::id_of<PartyId>(77)), "cancel", Value(), 0); }) ==
          ErrorCode::UnknownParty);
    CHECK(code_of([&] { b.submit(Principal::root(), "explode", Value(), 0); }) == ErrorCode::InvalidArgument);
    auto before = b.event_count();
    auto id = m.draft();
    Value diff;
    diff.set("price", Value(std::int64_t{1}));
    Value a;
    a.set("diff", diff);
    CHECK(code_of([&] { m.on(id, "propose", m.provider, a); }) == ErrorCode::OutOfTurn);
    CHECK(b.event_count() == before + 1);  // the draft only
}

TEST_CASE("idempotency keys") {
    Broker b({}, seeded_random(5));
    Market m(b);
    Value a;
    a.set("party", canon::hex_value(m.consumer));
    a.set("amount", Value(std::int64_t{10}));
    auto first = b.submit(Principal::root(), "deposit", a, 0, "dep-1");
    auto again = b.submit(Principal::root(), "deposit", a, 0, "dep-1");
    CHECK(first == again);
    CHECK(b.escrow().balance(m.consumer) == 5010);
    CHECK(code_of([&] { b.submit(Principal::root(), "tick", Value(), 0, "dep-1"); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([&] { b.submit(Principal::root(), "tick", Value(), 0, ""); }) == ErrorCode::InvalidArgument);
    // Keys are scoped per principal.
    b.submit(Principal::root(), "deposit", a, 0, "dep-2");
    CHECK(b.escrow().balance(m.consumer) == 5020);
}

TEST_CASE("expiry by tick anchors and revokes") {
    Broker b({}, seeded_random(6));
    Market m(b);
    auto id = m.active();
    auto end = b.contracts().get(id).temporal_validity.end;
    auto none = b.submit(Principal::root(), "tick", Value(), end);
    CHECK(none.at("expired").as_array().empty());
    auto some = b.submit(Principal::root(), "tick", Value(), end + 1);
    CHECK(some.at("expired").as_array().size() == 1);
    CHECK(b.contracts().get(id).status == contract::ContractStatus::Expired);
    CHECK(b.token_for(id)->revoked);
    CHECK(b.ledger().height() == 3);
}

TEST_CASE("bypass appends a dispute block") {
    Settings s;
    s.bypass_timeout = 100;
    Broker b(s, seeded_random(7));
    Market m(b);
    auto id = m.draft();
    Value accept;
    accept.set("decision", Value("accept"));
    m.on(id, "respond", m.consumer, accept);
    auto h = m.hold(id);
    m.now += 100;
    Value a;
    a.set("hold_id", canon::hex_value(h));
    a.set("proof", proof_to_value(b.escrow().get(h).proof));
    auto r = b.submit(Principal::of(m.consumer), "claim_bypass", a, m.now);
    CHECK(r.at("hold").at("state").as_string() == "BypassGranted");
    CHECK(b.ledger().query_disputes(id).size() == 1);
    CHECK(b.escrow().payment_state(id) == contract::PaymentState::BypassGranted);
}

TEST_CASE("restart over a data directory reproduces the state") {
    auto dir = temp_dir("restart");
    std::string state;
    {
        auto b = Broker::open_dir({}, dir, seeded_random(8));
        CHECK(b->ledger().height() == 0);
        Market m(*b);
        m.active();
        state = canon::write(b->canonical_state());
    }
    auto b = Broker::open_dir({}, dir, seeded_random(9));
    CHECK(canon::write(b->canonical_state()) == state);
    CHECK(io::read_file(dir / "ledger.blk") == b->ledger().bytes());
    fs::remove_all(dir);
}

TEST_CASE("startup refuses damaged files") {
    auto dir = temp_dir("damaged");
    {
        auto b = Broker::open_dir({}, dir, seeded_random(10));
        Market m(*b);
        m.active();
    }
    auto ledger_bytes = io::read_file(dir / "ledger.blk");
    auto flipped = ledger_bytes;
    flipped[flipped.size() / 2] ^= 0x01;
    io::write_file(dir / "ledger.blk", flipped);
    CHECK(code_of([&] { Broker::open_dir({}, dir); }) == ErrorCode::ChainCorrupt);

    // A valid chain that is not a prefix of the replayed one diverges.
    testing::Rng rng(1);
    io::write_file(dir / "ledger.blk", testing::build_chain(rng, 3)->bytes());
    CHECK(code_of([&] { Broker::open_dir({}, dir); }) == ErrorCode::ChainCorrupt);

    // A shorter prefix is completed from the replay.
    auto first = ledger::encode_frame(ledger::Ledger::from_bytes(ledger_bytes)->blocks().front());
    io::write_file(dir / "ledger.blk", first);
    auto b = Broker::open_dir({}, dir);
    CHECK(io::read_file(dir / "ledger.blk") == ledger_bytes);
    b.reset();

    io::write_file(dir / "events.log", "garbage that is not a frame");
    CHECK(code_of([&] { Broker::open_dir({}, dir); }) == ErrorCode::StoreCorrupt);
    fs::remove_all(dir);
}

TEST_CASE("an event that no longer replays is StoreCorrupt") {
    events::EventEnvelope e;
    e.payload.set("type", Value("deposit"));
    e.payload.set("actor", Value("admin"));
    e.payload.set("now", Value(std::int64_t{0}));
    e.payload.set("args", Value());
    auto store = std::make_unique<events::MemoryEventStore>(events::encode_frame(e));
    CHECK(code_of([&] { Broker::open({}, std::move(store), std::nullopt); }) == ErrorCode::StoreCorrupt);
}

TEST_CASE("a failed append poisons the writer until restart") {
    testing::CounterRandom random(11);
    auto b = testing::memory_broker(random);
    Market m(*b);
    b->store()->arm({b->event_count(), events::CrashPoint::BeforeWrite});
    CHECK_THROWS_AS(m.draft(), events::SimulatedCrash);
    CHECK(code_of([&] { b->submit(Principal::root(), "tick", Value(), 0); }) == ErrorCode::StoreCorrupt);
}

TEST_CASE("replay reproduces randomized histories") {
    std::size_t events = 0, contracts = 0;
    for (std::uint64_t seed = 1; seed <= 40; ++seed) {
        auto r = testing::replay_sequence(seed, 80);
        CHECK(r.state_equal);
        CHECK(r.log_divergences == 0);
        events += r.events;
        contracts += r.contracts;
    }
    CHECK(events > 1000);
    CHECK(contracts > 100);
}

TEST_CASE("injected crashes recover to the uncrashed history") {
    testing::Rng rng(12);
    std::size_t fired = 0;
    for (std::uint64_t seed = 1; seed <= 45; ++seed) {
        auto point = static_cast<events::CrashPoint>(seed % 3);
        auto r = testing::crash_sequence(seed, 60, 5 + rng() % 30, point);
        if (!r.fired) continue;
        ++fired;
        CHECK(r.recovered_state_matches);
        CHECK(r.retry_state_matches);
        CHECK(r.retry_result_matches);
        CHECK(r.log_divergences == 0);
    }
    CHECK(fired >= 30);
}

TEST_CASE("workload histories reach every contract status") {
    std::set<contract::ContractStatus> seen;
    std::set<escrow::HoldState> holds;
    for (std::uint64_t seed = 1; seed <= 40; ++seed) {
        testing::CounterRandom random(seed);
        auto b = testing::memory_broker(random);
        testing::Workload w(seed);
        for (int i = 0; i < 120; ++i) testing::try_submit(*b, w.next(*b));
        for (const auto& c : b->contracts().all()) seen.insert(c.status);
        for (const auto& h : b->escrow().holds()) holds.insert(h.state);
    }
    CHECK(seen.size() == 7);
    CHECK(holds.size() == 4);
}

}
