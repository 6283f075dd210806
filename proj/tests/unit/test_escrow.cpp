#include <doctest.h>

#include <thread>

#include "aerobroker/escrow.hpp"
#include "support/escrow_sim.hpp"
#include "support/state_machine.hpp"

using namespace aerobroker;
using namespace aerobroker::escrow;
using testing::World;

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

struct Paid {
    World w;
    contract::ContractEngine engine;
    contract::Contract c;
    Escrow esc{100};
    crypto::Keypair consumer_key = w.key(w.consumer.id);

    Paid() {
        c = testing::reach(engine, w, contract::ContractStatus::Accepted);
        esc.deposit(w.consumer.id, 5000);
    }

    Signature proof_sig(Timestamp created) const {
        return crypto::sign(proof_message(c.id, c.price, created), consumer_key.secret_key);
    }

    EscrowHold hold(Timestamp now = 1000) {
        return esc.place_hold(c, w.consumer.id, consumer_key.public_key, proof_sig(now), now,
                              testing::id_of<HoldId>(1), now);
    }
};

}  // namespace

TEST_SUITE("escrow") {

TEST_CASE("proof message layout") {
    auto id = testing::id_of<ContractId>(3);
    auto m = proof_message(id, 0x0102, -1);
    CHECK(std::equal(id.data.begin(), id.data.end(), m.begin()));
    CHECK(m[22] == 0x01);
    CHECK(m[23] == 0x02);
    for (int i = 24; i < 32; ++i) CHECK(m[i] == 0xff);
}

TEST_CASE("deposits") {
    Escrow esc;
    CHECK(esc.deposit(testing::id_of<PartyId>(1), 10) == 10);
    CHECK(esc.deposit(testing::id_of<PartyId>(1), 5) == 15);
    CHECK(code_of([&] { esc.deposit(testing::id_of<PartyId>(1), 0); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([&] { esc.deposit(testing::id_of<PartyId>(1), std::numeric_limits<Credits>::max()); }) ==
          ErrorCode::InvalidArgument);
    CHECK(esc.totals().conserved());
    CHECK(esc.balance(testing::id_of<PartyId>(9)) == 0);
    CHECK(code_of([] { Escrow bad(-1); }) == ErrorCode::ConfigInvalid);
}

TEST_CASE("hold, then provider confirmation") {
    Paid p;
    auto h = p.hold();
    CHECK(h.state == HoldState::Held);
    CHECK(h.amount == p.c.price);
    CHECK(p.esc.balance(p.w.consumer.id) == 5000 - p.c.price);
    CHECK(p.esc.payment_state(p.c.id) == contract::PaymentState::Held);
    CHECK(verify_proof(h.proof, p.consumer_key.public_key));
    CHECK(code_of([&] { p.esc.provider_confirm(h.hold_id, p.w.consumer.id, 1001); }) == ErrorCode::WrongParty);
    auto r = p.esc.provider_confirm(h.hold_id, p.w.provider.id, 1001);
    CHECK(r.state == HoldState::Released);
    CHECK(r.resolved_at == 1001);
    CHECK(p.esc.balance(p.w.provider.id) == p.c.price);
    CHECK(p.esc.payment_state(p.c.id) == contract::PaymentState::Released);
    CHECK(code_of([&] { p.esc.provider_confirm(h.hold_id, p.w.provider.id, 1002); }) == ErrorCode::WrongState);
    CHECK(code_of([&] { p.esc.refund(h.hold_id, p.c, 1002); }) == ErrorCode::WrongState);
    CHECK(p.esc.balance(p.w.provider.id) == p.c.price);
    CHECK(p.esc.totals().conserved());
}

TEST_CASE("hold errors in order") {
    Paid p;
    auto sig = p.proof_sig(1000);
    auto draft = p.c;
    draft.status = contract::ContractStatus::Draft;
    CHECK(code_of([&] {
              p.esc.place_hold(draft, p.w.consumer.id, p.consumer_key.public_key, sig, 1000, testing::id_of<HoldId>(1), 1000);
          }) == ErrorCode::WrongStatus);
    CHECK(code_of([&] {
              p.esc.place_hold(p.c, p.w.provider.id, p.consumer_key.public_key, sig, 1000, testing::id_of<HoldId>(1), 1000);
          }) == ErrorCode::NotTheConsumer);
    CHECK(code_of([&] {
              p.esc.place_hold(p.c, p.w.consumer.id, p.consumer_key.public_key, sig, 1000, testing::id_of<HoldId>(1), 1301);
          }) == ErrorCode::BadProof);
    CHECK(code_of([&] {
              p.esc.place_hold(p.c, p.w.consumer.id, p.consumer_key.public_key, sig, 1000, testing::id_of<HoldId>(1), 999);
          }) == ErrorCode::BadProof);
    auto wrong = p.proof_sig(999);
    CHECK(code_of([&] {
              p.esc.place_hold(p.c, p.w.consumer.id, p.consumer_key.public_key, wrong, 1000, testing::id_of<HoldId>(1), 1000);
          }) == ErrorCode::BadProof);
    Escrow poor(100);
    CHECK(code_of([&] {
              poor.place_hold(p.c, p.w.consumer.id, p.consumer_key.public_key, sig, 1000, testing::id_of<HoldId>(1), 1000);
          }) == ErrorCode::InsufficientFunds);
    CHECK(p.esc.holds().empty());
    p.hold();
    CHECK(code_of([&] {
              p.esc.place_hold(p.c, p.w.consumer.id, p.consumer_key.public_key, sig, 1000, testing::id_of<HoldId>(2), 1000);
          }) == ErrorCode::WrongState);
    CHECK(code_of([&] { p.esc.get(testing::id_of<HoldId>(7)); }) == ErrorCode::UnknownHold);
}

TEST_CASE("bypass after the timeout credits the provider and raises a dispute") {
    Paid p;
    auto h = p.hold(1000);
    CHECK(code_of([&] { p.esc.claim_bypass(h.hold_id, p.w.consumer.id, h.proof, 1099); }) == ErrorCode::TooEarly);
    CHECK(code_of([&] { p.esc.claim_bypass(h.hold_id, p.w.provider.id, h.proof, 1100); }) == ErrorCode::WrongParty);
    auto forged = h.proof;
    forged.created_at += 1;
    CHECK(code_of([&] { p.esc.claim_bypass(h.hold_id, p.w.consumer.id, forged, 1100); }) == ErrorCode::BadProof);
    auto r = p.esc.claim_bypass(h.hold_id, p.w.consumer.id, h.proof, 1100);
    CHECK(r.hold.state == HoldState::BypassGranted);
    CHECK(r.dispute.amount == p.c.price);
    CHECK(r.dispute.provider == p.w.provider.id);
    CHECK(r.dispute.flagged_at == 1100);
    CHECK(p.esc.disputes().size() == 1);
    CHECK(p.esc.balance(p.w.provider.id) == p.c.price);
    CHECK(p.esc.payment_state(p.c.id) == contract::PaymentState::BypassGranted);
    CHECK(code_of([&] { p.esc.provider_confirm(h.hold_id, p.w.provider.id, 1101); }) == ErrorCode::WrongState);
    CHECK(code_of([&] { p.esc.claim_bypass(h.hold_id, p.w.consumer.id, h.proof, 1101); }) == ErrorCode::WrongState);
    CHECK(p.esc.totals().conserved());
}

TEST_CASE("refund only after the contract closes") {
    Paid p;
    auto h = p.hold();
    CHECK(code_of([&] { p.esc.refund(h.hold_id, p.c, 1001); }) == ErrorCode::WrongState);
    auto closed = p.c;
    closed.status = contract::ContractStatus::Rejected;
    auto other = closed;
    other.id = testing::id_of<ContractId>(9);
    CHECK(code_of([&] { p.esc.refund(h.hold_id, other, 1001); }) == ErrorCode::InvalidArgument);
    auto r = p.esc.refund(h.hold_id, closed, 1001);
    CHECK(r.state == HoldState::Refunded);
    CHECK(p.esc.balance(p.w.consumer.id) == 5000);
    CHECK(p.esc.payment_state(p.c.id) == contract::PaymentState::Refunded);
    // A refunded hold does not block a fresh one.
    auto sig = p.proof_sig(1002);
    CHECK(p.esc.place_hold(p.c, p.w.consumer.id, p.consumer_key.public_key, sig, 1002, testing::id_of<HoldId>(2), 1002)
              .state == HoldState::Held);
    CHECK(p.esc.holds().size() == 2);
}

TEST_CASE("random sequences agree with the bookkeeping model") {
    testing::Rng rng(41);
    for (std::uint64_t seq = 0; seq < 300; ++seq) {
        auto r = testing::run_escrow_sequence(rng, 40, seq);
        for (const auto& d : r.details) MESSAGE(d);
        REQUIRE(r.not_conserved == 0);
        REQUIRE(r.mismatches == 0);
        REQUIRE(r.double_settles == 0);
    }
}

TEST_CASE("concurrent confirm and bypass settle a hold once") {
    for (int round = 0; round < 50; ++round) {
        Paid p;
        auto h = p.hold(1000);
        std::atomic<int> ok{0};
        std::thread a([&] {
            try {
                p.esc.provider_confirm(h.hold_id, p.w.provider.id, 2000);
                ++ok;
            } catch (const BrokerError&) {
            }
        });
        std::thread b([&] {
            try {
                p.esc.claim_bypass(h.hold_id, p.w.consumer.id, h.proof, 2000);
                ++ok;
            } catch (const BrokerError&) {
            }
        });
        a.join();
        b.join();
        CHECK(ok == 1);
        CHECK(p.esc.balance(p.w.provider.id) == p.c.price);
        CHECK(p.esc.totals().conserved());
    }
}

TEST_CASE("hold state names") {
    for (auto s : {HoldState::Held, HoldState::Released, HoldState::Refunded, HoldState::BypassGranted})
        CHECK(parse_hold_state(to_string(s)) == s);
    CHECK_THROWS_AS(parse_hold_state("Lost"), BrokerError);
}

}
