#include "aerobroker/contract_engine.hpp"

#include <algorithm>

#include "aerobroker/canonical_form.hpp"
#include "aerobroker/crypto.hpp"
#include "aerobroker/error.hpp"

namespace aerobroker::contract {

using namespace policy;
namespace cf = canonical_form;
using canon::Value;

namespace {

constexpr std::pair<ContractStatus, std::string_view> kStatusNames[] = {
    {ContractStatus::Draft, "Draft"},       {ContractStatus::Negotiating, "Negotiating"},
    {ContractStatus::Accepted, "Accepted"}, {ContractStatus::Rejected, "Rejected"},
    {ContractStatus::Active, "Active"},     {ContractStatus::Expired, "Expired"},
    {ContractStatus::Terminated, "Terminated"},
};

constexpr std::pair<NegotiationAction, std::string_view> kActionNames[] = {
    {NegotiationAction::CreateDraft, "create_draft"}, {NegotiationAction::Propose, "propose"},
    {NegotiationAction::CounterOffer, "counter_offer"}, {NegotiationAction::Accept, "accept"},
    {NegotiationAction::Reject, "reject"},           {NegotiationAction::Sign, "sign"},
    {NegotiationAction::Activate, "activate"},       {NegotiationAction::Terminate, "terminate"},
    {NegotiationAction::Expire, "expire"},           {NegotiationAction::Cancel, "cancel"},
};

constexpr std::pair<PaymentState, std::string_view> kPaymentNames[] = {
    {PaymentState::None, "None"},         {PaymentState::Held, "Held"},
    {PaymentState::Released, "Released"}, {PaymentState::Refunded, "Refunded"},
    {PaymentState::BypassGranted, "BypassGranted"},
};

template <typename E, std::size_t N>
std::string_view name_of(E e, const std::pair<E, std::string_view> (&table)[N]) {
    for (const auto& [v, n] : table)
        if (v == e) return n;
    return "?";
}

template <typename E, std::size_t N>
E value_of(std::string_view s, const std::pair<E, std::string_view> (&table)[N], const char* what) {
    for (const auto& [v, n] : table)
        if (n == s) return v;
    fail(ErrorCode::ParseError, std::string("unknown ") + what + " '" + std::string(s) + "'");
}

void sort_terms(std::vector<Term>& terms) {
    std::stable_sort(terms.begin(), terms.end(),
                     [](const Term& a, const Term& b) { return a.identity() < b.identity(); });
}

void upsert(std::vector<Term>& terms, const Term& t) {
    auto it = std::find_if(terms.begin(), terms.end(), [&](const Term& x) { return x.identity() == t.identity(); });
    if (it == terms.end()) terms.push_back(t);
    else *it = t;
}

void require_negotiable_status(const Contract& c) {
    if (is_terminal(c.status))
        fail(ErrorCode::TerminalStatus, "contract is " + std::string(to_string(c.status)));
    if (c.status != ContractStatus::Draft && c.status != ContractStatus::Negotiating)
        fail(ErrorCode::WrongStatus, "negotiation is closed; contract is " + std::string(to_string(c.status)));
}

void require_party(const Contract& c, PartyId actor) {
    if (!c.is_party(actor)) fail(ErrorCode::NotAParty, "party " + actor.hex() + " is not a party to the contract");
}

void require_turn(const Contract& c, PartyId actor) {
    require_party(c, actor);
    if (actor != c.turn) fail(ErrorCode::OutOfTurn, "it is the counterparty's turn");
}

void validate_window(const Period& p) {
    if (!(p.start < p.end)) fail(ErrorCode::InvalidArgument, "temporal validity requires start < end");
}

void validate_terms(const std::vector<Term>& terms, const Vocabulary& vocabulary) {
    throw_on_violation(check_terms(terms, vocabulary));
}

}  // namespace

std::string_view to_string(ContractStatus s) { return name_of(s, kStatusNames); }
ContractStatus parse_status(std::string_view s) { return value_of(s, kStatusNames, "contract status"); }
std::string_view to_string(NegotiationAction a) { return name_of(a, kActionNames); }
NegotiationAction parse_action(std::string_view s) { return value_of(s, kActionNames, "negotiation action"); }
std::string_view to_string(PaymentState s) { return name_of(s, kPaymentNames); }
PaymentState parse_payment_state(std::string_view s) { return value_of(s, kPaymentNames, "payment state"); }

// ---------------------------------------------------------------------------
// rules

namespace rules {

bool is_negotiable(PolicyCategory category) { return category == PolicyCategory::RightsAndUsage; }

Contract draft(const DraftRequest& request, const DataAsset& asset, const Policy& policy, const Party& provider,
               const Party& consumer, ContractId id, Salt salt, Timestamp now, const Vocabulary& vocabulary) {
    if (request.provider == request.consumer) fail(ErrorCode::SelfDealing, "provider and consumer are the same party");
    if (asset.id != request.asset_id || policy.asset_id != asset.id)
        fail(ErrorCode::UnknownAsset, "asset/policy mismatch for " + request.asset_id.hex());
    if (asset.provider != request.provider || provider.id != request.provider)
        fail(ErrorCode::NotAssetOwner, "provider does not own asset " + asset.id.hex());
    if (consumer.id != request.consumer) fail(ErrorCode::UnknownParty, "consumer record mismatch");
    if (!consumer.can_consume()) fail(ErrorCode::Forbidden, "party '" + consumer.display_name + "' cannot consume");
    if (!evaluate_visibility(policy, consumer, request.purpose))
        fail(ErrorCode::VisibilityDenied, "asset is not visible to '" + consumer.display_name + "'");

    std::vector<Term> seeded = policy.terms;
    for (const auto& t : request.initial_terms) upsert(seeded, t);

    Contract c;
    c.id = id;
    c.asset_id = asset.id;
    c.provider = request.provider;
    c.consumer = request.consumer;
    c.price = request.price.value_or(policy.price_listing);
    c.sensitivity_level = policy.sensitivity_level;
    c.status = ContractStatus::Draft;
    c.version = 1;
    c.turn = request.consumer;
    c.created_at = now;
    c.salt = salt;

    // Contract-category terms seed the dedicated contract fields.
    std::optional<Period> window;
    for (const auto& t : seeded) {
        if (t.category != PolicyCategory::Contract) {
            c.terms.push_back(t);
            continue;
        }
        if (t.key == "temporal validity") {
            if (auto* p = std::get_if<Period>(&t.value)) window = *p;
        } else if (t.key == "spatial validity & coverage") {
            if (auto* l = std::get_if<LabelSet>(&t.value)) c.spatial_validity = l->values();
        } else if (t.key == "liability") {
            if (auto* x = std::get_if<Text>(&t.value)) c.liability_text = x->value;
        } else if (t.key == "termination clause") {
            if (auto* x = std::get_if<Text>(&t.value)) c.termination_clause = x->value;
        }
    }
    if (request.temporal_validity) window = request.temporal_validity;
    if (request.spatial_validity) c.spatial_validity = *request.spatial_validity;
    if (request.liability_text) c.liability_text = *request.liability_text;
    if (request.termination_clause) c.termination_clause = *request.termination_clause;
    if (!window) fail(ErrorCode::InvalidArgument, "no temporal validity in request or policy");
    validate_window(*window);
    c.temporal_validity = *window;
    if (c.price < 0) fail(ErrorCode::InvalidArgument, "price must be non-negative");

    sort_terms(c.terms);
    validate_terms(seeded, vocabulary);
    return c;
}

Contract propose(const Contract& c, PartyId actor, const ProposalDiff& diff, const Vocabulary& vocabulary) {
    require_negotiable_status(c);
    require_turn(c, actor);
    if (diff.empty()) fail(ErrorCode::InvalidArgument, "proposal changes nothing");
    for (const auto& t : diff.upsert_terms)
        if (!is_negotiable(t.category))
            fail(ErrorCode::NonNegotiableKey, std::string(to_string(t.category)) + "/" + t.key + " is provider-locked");
    for (const auto& k : diff.remove_terms)
        if (!is_negotiable(k.category))
            fail(ErrorCode::NonNegotiableKey, std::string(to_string(k.category)) + "/" + k.key + " is provider-locked");

    Contract next = c;
    if (diff.price) {
        if (*diff.price < 0) fail(ErrorCode::InvalidArgument, "price must be non-negative");
        next.price = *diff.price;
    }
    if (diff.temporal_validity) {
        validate_window(*diff.temporal_validity);
        next.temporal_validity = *diff.temporal_validity;
    }
    if (diff.spatial_validity) next.spatial_validity = *diff.spatial_validity;
    for (const auto& k : diff.remove_terms) {
        auto it = std::find_if(next.terms.begin(), next.terms.end(), [&](const Term& t) { return t.identity() == k; });
        if (it == next.terms.end()) fail(ErrorCode::InvalidArgument, "cannot remove absent term '" + k.key + "'");
        next.terms.erase(it);
    }
    for (const auto& t : diff.upsert_terms) upsert(next.terms, t);
    sort_terms(next.terms);
    validate_terms(next.terms, vocabulary);

    next.status = ContractStatus::Negotiating;
    next.version = c.version + 1;
    next.turn = c.counterparty(actor);
    return next;
}

Contract respond(const Contract& c, PartyId actor, Decision decision, Timestamp now) {
    require_negotiable_status(c);
    require_turn(c, actor);
    Contract next = c;
    if (decision == Decision::Accept) {
        next.status = ContractStatus::Accepted;
        next.accepted_at = now;
    } else {
        next.status = ContractStatus::Rejected;
    }
    return next;
}

Contract sign(const Contract& c, PartyId actor, const Signature& signature, const PublicKey& actor_key) {
    if (c.status != ContractStatus::Accepted)
        fail(ErrorCode::WrongStatus, "only Accepted contracts can be signed; contract is " +
                                         std::string(to_string(c.status)));
    require_party(c, actor);
    Digest digest = cf::signing_digest(c);
    if (!crypto::verify(digest.data, signature, actor_key))
        fail(ErrorCode::BadSignature, "signature does not verify against version " + std::to_string(c.version));
    Contract next = c;
    next.signatures.emplace(actor, signature);  // a second signature by the same actor is ignored
    return next;
}

Contract activate(const Contract& c, PaymentState payment, Timestamp now) {
    if (c.status != ContractStatus::Accepted)
        fail(ErrorCode::WrongStatus, "only Accepted contracts can be activated; contract is " +
                                         std::string(to_string(c.status)));
    if (!c.signatures.count(c.provider) || !c.signatures.count(c.consumer))
        fail(ErrorCode::MissingSignature, "both parties must sign before activation");
    if (!payment_complete(payment))
        fail(ErrorCode::PaymentIncomplete, "escrow reports " + std::string(to_string(payment)));
    Contract next = c;
    next.status = ContractStatus::Active;
    next.validation_date = now;
    return next;
}

Contract expire(const Contract& c, Timestamp now) {
    if (c.status != ContractStatus::Active)
        fail(ErrorCode::WrongStatus, "only Active contracts expire; contract is " + std::string(to_string(c.status)));
    if (!(c.temporal_validity.end < now)) fail(ErrorCode::NotYetExpired, "validity window has not ended");
    Contract next = c;
    next.status = ContractStatus::Expired;
    return next;
}

Contract terminate(const Contract& c, PartyId actor, std::string reason) {
    if (c.status != ContractStatus::Active)
        fail(ErrorCode::WrongStatus, "only Active contracts can be terminated; contract is " +
                                         std::string(to_string(c.status)));
    require_party(c, actor);
    Contract next = c;
    next.status = ContractStatus::Terminated;
    next.termination_reason = std::move(reason);
    return next;
}

Contract cancel_unpaid(const Contract& c, PartyId actor, PaymentState payment, Timestamp now, Timestamp timeout) {
    if (c.status != ContractStatus::Accepted)
        fail(ErrorCode::WrongStatus, "only Accepted contracts can be cancelled; contract is " +
                                         std::string(to_string(c.status)));
    require_party(c, actor);
    if (payment_complete(payment)) fail(ErrorCode::WrongState, "payment already completed");
    if (now - c.accepted_at.value_or(c.created_at) < timeout)
        fail(ErrorCode::TooEarly, "payment timeout has not elapsed");
    Contract next = c;
    next.status = ContractStatus::Rejected;
    next.termination_reason = "cancelled: payment not completed";
    return next;
}

}  // namespace rules

// ---------------------------------------------------------------------------
// ContractEngine

ContractEngine::ContractEngine(const Vocabulary& vocabulary, Timestamp payment_timeout)
    : vocabulary_(vocabulary), payment_timeout_(payment_timeout) {}

std::shared_ptr<ContractEngine::Slot> ContractEngine::slot(ContractId id) const {
    std::shared_lock lock(map_mutex_);
    auto it = slots_.find(id);
    if (it == slots_.end()) fail(ErrorCode::UnknownContract, "contract " + id.hex() + " not found");
    return it->second;
}

template <typename Fn>
Contract ContractEngine::mutate(ContractId id, std::optional<std::uint64_t> expected_version, Fn&& fn) {
    auto s = slot(id);
    std::lock_guard lock(s->mutex);
    if (expected_version && *expected_version != s->contract.version)
        fail(ErrorCode::VersionConflict, "expected version " + std::to_string(*expected_version) + ", contract is at " +
                                             std::to_string(s->contract.version));
    NegotiationEvent ev;
    ev.event_id = s->log.size();
    ev.contract_id = id;
    Contract next = fn(s->contract, ev);
    ev.resulting_version = next.version;
    s->log.push_back(std::move(ev));
    s->contract = next;
    return next;
}

Contract ContractEngine::draft_contract(const DraftRequest& request, const DataAsset& asset, const Policy& policy,
                                        const Party& provider, const Party& consumer, ContractId id, Salt salt,
                                        Timestamp now) {
    Contract c = rules::draft(request, asset, policy, provider, consumer, id, salt, now, vocabulary_);
    auto s = std::make_shared<Slot>();
    s->contract = c;
    NegotiationEvent ev;
    ev.contract_id = id;
    ev.actor = request.consumer;
    ev.action = NegotiationAction::CreateDraft;
    ev.payload.set("contract", cf::to_value(c));
    ev.payload.set("salt", canon::hex_value(salt));
    ev.at = now;
    ev.resulting_version = c.version;
    s->log.push_back(std::move(ev));

    std::unique_lock lock(map_mutex_);
    if (!slots_.emplace(id, std::move(s)).second)
        fail(ErrorCode::DuplicateContract, "contract " + id.hex() + " already exists");
    return c;
}

Contract ContractEngine::submit_proposal(ContractId id, PartyId actor, const ProposalDiff& diff, Timestamp now,
                                         std::optional<std::uint64_t> expected_version) {
    return mutate(id, expected_version, [&](const Contract& c, NegotiationEvent& ev) {
        Contract next = rules::propose(c, actor, diff, vocabulary_);
        ev.actor = actor;
        ev.action = c.status == ContractStatus::Draft ? NegotiationAction::Propose : NegotiationAction::CounterOffer;
        ev.payload.set("diff", cf::to_value(diff));
        ev.at = now;
        return next;
    });
}

Contract ContractEngine::respond(ContractId id, PartyId actor, Decision decision, Timestamp now,
                                 std::optional<std::uint64_t> expected_version) {
    return mutate(id, expected_version, [&](const Contract& c, NegotiationEvent& ev) {
        Contract next = rules::respond(c, actor, decision, now);
        ev.actor = actor;
        ev.action = decision == Decision::Accept ? NegotiationAction::Accept : NegotiationAction::Reject;
        ev.at = now;
        return next;
    });
}

Contract ContractEngine::sign(ContractId id, PartyId actor, const Signature& signature, const PublicKey& actor_key,
                              Timestamp now, std::optional<std::uint64_t> expected_version) {
    return mutate(id, expected_version, [&](const Contract& c, NegotiationEvent& ev) {
        Contract next = rules::sign(c, actor, signature, actor_key);
        ev.actor = actor;
        ev.action = NegotiationAction::Sign;
        ev.payload.set("public_key", canon::hex_value(actor_key));
        ev.payload.set("signature", canon::hex_value(signature));
        ev.at = now;
        return next;
    });
}

Contract ContractEngine::activate(ContractId id, PaymentState payment, Timestamp now,
                                  std::optional<std::uint64_t> expected_version) {
    return mutate(id, expected_version, [&](const Contract& c, NegotiationEvent& ev) {
        Contract next = rules::activate(c, payment, now);
        ev.action = NegotiationAction::Activate;
        ev.payload.set("payment", Value(to_string(payment)));
        ev.at = now;
        return next;
    });
}

Contract ContractEngine::expire(ContractId id, Timestamp now) {
    return mutate(id, std::nullopt, [&](const Contract& c, NegotiationEvent& ev) {
        Contract next = rules::expire(c, now);
        ev.action = NegotiationAction::Expire;
        ev.at = now;
        return next;
    });
}

std::vector<Contract> ContractEngine::tick_expiry(Timestamp now) {
    std::vector<ContractId> ids;
    {
        std::shared_lock lock(map_mutex_);
        for (const auto& [id, s] : slots_) ids.push_back(id);
    }
    std::vector<Contract> expired;
    for (auto id : ids) {
        auto s = slot(id);
        {
            std::lock_guard lock(s->mutex);
            if (s->contract.status != ContractStatus::Active || !(s->contract.temporal_validity.end < now)) continue;
        }
        expired.push_back(expire(id, now));
    }
    return expired;
}

Contract ContractEngine::terminate(ContractId id, PartyId actor, std::string reason, Timestamp now,
                                   std::optional<std::uint64_t> expected_version) {
    return mutate(id, expected_version, [&](const Contract& c, NegotiationEvent& ev) {
        Contract next = rules::terminate(c, actor, reason);
        ev.actor = actor;
        ev.action = NegotiationAction::Terminate;
        ev.payload.set("reason", Value(reason));
        ev.at = now;
        return next;
    });
}

Contract ContractEngine::cancel_unpaid(ContractId id, PartyId actor, PaymentState payment, Timestamp now,
                                       std::optional<std::uint64_t> expected_version) {
    return mutate(id, expected_version, [&](const Contract& c, NegotiationEvent& ev) {
        Contract next = rules::cancel_unpaid(c, actor, payment, now, payment_timeout_);
        ev.actor = actor;
        ev.action = NegotiationAction::Cancel;
        ev.payload.set("payment", Value(to_string(payment)));
        ev.payload.set("timeout", Value(payment_timeout_));
        ev.at = now;
        return next;
    });
}

std::optional<Contract> ContractEngine::find(ContractId id) const {
    std::shared_ptr<Slot> s;
    {
        std::shared_lock lock(map_mutex_);
        auto it = slots_.find(id);
        if (it == slots_.end()) return std::nullopt;
        s = it->second;
    }
    std::lock_guard lock(s->mutex);
    return s->contract;
}

Contract ContractEngine::get(ContractId id) const {
    auto s = slot(id);
    std::lock_guard lock(s->mutex);
    return s->contract;
}

std::vector<Contract> ContractEngine::all() const {
    std::vector<std::shared_ptr<Slot>> slots;
    {
        std::shared_lock lock(map_mutex_);
        for (const auto& [id, s] : slots_) slots.push_back(s);
    }
    std::vector<Contract> out;
    for (const auto& s : slots) {
        std::lock_guard lock(s->mutex);
        out.push_back(s->contract);
    }
    return out;
}

std::vector<NegotiationEvent> ContractEngine::events(ContractId id) const {
    auto s = slot(id);
    std::lock_guard lock(s->mutex);
    return s->log;
}

Contract ContractEngine::replay(const std::vector<NegotiationEvent>& events, const Vocabulary& vocabulary) {
    if (events.empty() || events.front().action != NegotiationAction::CreateDraft)
        fail(ErrorCode::InvalidArgument, "a negotiation log starts with create_draft");
    Contract c = cf::contract_from_value(events.front().payload.at("contract"));
    c.salt = parse_hex<Salt>(events.front().payload.at("salt").as_string());

    for (std::size_t i = 1; i < events.size(); ++i) {
        const auto& ev = events[i];
        const auto& p = ev.payload;
        switch (ev.action) {
            case NegotiationAction::CreateDraft:
                fail(ErrorCode::InvalidArgument, "create_draft may only open a log");
            case NegotiationAction::Propose:
            case NegotiationAction::CounterOffer:
                c = rules::propose(c, ev.actor, cf::diff_from_value(p.at("diff")), vocabulary);
                break;
            case NegotiationAction::Accept: c = rules::respond(c, ev.actor, Decision::Accept, ev.at); break;
            case NegotiationAction::Reject: c = rules::respond(c, ev.actor, Decision::Reject, ev.at); break;
            case NegotiationAction::Sign:
                c = rules::sign(c, ev.actor, parse_hex<Signature>(p.at("signature").as_string()),
                                parse_hex<PublicKey>(p.at("public_key").as_string()));
                break;
            case NegotiationAction::Activate:
                c = rules::activate(c, parse_payment_state(p.at("payment").as_string()), ev.at);
                break;
            case NegotiationAction::Terminate: c = rules::terminate(c, ev.actor, p.at("reason").as_string()); break;
            case NegotiationAction::Expire: c = rules::expire(c, ev.at); break;
            case NegotiationAction::Cancel:
                c = rules::cancel_unpaid(c, ev.actor, parse_payment_state(p.at("payment").as_string()), ev.at,
                                         p.at("timeout").as_int());
                break;
        }
    }
    return c;
}

}  // namespace aerobroker::contract
