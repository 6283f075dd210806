#include "aerobroker/broker.hpp"

#include <algorithm>
#include <random>

#include "aerobroker/crypto.hpp"
#include "aerobroker/file_io.hpp"

namespace aerobroker::broker {

namespace cf = canonical_form;
using contract::Contract;
using contract::ContractStatus;
using contract::PaymentState;
using events::Stream;

// ---------------------------------------------------------------------------
// Tokens and validity

bool token_valid(const AccessToken& token, const Contract& c, Timestamp now) {
    return !token.revoked && c.status == ContractStatus::Active && now < token.expires_at;
}

std::string_view to_string(LedgerVerdict v) {
    switch (v) {
        case LedgerVerdict::Match: return "match";
        case LedgerVerdict::Mismatch: return "mismatch";
        case LedgerVerdict::NotAnchored: return "not_anchored";
    }
    return "?";
}

bool ValidityReport::all_green() const {
    return status_valid && window_valid && chain_ok && ledger == LedgerVerdict::Match &&
           std::all_of(signatures.begin(), signatures.end(), [](const SignatureCheck& s) { return s.valid; });
}

Value to_value(const ValidityReport& r) {
    Value v;
    v.set("all_green", Value(r.all_green()));
    v.set("checked_at", Value(r.checked_at));
    v.set("contract_id", canon::hex_value(r.contract_id));
    Value ledger;
    if (r.anchored_digest) ledger.set("anchored_digest", canon::hex_value(*r.anchored_digest));
    ledger.set("chain_ok", Value(r.chain_ok));
    ledger.set("records", Value(static_cast<std::int64_t>(r.anchored_records)));
    ledger.set("recomputed_digest", canon::hex_value(r.recomputed_digest));
    ledger.set("verdict", Value(to_string(r.ledger)));
    v.set("ledger", std::move(ledger));
    canon::Array sigs;
    for (const auto& s : r.signatures) {
        Value sv;
        sv.set("party", canon::hex_value(s.party));
        sv.set("present", Value(s.present));
        sv.set("valid", Value(s.valid));
        sigs.push_back(std::move(sv));
    }
    v.set("signatures", Value(std::move(sigs)));
    v.set("status", Value(contract::to_string(r.status)));
    v.set("status_valid", Value(r.status_valid));
    v.set("window_valid", Value(r.window_valid));
    return v;
}

ValidityReport validity_report(const Contract& c, const std::vector<ledger::ContractRecord>& records,
                               const policy::PartyRegistry& parties, bool chain_ok, Timestamp now) {
    ValidityReport r;
    r.contract_id = c.id;
    r.status = c.status;
    r.checked_at = now;
    r.status_valid = c.status == ContractStatus::Active;
    r.window_valid = c.temporal_validity.contains(now);
    Digest signing = cf::signing_digest(c);
    for (PartyId p : {c.provider, c.consumer}) {
        SignatureCheck check{p, false, false};
        if (auto it = c.signatures.find(p); it != c.signatures.end()) {
            check.present = true;
            if (auto party = parties.find(p)) check.valid = crypto::verify(signing.data, it->second, party->public_key);
        }
        r.signatures.push_back(check);
    }
    r.recomputed_digest = cf::canonicalize(c).digest;
    r.anchored_records = records.size();
    r.chain_ok = chain_ok;
    if (!records.empty()) {
        r.anchored_digest = records.back().whole_document_digest;
        r.ledger = *r.anchored_digest == r.recomputed_digest ? LedgerVerdict::Match : LedgerVerdict::Mismatch;
    }
    return r;
}

// ---------------------------------------------------------------------------
// Views

Value event_to_value(const contract::NegotiationEvent& e) {
    Value v;
    v.set("action", Value(contract::to_string(e.action)));
    v.set("actor", canon::hex_value(e.actor));
    v.set("at", Value(e.at));
    v.set("contract_id", canon::hex_value(e.contract_id));
    v.set("event_id", Value(static_cast<std::int64_t>(e.event_id)));
    v.set("payload", e.payload);
    v.set("resulting_version", Value(static_cast<std::int64_t>(e.resulting_version)));
    return v;
}

Value contract_view(const Contract& c, PaymentState payment, bool include_salt) {
    Value v;
    v.set("contract", cf::to_value(c));
    v.set("digest", canon::hex_value(cf::canonicalize(c).digest));
    v.set("payment_state", Value(contract::to_string(payment)));
    if (include_salt) v.set("salt", canon::hex_value(c.salt));
    v.set("signatures", cf::signatures_to_value(c.signatures));
    v.set("signing_digest", canon::hex_value(cf::signing_digest(c)));
    return v;
}

Value entry_view(const catalog::CatalogEntry& e) {
    Value v;
    v.set("active", Value(e.active));
    v.set("asset", cf::to_value(e.asset));
    v.set("listed_at", Value(e.listed_at));
    v.set("policy", cf::to_value(e.policy));
    return v;
}

Value proof_to_value(const escrow::PaymentProof& p) {
    Value v;
    v.set("amount", Value(p.amount));
    v.set("contract_id", canon::hex_value(p.contract_id));
    v.set("created_at", Value(p.created_at));
    v.set("hold_id", canon::hex_value(p.hold_id));
    v.set("signature", canon::hex_value(p.signature));
    return v;
}

escrow::PaymentProof proof_from_value(const Value& v) {
    escrow::PaymentProof p;
    p.amount = v.at("amount").as_int();
    p.contract_id = parse_hex<ContractId>(v.at("contract_id").as_string());
    p.created_at = v.at("created_at").as_int();
    p.hold_id = parse_hex<HoldId>(v.at("hold_id").as_string());
    p.signature = parse_hex<Signature>(v.at("signature").as_string());
    return p;
}

Value hold_view(const escrow::EscrowHold& h) {
    Value v;
    v.set("amount", Value(h.amount));
    v.set("contract_id", canon::hex_value(h.contract_id));
    v.set("created_at", Value(h.created_at));
    v.set("hold_id", canon::hex_value(h.hold_id));
    v.set("payee", canon::hex_value(h.payee));
    v.set("payer", canon::hex_value(h.payer));
    v.set("proof", proof_to_value(h.proof));
    if (h.resolved_at) v.set("resolved_at", Value(*h.resolved_at));
    v.set("state", Value(escrow::to_string(h.state)));
    return v;
}

Value dispute_view(const escrow::DisputeFlag& d) {
    Value v;
    v.set("amount", Value(d.amount));
    v.set("consumer", canon::hex_value(d.consumer));
    v.set("contract_id", canon::hex_value(d.contract_id));
    v.set("flagged_at", Value(d.flagged_at));
    v.set("hold_id", canon::hex_value(d.hold_id));
    v.set("proof", proof_to_value(d.proof));
    v.set("provider", canon::hex_value(d.provider));
    return v;
}

Value token_view(const AccessToken& t) {
    Value v;
    v.set("asset_id", canon::hex_value(t.asset_id));
    v.set("consumer", canon::hex_value(t.consumer));
    v.set("contract_id", canon::hex_value(t.contract_id));
    v.set("expires_at", Value(t.expires_at));
    v.set("revoked", Value(t.revoked));
    v.set("token_id", canon::hex_value(t.token_id));
    return v;
}

RandomFill seeded_random(std::uint64_t seed) {
    auto rng = std::make_shared<std::mt19937_64>(seed);
    return [rng](std::span<std::uint8_t> out) {
        for (auto& b : out) b = static_cast<std::uint8_t>((*rng)() >> 56);
    };
}

// ---------------------------------------------------------------------------
// Argument helpers

namespace {

const Value& arg(const Value& args, std::string_view key) {
    const Value* v = args.find(key);
    if (!v) fail(ErrorCode::InvalidArgument, "missing field '" + std::string(key) + "'");
    return *v;
}

template <typename T>
T hex_arg(const Value& args, std::string_view key) {
    return parse_hex<T>(arg(args, key).as_string());
}

std::optional<std::uint64_t> expected_version(const Value& args) {
    const Value* v = args.find("expected_version");
    if (!v) return std::nullopt;
    auto i = v->as_int();
    if (i < 1) fail(ErrorCode::InvalidArgument, "expected_version must be positive");
    return static_cast<std::uint64_t>(i);
}

std::vector<policy::Term> flat_terms(const Value* v) {
    std::vector<policy::Term> out;
    if (!v) return out;
    for (const auto& t : v->as_array()) out.push_back(cf::term_from_value(t));
    return out;
}

Stream stream_of(std::string_view type) {
    if (type == "register_party") return Stream::Party;
    if (type == "register_asset" || type == "deregister_asset") return Stream::Asset;
    if (type == "deposit" || type == "place_hold" || type == "confirm_hold" || type == "claim_bypass" ||
        type == "refund_hold")
        return Stream::Escrow;
    return Stream::Contract;
}

std::string actor_string(const Principal& who) { return who.admin ? "admin" : who.party.hex(); }

Principal actor_from(const Value& v) {
    const auto& s = v.as_string();
    if (s == "admin") return Principal::root();
    return Principal::of(parse_hex<PartyId>(s));
}

}  // namespace

const std::vector<std::string>& Broker::command_types() {
    static const std::vector<std::string> types = {
        "register_party", "deposit",   "register_asset", "deregister_asset", "draft_contract",
        "propose",        "respond",   "sign",           "activate",         "terminate",
        "cancel",         "place_hold", "confirm_hold",  "claim_bypass",     "refund_hold",
        "tick",
    };
    return types;
}

// ---------------------------------------------------------------------------
// Broker

Broker::Broker(Settings settings, RandomFill random)
    : settings_(std::move(settings)),
      random_(random ? std::move(random) : RandomFill([](std::span<std::uint8_t> out) { crypto::random_bytes(out); })),
      catalog_(parties_, settings_.vocabulary),
      engine_(settings_.vocabulary, settings_.payment_timeout),
      escrow_(settings_.bypass_timeout),
      ledger_(std::make_unique<ledger::Ledger>()) {
    if (settings_.payment_timeout < 0) fail(ErrorCode::ConfigInvalid, "payment timeout must be non-negative");
}

template <typename T>
T Broker::fresh() const {
    T out{};
    random_(out.data);
    return out;
}

std::unique_ptr<Broker> Broker::open(Settings settings, std::unique_ptr<events::EventStore> store,
                                     std::optional<std::filesystem::path> ledger_file, RandomFill random) {
    auto b = std::make_unique<Broker>(std::move(settings), std::move(random));
    auto envelopes = store->load();
    for (const auto& env : envelopes) {
        try {
            b->apply(env.payload);
        } catch (const BrokerError& e) {
            fail(ErrorCode::StoreCorrupt,
                 "event " + std::to_string(env.sequence) + " does not replay: " + std::string(e.what()));
        }
    }
    b->sequence_ = envelopes.size();
    b->store_ = std::move(store);

    if (ledger_file) {
        std::string on_disk = io::read_file(*ledger_file);
        auto report = ledger::verify_block_file(on_disk);
        if (!report.ok)
            fail(ErrorCode::ChainCorrupt, "block file corrupt at height " +
                                              std::to_string(*report.first_corrupt_height) + ": " + report.detail);
        std::string replayed = b->ledger_->bytes();
        if (on_disk.size() > replayed.size() || replayed.compare(0, on_disk.size(), on_disk) != 0)
            fail(ErrorCode::ChainCorrupt, "block file diverges from the replayed event history");
        b->ledger_->attach_file(*ledger_file, on_disk.size());
        b->ledger_->flush();
    }
    return b;
}

std::unique_ptr<Broker> Broker::open_dir(Settings settings, const std::filesystem::path& data_dir, RandomFill random) {
    std::error_code ec;
    std::filesystem::create_directories(data_dir, ec);
    if (ec) fail(ErrorCode::ConfigInvalid, "cannot create data directory " + data_dir.string() + ": " + ec.message());
    return open(std::move(settings), std::make_unique<events::FileEventStore>(data_dir / "events.log"),
                data_dir / "ledger.blk", std::move(random));
}

Value Broker::resolve(std::string_view type, Value args) const {
    if (!args.is_object()) fail(ErrorCode::InvalidArgument, "command arguments must be an object");
    if (type == "register_party") {
        args.set("id", canon::hex_value(fresh<PartyId>()));
    } else if (type == "register_asset") {
        if (!arg(args, "asset").contains("id")) args.set("asset_id", canon::hex_value(fresh<AssetId>()));
        args.set("policy_id", canon::hex_value(fresh<PolicyId>()));
    } else if (type == "draft_contract") {
        args.set("contract_id", canon::hex_value(fresh<ContractId>()));
        args.set("salt", canon::hex_value(fresh<Salt>()));
    } else if (type == "activate") {
        args.set("token_id", canon::hex_value(fresh<TokenId>()));
    } else if (type == "place_hold") {
        args.set("hold_id", canon::hex_value(fresh<HoldId>()));
    } else if (std::find(command_types().begin(), command_types().end(), type) == command_types().end()) {
        fail(ErrorCode::InvalidArgument, "unknown command '" + std::string(type) + "'");
    }
    return args;
}

Value Broker::submit(const Principal& who, std::string_view type, Value args, Timestamp now,
                     std::optional<std::string> idempotency_key) {
    std::lock_guard write(write_mutex_);
    if (poisoned_) fail(ErrorCode::StoreCorrupt, "an earlier append failed; restart to recover");
    std::string scope;
    if (idempotency_key) {
        if (idempotency_key->empty()) fail(ErrorCode::InvalidArgument, "empty idempotency key");
        scope = actor_string(who) + "/" + *idempotency_key;
        std::shared_lock lock(aux_mutex_);
        if (auto it = idempotency_.find(scope); it != idempotency_.end()) {
            if (it->second.type != type)
                fail(ErrorCode::InvalidArgument, "idempotency key was used for a different operation");
            return it->second.result;
        }
    }
    Value event;
    event.set("actor", Value(actor_string(who)));
    event.set("args", resolve(type, std::move(args)));
    if (idempotency_key) event.set("idempotency_key", Value(*idempotency_key));
    event.set("now", Value(now));
    event.set("type", Value(type));

    Value result = apply(event);
    if (store_) {
        try {
            store_->append(events::EventEnvelope{sequence_, stream_of(type), event, now});
        } catch (...) {
            poisoned_ = true;
            throw;
        }
    }
    ++sequence_;
    ledger_->flush();
    return result;
}

void Broker::anchor(const Contract& c, Timestamp now) {
    ledger_->append_record(ledger::make_contract_record(c, now, settings_.disclosure), c, now);
}

Value Broker::apply(const Value& event) {
    const std::string& type = event.at("type").as_string();
    const Principal who = actor_from(event.at("actor"));
    const Timestamp now = event.at("now").as_int();
    const Value& a = event.at("args");

    auto admin_only = [&] {
        if (!who.admin) fail(ErrorCode::Forbidden, type + " is an operator command");
    };
    auto party = [&]() -> PartyId {
        if (who.admin) fail(ErrorCode::Forbidden, type + " must be performed by a party");
        parties_.get(who.party);
        return who.party;
    };
    auto view = [&](const Contract& c) { return contract_view(c, escrow_.payment_state(c.id), true); };

    Value result;
    if (type == "register_party") {
        admin_only();
        policy::Party p;
        p.id = hex_arg<PartyId>(a, "id");
        p.display_name = arg(a, "display_name").as_string();
        if (p.display_name.empty()) fail(ErrorCode::InvalidArgument, "display_name must not be empty");
        p.role = policy::parse_role(arg(a, "role").as_string());
        p.industry = arg(a, "industry").as_string();
        p.public_key = hex_arg<PublicKey>(a, "public_key");
        parties_.add(p);
        result = cf::to_value(p);
    } else if (type == "deposit") {
        admin_only();
        auto p = hex_arg<PartyId>(a, "party");
        parties_.get(p);
        Credits bal = escrow_.deposit(p, arg(a, "amount").as_int());
        result.set("balance", Value(bal));
        result.set("party", canon::hex_value(p));
    } else if (type == "register_asset") {
        PartyId actor = party();
        if (!parties_.get(actor).can_provide()) fail(ErrorCode::Forbidden, "party is not registered as a provider");
        Value asset_v = arg(a, "asset");
        if (!asset_v.is_object()) fail(ErrorCode::InvalidArgument, "asset must be an object");
        if (const Value* prov = asset_v.find("provider"); prov && prov->as_string() != actor.hex())
            fail(ErrorCode::Forbidden, "assets are registered by their provider");
        asset_v.set("provider", canon::hex_value(actor));
        if (!asset_v.contains("id")) asset_v.set("id", arg(a, "asset_id"));
        auto asset = cf::asset_from_value(asset_v);
        const Value& pv = arg(a, "policy");
        policy::Policy pol;
        pol.id = hex_arg<PolicyId>(a, "policy_id");
        pol.asset_id = asset.id;
        pol.terms = flat_terms(pv.find("terms"));
        if (const Value* s = pv.find("sensitivity_level")) pol.sensitivity_level = static_cast<int>(s->as_int());
        if (const Value* s = pv.find("price_listing")) pol.price_listing = s->as_int();
        if (const Value* s = pv.find("visibility_rules")) pol.visibility_rules = cf::visibility_rules_from_value(*s);
        pol.attached_at = now;
        result = entry_view(catalog_.register_asset(std::move(asset), std::move(pol), now));
    } else if (type == "deregister_asset") {
        result = entry_view(catalog_.deregister(hex_arg<AssetId>(a, "asset_id"), party()));
    } else if (type == "draft_contract") {
        PartyId actor = party();
        auto entry = catalog_.get(hex_arg<AssetId>(a, "asset_id"));
        if (!entry.active) fail(ErrorCode::UnknownAsset, "asset " + entry.asset.id.hex() + " is no longer listed");
        contract::DraftRequest req;
        req.asset_id = entry.asset.id;
        req.provider = entry.asset.provider;
        req.consumer = actor;
        if (const Value* p = a.find("purpose")) req.purpose = p->as_string();
        req.initial_terms = flat_terms(a.find("terms"));
        if (const Value* p = a.find("price")) req.price = p->as_int();
        if (const Value* p = a.find("temporal_validity")) req.temporal_validity = cf::period_from_value(*p);
        if (const Value* p = a.find("spatial_validity")) req.spatial_validity = canon::as_string_array(*p);
        if (const Value* p = a.find("liability_text")) req.liability_text = p->as_string();
        if (const Value* p = a.find("termination_clause")) req.termination_clause = p->as_string();
        auto c = engine_.draft_contract(req, entry.asset, entry.policy, parties_.get(req.provider),
                                        parties_.get(actor), hex_arg<ContractId>(a, "contract_id"),
                                        hex_arg<Salt>(a, "salt"), now);
        result = view(c);
    } else if (type == "propose") {
        PartyId actor = party();
        auto c = engine_.submit_proposal(hex_arg<ContractId>(a, "contract_id"), actor,
                                         cf::diff_from_value(arg(a, "diff")), now, expected_version(a));
        result = view(c);
    } else if (type == "respond") {
        PartyId actor = party();
        const auto& d = arg(a, "decision").as_string();
        contract::Decision decision;
        if (d == "accept") decision = contract::Decision::Accept;
        else if (d == "reject") decision = contract::Decision::Reject;
        else fail(ErrorCode::InvalidArgument, "decision must be accept or reject");
        auto c = engine_.respond(hex_arg<ContractId>(a, "contract_id"), actor, decision, now, expected_version(a));
        if (c.status == ContractStatus::Accepted) anchor(c, now);
        result = view(c);
    } else if (type == "sign") {
        PartyId actor = party();
        auto c = engine_.sign(hex_arg<ContractId>(a, "contract_id"), actor, hex_arg<Signature>(a, "signature"),
                              parties_.get(actor).public_key, now, expected_version(a));
        result = view(c);
    } else if (type == "activate") {
        PartyId actor = party();
        auto id = hex_arg<ContractId>(a, "contract_id");
        if (!engine_.get(id).is_party(actor)) fail(ErrorCode::NotAParty, "only a contract party may activate it");
        auto c = engine_.activate(id, escrow_.payment_state(id), now, expected_version(a));
        anchor(c, now);
        AccessToken token{hex_arg<TokenId>(a, "token_id"), c.id, c.consumer, c.asset_id, c.temporal_validity.end,
                          false};
        {
            std::unique_lock lock(aux_mutex_);
            tokens_[token.token_id] = token;
            token_by_contract_[c.id] = token.token_id;
        }
        result = view(c);
        result.set("token", token_view(token));
    } else if (type == "terminate") {
        PartyId actor = party();
        auto c = engine_.terminate(hex_arg<ContractId>(a, "contract_id"), actor, arg(a, "reason").as_string(), now,
                                   expected_version(a));
        anchor(c, now);
        std::unique_lock lock(aux_mutex_);
        if (auto it = token_by_contract_.find(c.id); it != token_by_contract_.end()) tokens_[it->second].revoked = true;
        result = view(c);
    } else if (type == "cancel") {
        PartyId actor = party();
        auto id = hex_arg<ContractId>(a, "contract_id");
        auto c = engine_.cancel_unpaid(id, actor, escrow_.payment_state(id), now, expected_version(a));
        anchor(c, now);
        result = view(c);
    } else if (type == "place_hold") {
        PartyId actor = party();
        auto c = engine_.get(hex_arg<ContractId>(a, "contract_id"));
        auto h = escrow_.place_hold(c, actor, parties_.get(actor).public_key, hex_arg<Signature>(a, "signature"),
                                    arg(a, "created_at").as_int(), hex_arg<HoldId>(a, "hold_id"), now);
        result = hold_view(h);
    } else if (type == "confirm_hold") {
        result = hold_view(escrow_.provider_confirm(hex_arg<HoldId>(a, "hold_id"), party(), now));
    } else if (type == "claim_bypass") {
        PartyId actor = party();
        auto r = escrow_.claim_bypass(hex_arg<HoldId>(a, "hold_id"), actor, proof_from_value(arg(a, "proof")), now);
        ledger::DisputeRecord rec{r.dispute.contract_id, r.dispute.hold_id, r.dispute.provider, r.dispute.consumer,
                                  r.dispute.amount,      r.dispute.proof.created_at, r.dispute.proof.signature,
                                  r.dispute.flagged_at};
        ledger_->append_dispute(rec, now);
        result.set("dispute", dispute_view(r.dispute));
        result.set("hold", hold_view(r.hold));
    } else if (type == "refund_hold") {
        PartyId actor = party();
        auto h = escrow_.get(hex_arg<HoldId>(a, "hold_id"));
        if (actor != h.payer && actor != h.payee) fail(ErrorCode::WrongParty, "only the hold's parties may refund it");
        result = hold_view(escrow_.refund(h.hold_id, engine_.get(h.contract_id), now));
    } else if (type == "tick") {
        admin_only();
        canon::Array expired;
        for (const auto& c : engine_.tick_expiry(now)) {
            anchor(c, now);
            {
                std::unique_lock lock(aux_mutex_);
                if (auto it = token_by_contract_.find(c.id); it != token_by_contract_.end())
                    tokens_[it->second].revoked = true;
            }
            expired.push_back(canon::hex_value(c.id));
        }
        result.set("expired", Value(std::move(expired)));
        result.set("now", Value(now));
    } else {
        fail(ErrorCode::InvalidArgument, "unknown command '" + type + "'");
    }

    if (const Value* key = event.find("idempotency_key")) {
        std::unique_lock lock(aux_mutex_);
        idempotency_[actor_string(who) + "/" + key->as_string()] = Cached{type, result};
    }
    return result;
}

std::optional<AccessToken> Broker::token(TokenId id) const {
    std::shared_lock lock(aux_mutex_);
    auto it = tokens_.find(id);
    if (it == tokens_.end()) return std::nullopt;
    return it->second;
}

std::optional<AccessToken> Broker::token_for(ContractId id) const {
    std::shared_lock lock(aux_mutex_);
    auto it = token_by_contract_.find(id);
    if (it == token_by_contract_.end()) return std::nullopt;
    return tokens_.at(it->second);
}

ValidityReport Broker::validity(ContractId id, Timestamp now) const {
    return validity_of_copy(engine_.get(id), now);
}

ValidityReport Broker::validity_of_copy(const Contract& copy, Timestamp now) const {
    return validity_report(copy, ledger_->query_contract(copy.id), parties_, ledger_->verify_chain().ok, now);
}

std::uint64_t Broker::event_count() const { return sequence_; }

Value Broker::canonical_state() const {
    Value state;
    canon::Array parties;
    for (const auto& p : parties_.all()) parties.push_back(cf::to_value(p));
    state.set("parties", Value(std::move(parties)));

    canon::Array entries;
    for (const auto& e : catalog_.all()) entries.push_back(entry_view(e));
    state.set("catalog", Value(std::move(entries)));

    canon::Array contracts;
    for (const auto& c : engine_.all()) {
        Value cv = contract_view(c, escrow_.payment_state(c.id), true);
        canon::Array log;
        for (const auto& e : engine_.events(c.id)) log.push_back(event_to_value(e));
        cv.set("events", Value(std::move(log)));
        contracts.push_back(std::move(cv));
    }
    state.set("contracts", Value(std::move(contracts)));

    Value esc;
    Value accounts;
    for (const auto& [p, bal] : escrow_.accounts()) accounts.set(p.hex(), Value(bal));
    esc.set("accounts", std::move(accounts));
    canon::Array holds;
    for (const auto& h : escrow_.holds()) holds.push_back(hold_view(h));
    esc.set("holds", Value(std::move(holds)));
    canon::Array disputes;
    for (const auto& d : escrow_.disputes()) disputes.push_back(dispute_view(d));
    esc.set("disputes", Value(std::move(disputes)));
    esc.set("deposited", Value(escrow_.totals().deposited));
    state.set("escrow", std::move(esc));

    Value led;
    led.set("digest", canon::hex_value(crypto::sha256(ledger_->bytes())));
    led.set("height", Value(static_cast<std::int64_t>(ledger_->height())));
    state.set("ledger", std::move(led));

    std::shared_lock lock(aux_mutex_);
    canon::Array tokens;
    for (const auto& [id, t] : tokens_) tokens.push_back(token_view(t));
    state.set("tokens", Value(std::move(tokens)));
    Value idem;
    for (const auto& [key, cached] : idempotency_) {
        Value c;
        c.set("result", cached.result);
        c.set("type", Value(cached.type));
        idem.set(key, std::move(c));
    }
    state.set("idempotency", std::move(idem));
    return state;
}

}  // namespace aerobroker::broker
