#include "aerobroker/api.hpp"

#include <chrono>
#include <vector>

namespace aerobroker::api {

namespace cf = canonical_form;
using broker::Principal;
using canon::Value;
using contract::Contract;

Clock system_clock() {
    return [] {
        return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch())
            .count();
    };
}

int http_status(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument:
        case ErrorCode::ParseError:
        case ErrorCode::NonCanonicalizable:
        case ErrorCode::VocabularyViolation:
        case ErrorCode::ConflictingTerms:
        case ErrorCode::DuplicateTerm:
        case ErrorCode::MissingPrivacyTerm:
        case ErrorCode::InvalidAsset:
        case ErrorCode::InconsistentPolicy:
        case ErrorCode::NonNegotiableKey:
        case ErrorCode::BadSignature:
        case ErrorCode::BadProof:
        case ErrorCode::SelfDealing:
            return 400;
        case ErrorCode::Unauthenticated: return 401;
        case ErrorCode::InsufficientFunds: return 402;
        case ErrorCode::Forbidden:
        case ErrorCode::VisibilityDenied:
        case ErrorCode::NotAssetOwner:
        case ErrorCode::NotAParty:
        case ErrorCode::NotTheConsumer:
        case ErrorCode::WrongParty:
            return 403;
        case ErrorCode::UnknownParty:
        case ErrorCode::UnknownAsset:
        case ErrorCode::UnknownContract:
        case ErrorCode::UnknownHold:
        case ErrorCode::UnknownToken:
        case ErrorCode::NotFound:
            return 404;
        case ErrorCode::DuplicateParty:
        case ErrorCode::DuplicateAsset:
        case ErrorCode::DuplicateContract:
        case ErrorCode::OutOfTurn:
        case ErrorCode::TerminalStatus:
        case ErrorCode::WrongStatus:
        case ErrorCode::WrongState:
        case ErrorCode::MissingSignature:
        case ErrorCode::PaymentIncomplete:
        case ErrorCode::NotYetExpired:
        case ErrorCode::VersionConflict:
        case ErrorCode::TooEarly:
            return 409;
        case ErrorCode::DigestMismatch:
        case ErrorCode::ChainCorrupt:
        case ErrorCode::StoreCorrupt:
        case ErrorCode::ConfigInvalid:
            return 500;
    }
    return 500;
}

Value error_body(ErrorCode code, std::string_view message) {
    Value err;
    err.set("code", Value(to_string(code)));
    err.set("message", Value(message));
    Value v;
    v.set("error", std::move(err));
    return v;
}

namespace {

std::vector<std::string_view> segments(std::string_view path) {
    std::vector<std::string_view> out;
    auto q = path.find('?');
    if (q != std::string_view::npos) path = path.substr(0, q);
    std::size_t pos = 0;
    while (pos < path.size()) {
        if (path[pos] == '/') {
            ++pos;
            continue;
        }
        auto next = path.find('/', pos);
        if (next == std::string_view::npos) next = path.size();
        out.push_back(path.substr(pos, next - pos));
        pos = next;
    }
    return out;
}

Value list(canon::Array items, std::string_view key) {
    Value v;
    v.set(std::string(key), Value(std::move(items)));
    return v;
}

Value with(Value body, std::string key, Value v) {
    if (!body.is_object()) fail(ErrorCode::InvalidArgument, "request body must be a JSON object");
    body.set(std::move(key), std::move(v));
    return body;
}

catalog::SearchQuery parse_query(PartyId requester, const Value& b) {
    catalog::SearchQuery q;
    q.requester = requester;
    if (const Value* v = b.find("purpose")) q.purpose = v->as_string();
    if (const Value* v = b.find("text")) q.text = v->as_string();
    if (const Value* v = b.find("entity_tags")) q.entity_tags = canon::as_string_array(*v);
    if (const Value* v = b.find("provider")) q.provider = parse_hex<PartyId>(v->as_string());
    if (const Value* v = b.find("category_filters")) {
        for (const auto& f : v->as_array()) {
            catalog::CategoryFilter cf_;
            cf_.category = policy::parse_category(f.at("category").as_string());
            cf_.key = f.at("key").as_string();
            cf_.value = cf::term_value_from_value(policy::parse_value_type(f.at("type").as_string()), f.at("value"));
            q.category_filters.push_back(std::move(cf_));
        }
    }
    return q;
}

Value chain_report(const ledger::ChainReport& r) {
    Value v;
    if (r.first_corrupt_height) v.set("first_corrupt_height", Value(static_cast<std::int64_t>(*r.first_corrupt_height)));
    if (!r.detail.empty()) v.set("detail", Value(r.detail));
    v.set("height", Value(static_cast<std::int64_t>(r.height)));
    v.set("ok", Value(r.ok));
    return v;
}

}  // namespace

Api::Api(broker::Broker& broker, AuthConfig auth, Clock clock)
    : broker_(broker), auth_(std::move(auth)), clock_(clock ? std::move(clock) : system_clock()) {}

Response Api::handle(const Request& request) {
    try {
        auto segs = segments(request.path);
        if (request.method == "GET" && segs.size() == 1 && segs[0] == "health") {
            Value v;
            v.set("ok", Value(true));
            return {200, v};
        }
        if (!request.api_key || request.api_key->empty()) fail(ErrorCode::Unauthenticated, "missing X-Api-Key");
        Principal who;
        if (!auth_.admin_key.empty() && *request.api_key == auth_.admin_key) {
            who = Principal::root();
        } else {
            auto it = auth_.api_keys.find(*request.api_key);
            if (it == auth_.api_keys.end()) fail(ErrorCode::Unauthenticated, "unknown API key");
            auto party = broker_.parties().find_by_name(it->second);
            if (!party) fail(ErrorCode::Unauthenticated, "API key is bound to unregistered party '" + it->second + "'");
            who = Principal::of(party->id);
        }
        Value body;
        if (!request.body.empty()) body = canon::parse(request.body);
        if (!body.is_object()) fail(ErrorCode::InvalidArgument, "request body must be a JSON object");
        return dispatch(who, request.method, request.path, body, request.idempotency_key);
    } catch (const BrokerError& e) {
        return {http_status(e.code()), error_body(e.code(), e.detail())};
    }
}

Response Api::dispatch(const Principal& who, std::string_view method, std::string_view path, const Value& body,
                       const std::optional<std::string>& idempotency_key) {
    try {
        return route(who, method, path, body, idempotency_key);
    } catch (const BrokerError& e) {
        return {http_status(e.code()), error_body(e.code(), e.detail())};
    }
}

Response Api::route(const Principal& who, std::string_view method, std::string_view path, const Value& body,
                    const std::optional<std::string>& idem) {
    auto segs = segments(path);
    auto n = segs.size();
    auto is = [&](std::string_view m, std::initializer_list<std::string_view> pattern) {
        if (method != m || pattern.size() != n) return false;
        std::size_t i = 0;
        for (auto p : pattern) {
            if (p != "*" && p != segs[i]) return false;
            ++i;
        }
        return true;
    };
    auto submit = [&](std::string_view type, Value args, int status = 200) -> Response {
        return {status, broker_.submit(who, type, std::move(args), clock_(), idem)};
    };
    auto require_party = [&]() -> PartyId {
        if (who.admin) fail(ErrorCode::Forbidden, "this request must be made by a party");
        return who.party;
    };
    auto visible_contract = [&](std::string_view hex) -> Contract {
        auto c = broker_.contracts().get(parse_hex<ContractId>(hex));
        if (!who.admin && !c.is_party(who.party)) fail(ErrorCode::Forbidden, "not a party to this contract");
        return c;
    };
    auto id_value = [&](std::size_t i) { return Value(std::string(segs[i])); };

    // Parties and accounts
    if (is("GET", {"parties"})) {
        canon::Array out;
        for (const auto& p : broker_.parties().all()) out.push_back(cf::to_value(p));
        return {200, list(std::move(out), "parties")};
    }
    if (is("POST", {"parties"})) return submit("register_party", body, 201);
    if (is("POST", {"accounts", "deposit"})) return submit("deposit", body);
    if (is("GET", {"accounts", "*"})) {
        auto p = parse_hex<PartyId>(segs[1]);
        if (!who.admin && who.party != p) fail(ErrorCode::Forbidden, "accounts are private to their party");
        broker_.parties().get(p);
        Value v;
        v.set("balance", Value(broker_.escrow().balance(p)));
        v.set("party", Value(std::string(segs[1])));
        return {200, v};
    }

    // Assets and catalog
    if (is("POST", {"assets"})) return submit("register_asset", body, 201);
    if (is("DELETE", {"assets", "*"})) return submit("deregister_asset", with(body, "asset_id", id_value(1)));
    if (is("POST", {"catalog", "search"})) {
        auto results = broker_.catalog().search(parse_query(require_party(), body));
        canon::Array out;
        for (const auto& e : results) out.push_back(broker::entry_view(e));
        return {200, list(std::move(out), "results")};
    }

    // Contracts
    if (is("GET", {"contracts"})) {
        canon::Array out;
        for (const auto& c : broker_.contracts().all())
            if (who.admin || c.is_party(who.party))
                out.push_back(broker::contract_view(c, broker_.escrow().payment_state(c.id), !who.admin));
        return {200, list(std::move(out), "contracts")};
    }
    if (is("POST", {"contracts"})) return submit("draft_contract", body, 201);
    if (n >= 2 && segs[0] == "contracts") {
        if (is("GET", {"contracts", "*"})) {
            auto c = visible_contract(segs[1]);
            return {200, broker::contract_view(c, broker_.escrow().payment_state(c.id), !who.admin)};
        }
        if (is("GET", {"contracts", "*", "events"})) {
            auto c = visible_contract(segs[1]);
            canon::Array out;
            for (const auto& e : broker_.contracts().events(c.id)) out.push_back(broker::event_to_value(e));
            return {200, list(std::move(out), "events")};
        }
        if (is("GET", {"contracts", "*", "validity"})) {
            auto c = visible_contract(segs[1]);
            return {200, broker::to_value(broker_.validity(c.id, clock_()))};
        }
        if (is("POST", {"contracts", "*", "validity"})) {
            auto c = visible_contract(segs[1]);
            Contract copy = cf::contract_from_value(body.at("document"));
            if (copy.id != c.id) fail(ErrorCode::InvalidArgument, "document names a different contract");
            copy.signatures = c.signatures;
            if (const Value* s = body.find("signatures")) copy.signatures = cf::signatures_from_value(*s);
            return {200, broker::to_value(broker_.validity_of_copy(copy, clock_()))};
        }
        if (is("GET", {"contracts", "*", "token"})) {
            auto c = visible_contract(segs[1]);
            auto t = broker_.token_for(c.id);
            if (!t) fail(ErrorCode::UnknownToken, "no access token issued for this contract");
            Value v;
            v.set("token", broker::token_view(*t));
            v.set("valid", Value(broker::token_valid(*t, c, clock_())));
            return {200, v};
        }
        static const std::map<std::string_view, std::string_view> actions = {
            {"proposals", "propose"}, {"response", "respond"},   {"signatures", "sign"},
            {"activate", "activate"}, {"terminate", "terminate"}, {"cancel", "cancel"},
        };
        if (n == 3 && method == "POST")
            if (auto it = actions.find(segs[2]); it != actions.end())
                return submit(it->second, with(body, "contract_id", id_value(1)));
    }

    // Escrow
    if (is("POST", {"escrow", "holds"})) return submit("place_hold", body, 201);
    if (is("GET", {"escrow", "holds", "*"})) {
        auto h = broker_.escrow().get(parse_hex<HoldId>(segs[2]));
        if (!who.admin && who.party != h.payer && who.party != h.payee)
            fail(ErrorCode::Forbidden, "not a party to this hold");
        return {200, broker::hold_view(h)};
    }
    if (is("POST", {"escrow", "holds", "*", "confirm"})) return submit("confirm_hold", with(body, "hold_id", id_value(2)));
    if (is("POST", {"escrow", "holds", "*", "bypass"})) return submit("claim_bypass", with(body, "hold_id", id_value(2)));
    if (is("POST", {"escrow", "holds", "*", "refund"})) return submit("refund_hold", with(body, "hold_id", id_value(2)));

    // Ledger
    if (is("GET", {"ledger", "verify"})) return {200, chain_report(broker_.ledger().verify_chain())};
    if (is("GET", {"ledger", "contracts", "*"})) {
        auto id = parse_hex<ContractId>(segs[2]);
        canon::Array records;
        for (const auto& r : broker_.ledger().query_contract(id)) records.push_back(ledger::to_value(r));
        canon::Array disputes;
        for (const auto& d : broker_.ledger().query_disputes(id)) disputes.push_back(ledger::to_value(d));
        Value v;
        v.set("contract_id", Value(std::string(segs[2])));
        v.set("disputes", Value(std::move(disputes)));
        v.set("records", Value(std::move(records)));
        return {200, v};
    }

    // Access tokens
    if (is("GET", {"tokens", "*"})) {
        auto t = broker_.token(parse_hex<TokenId>(segs[1]));
        if (!t) fail(ErrorCode::UnknownToken, "unknown access token");
        auto c = broker_.contracts().get(t->contract_id);
        if (!who.admin && !c.is_party(who.party)) fail(ErrorCode::Forbidden, "not a party to this token's contract");
        Value v;
        v.set("token", broker::token_view(*t));
        v.set("valid", Value(broker::token_valid(*t, c, clock_())));
        return {200, v};
    }

    if (is("POST", {"admin", "tick"})) return submit("tick", body);

    fail(ErrorCode::NotFound, "no route for " + std::string(method) + " " + std::string(path));
}

}  // namespace aerobroker::api
