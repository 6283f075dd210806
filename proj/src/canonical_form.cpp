#include "aerobroker/canonical_form.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "aerobroker/crypto.hpp"
#include "aerobroker/embedded/disclosure_rules_tsv.hpp"
#include "aerobroker/error.hpp"

namespace aerobroker::canonical_form {

using namespace policy;
using contract::Contract;
using canon::Array;
using canon::Object;

namespace {

std::string term_slot(const Term& t) {
    return t.action ? t.key + "@" + std::string(to_string(*t.action)) : t.key;
}

std::pair<std::string, std::optional<Action>> split_slot(const std::string& slot) {
    auto at = slot.rfind('@');
    if (at == std::string::npos) return {slot, std::nullopt};
    return {slot.substr(0, at), parse_action(slot.substr(at + 1))};
}

template <typename T>
T id_from(const Value& v) {
    return parse_hex<T>(v.as_string());
}

std::optional<Timestamp> optional_int(const Value& v, std::string_view key) {
    if (const Value* m = v.find(key)) return m->as_int();
    return std::nullopt;
}

}  // namespace

// ---------------------------------------------------------------------------
// Terms

Value term_value_to_value(const TermValue& tv) {
    return std::visit(
        [](const auto& x) -> Value {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, bool>) return Value(x);
            else if constexpr (std::is_same_v<T, std::int64_t>) return Value(x);
            else if constexpr (std::is_same_v<T, Decimal>) return Value(x.str());
            else if constexpr (std::is_same_v<T, Text> || std::is_same_v<T, Label>) return Value(x.value);
            else if constexpr (std::is_same_v<T, Instant>) return Value(x.value);
            else if constexpr (std::is_same_v<T, Period>) return to_value(x);
            else return canon::string_array(x.values());
        },
        tv);
}

TermValue term_value_from_value(ValueType type, const Value& v) {
    switch (type) {
        case ValueType::Boolean: return v.as_bool();
        case ValueType::Integer: return v.as_int();
        case ValueType::Decimal: return Decimal::parse(v.as_string());
        case ValueType::Text: return Text{v.as_string()};
        case ValueType::Timestamp: return Instant{v.as_int()};
        case ValueType::Period: return period_from_value(v);
        case ValueType::Label: return Label{v.as_string()};
        case ValueType::LabelSet: return LabelSet(canon::as_string_array(v));
    }
    fail(ErrorCode::ParseError, "unknown value type");
}

Value to_value(const Term& t) {
    Value v;
    v.set("kind", Value(to_string(t.kind)));
    v.set("type", Value(to_string(type_of(t.value))));
    v.set("value", term_value_to_value(t.value));
    return v;
}

Value terms_to_value(const std::vector<Term>& terms) {
    Value out;
    for (const auto& t : terms) {
        auto category = std::string(to_string(t.category));
        if (!out.contains(category)) out.set(category, Value(Object{}));
        auto& slots = out.as_object().at(category).as_object();
        if (!slots.emplace(term_slot(t), to_value(t)).second)
            fail(ErrorCode::NonCanonicalizable, "duplicate term " + category + "/" + term_slot(t));
    }
    return out;
}

std::vector<Term> terms_from_value(const Value& v) {
    std::vector<Term> out;
    for (const auto& [category, slots] : v.as_object()) {
        for (const auto& [slot, body] : slots.as_object()) {
            Term t;
            t.category = parse_category(category);
            auto [key, action] = split_slot(slot);
            t.key = key;
            t.action = action;
            t.kind = parse_term_kind(body.at("kind").as_string());
            t.value = term_value_from_value(parse_value_type(body.at("type").as_string()), body.at("value"));
            out.push_back(std::move(t));
        }
    }
    return out;
}

Value term_to_flat_value(const Term& t) {
    Value v = to_value(t);
    v.set("category", Value(to_string(t.category)));
    v.set("key", Value(t.key));
    if (t.action) v.set("action", Value(to_string(*t.action)));
    return v;
}

Term term_from_value(const Value& v) {
    Term t;
    t.category = parse_category(v.at("category").as_string());
    t.kind = parse_term_kind(v.at("kind").as_string());
    t.key = v.at("key").as_string();
    if (const Value* a = v.find("action")) t.action = parse_action(a->as_string());
    t.value = term_value_from_value(parse_value_type(v.at("type").as_string()), v.at("value"));
    return t;
}

Value term_key_to_value(const TermKey& k) {
    Value v;
    v.set("category", Value(to_string(k.category)));
    v.set("key", Value(k.key));
    if (k.action) v.set("action", Value(to_string(*k.action)));
    return v;
}

TermKey term_key_from_value(const Value& v) {
    TermKey k{parse_category(v.at("category").as_string()), v.at("key").as_string(), std::nullopt};
    if (const Value* a = v.find("action")) k.action = parse_action(a->as_string());
    return k;
}

// ---------------------------------------------------------------------------
// Parties, assets, policies

Value to_value(const Party& p) {
    Value v;
    v.set("display_name", Value(p.display_name));
    v.set("id", canon::hex_value(p.id));
    v.set("industry", Value(p.industry));
    v.set("public_key", canon::hex_value(p.public_key));
    v.set("role", Value(to_string(p.role)));
    return v;
}

Party party_from_value(const Value& v) {
    Party p;
    p.display_name = v.at("display_name").as_string();
    p.id = id_from<PartyId>(v.at("id"));
    p.industry = v.at("industry").as_string();
    p.public_key = id_from<PublicKey>(v.at("public_key"));
    p.role = parse_role(v.at("role").as_string());
    return p;
}

Value to_value(const DataAsset& a) {
    Value v;
    v.set("contributor", Value(a.contributor));
    if (a.created_date) v.set("created_date", Value(*a.created_date));
    v.set("creator", Value(a.creator));
    v.set("data_model_entities", canon::string_array(a.data_model_entities));
    v.set("description", Value(a.description));
    v.set("encrypted_columns", canon::string_array(a.encrypted_columns));
    v.set("id", canon::hex_value(a.id));
    if (a.modified_date) v.set("modified_date", Value(*a.modified_date));
    v.set("provider", canon::hex_value(a.provider));
    if (a.published_date) v.set("published_date", Value(*a.published_date));
    v.set("unencrypted_columns", canon::string_array(a.unencrypted_columns));
    v.set("version", Value(a.version));
    return v;
}

DataAsset asset_from_value(const Value& v) {
    DataAsset a;
    auto text = [&v](std::string_view k) -> std::string {
        const Value* m = v.find(k);
        return m ? m->as_string() : std::string{};
    };
    auto list = [&v](std::string_view k) -> std::vector<std::string> {
        const Value* m = v.find(k);
        return m ? canon::as_string_array(*m) : std::vector<std::string>{};
    };
    a.contributor = text("contributor");
    a.created_date = optional_int(v, "created_date");
    a.creator = text("creator");
    a.data_model_entities = list("data_model_entities");
    a.description = text("description");
    a.encrypted_columns = list("encrypted_columns");
    a.id = id_from<AssetId>(v.at("id"));
    a.modified_date = optional_int(v, "modified_date");
    a.provider = id_from<PartyId>(v.at("provider"));
    a.published_date = optional_int(v, "published_date");
    a.unencrypted_columns = list("unencrypted_columns");
    a.version = text("version");
    return a;
}

Value visibility_rules_to_value(const std::vector<VisibilityRule>& rules) {
    // Rules are conjunctive, so their order carries no meaning; the
    // document lists them sorted with de-duplicated allowed values.
    std::vector<std::pair<std::string, std::vector<std::string>>> sorted;
    for (const auto& r : rules) {
        auto allowed = r.allowed;
        std::sort(allowed.begin(), allowed.end());
        allowed.erase(std::unique(allowed.begin(), allowed.end()), allowed.end());
        sorted.emplace_back(r.attribute, std::move(allowed));
    }
    std::sort(sorted.begin(), sorted.end());
    Array arr;
    for (const auto& [attribute, allowed] : sorted) {
        Value rule;
        rule.set("allowed", canon::string_array(allowed));
        rule.set("attribute", Value(attribute));
        arr.push_back(std::move(rule));
    }
    return Value(std::move(arr));
}

std::vector<VisibilityRule> visibility_rules_from_value(const Value& v) {
    std::vector<VisibilityRule> out;
    for (const auto& r : v.as_array())
        out.push_back({r.at("attribute").as_string(), canon::as_string_array(r.at("allowed"))});
    return out;
}

Value to_value(const Policy& p) {
    Value v;
    v.set("asset_id", canon::hex_value(p.asset_id));
    v.set("attached_at", Value(p.attached_at));
    v.set("id", canon::hex_value(p.id));
    v.set("price_listing", Value(p.price_listing));
    v.set("sensitivity_level", Value(p.sensitivity_level));
    v.set("terms", terms_to_value(p.terms));
    v.set("visibility_rules", visibility_rules_to_value(p.visibility_rules));
    return v;
}

Policy policy_from_value(const Value& v) {
    Policy p;
    p.asset_id = id_from<AssetId>(v.at("asset_id"));
    p.attached_at = v.at("attached_at").as_int();
    p.id = id_from<PolicyId>(v.at("id"));
    p.price_listing = v.at("price_listing").as_int();
    p.sensitivity_level = static_cast<int>(v.at("sensitivity_level").as_int());
    p.terms = terms_from_value(v.at("terms"));
    p.visibility_rules = visibility_rules_from_value(v.at("visibility_rules"));
    return p;
}

Value to_value(const Period& p) {
    Value v;
    v.set("end", Value(p.end));
    v.set("start", Value(p.start));
    return v;
}

Period period_from_value(const Value& v) { return {v.at("start").as_int(), v.at("end").as_int()}; }

// ---------------------------------------------------------------------------
// Contracts

Value agreement_value(const Contract& c) {
    Value v;
    v.set("asset_id", canon::hex_value(c.asset_id));
    v.set("consumer", canon::hex_value(c.consumer));
    v.set("contract_id", canon::hex_value(c.id));
    v.set("liability_text", Value(c.liability_text));
    v.set("price", Value(c.price));
    v.set("provider", canon::hex_value(c.provider));
    v.set("sensitivity_level", Value(c.sensitivity_level));
    v.set("spatial_validity", canon::string_array(c.spatial_validity));
    v.set("temporal_validity", to_value(c.temporal_validity));
    v.set("termination_clause", Value(c.termination_clause));
    v.set("terms", terms_to_value(c.terms));
    v.set("version", Value(static_cast<std::int64_t>(c.version)));
    return v;
}

Value to_value(const Contract& c) {
    Value v = agreement_value(c);
    if (c.accepted_at) v.set("accepted_at", Value(*c.accepted_at));
    v.set("created_at", Value(c.created_at));
    v.set("status", Value(contract::to_string(c.status)));
    if (c.termination_reason) v.set("termination_reason", Value(*c.termination_reason));
    v.set("turn", canon::hex_value(c.turn));
    if (c.validation_date) v.set("validation_date", Value(*c.validation_date));
    return v;
}

Contract contract_from_value(const Value& v) {
    Contract c;
    c.accepted_at = optional_int(v, "accepted_at");
    c.asset_id = id_from<AssetId>(v.at("asset_id"));
    c.consumer = id_from<PartyId>(v.at("consumer"));
    c.id = id_from<ContractId>(v.at("contract_id"));
    c.created_at = v.at("created_at").as_int();
    c.liability_text = v.at("liability_text").as_string();
    c.price = v.at("price").as_int();
    c.provider = id_from<PartyId>(v.at("provider"));
    c.sensitivity_level = static_cast<int>(v.at("sensitivity_level").as_int());
    c.spatial_validity = canon::as_string_array(v.at("spatial_validity"));
    c.status = contract::parse_status(v.at("status").as_string());
    c.temporal_validity = period_from_value(v.at("temporal_validity"));
    c.termination_clause = v.at("termination_clause").as_string();
    if (const Value* r = v.find("termination_reason")) c.termination_reason = r->as_string();
    c.terms = terms_from_value(v.at("terms"));
    std::sort(c.terms.begin(), c.terms.end(),
              [](const Term& a, const Term& b) { return a.identity() < b.identity(); });
    c.turn = id_from<PartyId>(v.at("turn"));
    c.validation_date = optional_int(v, "validation_date");
    auto version = v.at("version").as_int();
    if (version < 1) fail(ErrorCode::ParseError, "contract version must be >= 1");
    c.version = static_cast<std::uint64_t>(version);
    return c;
}

Value to_value(const contract::ProposalDiff& d) {
    Value v;
    if (d.price) v.set("price", Value(*d.price));
    if (!d.remove_terms.empty()) {
        Array arr;
        for (const auto& k : d.remove_terms) arr.push_back(term_key_to_value(k));
        v.set("remove_terms", Value(std::move(arr)));
    }
    if (d.spatial_validity) v.set("spatial_validity", canon::string_array(*d.spatial_validity));
    if (d.temporal_validity) v.set("temporal_validity", to_value(*d.temporal_validity));
    if (!d.upsert_terms.empty()) {
        Array arr;
        for (const auto& t : d.upsert_terms) arr.push_back(term_to_flat_value(t));
        v.set("upsert_terms", Value(std::move(arr)));
    }
    return v;
}

contract::ProposalDiff diff_from_value(const Value& v) {
    contract::ProposalDiff d;
    if (const Value* p = v.find("price")) d.price = p->as_int();
    if (const Value* r = v.find("remove_terms"))
        for (const auto& k : r->as_array()) d.remove_terms.push_back(term_key_from_value(k));
    if (const Value* s = v.find("spatial_validity")) d.spatial_validity = canon::as_string_array(*s);
    if (const Value* t = v.find("temporal_validity")) d.temporal_validity = period_from_value(*t);
    if (const Value* u = v.find("upsert_terms"))
        for (const auto& t : u->as_array()) d.upsert_terms.push_back(term_from_value(t));
    return d;
}

Value signatures_to_value(const std::map<PartyId, Signature>& sigs) {
    Value v;
    for (const auto& [party, sig] : sigs) v.set(party.hex(), canon::hex_value(sig));
    return v;
}

std::map<PartyId, Signature> signatures_from_value(const Value& v) {
    std::map<PartyId, Signature> out;
    for (const auto& [party, sig] : v.as_object())
        out.emplace(parse_hex<PartyId>(party), parse_hex<Signature>(sig.as_string()));
    return out;
}

CanonicalDocument canonicalize(const Contract& c) { return CanonicalDocument::of(to_value(c)); }
CanonicalDocument canonicalize(const Policy& p) { return CanonicalDocument::of(to_value(p)); }

Digest signing_digest(const Contract& c) { return CanonicalDocument::of(agreement_value(c)).digest; }

// ---------------------------------------------------------------------------
// Selective disclosure

std::string_view to_string(Disclosure d) { return d == Disclosure::Plain ? "Plain" : "Hashed"; }

Disclosure parse_disclosure(std::string_view s) {
    if (s == "Plain") return Disclosure::Plain;
    if (s == "Hashed") return Disclosure::Hashed;
    fail(ErrorCode::ParseError, "unknown disclosure '" + std::string(s) + "'");
}

Value to_value(const AnchorEntry& e) {
    Value v;
    v.set("disclosure", Value(to_string(e.disclosure)));
    v.set("key", Value(e.key));
    v.set("value", Value(e.value));
    return v;
}

AnchorEntry anchor_entry_from_value(const Value& v) {
    return {v.at("key").as_string(), parse_disclosure(v.at("disclosure").as_string()), v.at("value").as_string()};
}

const DisclosureRules& DisclosureRules::standard() {
    static const DisclosureRules rules = parse(embedded::kDisclosureRulesTsv);
    return rules;
}

DisclosureRules DisclosureRules::parse(std::string_view text) {
    DisclosureRules out;
    std::size_t line_no = 0;
    while (!text.empty()) {
        auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty() || line.front() == '#') continue;
        auto tab = line.find('\t');
        auto where = "disclosure rule line " + std::to_string(line_no);
        if (tab == std::string_view::npos || line.find('\t', tab + 1) != std::string_view::npos)
            fail(ErrorCode::ConfigInvalid, where + ": expected path-prefix<TAB>Plain|Hashed");
        auto prefix = line.substr(0, tab);
        auto disclosure = line.substr(tab + 1);
        if (prefix.empty()) fail(ErrorCode::ConfigInvalid, where + ": empty path prefix");
        if (disclosure != "Plain" && disclosure != "Hashed")
            fail(ErrorCode::ConfigInvalid, where + ": disclosure must be Plain or Hashed");
        for (const auto& r : out.rules_)
            if (r.prefix == prefix) fail(ErrorCode::ConfigInvalid, where + ": duplicate prefix");
        out.rules_.push_back({std::string(prefix), parse_disclosure(disclosure)});
    }
    return out;
}

DisclosureRules DisclosureRules::load_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::ConfigInvalid, "cannot read disclosure rules '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

std::optional<Disclosure> DisclosureRules::match(std::string_view path) const {
    const Rule* best = nullptr;
    for (const auto& r : rules_) {
        bool hit = path == r.prefix ||
                   (path.size() > r.prefix.size() && path.substr(0, r.prefix.size()) == r.prefix &&
                    path[r.prefix.size()] == '.');
        if (hit && (!best || r.prefix.size() > best->prefix.size())) best = &r;
    }
    if (!best) return std::nullopt;
    return best->disclosure;
}

Disclosure DisclosureRules::decide(std::string_view path, int sensitivity_level) const {
    if (auto d = match(path)) return *d;
    return sensitivity_level >= 3 ? Disclosure::Hashed : Disclosure::Plain;
}

std::string render_leaf(const Value& leaf) { return canon::write(leaf); }

std::vector<AnchorEntry> build_anchor_payload(const Contract& c, int sensitivity_level,
                                              const DisclosureRules& rules) {
    using contract::ContractStatus;
    if (c.status == ContractStatus::Draft || c.status == ContractStatus::Negotiating)
        fail(ErrorCode::WrongStatus, "anchor payload requires an Accepted or later contract");
    Value doc = to_value(c);
    std::vector<AnchorEntry> out;
    for (const auto& leaf : canon::leaves(doc)) {
        AnchorEntry e;
        e.key = leaf.path;
        e.disclosure = rules.decide(leaf.path, sensitivity_level);
        std::string plain = render_leaf(*leaf.value);
        if (e.disclosure == Disclosure::Plain) {
            e.value = std::move(plain);
        } else {
            e.value = crypto::Hasher().update(c.salt.data).update(plain).finish().hex();
        }
        out.push_back(std::move(e));
    }
    return out;
}

bool verify_anchor_entry(const AnchorEntry& entry, std::string_view claimed_plaintext, const Salt& salt) {
    if (entry.disclosure == Disclosure::Plain) return entry.value == claimed_plaintext;
    return crypto::Hasher().update(salt.data).update(claimed_plaintext).finish().hex() == entry.value;
}

}  // namespace aerobroker::canonical_form
