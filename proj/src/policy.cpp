#include "aerobroker/policy.hpp"

#include <algorithm>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>

#include "aerobroker/embedded/vocabulary_tsv.hpp"
#include "aerobroker/error.hpp"

namespace aerobroker::policy {

namespace {

template <typename Enum, std::size_t N>
Enum parse_enum(std::string_view s, const std::pair<Enum, std::string_view> (&table)[N], const char* what) {
    for (const auto& [value, name] : table)
        if (name == s) return value;
    fail(ErrorCode::ParseError, std::string("unknown ") + what + " '" + std::string(s) + "'");
}

template <typename Enum, std::size_t N>
std::string_view enum_name(Enum e, const std::pair<Enum, std::string_view> (&table)[N]) {
    for (const auto& [value, name] : table)
        if (value == e) return name;
    return "?";
}

constexpr std::pair<TermKind, std::string_view> kKinds[] = {
    {TermKind::Permission, "Permission"},
    {TermKind::Prohibition, "Prohibition"},
    {TermKind::Obligation, "Obligation"},
};

constexpr std::pair<PolicyCategory, std::string_view> kCategories[] = {
    {PolicyCategory::DataAsset, "DataAsset"},
    {PolicyCategory::Contract, "Contract"},
    {PolicyCategory::Responsibility, "Responsibility"},
    {PolicyCategory::RightsAndUsage, "RightsAndUsage"},
    {PolicyCategory::Quality, "Quality"},
    {PolicyCategory::PrivacyAndProtection, "PrivacyAndProtection"},
};

constexpr std::pair<Action, std::string_view> kActions[] = {
    {Action::Derivation, "derivation"},     {Action::Attribution, "attribution"},
    {Action::Reproduction, "reproduction"}, {Action::Distribution, "distribution"},
    {Action::ReContext, "re-context"},
};

constexpr std::pair<ValueType, std::string_view> kValueTypes[] = {
    {ValueType::Boolean, "boolean"}, {ValueType::Integer, "integer"},     {ValueType::Decimal, "decimal"},
    {ValueType::Text, "text"},       {ValueType::Timestamp, "timestamp"}, {ValueType::Period, "period"},
    {ValueType::Label, "label"},     {ValueType::LabelSet, "labels"},
};

constexpr std::pair<PartyRole, std::string_view> kRoles[] = {
    {PartyRole::Provider, "provider"},
    {PartyRole::Consumer, "consumer"},
    {PartyRole::Both, "both"},
};

constexpr std::pair<ViolationKind, std::string_view> kViolations[] = {
    {ViolationKind::EmptyTerms, "EmptyTerms"},
    {ViolationKind::UnknownKey, "UnknownKey"},
    {ViolationKind::ValueTypeMismatch, "ValueTypeMismatch"},
    {ViolationKind::MissingAction, "MissingAction"},
    {ViolationKind::UnexpectedAction, "UnexpectedAction"},
    {ViolationKind::Duplicate, "Duplicate"},
    {ViolationKind::Conflict, "Conflict"},
    {ViolationKind::MissingPrivacyTerm, "MissingPrivacyTerm"},
    {ViolationKind::SensitivityOutOfRange, "SensitivityOutOfRange"},
    {ViolationKind::NegativePrice, "NegativePrice"},
    {ViolationKind::UnknownVisibilityAttribute, "UnknownVisibilityAttribute"},
};

}  // namespace

std::string_view to_string(TermKind k) { return enum_name(k, kKinds); }
std::string_view to_string(PolicyCategory c) { return enum_name(c, kCategories); }
std::string_view to_string(Action a) { return enum_name(a, kActions); }
std::string_view to_string(ValueType t) { return enum_name(t, kValueTypes); }
std::string_view to_string(PartyRole r) { return enum_name(r, kRoles); }
std::string_view to_string(ViolationKind k) { return enum_name(k, kViolations); }

TermKind parse_term_kind(std::string_view s) { return parse_enum(s, kKinds, "term kind"); }
PolicyCategory parse_category(std::string_view s) { return parse_enum(s, kCategories, "policy category"); }
Action parse_action(std::string_view s) { return parse_enum(s, kActions, "action"); }
ValueType parse_value_type(std::string_view s) { return parse_enum(s, kValueTypes, "value type"); }
PartyRole parse_role(std::string_view s) { return parse_enum(s, kRoles, "party role"); }

// ---------------------------------------------------------------------------

Decimal Decimal::parse(std::string_view text) {
    std::string_view s = text;
    bool negative = false;
    if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
        negative = s.front() == '-';
        s.remove_prefix(1);
    }
    auto dot = s.find('.');
    std::string_view int_part = s.substr(0, dot);
    std::string_view frac_part = dot == std::string_view::npos ? std::string_view{} : s.substr(dot + 1);
    auto all_digits = [](std::string_view p) {
        return std::all_of(p.begin(), p.end(), [](char c) { return c >= '0' && c <= '9'; });
    };
    if (int_part.empty() || !all_digits(int_part) || !all_digits(frac_part) ||
        (dot != std::string_view::npos && frac_part.empty()))
        fail(ErrorCode::ParseError, "malformed decimal '" + std::string(text) + "'");
    while (int_part.size() > 1 && int_part.front() == '0') int_part.remove_prefix(1);
    while (!frac_part.empty() && frac_part.back() == '0') frac_part.remove_suffix(1);

    Decimal d;
    d.text_ = std::string(int_part);
    if (!frac_part.empty()) d.text_ += "." + std::string(frac_part);
    if (negative && d.text_ != "0") d.text_ = "-" + d.text_;
    return d;
}

LabelSet::LabelSet(std::vector<std::string> labels) : values_(std::move(labels)) {
    std::sort(values_.begin(), values_.end());
    values_.erase(std::unique(values_.begin(), values_.end()), values_.end());
}

bool LabelSet::contains(std::string_view label) const {
    return std::binary_search(values_.begin(), values_.end(), label, std::less<>{});
}

ValueType type_of(const TermValue& v) {
    static constexpr ValueType kByIndex[] = {ValueType::Boolean, ValueType::Integer, ValueType::Decimal,
                                             ValueType::Text,    ValueType::Timestamp, ValueType::Period,
                                             ValueType::Label,   ValueType::LabelSet};
    return kByIndex[v.index()];
}

std::string describe(const TermValue& v) {
    return std::visit(
        [](const auto& x) -> std::string {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, bool>) return x ? "true" : "false";
            else if constexpr (std::is_same_v<T, std::int64_t>) return std::to_string(x);
            else if constexpr (std::is_same_v<T, Decimal>) return x.str();
            else if constexpr (std::is_same_v<T, Text> || std::is_same_v<T, Label>) return x.value;
            else if constexpr (std::is_same_v<T, Instant>) return "@" + std::to_string(x.value);
            else if constexpr (std::is_same_v<T, Period>)
                return "[" + std::to_string(x.start) + ", " + std::to_string(x.end) + "]";
            else {
                std::string out = "{";
                for (std::size_t i = 0; i < x.values().size(); ++i) out += (i ? "," : "") + x.values()[i];
                return out + "}";
            }
        },
        v);
}

// ---------------------------------------------------------------------------
// Vocabulary

const Vocabulary& Vocabulary::standard() {
    static const Vocabulary vocabulary = parse(embedded::kVocabularyTsv);
    return vocabulary;
}

Vocabulary Vocabulary::parse(std::string_view text) {
    Vocabulary vocabulary;
    std::size_t line_no = 0;
    while (!text.empty()) {
        auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty() || line.front() == '#') continue;

        std::vector<std::string_view> fields;
        std::size_t start = 0;
        while (true) {
            auto tab = line.find('\t', start);
            fields.push_back(line.substr(start, tab - start));
            if (tab == std::string_view::npos) break;
            start = tab + 1;
        }
        auto where = "vocabulary line " + std::to_string(line_no);
        if (fields.size() != 4) fail(ErrorCode::ConfigInvalid, where + ": expected 4 tab-separated fields");
        if (fields[1].empty() || fields[1].find_first_of(".@") != std::string_view::npos)
            fail(ErrorCode::ConfigInvalid, where + ": key must be non-empty and contain no '.' or '@'");
        if (fields[3] != "0" && fields[3] != "1")
            fail(ErrorCode::ConfigInvalid, where + ": requires-action must be 0 or 1");
        try {
            vocabulary.add({parse_category(fields[0]), std::string(fields[1]), parse_value_type(fields[2]),
                            fields[3] == "1"});
        } catch (const BrokerError& e) {
            fail(ErrorCode::ConfigInvalid, where + ": " + e.detail());
        }
    }
    return vocabulary;
}

Vocabulary Vocabulary::load_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::ConfigInvalid, "cannot read vocabulary registry '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

void Vocabulary::add(VocabularyEntry entry) {
    if (const auto* existing = find(entry.category, entry.key)) {
        if (*existing == entry) return;
        fail(ErrorCode::ConfigInvalid, "vocabulary key '" + entry.key + "' redefined under " +
                                           std::string(to_string(entry.category)));
    }
    entries_.push_back(std::move(entry));
}

void Vocabulary::merge(const Vocabulary& extension) {
    for (const auto& e : extension.entries_) add(e);
}

const VocabularyEntry* Vocabulary::find(PolicyCategory category, std::string_view key) const {
    for (const auto& e : entries_)
        if (e.category == category && e.key == key) return &e;
    return nullptr;
}

std::string Vocabulary::serialize() const {
    std::string out;
    for (const auto& e : entries_) {
        out += std::string(to_string(e.category)) + "\t" + e.key + "\t" + std::string(to_string(e.type)) + "\t" +
               (e.requires_action ? "1" : "0") + "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Assets

void validate_asset(const DataAsset& asset) {
    std::set<std::string> encrypted(asset.encrypted_columns.begin(), asset.encrypted_columns.end());
    for (const auto& col : asset.unencrypted_columns)
        if (encrypted.count(col))
            fail(ErrorCode::InvalidAsset, "column '" + col + "' is listed as both encrypted and unencrypted");

    std::optional<Timestamp> previous;
    for (const auto& date : {asset.created_date, asset.modified_date, asset.published_date}) {
        if (!date) continue;
        if (previous && *date < *previous)
            fail(ErrorCode::InvalidAsset, "created <= modified <= published date order violated");
        previous = date;
    }

    if (!asset.version.empty()) {
        bool ok = true;
        bool need_digit = true;
        for (char c : asset.version) {
            if (c >= '0' && c <= '9') {
                need_digit = false;
            } else if (c == '.' && !need_digit) {
                need_digit = true;
            } else {
                ok = false;
                break;
            }
        }
        if (!ok || need_digit) fail(ErrorCode::InvalidAsset, "version '" + asset.version + "' is not dotted numeric");
    }
}

// ---------------------------------------------------------------------------
// Consistency

std::size_t ConsistencyReport::count(ViolationKind k) const {
    return static_cast<std::size_t>(
        std::count_if(violations.begin(), violations.end(), [k](const Violation& v) { return v.kind == k; }));
}

namespace {

std::string term_label(const Term& t) {
    std::string s = std::string(to_string(t.category)) + "/" + t.key;
    if (t.action) s += "/" + std::string(to_string(*t.action));
    return s;
}

bool opposed(TermKind a, TermKind b) {
    return (a == TermKind::Permission && b == TermKind::Prohibition) ||
           (a == TermKind::Prohibition && b == TermKind::Permission);
}

}  // namespace

ConsistencyReport check_terms(const std::vector<Term>& terms, const Vocabulary& vocabulary) {
    ConsistencyReport report;
    auto add = [&report](ViolationKind kind, std::vector<std::size_t> idx, std::string detail) {
        report.violations.push_back({kind, std::move(idx), std::move(detail)});
    };

    for (std::size_t i = 0; i < terms.size(); ++i) {
        const Term& t = terms[i];
        const VocabularyEntry* entry = vocabulary.find(t.category, t.key);
        if (!entry) {
            add(ViolationKind::UnknownKey, {i}, "'" + t.key + "' is not in the " +
                                                    std::string(to_string(t.category)) + " vocabulary");
        } else {
            if (type_of(t.value) != entry->type)
                add(ViolationKind::ValueTypeMismatch, {i},
                    term_label(t) + " expects " + std::string(to_string(entry->type)) + ", got " +
                        std::string(to_string(type_of(t.value))));
            if (entry->requires_action && t.kind != TermKind::Obligation && !t.action)
                add(ViolationKind::MissingAction, {i}, term_label(t) + " requires an action tag");
        }
        if (t.action && t.category != PolicyCategory::RightsAndUsage)
            add(ViolationKind::UnexpectedAction, {i}, term_label(t) + " may not carry an action tag");
    }

    for (std::size_t i = 0; i < terms.size(); ++i) {
        for (std::size_t j = i + 1; j < terms.size(); ++j) {
            const Term& a = terms[i];
            const Term& b = terms[j];
            // An opposed pair is reported as the conflict it is, not also
            // as a duplicate of the same triple.
            if (a.key == b.key && a.action == b.action && opposed(a.kind, b.kind))
                add(ViolationKind::Conflict, {i, j}, term_label(a) + " is both permitted and prohibited");
            else if (a.identity() == b.identity())
                add(ViolationKind::Duplicate, {i, j}, term_label(a) + " appears more than once");
        }
    }
    return report;
}

ConsistencyReport check_policy_consistency(const Policy& policy, const Vocabulary& vocabulary) {
    ConsistencyReport report;
    if (policy.terms.empty()) report.violations.push_back({ViolationKind::EmptyTerms, {}, "policy has no terms"});

    auto term_report = check_terms(policy.terms, vocabulary);
    for (auto& v : term_report.violations) report.violations.push_back(std::move(v));

    if (policy.sensitivity_level < 0 || policy.sensitivity_level > 3)
        report.violations.push_back({ViolationKind::SensitivityOutOfRange, {},
                                     "sensitivity level " + std::to_string(policy.sensitivity_level) +
                                         " outside 0..3"});
    if (policy.sensitivity_level == 3 &&
        std::none_of(policy.terms.begin(), policy.terms.end(),
                     [](const Term& t) { return t.category == PolicyCategory::PrivacyAndProtection; }))
        report.violations.push_back({ViolationKind::MissingPrivacyTerm, {},
                                     "sensitivity level 3 requires a PrivacyAndProtection term"});
    if (policy.price_listing < 0)
        report.violations.push_back({ViolationKind::NegativePrice, {}, "price listing is negative"});
    for (const auto& rule : policy.visibility_rules) {
        if (std::find(std::begin(kVisibilityAttributes), std::end(kVisibilityAttributes), rule.attribute) ==
            std::end(kVisibilityAttributes))
            report.violations.push_back({ViolationKind::UnknownVisibilityAttribute, {},
                                         "unknown visibility attribute '" + rule.attribute + "'"});
    }
    return report;
}

void throw_on_violation(const ConsistencyReport& report) {
    // Precedence: vocabulary problems first, then pairwise, then policy-level.
    static constexpr std::pair<ViolationKind, ErrorCode> kOrder[] = {
        {ViolationKind::EmptyTerms, ErrorCode::VocabularyViolation},
        {ViolationKind::UnknownKey, ErrorCode::VocabularyViolation},
        {ViolationKind::ValueTypeMismatch, ErrorCode::VocabularyViolation},
        {ViolationKind::MissingAction, ErrorCode::VocabularyViolation},
        {ViolationKind::UnexpectedAction, ErrorCode::VocabularyViolation},
        {ViolationKind::Duplicate, ErrorCode::DuplicateTerm},
        {ViolationKind::Conflict, ErrorCode::ConflictingTerms},
        {ViolationKind::MissingPrivacyTerm, ErrorCode::MissingPrivacyTerm},
        {ViolationKind::SensitivityOutOfRange, ErrorCode::InvalidArgument},
        {ViolationKind::NegativePrice, ErrorCode::InvalidArgument},
        {ViolationKind::UnknownVisibilityAttribute, ErrorCode::InvalidArgument},
    };
    for (const auto& [kind, code] : kOrder)
        for (const auto& v : report.violations)
            if (v.kind == kind) fail(code, v.detail);
}

Policy define_policy(const DataAsset& asset, PolicySpec spec, PolicyId id, Timestamp attached_at,
                     const Vocabulary& vocabulary) {
    validate_asset(asset);
    Policy policy;
    policy.id = id;
    policy.asset_id = asset.id;
    policy.terms = std::move(spec.terms);
    policy.sensitivity_level = spec.sensitivity_level;
    policy.price_listing = spec.price_listing;
    policy.visibility_rules = std::move(spec.visibility_rules);
    policy.attached_at = attached_at;
    throw_on_violation(check_policy_consistency(policy, vocabulary));
    return policy;
}

// ---------------------------------------------------------------------------
// Visibility

bool evaluate_visibility(const Policy& policy, const Party& requester, std::string_view purpose) {
    for (const auto& rule : policy.visibility_rules) {
        std::string_view attribute_value;
        if (rule.attribute == "industry") attribute_value = requester.industry;
        else if (rule.attribute == "role") attribute_value = to_string(requester.role);
        else if (rule.attribute == "purpose") attribute_value = purpose;
        else return false;
        if (std::find(rule.allowed.begin(), rule.allowed.end(), attribute_value) == rule.allowed.end())
            return false;
    }
    for (const auto& term : policy.terms) {
        if (term.kind != TermKind::Prohibition || term.category != PolicyCategory::RightsAndUsage) continue;
        const auto* labels = std::get_if<LabelSet>(&term.value);
        if (!labels) continue;
        if (term.key == "target industry" && labels->contains(requester.industry)) return false;
        if (term.key == "target purpose" && labels->contains(purpose)) return false;
    }
    return true;
}

bool evaluate_visibility(const Policy& policy, const PartyRegistry& parties, PartyId requester,
                         std::string_view purpose) {
    return evaluate_visibility(policy, parties.get(requester), purpose);
}

// ---------------------------------------------------------------------------
// PartyRegistry

PartyRegistry::PartyRegistry(const PartyRegistry& other) {
    std::shared_lock lock(other.mutex_);
    parties_ = other.parties_;
    by_name_ = other.by_name_;
}

void PartyRegistry::add(Party party) {
    std::unique_lock lock(mutex_);
    if (party.display_name.empty()) fail(ErrorCode::InvalidArgument, "party display name is empty");
    if (parties_.count(party.id)) fail(ErrorCode::DuplicateParty, "party id " + party.id.hex() + " already registered");
    if (by_name_.count(party.display_name))
        fail(ErrorCode::DuplicateParty, "party name '" + party.display_name + "' already registered");
    by_name_.emplace(party.display_name, party.id);
    parties_.emplace(party.id, std::move(party));
}

std::optional<Party> PartyRegistry::find(PartyId id) const {
    std::shared_lock lock(mutex_);
    auto it = parties_.find(id);
    if (it == parties_.end()) return std::nullopt;
    return it->second;
}

std::optional<Party> PartyRegistry::find_by_name(std::string_view name) const {
    std::shared_lock lock(mutex_);
    auto it = by_name_.find(name);
    if (it == by_name_.end()) return std::nullopt;
    return parties_.at(it->second);
}

Party PartyRegistry::get(PartyId id) const {
    if (auto p = find(id)) return *p;
    fail(ErrorCode::UnknownParty, "party " + id.hex() + " is not registered");
}

std::vector<Party> PartyRegistry::all() const {
    std::shared_lock lock(mutex_);
    std::vector<Party> out;
    for (const auto& [id, p] : parties_) out.push_back(p);
    return out;
}

}  // namespace aerobroker::policy
