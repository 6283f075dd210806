#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "aerobroker/types.hpp"

namespace aerobroker::policy {

enum class TermKind { Permission, Prohibition, Obligation };

enum class PolicyCategory { DataAsset, Contract, Responsibility, RightsAndUsage, Quality, PrivacyAndProtection };

enum class Action { Derivation, Attribution, Reproduction, Distribution, ReContext };

enum class ValueType { Boolean, Integer, Decimal, Text, Timestamp, Period, Label, LabelSet };

enum class PartyRole { Provider, Consumer, Both };

std::string_view to_string(TermKind k);
std::string_view to_string(PolicyCategory c);
std::string_view to_string(Action a);
std::string_view to_string(ValueType t);
std::string_view to_string(PartyRole r);

// Parsers throw ParseError on anything outside the closed enumeration.
TermKind parse_term_kind(std::string_view s);
PolicyCategory parse_category(std::string_view s);
Action parse_action(std::string_view s);
ValueType parse_value_type(std::string_view s);
PartyRole parse_role(std::string_view s);

inline constexpr PolicyCategory kAllCategories[] = {
    PolicyCategory::DataAsset,      PolicyCategory::Contract, PolicyCategory::Responsibility,
    PolicyCategory::RightsAndUsage, PolicyCategory::Quality,  PolicyCategory::PrivacyAndProtection,
};
inline constexpr Action kAllActions[] = {Action::Derivation, Action::Attribution, Action::Reproduction,
                                         Action::Distribution, Action::ReContext};

// ---------------------------------------------------------------------------
// Term values

/// Fixed-point decimal kept in normalised text form: optional '-', no
/// superfluous leading zeros, no trailing fractional zeros, never "-0".
class Decimal {
public:
    static Decimal parse(std::string_view text);
    const std::string& str() const { return text_; }
    auto operator<=>(const Decimal&) const = default;

private:
    std::string text_ = "0";
};

struct Text {
    std::string value;
    auto operator<=>(const Text&) const = default;
};

struct Label {
    std::string value;
    auto operator<=>(const Label&) const = default;
};

struct Instant {
    Timestamp value = 0;
    auto operator<=>(const Instant&) const = default;
};

/// Sorted, duplicate-free set of enumeration labels.
class LabelSet {
public:
    LabelSet() = default;
    LabelSet(std::vector<std::string> labels);
    LabelSet(std::initializer_list<std::string> labels) : LabelSet(std::vector<std::string>(labels)) {}

    const std::vector<std::string>& values() const { return values_; }
    bool contains(std::string_view label) const;
    auto operator<=>(const LabelSet&) const = default;

private:
    std::vector<std::string> values_;
};

using TermValue = std::variant<bool, std::int64_t, Decimal, Text, Instant, Period, Label, LabelSet>;

ValueType type_of(const TermValue& v);

/// Human-readable rendering for transcripts and error messages.
std::string describe(const TermValue& v);

struct TermKey {
    PolicyCategory category;
    std::string key;
    std::optional<Action> action;

    auto operator<=>(const TermKey&) const = default;
};

struct Term {
    PolicyCategory category = PolicyCategory::DataAsset;
    TermKind kind = TermKind::Obligation;
    std::string key;
    TermValue value;
    std::optional<Action> action;

    TermKey identity() const { return {category, key, action}; }
    bool operator==(const Term&) const = default;
};

// ---------------------------------------------------------------------------
// Vocabulary registry

struct VocabularyEntry {
    PolicyCategory category;
    std::string key;
    ValueType type;
    bool requires_action = false;

    bool operator==(const VocabularyEntry&) const = default;
};

/// Closed per-category vocabulary of term keys with their value types.
/// The built-in set mirrors the shipped data/vocabulary.tsv file.
class Vocabulary {
public:
    static const Vocabulary& standard();

    /// Parses the line-oriented registry format:
    ///   category<TAB>key<TAB>value-type<TAB>requires-action(0|1)
    /// Blank lines and lines starting with '#' are ignored.
    static Vocabulary parse(std::string_view text);
    static Vocabulary load_file(const std::string& path);

    /// Adds every entry of `extension`; redefining an existing key with a
    /// different type or action requirement throws ConfigInvalid.
    void merge(const Vocabulary& extension);
    void add(VocabularyEntry entry);

    const VocabularyEntry* find(PolicyCategory category, std::string_view key) const;
    const std::vector<VocabularyEntry>& entries() const { return entries_; }
    std::string serialize() const;

private:
    std::vector<VocabularyEntry> entries_;
};

// ---------------------------------------------------------------------------
// Parties, assets, policies

struct Party {
    PartyId id;
    std::string display_name;
    PartyRole role = PartyRole::Consumer;
    std::string industry;
    PublicKey public_key;

    bool can_provide() const { return role != PartyRole::Consumer; }
    bool can_consume() const { return role != PartyRole::Provider; }
    bool operator==(const Party&) const = default;
};

struct DataAsset {
    AssetId id;
    std::string description;
    std::vector<std::string> encrypted_columns;
    std::vector<std::string> unencrypted_columns;
    std::vector<std::string> data_model_entities;
    PartyId provider;
    std::string creator;
    std::string contributor;
    std::string version;
    std::optional<Timestamp> created_date;
    std::optional<Timestamp> modified_date;
    std::optional<Timestamp> published_date;

    bool operator==(const DataAsset&) const = default;
};

/// Throws InvalidAsset when column lists overlap, dates are out of order
/// or the version is not a dotted numeric string.
void validate_asset(const DataAsset& asset);

/// Restricts which requesters may see an asset. `attribute` is one of
/// "industry", "role" or "purpose".
struct VisibilityRule {
    std::string attribute;
    std::vector<std::string> allowed;

    bool operator==(const VisibilityRule&) const = default;
};

inline constexpr std::string_view kVisibilityAttributes[] = {"industry", "role", "purpose"};

struct Policy {
    PolicyId id;
    AssetId asset_id;
    std::vector<Term> terms;
    int sensitivity_level = 0;
    Credits price_listing = 0;
    std::vector<VisibilityRule> visibility_rules;
    Timestamp attached_at = 0;

    bool operator==(const Policy&) const = default;
};

enum class ViolationKind {
    EmptyTerms,
    UnknownKey,
    ValueTypeMismatch,
    MissingAction,
    UnexpectedAction,
    Duplicate,
    Conflict,
    MissingPrivacyTerm,
    SensitivityOutOfRange,
    NegativePrice,
    UnknownVisibilityAttribute,
};

std::string_view to_string(ViolationKind k);

struct Violation {
    ViolationKind kind;
    /// Offending term indices; pair violations name both, policy-level
    /// violations name none.
    std::vector<std::size_t> terms;
    std::string detail;
};

struct ConsistencyReport {
    std::vector<Violation> violations;

    bool ok() const { return violations.empty(); }
    std::size_t count(ViolationKind k) const;
};

ConsistencyReport check_policy_consistency(const Policy& policy,
                                           const Vocabulary& vocabulary = Vocabulary::standard());

/// Checks every term of `terms` against the vocabulary and pairwise
/// duplicate/conflict rules. Shared by policy and contract validation.
ConsistencyReport check_terms(const std::vector<Term>& terms, const Vocabulary& vocabulary);

/// Throws the error class matching the first violation found:
/// VocabularyViolation, DuplicateTerm, ConflictingTerms,
/// MissingPrivacyTerm or InvalidArgument.
void throw_on_violation(const ConsistencyReport& report);

struct PolicySpec {
    std::vector<Term> terms;
    int sensitivity_level = 0;
    Credits price_listing = 0;
    std::vector<VisibilityRule> visibility_rules;
};

Policy define_policy(const DataAsset& asset, PolicySpec spec, PolicyId id, Timestamp attached_at,
                     const Vocabulary& vocabulary = Vocabulary::standard());

/// Pure: true iff every visibility rule admits the requester and no
/// "target industry"/"target purpose" prohibition excludes it.
bool evaluate_visibility(const Policy& policy, const Party& requester, std::string_view purpose);

// ---------------------------------------------------------------------------

/// Thread-safe party directory keyed by id and by unique display name.
class PartyRegistry {
public:
    PartyRegistry() = default;
    PartyRegistry(const PartyRegistry& other);
    PartyRegistry& operator=(const PartyRegistry&) = delete;

    void add(Party party);  // DuplicateParty on id or name reuse
    std::optional<Party> find(PartyId id) const;
    std::optional<Party> find_by_name(std::string_view name) const;
    Party get(PartyId id) const;  // UnknownParty
    std::vector<Party> all() const;

private:
    mutable std::shared_mutex mutex_;
    std::map<PartyId, Party> parties_;
    std::map<std::string, PartyId, std::less<>> by_name_;
};

bool evaluate_visibility(const Policy& policy, const PartyRegistry& parties, PartyId requester,
                         std::string_view purpose);

}  // namespace aerobroker::policy
