#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "aerobroker/canonical.hpp"
#include "aerobroker/contract_types.hpp"
#include "aerobroker/policy.hpp"

// Canonical documents for the domain types, the contract signing digest,
// and the selective-disclosure anchor payload.
namespace aerobroker::canonical_form {

using canon::CanonicalDocument;
using canon::Value;

// --- codecs ---------------------------------------------------------------
// Every *_from_value throws ParseError on malformed input.

Value to_value(const policy::Term& term);
Value terms_to_value(const std::vector<policy::Term>& terms);
std::vector<policy::Term> terms_from_value(const Value& v);
Value term_value_to_value(const policy::TermValue& v);
policy::TermValue term_value_from_value(policy::ValueType type, const Value& v);
policy::Term term_from_value(const Value& v);  // flat form, used on the wire
Value term_to_flat_value(const policy::Term& t);
Value term_key_to_value(const policy::TermKey& k);
policy::TermKey term_key_from_value(const Value& v);

Value to_value(const policy::Party& party);
policy::Party party_from_value(const Value& v);

Value to_value(const policy::DataAsset& asset);
policy::DataAsset asset_from_value(const Value& v);

Value to_value(const policy::Policy& p);
policy::Policy policy_from_value(const Value& v);
Value visibility_rules_to_value(const std::vector<policy::VisibilityRule>& rules);
std::vector<policy::VisibilityRule> visibility_rules_from_value(const Value& v);

Value to_value(const Period& p);
Period period_from_value(const Value& v);

/// Full contract document: everything except signatures and salt.
Value to_value(const contract::Contract& c);
contract::Contract contract_from_value(const Value& v);

/// The negotiated subset of the contract that both parties sign: parties,
/// asset, terms, price, validity, clauses and version. Excludes status,
/// turn and lifecycle timestamps.
Value agreement_value(const contract::Contract& c);

Value to_value(const contract::ProposalDiff& d);
contract::ProposalDiff diff_from_value(const Value& v);

Value signatures_to_value(const std::map<PartyId, Signature>& sigs);
std::map<PartyId, Signature> signatures_from_value(const Value& v);

// --- canonicalize ---------------------------------------------------------

CanonicalDocument canonicalize(const contract::Contract& c);
CanonicalDocument canonicalize(const policy::Policy& p);

/// Digest signed by both parties: sha256 of the canonical agreement view.
Digest signing_digest(const contract::Contract& c);

// --- selective disclosure ---------------------------------------------------

enum class Disclosure { Plain, Hashed };

std::string_view to_string(Disclosure d);
Disclosure parse_disclosure(std::string_view s);

struct AnchorEntry {
    std::string key;
    Disclosure disclosure = Disclosure::Plain;
    /// Plain: canonical rendering of the leaf. Hashed: lowercase hex of
    /// sha256(salt || canonical rendering).
    std::string value;

    bool operator==(const AnchorEntry&) const = default;
};

Value to_value(const AnchorEntry& e);
AnchorEntry anchor_entry_from_value(const Value& v);

/// Path-prefix disclosure table, matched on whole path segments with the
/// longest prefix winning. A matching Plain rule pins a field to Plain at
/// every sensitivity level; a matching Hashed rule always hashes it.
/// Unmatched fields are Plain below sensitivity 3 and Hashed at 3.
class DisclosureRules {
public:
    struct Rule {
        std::string prefix;
        Disclosure disclosure;
    };

    /// Rules shipped in data/disclosure_rules.tsv.
    static const DisclosureRules& standard();

    /// Line-oriented `path-prefix<TAB>Plain|Hashed`; '#' comments allowed.
    /// Throws ConfigInvalid.
    static DisclosureRules parse(std::string_view text);
    static DisclosureRules load_file(const std::string& path);

    std::optional<Disclosure> match(std::string_view path) const;
    Disclosure decide(std::string_view path, int sensitivity_level) const;
    const std::vector<Rule>& rules() const { return rules_; }

private:
    std::vector<Rule> rules_;
};

/// Canonical rendering of a single leaf: the bytes a verifier hashes.
std::string render_leaf(const Value& leaf);

/// One entry per leaf of the canonical contract document. Requires the
/// contract to be Accepted or later (WrongStatus otherwise).
std::vector<AnchorEntry> build_anchor_payload(const contract::Contract& c, int sensitivity_level,
                                              const DisclosureRules& rules = DisclosureRules::standard());

bool verify_anchor_entry(const AnchorEntry& entry, std::string_view claimed_plaintext, const Salt& salt);

}  // namespace aerobroker::canonical_form
