#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "aerobroker/canonical.hpp"
#include "aerobroker/policy.hpp"
#include "aerobroker/types.hpp"

namespace aerobroker::contract {

enum class ContractStatus { Draft, Negotiating, Accepted, Rejected, Active, Expired, Terminated };

inline constexpr ContractStatus kAllStatuses[] = {
    ContractStatus::Draft,    ContractStatus::Negotiating, ContractStatus::Accepted,  ContractStatus::Rejected,
    ContractStatus::Active,   ContractStatus::Expired,     ContractStatus::Terminated,
};

inline bool is_terminal(ContractStatus s) {
    return s == ContractStatus::Rejected || s == ContractStatus::Expired || s == ContractStatus::Terminated;
}

std::string_view to_string(ContractStatus s);
ContractStatus parse_status(std::string_view s);

enum class NegotiationAction {
    CreateDraft,
    Propose,
    CounterOffer,
    Accept,
    Reject,
    Sign,
    Activate,
    Terminate,
    Expire,
    // Post-Accepted cancellation when payment never completed.
    Cancel,
};

std::string_view to_string(NegotiationAction a);
NegotiationAction parse_action(std::string_view s);

enum class Decision { Accept, Reject };

/// Payment state of a contract as reported by escrow.
enum class PaymentState { None, Held, Released, Refunded, BypassGranted };

std::string_view to_string(PaymentState s);
PaymentState parse_payment_state(std::string_view s);

inline bool payment_complete(PaymentState s) {
    return s == PaymentState::Released || s == PaymentState::BypassGranted;
}

struct Contract {
    ContractId id;
    AssetId asset_id;
    PartyId provider;
    PartyId consumer;
    /// Negotiated copy of the policy terms, excluding Contract-category
    /// terms (those seed the dedicated fields below). Sorted by identity.
    std::vector<policy::Term> terms;
    Credits price = 0;
    Period temporal_validity;
    std::vector<std::string> spatial_validity;
    std::optional<Timestamp> validation_date;
    std::string liability_text;
    std::string termination_clause;
    ContractStatus status = ContractStatus::Draft;
    std::uint64_t version = 1;
    PartyId turn;
    std::map<PartyId, Signature> signatures;
    int sensitivity_level = 0;
    Timestamp created_at = 0;
    std::optional<Timestamp> accepted_at;
    std::optional<std::string> termination_reason;

    /// Off-ledger per-contract salt for hashed anchor entries. Not part of
    /// the canonical document.
    Salt salt;

    bool is_party(PartyId p) const { return p == provider || p == consumer; }
    PartyId counterparty(PartyId p) const { return p == provider ? consumer : provider; }
    bool operator==(const Contract&) const = default;
};

/// A counter-offer. Only negotiable fields can be expressed: price,
/// validity windows and Rights-and-Usage terms (checked on submit).
struct ProposalDiff {
    std::optional<Credits> price;
    std::optional<Period> temporal_validity;
    std::optional<std::vector<std::string>> spatial_validity;
    std::vector<policy::Term> upsert_terms;
    std::vector<policy::TermKey> remove_terms;

    bool empty() const {
        return !price && !temporal_validity && !spatial_validity && upsert_terms.empty() && remove_terms.empty();
    }
    bool operator==(const ProposalDiff&) const = default;
};

struct DraftRequest {
    AssetId asset_id;
    PartyId provider;
    PartyId consumer;
    std::string purpose;
    std::vector<policy::Term> initial_terms;
    std::optional<Credits> price;
    std::optional<Period> temporal_validity;
    std::optional<std::vector<std::string>> spatial_validity;
    std::optional<std::string> liability_text;
    std::optional<std::string> termination_clause;
};

struct NegotiationEvent {
    std::uint64_t event_id = 0;  // per-contract position, from 0
    ContractId contract_id;
    PartyId actor;  // all-zero for system actions (expiry)
    NegotiationAction action = NegotiationAction::CreateDraft;
    canon::Value payload;
    Timestamp at = 0;
    std::uint64_t resulting_version = 0;

    bool operator==(const NegotiationEvent&) const = default;
};

}  // namespace aerobroker::contract
