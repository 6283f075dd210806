#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "aerobroker/contract_types.hpp"
#include "aerobroker/policy.hpp"

namespace aerobroker::contract {

inline constexpr Timestamp kDefaultPaymentTimeout = 7 * 24 * 3600;

// Pure lifecycle transitions. Each returns the successor contract or throws
// the specified BrokerError, leaving its input untouched.
namespace rules {

Contract draft(const DraftRequest& request, const policy::DataAsset& asset, const policy::Policy& policy,
               const policy::Party& provider, const policy::Party& consumer, ContractId id, Salt salt,
               Timestamp now, const policy::Vocabulary& vocabulary);

Contract propose(const Contract& c, PartyId actor, const ProposalDiff& diff, const policy::Vocabulary& vocabulary);

Contract respond(const Contract& c, PartyId actor, Decision decision, Timestamp now);

Contract sign(const Contract& c, PartyId actor, const Signature& signature, const PublicKey& actor_key);

Contract activate(const Contract& c, PaymentState payment, Timestamp now);

Contract expire(const Contract& c, Timestamp now);

Contract terminate(const Contract& c, PartyId actor, std::string reason);

Contract cancel_unpaid(const Contract& c, PartyId actor, PaymentState payment, Timestamp now, Timestamp timeout);

/// Negotiable keys: price, validity windows, Rights-and-Usage terms.
bool is_negotiable(policy::PolicyCategory category);

}  // namespace rules

/// Stores contracts and their negotiation logs. Operations on one contract
/// are serialised by a per-contract lock; distinct contracts proceed in
/// parallel. Every returned Contract is an immutable snapshot.
class ContractEngine {
public:
    explicit ContractEngine(const policy::Vocabulary& vocabulary = policy::Vocabulary::standard(),
                            Timestamp payment_timeout = kDefaultPaymentTimeout);
    ContractEngine(const ContractEngine&) = delete;
    ContractEngine& operator=(const ContractEngine&) = delete;

    Contract draft_contract(const DraftRequest& request, const policy::DataAsset& asset, const policy::Policy& policy,
                            const policy::Party& provider, const policy::Party& consumer, ContractId id, Salt salt,
                            Timestamp now);

    Contract submit_proposal(ContractId id, PartyId actor, const ProposalDiff& diff, Timestamp now,
                             std::optional<std::uint64_t> expected_version = std::nullopt);

    Contract respond(ContractId id, PartyId actor, Decision decision, Timestamp now,
                     std::optional<std::uint64_t> expected_version = std::nullopt);

    Contract sign(ContractId id, PartyId actor, const Signature& signature, const PublicKey& actor_key, Timestamp now,
                  std::optional<std::uint64_t> expected_version = std::nullopt);

    Contract activate(ContractId id, PaymentState payment, Timestamp now,
                      std::optional<std::uint64_t> expected_version = std::nullopt);

    /// Expires one Active contract whose window ended before `now`.
    Contract expire(ContractId id, Timestamp now);

    /// Expires every Active contract with temporal_validity.end < now and
    /// returns the transitioned contracts ordered by id.
    std::vector<Contract> tick_expiry(Timestamp now);

    Contract terminate(ContractId id, PartyId actor, std::string reason, Timestamp now,
                       std::optional<std::uint64_t> expected_version = std::nullopt);

    Contract cancel_unpaid(ContractId id, PartyId actor, PaymentState payment, Timestamp now,
                           std::optional<std::uint64_t> expected_version = std::nullopt);

    std::optional<Contract> find(ContractId id) const;
    Contract get(ContractId id) const;  // UnknownContract
    std::vector<Contract> all() const;
    std::vector<NegotiationEvent> events(ContractId id) const;

    Timestamp payment_timeout() const { return payment_timeout_; }

    /// Rebuilds a contract from its negotiation log alone.
    static Contract replay(const std::vector<NegotiationEvent>& events,
                           const policy::Vocabulary& vocabulary = policy::Vocabulary::standard());

private:
    struct Slot {
        std::mutex mutex;
        Contract contract;
        std::vector<NegotiationEvent> log;
    };

    std::shared_ptr<Slot> slot(ContractId id) const;

    template <typename Fn>
    Contract mutate(ContractId id, std::optional<std::uint64_t> expected_version, Fn&& fn);

    const policy::Vocabulary& vocabulary_;
    Timestamp payment_timeout_;
    mutable std::shared_mutex map_mutex_;
    std::map<ContractId, std::shared_ptr<Slot>> slots_;
};

}  // namespace aerobroker::contract
