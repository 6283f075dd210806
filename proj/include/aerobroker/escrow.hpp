#pragma once

#include <array>
#include <map>
#include <mutex>
#include <optional>
#include <vector>

#include "aerobroker/contract_types.hpp"

namespace aerobroker::escrow {

inline constexpr Timestamp kDefaultBypassTimeout = 72 * 3600;

/// How far a payment proof's created_at may trail the service clock.
inline constexpr Timestamp kProofFreshness = 300;

enum class HoldState { Held, Released, Refunded, BypassGranted };

std::string_view to_string(HoldState s);
HoldState parse_hold_state(std::string_view s);

/// The payer's receipt: an Ed25519 signature over proof_message().
struct PaymentProof {
    HoldId hold_id;
    ContractId contract_id;
    Credits amount = 0;
    Timestamp created_at = 0;
    Signature signature;

    bool operator==(const PaymentProof&) const = default;
};

/// contract_id (16 bytes) || amount (u64 BE) || created_at (i64 BE).
std::array<std::uint8_t, 32> proof_message(ContractId contract_id, Credits amount, Timestamp created_at);

bool verify_proof(const PaymentProof& proof, const PublicKey& payer_key);

struct EscrowHold {
    HoldId hold_id;
    ContractId contract_id;
    PartyId payer;
    PartyId payee;
    PublicKey payer_key;
    Credits amount = 0;
    HoldState state = HoldState::Held;
    Timestamp created_at = 0;
    std::optional<Timestamp> resolved_at;
    PaymentProof proof;

    bool operator==(const EscrowHold&) const = default;
};

struct DisputeFlag {
    HoldId hold_id;
    ContractId contract_id;
    PartyId provider;
    PartyId consumer;
    Credits amount = 0;
    Timestamp flagged_at = 0;
    PaymentProof proof;

    bool operator==(const DisputeFlag&) const = default;
};

struct BypassResult {
    EscrowHold hold;
    DisputeFlag dispute;
};

struct Totals {
    Credits balances = 0;
    Credits held = 0;
    Credits deposited = 0;

    bool conserved() const { return balances + held == deposited; }
};

/// Simulated accounts and escrow holds. All mutations run under one lock so
/// conservation holds at every observable instant.
class Escrow {
public:
    explicit Escrow(Timestamp bypass_timeout = kDefaultBypassTimeout);
    Escrow(const Escrow&) = delete;
    Escrow& operator=(const Escrow&) = delete;

    /// Credits an account from outside the system. Returns the new balance.
    Credits deposit(PartyId party, Credits amount);
    Credits balance(PartyId party) const;

    /// Moves the contract price from the consumer into a hold. `signature`
    /// is the payer's signature over proof_message(contract, price,
    /// created_at), with created_at in [now - kProofFreshness, now].
    /// Errors: WrongStatus, NotTheConsumer, WrongState (hold already open or
    /// settled), InsufficientFunds, BadProof.
    EscrowHold place_hold(const contract::Contract& c, PartyId payer, const PublicKey& payer_key,
                          const Signature& signature, Timestamp created_at, HoldId hold_id, Timestamp now);

    /// Errors: UnknownHold, WrongParty, WrongState.
    EscrowHold provider_confirm(HoldId hold_id, PartyId provider, Timestamp now);

    /// Errors: UnknownHold, WrongState, WrongParty, BadProof, TooEarly.
    BypassResult claim_bypass(HoldId hold_id, PartyId consumer, const PaymentProof& proof, Timestamp now);

    /// Errors: UnknownHold, WrongState (hold not Held or contract not closed).
    EscrowHold refund(HoldId hold_id, const contract::Contract& c, Timestamp now);

    /// State of the contract's live or settled hold; a refunded hold or no
    /// hold reports Refunded/None.
    contract::PaymentState payment_state(ContractId contract_id) const;

    std::optional<EscrowHold> find(HoldId hold_id) const;
    EscrowHold get(HoldId hold_id) const;  // UnknownHold
    std::optional<EscrowHold> hold_for(ContractId contract_id) const;
    std::vector<EscrowHold> holds() const;
    std::map<PartyId, Credits> accounts() const;
    std::vector<DisputeFlag> disputes() const;
    Totals totals() const;
    Timestamp bypass_timeout() const { return bypass_timeout_; }

private:
    EscrowHold& hold_ref(HoldId hold_id);

    Timestamp bypass_timeout_;
    mutable std::mutex mutex_;
    std::map<PartyId, Credits> balances_;
    std::map<HoldId, EscrowHold> holds_;
    std::map<ContractId, HoldId> latest_;
    std::vector<DisputeFlag> disputes_;
    Credits deposited_ = 0;
};

}  // namespace aerobroker::escrow
