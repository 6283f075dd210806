#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "aerobroker/canonical_form.hpp"
#include "aerobroker/catalog.hpp"
#include "aerobroker/contract_engine.hpp"
#include "aerobroker/escrow.hpp"
#include "aerobroker/event_store.hpp"
#include "aerobroker/ledger.hpp"
#include "aerobroker/policy.hpp"

namespace aerobroker::broker {

using canon::Value;

struct AccessToken {
    TokenId token_id;
    ContractId contract_id;
    PartyId consumer;
    AssetId asset_id;
    Timestamp expires_at = 0;  // contract temporal_validity.end
    bool revoked = false;

    bool operator==(const AccessToken&) const = default;
};

/// Valid iff the contract is Active, now < expires_at and not revoked.
bool token_valid(const AccessToken& token, const contract::Contract& c, Timestamp now);

enum class LedgerVerdict { Match, Mismatch, NotAnchored };
std::string_view to_string(LedgerVerdict v);

struct SignatureCheck {
    PartyId party;
    bool present = false;
    bool valid = false;
};

struct ValidityReport {
    ContractId contract_id;
    contract::ContractStatus status = contract::ContractStatus::Draft;
    Timestamp checked_at = 0;
    bool status_valid = false;  // Active
    bool window_valid = false;  // checked_at within temporal_validity
    std::vector<SignatureCheck> signatures;  // provider, then consumer
    LedgerVerdict ledger = LedgerVerdict::NotAnchored;
    std::optional<Digest> anchored_digest;
    Digest recomputed_digest;
    std::uint64_t anchored_records = 0;
    bool chain_ok = true;

    bool all_green() const;
};

Value to_value(const ValidityReport& r);

/// Compares `c` against the latest record anchored for it.
ValidityReport validity_report(const contract::Contract& c, const std::vector<ledger::ContractRecord>& records,
                               const policy::PartyRegistry& parties, bool chain_ok, Timestamp now);

// Response views shared by the API, the CLI and canonical_state().
Value event_to_value(const contract::NegotiationEvent& e);
Value contract_view(const contract::Contract& c, contract::PaymentState payment, bool include_salt);
Value entry_view(const catalog::CatalogEntry& e);
Value hold_view(const escrow::EscrowHold& h);
Value dispute_view(const escrow::DisputeFlag& d);
Value token_view(const AccessToken& t);
Value proof_to_value(const escrow::PaymentProof& p);
escrow::PaymentProof proof_from_value(const Value& v);

struct Settings {
    Timestamp bypass_timeout = escrow::kDefaultBypassTimeout;
    Timestamp payment_timeout = contract::kDefaultPaymentTimeout;
    policy::Vocabulary vocabulary = policy::Vocabulary::standard();
    canonical_form::DisclosureRules disclosure = canonical_form::DisclosureRules::standard();
};

/// Acting identity of a command: the operator (admin) or a registered party.
struct Principal {
    bool admin = false;
    PartyId party;

    static Principal root() { return {true, {}}; }
    static Principal of(PartyId p) { return {false, p}; }
};

using RandomFill = std::function<void(std::span<std::uint8_t>)>;

/// Deterministic id source for tests and scenario transcripts.
RandomFill seeded_random(std::uint64_t seed);

/// The broker: every module behind one command interface. A command is
/// resolved (ids, salts), applied to in-memory state, appended to the event
/// store, and only then acknowledged. State is a pure function of the
/// event log: opening a broker replays it.
class Broker {
public:
    /// In-memory broker without persistence.
    explicit Broker(Settings settings = {}, RandomFill random = {});

    /// Replays `store`; reconciles `ledger_file` with the replayed chain
    /// (ChainCorrupt when it fails verification or diverges).
    static std::unique_ptr<Broker> open(Settings settings, std::unique_ptr<events::EventStore> store,
                                        std::optional<std::filesystem::path> ledger_file, RandomFill random = {});

    /// Opens over a data directory holding events.log and ledger.blk.
    static std::unique_ptr<Broker> open_dir(Settings settings, const std::filesystem::path& data_dir,
                                            RandomFill random = {});

    Broker(const Broker&) = delete;
    Broker& operator=(const Broker&) = delete;

    /// Runs one mutating command. A repeated idempotency key from the same
    /// principal returns the first result without a new event.
    Value submit(const Principal& who, std::string_view type, Value args, Timestamp now,
                 std::optional<std::string> idempotency_key = std::nullopt);

    const policy::PartyRegistry& parties() const { return parties_; }
    const catalog::Catalog& catalog() const { return catalog_; }
    const contract::ContractEngine& contracts() const { return engine_; }
    const escrow::Escrow& escrow() const { return escrow_; }
    const ledger::Ledger& ledger() const { return *ledger_; }
    const Settings& settings() const { return settings_; }

    std::optional<AccessToken> token(TokenId id) const;
    std::optional<AccessToken> token_for(ContractId id) const;

    ValidityReport validity(ContractId id, Timestamp now) const;
    /// Validity of a caller-held copy of the contract document.
    ValidityReport validity_of_copy(const contract::Contract& copy, Timestamp now) const;

    /// Everything replay must reproduce, as one canonical document.
    Value canonical_state() const;

    std::uint64_t event_count() const;
    events::EventStore* store() const { return store_.get(); }

    static const std::vector<std::string>& command_types();

private:
    struct Cached {
        std::string type;
        Value result;
    };

    Value resolve(std::string_view type, Value args) const;
    Value apply(const Value& event);
    void anchor(const contract::Contract& c, Timestamp now);

    template <typename T>
    T fresh() const;

    Settings settings_;
    RandomFill random_;
    policy::PartyRegistry parties_;
    catalog::Catalog catalog_;
    contract::ContractEngine engine_;
    escrow::Escrow escrow_;
    std::unique_ptr<ledger::Ledger> ledger_;
    std::unique_ptr<events::EventStore> store_;

    mutable std::shared_mutex aux_mutex_;
    std::map<TokenId, AccessToken> tokens_;
    std::map<ContractId, TokenId> token_by_contract_;
    std::map<std::string, Cached> idempotency_;

    std::mutex write_mutex_;
    std::uint64_t sequence_ = 0;
    bool poisoned_ = false;
};

}  // namespace aerobroker::broker
