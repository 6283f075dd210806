#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "aerobroker/canonical_form.hpp"
#include "aerobroker/contract_types.hpp"

namespace aerobroker::ledger {

struct ContractRecord {
    ContractId contract_id;
    std::uint64_t contract_version = 0;
    contract::ContractStatus status_at_anchor = contract::ContractStatus::Accepted;
    Digest whole_document_digest;
    std::vector<canonical_form::AnchorEntry> entries;
    std::map<PartyId, Signature> signatures;
    Timestamp anchored_at = 0;

    bool operator==(const ContractRecord&) const = default;
};

/// Recorded when a consumer bypasses provider confirmation.
struct DisputeRecord {
    ContractId contract_id;
    HoldId hold_id;
    PartyId provider;
    PartyId consumer;
    Credits amount = 0;
    Timestamp proof_created_at = 0;
    Signature proof_signature;
    Timestamp flagged_at = 0;

    bool operator==(const DisputeRecord&) const = default;
};

using LedgerRecord = std::variant<ContractRecord, DisputeRecord>;

struct LedgerBlock {
    std::uint64_t height = 0;
    Digest prev_hash;
    Timestamp block_time = 0;
    std::vector<LedgerRecord> records;
    Digest block_hash;

    bool operator==(const LedgerBlock&) const = default;
};

canon::Value to_value(const ContractRecord& r);
canon::Value to_value(const DisputeRecord& r);
canon::Value to_value(const LedgerRecord& r);
canon::Value to_value(const LedgerBlock& b);
LedgerRecord record_from_value(const canon::Value& v);
LedgerBlock block_from_value(const canon::Value& v);

/// sha256(height_be64 || prev_hash || block_time_be64 || canonical(records)).
Digest compute_block_hash(std::uint64_t height, const Digest& prev_hash, Timestamp block_time,
                          const std::vector<LedgerRecord>& records);

/// One persisted frame: 4-byte big-endian length, then the canonical block.
std::string encode_frame(const LedgerBlock& block);

struct ChainReport {
    bool ok = true;
    std::uint64_t height = 0;  // number of intact blocks
    std::optional<std::uint64_t> first_corrupt_height;
    std::string detail;
};

/// Re-verifies a persisted block file: framing, canonical encoding, every
/// block hash, every link and contiguous heights.
ChainReport verify_block_file(std::string_view bytes);

/// Builds the record anchoring `c` at its current status.
ContractRecord make_contract_record(const contract::Contract& c, Timestamp anchored_at,
                                    const canonical_form::DisclosureRules& rules =
                                        canonical_form::DisclosureRules::standard());

/// Boundary for substituting an external-network anchoring backend.
class AnchorBackend {
public:
    virtual ~AnchorBackend() = default;
    virtual LedgerBlock append_record(const ContractRecord& record, const contract::Contract& current,
                                      Timestamp block_time) = 0;
    virtual LedgerBlock append_dispute(const DisputeRecord& record, Timestamp block_time) = 0;
    virtual ChainReport verify_chain() const = 0;
    virtual std::vector<ContractRecord> query_contract(ContractId id) const = 0;
    virtual std::vector<DisputeRecord> query_disputes(ContractId id) const = 0;
};

/// Embedded single-writer hash chain, one record per block. Appends are
/// in-memory; flush() mirrors new frames to an attached block file.
class Ledger final : public AnchorBackend {
public:
    Ledger() = default;
    Ledger(const Ledger&) = delete;
    Ledger& operator=(const Ledger&) = delete;

    /// Rebuilds from persisted bytes; throws ChainCorrupt when they do not
    /// verify.
    static std::unique_ptr<Ledger> from_bytes(std::string_view bytes);

    /// Binds a block file that currently holds the first `persisted_bytes`
    /// of bytes().
    void attach_file(const std::filesystem::path& path, std::size_t persisted_bytes);

    /// Durably appends every frame not yet in the attached file.
    void flush();

    LedgerBlock append_record(const ContractRecord& record, const contract::Contract& current,
                              Timestamp block_time) override;
    LedgerBlock append_dispute(const DisputeRecord& record, Timestamp block_time) override;
    ChainReport verify_chain() const override;
    std::vector<ContractRecord> query_contract(ContractId id) const override;
    std::vector<DisputeRecord> query_disputes(ContractId id) const override;

    std::uint64_t height() const;
    std::vector<LedgerBlock> blocks() const;
    /// The exact persisted byte image of the chain.
    std::string bytes() const;

private:
    LedgerBlock append(LedgerRecord record, Timestamp block_time);

    mutable std::shared_mutex mutex_;
    std::vector<LedgerBlock> blocks_;
    std::string bytes_;
    std::optional<std::filesystem::path> file_;
    std::size_t persisted_ = 0;
};

}  // namespace aerobroker::ledger
