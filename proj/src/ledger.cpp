#include "aerobroker/ledger.hpp"

#include <mutex>

#include "aerobroker/crypto.hpp"
#include "aerobroker/file_io.hpp"

namespace aerobroker::ledger {

namespace cf = canonical_form;
using canon::Value;

namespace {

std::int64_t as_i64(std::uint64_t v) { return static_cast<std::int64_t>(v); }

std::uint64_t non_negative(const Value& v) {
    auto i = v.as_int();
    if (i < 0) fail(ErrorCode::ParseError, "negative value where a count is expected");
    return static_cast<std::uint64_t>(i);
}

Value records_value(const std::vector<LedgerRecord>& records) {
    canon::Array arr;
    arr.reserve(records.size());
    for (const auto& r : records) arr.push_back(to_value(r));
    return Value(std::move(arr));
}

}  // namespace

Value to_value(const ContractRecord& r) {
    Value v;
    v.set("anchored_at", Value(r.anchored_at));
    v.set("contract_id", canon::hex_value(r.contract_id));
    v.set("contract_version", Value(as_i64(r.contract_version)));
    canon::Array entries;
    for (const auto& e : r.entries) entries.push_back(cf::to_value(e));
    v.set("entries", Value(std::move(entries)));
    v.set("kind", Value("contract"));
    v.set("signatures", cf::signatures_to_value(r.signatures));
    v.set("status_at_anchor", Value(contract::to_string(r.status_at_anchor)));
    v.set("whole_document_digest", canon::hex_value(r.whole_document_digest));
    return v;
}

Value to_value(const DisputeRecord& r) {
    Value v;
    v.set("amount", Value(r.amount));
    v.set("consumer", canon::hex_value(r.consumer));
    v.set("contract_id", canon::hex_value(r.contract_id));
    v.set("flagged_at", Value(r.flagged_at));
    v.set("hold_id", canon::hex_value(r.hold_id));
    v.set("kind", Value("dispute"));
    v.set("proof_created_at", Value(r.proof_created_at));
    v.set("proof_signature", canon::hex_value(r.proof_signature));
    v.set("provider", canon::hex_value(r.provider));
    return v;
}

Value to_value(const LedgerRecord& r) {
    return std::visit([](const auto& x) { return to_value(x); }, r);
}

Value to_value(const LedgerBlock& b) {
    Value v;
    v.set("block_hash", canon::hex_value(b.block_hash));
    v.set("block_time", Value(b.block_time));
    v.set("height", Value(as_i64(b.height)));
    v.set("prev_hash", canon::hex_value(b.prev_hash));
    v.set("records", records_value(b.records));
    return v;
}

LedgerRecord record_from_value(const Value& v) {
    const auto& kind = v.at("kind").as_string();
    if (kind == "contract") {
        ContractRecord r;
        r.anchored_at = v.at("anchored_at").as_int();
        r.contract_id = parse_hex<ContractId>(v.at("contract_id").as_string());
        r.contract_version = non_negative(v.at("contract_version"));
        for (const auto& e : v.at("entries").as_array()) r.entries.push_back(cf::anchor_entry_from_value(e));
        r.signatures = cf::signatures_from_value(v.at("signatures"));
        try {
            r.status_at_anchor = contract::parse_status(v.at("status_at_anchor").as_string());
        } catch (const BrokerError& e) {
            fail(ErrorCode::ParseError, e.detail());
        }
        r.whole_document_digest = parse_hex<Digest>(v.at("whole_document_digest").as_string());
        return r;
    }
    if (kind == "dispute") {
        DisputeRecord r;
        r.amount = v.at("amount").as_int();
        r.consumer = parse_hex<PartyId>(v.at("consumer").as_string());
        r.contract_id = parse_hex<ContractId>(v.at("contract_id").as_string());
        r.flagged_at = v.at("flagged_at").as_int();
        r.hold_id = parse_hex<HoldId>(v.at("hold_id").as_string());
        r.proof_created_at = v.at("proof_created_at").as_int();
        r.proof_signature = parse_hex<Signature>(v.at("proof_signature").as_string());
        r.provider = parse_hex<PartyId>(v.at("provider").as_string());
        return r;
    }
    fail(ErrorCode::ParseError, "unknown record kind '" + kind + "'");
}

LedgerBlock block_from_value(const Value& v) {
    LedgerBlock b;
    b.block_hash = parse_hex<Digest>(v.at("block_hash").as_string());
    b.block_time = v.at("block_time").as_int();
    b.height = non_negative(v.at("height"));
    b.prev_hash = parse_hex<Digest>(v.at("prev_hash").as_string());
    for (const auto& r : v.at("records").as_array()) b.records.push_back(record_from_value(r));
    return b;
}

Digest compute_block_hash(std::uint64_t height, const Digest& prev_hash, Timestamp block_time,
                          const std::vector<LedgerRecord>& records) {
    return crypto::Hasher()
        .update_u64(height)
        .update(prev_hash.data)
        .update_i64(block_time)
        .update(canon::write(records_value(records)))
        .finish();
}

std::string encode_frame(const LedgerBlock& block) {
    std::string body = canon::write(to_value(block));
    std::string out;
    out.reserve(body.size() + 4);
    io::put_u32_be(out, static_cast<std::uint32_t>(body.size()));
    out += body;
    return out;
}

namespace {

struct Walk {
    ChainReport report;
    std::vector<LedgerBlock> blocks;
};

Walk walk(std::string_view bytes, bool keep_blocks) {
    Walk w;
    auto corrupt = [&](std::string detail) {
        w.report.ok = false;
        w.report.first_corrupt_height = w.report.height;
        w.report.detail = std::move(detail);
        return w;
    };
    Digest prev{};
    std::size_t pos = 0;
    while (pos < bytes.size()) {
        if (bytes.size() - pos < 4) return corrupt("truncated frame header");
        std::uint32_t len = io::get_u32_be(bytes.substr(pos, 4));
        if (len > bytes.size() - pos - 4) return corrupt("frame length exceeds file");
        std::string_view body = bytes.substr(pos + 4, len);
        LedgerBlock block;
        try {
            block = block_from_value(canon::parse_canonical(body));
        } catch (const BrokerError& e) {
            return corrupt(std::string("undecodable block: ") + e.what());
        }
        if (block.height != w.report.height) return corrupt("height out of sequence");
        if (block.prev_hash != prev) return corrupt("prev_hash does not link to parent");
        if (block.records.empty()) return corrupt("block without records");
        if (compute_block_hash(block.height, block.prev_hash, block.block_time, block.records) != block.block_hash)
            return corrupt("block_hash does not recompute");
        // The decoded block must re-encode to the stored bytes exactly.
        if (canon::write(to_value(block)) != body) return corrupt("non-canonical block encoding");
        prev = block.block_hash;
        if (keep_blocks) w.blocks.push_back(std::move(block));
        ++w.report.height;
        pos += 4 + len;
    }
    return w;
}

}  // namespace

ChainReport verify_block_file(std::string_view bytes) { return walk(bytes, false).report; }

ContractRecord make_contract_record(const contract::Contract& c, Timestamp anchored_at,
                                    const cf::DisclosureRules& rules) {
    ContractRecord r;
    r.contract_id = c.id;
    r.contract_version = c.version;
    r.status_at_anchor = c.status;
    r.whole_document_digest = cf::canonicalize(c).digest;
    r.entries = cf::build_anchor_payload(c, c.sensitivity_level, rules);
    r.signatures = c.signatures;
    r.anchored_at = anchored_at;
    return r;
}

std::unique_ptr<Ledger> Ledger::from_bytes(std::string_view bytes) {
    auto w = walk(bytes, true);
    if (!w.report.ok)
        fail(ErrorCode::ChainCorrupt, "block file corrupt at height " + std::to_string(*w.report.first_corrupt_height) +
                                          ": " + w.report.detail);
    auto ledger = std::make_unique<Ledger>();
    ledger->blocks_ = std::move(w.blocks);
    ledger->bytes_ = std::string(bytes);
    return ledger;
}

void Ledger::attach_file(const std::filesystem::path& path, std::size_t persisted_bytes) {
    std::unique_lock lock(mutex_);
    if (persisted_bytes > bytes_.size()) fail(ErrorCode::InvalidArgument, "block file is longer than the chain");
    file_ = path;
    persisted_ = persisted_bytes;
}

void Ledger::flush() {
    std::unique_lock lock(mutex_);
    if (!file_ || persisted_ == bytes_.size()) return;
    io::append_durable(*file_, std::string_view(bytes_).substr(persisted_));
    persisted_ = bytes_.size();
}

LedgerBlock Ledger::append_record(const ContractRecord& record, const contract::Contract& current,
                                  Timestamp block_time) {
    if (record.contract_id != current.id) fail(ErrorCode::DigestMismatch, "record names a different contract");
    if (record.whole_document_digest != cf::canonicalize(current).digest)
        fail(ErrorCode::DigestMismatch, "record digest differs from the recomputed contract digest");
    if (record.contract_version != current.version || record.status_at_anchor != current.status)
        fail(ErrorCode::DigestMismatch, "record version or status is stale");
    return append(record, block_time);
}

LedgerBlock Ledger::append_dispute(const DisputeRecord& record, Timestamp block_time) {
    return append(record, block_time);
}

LedgerBlock Ledger::append(LedgerRecord record, Timestamp block_time) {
    std::unique_lock lock(mutex_);
    // Pre-append check of the tip: its stored frame must still decode to a
    // block whose hash recomputes.
    Digest prev{};
    if (!blocks_.empty()) {
        const auto& tip = blocks_.back();
        std::string frame = encode_frame(tip);
        if (bytes_.size() < frame.size() || bytes_.compare(bytes_.size() - frame.size(), frame.size(), frame) != 0 ||
            compute_block_hash(tip.height, tip.prev_hash, tip.block_time, tip.records) != tip.block_hash)
            fail(ErrorCode::ChainCorrupt, "tip block failed verification");
        prev = tip.block_hash;
    }
    LedgerBlock block;
    block.height = blocks_.size();
    block.prev_hash = prev;
    block.block_time = block_time;
    block.records.push_back(std::move(record));
    block.block_hash = compute_block_hash(block.height, block.prev_hash, block.block_time, block.records);
    bytes_ += encode_frame(block);
    blocks_.push_back(block);
    return block;
}

ChainReport Ledger::verify_chain() const {
    std::shared_lock lock(mutex_);
    return verify_block_file(bytes_);
}

std::vector<ContractRecord> Ledger::query_contract(ContractId id) const {
    std::shared_lock lock(mutex_);
    std::vector<ContractRecord> out;
    for (const auto& b : blocks_)
        for (const auto& r : b.records)
            if (const auto* cr = std::get_if<ContractRecord>(&r); cr && cr->contract_id == id) out.push_back(*cr);
    return out;
}

std::vector<DisputeRecord> Ledger::query_disputes(ContractId id) const {
    std::shared_lock lock(mutex_);
    std::vector<DisputeRecord> out;
    for (const auto& b : blocks_)
        for (const auto& r : b.records)
            if (const auto* dr = std::get_if<DisputeRecord>(&r); dr && dr->contract_id == id) out.push_back(*dr);
    return out;
}

std::uint64_t Ledger::height() const {
    std::shared_lock lock(mutex_);
    return blocks_.size();
}

std::vector<LedgerBlock> Ledger::blocks() const {
    std::shared_lock lock(mutex_);
    return blocks_;
}

std::string Ledger::bytes() const {
    std::shared_lock lock(mutex_);
    return bytes_;
}

}  // namespace aerobroker::ledger
