#include "aerobroker/event_store.hpp"

#include "aerobroker/error.hpp"
#include "aerobroker/file_io.hpp"

namespace aerobroker::events {

using canon::Value;

std::string_view to_string(Stream s) {
    switch (s) {
        case Stream::Party: return "party";
        case Stream::Asset: return "asset";
        case Stream::Policy: return "policy";
        case Stream::Contract: return "contract";
        case Stream::Escrow: return "escrow";
        case Stream::Ledger: return "ledger";
    }
    return "?";
}

Stream parse_stream(std::string_view s) {
    for (auto st : {Stream::Party, Stream::Asset, Stream::Policy, Stream::Contract, Stream::Escrow, Stream::Ledger})
        if (to_string(st) == s) return st;
    fail(ErrorCode::ParseError, "unknown stream '" + std::string(s) + "'");
}

Value to_value(const EventEnvelope& e) {
    Value v;
    v.set("payload", e.payload);
    v.set("recorded_at", Value(e.recorded_at));
    v.set("sequence", Value(static_cast<std::int64_t>(e.sequence)));
    v.set("stream", Value(to_string(e.stream)));
    return v;
}

EventEnvelope envelope_from_value(const Value& v) {
    EventEnvelope e;
    e.payload = v.at("payload");
    if (!e.payload.is_object()) fail(ErrorCode::ParseError, "event payload must be an object");
    e.recorded_at = v.at("recorded_at").as_int();
    auto seq = v.at("sequence").as_int();
    if (seq < 0) fail(ErrorCode::ParseError, "negative sequence");
    e.sequence = static_cast<std::uint64_t>(seq);
    e.stream = parse_stream(v.at("stream").as_string());
    if (v.as_object().size() != 4) fail(ErrorCode::ParseError, "unexpected envelope fields");
    return e;
}

std::string encode_frame(const EventEnvelope& e) {
    std::string body = canon::write(to_value(e));
    std::string out;
    out.reserve(body.size() + 4);
    io::put_u32_be(out, static_cast<std::uint32_t>(body.size()));
    out += body;
    return out;
}

namespace {
constexpr std::uint32_t kMaxFrame = 16u << 20;
}  // namespace

DecodedStore decode_store(std::string_view bytes) {
    DecodedStore out;
    std::size_t pos = 0;
    while (pos < bytes.size()) {
        if (bytes.size() - pos < 4) break;
        std::uint32_t len = io::get_u32_be(bytes.substr(pos, 4));
        // A torn write leaves a plausible header and the start of a JSON
        // object; anything else is damage, not an interrupted append.
        if (len == 0 || len > kMaxFrame || (bytes.size() - pos > 4 && bytes[pos + 4] != '{'))
            fail(ErrorCode::StoreCorrupt, "event " + std::to_string(out.events.size()) + " has a malformed frame header");
        if (len > bytes.size() - pos - 4) break;
        EventEnvelope e;
        try {
            e = envelope_from_value(canon::parse_canonical(bytes.substr(pos + 4, len)));
        } catch (const BrokerError& err) {
            fail(ErrorCode::StoreCorrupt,
                 "event " + std::to_string(out.events.size()) + " is damaged: " + std::string(err.what()));
        }
        if (e.sequence != out.events.size())
            fail(ErrorCode::StoreCorrupt, "sequence gap at event " + std::to_string(out.events.size()));
        out.events.push_back(std::move(e));
        pos += 4 + len;
        out.intact_bytes = pos;
    }
    return out;
}

void EventStore::arm(FaultPlan plan) {
    std::lock_guard lock(fault_mutex_);
    fault_ = plan;
}

std::optional<CrashPoint> EventStore::take_fault(std::uint64_t sequence) {
    std::lock_guard lock(fault_mutex_);
    if (!fault_ || fault_->at_sequence != sequence) return std::nullopt;
    auto p = fault_->point;
    fault_.reset();
    return p;
}

std::vector<EventEnvelope> MemoryEventStore::load() {
    std::lock_guard lock(mutex_);
    auto decoded = decode_store(bytes_);
    bytes_.resize(decoded.intact_bytes);
    return std::move(decoded.events);
}

void MemoryEventStore::append(const EventEnvelope& e) {
    std::string frame = encode_frame(e);
    auto fault = take_fault(e.sequence);
    std::lock_guard lock(mutex_);
    if (fault == CrashPoint::BeforeWrite) throw SimulatedCrash(*fault);
    if (fault == CrashPoint::MidWrite) {
        bytes_ += frame.substr(0, frame.size() / 2);
        throw SimulatedCrash(*fault);
    }
    bytes_ += frame;
    if (fault == CrashPoint::AfterWrite) throw SimulatedCrash(*fault);
}

std::string MemoryEventStore::bytes() const {
    std::lock_guard lock(mutex_);
    return bytes_;
}

FileEventStore::FileEventStore(std::filesystem::path path) : path_(std::move(path)) {}

std::vector<EventEnvelope> FileEventStore::load() {
    std::lock_guard lock(mutex_);
    std::string bytes = io::read_file(path_);
    auto decoded = decode_store(bytes);
    if (decoded.intact_bytes != bytes.size()) io::truncate_durable(path_, decoded.intact_bytes);
    return std::move(decoded.events);
}

void FileEventStore::append(const EventEnvelope& e) {
    std::string frame = encode_frame(e);
    auto fault = take_fault(e.sequence);
    std::lock_guard lock(mutex_);
    if (fault == CrashPoint::BeforeWrite) throw SimulatedCrash(*fault);
    if (fault == CrashPoint::MidWrite) {
        io::append_durable(path_, std::string_view(frame).substr(0, frame.size() / 2));
        throw SimulatedCrash(*fault);
    }
    io::append_durable(path_, frame);
    if (fault == CrashPoint::AfterWrite) throw SimulatedCrash(*fault);
}

}  // namespace aerobroker::events
