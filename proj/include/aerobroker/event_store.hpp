#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "aerobroker/canonical.hpp"

namespace aerobroker::events {

enum class Stream { Party, Asset, Policy, Contract, Escrow, Ledger };

std::string_view to_string(Stream s);
Stream parse_stream(std::string_view s);

struct EventEnvelope {
    std::uint64_t sequence = 0;  // gap-free from 0
    Stream stream = Stream::Contract;
    canon::Value payload;
    Timestamp recorded_at = 0;

    bool operator==(const EventEnvelope&) const = default;
};

canon::Value to_value(const EventEnvelope& e);
EventEnvelope envelope_from_value(const canon::Value& v);

/// Length-prefixed canonical envelope: u32 BE length, then the bytes.
std::string encode_frame(const EventEnvelope& e);

/// Where a simulated crash interrupts an append.
enum class CrashPoint { BeforeWrite, MidWrite, AfterWrite };

/// Thrown by an armed store in place of the process dying.
struct SimulatedCrash : std::runtime_error {
    explicit SimulatedCrash(CrashPoint p) : std::runtime_error("simulated crash"), point(p) {}
    CrashPoint point;
};

struct FaultPlan {
    std::uint64_t at_sequence = 0;
    CrashPoint point = CrashPoint::BeforeWrite;
};

/// Single serialized appender.
class EventStore {
public:
    virtual ~EventStore() = default;
    virtual std::vector<EventEnvelope> load() = 0;
    virtual void append(const EventEnvelope& e) = 0;

    /// Arms a one-shot crash for the append carrying `plan.at_sequence`.
    void arm(FaultPlan plan);

protected:
    /// Returns the armed point for this sequence and disarms it.
    std::optional<CrashPoint> take_fault(std::uint64_t sequence);

private:
    std::mutex fault_mutex_;
    std::optional<FaultPlan> fault_;
};

class MemoryEventStore final : public EventStore {
public:
    MemoryEventStore() = default;
    /// Starts from a previously captured byte image.
    explicit MemoryEventStore(std::string bytes) : bytes_(std::move(bytes)) {}
    std::vector<EventEnvelope> load() override;
    void append(const EventEnvelope& e) override;
    /// The byte image a file store would hold.
    std::string bytes() const;

private:
    mutable std::mutex mutex_;
    std::string bytes_;
};

/// Append-only file of frames. On open, an incomplete trailing frame (a torn
/// write) is truncated away; any other damage raises StoreCorrupt.
class FileEventStore final : public EventStore {
public:
    explicit FileEventStore(std::filesystem::path path);
    std::vector<EventEnvelope> load() override;
    void append(const EventEnvelope& e) override;
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
    std::mutex mutex_;
};

/// Decodes a whole store image. Returns the envelopes and the byte length
/// of the intact prefix; throws StoreCorrupt on a damaged complete frame or
/// a sequence gap.
struct DecodedStore {
    std::vector<EventEnvelope> events;
    std::size_t intact_bytes = 0;
};
DecodedStore decode_store(std::string_view bytes);

}  // namespace aerobroker::events
