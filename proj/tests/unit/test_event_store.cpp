#include <doctest.h>

#include <unistd.h>

#include <filesystem>

#include "aerobroker/event_store.hpp"
#include "aerobroker/file_io.hpp"

using namespace aerobroker;
using namespace aerobroker::events;
namespace fs = std::filesystem;

namespace {

EventEnvelope envelope(std::uint64_t seq, std::string note = "x") {
    EventEnvelope e;
    e.sequence = seq;
    e.stream = Stream::Contract;
    e.payload.set("note", canon::Value(std::move(note)));
    e.payload.set("n", canon::Value(static_cast<std::int64_t>(seq)));
    e.recorded_at = 1000 + static_cast<Timestamp>(seq);
    return e;
}

std::string image(std::uint64_t n) {
    std::string out;
    for (std::uint64_t i = 0; i < n; ++i) out += encode_frame(envelope(i));
    return out;
}

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const BrokerError& e) {
        return e.code();
    }
    FAIL("expected a BrokerError");
    return ErrorCode::InvalidArgument;
}

fs::path temp_path(const std::string& tag) {
    auto p = fs::temp_directory_path() / ("aerobroker-unit-" + tag + "-" + std::to_string(::getpid()));
    fs::remove(p);
    return p;
}

}  // namespace

TEST_SUITE("event_store") {

TEST_CASE("envelope codec") {
    auto e = envelope(7, "héllo");
    CHECK(envelope_from_value(to_value(e)) == e);
    auto frame = encode_frame(e);
    CHECK(io::get_u32_be(frame.substr(0, 4)) == frame.size() - 4);
    auto extra = to_value(e);
    extra.set("zzz", canon::Value(true));
    CHECK(code_of([&] { envelope_from_value(extra); }) == ErrorCode::ParseError);
    auto non_object = to_value(e);
    non_object.set("payload", canon::Value(std::int64_t{1}));
    CHECK(code_of([&] { envelope_from_value(non_object); }) == ErrorCode::ParseError);
    for (auto s : {Stream::Party, Stream::Asset, Stream::Policy, Stream::Contract, Stream::Escrow, Stream::Ledger})
        CHECK(parse_stream(to_string(s)) == s);
}

TEST_CASE("decode a whole image") {
    auto bytes = image(5);
    auto d = decode_store(bytes);
    CHECK(d.events.size() == 5);
    CHECK(d.intact_bytes == bytes.size());
    CHECK(d.events[3] == envelope(3));
    CHECK(decode_store("").events.empty());
}

TEST_CASE("every torn tail is dropped, never misread") {
    auto full = image(3);
    auto prefix = image(2);
    for (std::size_t cut = prefix.size(); cut < full.size(); ++cut) {
        auto d = decode_store(std::string_view(full).substr(0, cut));
        CHECK(d.events.size() == 2);
        CHECK(d.intact_bytes == prefix.size());
    }
}

TEST_CASE("damage inside a complete frame is StoreCorrupt") {
    auto bytes = image(3);
    auto second = encode_frame(envelope(0)).size();
    auto flipped = bytes;
    flipped[second + 10] ^= 0x20;
    CHECK(code_of([&] { decode_store(flipped); }) == ErrorCode::StoreCorrupt);
    CHECK(code_of([&] { decode_store(std::string(64, 'z')); }) == ErrorCode::StoreCorrupt);
    std::string zero_len("\0\0\0\0{}", 6);
    CHECK(code_of([&] { decode_store(zero_len); }) == ErrorCode::StoreCorrupt);
}

TEST_CASE("a sequence gap is StoreCorrupt") {
    std::string bytes = encode_frame(envelope(0)) + encode_frame(envelope(2));
    CHECK(code_of([&] { decode_store(bytes); }) == ErrorCode::StoreCorrupt);
    CHECK(code_of([&] { decode_store(encode_frame(envelope(1))); }) == ErrorCode::StoreCorrupt);
}

TEST_CASE("memory store crash points") {
    for (auto point : {CrashPoint::BeforeWrite, CrashPoint::MidWrite, CrashPoint::AfterWrite}) {
        MemoryEventStore s;
        s.append(envelope(0));
        s.arm({1, point});
        CHECK_THROWS_AS(s.append(envelope(1)), SimulatedCrash);
        auto loaded = s.load();
        CHECK(loaded.size() == (point == CrashPoint::AfterWrite ? 2u : 1u));
        // The fault is one-shot and the store stays appendable.
        s.append(envelope(loaded.size()));
        CHECK(s.load().size() == loaded.size() + 1);
    }
}

TEST_CASE("file store truncates a torn tail and keeps appending") {
    auto path = temp_path("events");
    {
        FileEventStore s(path);
        CHECK(s.load().empty());
        s.append(envelope(0));
        s.append(envelope(1));
        s.arm({2, CrashPoint::MidWrite});
        CHECK_THROWS_AS(s.append(envelope(2)), SimulatedCrash);
    }
    CHECK(fs::file_size(path) > image(2).size());
    FileEventStore reopened(path);
    auto events = reopened.load();
    CHECK(events.size() == 2);
    CHECK(fs::file_size(path) == image(2).size());
    reopened.append(envelope(2, "again"));
    CHECK(FileEventStore(path).load().back().payload.at("note").as_string() == "again");
    fs::remove(path);
}

TEST_CASE("file store refuses a damaged file") {
    auto path = temp_path("garbage");
    io::write_file(path, "this is not an event log at all");
    FileEventStore s(path);
    CHECK(code_of([&] { s.load(); }) == ErrorCode::StoreCorrupt);
    CHECK(io::read_file(path) == "this is not an event log at all");
    fs::remove(path);
}

}
