#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>

namespace aerobroker {

/// Seconds since the Unix epoch, UTC.
using Timestamp = std::int64_t;

/// Integer micro-credits. Never negative in any stored value.
using Credits = std::int64_t;

std::string to_hex(std::span<const std::uint8_t> bytes);

/// Decodes lowercase hex of exactly out.size() bytes. Returns false on any
/// malformed input, including uppercase digits.
bool from_hex(std::string_view hex, std::span<std::uint8_t> out);

template <std::size_t N>
struct Bytes {
    std::array<std::uint8_t, N> data{};

    static constexpr std::size_t size() { return N; }
    std::string hex() const { return to_hex(data); }
    bool is_zero() const {
        for (auto b : data)
            if (b != 0) return false;
        return true;
    }

    auto operator<=>(const Bytes&) const = default;
};

/// 256-bit hash output.
struct Digest : Bytes<32> {};

/// 128-bit salt for hashed anchor entries.
struct Salt : Bytes<16> {};

struct PublicKey : Bytes<32> {};
struct Signature : Bytes<64> {};

/// 128-bit identifier tagged by the entity it names.
template <typename Tag>
struct Id : Bytes<16> {
    auto operator<=>(const Id&) const = default;
};

struct PartyTag;
struct AssetTag;
struct PolicyTag;
struct ContractTag;
struct HoldTag;
struct TokenTag;

using PartyId = Id<PartyTag>;
using AssetId = Id<AssetTag>;
using PolicyId = Id<PolicyTag>;
using ContractId = Id<ContractTag>;
using HoldId = Id<HoldTag>;
using TokenId = Id<TokenTag>;

/// Parses a fixed-size byte value from lowercase hex; throws ParseError.
template <typename T>
T parse_hex(std::string_view hex);

/// Closed interval [start, end]; a contract expires once now > end.
struct Period {
    Timestamp start = 0;
    Timestamp end = 0;

    bool contains(Timestamp t) const { return start <= t && t <= end; }
    auto operator<=>(const Period&) const = default;
};

}  // namespace aerobroker

template <typename Tag>
struct std::hash<aerobroker::Id<Tag>> {
    std::size_t operator()(const aerobroker::Id<Tag>& id) const noexcept {
        std::size_t h = 0;
        for (auto b : id.data) h = h * 131 + b;
        return h;
    }
};

#include "aerobroker/error.hpp"

namespace aerobroker {

template <typename T>
T parse_hex(std::string_view hex) {
    T out{};
    if (!from_hex(hex, out.data)) fail(ErrorCode::ParseError, "malformed hex value '" + std::string(hex) + "'");
    return out;
}

}  // namespace aerobroker
