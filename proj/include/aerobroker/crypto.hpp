#pragma once

#include <cstdint>
#include <span>
#include <string_view>

#include "aerobroker/types.hpp"

// Project-wide primitives: SHA-256 for every digest, Ed25519 for every
// signature. Backed by libsodium.
namespace aerobroker::crypto {

Digest sha256(std::span<const std::uint8_t> bytes);
Digest sha256(std::string_view bytes);

/// Incremental SHA-256.
class Hasher {
public:
    Hasher();
    Hasher& update(std::span<const std::uint8_t> bytes);
    Hasher& update(std::string_view bytes);
    Hasher& update_u64(std::uint64_t value);  // big-endian
    Hasher& update_i64(std::int64_t value);   // big-endian two's complement
    Digest finish();

private:
    alignas(64) std::uint8_t state_[208];
};

struct SecretKey : Bytes<64> {};

struct Keypair {
    PublicKey public_key;
    SecretKey secret_key;

    static Keypair generate();
    /// Deterministic keypair from a 32-byte seed (tests and fixtures).
    static Keypair from_seed(std::span<const std::uint8_t, 32> seed);
};

Signature sign(std::span<const std::uint8_t> message, const SecretKey& key);
bool verify(std::span<const std::uint8_t> message, const Signature& sig, const PublicKey& key);

/// Recovers the public half embedded in an Ed25519 secret key.
PublicKey public_key_of(const SecretKey& key);

void random_bytes(std::span<std::uint8_t> out);

template <typename T>
T random_value() {
    T out{};
    random_bytes(out.data);
    return out;
}

}  // namespace aerobroker::crypto
