#include "aerobroker/crypto.hpp"

#include <sodium.h>

#include <cstring>
#include <stdexcept>

namespace aerobroker::crypto {
namespace {

void ensure_sodium() {
    static const bool ready = [] { return sodium_init() >= 0; }();
    if (!ready) throw std::runtime_error("libsodium failed to initialise");
}

crypto_hash_sha256_state* as_state(std::uint8_t* raw) {
    return reinterpret_cast<crypto_hash_sha256_state*>(raw);
}

}  // namespace

static_assert(sizeof(crypto_hash_sha256_state) <= 208);
static_assert(crypto_sign_PUBLICKEYBYTES == PublicKey::size());
static_assert(crypto_sign_SECRETKEYBYTES == SecretKey::size());
static_assert(crypto_sign_BYTES == Signature::size());

Digest sha256(std::span<const std::uint8_t> bytes) {
    ensure_sodium();
    Digest out;
    crypto_hash_sha256(out.data.data(), bytes.data(), bytes.size());
    return out;
}

Digest sha256(std::string_view bytes) {
    return sha256(std::span(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
}

Hasher::Hasher() {
    ensure_sodium();
    crypto_hash_sha256_init(as_state(state_));
}

Hasher& Hasher::update(std::span<const std::uint8_t> bytes) {
    crypto_hash_sha256_update(as_state(state_), bytes.data(), bytes.size());
    return *this;
}

Hasher& Hasher::update(std::string_view bytes) {
    return update(std::span(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
}

Hasher& Hasher::update_u64(std::uint64_t value) {
    std::uint8_t be[8];
    for (int i = 7; i >= 0; --i) {
        be[i] = static_cast<std::uint8_t>(value & 0xff);
        value >>= 8;
    }
    return update(be);
}

Hasher& Hasher::update_i64(std::int64_t value) {
    return update_u64(static_cast<std::uint64_t>(value));
}

Digest Hasher::finish() {
    Digest out;
    crypto_hash_sha256_final(as_state(state_), out.data.data());
    return out;
}

Keypair Keypair::generate() {
    ensure_sodium();
    Keypair kp;
    crypto_sign_keypair(kp.public_key.data.data(), kp.secret_key.data.data());
    return kp;
}

Keypair Keypair::from_seed(std::span<const std::uint8_t, 32> seed) {
    ensure_sodium();
    Keypair kp;
    crypto_sign_seed_keypair(kp.public_key.data.data(), kp.secret_key.data.data(), seed.data());
    return kp;
}

Signature sign(std::span<const std::uint8_t> message, const SecretKey& key) {
    ensure_sodium();
    Signature sig;
    crypto_sign_detached(sig.data.data(), nullptr, message.data(), message.size(), key.data.data());
    return sig;
}

bool verify(std::span<const std::uint8_t> message, const Signature& sig, const PublicKey& key) {
    ensure_sodium();
    return crypto_sign_verify_detached(sig.data.data(), message.data(), message.size(),
                                       key.data.data()) == 0;
}

PublicKey public_key_of(const SecretKey& key) {
    PublicKey pk;
    crypto_sign_ed25519_sk_to_pk(pk.data.data(), key.data.data());
    return pk;
}

void random_bytes(std::span<std::uint8_t> out) {
    ensure_sodium();
    randombytes_buf(out.data(), out.size());
}

}  // namespace aerobroker::crypto
