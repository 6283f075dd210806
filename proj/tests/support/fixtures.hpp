#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>

#include "aerobroker/broker.hpp"
#include "aerobroker/canonical_form.hpp"
#include "aerobroker/contract_engine.hpp"
#include "aerobroker/crypto.hpp"
#include "aerobroker/escrow.hpp"
#include "aerobroker/policy.hpp"

// Shared builders for the unit and acceptance tests.
namespace aerobroker::testing {

using policy::Action;
using policy::PolicyCategory;
using policy::TermKind;

inline crypto::Keypair key_for(std::uint8_t n) {
    std::array<std::uint8_t, 32> seed{};
    seed.fill(n);
    seed[0] = 0xa5;
    return crypto::Keypair::from_seed(seed);
}

template <typename T>
T id_of(std::uint64_t n) {
    T out{};
    for (int i = 0; i < 8; ++i) out.data[15 - i] = static_cast<std::uint8_t>(n >> (8 * i));
    out.data[0] = 0x42;
    return out;
}

inline policy::Party make_party(std::uint8_t n, std::string name, policy::PartyRole role,
                                std::string industry = "aviation") {
    policy::Party p;
    p.id = id_of<PartyId>(n);
    p.display_name = std::move(name);
    p.role = role;
    p.industry = std::move(industry);
    p.public_key = key_for(n).public_key;
    return p;
}

inline policy::Term term(PolicyCategory c, TermKind k, std::string key, policy::TermValue v,
                         std::optional<Action> action = std::nullopt) {
    policy::Term t;
    t.category = c;
    t.kind = k;
    t.key = std::move(key);
    t.value = std::move(v);
    t.action = action;
    return t;
}

inline policy::DataAsset make_asset(std::uint64_t n, PartyId provider, std::string description = "Flight telemetry") {
    policy::DataAsset a;
    a.id = id_of<AssetId>(n);
    a.description = std::move(description);
    a.unencrypted_columns = {"tail"};
    a.encrypted_columns = {"position"};
    a.data_model_entities = {"aircraft", "flight"};
    a.provider = provider;
    a.version = "1.0";
    return a;
}

inline policy::PolicySpec basic_spec(int sensitivity = 1, Credits price = 900) {
    policy::PolicySpec s;
    s.terms = {
        term(PolicyCategory::RightsAndUsage, TermKind::Permission, "derivation", true, Action::Derivation),
        term(PolicyCategory::Quality, TermKind::Obligation, "completeness", policy::Decimal::parse("0.97")),
        term(PolicyCategory::PrivacyAndProtection, TermKind::Obligation, "applicable law", policy::Label{"EU"}),
    };
    s.sensitivity_level = sensitivity;
    s.price_listing = price;
    return s;
}

/// Provider, consumer, an outsider, one asset and its policy.
struct World {
    policy::Party provider = make_party(1, "acme", policy::PartyRole::Provider, "logistics");
    policy::Party consumer = make_party(2, "orbit", policy::PartyRole::Consumer, "aviation");
    policy::Party outsider = make_party(3, "delta", policy::PartyRole::Both, "finance");
    policy::DataAsset asset = make_asset(1, provider.id);
    policy::Policy policy;
    Period window{1'000, 100'000};

    explicit World(policy::PolicySpec spec = basic_spec()) {
        policy = policy::define_policy(asset, std::move(spec), id_of<PolicyId>(1), 0);
    }

    contract::DraftRequest request() const {
        contract::DraftRequest r;
        r.asset_id = asset.id;
        r.provider = provider.id;
        r.consumer = consumer.id;
        r.purpose = "research";
        r.temporal_validity = window;
        return r;
    }

    contract::Contract draft(contract::ContractEngine& engine, std::uint64_t n = 1, Timestamp now = 500) const {
        Salt salt{};
        salt.data.fill(static_cast<std::uint8_t>(n));
        return engine.draft_contract(request(), asset, policy, provider, consumer, id_of<ContractId>(n), salt, now);
    }

    const crypto::Keypair key(PartyId p) const { return key_for(p == provider.id ? 1 : p == consumer.id ? 2 : 3); }

    Signature sign(const contract::Contract& c, PartyId p) const {
        return crypto::sign(canonical_form::signing_digest(c).data, key(p).secret_key);
    }
};

inline contract::ProposalDiff price_diff(Credits price) {
    contract::ProposalDiff d;
    d.price = price;
    return d;
}

}  // namespace aerobroker::testing
