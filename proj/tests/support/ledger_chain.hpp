#pragma once

#include <memory>

#include "aerobroker/ledger.hpp"
#include "support/random_domain.hpp"

namespace aerobroker::testing {

inline ledger::DisputeRecord random_dispute(Rng& rng, std::uint64_t n) {
    ledger::DisputeRecord d;
    d.contract_id = id_of<ContractId>(n);
    d.hold_id = id_of<HoldId>(n);
    d.provider = id_of<PartyId>(1);
    d.consumer = id_of<PartyId>(2);
    d.amount = static_cast<Credits>(rng() % 100000);
    d.proof_created_at = 1'700'000'000 + static_cast<Timestamp>(rng() % 1000);
    for (auto& b : d.proof_signature.data) b = static_cast<std::uint8_t>(rng());
    d.flagged_at = d.proof_created_at + 72 * 3600;
    return d;
}

/// A chain of `blocks` records; roughly one in ten is a dispute.
inline std::unique_ptr<ledger::Ledger> build_chain(Rng& rng, std::size_t blocks) {
    auto l = std::make_unique<ledger::Ledger>();
    Timestamp t = 1'700'000'000;
    for (std::size_t i = 0; i < blocks; ++i) {
        t += 1 + static_cast<Timestamp>(rng() % 100);
        if (coin(rng, 0.1)) {
            l->append_dispute(random_dispute(rng, i), t);
        } else {
            auto c = random_contract(rng, i, static_cast<int>(pick(rng, 4)));
            l->append_record(ledger::make_contract_record(c, t), c, t);
        }
    }
    return l;
}

inline std::string flip_bit(std::string bytes, std::size_t bit) {
    bytes[bit / 8] = static_cast<char>(static_cast<std::uint8_t>(bytes[bit / 8]) ^ (1u << (bit % 8)));
    return bytes;
}

}  // namespace aerobroker::testing
