#include "aerobroker/escrow.hpp"

#include <algorithm>
#include <limits>

#include "aerobroker/crypto.hpp"

namespace aerobroker::escrow {

using contract::Contract;
using contract::ContractStatus;

std::string_view to_string(HoldState s) {
    switch (s) {
        case HoldState::Held: return "Held";
        case HoldState::Released: return "Released";
        case HoldState::Refunded: return "Refunded";
        case HoldState::BypassGranted: return "BypassGranted";
    }
    return "?";
}

HoldState parse_hold_state(std::string_view s) {
    for (auto h : {HoldState::Held, HoldState::Released, HoldState::Refunded, HoldState::BypassGranted})
        if (to_string(h) == s) return h;
    fail(ErrorCode::ParseError, "unknown hold state '" + std::string(s) + "'");
}

std::array<std::uint8_t, 32> proof_message(ContractId contract_id, Credits amount, Timestamp created_at) {
    std::array<std::uint8_t, 32> msg{};
    std::copy(contract_id.data.begin(), contract_id.data.end(), msg.begin());
    auto a = static_cast<std::uint64_t>(amount);
    auto t = static_cast<std::uint64_t>(created_at);
    for (int i = 0; i < 8; ++i) {
        msg[16 + i] = static_cast<std::uint8_t>(a >> (56 - 8 * i));
        msg[24 + i] = static_cast<std::uint8_t>(t >> (56 - 8 * i));
    }
    return msg;
}

bool verify_proof(const PaymentProof& proof, const PublicKey& payer_key) {
    auto msg = proof_message(proof.contract_id, proof.amount, proof.created_at);
    return crypto::verify(msg, proof.signature, payer_key);
}

Escrow::Escrow(Timestamp bypass_timeout) : bypass_timeout_(bypass_timeout) {
    if (bypass_timeout < 0) fail(ErrorCode::ConfigInvalid, "bypass timeout must be non-negative");
}

Credits Escrow::deposit(PartyId party, Credits amount) {
    if (amount <= 0) fail(ErrorCode::InvalidArgument, "deposit amount must be positive");
    std::lock_guard lock(mutex_);
    auto& bal = balances_[party];
    if (bal > std::numeric_limits<Credits>::max() - amount || deposited_ > std::numeric_limits<Credits>::max() - amount)
        fail(ErrorCode::InvalidArgument, "deposit overflows the account");
    bal += amount;
    deposited_ += amount;
    return bal;
}

Credits Escrow::balance(PartyId party) const {
    std::lock_guard lock(mutex_);
    auto it = balances_.find(party);
    return it == balances_.end() ? 0 : it->second;
}

EscrowHold Escrow::place_hold(const Contract& c, PartyId payer, const PublicKey& payer_key,
                              const Signature& signature, Timestamp created_at, HoldId hold_id, Timestamp now) {
    if (c.status != ContractStatus::Accepted)
        fail(ErrorCode::WrongStatus, "holds can only be placed on Accepted contracts");
    if (payer != c.consumer) fail(ErrorCode::NotTheConsumer, "only the contract consumer pays");
    std::lock_guard lock(mutex_);
    if (holds_.count(hold_id)) fail(ErrorCode::InvalidArgument, "hold id already in use");
    if (auto it = latest_.find(c.id); it != latest_.end() && holds_.at(it->second).state != HoldState::Refunded)
        fail(ErrorCode::WrongState, "contract already has an open or settled hold");
    auto bal_it = balances_.find(payer);
    Credits bal = bal_it == balances_.end() ? 0 : bal_it->second;
    if (bal < c.price)
        fail(ErrorCode::InsufficientFunds,
             "balance " + std::to_string(bal) + " is below the price " + std::to_string(c.price));
    PaymentProof proof{hold_id, c.id, c.price, created_at, signature};
    if (created_at > now || now - created_at > kProofFreshness)
        fail(ErrorCode::BadProof, "payment proof timestamp is not fresh");
    if (!verify_proof(proof, payer_key)) fail(ErrorCode::BadProof, "payment signature does not verify");

    EscrowHold h;
    h.hold_id = hold_id;
    h.contract_id = c.id;
    h.payer = payer;
    h.payee = c.provider;
    h.payer_key = payer_key;
    h.amount = c.price;
    h.created_at = created_at;
    h.proof = proof;
    balances_[payer] = bal - c.price;
    holds_.emplace(hold_id, h);
    latest_[c.id] = hold_id;
    return h;
}

EscrowHold& Escrow::hold_ref(HoldId hold_id) {
    auto it = holds_.find(hold_id);
    if (it == holds_.end()) fail(ErrorCode::UnknownHold, "unknown hold " + hold_id.hex());
    return it->second;
}

EscrowHold Escrow::provider_confirm(HoldId hold_id, PartyId provider, Timestamp now) {
    std::lock_guard lock(mutex_);
    auto& h = hold_ref(hold_id);
    if (provider != h.payee) fail(ErrorCode::WrongParty, "only the contract provider confirms payment");
    if (h.state != HoldState::Held) fail(ErrorCode::WrongState, "hold is already " + std::string(to_string(h.state)));
    h.state = HoldState::Released;
    h.resolved_at = now;
    balances_[h.payee] += h.amount;
    return h;
}

BypassResult Escrow::claim_bypass(HoldId hold_id, PartyId consumer, const PaymentProof& proof, Timestamp now) {
    std::lock_guard lock(mutex_);
    auto& h = hold_ref(hold_id);
    if (h.state != HoldState::Held) fail(ErrorCode::WrongState, "hold is already " + std::string(to_string(h.state)));
    if (consumer != h.payer) fail(ErrorCode::WrongParty, "only the paying consumer may claim a bypass");
    if (proof.hold_id != h.hold_id || proof.contract_id != h.contract_id || proof.amount != h.amount ||
        proof.created_at != h.created_at || !verify_proof(proof, h.payer_key))
        fail(ErrorCode::BadProof, "payment proof does not verify for this hold");
    if (now - h.created_at < bypass_timeout_)
        fail(ErrorCode::TooEarly, "bypass available at " + std::to_string(h.created_at + bypass_timeout_));
    h.state = HoldState::BypassGranted;
    h.resolved_at = now;
    balances_[h.payee] += h.amount;
    DisputeFlag flag{h.hold_id, h.contract_id, h.payee, h.payer, h.amount, now, h.proof};
    disputes_.push_back(flag);
    return {h, flag};
}

EscrowHold Escrow::refund(HoldId hold_id, const Contract& c, Timestamp now) {
    std::lock_guard lock(mutex_);
    auto& h = hold_ref(hold_id);
    if (h.state != HoldState::Held) fail(ErrorCode::WrongState, "hold is already " + std::string(to_string(h.state)));
    if (c.id != h.contract_id) fail(ErrorCode::InvalidArgument, "hold belongs to a different contract");
    if (!contract::is_terminal(c.status))
        fail(ErrorCode::WrongState, "refund requires the contract to have closed before release");
    h.state = HoldState::Refunded;
    h.resolved_at = now;
    balances_[h.payer] += h.amount;
    return h;
}

contract::PaymentState Escrow::payment_state(ContractId contract_id) const {
    std::lock_guard lock(mutex_);
    auto it = latest_.find(contract_id);
    if (it == latest_.end()) return contract::PaymentState::None;
    switch (holds_.at(it->second).state) {
        case HoldState::Held: return contract::PaymentState::Held;
        case HoldState::Released: return contract::PaymentState::Released;
        case HoldState::Refunded: return contract::PaymentState::Refunded;
        case HoldState::BypassGranted: return contract::PaymentState::BypassGranted;
    }
    return contract::PaymentState::None;
}

std::optional<EscrowHold> Escrow::find(HoldId hold_id) const {
    std::lock_guard lock(mutex_);
    auto it = holds_.find(hold_id);
    if (it == holds_.end()) return std::nullopt;
    return it->second;
}

EscrowHold Escrow::get(HoldId hold_id) const {
    auto h = find(hold_id);
    if (!h) fail(ErrorCode::UnknownHold, "unknown hold " + hold_id.hex());
    return *h;
}

std::optional<EscrowHold> Escrow::hold_for(ContractId contract_id) const {
    std::lock_guard lock(mutex_);
    auto it = latest_.find(contract_id);
    if (it == latest_.end()) return std::nullopt;
    return holds_.at(it->second);
}

std::vector<EscrowHold> Escrow::holds() const {
    std::lock_guard lock(mutex_);
    std::vector<EscrowHold> out;
    for (const auto& [id, h] : holds_) out.push_back(h);
    return out;
}

std::map<PartyId, Credits> Escrow::accounts() const {
    std::lock_guard lock(mutex_);
    return balances_;
}

std::vector<DisputeFlag> Escrow::disputes() const {
    std::lock_guard lock(mutex_);
    return disputes_;
}

Totals Escrow::totals() const {
    std::lock_guard lock(mutex_);
    Totals t;
    for (const auto& [p, b] : balances_) t.balances += b;
    for (const auto& [id, h] : holds_)
        if (h.state == HoldState::Held) t.held += h.amount;
    t.deposited = deposited_;
    return t;
}

}  // namespace aerobroker::escrow
