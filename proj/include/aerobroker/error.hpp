#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace aerobroker {

// Stable machine-readable error codes. The string form returned by
// to_string() is part of the wire contract; never rename an entry.
enum class ErrorCode {
    InvalidArgument,
    ParseError,
    NonCanonicalizable,
    // policy-model
    VocabularyViolation,
    ConflictingTerms,
    DuplicateTerm,
    MissingPrivacyTerm,
    InvalidAsset,
    UnknownParty,
    DuplicateParty,
    // catalog
    UnknownAsset,
    DuplicateAsset,
    InconsistentPolicy,
    // contract-engine
    UnknownContract,
    DuplicateContract,
    VisibilityDenied,
    SelfDealing,
    NotAssetOwner,
    OutOfTurn,
    TerminalStatus,
    WrongStatus,
    NonNegotiableKey,
    BadSignature,
    MissingSignature,
    PaymentIncomplete,
    NotAParty,
    NotYetExpired,
    VersionConflict,
    // ledger
    DigestMismatch,
    ChainCorrupt,
    // escrow
    UnknownHold,
    InsufficientFunds,
    NotTheConsumer,
    WrongParty,
    WrongState,
    TooEarly,
    BadProof,
    // broker-service
    ConfigInvalid,
    StoreCorrupt,
    Unauthenticated,
    Forbidden,
    NotFound,
    UnknownToken,
};

std::string_view to_string(ErrorCode code) noexcept;

class BrokerError : public std::runtime_error {
public:
    BrokerError(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message),
          code_(code),
          detail_(message) {}

    ErrorCode code() const noexcept { return code_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorCode code_;
    std::string detail_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw BrokerError(code, message);
}

}  // namespace aerobroker
