#include "aerobroker/types.hpp"

namespace aerobroker {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::NonCanonicalizable: return "NonCanonicalizable";
        case ErrorCode::VocabularyViolation: return "VocabularyViolation";
        case ErrorCode::ConflictingTerms: return "ConflictingTerms";
        case ErrorCode::DuplicateTerm: return "DuplicateTerm";
        case ErrorCode::MissingPrivacyTerm: return "MissingPrivacyTerm";
        case ErrorCode::InvalidAsset: return "InvalidAsset";
        case ErrorCode::UnknownParty: return "UnknownParty";
        case ErrorCode::DuplicateParty: return "DuplicateParty";
        case ErrorCode::UnknownAsset: return "UnknownAsset";
        case ErrorCode::DuplicateAsset: return "DuplicateAsset";
        case ErrorCode::InconsistentPolicy: return "InconsistentPolicy";
        case ErrorCode::UnknownContract: return "UnknownContract";
        case ErrorCode::DuplicateContract: return "DuplicateContract";
        case ErrorCode::VisibilityDenied: return "VisibilityDenied";
        case ErrorCode::SelfDealing: return "SelfDealing";
        case ErrorCode::NotAssetOwner: return "NotAssetOwner";
        case ErrorCode::OutOfTurn: return "OutOfTurn";
        case ErrorCode::TerminalStatus: return "TerminalStatus";
        case ErrorCode::WrongStatus: return "WrongStatus";
        case ErrorCode::NonNegotiableKey: return "NonNegotiableKey";
        case ErrorCode::BadSignature: return "BadSignature";
        case ErrorCode::MissingSignature: return "MissingSignature";
        case ErrorCode::PaymentIncomplete: return "PaymentIncomplete";
        case ErrorCode::NotAParty: return "NotAParty";
        case ErrorCode::NotYetExpired: return "NotYetExpired";
        case ErrorCode::VersionConflict: return "VersionConflict";
        case ErrorCode::DigestMismatch: return "DigestMismatch";
        case ErrorCode::ChainCorrupt: return "ChainCorrupt";
        case ErrorCode::UnknownHold: return "UnknownHold";
        case ErrorCode::InsufficientFunds: return "InsufficientFunds";
        case ErrorCode::NotTheConsumer: return "NotTheConsumer";
        case ErrorCode::WrongParty: return "WrongParty";
        case ErrorCode::WrongState: return "WrongState";
        case ErrorCode::TooEarly: return "TooEarly";
        case ErrorCode::BadProof: return "BadProof";
        case ErrorCode::ConfigInvalid: return "ConfigInvalid";
        case ErrorCode::StoreCorrupt: return "StoreCorrupt";
        case ErrorCode::Unauthenticated: return "Unauthenticated";
        case ErrorCode::Forbidden: return "Forbidden";
        case ErrorCode::NotFound: return "NotFound";
        case ErrorCode::UnknownToken: return "UnknownToken";
    }
    return "Unknown";
}

std::string to_hex(std::span<const std::uint8_t> bytes) {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out(bytes.size() * 2, '0');
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        out[2 * i] = kDigits[bytes[i] >> 4];
        out[2 * i + 1] = kDigits[bytes[i] & 0x0f];
    }
    return out;
}

namespace {
int nibble(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    return -1;
}
}  // namespace

bool from_hex(std::string_view hex, std::span<std::uint8_t> out) {
    if (hex.size() != out.size() * 2) return false;
    for (std::size_t i = 0; i < out.size(); ++i) {
        int hi = nibble(hex[2 * i]);
        int lo = nibble(hex[2 * i + 1]);
        if (hi < 0 || lo < 0) return false;
        out[i] = static_cast<std::uint8_t>(hi << 4 | lo);
    }
    return true;
}

}  // namespace aerobroker
