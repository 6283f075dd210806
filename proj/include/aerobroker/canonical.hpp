#pragma once

#include <cstdint>
#include <initializer_list>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "aerobroker/types.hpp"

// Canonical document encoding.
//
// A document is a tree of objects, arrays, UTF-8 strings, 64-bit integers
// and booleans. Its canonical byte form is compact JSON with:
//   - object members in ascending byte order of their (NFC) keys
//   - no whitespace anywhere
//   - integers in decimal, no leading zeros, no "+" and no "-0"
//   - strings NFC-normalised; only '"', '\\' and C0 controls escaped,
//     using \b \f \n \r \t where defined and \u00xx (lowercase) otherwise
// There is no null and no floating point. Decimals travel as strings and
// timestamps as integer epoch seconds.
namespace aerobroker::canon {

class Value;
using Array = std::vector<Value>;
using Object = std::map<std::string, Value, std::less<>>;

class Value {
public:
    using Storage = std::variant<bool, std::int64_t, std::string, Array, Object>;

    Value() : v_(Object{}) {}
    Value(bool b) : v_(b) {}
    Value(std::int64_t i) : v_(i) {}
    Value(int i) : v_(std::int64_t{i}) {}
    Value(std::uint64_t) = delete;
    Value(std::string s) : v_(std::move(s)) {}
    Value(std::string_view s) : v_(std::string(s)) {}
    Value(const char* s) : v_(std::string(s)) {}
    Value(Array a) : v_(std::move(a)) {}
    Value(Object o) : v_(std::move(o)) {}

    bool is_bool() const { return std::holds_alternative<bool>(v_); }
    bool is_int() const { return std::holds_alternative<std::int64_t>(v_); }
    bool is_string() const { return std::holds_alternative<std::string>(v_); }
    bool is_array() const { return std::holds_alternative<Array>(v_); }
    bool is_object() const { return std::holds_alternative<Object>(v_); }

    // Typed accessors throw ParseError on a type mismatch so decoders can
    // use them directly on untrusted input.
    bool as_bool() const;
    std::int64_t as_int() const;
    const std::string& as_string() const;
    const Array& as_array() const;
    const Object& as_object() const;
    Array& as_array();
    Object& as_object();

    /// Object member lookup; throws ParseError when absent.
    const Value& at(std::string_view key) const;
    /// Object member lookup; nullptr when absent.
    const Value* find(std::string_view key) const;
    bool contains(std::string_view key) const { return find(key) != nullptr; }

    /// Inserts or replaces an object member.
    Value& set(std::string key, Value v);

    const Storage& storage() const { return v_; }

    friend bool operator==(const Value&, const Value&) = default;

private:
    Storage v_;
};

/// Serialises to canonical bytes. Throws NonCanonicalizable on invalid
/// UTF-8 or when two keys of one object collide after normalisation.
std::string write(const Value& v);

/// Parses JSON text restricted to the document model above. Accepts
/// insignificant whitespace; rejects null, floats, exponents, duplicate
/// keys and trailing bytes. Throws ParseError.
Value parse(std::string_view text);

/// parse() that additionally requires the input to already be canonical
/// (write(parse(text)) == text). Throws ParseError otherwise.
Value parse_canonical(std::string_view text);

/// True iff text is well-formed UTF-8 without surrogates or overlongs.
bool is_valid_utf8(std::string_view text);

/// Unicode canonical composition (NFC). Throws NonCanonicalizable on
/// invalid UTF-8.
std::string nfc(std::string_view text);

/// A canonical byte form with its digest; digest == sha256(bytes).
struct CanonicalDocument {
    std::string bytes;
    Digest digest;

    static CanonicalDocument of(const Value& v);
};

/// Leaf enumeration used by the anchor payload: every scalar and every
/// empty container, keyed by dotted path (array elements by index).
struct Leaf {
    std::string path;
    const Value* value;
};
std::vector<Leaf> leaves(const Value& root);

// Small builders for the codecs.
inline Value hex_value(const auto& bytes) { return Value(bytes.hex()); }
Value string_array(const std::vector<std::string>& items);
std::vector<std::string> as_string_array(const Value& v);

}  // namespace aerobroker::canon
