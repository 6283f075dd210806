#include "aerobroker/canonical.hpp"

#include <unicode/normalizer2.h>
#include <unicode/unistr.h>

#include <charconv>
#include <limits>

#include "aerobroker/crypto.hpp"
#include "aerobroker/error.hpp"

namespace aerobroker::canon {

namespace {

[[noreturn]] void type_error(const char* wanted) {
    fail(ErrorCode::ParseError, std::string("expected ") + wanted);
}

}  // namespace

bool Value::as_bool() const {
    if (auto* p = std::get_if<bool>(&v_)) return *p;
    type_error("boolean");
}
std::int64_t Value::as_int() const {
    if (auto* p = std::get_if<std::int64_t>(&v_)) return *p;
    type_error("integer");
}
const std::string& Value::as_string() const {
    if (auto* p = std::get_if<std::string>(&v_)) return *p;
    type_error("string");
}
const Array& Value::as_array() const {
    if (auto* p = std::get_if<Array>(&v_)) return *p;
    type_error("array");
}
const Object& Value::as_object() const {
    if (auto* p = std::get_if<Object>(&v_)) return *p;
    type_error("object");
}
Array& Value::as_array() {
    if (auto* p = std::get_if<Array>(&v_)) return *p;
    type_error("array");
}
Object& Value::as_object() {
    if (auto* p = std::get_if<Object>(&v_)) return *p;
    type_error("object");
}

const Value& Value::at(std::string_view key) const {
    if (const Value* v = find(key)) return *v;
    fail(ErrorCode::ParseError, "missing field '" + std::string(key) + "'");
}

const Value* Value::find(std::string_view key) const {
    const auto& obj = as_object();
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &it->second;
}

Value& Value::set(std::string key, Value v) {
    auto& obj = as_object();
    obj.insert_or_assign(std::move(key), std::move(v));
    return *this;
}

// ---------------------------------------------------------------------------
// UTF-8 and normalisation

bool is_valid_utf8(std::string_view text) {
    const auto* s = reinterpret_cast<const unsigned char*>(text.data());
    std::size_t n = text.size();
    std::size_t i = 0;
    while (i < n) {
        unsigned char c = s[i];
        if (c < 0x80) {
            ++i;
            continue;
        }
        std::size_t len;
        std::uint32_t cp;
        if ((c & 0xe0) == 0xc0) {
            len = 2;
            cp = c & 0x1f;
        } else if ((c & 0xf0) == 0xe0) {
            len = 3;
            cp = c & 0x0f;
        } else if ((c & 0xf8) == 0xf0) {
            len = 4;
            cp = c & 0x07;
        } else {
            return false;
        }
        if (i + len > n) return false;
        for (std::size_t k = 1; k < len; ++k) {
            if ((s[i + k] & 0xc0) != 0x80) return false;
            cp = cp << 6 | (s[i + k] & 0x3f);
        }
        if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000)) return false;
        if (cp > 0x10ffff || (cp >= 0xd800 && cp <= 0xdfff)) return false;
        i += len;
    }
    return true;
}

std::string nfc(std::string_view text) {
    bool ascii = true;
    for (char c : text) {
        if (static_cast<unsigned char>(c) >= 0x80) {
            ascii = false;
            break;
        }
    }
    if (ascii) return std::string(text);
    if (!is_valid_utf8(text)) fail(ErrorCode::NonCanonicalizable, "text is not valid UTF-8");

    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* normalizer = icu::Normalizer2::getNFCInstance(status);
    if (U_FAILURE(status)) fail(ErrorCode::NonCanonicalizable, "NFC normaliser unavailable");
    auto source = icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
    if (normalizer->isNormalized(source, status) && U_SUCCESS(status)) return std::string(text);
    status = U_ZERO_ERROR;
    icu::UnicodeString normalized = normalizer->normalize(source, status);
    if (U_FAILURE(status)) fail(ErrorCode::NonCanonicalizable, "NFC normalisation failed");
    std::string out;
    normalized.toUTF8String(out);
    return out;
}

// ---------------------------------------------------------------------------
// Writer

namespace {

void write_string(std::string& out, std::string_view raw) {
    std::string s = nfc(raw);
    out.push_back('"');
    for (char ch : s) {
        auto c = static_cast<unsigned char>(ch);
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\b': out += "\\b"; break;
            case '\f': out += "\\f"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            default:
                if (c < 0x20) {
                    static constexpr char kDigits[] = "0123456789abcdef";
                    out += "\\u00";
                    out.push_back(kDigits[c >> 4]);
                    out.push_back(kDigits[c & 0xf]);
                } else {
                    out.push_back(ch);
                }
        }
    }
    out.push_back('"');
}

void write_value(std::string& out, const Value& v) {
    std::visit(
        [&out](const auto& x) {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, bool>) {
                out += x ? "true" : "false";
            } else if constexpr (std::is_same_v<T, std::int64_t>) {
                char buf[24];
                auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
                out.append(buf, end);
            } else if constexpr (std::is_same_v<T, std::string>) {
                write_string(out, x);
            } else if constexpr (std::is_same_v<T, Array>) {
                out.push_back('[');
                bool first = true;
                for (const auto& item : x) {
                    if (!first) out.push_back(',');
                    first = false;
                    write_value(out, item);
                }
                out.push_back(']');
            } else {
                // Keys are normalised first, so the order is recomputed on
                // the normalised form rather than taken from the map.
                std::map<std::string, const Value*> ordered;
                for (const auto& [key, member] : x) {
                    if (!ordered.emplace(nfc(key), &member).second)
                        fail(ErrorCode::NonCanonicalizable, "object keys collide after normalisation: '" + key + "'");
                }
                out.push_back('{');
                bool first = true;
                for (const auto& [key, member] : ordered) {
                    if (!first) out.push_back(',');
                    first = false;
                    write_string(out, key);
                    out.push_back(':');
                    write_value(out, *member);
                }
                out.push_back('}');
            }
        },
        v.storage());
}

}  // namespace

std::string write(const Value& v) {
    std::string out;
    write_value(out, v);
    return out;
}

// ---------------------------------------------------------------------------
// Parser

namespace {

class Parser {
public:
    explicit Parser(std::string_view text) : text_(text) {}

    Value parse_document() {
        Value v = parse_value(0);
        skip_ws();
        if (pos_ != text_.size()) error("trailing bytes");
        return v;
    }

private:
    static constexpr int kMaxDepth = 64;

    [[noreturn]] void error(const std::string& what) const {
        fail(ErrorCode::ParseError, what + " at offset " + std::to_string(pos_));
    }

    void skip_ws() {
        while (pos_ < text_.size() &&
               (text_[pos_] == ' ' || text_[pos_] == '\n' || text_[pos_] == '\r' || text_[pos_] == '\t'))
            ++pos_;
    }

    char peek() {
        if (pos_ >= text_.size()) error("unexpected end of input");
        return text_[pos_];
    }

    void expect(char c) {
        if (peek() != c) error(std::string("expected '") + c + "'");
        ++pos_;
    }

    bool consume_literal(std::string_view lit) {
        if (text_.substr(pos_, lit.size()) == lit) {
            pos_ += lit.size();
            return true;
        }
        return false;
    }

    Value parse_value(int depth) {
        if (depth > kMaxDepth) error("nesting too deep");
        skip_ws();
        char c = peek();
        switch (c) {
            case '{': return parse_object(depth);
            case '[': return parse_array(depth);
            case '"': return Value(parse_string());
            case 't':
                if (consume_literal("true")) return Value(true);
                break;
            case 'f':
                if (consume_literal("false")) return Value(false);
                break;
            default:
                if (c == '-' || (c >= '0' && c <= '9')) return Value(parse_int());
        }
        error("unexpected character");
    }

    Value parse_object(int depth) {
        expect('{');
        Object obj;
        skip_ws();
        if (peek() == '}') {
            ++pos_;
            return Value(std::move(obj));
        }
        while (true) {
            skip_ws();
            if (peek() != '"') error("expected object key");
            std::string key = parse_string();
            skip_ws();
            expect(':');
            Value member = parse_value(depth + 1);
            if (!obj.emplace(std::move(key), std::move(member)).second) error("duplicate object key");
            skip_ws();
            if (peek() == ',') {
                ++pos_;
                continue;
            }
            expect('}');
            return Value(std::move(obj));
        }
    }

    Value parse_array(int depth) {
        expect('[');
        Array arr;
        skip_ws();
        if (peek() == ']') {
            ++pos_;
            return Value(std::move(arr));
        }
        while (true) {
            arr.push_back(parse_value(depth + 1));
            skip_ws();
            if (peek() == ',') {
                ++pos_;
                continue;
            }
            expect(']');
            return Value(std::move(arr));
        }
    }

    std::int64_t parse_int() {
        std::size_t start = pos_;
        if (text_[pos_] == '-') ++pos_;
        std::size_t digits = pos_;
        while (pos_ < text_.size() && text_[pos_] >= '0' && text_[pos_] <= '9') ++pos_;
        if (pos_ == digits) error("expected digits");
        if (pos_ < text_.size() && (text_[pos_] == '.' || text_[pos_] == 'e' || text_[pos_] == 'E'))
            error("floating point numbers are not part of the document model");
        if (text_[digits] == '0' && pos_ - digits > 1) error("leading zero");
        std::int64_t value = 0;
        auto [end, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, value);
        if (ec != std::errc{} || end != text_.data() + pos_) error("integer out of range");
        return value;
    }

    unsigned hex4() {
        if (pos_ + 4 > text_.size()) error("truncated \\u escape");
        unsigned v = 0;
        for (int i = 0; i < 4; ++i) {
            char c = text_[pos_++];
            v <<= 4;
            if (c >= '0' && c <= '9') v |= static_cast<unsigned>(c - '0');
            else if (c >= 'a' && c <= 'f') v |= static_cast<unsigned>(c - 'a' + 10);
            else if (c >= 'A' && c <= 'F') v |= static_cast<unsigned>(c - 'A' + 10);
            else error("bad hex digit in \\u escape");
        }
        return v;
    }

    static void append_utf8(std::string& out, std::uint32_t cp) {
        if (cp < 0x80) {
            out.push_back(static_cast<char>(cp));
        } else if (cp < 0x800) {
            out.push_back(static_cast<char>(0xc0 | (cp >> 6)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
        } else if (cp < 0x10000) {
            out.push_back(static_cast<char>(0xe0 | (cp >> 12)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
        } else {
            out.push_back(static_cast<char>(0xf0 | (cp >> 18)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3f)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
        }
    }

    std::string parse_string() {
        expect('"');
        std::string out;
        while (true) {
            if (pos_ >= text_.size()) error("unterminated string");
            char c = text_[pos_++];
            if (c == '"') break;
            if (static_cast<unsigned char>(c) < 0x20) error("unescaped control character");
            if (c != '\\') {
                out.push_back(c);
                continue;
            }
            if (pos_ >= text_.size()) error("unterminated escape");
            char e = text_[pos_++];
            switch (e) {
                case '"': out.push_back('"'); break;
                case '\\': out.push_back('\\'); break;
                case '/': out.push_back('/'); break;
                case 'b': out.push_back('\b'); break;
                case 'f': out.push_back('\f'); break;
                case 'n': out.push_back('\n'); break;
                case 'r': out.push_back('\r'); break;
                case 't': out.push_back('\t'); break;
                case 'u': {
                    std::uint32_t cp = hex4();
                    if (cp >= 0xd800 && cp <= 0xdbff) {
                        if (!consume_literal("\\u")) error("unpaired surrogate");
                        std::uint32_t lo = hex4();
                        if (lo < 0xdc00 || lo > 0xdfff) error("unpaired surrogate");
                        cp = 0x10000 + ((cp - 0xd800) << 10) + (lo - 0xdc00);
                    } else if (cp >= 0xdc00 && cp <= 0xdfff) {
                        error("unpaired surrogate");
                    }
                    append_utf8(out, cp);
                    break;
                }
                default: error("unknown escape");
            }
        }
        if (!is_valid_utf8(out)) error("string is not valid UTF-8");
        return out;
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

}  // namespace

Value parse(std::string_view text) { return Parser(text).parse_document(); }

Value parse_canonical(std::string_view text) {
    Value v = parse(text);
    std::string again;
    try {
        again = write(v);
    } catch (const BrokerError&) {
        fail(ErrorCode::ParseError, "document cannot be re-serialised");
    }
    if (again != text) fail(ErrorCode::ParseError, "document is not in canonical form");
    return v;
}

CanonicalDocument CanonicalDocument::of(const Value& v) {
    CanonicalDocument doc;
    doc.bytes = write(v);
    doc.digest = crypto::sha256(doc.bytes);
    return doc;
}

// ---------------------------------------------------------------------------
// Leaves

namespace {

void collect(const Value& v, const std::string& path, std::vector<Leaf>& out) {
    if (v.is_object() && !v.as_object().empty()) {
        for (const auto& [key, member] : v.as_object())
            collect(member, path.empty() ? key : path + "." + key, out);
    } else if (v.is_array() && !v.as_array().empty()) {
        const auto& arr = v.as_array();
        for (std::size_t i = 0; i < arr.size(); ++i)
            collect(arr[i], path.empty() ? std::to_string(i) : path + "." + std::to_string(i), out);
    } else {
        out.push_back({path, &v});
    }
}

}  // namespace

std::vector<Leaf> leaves(const Value& root) {
    std::vector<Leaf> out;
    collect(root, "", out);
    return out;
}

Value string_array(const std::vector<std::string>& items) {
    Array arr;
    arr.reserve(items.size());
    for (const auto& s : items) arr.emplace_back(s);
    return Value(std::move(arr));
}

std::vector<std::string> as_string_array(const Value& v) {
    std::vector<std::string> out;
    for (const auto& item : v.as_array()) out.push_back(item.as_string());
    return out;
}

}  // namespace aerobroker::canon
