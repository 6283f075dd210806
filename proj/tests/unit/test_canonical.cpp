#include <doctest.h>

#include "aerobroker/canonical.hpp"
#include "aerobroker/crypto.hpp"
#include "support/generators.hpp"
#include "support/oracle.hpp"

using namespace aerobroker;
using canon::Value;

namespace {

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const BrokerError& e) {
        return e.code();
    }
    FAIL("expected a BrokerError");
    return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_SUITE("canonical") {

TEST_CASE("members sort by key bytes and whitespace disappears") {
    auto v = canon::parse(R"( { "b" : 1 , "a" : [ true , false ] , "B" : "x" } )");
    CHECK(canon::write(v) == R"({"B":"x","a":[true,false],"b":1})");
}

TEST_CASE("integers print in plain decimal") {
    CHECK(canon::write(Value(std::int64_t{0})) == "0");
    CHECK(canon::write(Value(std::int64_t{-42})) == "-42");
    CHECK(canon::write(Value(INT64_MAX)) == "9223372036854775807");
    CHECK(canon::write(Value(INT64_MIN)) == "-9223372036854775808");
    CHECK(canon::parse("-0") == Value(std::int64_t{0}));
    CHECK(canon::write(canon::parse("-0")) == "0");
}

TEST_CASE("string escapes are minimal") {
    CHECK(canon::write(Value("a\"b\\c")) == R"("a\"b\\c")");
    CHECK(canon::write(Value("\b\f\n\r\t")) == R"("\b\f\n\r\t")");
    CHECK(canon::write(Value(std::string("\x01\x1f", 2))) == R"("\u0001\u001f")");
    CHECK(canon::write(Value("/\x7f")) == "\"/\x7f\"");
    CHECK(canon::write(canon::parse(R"("\u00e9\/\uD83D\uDEE9")")) == "\"\xc3\xa9/\xf0\x9f\x9b\xa9\"");
}

TEST_CASE("strings and keys are NFC normalised") {
    CHECK(canon::write(Value("e\xcc\x81")) == "\"\xc3\xa9\"");
    Value o;
    o.set("A\xcc\x8a", Value(1));
    CHECK(canon::write(o) == "{\"\xc3\x85\":1}");
    Value clash;
    clash.set("\xc3\xa9", Value(1));
    clash.set("e\xcc\x81", Value(2));
    CHECK(code_of([&] { canon::write(clash); }) == ErrorCode::NonCanonicalizable);
}

TEST_CASE("invalid UTF-8 is not canonicalizable") {
    CHECK(code_of([] { canon::write(Value(std::string("\xc3", 1))); }) == ErrorCode::NonCanonicalizable);
    CHECK(code_of([] { canon::write(Value(std::string("\xed\xa0\x80", 3))); }) == ErrorCode::NonCanonicalizable);
    CHECK(code_of([] { canon::write(Value(std::string("\xc0\xaf", 2))); }) == ErrorCode::NonCanonicalizable);
    CHECK_FALSE(canon::is_valid_utf8("\xf4\x90\x80\x80"));
    CHECK(canon::is_valid_utf8("\xf0\x9f\x9b\xa9"));
}

TEST_CASE("the parser rejects what the model cannot hold") {
    for (const char* bad : {"null", "1.5", "1e3", "01", "{\"a\":1,\"a\":2}", "[1] x", "\"\\ud800\"", "\"\\x\"",
                            "[1,]", "{\"a\" 1}", "99999999999999999999", "\"a\nb\""}) {
        CAPTURE(bad);
        CHECK(code_of([&] { canon::parse(bad); }) == ErrorCode::ParseError);
    }
}

TEST_CASE("parse_canonical accepts only canonical bytes") {
    CHECK(canon::parse_canonical(R"({"a":1})") == canon::parse(R"({"a":1})"));
    CHECK(code_of([] { canon::parse_canonical(R"({"a": 1})"); }) == ErrorCode::ParseError);
    CHECK(code_of([] { canon::parse_canonical(R"({"b":1,"a":2})"); }) == ErrorCode::ParseError);
    CHECK(code_of([] { canon::parse_canonical(R"("\u0041")"); }) == ErrorCode::ParseError);
}

TEST_CASE("typed accessors report ParseError") {
    Value v = canon::parse(R"({"n":1})");
    CHECK(code_of([&] { (void)v.at("n").as_string(); }) == ErrorCode::ParseError);
    CHECK(code_of([&] { (void)v.at("missing"); }) == ErrorCode::ParseError);
    CHECK(v.find("missing") == nullptr);
}

TEST_CASE("leaves cover scalars and empty containers") {
    auto v = canon::parse(R"({"a":{"b":1,"c":[]},"d":[true,{}],"e":"x"})");
    std::vector<std::string> paths;
    for (const auto& l : canon::leaves(v)) paths.push_back(l.path);
    CHECK(paths == std::vector<std::string>{"a.b", "a.c", "d.0", "d.1", "e"});
}

TEST_CASE("permuted spellings canonicalise identically") {
    testing::Rng rng(7);
    for (int i = 0; i < 500; ++i) {
        auto v = testing::random_value(rng);
        auto a = testing::emit_permuted(v, rng);
        auto b = testing::emit_permuted(v, rng);
        CAPTURE(a);
        CAPTURE(b);
        REQUIRE(canon::write(canon::parse(a)) == canon::write(canon::parse(b)));
        REQUIRE(canon::write(canon::parse(a)) == canon::write(v));
    }
}

TEST_CASE("bytes and digest agree with the reference serializer") {
    testing::Rng rng(11);
    for (int i = 0; i < 200; ++i) {
        auto v = testing::random_value(rng);
        auto doc = canon::CanonicalDocument::of(v);
        auto ref = testing::reference_bytes(testing::to_json(v));
        REQUIRE(doc.bytes == ref);
        REQUIRE(doc.digest.hex() == testing::reference_sha256_hex(ref));
        REQUIRE(doc.digest == crypto::sha256(doc.bytes));
    }
}

TEST_CASE("sha256 matches known vectors") {
    CHECK(crypto::sha256("").hex() == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(crypto::sha256("abc").hex() == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    crypto::Hasher h;
    h.update("a").update("bc");
    CHECK(h.finish() == crypto::sha256("abc"));
}

}
