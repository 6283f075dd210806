#include "cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <functional>
#include <iostream>
#include <memory>

#include "aerobroker/api.hpp"
#include "aerobroker/broker.hpp"
#include "aerobroker/config.hpp"
#include "aerobroker/crypto.hpp"
#include "aerobroker/file_io.hpp"
#include "aerobroker/http_server.hpp"
#include "aerobroker/ledger.hpp"

namespace aerobroker::cli {

namespace fs = std::filesystem;
namespace cf = canonical_form;
using canon::Value;

namespace {

// --- output ----------------------------------------------------------------

void pretty(const Value& v, std::ostream& out, int indent) {
    std::string pad(static_cast<std::size_t>(indent + 2), ' ');
    if (v.is_object() && !v.as_object().empty()) {
        out << "{\n";
        bool first = true;
        for (const auto& [k, child] : v.as_object()) {
            if (!first) out << ",\n";
            first = false;
            out << pad << canon::write(Value(k)) << ": ";
            pretty(child, out, indent + 2);
        }
        out << "\n" << std::string(static_cast<std::size_t>(indent), ' ') << "}";
    } else if (v.is_array() && !v.as_array().empty()) {
        out << "[\n";
        bool first = true;
        for (const auto& child : v.as_array()) {
            if (!first) out << ",\n";
            first = false;
            out << pad;
            pretty(child, out, indent + 2);
        }
        out << "\n" << std::string(static_cast<std::size_t>(indent), ' ') << "]";
    } else {
        out << canon::write(v);
    }
}

struct Failure {
    int exit_code;
    ErrorCode code;
    std::string message;
};

[[noreturn]] void startup_fail(ErrorCode code, std::string message) {
    throw Failure{kExitStartup, code, std::move(message)};
}

// --- term and argument parsing ---------------------------------------------

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (true) {
        auto next = s.find(sep, pos);
        out.emplace_back(s.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos));
        if (next == std::string_view::npos) break;
        pos = next + 1;
    }
    return out;
}

std::int64_t to_int(const std::string& s, std::string_view what) {
    try {
        std::size_t used = 0;
        auto v = std::stoll(s, &used);
        if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    fail(ErrorCode::InvalidArgument, std::string(what) + " '" + s + "' is not an integer");
}

Value typed_value(std::string_view type, const std::string& text) {
    if (type == "boolean") {
        if (text == "true") return Value(true);
        if (text == "false") return Value(false);
        fail(ErrorCode::InvalidArgument, "boolean must be true or false");
    }
    if (type == "integer" || type == "timestamp") return Value(to_int(text, type));
    if (type == "period") {
        auto dots = text.find("..");
        if (dots == std::string::npos) fail(ErrorCode::InvalidArgument, "period must be start..end");
        Value p;
        p.set("end", Value(to_int(text.substr(dots + 2), "period end")));
        p.set("start", Value(to_int(text.substr(0, dots), "period start")));
        return p;
    }
    if (type == "labels") {
        canon::Array arr;
        if (!text.empty())
            for (auto& l : split(text, ',')) arr.push_back(Value(l));
        return Value(std::move(arr));
    }
    return Value(text);
}

/// Category/Kind/key[@action]/type=value
Value term_spec(const std::string& spec) {
    auto parts = split(spec, '/');
    if (parts.size() < 4) fail(ErrorCode::InvalidArgument, "term spec must be Category/Kind/key[@action]/type=value");
    std::string rest = parts[3];
    for (std::size_t i = 4; i < parts.size(); ++i) rest += "/" + parts[i];
    auto eq = rest.find('=');
    if (eq == std::string::npos) fail(ErrorCode::InvalidArgument, "term spec is missing '=value'");
    std::string type = rest.substr(0, eq);
    Value t;
    std::string key = parts[2];
    if (auto at = key.find('@'); at != std::string::npos) {
        t.set("action", Value(key.substr(at + 1)));
        key = key.substr(0, at);
    }
    t.set("category", Value(parts[0]));
    t.set("key", Value(key));
    t.set("kind", Value(parts[1]));
    t.set("type", Value(type));
    t.set("value", typed_value(type, rest.substr(eq + 1)));
    return t;
}

/// Category/key[@action]
Value term_key_spec(const std::string& spec) {
    auto slash = spec.find('/');
    if (slash == std::string::npos) fail(ErrorCode::InvalidArgument, "term key must be Category/key[@action]");
    Value k;
    std::string key = spec.substr(slash + 1);
    if (auto at = key.find('@'); at != std::string::npos) {
        k.set("action", Value(key.substr(at + 1)));
        key = key.substr(0, at);
    }
    k.set("category", Value(spec.substr(0, slash)));
    k.set("key", Value(key));
    return k;
}

Value parse_json_arg(const std::string& text) {
    Value v = canon::parse(text);
    if (!v.is_object()) fail(ErrorCode::InvalidArgument, "JSON body must be an object");
    return v;
}

Value read_json_file(const std::string& path) {
    if (!fs::exists(path)) fail(ErrorCode::InvalidArgument, "file not found: " + path);
    return parse_json_arg(io::read_file(path));
}

// --- session -----------------------------------------------------------------

struct Globals {
    std::optional<std::string> config_path;
    std::optional<std::string> data_dir;
    std::optional<std::string> as;
    std::optional<std::int64_t> now;
    bool json = false;
};

class Session {
public:
    Session(const Globals& g, std::ostream& out, std::ostream& err) : g_(g), out_(out), err_(err) {}

    config::Config& cfg() {
        if (!cfg_) {
            try {
                cfg_ = g_.config_path ? config::load(*g_.config_path) : config::Config{};
            } catch (const BrokerError& e) {
                startup_fail(e.code(), e.detail());
            }
            if (g_.data_dir) cfg_->data_dir = *g_.data_dir;
        }
        return *cfg_;
    }

    fs::path data_dir() { return cfg().data_dir; }

    Timestamp now() {
        if (g_.now) return *g_.now;
        return api::system_clock()();
    }

    broker::Broker& broker() {
        if (!broker_) {
            try {
                broker_ = broker::Broker::open_dir(config::settings(cfg()), data_dir());
            } catch (const BrokerError& e) {
                startup_fail(e.code(), e.detail());
            }
            Timestamp fixed = now();
            bool use_fixed = g_.now.has_value();
            api_ = std::make_unique<api::Api>(*broker_, cfg().auth,
                                              use_fixed ? api::Clock([fixed] { return fixed; }) : api::system_clock());
        }
        return *broker_;
    }

    api::Api& api() {
        broker();
        return *api_;
    }

    broker::Principal principal() {
        if (!g_.as) return broker::Principal::root();
        return broker::Principal::of(resolve_party(*g_.as));
    }

    const std::string& acting_name() {
        if (!g_.as) fail(ErrorCode::Forbidden, "this command needs --as <party>");
        return *g_.as;
    }

    PartyId resolve_party(const std::string& name_or_hex) {
        if (auto p = broker().parties().find_by_name(name_or_hex)) return p->id;
        PartyId id{};
        if (from_hex(name_or_hex, id.data) && broker().parties().find(id)) return id;
        fail(ErrorCode::UnknownParty, "no party named '" + name_or_hex + "'");
    }

    fs::path key_path(const std::string& name) { return data_dir() / "keys" / (name + ".sk"); }

    void store_key(const std::string& name, const crypto::SecretKey& sk) {
        fs::create_directories(data_dir() / "keys");
        auto path = key_path(name);
        io::write_file(path, sk.hex() + "\n");
        fs::permissions(path, fs::perms::owner_read | fs::perms::owner_write, fs::perm_options::replace);
    }

    crypto::SecretKey load_key(const std::string& name) {
        auto text = io::read_file(key_path(name));
        while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
        crypto::SecretKey sk{};
        if (text.empty() || !from_hex(text, sk.data))
            fail(ErrorCode::InvalidArgument, "no usable secret key for '" + name + "' in " + key_path(name).string());
        return sk;
    }

    /// Issues a request; prints the body or the error. Returns the exit code.
    int call(std::string_view method, const std::string& path, const Value& body = Value(),
             Value* result = nullptr) {
        auto resp = api().dispatch(principal(), method, path, body);
        if (resp.status >= 400) {
            err_ << resp.text() << "\n";
            return kExitOperation;
        }
        if (result) *result = resp.body;
        print(resp.body);
        return kExitOk;
    }

    /// Like call() but returns the body and throws on failure; for reads
    /// that feed client-side work such as signing.
    Value fetch(const std::string& path) {
        auto resp = api().dispatch(principal(), "GET", path, Value());
        if (resp.status >= 400) {
            const auto& e = resp.body.at("error");
            auto code = e.at("code").as_string();
            for (int c = 0; c <= static_cast<int>(ErrorCode::UnknownToken); ++c)
                if (to_string(static_cast<ErrorCode>(c)) == code) fail(static_cast<ErrorCode>(c), e.at("message").as_string());
            fail(ErrorCode::InvalidArgument, e.at("message").as_string());
        }
        return resp.body;
    }

    void print(const Value& v) {
        if (g_.json) {
            out_ << canon::write(v) << "\n";
        } else {
            pretty(v, out_, 0);
            out_ << "\n";
        }
    }

    std::ostream& out() { return out_; }
    std::ostream& err() { return err_; }
    bool json() const { return g_.json; }

private:
    const Globals& g_;
    std::ostream& out_;
    std::ostream& err_;
    std::optional<config::Config> cfg_;
    std::unique_ptr<broker::Broker> broker_;
    std::unique_ptr<api::Api> api_;
};

Value versioned(Value body, const std::optional<std::int64_t>& expected_version) {
    if (expected_version) body.set("expected_version", Value(*expected_version));
    return body;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"aerobroker: data-asset brokerage engine"};
    app.fallthrough();
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config_path, "Service config file");
    app.add_option("--data-dir", g.data_dir, "Data directory (events.log, ledger.blk, keys/)");
    app.add_option("--as", g.as, "Acting party (display name); operator when omitted");
    app.add_flag("--json", g.json, "Machine-readable single-line JSON output");
    app.add_option("--now", g.now, "Clock override in epoch seconds");

    Session s(g, out, err);
    std::function<int()> action;
    auto on = [&](CLI::App* cmd, std::function<int()> fn) { cmd->callback([&action, fn] { action = fn; }); };

    // party
    auto* party = app.add_subcommand("party", "Party registry");
    party->require_subcommand(1);
    struct {
        std::string name, role = "consumer", industry;
        std::optional<std::string> public_key;
    } pa;
    auto* party_add = party->add_subcommand("add", "Register a party (operator); keeps its key in the keystore");
    party_add->add_option("name", pa.name, "Display name")->required();
    party_add->add_option("--role", pa.role, "provider, consumer or both");
    party_add->add_option("--industry", pa.industry, "Industry label");
    party_add->add_option("--public-key", pa.public_key, "Hex public key; generated and stored when omitted");
    on(party_add, [&] {
        Value body;
        body.set("display_name", Value(pa.name));
        body.set("industry", Value(pa.industry));
        body.set("role", Value(pa.role));
        std::optional<crypto::Keypair> kp;
        if (pa.public_key) {
            body.set("public_key", Value(*pa.public_key));
        } else {
            kp = crypto::Keypair::generate();
            body.set("public_key", canon::hex_value(kp->public_key));
        }
        Value result;
        int rc = s.call("POST", "/parties", body, &result);
        if (rc == kExitOk && kp) s.store_key(pa.name, kp->secret_key);
        return rc;
    });
    on(party->add_subcommand("list", "List registered parties"), [&] { return s.call("GET", "/parties"); });

    // account
    auto* account = app.add_subcommand("account", "Simulated payment accounts");
    account->require_subcommand(1);
    struct {
        std::string party;
        std::int64_t amount = 0;
    } ac;
    auto* deposit = account->add_subcommand("deposit", "Credit an account (operator)");
    deposit->add_option("party", ac.party)->required();
    deposit->add_option("amount", ac.amount, "Micro-credits")->required();
    on(deposit, [&] {
        Value body;
        body.set("amount", Value(ac.amount));
        body.set("party", canon::hex_value(s.resolve_party(ac.party)));
        return s.call("POST", "/accounts/deposit", body);
    });
    auto* show_account = account->add_subcommand("show", "Show a balance");
    show_account->add_option("party", ac.party, "Defaults to --as");
    on(show_account, [&] {
        std::string who = ac.party.empty() ? s.acting_name() : ac.party;
        return s.call("GET", "/accounts/" + s.resolve_party(who).hex());
    });

    // asset
    auto* asset = app.add_subcommand("asset", "Data assets and their policies");
    asset->require_subcommand(1);
    struct {
        std::optional<std::string> file, body, description, version, id;
        std::vector<std::string> entities, encrypted, unencrypted, terms, visibility;
        std::int64_t sensitivity = 0, price = 0;
    } as;
    auto* reg = asset->add_subcommand("register", "List an asset with its policy");
    reg->add_option("--file", as.file, "JSON file {asset, policy}");
    reg->add_option("--body", as.body, "Inline JSON {asset, policy}");
    reg->add_option("--id", as.id, "Asset id (hex); generated when omitted");
    reg->add_option("--description", as.description);
    reg->add_option("--version", as.version);
    reg->add_option("--entity", as.entities, "Data model entity (repeatable)");
    reg->add_option("--encrypted", as.encrypted, "Encrypted column (repeatable)");
    reg->add_option("--unencrypted", as.unencrypted, "Unencrypted column (repeatable)");
    reg->add_option("--term", as.terms, "Category/Kind/key[@action]/type=value (repeatable)");
    reg->add_option("--visibility", as.visibility, "attribute=v1,v2 (repeatable)");
    reg->add_option("--sensitivity", as.sensitivity, "0..3");
    reg->add_option("--price", as.price, "Listing price in micro-credits");
    on(reg, [&] {
        Value body;
        if (as.file) body = read_json_file(*as.file);
        else if (as.body) body = parse_json_arg(*as.body);
        else {
            Value a;
            if (as.id) a.set("id", Value(*as.id));
            a.set("description", Value(as.description.value_or("")));
            a.set("version", Value(as.version.value_or("1.0")));
            a.set("data_model_entities", canon::string_array(as.entities));
            a.set("encrypted_columns", canon::string_array(as.encrypted));
            a.set("unencrypted_columns", canon::string_array(as.unencrypted));
            Value p;
            canon::Array terms;
            for (const auto& t : as.terms) terms.push_back(term_spec(t));
            p.set("terms", Value(std::move(terms)));
            p.set("sensitivity_level", Value(as.sensitivity));
            p.set("price_listing", Value(as.price));
            canon::Array rules;
            for (const auto& r : as.visibility) {
                auto eq = r.find('=');
                if (eq == std::string::npos) fail(ErrorCode::InvalidArgument, "visibility must be attribute=v1,v2");
                Value rule;
                rule.set("allowed", canon::string_array(split(r.substr(eq + 1), ',')));
                rule.set("attribute", Value(r.substr(0, eq)));
                rules.push_back(std::move(rule));
            }
            p.set("visibility_rules", Value(std::move(rules)));
            body.set("asset", std::move(a));
            body.set("policy", std::move(p));
        }
        return s.call("POST", "/assets", body);
    });
    std::string asset_id;
    auto* dereg = asset->add_subcommand("deregister", "Withdraw a listing");
    dereg->add_option("asset_id", asset_id)->required();
    on(dereg, [&] { return s.call("DELETE", "/assets/" + asset_id); });

    // catalog
    auto* catalog = app.add_subcommand("catalog", "Catalog search");
    catalog->require_subcommand(1);
    struct {
        std::optional<std::string> text, provider;
        std::string purpose;
        std::vector<std::string> tags, filters;
    } cs;
    auto* search = catalog->add_subcommand("search", "Search visible listings");
    search->add_option("--text", cs.text);
    search->add_option("--tag", cs.tags, "Required data model entity (repeatable)");
    search->add_option("--provider", cs.provider);
    search->add_option("--purpose", cs.purpose);
    search->add_option("--filter", cs.filters, "Category/key/type=value (repeatable)");
    on(search, [&] {
        Value body;
        if (cs.text) body.set("text", Value(*cs.text));
        if (!cs.tags.empty()) body.set("entity_tags", canon::string_array(cs.tags));
        if (cs.provider) body.set("provider", canon::hex_value(s.resolve_party(*cs.provider)));
        body.set("purpose", Value(cs.purpose));
        canon::Array filters;
        for (const auto& f : cs.filters) {
            auto parts = split(f, '/');
            if (parts.size() < 3) fail(ErrorCode::InvalidArgument, "filter must be Category/key/type=value");
            std::string rest = parts[2];
            for (std::size_t i = 3; i < parts.size(); ++i) rest += "/" + parts[i];
            auto eq = rest.find('=');
            if (eq == std::string::npos) fail(ErrorCode::InvalidArgument, "filter is missing '=value'");
            Value fv;
            fv.set("category", Value(parts[0]));
            fv.set("key", Value(parts[1]));
            fv.set("type", Value(rest.substr(0, eq)));
            fv.set("value", typed_value(rest.substr(0, eq), rest.substr(eq + 1)));
            filters.push_back(std::move(fv));
        }
        if (!filters.empty()) body.set("category_filters", Value(std::move(filters)));
        return s.call("POST", "/catalog/search", body);
    });

    // contract
    auto* contract = app.add_subcommand("contract", "Contract drafting, negotiation and lifecycle");
    contract->require_subcommand(1);
    struct {
        std::string id, reason;
        std::optional<std::string> purpose, spatial, liability, termination, document, body;
        std::optional<std::int64_t> price, start, end, expected_version;
        std::vector<std::string> terms, removes;
    } co;
    auto window = [&](Value& body) {
        if (co.start || co.end) {
            if (!co.start || !co.end) fail(ErrorCode::InvalidArgument, "--start and --end go together");
            Value p;
            p.set("end", Value(*co.end));
            p.set("start", Value(*co.start));
            body.set("temporal_validity", std::move(p));
        }
        if (co.price) body.set("price", Value(*co.price));
        if (co.spatial) body.set("spatial_validity", canon::string_array(split(*co.spatial, ',')));
    };
    auto* draft = contract->add_subcommand("draft", "Draft a contract for an asset (as consumer)");
    draft->add_option("asset_id", co.id)->required();
    draft->add_option("--purpose", co.purpose);
    draft->add_option("--price", co.price);
    draft->add_option("--start", co.start);
    draft->add_option("--end", co.end);
    draft->add_option("--spatial", co.spatial, "Comma-separated coverage labels");
    draft->add_option("--liability", co.liability);
    draft->add_option("--termination-clause", co.termination);
    draft->add_option("--term", co.terms, "Category/Kind/key[@action]/type=value (repeatable)");
    draft->add_option("--body", co.body, "Inline JSON request");
    on(draft, [&] {
        Value body = co.body ? parse_json_arg(*co.body) : Value();
        body.set("asset_id", Value(co.id));
        if (co.purpose) body.set("purpose", Value(*co.purpose));
        window(body);
        if (co.liability) body.set("liability_text", Value(*co.liability));
        if (co.termination) body.set("termination_clause", Value(*co.termination));
        if (!co.terms.empty()) {
            canon::Array terms;
            for (const auto& t : co.terms) terms.push_back(term_spec(t));
            body.set("terms", Value(std::move(terms)));
        }
        return s.call("POST", "/contracts", body);
    });
    auto* propose = contract->add_subcommand("propose", "Submit a proposal or counter-offer");
    propose->add_option("contract_id", co.id)->required();
    propose->add_option("--price", co.price);
    propose->add_option("--start", co.start);
    propose->add_option("--end", co.end);
    propose->add_option("--spatial", co.spatial);
    propose->add_option("--term", co.terms, "Upserted term (repeatable)");
    propose->add_option("--remove", co.removes, "Removed term Category/key[@action] (repeatable)");
    propose->add_option("--expected-version", co.expected_version);
    on(propose, [&] {
        Value diff;
        window(diff);
        if (!co.terms.empty()) {
            canon::Array terms;
            for (const auto& t : co.terms) terms.push_back(term_spec(t));
            diff.set("upsert_terms", Value(std::move(terms)));
        }
        if (!co.removes.empty()) {
            canon::Array keys;
            for (const auto& k : co.removes) keys.push_back(term_key_spec(k));
            diff.set("remove_terms", Value(std::move(keys)));
        }
        Value body;
        body.set("diff", std::move(diff));
        return s.call("POST", "/contracts/" + co.id + "/proposals", versioned(body, co.expected_version));
    });
    for (const char* decision : {"accept", "reject"}) {
        auto* cmd = contract->add_subcommand(decision, std::string(decision) + " the standing proposal");
        cmd->add_option("contract_id", co.id)->required();
        cmd->add_option("--expected-version", co.expected_version);
        on(cmd, [&, d = std::string(decision)] {
            Value body;
            body.set("decision", Value(d));
            return s.call("POST", "/contracts/" + co.id + "/response", versioned(body, co.expected_version));
        });
    }
    auto* sign = contract->add_subcommand("sign", "Sign the accepted version with the keystore key");
    sign->add_option("contract_id", co.id)->required();
    on(sign, [&] {
        const auto& name = s.acting_name();
        auto sk = s.load_key(name);
        Value view = s.fetch("/contracts/" + co.id);
        auto c = cf::contract_from_value(view.at("contract"));
        Digest digest = cf::signing_digest(c);
        if (digest.hex() != view.at("signing_digest").as_string())
            fail(ErrorCode::DigestMismatch, "locally computed signing digest differs from the service's");
        Value body;
        body.set("signature", canon::hex_value(crypto::sign(digest.data, sk)));
        return s.call("POST", "/contracts/" + co.id + "/signatures", body);
    });
    auto* activate = contract->add_subcommand("activate", "Activate a signed, paid contract");
    activate->add_option("contract_id", co.id)->required();
    activate->add_option("--expected-version", co.expected_version);
    on(activate, [&] { return s.call("POST", "/contracts/" + co.id + "/activate", versioned(Value(), co.expected_version)); });
    auto* terminate = contract->add_subcommand("terminate", "Terminate an active contract");
    terminate->add_option("contract_id", co.id)->required();
    terminate->add_option("--reason", co.reason)->required();
    on(terminate, [&] {
        Value body;
        body.set("reason", Value(co.reason));
        return s.call("POST", "/contracts/" + co.id + "/terminate", body);
    });
    auto* cancel = contract->add_subcommand("cancel", "Cancel an accepted contract left unpaid");
    cancel->add_option("contract_id", co.id)->required();
    on(cancel, [&] { return s.call("POST", "/contracts/" + co.id + "/cancel"); });
    auto* show = contract->add_subcommand("show", "Show a contract");
    show->add_option("contract_id", co.id)->required();
    on(show, [&] { return s.call("GET", "/contracts/" + co.id); });
    on(contract->add_subcommand("list", "List the acting party's contracts"), [&] { return s.call("GET", "/contracts"); });
    auto* events = contract->add_subcommand("events", "Negotiation log");
    events->add_option("contract_id", co.id)->required();
    on(events, [&] { return s.call("GET", "/contracts/" + co.id + "/events"); });
    auto* validity = contract->add_subcommand("validity", "Validity report");
    validity->add_option("contract_id", co.id)->required();
    validity->add_option("--document", co.document, "Check a local copy of the contract document instead");
    on(validity, [&] {
        if (!co.document) return s.call("GET", "/contracts/" + co.id + "/validity");
        Value doc = read_json_file(*co.document);
        if (const Value* inner = doc.find("contract"); inner && inner->is_object()) doc = *inner;
        Value body;
        body.set("document", doc);
        return s.call("POST", "/contracts/" + co.id + "/validity", body);
    });
    auto* ctoken = contract->add_subcommand("token", "Access token of a contract");
    ctoken->add_option("contract_id", co.id)->required();
    on(ctoken, [&] { return s.call("GET", "/contracts/" + co.id + "/token"); });

    // escrow
    auto* escrow_cmd = app.add_subcommand("escrow", "Escrow holds");
    escrow_cmd->require_subcommand(1);
    std::string target;
    auto* hold = escrow_cmd->add_subcommand("hold", "Pay the contract price into escrow (as consumer)");
    hold->add_option("contract_id", target)->required();
    on(hold, [&] {
        auto sk = s.load_key(s.acting_name());
        Value view = s.fetch("/contracts/" + target);
        auto cid = parse_hex<ContractId>(target);
        Credits price = view.at("contract").at("price").as_int();
        Timestamp created = s.now();
        auto msg = escrow::proof_message(cid, price, created);
        Value body;
        body.set("contract_id", Value(target));
        body.set("created_at", Value(created));
        body.set("signature", canon::hex_value(crypto::sign(msg, sk)));
        return s.call("POST", "/escrow/holds", body);
    });
    auto* confirm = escrow_cmd->add_subcommand("confirm", "Confirm receipt of payment (as provider)");
    confirm->add_option("hold_id", target)->required();
    on(confirm, [&] { return s.call("POST", "/escrow/holds/" + target + "/confirm"); });
    auto* bypass = escrow_cmd->add_subcommand("bypass", "Claim the dispute bypass with the payment proof");
    bypass->add_option("hold_id", target)->required();
    on(bypass, [&] {
        auto sk = s.load_key(s.acting_name());
        Value h = s.fetch("/escrow/holds/" + target);
        escrow::PaymentProof proof;
        proof.hold_id = parse_hex<HoldId>(target);
        proof.contract_id = parse_hex<ContractId>(h.at("contract_id").as_string());
        proof.amount = h.at("amount").as_int();
        proof.created_at = h.at("created_at").as_int();
        proof.signature = crypto::sign(escrow::proof_message(proof.contract_id, proof.amount, proof.created_at), sk);
        Value body;
        body.set("proof", broker::proof_to_value(proof));
        return s.call("POST", "/escrow/holds/" + target + "/bypass", body);
    });
    auto* refund = escrow_cmd->add_subcommand("refund", "Refund a hold of a cancelled contract");
    refund->add_option("hold_id", target)->required();
    on(refund, [&] { return s.call("POST", "/escrow/holds/" + target + "/refund"); });
    auto* hshow = escrow_cmd->add_subcommand("show", "Show a hold");
    hshow->add_option("hold_id", target)->required();
    on(hshow, [&] { return s.call("GET", "/escrow/holds/" + target); });

    // ledger
    auto* ledger_cmd = app.add_subcommand("ledger", "Anchoring ledger");
    ledger_cmd->require_subcommand(1);
    std::optional<std::string> block_file;
    auto* verify = ledger_cmd->add_subcommand("verify", "Re-verify every block hash and link");
    verify->add_option("--file", block_file, "Block file (defaults to <data-dir>/ledger.blk)");
    on(verify, [&] {
        fs::path path = block_file ? fs::path(*block_file) : s.data_dir() / "ledger.blk";
        auto report = ledger::verify_block_file(io::read_file(path));
        if (!report.ok) {
            err << canon::write(api::error_body(ErrorCode::ChainCorrupt,
                                                "corrupt at height " + std::to_string(*report.first_corrupt_height) +
                                                    ": " + report.detail))
                << "\n";
            return kExitOperation;
        }
        if (s.json()) {
            Value v;
            v.set("height", Value(static_cast<std::int64_t>(report.height)));
            v.set("ok", Value(true));
            out << canon::write(v) << "\n";
        } else {
            out << "OK (" << report.height << " blocks)\n";
        }
        return kExitOk;
    });
    auto* query = ledger_cmd->add_subcommand("query", "Anchored records of a contract");
    query->add_option("contract_id", target)->required();
    on(query, [&] { return s.call("GET", "/ledger/contracts/" + target); });

    // token
    auto* token = app.add_subcommand("token", "Access tokens");
    token->require_subcommand(1);
    auto* check = token->add_subcommand("check", "Check an access token");
    check->add_option("token_id", target)->required();
    on(check, [&] { return s.call("GET", "/tokens/" + target); });

    // tick
    on(app.add_subcommand("tick", "Expire contracts whose validity window has ended (operator)"),
       [&] { return s.call("POST", "/admin/tick"); });

    // serve
    std::optional<std::string> listen;
    auto* serve = app.add_subcommand("serve", "Run the HTTP API");
    serve->add_option("--listen", listen, "host:port (overrides the config)");
    on(serve, [&] {
        auto& cfg = s.cfg();
        std::string host = cfg.listen_host;
        int port = cfg.listen_port;
        if (listen) {
            auto colon = listen->rfind(':');
            if (colon == std::string::npos) throw CLI::ValidationError("--listen", "expected host:port");
            host = listen->substr(0, colon);
            port = static_cast<int>(to_int(listen->substr(colon + 1), "port"));
        }
        auto& b = s.broker();
        api::Api api(b, cfg.auth, api::system_clock());
        http::Server server(api);
        int bound = server.bind(host, port);
        if (bound < 0) startup_fail(ErrorCode::ConfigInvalid, "cannot listen on " + host + ":" + std::to_string(port));
        out << "listening on " << host << ":" << bound << " (ledger height " << b.ledger().height() << ", "
            << b.event_count() << " events)" << std::endl;
        server.listen();
        return kExitOk;
    });

    // scenario
    auto* scenario = app.add_subcommand("scenario", "Scripted multi-party scenarios");
    scenario->require_subcommand(1);
    std::string scenario_name;
    auto* srun = scenario->add_subcommand("run", "Run a built-in scenario or a script file");
    srun->add_option("name", scenario_name)->required();
    on(srun, [&] {
        std::optional<fs::path> dir;
        if (g.data_dir) dir = *g.data_dir;
        auto result = run_scenario(scenario_name, out, dir);
        if (!result.ok) {
            err << canon::write(api::error_body(ErrorCode::InvalidArgument, result.failure)) << "\n";
            return kExitOperation;
        }
        return kExitOk;
    });
    on(scenario->add_subcommand("list", "List built-in scenarios"), [&] {
        for (const auto& n : builtin_scenarios()) out << n << "\n";
        return kExitOk;
    });

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitUsage;
    }
    if (!action) {
        err << app.help();
        return kExitUsage;
    }
    try {
        return action();
    } catch (const Failure& f) {
        err << canon::write(api::error_body(f.code, f.message)) << "\n";
        return f.exit_code;
    } catch (const CLI::ValidationError& e) {
        err << e.what() << "\n";
        return kExitUsage;
    } catch (const BrokerError& e) {
        err << canon::write(api::error_body(e.code(), e.detail())) << "\n";
        return kExitOperation;
    } catch (const std::exception& e) {
        err << canon::write(api::error_body(ErrorCode::InvalidArgument, e.what())) << "\n";
        return kExitOperation;
    }
}

}  // namespace aerobroker::cli
