#include <fstream>
#include <random>
#include <sstream>

#include "aerobroker/canonical.hpp"
#include "aerobroker/embedded/scenario_bypass_dispute.hpp"
#include "aerobroker/embedded/scenario_expiry_path.hpp"
#include "aerobroker/embedded/scenario_happy_path.hpp"
#include "aerobroker/embedded/scenario_reject_path.hpp"
#include "aerobroker/file_io.hpp"
#include "cli.hpp"

namespace aerobroker::cli {

namespace fs = std::filesystem;
using canon::Value;

namespace {

const std::vector<std::pair<std::string_view, std::string_view>>& table() {
    static const std::vector<std::pair<std::string_view, std::string_view>> t = {
        {"happy_path", embedded::kScenarioHappyPath},
        {"reject_path", embedded::kScenarioRejectPath},
        {"expiry_path", embedded::kScenarioExpiryPath},
        {"bypass_dispute", embedded::kScenarioBypassDispute},
    };
    return t;
}

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

fs::path fresh_dir() {
    std::random_device rd;
    auto base = fs::temp_directory_path();
    for (int i = 0; i < 100; ++i) {
        auto p = base / ("aerobroker-scenario-" + std::to_string(rd()));
        if (fs::create_directory(p)) return p;
    }
    fail(ErrorCode::InvalidArgument, "cannot create a scenario directory under " + base.string());
}

Timestamp duration(const std::string& text) {
    if (text.empty()) fail(ErrorCode::InvalidArgument, "empty duration");
    Timestamp unit = 1;
    std::string digits = text;
    switch (text.back()) {
        case 's': unit = 1; digits.pop_back(); break;
        case 'm': unit = 60; digits.pop_back(); break;
        case 'h': unit = 3600; digits.pop_back(); break;
        case 'd': unit = 86400; digits.pop_back(); break;
        default: break;
    }
    std::size_t used = 0;
    Timestamp n = std::stoll(digits, &used);
    if (used != digits.size()) fail(ErrorCode::InvalidArgument, "bad duration '" + text + "'");
    return n * unit;
}

class Runner {
public:
    Runner(std::ostream& out, fs::path dir) : out_(out), dir_(std::move(dir)) {}

    void line(const std::string& raw) {
        std::string l = trim(raw);
        if (l.empty() || l[0] == '#') return;
        if (l.rfind("print", 0) == 0 && (l.size() == 5 || l[5] == ' ')) {
            out_ << "# " << substitute(trim(l.substr(5))) << "\n";
            return;
        }
        auto words = split_words(l);
        const auto& head = words.front();
        if (head == "clock") {
            need(words, 2);
            clock_ = std::stoll(substitute(words[1]));
            out_ << "# clock " << clock_ << "\n";
        } else if (head == "advance") {
            need(words, 2);
            clock_ += duration(words[1]);
            out_ << "# advance " << words[1] << " -> " << clock_ << "\n";
        } else if (head == "expect") {
            auto rest = trim(l.substr(6));
            auto eq = rest.find(" == ");
            if (eq == std::string::npos) fail(ErrorCode::InvalidArgument, "expect needs 'lhs == rhs'");
            auto lhs = substitute(trim(rest.substr(0, eq)));
            auto rhs = substitute(trim(rest.substr(eq + 4)));
            if (lhs != rhs) fail(ErrorCode::InvalidArgument, "expectation failed: " + lhs + " != " + rhs);
            out_ << "# ok: " << rest << "\n";
        } else if (head == "expect-error") {
            need(words, 3);
            std::vector<std::string> args(words.begin() + 2, words.end());
            auto [rc, stdout_text, stderr_text] = invoke(args);
            if (rc != kExitOperation)
                fail(ErrorCode::InvalidArgument, "expected error " + words[1] + " but exit code was " + std::to_string(rc));
            Value err = canon::parse(trim(stderr_text));
            const auto& code = err.at("error").at("code").as_string();
            if (code != words[1]) fail(ErrorCode::InvalidArgument, "expected error " + words[1] + ", got " + code);
            out_ << "  -> " << code << " (expected)\n";
        } else {
            std::optional<std::string> capture;
            std::vector<std::string> args = words;
            if (head[0] == '@') {
                if (words.size() < 3 || words[1] != "=") fail(ErrorCode::InvalidArgument, "capture needs '@name = ...'");
                capture = head.substr(1);
                args.assign(words.begin() + 2, words.end());
            }
            auto [rc, stdout_text, stderr_text] = invoke(args);
            if (rc != kExitOk) fail(ErrorCode::InvalidArgument, "command failed: " + trim(stderr_text));
            auto text = trim(stdout_text);
            if (capture) {
                Value v = text.empty() ? Value() : canon::parse(text);
                captures_[*capture] = v;
            }
            out_ << "  -> " << (text.size() > 120 ? text.substr(0, 117) + "..." : text) << "\n";
        }
        ++steps_;
    }

    std::size_t steps() const { return steps_; }

private:
    static void need(const std::vector<std::string>& w, std::size_t n) {
        if (w.size() < n) fail(ErrorCode::InvalidArgument, "'" + w.front() + "' is missing an argument");
    }

    std::tuple<int, std::string, std::string> invoke(std::vector<std::string> args) {
        for (auto& a : args) a = substitute(a);
        std::string shown;
        for (const auto& a : args) shown += (shown.empty() ? "" : " ") + a;
        out_ << "$ " << shown << "\n";
        args.insert(args.end(), {"--data-dir", dir_.string(), "--now", std::to_string(clock_), "--json"});
        std::ostringstream o, e;
        int rc = run(args, o, e);
        return {rc, o.str(), e.str()};
    }

    std::string lookup(const std::string& ref) {
        if (ref == "now") return std::to_string(clock_);
        std::vector<std::string> path;
        std::size_t pos = 0;
        while (true) {
            auto dot = ref.find('.', pos);
            path.push_back(ref.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos));
            if (dot == std::string::npos) break;
            pos = dot + 1;
        }
        auto it = captures_.find(path.front());
        if (it == captures_.end()) fail(ErrorCode::InvalidArgument, "nothing captured as '" + path.front() + "'");
        const Value* v = &it->second;
        for (std::size_t i = 1; i < path.size(); ++i) {
            if (v->is_array()) {
                std::size_t idx = std::stoul(path[i]);
                if (idx >= v->as_array().size()) fail(ErrorCode::InvalidArgument, "index out of range in ${" + ref + "}");
                v = &v->as_array()[idx];
            } else {
                v = v->find(path[i]);
                if (!v) fail(ErrorCode::InvalidArgument, "no field '" + path[i] + "' in ${" + ref + "}");
            }
        }
        return v->is_string() ? v->as_string() : canon::write(*v);
    }

    std::string substitute(const std::string& s) {
        std::string out;
        std::size_t pos = 0;
        while (true) {
            auto open = s.find("${", pos);
            if (open == std::string::npos) break;
            auto close = s.find('}', open);
            if (close == std::string::npos) fail(ErrorCode::InvalidArgument, "unterminated ${ in '" + s + "'");
            out += s.substr(pos, open - pos);
            out += lookup(s.substr(open + 2, close - open - 2));
            pos = close + 1;
        }
        return out + s.substr(pos);
    }

    std::ostream& out_;
    fs::path dir_;
    Timestamp clock_ = 1'700'000'000;
    std::map<std::string, Value> captures_;
    std::size_t steps_ = 0;
};

}  // namespace

std::vector<std::string> builtin_scenarios() {
    std::vector<std::string> names;
    for (const auto& [n, _] : table()) names.emplace_back(n);
    return names;
}

std::optional<std::string_view> builtin_scenario(std::string_view name) {
    for (const auto& [n, text] : table())
        if (n == name) return text;
    return std::nullopt;
}

std::vector<std::string> split_words(std::string_view line) {
    std::vector<std::string> words;
    std::string cur;
    bool in_word = false;
    char quote = 0;
    for (char c : line) {
        if (quote) {
            if (c == quote) quote = 0;
            else cur += c;
        } else if (c == '\'' || c == '"') {
            quote = c;
            in_word = true;
        } else if (c == ' ' || c == '\t') {
            if (in_word) words.push_back(std::move(cur));
            cur.clear();
            in_word = false;
        } else {
            cur += c;
            in_word = true;
        }
    }
    if (quote) fail(ErrorCode::InvalidArgument, "unterminated quote");
    if (in_word) words.push_back(std::move(cur));
    return words;
}

ScenarioResult run_scenario(std::string_view name_or_path, std::ostream& out, std::optional<fs::path> data_dir) {
    ScenarioResult result;
    std::string script;
    if (auto text = builtin_scenario(name_or_path)) {
        script = std::string(*text);
    } else if (fs::exists(name_or_path)) {
        script = io::read_file(std::string(name_or_path));
    } else {
        result.failure = "no scenario named '" + std::string(name_or_path) + "'";
        return result;
    }
    try {
        result.data_dir = data_dir ? *data_dir : fresh_dir();
        fs::create_directories(result.data_dir);
    } catch (const std::exception& e) {
        result.failure = e.what();
        return result;
    }
    out << "# scenario " << name_or_path << " in " << result.data_dir.string() << "\n";
    Runner runner(out, result.data_dir);
    std::istringstream in(script);
    std::string line;
    std::size_t number = 0;
    try {
        while (std::getline(in, line)) {
            ++number;
            runner.line(line);
        }
    } catch (const std::exception& e) {
        result.failure = "line " + std::to_string(number) + ": " +
                         (dynamic_cast<const BrokerError*>(&e) ? static_cast<const BrokerError&>(e).detail()
                                                                : std::string(e.what()));
        result.steps = runner.steps();
        out << "# FAILED " << result.failure << "\n";
        return result;
    }
    result.steps = runner.steps();
    result.ok = true;
    out << "# scenario passed (" << result.steps << " steps)\n";
    return result;
}

}  // namespace aerobroker::cli
