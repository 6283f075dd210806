// Acceptance suite: one PASS/FAIL line per criterion, exit 1 if any fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "aerobroker/broker.hpp"
#include "aerobroker/canonical_form.hpp"
#include "aerobroker/config.hpp"
#include "aerobroker/ledger.hpp"
#include "cli.hpp"
#include "support/catalog_oracle.hpp"
#include "support/disclosure_oracle.hpp"
#include "support/escrow_sim.hpp"
#include "support/generators.hpp"
#include "support/ledger_chain.hpp"
#include "support/oracle.hpp"
#include "support/random_domain.hpp"
#include "support/state_machine.hpp"
#include "support/workload.hpp"

using namespace aerobroker;
namespace cf = aerobroker::canonical_form;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Verdict {
    bool pass = false;
    std::string measured;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

Verdict state_machine() {
    auto t0 = Clock::now();
    auto r = testing::sweep_state_machine();
    double s = seconds_since(t0);
    bool pass = r.combinations == 7 * 9 * 2 && r.mismatches == 0 && r.edges == testing::allowed_edges() && s < 1.0;
    return {pass, fmt("%zu combinations, %zu mismatches, %zu/%zu edges, %.3f s (limit 1 s)", r.combinations,
                      r.mismatches, r.edges.size(), testing::allowed_edges().size(), s)};
}

Verdict replay() {
    std::size_t mismatches = 0, events = 0, multi = 0;
    for (std::uint64_t seed = 1; seed <= 1000; ++seed) {
        auto r = testing::replay_sequence(seed, 60);
        mismatches += !r.state_equal || r.log_divergences != 0;
        events += r.events;
        multi += r.contracts >= 2;
    }
    return {mismatches == 0 && multi > 900,
            fmt("1000 sequences, %zu events, %zu with 2+ contracts, %zu mismatches", events, multi, mismatches)};
}

Verdict ledger_tamper() {
    testing::Rng rng(500);
    auto l = testing::build_chain(rng, 500);
    auto bytes = l->bytes();
    bool pristine = ledger::verify_block_file(bytes).ok && l->verify_chain().ok;
    std::set<std::size_t> positions;
    while (positions.size() < 1000) positions.insert(testing::pick(rng, bytes.size() * 8));
    std::size_t caught = 0;
    for (auto bit : positions) {
        auto damaged = testing::flip_bit(bytes, bit);
        bool detected = !ledger::verify_block_file(damaged).ok;
        if (!detected) continue;
        try {
            ledger::Ledger::from_bytes(damaged);
        } catch (const BrokerError&) {
            ++caught;
        }
    }
    return {pristine && caught == positions.size(),
            fmt("%zu blocks, %zu bytes, %zu/%zu flips detected", l->blocks().size(), bytes.size(), caught,
                positions.size())};
}

Verdict canonicalization() {
    testing::Rng rng(10'000);
    std::size_t pair_mismatches = 0;
    for (int i = 0; i < 10'000; ++i) {
        auto v = testing::random_value(rng);
        auto a = canon::write(canon::parse(testing::emit_permuted(v, rng)));
        auto b = canon::write(canon::parse(testing::emit_permuted(v, rng)));
        pair_mismatches += a != b || a != canon::write(v);
    }
    testing::Rng fixed(100);
    std::size_t ref_mismatches = 0;
    for (int i = 0; i < 100; ++i) {
        auto v = i % 2 ? testing::random_value(fixed) : cf::to_value(testing::random_contract(fixed, i, i % 4));
        auto doc = canon::CanonicalDocument::of(v);
        auto ref = testing::reference_bytes(testing::to_json(v));
        ref_mismatches += doc.bytes != ref || doc.digest.hex() != testing::reference_sha256_hex(ref);
    }
    return {pair_mismatches == 0 && ref_mismatches == 0,
            fmt("10000 permuted pairs: %zu mismatches; 100 reference samples: %zu mismatches", pair_mismatches,
                ref_mismatches)};
}

Verdict disclosure() {
    testing::Rng rng(3);
    std::size_t entries = 0, table = 0, leaks = 0, verify_fail = 0, shape = 0;
    for (int i = 0; i < 400; ++i) {
        int level = i % 4;
        auto c = testing::random_contract(rng, i, level);
        auto payload = cf::build_anchor_payload(c, level);
        std::vector<std::pair<std::string, std::string>> leaves;
        testing::collect_leaves(testing::to_json(cf::to_value(c)), "", leaves);
        if (payload.size() != leaves.size()) {
            ++shape;
            continue;
        }
        auto doc = cf::canonicalize(c).bytes;
        for (std::size_t k = 0; k < payload.size(); ++k) {
            const auto& e = payload[k];
            ++entries;
            table += e.key != leaves[k].first || e.disclosure != testing::expected_disclosure(e.key, level);
            verify_fail += !cf::verify_anchor_entry(e, leaves[k].second, c.salt);
            if (e.disclosure == cf::Disclosure::Hashed) {
                leaks += doc.find(e.value) != std::string::npos;
                leaks += leaves[k].second.size() >= 8 && e.value.find(leaves[k].second) != std::string::npos;
            }
        }
    }
    return {entries > 0 && shape == 0 && table == 0 && leaks == 0 && verify_fail == 0,
            fmt("400 contracts at levels 0-3, %zu entries: %zu table mismatches, %zu leaks, %zu verify failures",
                entries, table + shape, leaks, verify_fail)};
}

Verdict escrow_conservation() {
    testing::Rng rng(10'000);
    std::size_t steps = 0, not_conserved = 0, mismatches = 0, doubles = 0;
    for (std::uint64_t seq = 0; seq < 10'000; ++seq) {
        auto r = testing::run_escrow_sequence(rng, 30, seq);
        steps += r.steps;
        not_conserved += r.not_conserved;
        mismatches += r.mismatches;
        doubles += r.double_settles;
    }
    return {not_conserved == 0 && mismatches == 0 && doubles == 0,
            fmt("10000 sequences, %zu steps: %zu conservation breaks, %zu model mismatches, %zu double settles", steps,
                not_conserved, mismatches, doubles)};
}

Verdict catalog_search() {
    testing::Rng rng(200);
    std::size_t queries = 0, mismatches = 0, nonempty = 0;
    for (int round = 0; round < 10; ++round) {
        auto pop = testing::random_population(rng, 20 + round * 20);
        for (int i = 0; i < 150; ++i) {
            auto q = testing::random_query(rng, *pop);
            std::vector<AssetId> got;
            for (const auto& e : pop->catalog->search(q)) got.push_back(e.asset.id);
            auto expected = testing::oracle_search(*pop, q);
            mismatches += got != expected;
            nonempty += !expected.empty();
            ++queries;
        }
    }
    return {queries >= 1000 && mismatches == 0,
            fmt("catalogs of 20-200 entries, %zu queries (%zu non-empty), %zu mismatches", queries, nonempty,
                mismatches)};
}

bool scenario_state(const std::string& name, const broker::Broker& b) {
    auto contracts = b.contracts().all();
    if (contracts.empty()) return false;
    auto all = [&](contract::ContractStatus s) {
        for (const auto& c : contracts)
            if (c.status != s) return false;
        return true;
    };
    using S = contract::ContractStatus;
    if (name == "happy_path") return all(S::Active) && b.ledger().verify_chain().ok;
    if (name == "reject_path") return all(S::Rejected);
    if (name == "expiry_path") return all(S::Expired);
    if (name == "bypass_dispute") {
        auto holds = b.escrow().holds();
        return all(S::Active) && holds.size() == 1 && holds[0].state == escrow::HoldState::BypassGranted &&
               !b.ledger().query_disputes(contracts[0].id).empty();
    }
    return false;
}

Verdict scenarios() {
    auto base = fs::temp_directory_path() / ("aerobroker-acceptance-" + std::to_string(::getpid()));
    fs::remove_all(base);
    std::vector<std::string> failed;
    double total = 0;
    for (const auto& name : cli::builtin_scenarios()) {
        auto dir = base / name;
        std::ostringstream transcript, out, err;
        auto t0 = Clock::now();
        int rc = cli::run({"--data-dir", dir.string(), "scenario", "run", name}, out, err);
        total += seconds_since(t0);
        bool ok = rc == cli::kExitOk;
        if (ok) {
            try {
                auto b = broker::Broker::open_dir(config::settings(config::Config{}), dir);
                ok = scenario_state(name, *b);
            } catch (const BrokerError&) {
                ok = false;
            }
        }
        if (!ok) failed.push_back(name + " (exit " + std::to_string(rc) + ")");
    }
    fs::remove_all(base);
    std::string list;
    for (const auto& f : failed) list += " " + f;
    return {failed.empty() && total < 10.0,
            fmt("4 scenarios in %.2f s (limit 10 s); failed:%s", total, failed.empty() ? " none" : list.c_str())};
}

Verdict crashes() {
    testing::Rng rng(500);
    std::size_t fired = 0, divergences = 0, attempts = 0;
    std::size_t per_point[3] = {0, 0, 0};
    for (std::uint64_t seed = 1; fired < 500 && attempts < 2000; ++seed, ++attempts) {
        auto point = static_cast<events::CrashPoint>(seed % 3);
        auto r = testing::crash_sequence(seed, 60, 3 + rng() % 40, point);
        if (!r.fired) continue;
        ++fired;
        ++per_point[seed % 3];
        divergences += !r.recovered_state_matches || !r.retry_state_matches || !r.retry_result_matches ||
                       r.log_divergences != 0;
    }
    return {fired >= 500 && divergences == 0,
            fmt("%zu crashes fired (%zu/%zu/%zu per crash point), %zu divergences", fired, per_point[0],
                per_point[1], per_point[2], divergences)};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria = {
        {"state-machine exhaustiveness", state_machine},
        {"replay determinism", replay},
        {"ledger tamper evidence", ledger_tamper},
        {"canonicalization determinism", canonicalization},
        {"selective disclosure", disclosure},
        {"escrow conservation", escrow_conservation},
        {"policy-filter oracle equivalence", catalog_search},
        {"end-to-end CLI scenarios", scenarios},
        {"crash consistency", crashes},
    };
    int failures = 0;
    for (const auto& [name, check] : criteria) {
        Verdict v;
        try {
            v = check();
        } catch (const std::exception& e) {
            v = {false, std::string("threw: ") + e.what()};
        }
        failures += !v.pass;
        std::printf("%s  %-34s %s\n", v.pass ? "PASS" : "FAIL", name, v.measured.c_str());
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
