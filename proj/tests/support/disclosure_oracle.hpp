#pragma once

#include <string>
#include <utility>
#include <vector>

#include "aerobroker/canonical_form.hpp"
#include "support/oracle.hpp"

namespace aerobroker::testing {

// Expected disclosure per leaf, written independently of the
// shipped rule file.
inline canonical_form::Disclosure expected_disclosure(const std::string& path, int level) {
    using canonical_form::Disclosure;
    auto under = [&](const std::string& prefix) {
        return path == prefix || (path.size() > prefix.size() && path.compare(0, prefix.size(), prefix) == 0 &&
                                  path[prefix.size()] == '.');
    };
    for (const char* p : {"contract_id", "asset_id", "provider", "consumer", "status", "temporal_validity"})
        if (under(p)) return Disclosure::Plain;
    for (const char* p : {"terms.PrivacyAndProtection", "liability_text", "price"})
        if (under(p)) return Disclosure::Hashed;
    return level == 3 ? Disclosure::Hashed : Disclosure::Plain;
}

/// Dotted leaf paths and their compact JSON, enumerated with nlohmann.
inline void collect_leaves(const nlohmann::json& j, const std::string& path,
                           std::vector<std::pair<std::string, std::string>>& out) {
    auto child = [&](const std::string& k) { return path.empty() ? k : path + "." + k; };
    if (j.is_object() && !j.empty()) {
        for (auto it = j.begin(); it != j.end(); ++it) collect_leaves(it.value(), child(it.key()), out);
    } else if (j.is_array() && !j.empty()) {
        for (std::size_t i = 0; i < j.size(); ++i) collect_leaves(j[i], child(std::to_string(i)), out);
    } else {
        out.emplace_back(path, j.dump());
    }
}

}  // namespace aerobroker::testing
