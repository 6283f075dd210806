#include "aerobroker/catalog.hpp"

#include <unicode/unistr.h>

#include <algorithm>
#include <mutex>

namespace aerobroker::catalog {

using policy::DataAsset;
using policy::Policy;

std::string fold_case(std::string_view text) {
    if (std::all_of(text.begin(), text.end(), [](unsigned char c) { return c < 0x80; })) {
        std::string out(text);
        for (auto& c : out)
            if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
        return out;
    }
    std::string out;
    icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())))
        .foldCase()
        .toUTF8String(out);
    return out;
}

bool filter_matches(const CategoryFilter& filter, const Policy& policy) {
    for (const auto& t : policy.terms) {
        if (t.category != filter.category || t.key != filter.key) continue;
        if (t.value == filter.value) return true;
        const auto* set = std::get_if<policy::LabelSet>(&t.value);
        const auto* label = std::get_if<policy::Label>(&filter.value);
        if (set && label && set->contains(label->value)) return true;
    }
    return false;
}

Catalog::Catalog(const policy::PartyRegistry& parties, const policy::Vocabulary& vocabulary)
    : parties_(parties), vocabulary_(vocabulary) {}

CatalogEntry Catalog::register_asset(DataAsset asset, Policy policy, Timestamp listed_at) {
    policy::validate_asset(asset);
    parties_.get(asset.provider);
    std::unique_lock lock(mutex_);
    if (auto it = entries_.find(asset.id); it != entries_.end() && it->second.entry.active)
        fail(ErrorCode::DuplicateAsset, "asset " + asset.id.hex() + " is already listed");
    if (policy.asset_id != asset.id) fail(ErrorCode::InconsistentPolicy, "policy is attached to a different asset");
    auto report = policy::check_policy_consistency(policy, vocabulary_);
    if (!report.ok()) fail(ErrorCode::InconsistentPolicy, report.violations.front().detail);
    Stored stored{CatalogEntry{std::move(asset), std::move(policy), listed_at, true}, {}};
    stored.folded_description = fold_case(stored.entry.asset.description);
    auto id = stored.entry.asset.id;
    entries_.insert_or_assign(id, stored);
    return stored.entry;
}

CatalogEntry Catalog::deregister(AssetId id, PartyId actor) {
    std::unique_lock lock(mutex_);
    auto it = entries_.find(id);
    if (it == entries_.end() || !it->second.entry.active)
        fail(ErrorCode::UnknownAsset, "no active listing for asset " + id.hex());
    if (it->second.entry.asset.provider != actor)
        fail(ErrorCode::NotAssetOwner, "only the providing party may deregister an asset");
    it->second.entry.active = false;
    return it->second.entry;
}

std::vector<CatalogEntry> Catalog::search(const SearchQuery& query) const {
    auto requester = parties_.get(query.requester);
    std::string needle = query.text ? fold_case(*query.text) : std::string();
    std::vector<CatalogEntry> out;
    {
        std::shared_lock lock(mutex_);
        for (const auto& [id, stored] : entries_) {
            const auto& e = stored.entry;
            if (!e.active) continue;
            if (query.text && stored.folded_description.find(needle) == std::string::npos) continue;
            if (query.provider && e.asset.provider != *query.provider) continue;
            const auto& entities = e.asset.data_model_entities;
            if (!std::all_of(query.entity_tags.begin(), query.entity_tags.end(), [&](const std::string& tag) {
                    return std::find(entities.begin(), entities.end(), tag) != entities.end();
                }))
                continue;
            if (!std::all_of(query.category_filters.begin(), query.category_filters.end(),
                             [&](const CategoryFilter& f) { return filter_matches(f, e.policy); }))
                continue;
            if (!policy::evaluate_visibility(e.policy, requester, query.purpose)) continue;
            out.push_back(e);
        }
    }
    std::sort(out.begin(), out.end(), [](const CatalogEntry& a, const CatalogEntry& b) {
        if (a.listed_at != b.listed_at) return a.listed_at > b.listed_at;
        return a.asset.id < b.asset.id;
    });
    return out;
}

std::optional<CatalogEntry> Catalog::find(AssetId id) const {
    std::shared_lock lock(mutex_);
    auto it = entries_.find(id);
    if (it == entries_.end()) return std::nullopt;
    return it->second.entry;
}

CatalogEntry Catalog::get(AssetId id) const {
    auto e = find(id);
    if (!e) fail(ErrorCode::UnknownAsset, "unknown asset " + id.hex());
    return *e;
}

std::vector<CatalogEntry> Catalog::all() const {
    std::shared_lock lock(mutex_);
    std::vector<CatalogEntry> out;
    for (const auto& [id, stored] : entries_) out.push_back(stored.entry);
    return out;
}

}  // namespace aerobroker::catalog
