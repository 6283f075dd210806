#pragma once

#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "aerobroker/policy.hpp"

namespace aerobroker::catalog {

struct CatalogEntry {
    policy::DataAsset asset;
    policy::Policy policy;
    Timestamp listed_at = 0;
    bool active = true;

    bool operator==(const CatalogEntry&) const = default;
};

/// Matches an entry whose policy carries a term with this category and key
/// whose value equals `value`. A Label also matches a labels-typed term
/// that contains it.
struct CategoryFilter {
    policy::PolicyCategory category;
    std::string key;
    policy::TermValue value;

    bool operator==(const CategoryFilter&) const = default;
};

struct SearchQuery {
    PartyId requester;
    std::string purpose;
    std::optional<std::string> text;  // case-insensitive substring of description
    std::vector<std::string> entity_tags;  // all must be listed by the asset
    std::optional<PartyId> provider;
    std::vector<CategoryFilter> category_filters;
};

/// Unicode case folding used by text search.
std::string fold_case(std::string_view text);

bool filter_matches(const CategoryFilter& filter, const policy::Policy& policy);

class Catalog {
public:
    explicit Catalog(const policy::PartyRegistry& parties,
                     const policy::Vocabulary& vocabulary = policy::Vocabulary::standard());
    Catalog(const Catalog&) = delete;
    Catalog& operator=(const Catalog&) = delete;

    /// Errors: InvalidAsset, UnknownParty (provider), DuplicateAsset,
    /// InconsistentPolicy.
    CatalogEntry register_asset(policy::DataAsset asset, policy::Policy policy, Timestamp listed_at);

    /// Marks the entry inactive; the record stays resolvable.
    /// Errors: UnknownAsset, NotAssetOwner.
    CatalogEntry deregister(AssetId id, PartyId actor);

    /// Active entries visible to the requester and matching every predicate,
    /// newest first, ties by asset id. UnknownParty for an unregistered
    /// requester.
    std::vector<CatalogEntry> search(const SearchQuery& query) const;

    std::optional<CatalogEntry> find(AssetId id) const;
    CatalogEntry get(AssetId id) const;  // UnknownAsset
    std::vector<CatalogEntry> all() const;

private:
    struct Stored {
        CatalogEntry entry;
        std::string folded_description;
    };

    const policy::PartyRegistry& parties_;
    const policy::Vocabulary& vocabulary_;
    mutable std::shared_mutex mutex_;
    std::map<AssetId, Stored> entries_;
};

}  // namespace aerobroker::catalog
