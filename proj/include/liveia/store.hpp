#pragma once

#include "liveia/scene.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <vector>

namespace liveia::store {

/// sphere count, mean radius, mean light_level, mean shell thickness, mean
/// shell opacity, fractures per sphere, bubbles per sphere, mean border_blur,
/// beam count, mean beam spread, mean origin_depth, spark count.
/// Means over spheres count a missing shell as 0.
using FeatureVector = std::array<double, 12>;

FeatureVector features(const scene::Scenario& s);

/// Cosine similarity; 0 when either vector is zero.
double cosine(const FeatureVector& a, const FeatureVector& b);

struct TimelineNode {
    std::string id;
    std::string title;
    std::string created_at;
    bool deleted{false}; ///< tombstoned, kept so its forks stay attached
    std::vector<TimelineNode> children;
};

struct Match {
    std::string id;
    double score{0.0};
};

struct Step {
    std::string id;
    std::string title;
};

struct Suggestion {
    std::string neighbor;
    double score{0.0};
    std::vector<Step> sequence; ///< the neighbor's earliest-fork chain, neighbor excluded
};

/// Live scenarios around one node, for overview rendering.
struct Lineage {
    std::vector<scene::Scenario> ancestors;   ///< root first
    std::vector<scene::Scenario> descendants; ///< depth-first
};

/// Append-only scenario log in `dir`. See docs/storage.md for the byte layout.
/// Every mutation is fsynced before it returns. One process at a time may
/// open a directory (advisory lock on the log).
class Store {
  public:
    explicit Store(std::filesystem::path dir);
    ~Store();
    Store(const Store&) = delete;
    Store& operator=(const Store&) = delete;

    /// Insert or replace. Validates first. Refuses (Version) to replace a
    /// scenario that has been forked; a `parent` must already be known.
    /// Returns the content digest.
    std::string put(const scene::Scenario& s);

    scene::Scenario get(const std::string& id) const;
    /// The exact canonical bytes stored for `id`.
    std::string document(const std::string& id) const;
    std::string digest(const std::string& id) const;
    bool contains(const std::string& id) const;
    std::vector<std::string> ids() const; ///< live ids, sorted

    /// Tombstone; forks of `id` survive.
    void remove(const std::string& id);

    /// Stores a child of `id` and records the link on the parent.
    scene::Scenario fork(const std::string& id);

    TimelineNode timeline(const std::string& root) const;
    Lineage lineage(const std::string& id) const;

    /// Top-k by cosine similarity over live scenarios outside id's own
    /// ancestry and descendants; ties broken by ascending id.
    std::vector<Match> similar(const std::string& id, int k) const;
    std::vector<Suggestion> suggest(const std::string& id, int k) const;

    /// Rewrite index.json from memory (atomic rename). Done on open and close.
    void write_index() const;

    const std::filesystem::path& dir() const { return dir_; }

  private:
    struct Entry {
        std::string document;
        std::string digest;
        scene::Scenario scenario;
        FeatureVector features{};
        std::uint64_t first_seq{0};
        std::uint64_t last_seq{0};
        std::uint64_t offset{0}; ///< log offset of the latest record
        bool deleted{false};
    };

    void replay();
    std::uint64_t append(const std::string& payload);
    void apply_put(const std::string& document, const std::string& digest, std::uint64_t seq, std::uint64_t offset);
    void put_locked(const scene::Scenario& in, bool internal);
    const Entry& live(const std::string& id) const;
    std::vector<const Entry*> children_of(const std::string& id) const;
    std::vector<std::string> ancestor_ids(const std::string& id) const;
    void descendant_ids(const std::string& id, std::vector<std::string>& out) const;
    TimelineNode timeline_node(const std::string& id) const;
    std::vector<Match> similar_locked(const std::string& id, int k) const;

    std::filesystem::path dir_;
    int fd_{-1};
    std::uint64_t log_size_{0};
    std::uint64_t next_seq_{1};
    std::map<std::string, Entry> entries_;
    mutable std::shared_mutex mutex_; ///< readers shared, writers exclusive (single log writer)
};

} // namespace liveia::store
