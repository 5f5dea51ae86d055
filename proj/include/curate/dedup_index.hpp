#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace curate::code {

struct NearMatch {
    std::string doc_id;
    unsigned distance;
};

/// Two-level duplicate index: exact normalized-fingerprint matches and SimHash
/// fingerprints searched within a Hamming radius.
///
/// Near lookups use the pigeonhole split: the 64 bits are cut into radius+1
/// blocks, and any fingerprint within the radius agrees with the query on at
/// least one whole block. Candidates are then verified by popcount.
///
/// Not thread-safe for mutation; callers serialize insert().
class DedupIndex {
public:
    static constexpr unsigned kMaxRadius = 8;

    /// Throws ConfigError when radius > kMaxRadius.
    explicit DedupIndex(unsigned hamming_radius = 3);

    unsigned hamming_radius() const { return radius_; }

    std::optional<std::string> find_exact(std::uint64_t fingerprint) const;

    /// Closest stored SimHash within the radius; ties go to the earliest insertion.
    std::optional<NearMatch> find_near(std::uint64_t simhash) const;

    /// Registers a canonical document. An existing exact fingerprint keeps its first owner.
    void insert(std::uint64_t fingerprint, std::uint64_t simhash, const std::string& doc_id);

    std::size_t function_count() const { return function_index_.size(); }
    std::size_t simhash_count() const { return repo_index_.size(); }

    /// Flat little-endian file: header, then (fingerprint, doc_id) records for
    /// the function level followed by the SimHash level.
    void save(const std::string& path) const;
    static DedupIndex load(const std::string& path);

private:
    struct Entry {
        std::uint64_t simhash;
        std::string doc_id;
    };

    void add_simhash(std::uint64_t simhash, const std::string& doc_id);
    std::uint64_t block_key(std::uint64_t value, unsigned block) const;

    unsigned radius_;
    std::vector<unsigned> block_shift_;
    std::vector<unsigned> block_width_;
    std::unordered_map<std::uint64_t, std::string> function_index_;
    std::vector<std::uint64_t> function_order_;
    std::vector<Entry> repo_index_;
    std::vector<std::unordered_map<std::uint64_t, std::vector<std::size_t>>> blocks_;
};

}  // namespace curate::code
