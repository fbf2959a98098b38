#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "oazr/tensor.hpp"

namespace oazr {

// Keys are "<action>|<bin_deg>" for viewpoint-specific entries and
// "<action>|*" for orientation-agnostic ones.
std::string orientation_key(const std::string& action, int bin_deg);
std::string wildcard_key(const std::string& action);

// Viewing-side phrase for a bin: 0 front, -180 back, 90 left, -90 right,
// intermediates compound ("front-left", "back-right", ...).
std::string bin_phrase(int bin_deg);

struct ActionDescription {
    std::string action;
    std::optional<int> orientation_bin;  // nullopt = wildcard
    std::string text;
};

// Authored (action, bin) -> description entries; falls back to the template
// composition when an entry is missing.
class DescriptionCatalog {
public:
    void add(const std::string& action, std::optional<int> bin, const std::string& text);
    const std::string* find(const std::string& key) const;
    size_t size() const { return entries_.size(); }
    const std::map<std::string, std::string>& entries() const { return entries_; }

    static DescriptionCatalog load(const std::string& path);
    void save(const std::string& path) const;

private:
    std::map<std::string, std::string> entries_;
};

ActionDescription render_description(const DescriptionCatalog* catalog, const std::string& action,
                                     int orientation_bin);
// Orientation-agnostic description: catalog wildcard entry or "A person <action>."
ActionDescription render_wildcard_description(const DescriptionCatalog* catalog,
                                              const std::string& action);

struct TextEmbedding {
    Tensor t;      // raw embedding
    Tensor t_hat;  // unit-normalized
};

enum class TextSource { exact, wildcard, fallback };

struct TextLookup {
    TextEmbedding embedding;
    TextSource source = TextSource::fallback;
};

// (action, orientation-bin) -> text embedding map ingested from file.
class TextEmbeddingTable {
public:
    int dim = 0;
    std::map<std::string, std::vector<double>> entries;

    const std::vector<double>* find(const std::string& key) const;

    // File format: first line "#dim<TAB><dim>", then "<key><TAB>v1<TAB>...";
    // '#'-prefixed lines after the header are comments.
    static TextEmbeddingTable load(const std::string& path);
    void save(const std::string& path) const;
};

// Deterministic self-contained embedder: character 3-gram multiset hashed into
// a signed-count vector, unit-normalized.
TextEmbedding fallback_embed(const std::string& text, int dim, uint64_t seed);

// Resolution order: exact bin key, wildcard key, then fallback_embed over the
// rendered description. Total by construction.
TextLookup lookup_embedding(const TextEmbeddingTable& table, const DescriptionCatalog* catalog,
                            const std::string& action, int orientation_bin, uint64_t fallback_seed);
// Same but never consults viewpoint-specific entries (stage-1 training).
TextLookup lookup_embedding_wildcard(const TextEmbeddingTable& table,
                                     const DescriptionCatalog* catalog, const std::string& action,
                                     uint64_t fallback_seed);

}  // namespace oazr
