#include "oazr/textbank.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "oazr/error.hpp"
#include "oazr/geometry.hpp"
#include "oazr/rng.hpp"

namespace oazr {

namespace {

bool valid_bin(int bin_deg) {
    return std::find(kOrientationBins.begin(), kOrientationBins.end(), bin_deg) !=
           kOrientationBins.end();
}

void check_key_part(const std::string& s, const char* what) {
    if (s.empty()) throw std::invalid_argument(std::string(what) + " must be non-empty");
    if (s.find('\t') != std::string::npos || s.find('\n') != std::string::npos ||
        s.find('|') != std::string::npos)
        throw std::invalid_argument(std::string(what) + " contains a reserved character");
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

std::string orientation_key(const std::string& action, int bin_deg) {
    check_key_part(action, "action");
    if (!valid_bin(bin_deg)) throw std::invalid_argument("orientation_key: not a valid bin");
    return action + "|" + std::to_string(bin_deg);
}

std::string wildcard_key(const std::string& action) {
    check_key_part(action, "action");
    return action + "|*";
}

std::string bin_phrase(int bin_deg) {
    if (!valid_bin(bin_deg)) throw std::invalid_argument("bin_phrase: not a valid bin");
    switch (bin_deg) {
        case 0: return "front";
        case -180: return "back";
        case 90: return "left";
        case -90: return "right";
        case 30:
        case 60: return "front-left";
        case 120:
        case 150: return "back-left";
        case -30:
        case -60: return "front-right";
        default: return "back-right";  // -120, -150
    }
}

void DescriptionCatalog::add(const std::string& action, std::optional<int> bin,
                             const std::string& text) {
    if (text.empty()) throw std::invalid_argument("catalog: empty description");
    if (text.find('\t') != std::string::npos || text.find('\n') != std::string::npos)
        throw std::invalid_argument("catalog: description contains tab or newline");
    const std::string key = bin ? orientation_key(action, *bin) : wildcard_key(action);
    if (!entries_.emplace(key, text).second)
        throw std::invalid_argument("catalog: duplicate key " + key);
}

const std::string* DescriptionCatalog::find(const std::string& key) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? nullptr : &it->second;
}

DescriptionCatalog DescriptionCatalog::load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("catalog: cannot open " + path);
    DescriptionCatalog cat;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        const size_t tab = line.find('\t');
        if (tab == std::string::npos) throw ParseError("catalog: missing tab separator", lineno);
        const std::string key = line.substr(0, tab);
        const std::string text = line.substr(tab + 1);
        const size_t bar = key.rfind('|');
        if (bar == std::string::npos || bar == 0) throw ParseError("catalog: bad key " + key, lineno);
        const std::string action = key.substr(0, bar);
        const std::string bin_str = key.substr(bar + 1);
        try {
            if (bin_str == "*") {
                cat.add(action, std::nullopt, text);
            } else {
                const int bin = std::stoi(bin_str);
                if (!valid_bin(bin)) throw std::invalid_argument("bad bin");
                cat.add(action, bin, text);
            }
        } catch (const std::exception& e) {
            throw ParseError(std::string("catalog: ") + e.what(), lineno);
        }
    }
    return cat;
}

void DescriptionCatalog::save(const std::string& path) const {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("catalog: cannot open for writing " + path);
    f << "# action description catalog: <action>|<bin or *><TAB><text>\n";
    for (const auto& [key, text] : entries_) f << key << "\t" << text << "\n";
    if (!f) throw std::runtime_error("catalog: write failed " + path);
}

ActionDescription render_description(const DescriptionCatalog* catalog, const std::string& action,
                                     int orientation_bin) {
    if (action.empty()) throw std::invalid_argument("render_description: empty action");
    if (!valid_bin(orientation_bin))
        throw std::invalid_argument("render_description: not a valid bin");
    if (catalog) {
        if (const std::string* t = catalog->find(orientation_key(action, orientation_bin)))
            return {action, orientation_bin, *t};
        if (const std::string* t = catalog->find(wildcard_key(action)))
            return {action, orientation_bin, *t};
    }
    return {action, orientation_bin,
            "A person " + action + ", seen from the " + bin_phrase(orientation_bin) + " side."};
}

ActionDescription render_wildcard_description(const DescriptionCatalog* catalog,
                                              const std::string& action) {
    if (action.empty()) throw std::invalid_argument("render_description: empty action");
    if (catalog)
        if (const std::string* t = catalog->find(wildcard_key(action)))
            return {action, std::nullopt, *t};
    return {action, std::nullopt, "A person " + action + "."};
}

const std::vector<double>* TextEmbeddingTable::find(const std::string& key) const {
    auto it = entries.find(key);
    return it == entries.end() ? nullptr : &it->second;
}

TextEmbeddingTable TextEmbeddingTable::load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("embedding table: cannot open " + path);
    TextEmbeddingTable table;
    std::string line;
    int lineno = 0;

    if (!std::getline(f, line)) throw ParseError("embedding table: empty file", 1);
    ++lineno;
    {
        std::istringstream hs(line);
        std::string tag;
        if (!std::getline(hs, tag, '\t') || tag != "#dim")
            throw ParseError("embedding table: header must start with '#dim<TAB><dim>'", lineno);
        std::string dim_str;
        if (!std::getline(hs, dim_str, '\t')) throw ParseError("embedding table: missing dim", lineno);
        try {
            table.dim = std::stoi(dim_str);
        } catch (const std::exception&) {
            throw ParseError("embedding table: bad dim value", lineno);
        }
        if (table.dim < 1) throw ParseError("embedding table: dim must be >= 1", lineno);
    }

    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string key;
        if (!std::getline(ls, key, '\t') || key.empty())
            throw ParseError("embedding table: missing key", lineno);
        std::vector<double> vec;
        vec.reserve(static_cast<size_t>(table.dim));
        std::string tok;
        while (std::getline(ls, tok, '\t')) {
            try {
                size_t used = 0;
                const double v = std::stod(tok, &used);
                if (used != tok.size()) throw std::invalid_argument("trailing characters");
                vec.push_back(v);
            } catch (const std::exception&) {
                throw ParseError("embedding table: bad float '" + tok + "'", lineno);
            }
        }
        if (static_cast<int>(vec.size()) != table.dim)
            throw ParseError("embedding table: row has " + std::to_string(vec.size()) +
                                 " values, expected " + std::to_string(table.dim),
                             lineno);
        for (double v : vec)
            if (!std::isfinite(v)) throw ParseError("embedding table: non-finite value", lineno);
        if (!table.entries.emplace(key, std::move(vec)).second)
            throw ParseError("embedding table: duplicate key " + key, lineno);
    }
    return table;
}

void TextEmbeddingTable::save(const std::string& path) const {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("embedding table: cannot open for writing " + path);
    f << "#dim\t" << dim << "\n";
    for (const auto& [key, vec] : entries) {
        f << key;
        for (double v : vec) f << "\t" << format_double(v);
        f << "\n";
    }
    if (!f) throw std::runtime_error("embedding table: write failed " + path);
}

TextEmbedding fallback_embed(const std::string& text, int dim, uint64_t seed) {
    if (text.empty()) throw std::invalid_argument("fallback_embed: empty text");
    if (dim < 1) throw std::invalid_argument("fallback_embed: dim must be >= 1");
    Tensor v = Tensor::zeros({dim});
    auto bump = [&](const char* s, size_t n) {
        const uint64_t h = hash_bytes(s, n, seed);
        const size_t idx = static_cast<size_t>(h % static_cast<uint64_t>(dim));
        v.data[idx] += ((h >> 32) & 1) ? 1.0 : -1.0;
    };
    if (text.size() < 3) {
        bump(text.data(), text.size());
    } else {
        for (size_t i = 0; i + 3 <= text.size(); ++i) bump(text.data() + i, 3);
    }
    const double n = l2_norm(v);
    if (n < 1e-12) throw DegenerateInput("fallback_embed: hashed grams cancelled to zero");
    TextEmbedding e;
    e.t = v;
    for (double& x : v.data) x /= n;
    e.t_hat = std::move(v);
    return e;
}

namespace {
TextEmbedding normalize_entry(const std::vector<double>& raw) {
    Tensor t({static_cast<int>(raw.size())}, raw);
    const double n = l2_norm(t);
    if (n < 1e-12) throw DegenerateInput("text embedding: zero-norm table entry");
    TextEmbedding e;
    e.t = t;
    for (double& x : t.data) x /= n;
    e.t_hat = std::move(t);
    return e;
}
}  // namespace

TextLookup lookup_embedding(const TextEmbeddingTable& table, const DescriptionCatalog* catalog,
                            const std::string& action, int orientation_bin, uint64_t fallback_seed) {
    if (const std::vector<double>* v = table.find(orientation_key(action, orientation_bin)))
        return {normalize_entry(*v), TextSource::exact};
    if (const std::vector<double>* v = table.find(wildcard_key(action)))
        return {normalize_entry(*v), TextSource::wildcard};
    const ActionDescription d = render_description(catalog, action, orientation_bin);
    return {fallback_embed(d.text, table.dim, fallback_seed), TextSource::fallback};
}

TextLookup lookup_embedding_wildcard(const TextEmbeddingTable& table,
                                     const DescriptionCatalog* catalog, const std::string& action,
                                     uint64_t fallback_seed) {
    if (const std::vector<double>* v = table.find(wildcard_key(action)))
        return {normalize_entry(*v), TextSource::wildcard};
    const ActionDescription d = render_wildcard_description(catalog, action);
    return {fallback_embed(d.text, table.dim, fallback_seed), TextSource::fallback};
}

}  // namespace oazr
