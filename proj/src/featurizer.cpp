#include "routerdc/featurizer.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>

#include "routerdc/types.hpp"

namespace routerdc {

namespace {

std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// FNV-1a over the token bytes, seeded and tagged by token type so that a
// character trigram never collides with a word of the same spelling.
std::uint64_t hash_token(std::uint64_t seed, char tag, const char* data, std::size_t len) {
    std::uint64_t h = 1469598103934665603ull ^ mix64(seed);
    h = (h ^ static_cast<unsigned char>(tag)) * 1099511628211ull;
    for (std::size_t i = 0; i < len; ++i) {
        h = (h ^ static_cast<unsigned char>(data[i])) * 1099511628211ull;
    }
    return mix64(h);
}

}  // namespace

void FeaturizerConfig::validate() const {
    if (hash_dim < 2 || (hash_dim & (hash_dim - 1)) != 0)
        throw ValidationError("hash_dim must be a power of two >= 2");
    for (int order : ngram_orders) {
        if (order < 1) throw ValidationError("n-gram orders must be >= 1");
    }
}

SparseVec featurize(const std::string& text, const FeaturizerConfig& config) {
    config.validate();

    std::string lowered(text);
    std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });

    const std::uint32_t mask = static_cast<std::uint32_t>(config.hash_dim - 1);
    std::map<std::uint32_t, double> accum;

    auto add_token = [&](char tag, const char* data, std::size_t len) {
        std::uint64_t h = hash_token(config.hash_seed, tag, data, len);
        std::uint32_t idx = static_cast<std::uint32_t>(h) & mask;
        double sign = (h >> 63) ? -1.0 : 1.0;
        accum[idx] += sign;
    };

    for (int order : config.ngram_orders) {
        if (lowered.size() < static_cast<std::size_t>(order)) continue;
        for (std::size_t i = 0; i + order <= lowered.size(); ++i) {
            add_token('0' + static_cast<char>(order), lowered.data() + i,
                      static_cast<std::size_t>(order));
        }
    }

    if (config.word_unigrams) {
        std::size_t start = 0;
        while (start < lowered.size()) {
            while (start < lowered.size() && !std::isalnum(static_cast<unsigned char>(lowered[start])))
                ++start;
            std::size_t end = start;
            while (end < lowered.size() && std::isalnum(static_cast<unsigned char>(lowered[end])))
                ++end;
            if (end > start) add_token('w', lowered.data() + start, end - start);
            start = end;
        }
    }

    SparseVec out;
    double norm_sq = 0.0;
    for (const auto& [idx, val] : accum) {
        if (val == 0.0) continue;  // signs cancelled
        out.indices.push_back(idx);
        out.values.push_back(val);
        norm_sq += val * val;
    }
    if (norm_sq > 0.0) {
        double inv = 1.0 / std::sqrt(norm_sq);
        for (double& v : out.values) v *= inv;
    }
    return out;
}

double sparse_cosine(const SparseVec& a, const SparseVec& b) {
    if (a.is_zero() || b.is_zero())
        throw ValidationError("cosine of a zero feature vector is undefined");
    double dot = 0.0, na = 0.0, nb = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.nnz() && j < b.nnz()) {
        if (a.indices[i] == b.indices[j]) {
            dot += a.values[i] * b.values[j];
            ++i;
            ++j;
        } else if (a.indices[i] < b.indices[j]) {
            ++i;
        } else {
            ++j;
        }
    }
    for (double v : a.values) na += v * v;
    for (double v : b.values) nb += v * v;
    double c = dot / std::sqrt(na * nb);
    return std::clamp(c, -1.0, 1.0);
}

}  // namespace routerdc
