#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace routerdc {

struct FeaturizerConfig {
    int hash_dim = 4096;  // must be a power of two
    std::vector<int> ngram_orders = {2, 3, 4};
    bool word_unigrams = true;
    std::uint64_t hash_seed = 9781;

    void validate() const;
};

// Sparse unit-norm feature vector, entries sorted by index.
struct SparseVec {
    std::vector<std::uint32_t> indices;
    std::vector<double> values;

    std::size_t nnz() const { return indices.size(); }
    bool is_zero() const { return indices.empty(); }
};

// Signed-hash accumulation of character n-grams and word unigrams, then L2
// normalization. Deterministic given the config; empty text maps to the zero
// vector.
SparseVec featurize(const std::string& text, const FeaturizerConfig& config);

double sparse_cosine(const SparseVec& a, const SparseVec& b);

}  // namespace routerdc
