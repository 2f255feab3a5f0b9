#pragma once

#include <span>
#include <string>
#include <vector>

#include "routerdc/featurizer.hpp"
#include "routerdc/params.hpp"

namespace routerdc {

// Forward-pass record for one text: everything the backward pass needs, plus
// an accumulator for dLoss/dEmbedding contributions from any number of loss
// terms touching this embedding.
struct EncodeCache {
    SparseVec input;
    std::vector<double> hidden;     // tanh activations
    std::vector<double> embedding;  // output in R^p
    std::vector<double> embedding_grad;
};

// Maps text to an embedding in R^p through the frozen featurizer and the
// trainable head. Deterministic given parameters.
std::vector<double> encode(const std::string& text, const RouterParameters& params);
EncodeCache encode_with_cache(const std::string& text, const RouterParameters& params);

// Accumulates d(loss)/d(encoder weights) for the cached forward pass given the
// cache's accumulated embedding gradient.
void encode_backward(const EncodeCache& cache, const RouterParameters& params,
                     std::vector<double>& encoder_grad);

// Cosine similarity clamped to [-1, 1]; both vectors must be nonzero.
double cosine_sim(std::span<const double> a, std::span<const double> b);

// Accumulates upstream * d(sim)/d(a|b) into the given gradient spans.
void cosine_backward(std::span<const double> a, std::span<const double> b, double upstream,
                     std::span<double> grad_a, std::span<double> grad_b);

// Similarities of an embedding against every LLM embedding.
std::vector<double> similarities(std::span<const double> embedding, const RouterParameters& params);

// Numerically stable softmax; entries positive, summing to 1.
std::vector<double> softmax(std::span<const double> logits);

// Selection distribution over the T LLMs: softmax of the cosine similarities.
// Rejects queries whose embedding is the zero vector (e.g. empty text).
std::vector<double> route_distribution(const std::string& text, const RouterParameters& params);

}  // namespace routerdc
