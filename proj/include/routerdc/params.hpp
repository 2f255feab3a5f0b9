#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "routerdc/featurizer.hpp"
#include "routerdc/rng.hpp"

namespace routerdc {

// Layer sizes of the trainable projection head: hash_dim -> hidden -> p with
// tanh on the hidden layer. The flat weight vector is laid out as
// [W1 (hash_dim x hidden, row per feature), b1 (hidden), W2 (p x hidden), b2 (p)].
struct EncoderShape {
    int hash_dim = 4096;
    int hidden_dim = 256;
    int embed_dim = 768;  // p

    std::size_t w1_size() const { return static_cast<std::size_t>(hash_dim) * hidden_dim; }
    std::size_t b1_offset() const { return w1_size(); }
    std::size_t w2_offset() const { return w1_size() + hidden_dim; }
    std::size_t b2_offset() const { return w2_offset() + static_cast<std::size_t>(embed_dim) * hidden_dim; }
    std::size_t total() const { return b2_offset() + embed_dim; }

    void validate() const;
    bool operator==(const EncoderShape&) const = default;
};

// The trainable state theta: projection-head weights w plus one embedding k_t
// per LLM. Values are stored as 32-bit floats so checkpoints round-trip
// bit-exactly; all arithmetic upcasts to double.
struct RouterParameters {
    EncoderShape shape;
    FeaturizerConfig featurizer;
    std::vector<std::string> llm_names;
    std::vector<float> encoder_weights;             // shape.total()
    std::vector<std::vector<float>> llm_embeddings; // T x embed_dim

    std::size_t num_llms() const { return llm_names.size(); }
    std::size_t llm_index(const std::string& name) const;  // throws if absent

    void validate() const;
};

// Seeded initialization: head weights uniform in fan-in-scaled ranges, biases
// zero, LLM embeddings uniform in [-0.1, 0.1] with exact-zero vectors redrawn.
RouterParameters init_router_parameters(const EncoderShape& shape, const FeaturizerConfig& featurizer,
                                        const std::vector<std::string>& llm_names, std::uint64_t seed);

// Flat double views used by the optimizer and by finite-difference tests.
std::vector<double> pack_parameters(const RouterParameters& params);
void unpack_parameters(const std::vector<double>& flat, RouterParameters& params);
std::size_t total_parameter_count(const RouterParameters& params);

// Gradient accumulator mirroring the parameter layout.
struct GradientBuffer {
    std::vector<double> encoder;                   // shape.total()
    std::vector<std::vector<double>> embeddings;   // T x embed_dim

    explicit GradientBuffer(const RouterParameters& params);
    void reset();
    std::vector<double> pack() const;
    bool all_finite() const;
};

}  // namespace routerdc
