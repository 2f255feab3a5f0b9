#include "routerdc/params.hpp"

#include <cmath>
#include <set>

#include "routerdc/types.hpp"

namespace routerdc {

void EncoderShape::validate() const {
    if (hash_dim < 2) throw ValidationError("hash_dim must be >= 2");
    if (hidden_dim < 1) throw ValidationError("hidden_dim must be >= 1");
    if (embed_dim < 1) throw ValidationError("embed_dim (p) must be >= 1");
}

std::size_t RouterParameters::llm_index(const std::string& name) const {
    for (std::size_t i = 0; i < llm_names.size(); ++i) {
        if (llm_names[i] == name) return i;
    }
    throw ValidationError("unknown LLM '" + name + "'");
}

void RouterParameters::validate() const {
    shape.validate();
    featurizer.validate();
    if (featurizer.hash_dim != shape.hash_dim)
        throw ValidationError("featurizer hash_dim does not match encoder shape");
    if (llm_names.empty()) throw ValidationError("parameter set has no LLMs");
    std::set<std::string> names(llm_names.begin(), llm_names.end());
    if (names.size() != llm_names.size()) throw ValidationError("duplicate LLM names in parameters");
    if (encoder_weights.size() != shape.total())
        throw ValidationError("encoder weight vector has wrong length");
    if (llm_embeddings.size() != llm_names.size())
        throw ValidationError("embedding count does not match LLM name count");
    for (float w : encoder_weights) {
        if (!std::isfinite(w)) throw ValidationError("non-finite encoder weight");
    }
    for (std::size_t t = 0; t < llm_embeddings.size(); ++t) {
        const auto& k = llm_embeddings[t];
        if (k.size() != static_cast<std::size_t>(shape.embed_dim))
            throw ValidationError("embedding for '" + llm_names[t] + "' has wrong dimension");
        bool all_zero = true;
        for (float v : k) {
            if (!std::isfinite(v)) throw ValidationError("non-finite embedding value for '" + llm_names[t] + "'");
            if (v != 0.0f) all_zero = false;
        }
        if (all_zero)
            throw ValidationError("embedding for '" + llm_names[t] +
                                  "' is the zero vector (cosine similarity undefined)");
    }
}

RouterParameters init_router_parameters(const EncoderShape& shape, const FeaturizerConfig& featurizer,
                                        const std::vector<std::string>& llm_names, std::uint64_t seed) {
    shape.validate();
    RouterParameters params;
    params.shape = shape;
    params.featurizer = featurizer;
    params.llm_names = llm_names;
    params.encoder_weights.assign(shape.total(), 0.0f);

    Rng rng(seed);
    // Inputs are unit-norm, so W1 rows can use a fixed modest range; W2 scales
    // with the hidden fan-in.
    const double r1 = 0.5;
    const double r2 = std::sqrt(3.0 / shape.hidden_dim);
    for (std::size_t i = 0; i < shape.w1_size(); ++i)
        params.encoder_weights[i] = static_cast<float>(rng.uniform(-r1, r1));
    // b1 stays zero.
    for (std::size_t i = shape.w2_offset(); i < shape.b2_offset(); ++i)
        params.encoder_weights[i] = static_cast<float>(rng.uniform(-r2, r2));
    // b2 stays zero.

    params.llm_embeddings.resize(llm_names.size());
    for (auto& k : params.llm_embeddings) {
        k.resize(shape.embed_dim);
        bool all_zero = true;
        do {
            all_zero = true;
            for (int d = 0; d < shape.embed_dim; ++d) {
                k[d] = static_cast<float>(rng.uniform(-0.1, 0.1));
                if (k[d] != 0.0f) all_zero = false;
            }
        } while (all_zero);
    }
    params.validate();
    return params;
}

std::vector<double> pack_parameters(const RouterParameters& params) {
    std::vector<double> flat;
    flat.reserve(total_parameter_count(params));
    for (float w : params.encoder_weights) flat.push_back(static_cast<double>(w));
    for (const auto& k : params.llm_embeddings)
        for (float v : k) flat.push_back(static_cast<double>(v));
    return flat;
}

void unpack_parameters(const std::vector<double>& flat, RouterParameters& params) {
    if (flat.size() != total_parameter_count(params))
        throw ValidationError("flat parameter vector has wrong length");
    std::size_t pos = 0;
    for (float& w : params.encoder_weights) w = static_cast<float>(flat[pos++]);
    for (auto& k : params.llm_embeddings)
        for (float& v : k) v = static_cast<float>(flat[pos++]);
}

std::size_t total_parameter_count(const RouterParameters& params) {
    return params.encoder_weights.size() +
           params.llm_embeddings.size() * static_cast<std::size_t>(params.shape.embed_dim);
}

GradientBuffer::GradientBuffer(const RouterParameters& params)
    : encoder(params.encoder_weights.size(), 0.0),
      embeddings(params.llm_embeddings.size(), std::vector<double>(params.shape.embed_dim, 0.0)) {}

void GradientBuffer::reset() {
    std::fill(encoder.begin(), encoder.end(), 0.0);
    for (auto& k : embeddings) std::fill(k.begin(), k.end(), 0.0);
}

std::vector<double> GradientBuffer::pack() const {
    std::vector<double> flat;
    flat.reserve(encoder.size() + (embeddings.empty() ? 0 : embeddings.size() * embeddings[0].size()));
    flat.insert(flat.end(), encoder.begin(), encoder.end());
    for (const auto& k : embeddings) flat.insert(flat.end(), k.begin(), k.end());
    return flat;
}

bool GradientBuffer::all_finite() const {
    for (double g : encoder)
        if (!std::isfinite(g)) return false;
    for (const auto& k : embeddings)
        for (double g : k)
            if (!std::isfinite(g)) return false;
    return true;
}

}  // namespace routerdc
