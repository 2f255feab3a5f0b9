#include "routerdc/encoder.hpp"

#include <algorithm>
#include <cmath>

#include "routerdc/types.hpp"

namespace routerdc {

namespace {

// Upcasting views into the flat weight vector.
struct HeadView {
    const float* w1;  // [hash_dim][hidden]
    const float* b1;  // [hidden]
    const float* w2;  // [p][hidden]
    const float* b2;  // [p]
    int hidden;
    int p;

    explicit HeadView(const RouterParameters& params) {
        const EncoderShape& s = params.shape;
        const float* base = params.encoder_weights.data();
        w1 = base;
        b1 = base + s.b1_offset();
        w2 = base + s.w2_offset();
        b2 = base + s.b2_offset();
        hidden = s.hidden_dim;
        p = s.embed_dim;
    }
};

}  // namespace

EncodeCache encode_with_cache(const std::string& text, const RouterParameters& params) {
    EncodeCache cache;
    cache.input = featurize(text, params.featurizer);
    HeadView head(params);

    std::vector<double> z(head.hidden, 0.0);
    for (std::size_t n = 0; n < cache.input.nnz(); ++n) {
        const float* row = head.w1 + static_cast<std::size_t>(cache.input.indices[n]) * head.hidden;
        double x = cache.input.values[n];
        for (int k = 0; k < head.hidden; ++k) z[k] += x * static_cast<double>(row[k]);
    }
    cache.hidden.resize(head.hidden);
    for (int k = 0; k < head.hidden; ++k)
        cache.hidden[k] = std::tanh(z[k] + static_cast<double>(head.b1[k]));

    cache.embedding.assign(head.p, 0.0);
    for (int j = 0; j < head.p; ++j) {
        const float* row = head.w2 + static_cast<std::size_t>(j) * head.hidden;
        double acc = static_cast<double>(head.b2[j]);
        for (int k = 0; k < head.hidden; ++k) acc += static_cast<double>(row[k]) * cache.hidden[k];
        cache.embedding[j] = acc;
    }
    cache.embedding_grad.assign(head.p, 0.0);
    return cache;
}

std::vector<double> encode(const std::string& text, const RouterParameters& params) {
    return encode_with_cache(text, params).embedding;
}

void encode_backward(const EncodeCache& cache, const RouterParameters& params,
                     std::vector<double>& encoder_grad) {
    const EncoderShape& s = params.shape;
    if (encoder_grad.size() != s.total())
        throw ValidationError("encoder gradient buffer has wrong length");
    HeadView head(params);
    const std::vector<double>& g = cache.embedding_grad;

    double* gw1 = encoder_grad.data();
    double* gb1 = encoder_grad.data() + s.b1_offset();
    double* gw2 = encoder_grad.data() + s.w2_offset();
    double* gb2 = encoder_grad.data() + s.b2_offset();

    std::vector<double> dh(head.hidden, 0.0);
    for (int j = 0; j < head.p; ++j) {
        double gj = g[j];
        if (gj == 0.0) continue;
        const float* row = head.w2 + static_cast<std::size_t>(j) * head.hidden;
        double* grow = gw2 + static_cast<std::size_t>(j) * head.hidden;
        for (int k = 0; k < head.hidden; ++k) {
            grow[k] += gj * cache.hidden[k];
            dh[k] += gj * static_cast<double>(row[k]);
        }
        gb2[j] += gj;
    }

    std::vector<double> dz(head.hidden);
    for (int k = 0; k < head.hidden; ++k) {
        dz[k] = dh[k] * (1.0 - cache.hidden[k] * cache.hidden[k]);
        gb1[k] += dz[k];
    }

    for (std::size_t n = 0; n < cache.input.nnz(); ++n) {
        double x = cache.input.values[n];
        double* grow = gw1 + static_cast<std::size_t>(cache.input.indices[n]) * head.hidden;
        for (int k = 0; k < head.hidden; ++k) grow[k] += x * dz[k];
    }
}

double cosine_sim(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ValidationError("cosine_sim dimension mismatch");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0)
        throw ValidationError("cosine similarity undefined for a zero vector");
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

void cosine_backward(std::span<const double> a, std::span<const double> b, double upstream,
                     std::span<double> grad_a, std::span<double> grad_b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0)
        throw ValidationError("cosine gradient undefined for a zero vector");
    double norm_a = std::sqrt(na);
    double norm_b = std::sqrt(nb);
    double inv = 1.0 / (norm_a * norm_b);
    double s = dot * inv;
    for (std::size_t i = 0; i < a.size(); ++i) {
        grad_a[i] += upstream * (b[i] * inv - s * a[i] / na);
        grad_b[i] += upstream * (a[i] * inv - s * b[i] / nb);
    }
}

std::vector<double> similarities(std::span<const double> embedding, const RouterParameters& params) {
    std::vector<double> sims(params.num_llms());
    std::vector<double> k(params.shape.embed_dim);
    for (std::size_t t = 0; t < params.num_llms(); ++t) {
        const auto& emb = params.llm_embeddings[t];
        for (int d = 0; d < params.shape.embed_dim; ++d) k[d] = static_cast<double>(emb[d]);
        sims[t] = cosine_sim(embedding, k);
    }
    return sims;
}

std::vector<double> softmax(std::span<const double> logits) {
    if (logits.empty()) throw ValidationError("softmax over an empty logit set");
    double m = *std::max_element(logits.begin(), logits.end());
    std::vector<double> out(logits.size());
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - m);
        total += out[i];
    }
    for (double& v : out) v /= total;
    return out;
}

std::vector<double> route_distribution(const std::string& text, const RouterParameters& params) {
    std::vector<double> e = encode(text, params);
    bool all_zero = std::all_of(e.begin(), e.end(), [](double v) { return v == 0.0; });
    if (all_zero)
        throw ValidationError(
            "query embedding is the zero vector; reject empty queries before routing");
    return softmax(similarities(e, params));
}

}  // namespace routerdc
