#include "routerdc/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace routerdc {

namespace {

using nlohmann::json;

constexpr char kB64Alphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string base64_encode(const unsigned char* data, std::size_t len) {
    std::string out;
    out.reserve((len + 2) / 3 * 4);
    for (std::size_t i = 0; i < len; i += 3) {
        std::uint32_t chunk = static_cast<std::uint32_t>(data[i]) << 16;
        if (i + 1 < len) chunk |= static_cast<std::uint32_t>(data[i + 1]) << 8;
        if (i + 2 < len) chunk |= static_cast<std::uint32_t>(data[i + 2]);
        out.push_back(kB64Alphabet[(chunk >> 18) & 63]);
        out.push_back(kB64Alphabet[(chunk >> 12) & 63]);
        out.push_back(i + 1 < len ? kB64Alphabet[(chunk >> 6) & 63] : '=');
        out.push_back(i + 2 < len ? kB64Alphabet[chunk & 63] : '=');
    }
    return out;
}

std::vector<unsigned char> base64_decode(const std::string& text, const std::string& field) {
    static int lookup[256];
    static bool init = [] {
        for (int i = 0; i < 256; ++i) lookup[i] = -1;
        for (int i = 0; i < 64; ++i) lookup[static_cast<unsigned char>(kB64Alphabet[i])] = i;
        return true;
    }();
    (void)init;
    if (text.size() % 4 != 0)
        throw ValidationError("corrupt checkpoint: field '" + field + "' has truncated base64 payload");
    std::vector<unsigned char> out;
    out.reserve(text.size() / 4 * 3);
    for (std::size_t i = 0; i < text.size(); i += 4) {
        std::uint32_t chunk = 0;
        int pad = 0;
        for (int j = 0; j < 4; ++j) {
            char c = text[i + j];
            if (c == '=') {
                if (i + 4 != text.size() || j < 2)
                    throw ValidationError("corrupt checkpoint: field '" + field + "' has malformed base64 padding");
                ++pad;
                chunk <<= 6;
                continue;
            }
            int v = lookup[static_cast<unsigned char>(c)];
            if (v < 0)
                throw ValidationError("corrupt checkpoint: field '" + field + "' has invalid base64 character");
            if (pad > 0)
                throw ValidationError("corrupt checkpoint: field '" + field + "' has data after padding");
            chunk = (chunk << 6) | static_cast<std::uint32_t>(v);
        }
        out.push_back(static_cast<unsigned char>((chunk >> 16) & 0xff));
        if (pad < 2) out.push_back(static_cast<unsigned char>((chunk >> 8) & 0xff));
        if (pad < 1) out.push_back(static_cast<unsigned char>(chunk & 0xff));
    }
    return out;
}

std::string encode_f32le(const std::vector<float>& values) {
    std::vector<unsigned char> bytes(values.size() * 4);
    for (std::size_t i = 0; i < values.size(); ++i) {
        std::uint32_t bits;
        std::memcpy(&bits, &values[i], 4);
        bytes[4 * i + 0] = static_cast<unsigned char>(bits & 0xff);
        bytes[4 * i + 1] = static_cast<unsigned char>((bits >> 8) & 0xff);
        bytes[4 * i + 2] = static_cast<unsigned char>((bits >> 16) & 0xff);
        bytes[4 * i + 3] = static_cast<unsigned char>((bits >> 24) & 0xff);
    }
    return base64_encode(bytes.data(), bytes.size());
}

std::vector<float> decode_f32le(const std::string& b64, std::size_t expected_count,
                                const std::string& field) {
    std::vector<unsigned char> bytes = base64_decode(b64, field);
    if (bytes.size() != expected_count * 4)
        throw ValidationError("corrupt checkpoint: field '" + field + "' holds " +
                              std::to_string(bytes.size() / 4) + " floats, declared shape needs " +
                              std::to_string(expected_count));
    std::vector<float> values(expected_count);
    for (std::size_t i = 0; i < expected_count; ++i) {
        std::uint32_t bits = static_cast<std::uint32_t>(bytes[4 * i + 0]) |
                             (static_cast<std::uint32_t>(bytes[4 * i + 1]) << 8) |
                             (static_cast<std::uint32_t>(bytes[4 * i + 2]) << 16) |
                             (static_cast<std::uint32_t>(bytes[4 * i + 3]) << 24);
        std::memcpy(&values[i], &bits, 4);
    }
    return values;
}

json train_config_to_json(const TrainConfig& c) {
    return json{{"k_plus", c.k_plus},
                {"k_minus", c.k_minus},
                {"h_out_group", c.h_out_group},
                {"lambda", c.lambda},
                {"num_groups", c.num_groups},
                {"batch_size", c.batch_size},
                {"learning_rate", c.learning_rate},
                {"weight_decay", c.weight_decay},
                {"steps", c.steps},
                {"adam_beta1", c.adam_beta1},
                {"adam_beta2", c.adam_beta2},
                {"adam_epsilon", c.adam_epsilon},
                {"seed", c.seed},
                {"loss_mode", to_string(c.loss_mode)},
                {"kl_direction", to_string(c.kl_direction)},
                {"cost_weight", c.cost_weight}};
}

TrainConfig train_config_from_json(const json& j) {
    TrainConfig c;
    c.k_plus = j.at("k_plus").get<int>();
    c.k_minus = j.at("k_minus").get<int>();
    c.h_out_group = j.at("h_out_group").get<int>();
    c.lambda = j.at("lambda").get<double>();
    c.num_groups = j.at("num_groups").get<int>();
    c.batch_size = j.at("batch_size").get<int>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.weight_decay = j.at("weight_decay").get<double>();
    c.steps = j.at("steps").get<int>();
    c.adam_beta1 = j.at("adam_beta1").get<double>();
    c.adam_beta2 = j.at("adam_beta2").get<double>();
    c.adam_epsilon = j.at("adam_epsilon").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.loss_mode = loss_mode_from_string(j.at("loss_mode").get<std::string>());
    c.kl_direction = kl_direction_from_string(j.at("kl_direction").get<std::string>());
    c.cost_weight = j.at("cost_weight").get<double>();
    return c;
}

}  // namespace

std::string checkpoint_to_string(const Checkpoint& ckpt) {
    ckpt.params.validate();
    ckpt.train_config.validate();

    const auto& p = ckpt.params;
    std::vector<float> flat_embeddings;
    flat_embeddings.reserve(p.llm_embeddings.size() * p.shape.embed_dim);
    for (const auto& k : p.llm_embeddings)
        flat_embeddings.insert(flat_embeddings.end(), k.begin(), k.end());

    json doc{
        {"format_version", ckpt.format_version},
        {"metadata", {{"tool", ckpt.tool}, {"tool_version", ckpt.tool_version}}},
        {"rng_seed", ckpt.rng_seed},
        {"train_config", train_config_to_json(ckpt.train_config)},
        {"router_parameters",
         {{"embed_dim", p.shape.embed_dim},
          {"hidden_dim", p.shape.hidden_dim},
          {"featurizer",
           {{"hash_dim", p.featurizer.hash_dim},
            {"ngram_orders", p.featurizer.ngram_orders},
            {"word_unigrams", p.featurizer.word_unigrams},
            {"hash_seed", p.featurizer.hash_seed}}},
          {"llm_names", p.llm_names},
          {"encoder_weights",
           {{"count", p.encoder_weights.size()}, {"dtype", "f32le"}, {"data", encode_f32le(p.encoder_weights)}}},
          {"llm_embeddings",
           {{"shape", {p.llm_embeddings.size(), p.shape.embed_dim}},
            {"dtype", "f32le"},
            {"data", encode_f32le(flat_embeddings)}}}}}};
    return doc.dump(2) + "\n";
}

Checkpoint checkpoint_from_string(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("corrupt checkpoint: not valid JSON: ") + e.what());
    }
    Checkpoint ckpt;
    try {
        ckpt.format_version = doc.at("format_version").get<int>();
        if (ckpt.format_version != kCheckpointFormatVersion)
            throw ValidationError("checkpoint format_version " + std::to_string(ckpt.format_version) +
                                  " does not match supported version " +
                                  std::to_string(kCheckpointFormatVersion));
        const json& meta = doc.at("metadata");
        ckpt.tool = meta.at("tool").get<std::string>();
        ckpt.tool_version = meta.at("tool_version").get<std::string>();
        ckpt.rng_seed = doc.at("rng_seed").get<std::uint64_t>();
        ckpt.train_config = train_config_from_json(doc.at("train_config"));

        const json& rp = doc.at("router_parameters");
        RouterParameters& p = ckpt.params;
        p.shape.embed_dim = rp.at("embed_dim").get<int>();
        p.shape.hidden_dim = rp.at("hidden_dim").get<int>();
        const json& feat = rp.at("featurizer");
        p.featurizer.hash_dim = feat.at("hash_dim").get<int>();
        p.featurizer.ngram_orders = feat.at("ngram_orders").get<std::vector<int>>();
        p.featurizer.word_unigrams = feat.at("word_unigrams").get<bool>();
        p.featurizer.hash_seed = feat.at("hash_seed").get<std::uint64_t>();
        p.shape.hash_dim = p.featurizer.hash_dim;
        p.llm_names = rp.at("llm_names").get<std::vector<std::string>>();

        const json& ew = rp.at("encoder_weights");
        std::size_t count = ew.at("count").get<std::size_t>();
        if (ew.at("dtype").get<std::string>() != "f32le")
            throw ValidationError("corrupt checkpoint: field 'encoder_weights' has unsupported dtype");
        if (count != p.shape.total())
            throw ValidationError("corrupt checkpoint: field 'encoder_weights' count " +
                                  std::to_string(count) + " does not match shape total " +
                                  std::to_string(p.shape.total()));
        p.encoder_weights = decode_f32le(ew.at("data").get<std::string>(), count, "encoder_weights");

        const json& le = rp.at("llm_embeddings");
        auto shape = le.at("shape").get<std::vector<std::size_t>>();
        if (shape.size() != 2 || shape[0] != p.llm_names.size() ||
            shape[1] != static_cast<std::size_t>(p.shape.embed_dim))
            throw ValidationError("corrupt checkpoint: field 'llm_embeddings' shape mismatch");
        if (le.at("dtype").get<std::string>() != "f32le")
            throw ValidationError("corrupt checkpoint: field 'llm_embeddings' has unsupported dtype");
        std::vector<float> flat =
            decode_f32le(le.at("data").get<std::string>(), shape[0] * shape[1], "llm_embeddings");
        p.llm_embeddings.assign(shape[0], std::vector<float>(shape[1]));
        for (std::size_t t = 0; t < shape[0]; ++t)
            std::copy(flat.begin() + static_cast<std::ptrdiff_t>(t * shape[1]),
                      flat.begin() + static_cast<std::ptrdiff_t>((t + 1) * shape[1]),
                      p.llm_embeddings[t].begin());
    } catch (const json::exception& e) {
        throw ValidationError(std::string("corrupt checkpoint: ") + e.what());
    }
    ckpt.params.validate();
    return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    std::string payload = checkpoint_to_string(ckpt);  // validates before any I/O
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open '" + tmp + "' for writing");
        out << payload;
        if (!out) {
            out.close();
            std::remove(tmp.c_str());
            throw std::runtime_error("write to '" + tmp + "' failed");
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::remove(tmp.c_str());
        throw std::runtime_error("cannot move checkpoint into place at '" + path + "': " + ec.message());
    }
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return checkpoint_from_string(buf.str());
}

std::string checkpoint_id(const RouterParameters& params) {
    // FNV-1a over the raw little-endian parameter bytes.
    std::uint64_t h = 1469598103934665603ull;
    auto feed = [&h](const float* data, std::size_t count) {
        for (std::size_t i = 0; i < count; ++i) {
            std::uint32_t bits;
            std::memcpy(&bits, &data[i], 4);
            for (int b = 0; b < 4; ++b) {
                h = (h ^ ((bits >> (8 * b)) & 0xff)) * 1099511628211ull;
            }
        }
    };
    feed(params.encoder_weights.data(), params.encoder_weights.size());
    for (const auto& k : params.llm_embeddings) feed(k.data(), k.size());
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

}  // namespace routerdc
