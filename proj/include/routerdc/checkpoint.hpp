#pragma once

#include <cstdint>
#include <string>

#include "routerdc/params.hpp"
#include "routerdc/types.hpp"

namespace routerdc {

inline constexpr int kCheckpointFormatVersion = 1;

struct Checkpoint {
    int format_version = kCheckpointFormatVersion;
    RouterParameters params;
    TrainConfig train_config;
    std::uint64_t rng_seed = 0;
    // Deterministic provenance: no timestamps, so identical runs produce
    // byte-identical files.
    std::string tool = "routerdc";
    std::string tool_version = "0.1.0";
};

// Serializes to a single JSON document with parameter tensors encoded as
// base64 little-endian 32-bit floats. Save validates first and writes through
// a temp file so a failure never leaves a partial checkpoint behind.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

std::string checkpoint_to_string(const Checkpoint& ckpt);
Checkpoint checkpoint_from_string(const std::string& text);

// Short content hash of the parameter tensors, reported by eval and /health.
std::string checkpoint_id(const RouterParameters& params);

}  // namespace routerdc
