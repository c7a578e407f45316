#pragma once

#include <string>

#include "tulpar/model/net.hpp"

namespace tulpar::model {

// Checkpoint file, little-endian: "TLPC" magic, u32 version, the full
// ModelConfig (seven u32 dims + two f64), then a u32 tensor count followed by
// named tensors (u32 name length, name bytes, u32 ndims, u64 dims, row-major
// f32 data).
void save_checkpoint(const Parameters<float>& params, const ModelConfig& cfg,
                     const std::string& path);

struct Checkpoint {
    ModelConfig config;
    Parameters<float> params;
};

// Throws std::runtime_error on malformed files, shape mismatches, or
// non-finite values.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace tulpar::model
