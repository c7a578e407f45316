#pragma once

#include <cstdint>
#include <string>

namespace tulpar::model {

// Decoder-only transformer hyperparameters. vocab_size == 0 means "inherit
// from the tokenizer / block file at load time".
struct ModelConfig {
    int64_t vocab_size = 0;
    int64_t n_layers = 0;
    int64_t hidden = 0;
    int64_t n_heads = 0;
    int64_t n_kv_heads = 0;
    int64_t intermediate = 0;
    int64_t context_len = 0;
    double rope_base = 10000.0;
    double norm_eps = 1e-5;

    int64_t head_dim() const { return hidden / n_heads; }
    int64_t kv_dim() const { return n_kv_heads * head_dim(); }
    void validate() const;  // throws std::invalid_argument
};

// Closed-form parameter count, no biases, tied embeddings:
//   vocab*h + L*(2h^2 + 2h*kv + 3h*intermediate + 2h) + h
int64_t count_parameters(const ModelConfig& cfg);

// Named presets: tiny (desk-scale smoke runs) and the 50m/150m/300m/600m
// family. Throws on unknown name.
ModelConfig preset(const std::string& name);

std::string config_to_json(const ModelConfig& cfg);
ModelConfig config_from_json(const std::string& json_text);

}  // namespace tulpar::model
