#include "tulpar/model/config.hpp"

#include <stdexcept>

#include <json.hpp>

namespace tulpar::model {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

void ModelConfig::validate() const {
    if (vocab_size < 1) throw std::invalid_argument("vocab_size must be >= 1");
    if (n_layers < 1 || hidden < 1 || n_heads < 1 || n_kv_heads < 1 || intermediate < 1 ||
        context_len < 1) {
        throw std::invalid_argument("all model dimensions must be >= 1");
    }
    if (hidden % n_heads != 0) throw std::invalid_argument("hidden must divide by n_heads");
    if (n_heads % n_kv_heads != 0) {
        throw std::invalid_argument("n_heads must divide by n_kv_heads");
    }
    if (head_dim() % 2 != 0) {
        throw std::invalid_argument("head_dim must be even for rotary embeddings");
    }
    if (norm_eps <= 0 || rope_base <= 0) {
        throw std::invalid_argument("rope_base and norm_eps must be positive");
    }
}

int64_t count_parameters(const ModelConfig& cfg) {
    const int64_t h = cfg.hidden;
    const int64_t attn = 2 * h * h + 2 * h * cfg.kv_dim();
    const int64_t ffn = 3 * h * cfg.intermediate;
    return cfg.vocab_size * h + cfg.n_layers * (attn + ffn + 2 * h) + h;
}

ModelConfig preset(const std::string& name) {
    ModelConfig cfg;
    auto set = [&](int64_t v, int64_t l, int64_t h, int64_t heads, int64_t inter,
                   int64_t ctx) {
        cfg.vocab_size = v;
        cfg.n_layers = l;
        cfg.hidden = h;
        cfg.n_heads = heads;
        cfg.n_kv_heads = heads;
        cfg.intermediate = inter;
        cfg.context_len = ctx;
    };
    if (name == "tiny") set(0, 2, 64, 4, 128, 512);
    else if (name == "50m") set(50257, 8, 576, 8, 1536, 2048);
    else if (name == "150m") set(50257, 16, 768, 12, 2048, 1024);
    else if (name == "300m") set(50257, 18, 1024, 16, 3584, 2048);
    else if (name == "600m") set(50257, 22, 1280, 20, 4480, 2048);
    else throw std::invalid_argument("unknown model preset: " + name);
    return cfg;
}

std::string config_to_json(const ModelConfig& cfg) {
    ordered_json j;
    j["vocab_size"] = cfg.vocab_size;
    j["n_layers"] = cfg.n_layers;
    j["hidden"] = cfg.hidden;
    j["n_heads"] = cfg.n_heads;
    j["n_kv_heads"] = cfg.n_kv_heads;
    j["intermediate"] = cfg.intermediate;
    j["context_len"] = cfg.context_len;
    j["rope_base"] = cfg.rope_base;
    j["norm_eps"] = cfg.norm_eps;
    return j.dump(2) + "\n";
}

ModelConfig config_from_json(const std::string& json_text) {
    const json j = json::parse(json_text);
    ModelConfig cfg;
    cfg.vocab_size = j.value("vocab_size", int64_t{0});
    cfg.n_layers = j.at("n_layers").get<int64_t>();
    cfg.hidden = j.at("hidden").get<int64_t>();
    cfg.n_heads = j.at("n_heads").get<int64_t>();
    cfg.n_kv_heads = j.value("n_kv_heads", cfg.n_heads);
    cfg.intermediate = j.at("intermediate").get<int64_t>();
    cfg.context_len = j.at("context_len").get<int64_t>();
    cfg.rope_base = j.value("rope_base", 10000.0);
    cfg.norm_eps = j.value("norm_eps", 1e-5);
    return cfg;
}

}  // namespace tulpar::model
