#include "tulpar/model/checkpoint.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "tulpar/io/atomic_file.hpp"

namespace tulpar::model {

namespace {

constexpr char kMagic[4] = {'T', 'L', 'P', 'C'};

void put_u32(std::ostream& out, uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& out, uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
}

void put_f64(std::ostream& out, double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(out, bits);
}

uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (in.gcount() != 4) throw std::runtime_error("truncated checkpoint");
    uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
    return v;
}

uint64_t get_u64(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    if (in.gcount() != 8) throw std::runtime_error("truncated checkpoint");
    uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
}

double get_f64(std::istream& in) {
    const uint64_t bits = get_u64(in);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

void put_tensor(std::ostream& out, const std::string& name, const float* data,
                uint64_t rows, uint64_t cols) {
    put_u32(out, static_cast<uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    if (cols == 1) {
        put_u32(out, 1);
        put_u64(out, rows);
    } else {
        put_u32(out, 2);
        put_u64(out, rows);
        put_u64(out, cols);
    }
    // Row-major float32, little-endian; matches in-memory layout here.
    out.write(reinterpret_cast<const char*>(data),
              static_cast<std::streamsize>(rows * cols * sizeof(float)));
}

}  // namespace

void save_checkpoint(const Parameters<float>& params, const ModelConfig& cfg,
                     const std::string& path) {
    const std::string temp = io::temp_path_for(path);
    {
        std::ofstream out(temp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write checkpoint: " + temp);
        out.write(kMagic, 4);
        put_u32(out, 1);  // version
        put_u32(out, static_cast<uint32_t>(cfg.vocab_size));
        put_u32(out, static_cast<uint32_t>(cfg.n_layers));
        put_u32(out, static_cast<uint32_t>(cfg.hidden));
        put_u32(out, static_cast<uint32_t>(cfg.n_heads));
        put_u32(out, static_cast<uint32_t>(cfg.n_kv_heads));
        put_u32(out, static_cast<uint32_t>(cfg.intermediate));
        put_u32(out, static_cast<uint32_t>(cfg.context_len));
        put_f64(out, cfg.rope_base);
        put_f64(out, cfg.norm_eps);

        auto refs = tensor_refs(const_cast<Parameters<float>&>(params));
        put_u32(out, static_cast<uint32_t>(refs.size()));
        for (const auto& ref : refs) {
            put_tensor(out, ref.name, ref.data, static_cast<uint64_t>(ref.rows),
                       static_cast<uint64_t>(ref.cols));
        }
        out.flush();
        if (!out) throw std::runtime_error("short write: " + temp);
    }
    io::rename_into_place(temp, path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    char magic[4];
    in.read(magic, 4);
    if (in.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0) {
        throw std::runtime_error("not a checkpoint file: " + path);
    }
    if (get_u32(in) != 1) throw std::runtime_error("unsupported checkpoint version");

    Checkpoint ckpt;
    ckpt.config.vocab_size = get_u32(in);
    ckpt.config.n_layers = get_u32(in);
    ckpt.config.hidden = get_u32(in);
    ckpt.config.n_heads = get_u32(in);
    ckpt.config.n_kv_heads = get_u32(in);
    ckpt.config.intermediate = get_u32(in);
    ckpt.config.context_len = get_u32(in);
    ckpt.config.rope_base = get_f64(in);
    ckpt.config.norm_eps = get_f64(in);
    ckpt.config.validate();

    ckpt.params = Parameters<float>::zeros(ckpt.config);
    auto refs = tensor_refs(ckpt.params);

    const uint32_t count = get_u32(in);
    if (count != refs.size()) {
        throw std::runtime_error("checkpoint tensor count does not match config");
    }
    for (uint32_t i = 0; i < count; ++i) {
        const uint32_t name_len = get_u32(in);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        if (in.gcount() != static_cast<std::streamsize>(name_len)) {
            throw std::runtime_error("truncated checkpoint");
        }
        const uint32_t ndims = get_u32(in);
        uint64_t rows = get_u64(in);
        uint64_t cols = ndims == 2 ? get_u64(in) : 1;
        if (ndims < 1 || ndims > 2) throw std::runtime_error("unsupported tensor rank");

        const auto& ref = refs[i];
        if (ref.name != name || static_cast<uint64_t>(ref.rows) != rows ||
            static_cast<uint64_t>(ref.cols) != cols) {
            throw std::runtime_error("checkpoint tensor " + name +
                                     " does not match the declared config");
        }
        in.read(reinterpret_cast<char*>(ref.data),
                static_cast<std::streamsize>(rows * cols * sizeof(float)));
        if (in.gcount() != static_cast<std::streamsize>(rows * cols * sizeof(float))) {
            throw std::runtime_error("truncated checkpoint");
        }
        for (uint64_t k = 0; k < rows * cols; ++k) {
            if (!std::isfinite(ref.data[k])) {
                throw std::runtime_error("checkpoint tensor " + name +
                                         " contains non-finite values");
            }
        }
    }
    return ckpt;
}

}  // namespace tulpar::model
