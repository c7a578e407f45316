#include "tulpar/tokenizer/blocks.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "tulpar/io/atomic_file.hpp"

namespace tulpar::bpe {

namespace {

constexpr char kMagic[4] = {'T', 'L', 'P', 'B'};

void put_u32(std::ofstream& out, uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ofstream& out, uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
}

uint32_t get_u32(std::ifstream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (in.gcount() != 4) throw std::runtime_error("truncated block file");
    uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
    return v;
}

uint64_t get_u64(std::ifstream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    if (in.gcount() != 8) throw std::runtime_error("truncated block file");
    uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
}

}  // namespace

struct BlockWriter::Impl {
    std::string path;
    std::string temp;
    std::ofstream out;
    BlockFileHeader header;
    std::vector<uint32_t> pending;
    bool finished = false;
};

BlockWriter::BlockWriter(const std::string& path, uint32_t block_len, uint32_t vocab_size)
    : impl_(new Impl) {
    if (block_len < 2) {
        delete impl_;
        throw std::invalid_argument("block_len must be >= 2");
    }
    impl_->path = path;
    impl_->temp = io::temp_path_for(path);
    impl_->header.block_len = block_len;
    impl_->header.vocab_size = vocab_size;
    impl_->out.open(impl_->temp, std::ios::binary | std::ios::trunc);
    if (!impl_->out) {
        const std::string temp = impl_->temp;
        delete impl_;
        throw std::runtime_error("cannot write block file: " + temp);
    }
    impl_->out.write(kMagic, 4);
    put_u32(impl_->out, impl_->header.version);
    put_u32(impl_->out, impl_->header.block_len);
    put_u64(impl_->out, 0);  // block_count, patched by finish()
    put_u32(impl_->out, impl_->header.vocab_size);
}

BlockWriter::~BlockWriter() {
    if (!impl_->finished) {
        impl_->out.close();
        std::filesystem::remove(impl_->temp);
    }
    delete impl_;
}

void BlockWriter::add_id(int id) {
    impl_->pending.push_back(static_cast<uint32_t>(id));
    if (impl_->pending.size() == impl_->header.block_len) {
        for (const uint32_t v : impl_->pending) put_u32(impl_->out, v);
        impl_->pending.clear();
        ++impl_->header.block_count;
    }
}

void BlockWriter::add(const std::vector<int>& ids) {
    for (const int id : ids) add_id(id);
}

BlockFileHeader BlockWriter::finish(uint64_t* dropped) {
    if (dropped) *dropped = impl_->pending.size();
    impl_->out.seekp(12);  // magic + version + block_len
    put_u64(impl_->out, impl_->header.block_count);
    impl_->out.flush();
    impl_->out.close();
    if (!impl_->out) {
        std::filesystem::remove(impl_->temp);
        throw std::runtime_error("short write: " + impl_->temp);
    }
    io::rename_into_place(impl_->temp, impl_->path);
    impl_->finished = true;
    return impl_->header;
}

BlockFile load_blocks(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open block file: " + path);
    char magic[4];
    in.read(magic, 4);
    if (in.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0) {
        throw std::runtime_error("not a block file: " + path);
    }
    BlockFile file;
    file.header.version = get_u32(in);
    if (file.header.version != 1) throw std::runtime_error("unsupported block file version");
    file.header.block_len = get_u32(in);
    file.header.block_count = get_u64(in);
    file.header.vocab_size = get_u32(in);

    const uint64_t total = file.header.block_count * file.header.block_len;
    file.ids.resize(total);
    for (uint64_t i = 0; i < total; ++i) file.ids[i] = get_u32(in);
    return file;
}

uint64_t pretokenize_corpus(const TokenizerModel& model,
                            const std::vector<std::string>& texts, uint32_t block_len,
                            const std::string& out_path, uint64_t* dropped) {
    BlockWriter writer(out_path, block_len, static_cast<uint32_t>(model.vocab_size()));
    const int eot = model.eot_id();
    for (const auto& text : texts) {
        writer.add(encode(model, text));
        writer.add_id(eot);
    }
    return writer.finish(dropped).block_count;
}

}  // namespace tulpar::bpe
