#include "tulpar/corpus/pipeline.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

#include "tulpar/text/unicode.hpp"
#include "tulpar/text/utf8.hpp"
#include "tulpar/util/parallel.hpp"

namespace tulpar::corpus {

namespace {

constexpr char kHashMagic[4] = {'T', 'L', 'P', 'H'};

// Index into kStageNames of the stage that rejected, or -1 if kept.
// Transforms mutate doc.text in place.
int clean_stages(Document& doc, const StageConfig& cfg) {
    if (!text::is_valid_utf8(doc.text)) return 0;  // ingestion
    doc.text = text::normalize_nfc(doc.text);
    doc.text = strip_control_chars(doc.text);
    doc.text = collapse_whitespace(doc.text);
    if (!filter_min_length(doc.text, cfg)) return 4;
    if (!filter_url_density(doc.text, cfg)) return 5;
    if (!filter_html_tags(doc.text, cfg)) return 6;
    if (!filter_script_ratio(doc.text, cfg)) return 7;
    if (!filter_language_id(doc.text, cfg)) return 8;
    return -1;
}

}  // namespace

PipelineReport::PipelineReport() {
    per_stage_rejections.reserve(kStageCount);
    for (size_t i = 0; i < kStageCount; ++i) per_stage_rejections.emplace_back(kStageNames[i], 0);
}

int64_t PipelineReport::total_rejections() const {
    int64_t total = 0;
    for (const auto& [_, n] : per_stage_rejections) total += n;
    return total;
}

void PipelineReport::finalize() {
    output_count = input_count - total_rejections();
    pass_rate = input_count > 0
                    ? static_cast<double>(output_count) / static_cast<double>(input_count)
                    : 0.0;
}

HashSet load_hash_set(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open reference hash set: " + path);
    HashSet set;
    set.origin = HashSet::Origin::ExternalReference;

    char magic[4] = {};
    in.read(magic, 4);
    if (in.gcount() == 4 && std::memcmp(magic, kHashMagic, 4) == 0) {
        uint64_t count = 0;
        unsigned char b[8];
        in.read(reinterpret_cast<char*>(b), 8);
        if (in.gcount() != 8) throw std::runtime_error("truncated hash set header: " + path);
        for (int i = 7; i >= 0; --i) count = (count << 8) | b[i];
        set.digests.reserve(count);
        for (uint64_t i = 0; i < count; ++i) {
            hash::Md5Digest d;
            in.read(reinterpret_cast<char*>(d.data()), 16);
            if (in.gcount() != 16) throw std::runtime_error("truncated hash set: " + path);
            set.digests.insert(d);
        }
        return set;
    }

    // Text format: one hex digest per line.
    in.clear();
    in.seekg(0);
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        hash::Md5Digest d;
        if (!hash::from_hex(line, d)) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": not a hex MD5 digest");
        }
        set.digests.insert(d);
    }
    return set;
}

void save_hash_set(const HashSet& set, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write hash set: " + path);
    out.write(kHashMagic, 4);
    const uint64_t count = set.digests.size();
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(count >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
    for (const auto& d : set.digests) {
        out.write(reinterpret_cast<const char*>(d.data()), 16);
    }
}

Pipeline::Pipeline(StageConfig cfg, HashSet reference, int workers)
    : cfg_(std::move(cfg)), reference_(std::move(reference)), workers_(workers) {
    cfg_.validate();
}

void Pipeline::record_ingestion_error() {
    ++report_.input_count;
    ++report_.per_stage_rejections[0].second;
}

void Pipeline::process(std::vector<Document> batch, std::vector<Document>& out) {
    report_.input_count += static_cast<int64_t>(batch.size());

    const auto verdicts = util::parallel_map_ordered<int>(
        batch.size(), workers_, [&](size_t i) { return clean_stages(batch[i], cfg_); });

    for (size_t i = 0; i < batch.size(); ++i) {
        if (verdicts[i] >= 0) {
            ++report_.per_stage_rejections[static_cast<size_t>(verdicts[i])].second;
            continue;
        }
        const auto digest = hash::md5(batch[i].text);
        if (seen_.contains(digest) || reference_.contains(digest)) {
            ++report_.per_stage_rejections[kStageCount - 1].second;
            continue;
        }
        seen_.digests.insert(digest);
        out.push_back(std::move(batch[i]));
    }
}

PipelineReport Pipeline::finish() {
    report_.finalize();
    return report_;
}

PipelineResult run_pipeline(const std::vector<Document>& docs, const StageConfig& cfg,
                            const HashSet* reference, int workers) {
    Pipeline pipeline(cfg, reference ? *reference : HashSet{}, workers);
    PipelineResult result;
    pipeline.process(docs, result.documents);
    result.report = pipeline.finish();
    return result;
}

}  // namespace tulpar::corpus
