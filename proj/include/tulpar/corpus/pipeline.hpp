#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "tulpar/corpus/clean.hpp"
#include "tulpar/corpus/document.hpp"
#include "tulpar/hash/md5.hpp"

namespace tulpar::corpus {

// Stage order is fixed; "ingestion" fronts the nine cleaning stages so the
// accounting identity output = input - sum(rejections) holds exactly.
inline constexpr const char* kStageNames[] = {
    "ingestion",  "nfc",          "control_chars", "whitespace", "min_length",
    "url_density", "html_tags",   "script_ratio",  "language_id", "dedup",
};
inline constexpr size_t kStageCount = sizeof(kStageNames) / sizeof(kStageNames[0]);

struct PipelineReport {
    int64_t input_count = 0;
    std::vector<std::pair<std::string, int64_t>> per_stage_rejections;  // fixed order
    int64_t output_count = 0;
    double pass_rate = 0.0;

    PipelineReport();
    int64_t ingestion_errors() const { return per_stage_rejections[0].second; }
    int64_t total_rejections() const;
    void finalize();  // output_count = input - rejections, pass_rate = output/input
};

struct DigestHash {
    size_t operator()(const hash::Md5Digest& d) const {
        uint64_t h = 0;
        for (int i = 0; i < 8; ++i) h = (h << 8) | d[i];
        return static_cast<size_t>(h);
    }
};

struct HashSet {
    enum class Origin { WithinRun, ExternalReference };
    std::unordered_set<hash::Md5Digest, DigestHash> digests;
    Origin origin = Origin::WithinRun;

    bool contains(const hash::Md5Digest& d) const { return digests.count(d) > 0; }
};

// Reference hash set file formats: binary ("TLPH" magic, u64 LE count,
// 16-byte digests) or text (one hex digest per line), auto-detected.
HashSet load_hash_set(const std::string& path);
void save_hash_set(const HashSet& set, const std::string& path);

// Incremental pipeline so the CLI can stream batches with bounded memory.
// Stages 1-8 are pure per-document work and fan out across workers; the
// dedup stage runs serialized. Output order always equals input order.
class Pipeline {
  public:
    Pipeline(StageConfig cfg, HashSet reference, int workers = 1);

    // Cleans one batch; survivors are appended to `out` in input order.
    void process(std::vector<Document> batch, std::vector<Document>& out);
    void record_ingestion_error();
    PipelineReport finish();

  private:
    StageConfig cfg_;
    HashSet reference_;
    HashSet seen_;
    int workers_;
    PipelineReport report_;
};

// Whole-corpus convenience wrapper around Pipeline.
struct PipelineResult {
    std::vector<Document> documents;
    PipelineReport report;
};
PipelineResult run_pipeline(const std::vector<Document>& docs, const StageConfig& cfg,
                            const HashSet* reference = nullptr, int workers = 1);

}  // namespace tulpar::corpus
