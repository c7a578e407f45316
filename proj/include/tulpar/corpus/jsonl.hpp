#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "tulpar/corpus/document.hpp"
#include "tulpar/corpus/pipeline.hpp"

namespace tulpar::corpus {

// Corpus files are JSON Lines: {"id": ..., "source": ..., "text": ...} per
// line, UTF-8, LF endings. A line that is not valid JSON, not valid UTF-8,
// lacks a non-empty unique id, or lacks a text field is an ingestion error.
class JsonlReader {
  public:
    explicit JsonlReader(const std::string& path);  // throws if unreadable
    ~JsonlReader();

    enum class Status { Ok, IngestionError, Eof };
    Status next(Document& doc);

  private:
    struct Impl;
    Impl* impl_;
};

void write_document(std::ostream& out, const Document& doc);

std::string report_to_json(const PipelineReport& report);
PipelineReport report_from_json(const std::string& json_text);

// Loads a whole corpus; ingestion errors are tallied into `ingestion_errors`.
std::vector<Document> load_documents(const std::string& path, int64_t* ingestion_errors = nullptr);

}  // namespace tulpar::corpus
