#include "tulpar/corpus/jsonl.hpp"

#include <fstream>
#include <stdexcept>
#include <unordered_set>

#include <json.hpp>

#include "tulpar/text/utf8.hpp"

namespace tulpar::corpus {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

struct JsonlReader::Impl {
    std::ifstream in;
    std::unordered_set<std::string> seen_ids;
};

JsonlReader::JsonlReader(const std::string& path) : impl_(new Impl) {
    impl_->in.open(path, std::ios::binary);
    if (!impl_->in) {
        delete impl_;
        throw std::runtime_error("cannot open corpus file: " + path);
    }
}

JsonlReader::~JsonlReader() { delete impl_; }

JsonlReader::Status JsonlReader::next(Document& doc) {
    std::string line;
    while (std::getline(impl_->in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (!text::is_valid_utf8(line)) return Status::IngestionError;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) return Status::IngestionError;
        if (!j.contains("id") || !j["id"].is_string() || !j.contains("text") ||
            !j["text"].is_string()) {
            return Status::IngestionError;
        }
        doc.id = j["id"].get<std::string>();
        doc.source = j.value("source", std::string{});
        doc.text = j["text"].get<std::string>();
        if (doc.id.empty() || !impl_->seen_ids.insert(doc.id).second) {
            return Status::IngestionError;
        }
        return Status::Ok;
    }
    return Status::Eof;
}

void write_document(std::ostream& out, const Document& doc) {
    ordered_json j;
    j["id"] = doc.id;
    j["source"] = doc.source;
    j["text"] = doc.text;
    out << j.dump() << '\n';
}

std::string report_to_json(const PipelineReport& report) {
    ordered_json j;
    j["input_count"] = report.input_count;
    j["ingestion_errors"] = report.ingestion_errors();
    ordered_json stages = ordered_json::object();
    for (const auto& [name, n] : report.per_stage_rejections) stages[name] = n;
    j["per_stage_rejections"] = stages;
    j["output_count"] = report.output_count;
    j["pass_rate"] = report.pass_rate;
    return j.dump(2) + "\n";
}

PipelineReport report_from_json(const std::string& json_text) {
    const json j = json::parse(json_text);
    PipelineReport report;
    report.input_count = j.at("input_count").get<int64_t>();
    for (auto& [name, n] : report.per_stage_rejections) {
        n = j.at("per_stage_rejections").at(name).get<int64_t>();
    }
    report.output_count = j.at("output_count").get<int64_t>();
    report.pass_rate = j.at("pass_rate").get<double>();
    return report;
}

std::vector<Document> load_documents(const std::string& path, int64_t* ingestion_errors) {
    JsonlReader reader(path);
    std::vector<Document> docs;
    Document doc;
    while (true) {
        const auto status = reader.next(doc);
        if (status == JsonlReader::Status::Eof) break;
        if (status == JsonlReader::Status::IngestionError) {
            if (ingestion_errors) ++*ingestion_errors;
            continue;
        }
        docs.push_back(doc);
    }
    return docs;
}

}  // namespace tulpar::corpus
