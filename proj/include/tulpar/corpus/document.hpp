#pragma once

#include <string>

namespace tulpar::corpus {

// One corpus record. `id` is unique within a corpus file, `source` names the
// originating collection, `text` is valid UTF-8 (enforced at ingestion).
struct Document {
    std::string id;
    std::string source;
    std::string text;
};

}  // namespace tulpar::corpus
