#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "tulpar/corpus/clean.hpp"
#include "tulpar/corpus/jsonl.hpp"
#include "tulpar/corpus/pipeline.hpp"
#include "tulpar/text/utf8.hpp"
#include "tulpar/util/rng.hpp"

using namespace tulpar;
using corpus::Document;
using corpus::StageConfig;

namespace {

std::string fixture_path(const std::string& name) {
    const char* dir = std::getenv("TULPAR_FIXTURES");
    REQUIRE(dir != nullptr);
    return std::string(dir) + "/" + name;
}

std::map<std::string, int64_t> stage_map(const corpus::PipelineReport& report) {
    std::map<std::string, int64_t> m;
    for (const auto& [name, n] : report.per_stage_rejections) m[name] = n;
    return m;
}

}  // namespace

TEST_CASE("strip_control_chars removes Cc except newline and tab") {
    CHECK(corpus::strip_control_chars(std::string("a\0b", 3)) == "ab");
    CHECK(corpus::strip_control_chars("a\nb") == "a\nb");
    CHECK(corpus::strip_control_chars("a\tb") == "a\tb");
    CHECK(corpus::strip_control_chars("a\rb") == "ab");
    CHECK(corpus::strip_control_chars("plain text") == "plain text");
    // C1 controls are Cc too
    CHECK(corpus::strip_control_chars("ab") == "ab");
}

TEST_CASE("collapse_whitespace") {
    CHECK(corpus::collapse_whitespace("a  \t b") == "a b");
    CHECK(corpus::collapse_whitespace("a\n\n\n\nb") == "a\n\nb");
    CHECK(corpus::collapse_whitespace("a\nb") == "a\nb");
    CHECK(corpus::collapse_whitespace("a\n\nb") == "a\n\nb");
    CHECK(corpus::collapse_whitespace("  a  ") == "a");
    CHECK(corpus::collapse_whitespace("a \n b") == "a\nb");
    CHECK(corpus::collapse_whitespace("a b") == "a b");  // NBSP is horizontal
    CHECK(corpus::collapse_whitespace("") == "");
    CHECK(corpus::collapse_whitespace(" \n\t ") == "");
}

TEST_CASE("transforms are individually idempotent") {
    util::Rng rng(11);
    std::string pool = "a b\tc\nд е ж";
    pool.push_back('\0');
    pool.push_back('\a');
    pool += "\n\n\n  ";
    for (int i = 0; i < 200; ++i) {
        std::string s;
        for (size_t k = 0; k < 1 + rng.below(40); ++k) {
            size_t pos = rng.below(pool.size());
            while ((static_cast<unsigned char>(pool[pos]) & 0xC0) == 0x80) --pos;
            size_t end = pos;
            text::decode_cp(pool, end);
            s.append(pool.substr(pos, end - pos));
        }
        const auto c1 = corpus::strip_control_chars(s);
        CHECK(corpus::strip_control_chars(c1) == c1);
        const auto w1 = corpus::collapse_whitespace(c1);
        CHECK(corpus::collapse_whitespace(w1) == w1);
    }
}

TEST_CASE("filter_min_length boundary is inclusive") {
    StageConfig cfg;
    cfg.min_length_chars = 50;
    CHECK_FALSE(corpus::filter_min_length(std::string(49, 'x'), cfg));
    CHECK(corpus::filter_min_length(std::string(50, 'x'), cfg));
    CHECK_FALSE(corpus::filter_min_length("", cfg));
    // characters, not bytes: 50 Cyrillic letters are 100 bytes
    std::string cyr;
    for (int i = 0; i < 50; ++i) cyr += "қ";
    CHECK(corpus::filter_min_length(cyr, cfg));
}

TEST_CASE("url detection and density") {
    CHECK(corpus::count_urls("no links here") == 0);
    CHECK(corpus::count_urls("http://a.kz and HTTPS://B.KZ and www.c.kz") == 3);
    CHECK(corpus::count_urls("http://www.a.kz") == 1);  // one URL, not two
    CHECK(corpus::count_urls("wwww.") == 1);            // "www." substring still counts

    StageConfig cfg;
    cfg.max_urls_per_1000_chars = 5.0;
    // exactly 1000 chars with 6 urls -> density 6 > 5, reject
    std::string text;
    for (int i = 0; i < 6; ++i) text += "http://aa.kz";  // 12 chars each
    text += std::string(1000 - text.size(), 'x');
    REQUIRE(text::codepoint_count(text) == 1000);
    CHECK_FALSE(corpus::filter_url_density(text, cfg));
    // 2000 chars with 10 urls -> density exactly 5.0, inclusive keep
    std::string text2;
    for (int i = 0; i < 10; ++i) text2 += "http://aa.kz";
    text2 += std::string(2000 - text2.size(), 'x');
    REQUIRE(text::codepoint_count(text2) == 2000);
    CHECK(corpus::filter_url_density(text2, cfg));
    CHECK(corpus::filter_url_density("no urls at all", cfg));
}

TEST_CASE("html tag detection") {
    CHECK(corpus::count_html_tags("a < b and c > d") == 0);
    CHECK(corpus::count_html_tags("<div>text</div>") == 2);
    CHECK(corpus::count_html_tags("<1>") == 0);
    CHECK(corpus::count_html_tags("<br/>") == 1);
    // span longer than 100 chars is not a tag
    CHECK(corpus::count_html_tags("<a" + std::string(101, 'b') + ">") == 0);
    CHECK(corpus::count_html_tags("<a" + std::string(99, 'b') + ">") == 1);

    StageConfig cfg;
    cfg.max_html_tags = 5;
    std::string six;
    for (int i = 0; i < 6; ++i) six += "<div>";
    CHECK_FALSE(corpus::filter_html_tags(six, cfg));
    CHECK(corpus::filter_html_tags("plain prose", cfg));
}

TEST_CASE("script ratio filter") {
    StageConfig cfg;
    cfg.min_language_script_ratio = 0.7;
    std::string cyr60lat40;
    for (int i = 0; i < 60; ++i) cyr60lat40 += "а";
    for (int i = 0; i < 40; ++i) cyr60lat40 += 'z';
    CHECK_FALSE(corpus::filter_script_ratio(cyr60lat40, cfg));  // 0.6 < 0.7

    std::string cyr;
    for (int i = 0; i < 30; ++i) cyr += "б";
    CHECK(corpus::filter_script_ratio(cyr, cfg));
    CHECK_FALSE(corpus::filter_script_ratio("latin only text", cfg));
    CHECK_FALSE(corpus::filter_script_ratio("1234 .,!? 5678", cfg));  // no letters
    // digits and punctuation are excluded from the ratio
    CHECK(corpus::filter_script_ratio(cyr + " 123456789 ...", cfg));
}

TEST_CASE("language id marker heuristic") {
    StageConfig cfg;
    CHECK(corpus::filter_language_id("Қазақстан тілі әдемі", cfg));
    CHECK_FALSE(corpus::filter_language_id("Русский текст без маркеров", cfg));
    StageConfig no_markers = cfg;
    no_markers.marker_letters.clear();
    CHECK(corpus::filter_language_id("Русский текст без маркеров", no_markers));
}

TEST_CASE("stage config validation") {
    StageConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    StageConfig bad = cfg;
    bad.min_length_chars = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = cfg;
    bad.min_language_script_ratio = 1.5;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = cfg;
    bad.max_urls_per_1000_chars = -1;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("pipeline on the bundled synthetic corpus") {
    int64_t ingestion = 0;
    const auto docs = corpus::load_documents(fixture_path("clean_corpus.jsonl"), &ingestion);
    REQUIRE(docs.size() == 10);
    REQUIRE(ingestion == 0);

    const auto result = corpus::run_pipeline(docs, StageConfig{});
    REQUIRE(result.documents.size() == 3);
    CHECK(result.documents[0].id == "d1");
    CHECK(result.documents[1].id == "d8");
    CHECK(result.documents[2].id == "d10");

    const auto stages = stage_map(result.report);
    CHECK(stages.at("ingestion") == 0);
    CHECK(stages.at("nfc") == 0);
    CHECK(stages.at("control_chars") == 0);
    CHECK(stages.at("whitespace") == 0);
    CHECK(stages.at("min_length") == 1);
    CHECK(stages.at("url_density") == 1);
    CHECK(stages.at("html_tags") == 1);
    CHECK(stages.at("script_ratio") == 1);
    CHECK(stages.at("language_id") == 1);
    CHECK(stages.at("dedup") == 2);
    CHECK(result.report.input_count == 10);
    CHECK(result.report.output_count == 3);
    CHECK(result.report.pass_rate == doctest::Approx(0.3));

    // transforms actually cleaned d10
    CHECK(result.documents[2].text.find('\0') == std::string::npos);
    CHECK(result.documents[2].text.find("   ") == std::string::npos);

    SUBCASE("second run over the output rejects nothing") {
        const auto again = corpus::run_pipeline(result.documents, StageConfig{});
        CHECK(again.documents.size() == 3);
        CHECK(again.report.total_rejections() == 0);
        for (size_t i = 0; i < 3; ++i) {
            CHECK(again.documents[i].text == result.documents[i].text);
        }
    }

    SUBCASE("parallel execution is byte-identical to single-threaded") {
        const auto par = corpus::run_pipeline(docs, StageConfig{}, nullptr, 4);
        REQUIRE(par.documents.size() == result.documents.size());
        for (size_t i = 0; i < par.documents.size(); ++i) {
            CHECK(par.documents[i].id == result.documents[i].id);
            CHECK(par.documents[i].text == result.documents[i].text);
        }
        CHECK(stage_map(par.report) == stage_map(result.report));
    }
}

TEST_CASE("dedup semantics") {
    StageConfig cfg;
    cfg.min_length_chars = 1;
    cfg.marker_letters.clear();
    cfg.min_language_script_ratio = 0;

    auto doc = [](const std::string& id, const std::string& text) {
        return Document{id, "t", text};
    };

    SUBCASE("exact duplicate within run") {
        const auto r = corpus::run_pipeline({doc("1", "аб"), doc("2", "аб")}, cfg);
        REQUIRE(r.documents.size() == 1);
        CHECK(r.documents[0].id == "1");
    }
    SUBCASE("cross-source reference hit") {
        corpus::HashSet ref;
        ref.origin = corpus::HashSet::Origin::ExternalReference;
        ref.digests.insert(hash::md5("аб"));
        const auto r = corpus::run_pipeline({doc("1", "аб")}, cfg, &ref);
        CHECK(r.documents.empty());
        CHECK(stage_map(r.report).at("dedup") == 1);
    }
    SUBCASE("order preservation") {
        const auto r = corpus::run_pipeline(
            {doc("1", "аа"), doc("2", "бб"), doc("3", "аа"), doc("4", "вв")}, cfg);
        REQUIRE(r.documents.size() == 3);
        CHECK(r.documents[0].id == "1");
        CHECK(r.documents[1].id == "2");
        CHECK(r.documents[2].id == "4");
    }
}

TEST_CASE("dedup equals the keep-first-textual-occurrence oracle") {
    StageConfig cfg;
    cfg.min_length_chars = 1;
    cfg.marker_letters.clear();
    cfg.min_language_script_ratio = 0;

    util::Rng rng(99);
    std::vector<Document> docs;
    for (int i = 0; i < 5000; ++i) {
        std::string text;
        const size_t len = 1 + rng.below(3);
        for (size_t k = 0; k < len; ++k) {
            text::append_cp(text, 0x0430 + static_cast<uint32_t>(rng.below(6)));
        }
        docs.push_back({std::to_string(i), "t", text});
    }

    // Brute-force oracle: first occurrence by full-string comparison of the
    // cleaned text (cleaning is the identity for these letter-only texts).
    std::vector<std::string> expected_ids;
    {
        std::vector<std::string> seen;
        for (const auto& d : docs) {
            bool dup = false;
            for (const auto& s : seen) {
                if (s == d.text) {
                    dup = true;
                    break;
                }
            }
            if (!dup) {
                seen.push_back(d.text);
                expected_ids.push_back(d.id);
            }
        }
    }

    const auto r = corpus::run_pipeline(docs, cfg, nullptr, 3);
    REQUIRE(r.documents.size() == expected_ids.size());
    for (size_t i = 0; i < expected_ids.size(); ++i) {
        CHECK(r.documents[i].id == expected_ids[i]);
    }
}

TEST_CASE("accounting identity holds with ingestion errors") {
    const std::string path = std::filesystem::temp_directory_path() / "tulpar_bad.jsonl";
    {
        std::ofstream out(path, std::ios::binary);
        out << R"({"id":"a","source":"s","text":"Қазақ тілі әлемдегі ең бай тілдердің бірі санала береді."})"
            << "\n";
        out << "not json at all\n";
        out << R"({"id":"","source":"s","text":"x"})" << "\n";       // empty id
        out << R"({"id":"a","source":"s","text":"dup id"})" << "\n"; // duplicate id
        out << R"({"id":"b","source":"s"})" << "\n";                  // missing text
        out << "{\"id\":\"c\",\"text\":\"\xFF\xFE bad utf8\"}\n";     // invalid UTF-8
    }
    corpus::Pipeline pipeline(StageConfig{}, corpus::HashSet{}, 1);
    corpus::JsonlReader reader(path);
    std::vector<Document> kept;
    std::vector<Document> batch;
    Document doc;
    while (true) {
        const auto status = reader.next(doc);
        if (status == corpus::JsonlReader::Status::Eof) break;
        if (status == corpus::JsonlReader::Status::IngestionError) {
            pipeline.record_ingestion_error();
            continue;
        }
        batch.push_back(doc);
    }
    pipeline.process(std::move(batch), kept);
    const auto report = pipeline.finish();
    CHECK(report.input_count == 6);
    CHECK(report.ingestion_errors() == 5);
    CHECK(report.output_count + report.total_rejections() == report.input_count);
    CHECK(kept.size() == 1);
    std::filesystem::remove(path);
}

TEST_CASE("hash set file round trip") {
    const auto dir = std::filesystem::temp_directory_path();
    const std::string bin_path = dir / "tulpar_ref.bin";
    const std::string txt_path = dir / "tulpar_ref.txt";

    corpus::HashSet set;
    set.digests.insert(hash::md5("one"));
    set.digests.insert(hash::md5("two"));
    set.digests.insert(hash::md5("three"));
    corpus::save_hash_set(set, bin_path);

    const auto loaded = corpus::load_hash_set(bin_path);
    CHECK(loaded.digests == set.digests);
    CHECK(loaded.origin == corpus::HashSet::Origin::ExternalReference);

    {
        std::ofstream out(txt_path);
        out << hash::to_hex(hash::md5("one")) << "\n"
            << hash::to_hex(hash::md5("two")) << "\n";
    }
    const auto from_text = corpus::load_hash_set(txt_path);
    CHECK(from_text.digests.size() == 2);
    CHECK(from_text.contains(hash::md5("one")));

    CHECK_THROWS(corpus::load_hash_set(dir / "tulpar_nonexistent.bin"));
    std::filesystem::remove(bin_path);
    std::filesystem::remove(txt_path);
}

TEST_CASE("report arithmetic at web-corpus scale") {
    corpus::PipelineReport report;
    report.input_count = 28'400'000;
    report.per_stage_rejections[9].second = 14'700'000;  // all in one stage
    report.finalize();
    CHECK(report.output_count == 13'700'000);
    CHECK(report.pass_rate == doctest::Approx(0.482).epsilon(1e-3));

    const auto json_text = corpus::report_to_json(report);
    const auto parsed = corpus::report_from_json(json_text);
    CHECK(parsed.input_count == report.input_count);
    CHECK(parsed.output_count == report.output_count);
    CHECK(parsed.pass_rate == doctest::Approx(report.pass_rate));
}
