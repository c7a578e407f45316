// tulpar: corpus cleaning, byte-level BPE, small decoder-only LM training and
// likelihood-based evaluation in one binary.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tulpar/corpus/jsonl.hpp"
#include "tulpar/corpus/pipeline.hpp"
#include "tulpar/eval/eval.hpp"
#include "tulpar/io/atomic_file.hpp"
#include "tulpar/io/manifest.hpp"
#include "tulpar/model/checkpoint.hpp"
#include "tulpar/text/utf8.hpp"
#include "tulpar/tokenizer/blocks.hpp"
#include "tulpar/tokenizer/bpe.hpp"
#include "tulpar/tokenizer/fertility.hpp"
#include "tulpar/trainer/train.hpp"
#include "tulpar/version.hpp"

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

// Exit codes: 0 success, 1 data errors, 2 configuration errors.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CommonOpts {
    int64_t seed = 0;
    int workers = 1;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

tulpar::io::RunManifest start_manifest(const std::string& command,
                                       const std::string& config_path, int64_t seed) {
    tulpar::io::RunManifest m;
    m.command = command;
    m.config_path = config_path;
    m.seed = seed;
    m.started = tulpar::io::iso8601_now();
    m.tool_version = tulpar::kVersion;
    return m;
}

void finish_manifests(tulpar::io::RunManifest m) {
    m.finished = tulpar::io::iso8601_now();
    for (const auto& artifact : m.outputs) tulpar::io::write_manifest(m, artifact);
}

tulpar::corpus::StageConfig stage_config_from_json(const std::string& text) {
    const json j = json::parse(text);
    tulpar::corpus::StageConfig cfg;
    cfg.min_length_chars = j.value("min_length_chars", cfg.min_length_chars);
    cfg.max_urls_per_1000_chars =
        j.value("max_urls_per_1000_chars", cfg.max_urls_per_1000_chars);
    cfg.max_html_tags = j.value("max_html_tags", cfg.max_html_tags);
    cfg.min_language_script_ratio =
        j.value("min_language_script_ratio", cfg.min_language_script_ratio);
    cfg.min_language_marker_ratio =
        j.value("min_language_marker_ratio", cfg.min_language_marker_ratio);
    if (j.contains("script")) {
        const auto& s = j.at("script");
        if (s.is_string()) {
            cfg.script = tulpar::corpus::ScriptSet::named(s.get<std::string>());
        } else {
            cfg.script.name = s.value("name", std::string{"custom"});
            cfg.script.ranges.clear();
            for (const auto& r : s.at("ranges")) {
                cfg.script.ranges.emplace_back(r.at(0).get<uint32_t>(),
                                               r.at(1).get<uint32_t>());
            }
        }
    }
    if (j.contains("marker_letters")) {
        cfg.marker_letters.clear();
        const std::string letters = j.at("marker_letters").get<std::string>();
        size_t i = 0;
        while (i < letters.size()) {
            cfg.marker_letters.insert(tulpar::text::decode_cp(letters, i));
        }
    }
    return cfg;
}

// Reads a training corpus: .jsonl document files use the "text" field, other
// files are one document of raw text.
std::vector<std::string> load_corpus_texts(const std::string& path) {
    if (path.size() >= 6 && path.substr(path.size() - 6) == ".jsonl") {
        int64_t errors = 0;
        const auto docs = tulpar::corpus::load_documents(path, &errors);
        if (errors > 0) {
            std::cerr << "warning: " << errors << " malformed lines skipped in " << path
                      << "\n";
        }
        std::vector<std::string> texts;
        texts.reserve(docs.size());
        for (const auto& d : docs) texts.push_back(d.text);
        return texts;
    }
    return {read_file(path)};
}

// ---------------------------------------------------------------------------

int cmd_clean(const CommonOpts& common, const std::string& input,
              const std::string& output, std::string report_path,
              const std::string& config_path, const std::string& ref_path) {
    tulpar::corpus::StageConfig cfg;
    if (!config_path.empty()) {
        try {
            cfg = stage_config_from_json(read_file(config_path));
        } catch (const std::exception& e) {
            throw ConfigError(std::string("bad clean config: ") + e.what());
        }
    }
    try {
        cfg.validate();
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }

    tulpar::corpus::HashSet reference;
    if (!ref_path.empty()) {
        try {
            reference = tulpar::corpus::load_hash_set(ref_path);
        } catch (const std::exception& e) {
            throw ConfigError(std::string("reference hash set: ") + e.what());
        }
    }
    if (report_path.empty()) report_path = output + ".report.json";

    auto manifest = start_manifest("clean", config_path, common.seed);
    manifest.inputs = {input};
    if (!ref_path.empty()) manifest.inputs.push_back(ref_path);
    manifest.outputs = {output, report_path};

    tulpar::corpus::Pipeline pipeline(cfg, std::move(reference), common.workers);
    tulpar::corpus::JsonlReader reader(input);

    const std::string temp = tulpar::io::temp_path_for(output);
    {
        std::ofstream out(temp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write output: " + temp);

        std::vector<tulpar::corpus::Document> batch, kept;
        tulpar::corpus::Document doc;
        bool eof = false;
        while (!eof) {
            batch.clear();
            while (batch.size() < 512) {
                const auto status = reader.next(doc);
                if (status == tulpar::corpus::JsonlReader::Status::Eof) {
                    eof = true;
                    break;
                }
                if (status == tulpar::corpus::JsonlReader::Status::IngestionError) {
                    pipeline.record_ingestion_error();
                    continue;
                }
                batch.push_back(std::move(doc));
            }
            kept.clear();
            pipeline.process(std::move(batch), kept);
            for (const auto& d : kept) tulpar::corpus::write_document(out, d);
            batch = {};
        }
        out.flush();
        if (!out) {
            std::filesystem::remove(temp);
            throw std::runtime_error("short write: " + temp);
        }
    }
    tulpar::io::rename_into_place(temp, output);

    const auto report = pipeline.finish();
    tulpar::io::atomic_write(report_path, tulpar::corpus::report_to_json(report));
    finish_manifests(manifest);

    std::cerr << "clean: " << report.input_count << " in, " << report.output_count
              << " out, pass rate " << report.pass_rate << "\n";
    return 0;
}

int cmd_train_tokenizer(const CommonOpts& common, const std::string& corpus_path,
                        int vocab_size, const std::string& out_path) {
    auto manifest = start_manifest("train-tokenizer", "", common.seed);
    manifest.inputs = {corpus_path};
    manifest.outputs = {out_path};

    tulpar::bpe::BpeTrainer trainer(vocab_size);
    for (const auto& text : load_corpus_texts(corpus_path)) trainer.add_text(text);
    const auto model = trainer.train();
    tulpar::bpe::save_tokenizer(model, out_path);
    finish_manifests(manifest);

    std::cerr << "train-tokenizer: vocab " << model.vocab_size() << " ("
              << model.merges.size() << " merges)\n";
    return 0;
}

int cmd_fertility(const CommonOpts& common, const std::vector<std::string>& tokenizers,
                  const std::string& text_path, const std::string& out_path) {
    const std::string text = read_file(text_path);
    if (!tulpar::text::is_valid_utf8(text)) {
        throw std::runtime_error("text file is not valid UTF-8: " + text_path);
    }

    auto manifest = start_manifest("fertility", "", common.seed);
    manifest.inputs = tokenizers;
    manifest.inputs.push_back(text_path);
    manifest.outputs = {out_path};

    std::ostringstream out;
    for (const auto& tok_path : tokenizers) {
        const auto model = tulpar::bpe::load_tokenizer(tok_path);
        const auto report = tulpar::bpe::fertility(model, text);
        ordered_json j;
        j["tokenizer_name"] = report.tokenizer_name;
        j["text"] = text_path;
        j["token_count"] = report.token_count;
        j["word_count"] = report.word_count;
        j["fertility"] = report.fertility;
        out << j.dump() << "\n";
    }
    tulpar::io::atomic_write(out_path, out.str());
    finish_manifests(manifest);
    return 0;
}

int cmd_pretokenize(const CommonOpts& common, const std::string& tokenizer_path,
                    const std::string& corpus_path, int block_len,
                    const std::string& out_path) {
    if (block_len < 2) throw ConfigError("--block-len must be >= 2");
    auto manifest = start_manifest("pretokenize", "", common.seed);
    manifest.inputs = {tokenizer_path, corpus_path};
    manifest.outputs = {out_path};

    const auto model = tulpar::bpe::load_tokenizer(tokenizer_path);
    const auto texts = load_corpus_texts(corpus_path);
    uint64_t dropped = 0;
    const uint64_t blocks = tulpar::bpe::pretokenize_corpus(
        model, texts, static_cast<uint32_t>(block_len), out_path, &dropped);
    finish_manifests(manifest);

    std::cerr << "pretokenize: " << blocks << " blocks of " << block_len << " ids ("
              << dropped << " trailing ids dropped)\n";
    return 0;
}

int cmd_train(const CommonOpts& common, const std::string& run_config_path, bool resume) {
    tulpar::train::RunConfig run_cfg;
    try {
        run_cfg = tulpar::train::run_config_from_json(read_file(run_config_path));
    } catch (const std::exception& e) {
        throw ConfigError(std::string("bad run config: ") + e.what());
    }
    if (common.seed != 0) run_cfg.seed = static_cast<uint64_t>(common.seed);

    auto manifest = start_manifest("train", run_config_path,
                                   static_cast<int64_t>(run_cfg.seed));
    manifest.inputs = {run_cfg.blocks_path};
    manifest.outputs = {run_cfg.out_dir + "/checkpoint.bin", run_cfg.out_dir + "/trace.csv"};

    const auto result = tulpar::train::run_training(run_cfg, resume);
    finish_manifests(manifest);

    if (!result.trace.empty()) {
        const auto& last = result.trace.back();
        std::cerr << "train: " << last.step << " steps, final loss " << last.loss << ", "
                  << last.tokens_seen << " tokens\n";
    }
    return 0;
}

int cmd_eval(const CommonOpts& common, const std::string& checkpoint_path,
             const std::string& tokenizer_path, const std::string& task_config_path,
             const std::string& dataset_path, const std::string& out_path) {
    tulpar::eval::TaskConfig task;
    try {
        task = tulpar::eval::task_config_from_json(read_file(task_config_path));
    } catch (const std::exception& e) {
        throw ConfigError(std::string("bad task config: ") + e.what());
    }

    const auto ckpt = tulpar::model::load_checkpoint(checkpoint_path);
    const auto tokenizer = tulpar::bpe::load_tokenizer(tokenizer_path);
    if (tokenizer.vocab_size() > ckpt.config.vocab_size) {
        throw ConfigError("tokenizer vocabulary exceeds the model vocabulary");
    }

    auto manifest = start_manifest("eval", task_config_path, common.seed);
    manifest.inputs = {checkpoint_path, tokenizer_path, dataset_path};
    manifest.outputs = {out_path};

    const tulpar::eval::ModelScorer scorer(ckpt.params, ckpt.config, tokenizer);
    tulpar::eval::EvalReport report;
    int64_t load_errors = 0;
    if (task.type == "classification") {
        const auto items = tulpar::eval::load_cls_items(dataset_path, &load_errors);
        report = tulpar::eval::evaluate_classification(scorer, items, task, common.workers);
    } else {
        const auto items = tulpar::eval::load_mc_items(dataset_path, &load_errors);
        report = tulpar::eval::evaluate_mc(scorer, items, task, common.workers);
    }
    report.n_skipped += load_errors;
    report.model_name = std::filesystem::path(checkpoint_path).filename().string();
    report.param_count = tulpar::model::count_parameters(ckpt.config);

    tulpar::io::atomic_write(out_path, tulpar::eval::report_to_json(report));
    finish_manifests(manifest);

    std::cerr << "eval: " << report.task << " accuracy " << report.accuracy << " over "
              << report.n_items << " items (baseline " << report.random_baseline << ")\n";
    return 0;
}

int cmd_report(const CommonOpts& common, const std::vector<std::string>& eval_paths,
               const std::string& out_path) {
    auto manifest = start_manifest("report", "", common.seed);
    manifest.inputs = eval_paths;
    manifest.outputs = {out_path};

    std::vector<tulpar::eval::ScalingEntry> entries;
    for (const auto& path : eval_paths) {
        const auto report = tulpar::eval::report_from_json(read_file(path));
        entries.push_back({report.param_count, report.task, report.accuracy,
                           report.random_baseline});
    }
    tulpar::io::atomic_write(out_path, tulpar::eval::scaling_report_csv(std::move(entries)));
    finish_manifests(manifest);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tulpar: dedicated small language models for low-resource languages"};
    app.require_subcommand(1);
    app.set_version_flag("--version", tulpar::kVersion);

    CommonOpts common;
    if (const char* env = std::getenv("TULPAR_WORKERS")) common.workers = std::atoi(env);
    app.add_option("--seed", common.seed, "Seed for all randomness");
    app.add_option("--workers", common.workers, "Worker threads for corpus/eval stages");

    auto* clean = app.add_subcommand("clean", "Run the cleaning pipeline and dedup");
    std::string in_path, out_path, report_path, config_path, ref_path;
    clean->add_option("--input", in_path, "Input corpus (JSONL)")->required();
    clean->add_option("--output", out_path, "Cleaned corpus (JSONL)")->required();
    clean->add_option("--report", report_path, "Pipeline report JSON path");
    clean->add_option("--config", config_path, "Stage threshold config JSON");
    clean->add_option("--ref-hashes", ref_path, "Cross-source reference hash set");

    auto* train_tok = app.add_subcommand("train-tokenizer", "Train a byte-level BPE tokenizer");
    std::string tok_corpus, tok_out;
    int vocab_size = 50257;
    train_tok->add_option("--corpus", tok_corpus, "Training corpus (JSONL or text)")
        ->required();
    train_tok->add_option("--vocab-size", vocab_size, "Total vocabulary size");
    train_tok->add_option("--out", tok_out, "Tokenizer JSON output")->required();

    auto* fert = app.add_subcommand("fertility", "Tokens per word for one or more tokenizers");
    std::vector<std::string> fert_tokenizers;
    std::string fert_text, fert_out;
    fert->add_option("--tokenizer", fert_tokenizers, "Tokenizer JSON (repeatable)")
        ->required();
    fert->add_option("--text", fert_text, "UTF-8 text file to measure")->required();
    fert->add_option("--out", fert_out, "Output JSONL")->required();

    auto* pretok = app.add_subcommand("pretokenize", "Pack a corpus into fixed-length id blocks");
    std::string pre_tok, pre_corpus, pre_out;
    int block_len = 1024;
    pretok->add_option("--tokenizer", pre_tok, "Tokenizer JSON")->required();
    pretok->add_option("--corpus", pre_corpus, "Corpus (JSONL or text)")->required();
    pretok->add_option("--block-len", block_len, "Ids per block");
    pretok->add_option("--out", pre_out, "Block file output")->required();

    auto* train = app.add_subcommand("train", "Train a model from a run config");
    std::string run_config_path;
    bool resume = false;
    train->add_option("--run-config", run_config_path, "Run config JSON")->required();
    train->add_flag("--resume", resume, "Resume from the run's checkpoint");

    auto* eval = app.add_subcommand("eval", "Zero-shot likelihood evaluation");
    std::string eval_ckpt, eval_tok, eval_task, eval_data, eval_out;
    eval->add_option("--checkpoint", eval_ckpt, "Model checkpoint")->required();
    eval->add_option("--tokenizer", eval_tok, "Tokenizer JSON")->required();
    eval->add_option("--task-config", eval_task, "Task config JSON")->required();
    eval->add_option("--dataset", eval_data, "Dataset JSONL")->required();
    eval->add_option("--out", eval_out, "Evaluation report JSON")->required();

    auto* report = app.add_subcommand("report", "Aggregate eval reports into a scaling CSV");
    std::vector<std::string> report_evals;
    std::string report_out;
    report->add_option("--eval", report_evals, "Eval report JSON (repeatable)")->required();
    report->add_option("--out", report_out, "CSV output")->required();

    // global flags remain usable after the subcommand name
    for (auto* sub : app.get_subcommands({})) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (clean->parsed()) {
            return cmd_clean(common, in_path, out_path, report_path, config_path, ref_path);
        }
        if (train_tok->parsed()) {
            return cmd_train_tokenizer(common, tok_corpus, vocab_size, tok_out);
        }
        if (fert->parsed()) return cmd_fertility(common, fert_tokenizers, fert_text, fert_out);
        if (pretok->parsed()) {
            return cmd_pretokenize(common, pre_tok, pre_corpus, block_len, pre_out);
        }
        if (train->parsed()) return cmd_train(common, run_config_path, resume);
        if (eval->parsed()) {
            return cmd_eval(common, eval_ckpt, eval_tok, eval_task, eval_data, eval_out);
        }
        if (report->parsed()) return cmd_report(common, report_evals, report_out);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
