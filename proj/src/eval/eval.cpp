#include "tulpar/eval/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "tulpar/util/parallel.hpp"

namespace tulpar::eval {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

TaskConfig task_config_from_json(const std::string& json_text) {
    const json j = json::parse(json_text);
    TaskConfig cfg;
    cfg.task = j.value("task", cfg.task);
    cfg.type = j.value("type", cfg.type);
    if (j.contains("template")) cfg.template_str = j.at("template").get<std::string>();
    else if (cfg.type == "classification") cfg.template_str = "{text}\n";
    cfg.candidate_prefix = j.value("candidate_prefix", std::string{});
    if (j.contains("labels")) {
        for (const auto& l : j.at("labels")) cfg.labels.push_back(l.get<std::string>());
    }
    if (cfg.type != "multiple_choice" && cfg.type != "classification") {
        throw std::invalid_argument("unknown task type: " + cfg.type);
    }
    return cfg;
}

ModelScorer::ModelScorer(const model::Parameters<float>& params,
                         const model::ModelConfig& cfg, const bpe::TokenizerModel& tokenizer)
    : params_(params), cfg_(cfg), tokenizer_(tokenizer) {}

std::optional<double> ModelScorer::score(const std::string& prompt,
                                         const std::string& candidate) const {
    if (candidate.empty()) throw std::invalid_argument("empty candidate");
    const std::vector<int> prompt_ids = bpe::encode(tokenizer_, prompt);
    const std::vector<int> full_ids = bpe::encode(tokenizer_, prompt + candidate);
    if (prompt_ids.empty()) {
        throw std::invalid_argument("prompt encodes to no tokens; cannot condition");
    }
    const size_t n_cand = full_ids.size() > prompt_ids.size()
                              ? full_ids.size() - prompt_ids.size()
                              : 0;
    if (n_cand == 0) throw std::invalid_argument("candidate contributes no tokens");
    if (static_cast<int64_t>(full_ids.size()) > cfg_.context_len) return std::nullopt;

    const auto logits = model::forward<float>(params_, cfg_, full_ids);
    double total = 0;
    for (size_t pos = prompt_ids.size(); pos < full_ids.size(); ++pos) {
        // Row pos-1 predicts token pos; log softmax in double for stability.
        const auto row = logits.row(static_cast<Eigen::Index>(pos - 1)).cast<double>().eval();
        const double max_logit = row.maxCoeff();
        const double lse = std::log((row.array() - max_logit).exp().sum()) + max_logit;
        total += row(full_ids[pos]) - lse;
    }
    return total / static_cast<double>(n_cand);
}

std::string render_template(const std::string& tmpl, const std::string& context,
                            const std::string& question, const std::string& text) {
    std::string out = tmpl;
    auto replace_all = [&](const std::string& key, const std::string& value) {
        size_t pos = 0;
        while ((pos = out.find(key, pos)) != std::string::npos) {
            out.replace(pos, key.size(), value);
            pos += value.size();
        }
    };
    replace_all("{context}", context);
    replace_all("{question}", question);
    replace_all("{text}", text);
    return out;
}

namespace {

struct ScoredItem {
    bool skipped = false;
    PerItemResult result;
};

// Scores one candidate list; tie-break on equal scores is the lowest index.
ScoredItem score_candidates(const CandidateScorer& scorer, const std::string& id,
                            const std::string& prompt,
                            const std::vector<std::string>& candidates,
                            const std::string& prefix, int gold) {
    ScoredItem out;
    out.result.id = id;
    for (const auto& candidate : candidates) {
        const auto s = scorer.score(prompt, prefix + candidate);
        if (!s) {
            out.skipped = true;
            return out;
        }
        out.result.scores.push_back(*s);
    }
    int best = 0;
    for (size_t i = 1; i < out.result.scores.size(); ++i) {
        if (out.result.scores[i] > out.result.scores[static_cast<size_t>(best)]) {
            best = static_cast<int>(i);
        }
    }
    out.result.predicted = best;
    out.result.correct = best == gold;
    return out;
}

void aggregate(EvalReport& report, std::vector<ScoredItem>&& scored,
               const std::vector<char>& malformed, double baseline_sum) {
    for (size_t i = 0; i < scored.size(); ++i) {
        if (malformed[i] || scored[i].skipped) {
            ++report.n_skipped;
            continue;
        }
        ++report.n_items;
        if (scored[i].result.correct) ++report.n_correct;
        report.per_item.push_back(std::move(scored[i].result));
    }
    report.accuracy = report.n_items > 0
                          ? static_cast<double>(report.n_correct) /
                                static_cast<double>(report.n_items)
                          : 0.0;
    report.random_baseline = report.n_items > 0
                                 ? baseline_sum / static_cast<double>(report.n_items)
                                 : 0.0;
}

}  // namespace

EvalReport evaluate_mc(const CandidateScorer& scorer, const std::vector<MCItem>& items,
                       const TaskConfig& task, int workers) {
    EvalReport report;
    report.task = task.task;

    std::vector<char> malformed(items.size(), 0);
    auto scored = util::parallel_map_ordered<ScoredItem>(
        items.size(), workers, [&](size_t i) -> ScoredItem {
            const MCItem& item = items[i];
            if (item.choices.size() < 2 || item.gold < 0 ||
                item.gold >= static_cast<int>(item.choices.size())) {
                malformed[i] = 1;
                return {};
            }
            for (const auto& c : item.choices) {
                if (c.empty()) {
                    malformed[i] = 1;
                    return {};
                }
            }
            const std::string prompt =
                render_template(task.template_str, item.context, item.question, "");
            try {
                return score_candidates(scorer, item.id, prompt, item.choices,
                                        task.candidate_prefix, item.gold);
            } catch (const std::exception&) {
                malformed[i] = 1;
                return {};
            }
        });

    double baseline_sum = 0;
    for (size_t i = 0; i < items.size(); ++i) {
        if (!malformed[i] && !scored[i].skipped) {
            baseline_sum += 1.0 / static_cast<double>(items[i].choices.size());
        }
    }
    aggregate(report, std::move(scored), malformed, baseline_sum);
    return report;
}

EvalReport evaluate_classification(const CandidateScorer& scorer,
                                   const std::vector<ClsItem>& items,
                                   const TaskConfig& task, int workers) {
    if (task.labels.size() < 2) {
        throw std::invalid_argument("classification requires at least 2 labels");
    }
    if (std::set<std::string>(task.labels.begin(), task.labels.end()).size() !=
        task.labels.size()) {
        throw std::invalid_argument("duplicate label strings in task config");
    }

    EvalReport report;
    report.task = task.task;

    std::vector<char> malformed(items.size(), 0);
    auto scored = util::parallel_map_ordered<ScoredItem>(
        items.size(), workers, [&](size_t i) -> ScoredItem {
            const ClsItem& item = items[i];
            const auto gold_it =
                std::find(task.labels.begin(), task.labels.end(), item.gold_label);
            if (gold_it == task.labels.end()) {
                malformed[i] = 1;
                return {};
            }
            const int gold = static_cast<int>(gold_it - task.labels.begin());
            const std::string prompt =
                render_template(task.template_str, "", "", item.text);
            try {
                return score_candidates(scorer, item.id, prompt, task.labels,
                                        task.candidate_prefix, gold);
            } catch (const std::exception&) {
                malformed[i] = 1;
                return {};
            }
        });

    const double baseline = 1.0 / static_cast<double>(task.labels.size());
    double baseline_sum = 0;
    for (size_t i = 0; i < items.size(); ++i) {
        if (!malformed[i] && !scored[i].skipped) baseline_sum += baseline;
    }
    aggregate(report, std::move(scored), malformed, baseline_sum);
    return report;
}

std::vector<MCItem> load_mc_items(const std::string& path, int64_t* errors) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open dataset: " + path);
    std::vector<MCItem> items;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("question") ||
            !j.contains("choices") || !j.contains("gold")) {
            if (errors) ++*errors;
            continue;
        }
        MCItem item;
        item.id = j.value("id", std::to_string(items.size()));
        item.context = j.value("context", std::string{});
        item.question = j.at("question").get<std::string>();
        for (const auto& c : j.at("choices")) item.choices.push_back(c.get<std::string>());
        item.gold = j.at("gold").get<int>();
        items.push_back(std::move(item));
    }
    return items;
}

std::vector<ClsItem> load_cls_items(const std::string& path, int64_t* errors) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open dataset: " + path);
    std::vector<ClsItem> items;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("text") ||
            !j.contains("label")) {
            if (errors) ++*errors;
            continue;
        }
        ClsItem item;
        item.id = j.value("id", std::to_string(items.size()));
        item.text = j.at("text").get<std::string>();
        item.gold_label = j.at("label").get<std::string>();
        items.push_back(std::move(item));
    }
    return items;
}

std::string report_to_json(const EvalReport& report) {
    ordered_json j;
    j["task"] = report.task;
    j["model"] = report.model_name;
    j["param_count"] = report.param_count;
    j["n_items"] = report.n_items;
    j["n_correct"] = report.n_correct;
    j["n_skipped"] = report.n_skipped;
    j["accuracy"] = report.accuracy;
    j["random_baseline"] = report.random_baseline;
    ordered_json per_item = ordered_json::array();
    for (const auto& r : report.per_item) {
        ordered_json e;
        e["id"] = r.id;
        e["scores"] = r.scores;
        e["predicted"] = r.predicted;
        e["correct"] = r.correct;
        per_item.push_back(std::move(e));
    }
    j["per_item"] = per_item;
    return j.dump(2) + "\n";
}

EvalReport report_from_json(const std::string& json_text) {
    const json j = json::parse(json_text);
    EvalReport report;
    report.task = j.at("task").get<std::string>();
    report.model_name = j.value("model", std::string{});
    report.param_count = j.value("param_count", int64_t{0});
    report.n_items = j.at("n_items").get<int64_t>();
    report.n_correct = j.at("n_correct").get<int64_t>();
    report.n_skipped = j.value("n_skipped", int64_t{0});
    report.accuracy = j.at("accuracy").get<double>();
    report.random_baseline = j.at("random_baseline").get<double>();
    return report;
}

std::string scaling_report_csv(std::vector<ScalingEntry> entries) {
    std::stable_sort(entries.begin(), entries.end(),
                     [](const ScalingEntry& a, const ScalingEntry& b) {
                         return a.params < b.params;
                     });
    std::ostringstream out;
    out.precision(10);
    out << "params,task,accuracy,baseline\n";
    for (const auto& e : entries) {
        out << e.params << ',' << e.task << ',' << e.accuracy << ',' << e.baseline << '\n';
    }
    return out.str();
}

}  // namespace tulpar::eval
