#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tulpar/model/net.hpp"
#include "tulpar/tokenizer/bpe.hpp"

namespace tulpar::eval {

struct MCItem {
    std::string id;
    std::string context;  // empty for context-free QA
    std::string question;
    std::vector<std::string> choices;
    int gold = 0;
};

struct ClsItem {
    std::string id;
    std::string text;
    std::string gold_label;
};

// Prompt templates are data, not code; placeholders {context}, {question}
// and {text} are substituted per item, and candidate_prefix is prepended to
// every scored candidate.
struct TaskConfig {
    std::string task = "task";
    std::string type = "multiple_choice";  // or "classification"
    std::string template_str = "«{context}»\n{question}\n";
    std::string candidate_prefix;
    std::vector<std::string> labels;  // classification label set
};

TaskConfig task_config_from_json(const std::string& json_text);

struct PerItemResult {
    std::string id;
    std::vector<double> scores;
    int predicted = -1;
    bool correct = false;
};

struct EvalReport {
    std::string task;
    std::string model_name;
    int64_t param_count = 0;
    int64_t n_items = 0;   // items actually scored
    int64_t n_correct = 0;
    int64_t n_skipped = 0; // malformed or context-overflow items
    double accuracy = 0;
    double random_baseline = 0;
    std::vector<PerItemResult> per_item;
};

// Length-normalized log-likelihood of `candidate` continuing `prompt`.
// Returns nullopt when prompt+candidate exceeds the context window (the item
// is skipped); throws std::invalid_argument on an empty candidate or one that
// contributes no tokens.
class CandidateScorer {
  public:
    virtual ~CandidateScorer() = default;
    virtual std::optional<double> score(const std::string& prompt,
                                        const std::string& candidate) const = 0;
};

// Production scorer: teacher-forced scoring over one forward pass of
// prompt+candidate; per-token log softmax summed over the candidate
// positions and divided by the candidate token count.
class ModelScorer : public CandidateScorer {
  public:
    ModelScorer(const model::Parameters<float>& params, const model::ModelConfig& cfg,
                const bpe::TokenizerModel& tokenizer);
    std::optional<double> score(const std::string& prompt,
                                const std::string& candidate) const override;

  private:
    const model::Parameters<float>& params_;
    const model::ModelConfig& cfg_;
    const bpe::TokenizerModel& tokenizer_;
};

std::string render_template(const std::string& tmpl, const std::string& context,
                            const std::string& question, const std::string& text);

EvalReport evaluate_mc(const CandidateScorer& scorer, const std::vector<MCItem>& items,
                       const TaskConfig& task, int workers = 1);

// Scores every label string per item; requires >= 2 distinct labels.
EvalReport evaluate_classification(const CandidateScorer& scorer,
                                   const std::vector<ClsItem>& items,
                                   const TaskConfig& task, int workers = 1);

std::vector<MCItem> load_mc_items(const std::string& path, int64_t* errors = nullptr);
std::vector<ClsItem> load_cls_items(const std::string& path, int64_t* errors = nullptr);

std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(const std::string& json_text);

struct ScalingEntry {
    int64_t params = 0;
    std::string task;
    double accuracy = 0;
    double baseline = 0;
};

// CSV (params,task,accuracy,baseline) sorted ascending by params; equal
// param counts keep their input order.
std::string scaling_report_csv(std::vector<ScalingEntry> entries);

}  // namespace tulpar::eval
