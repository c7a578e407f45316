#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "tulpar/eval/eval.hpp"
#include "tulpar/model/net.hpp"
#include "tulpar/tokenizer/bpe.hpp"
#include "tulpar/util/rng.hpp"

using namespace tulpar;
using eval::ClsItem;
using eval::EvalReport;
using eval::MCItem;
using eval::TaskConfig;

namespace {

class LambdaScorer : public eval::CandidateScorer {
  public:
    using Fn = std::function<std::optional<double>(const std::string&, const std::string&)>;
    explicit LambdaScorer(Fn fn) : fn_(std::move(fn)) {}
    std::optional<double> score(const std::string& prompt,
                                const std::string& candidate) const override {
        return fn_(prompt, candidate);
    }

  private:
    Fn fn_;
};

std::vector<MCItem> marked_items(int n, util::Rng& rng) {
    std::vector<MCItem> items;
    for (int i = 0; i < n; ++i) {
        MCItem item;
        item.id = std::to_string(i);
        item.context = "контекст";
        item.question = "сұрақ " + std::to_string(i);
        item.gold = static_cast<int>(rng.below(4));
        for (int c = 0; c < 4; ++c) {
            item.choices.push_back(c == item.gold ? "GOLD жауап" : "жауап " + std::to_string(c));
        }
        items.push_back(std::move(item));
    }
    return items;
}

model::ModelConfig scorer_config(int64_t vocab, int64_t context) {
    model::ModelConfig cfg;
    cfg.vocab_size = vocab;
    cfg.n_layers = 1;
    cfg.hidden = 16;
    cfg.n_heads = 2;
    cfg.n_kv_heads = 2;
    cfg.intermediate = 32;
    cfg.context_len = context;
    return cfg;
}

}  // namespace

TEST_CASE("oracle and anti-oracle scorers bound accuracy") {
    util::Rng rng(1);
    const auto items = marked_items(40, rng);
    TaskConfig task;
    task.task = "mc";

    const LambdaScorer oracle([](const std::string&, const std::string& cand) {
        return cand.find("GOLD") != std::string::npos ? 1.0 : 0.0;
    });
    const auto top = eval::evaluate_mc(oracle, items, task);
    CHECK(top.accuracy == 1.0);
    CHECK(top.n_items == 40);
    CHECK(top.n_correct == 40);
    CHECK(top.random_baseline == doctest::Approx(0.25));

    const LambdaScorer anti([](const std::string&, const std::string& cand) {
        return cand.find("GOLD") != std::string::npos ? -1.0 : 0.0;
    });
    const auto bottom = eval::evaluate_mc(anti, items, task);
    CHECK(bottom.accuracy == 0.0);
}

TEST_CASE("uniform scorer ties break to the lowest index") {
    util::Rng rng(2);
    const auto items = marked_items(32, rng);
    TaskConfig task;

    const LambdaScorer uniform(
        [](const std::string&, const std::string&) { return -std::log(4.0); });
    const auto report = eval::evaluate_mc(uniform, items, task);
    int64_t gold_zero = 0;
    for (const auto& item : items) gold_zero += item.gold == 0 ? 1 : 0;
    CHECK(report.n_items == 32);
    for (const auto& r : report.per_item) CHECK(r.predicted == 0);
    CHECK(report.n_correct == gold_zero);
    CHECK(report.accuracy ==
          doctest::Approx(static_cast<double>(gold_zero) / 32.0));
}

TEST_CASE("malformed and overflowing items are skipped and counted") {
    TaskConfig task;
    std::vector<MCItem> items;
    MCItem good;
    good.id = "ok";
    good.question = "q";
    good.choices = {"a", "b"};
    good.gold = 1;
    items.push_back(good);
    MCItem bad_gold = good;
    bad_gold.id = "bad-gold";
    bad_gold.gold = 5;
    items.push_back(bad_gold);
    MCItem one_choice = good;
    one_choice.id = "one";
    one_choice.choices = {"solo"};
    one_choice.gold = 0;
    items.push_back(one_choice);
    MCItem empty_choice = good;
    empty_choice.id = "empty";
    empty_choice.choices = {"a", ""};
    items.push_back(empty_choice);
    MCItem overflow = good;
    overflow.id = "overflow";
    overflow.question = "too long";
    items.push_back(overflow);

    const LambdaScorer scorer(
        [](const std::string& prompt, const std::string& cand) -> std::optional<double> {
            if (prompt.find("too long") != std::string::npos) return std::nullopt;
            return cand == "b" ? 1.0 : 0.0;
        });
    const auto report = eval::evaluate_mc(scorer, items, task);
    CHECK(report.n_items == 1);
    CHECK(report.n_skipped == 4);
    CHECK(report.n_correct == 1);
    CHECK(report.per_item.size() == 1);
    CHECK(report.per_item[0].id == "ok");
}

TEST_CASE("classification baselines label checks and duplicates") {
    TaskConfig task;
    task.type = "classification";
    task.template_str = "{text}\n";
    task.labels = {"саясат", "спорт", "мәдениет", "экономика", "ғылым", "денсаулық",
                   "технология"};

    std::vector<ClsItem> items;
    for (int i = 0; i < 21; ++i) {
        items.push_back({std::to_string(i), "мәтін " + std::to_string(i),
                         task.labels[static_cast<size_t>(i) % 7]});
    }
    items.push_back({"stray", "text", "жоқ белгі"});  // label outside the set

    const LambdaScorer oracle(
        [&](const std::string& prompt, const std::string& cand) -> std::optional<double> {
            // favor the label whose index matches the item number mod 7
            const size_t pos = prompt.find("мәтін ");
            const int idx = std::stoi(prompt.substr(pos + std::string("мәтін ").size()));
            const auto it = std::find(task.labels.begin(), task.labels.end(), cand);
            return it != task.labels.end() &&
                           (it - task.labels.begin()) == idx % 7
                       ? 1.0
                       : 0.0;
        });
    const auto report = eval::evaluate_classification(oracle, items, task);
    CHECK(report.n_items == 21);
    CHECK(report.n_skipped == 1);
    CHECK(report.accuracy == 1.0);
    CHECK(report.random_baseline == doctest::Approx(1.0 / 7.0).epsilon(1e-12));
    CHECK(std::abs(report.random_baseline - 0.1429) < 1e-4);

    TaskConfig dup = task;
    dup.labels = {"a", "b", "a"};
    CHECK_THROWS_AS(eval::evaluate_classification(oracle, items, dup),
                    std::invalid_argument);
    TaskConfig single = task;
    single.labels = {"a"};
    CHECK_THROWS_AS(eval::evaluate_classification(oracle, items, single),
                    std::invalid_argument);
}

TEST_CASE("uniform-logit model scores all candidates identically") {
    // All-zero parameters put every logit at zero, so each next-token
    // distribution is exactly uniform.
    const auto tokenizer = bpe::train_bpe({"the quick brown fox қазақ тілі"}, 300);
    const auto cfg = scorer_config(tokenizer.vocab_size(), 512);
    const auto params = model::Parameters<float>::zeros(cfg);
    const eval::ModelScorer scorer(params, cfg, tokenizer);

    const double expected = -std::log(static_cast<double>(cfg.vocab_size));
    const std::string prompt = "сұрақ:\n";
    const std::vector<std::string> candidates = {"а", "ұзын жауап мәтіні",
                                                 "o", "a much longer answer text"};
    std::vector<double> scores;
    for (const auto& cand : candidates) {
        const auto s = scorer.score(prompt, cand);
        REQUIRE(s.has_value());
        scores.push_back(*s);
        CHECK(std::abs(*s - expected) < 1e-6);
    }
    for (size_t i = 1; i < scores.size(); ++i) {
        CHECK(std::abs(scores[i] - scores[0]) < 1e-9);
    }
}

TEST_CASE("model scorer equals an independent log-softmax recomputation") {
    const auto tokenizer = bpe::train_bpe({"барлық жауап мәтіндері осында болады"}, 300);
    const auto cfg = scorer_config(tokenizer.vocab_size(), 512);
    const auto params = model::Parameters<float>::init(cfg, 99);
    const eval::ModelScorer scorer(params, cfg, tokenizer);

    const std::string prompt = "сұрақ мәтіні:\n";
    const std::string candidate = "жауап нөмірі бір";
    const auto got = scorer.score(prompt, candidate);
    REQUIRE(got.has_value());

    const auto prompt_ids = bpe::encode(tokenizer, prompt);
    const auto full_ids = bpe::encode(tokenizer, prompt + candidate);
    REQUIRE(full_ids.size() > prompt_ids.size());
    // prefix property holds for templates that end in a newline
    for (size_t i = 0; i < prompt_ids.size(); ++i) REQUIRE(full_ids[i] == prompt_ids[i]);

    const auto logits = model::forward<float>(params, cfg, full_ids);
    double sum = 0;
    for (size_t pos = prompt_ids.size(); pos < full_ids.size(); ++pos) {
        const auto row = logits.row(static_cast<Eigen::Index>(pos - 1)).cast<double>().eval();
        double denom = 0;
        const double mx = row.maxCoeff();
        for (Eigen::Index j = 0; j < row.size(); ++j) denom += std::exp(row(j) - mx);
        sum += row(full_ids[pos]) - mx - std::log(denom);

        // conditional-probability consistency: softmax sums to one
        double psum = 0;
        for (Eigen::Index j = 0; j < row.size(); ++j) psum += std::exp(row(j) - mx) / denom;
        CHECK(psum == doctest::Approx(1.0).epsilon(1e-9));
    }
    const double expected = sum / static_cast<double>(full_ids.size() - prompt_ids.size());
    CHECK(*got == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("adding a constant to all logits never changes log-softmax") {
    util::Rng rng(4);
    model::Mat<double> logits(3, 8);
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 8; ++c) logits(r, c) = rng.normal() * 3;
    }
    const model::Mat<double> shifted =
        logits + model::Mat<double>::Constant(3, 8, 17.5);
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 8; ++c) {
            const auto lsm = [&](const model::Mat<double>& m) {
                const double mx = m.row(r).maxCoeff();
                double denom = 0;
                for (int j = 0; j < 8; ++j) denom += std::exp(m(r, j) - mx);
                return m(r, c) - mx - std::log(denom);
            };
            CHECK(lsm(logits) == doctest::Approx(lsm(shifted)).epsilon(1e-12));
        }
    }
}

TEST_CASE("model scorer edge cases") {
    const auto tokenizer = bpe::train_bpe({"aa bb cc"}, 300);
    const auto cfg = scorer_config(tokenizer.vocab_size(), 8);  // tiny window
    const auto params = model::Parameters<float>::zeros(cfg);
    const eval::ModelScorer scorer(params, cfg, tokenizer);

    CHECK_THROWS_AS(scorer.score("prompt\n", ""), std::invalid_argument);
    // context overflow -> skip, not error
    const auto skipped =
        scorer.score("a very long prompt that needs many tokens\n", "answer text");
    CHECK_FALSE(skipped.has_value());
}

TEST_CASE("evaluation is deterministic and worker-count independent") {
    util::Rng rng(5);
    const auto items = marked_items(25, rng);
    TaskConfig task;
    const LambdaScorer scorer([](const std::string& prompt, const std::string& cand) {
        return static_cast<double>(prompt.size() % 7) - static_cast<double>(cand.size() % 5);
    });
    const auto a = eval::evaluate_mc(scorer, items, task, 1);
    const auto b = eval::evaluate_mc(scorer, items, task, 4);
    CHECK(a.accuracy == b.accuracy);
    CHECK(a.n_correct == b.n_correct);
    REQUIRE(a.per_item.size() == b.per_item.size());
    for (size_t i = 0; i < a.per_item.size(); ++i) {
        CHECK(a.per_item[i].id == b.per_item[i].id);
        CHECK(a.per_item[i].predicted == b.per_item[i].predicted);
        CHECK(a.per_item[i].scores == b.per_item[i].scores);
    }
    CHECK(eval::report_to_json(a) == eval::report_to_json(b));
}

TEST_CASE("template rendering") {
    CHECK(eval::render_template("«{context}»\n{question}\n", "мәтін", "сұрақ", "") ==
          "«мәтін»\nсұрақ\n");
    CHECK(eval::render_template("{text}\n", "", "", "мақала") == "мақала\n");
    CHECK(eval::render_template("no placeholders", "a", "b", "c") == "no placeholders");
}

TEST_CASE("scaling report sorting") {
    std::vector<eval::ScalingEntry> entries = {
        {600, "mc", 0.30, 0.25},
        {50, "mc", 0.22, 0.25},
        {150, "mc", 0.24, 0.25},
        {300, "mc", 0.28, 0.25},
    };
    const auto csv = eval::scaling_report_csv(entries);
    CHECK(csv ==
          "params,task,accuracy,baseline\n"
          "50,mc,0.22,0.25\n"
          "150,mc,0.24,0.25\n"
          "300,mc,0.28,0.25\n"
          "600,mc,0.3,0.25\n");

    // duplicates keep input order, single entry stays single
    const auto dup = eval::scaling_report_csv(
        {{100, "a", 0.1, 0.25}, {100, "b", 0.2, 0.25}});
    CHECK(dup ==
          "params,task,accuracy,baseline\n"
          "100,a,0.1,0.25\n"
          "100,b,0.2,0.25\n");
    CHECK(eval::scaling_report_csv({{1, "x", 0.5, 0.5}}) ==
          "params,task,accuracy,baseline\n1,x,0.5,0.5\n");
}

TEST_CASE("report json round trip") {
    EvalReport report;
    report.task = "mc";
    report.model_name = "checkpoint.bin";
    report.param_count = 12345;
    report.n_items = 10;
    report.n_correct = 4;
    report.n_skipped = 1;
    report.accuracy = 0.4;
    report.random_baseline = 0.25;
    report.per_item.push_back({"item0", {0.5, -0.5}, 0, true});
    const auto parsed = eval::report_from_json(eval::report_to_json(report));
    CHECK(parsed.task == report.task);
    CHECK(parsed.param_count == 12345);
    CHECK(parsed.accuracy == doctest::Approx(0.4));
    CHECK(parsed.random_baseline == doctest::Approx(0.25));
}

TEST_CASE("task config parsing") {
    const auto mc = eval::task_config_from_json(
        R"({"task":"qa","type":"multiple_choice","template":"{question}\n"})");
    CHECK(mc.task == "qa");
    CHECK(mc.template_str == "{question}\n");

    const auto cls = eval::task_config_from_json(
        R"({"task":"topics","type":"classification","labels":["a","b"]})");
    CHECK(cls.type == "classification");
    CHECK(cls.template_str == "{text}\n");
    CHECK(cls.labels.size() == 2);

    CHECK_THROWS(eval::task_config_from_json(R"({"type":"generation"})"));
}
