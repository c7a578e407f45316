#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tulpar/model/checkpoint.hpp"
#include "tulpar/model/net.hpp"
#include "tulpar/tokenizer/blocks.hpp"
#include "tulpar/trainer/optimizer.hpp"

namespace tulpar::train {

// One run of the optimization recipe over a pre-tokenized block file.
struct RunConfig {
    std::string blocks_path;
    std::string preset;           // named ModelConfig, or
    std::optional<model::ModelConfig> model;  // inline config (wins over preset)
    OptimizerConfig optimizer;
    bool peak_lr_explicit = false;  // config file set peak_lr; preset default off
    uint64_t seed = 0;
    int64_t batch_blocks = 64;
    int64_t steps = 0;  // 0 means exactly one epoch over the blocks
    int64_t checkpoint_interval = 100;
    std::string out_dir;
};

RunConfig run_config_from_json(const std::string& json_text);

struct StepRecord {
    int64_t step;
    double lr;
    double loss;
    double grad_norm;
    int64_t tokens_seen;
};

struct TrainResult {
    model::Parameters<float> params;
    OptimizerState<float> opt_state;
    std::vector<StepRecord> trace;
    std::string checkpoint_path;
};

std::string trace_to_csv(const std::vector<StepRecord>& trace);

using StepObserver = std::function<void(const StepRecord&, const model::Parameters<float>&,
                                        const OptimizerState<float>&)>;

// Runs the loop in memory: one seeded shuffled pass (or `steps` batches,
// cycling with a reshuffle per epoch), per step forward / cross-entropy on
// shift-by-one targets / backward / clip / cosine lr / AdamW. Deterministic
// for a fixed seed. `on_step` (optional) observes each completed step; the
// resolved schedule is written back through `resolved` when given.
TrainResult train(const model::ModelConfig& cfg, const bpe::BlockFile& blocks,
                  OptimizerConfig opt_cfg, uint64_t seed, int64_t batch_blocks,
                  int64_t steps = 0, const StepObserver& on_step = nullptr,
                  model::Parameters<float>* initial = nullptr,
                  OptimizerState<float>* initial_state = nullptr,
                  OptimizerConfig* resolved = nullptr);

// Full file-level run: loads blocks, trains, writes trace CSV, periodic and
// final checkpoints plus the optimizer sidecar. Returns the final result.
TrainResult run_training(const RunConfig& run_cfg, bool resume);

}  // namespace tulpar::train
