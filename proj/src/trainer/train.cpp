#include "tulpar/trainer/train.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "tulpar/io/atomic_file.hpp"
#include "tulpar/util/rng.hpp"

namespace tulpar::train {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

RunConfig run_config_from_json(const std::string& json_text) {
    const json j = json::parse(json_text);
    RunConfig cfg;
    cfg.blocks_path = j.at("blocks").get<std::string>();
    if (j.contains("model")) {
        cfg.model = model::config_from_json(j.at("model").dump());
    } else {
        cfg.preset = j.value("preset", std::string{"tiny"});
    }
    if (j.contains("optimizer")) {
        const auto& o = j.at("optimizer");
        cfg.peak_lr_explicit = o.contains("peak_lr");
        cfg.optimizer.peak_lr = o.value("peak_lr", cfg.optimizer.peak_lr);
        cfg.optimizer.min_lr = o.value("min_lr", cfg.optimizer.min_lr);
        cfg.optimizer.warmup_steps = o.value("warmup_steps", cfg.optimizer.warmup_steps);
        cfg.optimizer.beta1 = o.value("beta1", cfg.optimizer.beta1);
        cfg.optimizer.beta2 = o.value("beta2", cfg.optimizer.beta2);
        cfg.optimizer.weight_decay = o.value("weight_decay", cfg.optimizer.weight_decay);
        cfg.optimizer.clip_norm = o.value("clip_norm", cfg.optimizer.clip_norm);
        cfg.optimizer.eps = o.value("eps", cfg.optimizer.eps);
    }
    cfg.seed = j.value("seed", uint64_t{0});
    cfg.batch_blocks = j.value("batch_blocks", int64_t{64});
    cfg.steps = j.value("steps", int64_t{0});
    cfg.checkpoint_interval = j.value("checkpoint_interval", int64_t{100});
    cfg.out_dir = j.at("out_dir").get<std::string>();
    return cfg;
}

std::string trace_to_csv(const std::vector<StepRecord>& trace) {
    std::ostringstream out;
    out << "step,lr,loss,grad_norm,tokens_seen\n";
    out.precision(10);
    for (const auto& r : trace) {
        out << r.step << ',' << r.lr << ',' << r.loss << ',' << r.grad_norm << ','
            << r.tokens_seen << '\n';
    }
    return out.str();
}

namespace {

// Default peak learning rates per preset; 300m falls back to the 150m/600m
// value since no dedicated rate is established for it.
double preset_peak_lr(const std::string& preset) {
    if (preset == "50m") return 6e-4;
    return 3e-4;
}

std::vector<int64_t> epoch_order(uint64_t seed, int64_t epoch, int64_t n_blocks) {
    std::vector<int64_t> order(static_cast<size_t>(n_blocks));
    for (int64_t i = 0; i < n_blocks; ++i) order[static_cast<size_t>(i)] = i;
    util::Rng rng(seed * 0x9E3779B97F4A7C15ull + static_cast<uint64_t>(epoch) + 1);
    rng.shuffle(order);
    return order;
}

}  // namespace

TrainResult train(const model::ModelConfig& cfg, const bpe::BlockFile& blocks,
                  OptimizerConfig opt_cfg, uint64_t seed, int64_t batch_blocks,
                  int64_t steps, const StepObserver& on_step,
                  model::Parameters<float>* initial, OptimizerState<float>* initial_state,
                  OptimizerConfig* resolved) {
    const int64_t n_blocks = static_cast<int64_t>(blocks.header.block_count);
    const int64_t block_len = blocks.header.block_len;
    if (n_blocks == 0) throw std::invalid_argument("block file contains no blocks");
    if (block_len > cfg.context_len) {
        throw std::invalid_argument("block length exceeds the model context length");
    }
    for (const uint32_t id : blocks.ids) {
        if (static_cast<int64_t>(id) >= cfg.vocab_size) {
            throw std::invalid_argument("block file contains ids outside the model vocabulary");
        }
    }
    batch_blocks = std::min(batch_blocks, n_blocks);
    if (batch_blocks < 1) throw std::invalid_argument("batch_blocks must be >= 1");

    const int64_t steps_per_epoch = (n_blocks + batch_blocks - 1) / batch_blocks;
    const int64_t total_steps = steps > 0 ? steps : steps_per_epoch;
    opt_cfg.total_steps = total_steps;
    opt_cfg.apply_defaults();
    opt_cfg.validate();
    if (resolved) *resolved = opt_cfg;

    TrainResult result;
    result.params = initial ? std::move(*initial) : model::Parameters<float>::init(cfg, seed);
    result.opt_state =
        initial_state ? std::move(*initial_state) : OptimizerState<float>::zeros(cfg);

    model::Parameters<float> grads = model::Parameters<float>::zeros(cfg);
    std::vector<int> ids(static_cast<size_t>(block_len - 1));
    std::vector<int> targets(static_cast<size_t>(block_len - 1));

    int64_t tokens_seen = result.opt_state.step * batch_blocks * block_len;
    std::vector<int64_t> order;
    int64_t order_epoch = -1;

    while (result.opt_state.step < total_steps) {
        const int64_t step = result.opt_state.step;  // completed steps so far
        const int64_t epoch = step / steps_per_epoch;
        const int64_t pos = (step % steps_per_epoch) * batch_blocks;
        if (epoch != order_epoch) {
            order = epoch_order(seed, epoch, n_blocks);
            order_epoch = epoch;
        }
        std::vector<int64_t> batch(
            order.begin() + pos,
            order.begin() + std::min<int64_t>(pos + batch_blocks, n_blocks));
        std::sort(batch.begin(), batch.end());  // fixed accumulation order

        auto refs = model::tensor_refs(grads);
        for (const auto& ref : refs) {
            std::fill(ref.data, ref.data + ref.rows * ref.cols, 0.0f);
        }

        double loss_sum = 0;
        for (const int64_t b : batch) {
            const uint32_t* base = blocks.ids.data() + b * block_len;
            for (int64_t k = 0; k + 1 < block_len; ++k) {
                ids[static_cast<size_t>(k)] = static_cast<int>(base[k]);
                targets[static_cast<size_t>(k)] = static_cast<int>(base[k + 1]);
            }
            loss_sum += model::loss_and_gradients<float>(result.params, cfg, ids, targets, grads);
        }
        const double batch_size = static_cast<double>(batch.size());
        const float inv_batch = static_cast<float>(1.0 / batch_size);
        for (const auto& ref : refs) {
            Eigen::Map<model::Vec<float>> flat(ref.data, ref.rows * ref.cols);
            flat *= inv_batch;
        }
        const double loss = loss_sum / batch_size;
        if (!std::isfinite(loss)) {
            throw std::runtime_error("loss is not finite at step " + std::to_string(step + 1));
        }

        const double grad_norm = clip_gradients(grads, opt_cfg.clip_norm);
        const double lr = lr_at_step(step + 1, opt_cfg);
        adamw_step(result.params, grads, result.opt_state, opt_cfg, lr);

        tokens_seen += static_cast<int64_t>(batch.size()) * block_len;
        const StepRecord record{result.opt_state.step, lr, loss, grad_norm, tokens_seen};
        result.trace.push_back(record);
        if (on_step) on_step(record, result.params, result.opt_state);
    }
    return result;
}

namespace {

std::string opt_sidecar_json(const OptimizerConfig& cfg, int64_t step) {
    ordered_json j;
    j["step"] = step;
    ordered_json o;
    o["peak_lr"] = cfg.peak_lr;
    o["min_lr"] = cfg.min_lr;
    o["warmup_steps"] = cfg.warmup_steps;
    o["total_steps"] = cfg.total_steps;
    o["beta1"] = cfg.beta1;
    o["beta2"] = cfg.beta2;
    o["weight_decay"] = cfg.weight_decay;
    o["clip_norm"] = cfg.clip_norm;
    o["eps"] = cfg.eps;
    j["optimizer"] = o;
    return j.dump(2) + "\n";
}

void save_run_state(const std::string& out_dir, const model::ModelConfig& cfg,
                    const model::Parameters<float>& params,
                    const OptimizerState<float>& state, const OptimizerConfig& opt_cfg) {
    model::save_checkpoint(params, cfg, out_dir + "/checkpoint.bin");
    model::save_checkpoint(state.m, cfg, out_dir + "/optimizer_m.bin");
    model::save_checkpoint(state.v, cfg, out_dir + "/optimizer_v.bin");
    io::atomic_write(out_dir + "/optimizer.json", opt_sidecar_json(opt_cfg, state.step));
}

}  // namespace

TrainResult run_training(const RunConfig& run_cfg, bool resume) {
    const bpe::BlockFile blocks = bpe::load_blocks(run_cfg.blocks_path);

    model::ModelConfig cfg =
        run_cfg.model ? *run_cfg.model : model::preset(run_cfg.preset);
    if (cfg.vocab_size == 0) cfg.vocab_size = blocks.header.vocab_size;
    cfg.validate();

    OptimizerConfig opt_cfg = run_cfg.optimizer;
    if (!run_cfg.preset.empty() && !run_cfg.peak_lr_explicit) {
        opt_cfg.peak_lr = preset_peak_lr(run_cfg.preset);
    }

    std::filesystem::create_directories(run_cfg.out_dir);

    model::Parameters<float>* initial = nullptr;
    OptimizerState<float>* initial_state = nullptr;
    model::Parameters<float> resumed_params;
    OptimizerState<float> resumed_state;
    if (resume) {
        auto ckpt = model::load_checkpoint(run_cfg.out_dir + "/checkpoint.bin");
        resumed_params = std::move(ckpt.params);
        resumed_state.m = model::load_checkpoint(run_cfg.out_dir + "/optimizer_m.bin").params;
        resumed_state.v = model::load_checkpoint(run_cfg.out_dir + "/optimizer_v.bin").params;
        std::ifstream side(run_cfg.out_dir + "/optimizer.json");
        if (!side) throw std::runtime_error("missing optimizer sidecar for resume");
        const json j = json::parse(side);
        resumed_state.step = j.at("step").get<int64_t>();
        initial = &resumed_params;
        initial_state = &resumed_state;
    }

    OptimizerConfig resolved_opt;
    // A non-finite loss aborts the run; the last periodic checkpoint stays in
    // place since every writer is atomic.
    TrainResult result = train(
        cfg, blocks, opt_cfg, run_cfg.seed, run_cfg.batch_blocks, run_cfg.steps,
        [&](const StepRecord& r, const model::Parameters<float>& params,
            const OptimizerState<float>& state) {
            if (run_cfg.checkpoint_interval > 0 &&
                r.step % run_cfg.checkpoint_interval == 0) {
                save_run_state(run_cfg.out_dir, cfg, params, state, resolved_opt);
            }
        },
        initial, initial_state, &resolved_opt);

    save_run_state(run_cfg.out_dir, cfg, result.params, result.opt_state, resolved_opt);
    io::atomic_write(run_cfg.out_dir + "/trace.csv", trace_to_csv(result.trace));
    result.checkpoint_path = run_cfg.out_dir + "/checkpoint.bin";
    return result;
}

}  // namespace tulpar::train
