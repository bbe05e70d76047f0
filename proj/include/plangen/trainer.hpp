#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "plangen/checkpoint.hpp"
#include "plangen/model.hpp"
#include "plangen/rng.hpp"
#include "plangen/scene.hpp"
#include "plangen/sequence.hpp"

namespace plangen {

struct LossWeights {
    float alpha = 1.0f;  // layout planning
    float beta = 1.0f;   // layout-to-image
    float gamma = 1.0f;  // image layout understanding
};

struct TrainConfig {
    double lr = 3e-4;
    double lr_min_frac = 0.1;  // cosine decays to lr * lr_min_frac
    int warmup_steps = 100;
    int batch = 16;
    int steps = 3000;
    double weight_decay = 0.01;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.95;
    double adam_eps = 1e-8;
    double cond_dropout = 0.1;  // joint sequences lose their condition spans
    uint64_t seed = 1;
    // per-batch task mix, matching the joint : understanding : planning ratio
    int mix_joint = 3;
    int mix_understanding = 3;
    int mix_planning = 2;
    LossWeights weights;
    int checkpoint_every = 0;  // 0: final checkpoint only

    void validate() const;
};

// Next-token weighted NLL over one sequence: the logit row at position i
// predicts ids[i+1], weighted by weights[i+1]; the result is the weighted sum
// divided by the total weight. Throws std::invalid_argument when no position
// carries weight.
template <typename S>
double masked_nll(const S* logits, std::span<const int32_t> ids,
                  std::span<const float> weights, int vocab);

struct BatchLoss {
    double lp = 0, lig = 0, ilu = 0;  // per-channel weight-normalized means
    double total = 0;                 // alpha*lp + beta*lig + gamma*ilu
    double supervised_nll = 0;        // plain mean NLL over all supervised tokens
    size_t supervised_tokens = 0;
};

// Forward (and optionally backward) over a batch of sequences. The total
// loss decomposes exactly as alpha*L_LP + beta*L_LIG + gamma*L_ILU where each
// term is the weighted mean over that channel's tokens across the batch.
// Channels absent from the batch contribute zero.
template <typename S>
BatchLoss batch_loss(TransformerT<S>& model, std::span<const TokenSequence> batch,
                     const LossWeights& weights, bool compute_grad);

// With the given probability the TextPrompt span becomes empty and the
// layout span becomes the empty layout; all other tokens keep their weights.
TokenSequence apply_condition_dropout(const TokenSequence& seq, double probability, Rng& rng,
                                      const SequenceBuilder& builder);

// Central finite differences (epsilon 1e-3) against the analytic gradient on
// sample_count randomly chosen parameters; returns the max relative error.
// Runs on the double-precision model so the difference quotient is clean.
double grad_check(TransformerT<double>& model, const TokenSequence& seq, int sample_count,
                  uint64_t seed, const LossWeights& weights = {});

struct StepMetrics {
    int64_t step = 0;
    double loss_lp = 0, loss_lig = 0, loss_ilu = 0, total = 0;
    double lr = 0;
};

struct TrainResult {
    std::vector<StepMetrics> log;
    std::string checkpoint_path;  // final checkpoint
};

// Multi-task training loop over scene records. Deterministic given the seed
// (and a fixed kernel execution mode). Metrics stream to
// out_dir/metrics.ndjson; checkpoints carry optimizer state for bit-exact
// resume. start/opt resume a run from a loaded checkpoint.
TrainResult train(Transformer& model, const Vocab& vocab,
                  const std::vector<SceneRecord>& data, const TrainConfig& cfg,
                  const std::string& out_dir, int64_t start_step = 0,
                  OptimizerState* opt_in = nullptr);

double lr_at_step(const TrainConfig& cfg, int64_t step);

// Deterministic batch composition: the task and record index of every slot
// are pure functions of (seed, step, slot).
Task slot_task(const TrainConfig& cfg, int slot);
size_t slot_record(const TrainConfig& cfg, int64_t step, int slot, size_t dataset_size);

TokenSequence build_task_sequence(const SequenceBuilder& builder, const SceneRecord& record,
                                  Task task, const LossWeights& weights);

}  // namespace plangen
