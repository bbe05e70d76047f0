#include "plangen/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace plangen {

void TrainConfig::validate() const {
    if (lr <= 0) throw std::invalid_argument("lr must be positive");
    if (lr_min_frac < 0 || lr_min_frac > 1)
        throw std::invalid_argument("lr_min_frac must be in [0, 1]");
    if (batch < 1) throw std::invalid_argument("batch must be >= 1");
    if (steps < 1) throw std::invalid_argument("steps must be >= 1");
    if (warmup_steps < 0) throw std::invalid_argument("warmup_steps must be >= 0");
    if (cond_dropout < 0 || cond_dropout > 1)
        throw std::invalid_argument("cond_dropout must be in [0, 1]");
    if (mix_joint < 0 || mix_understanding < 0 || mix_planning < 0 ||
        mix_joint + mix_understanding + mix_planning == 0)
        throw std::invalid_argument("task mix must have a positive total");
    if (weights.alpha < 0 || weights.beta < 0 || weights.gamma < 0)
        throw std::invalid_argument("loss weights must be nonnegative");
}

namespace {

// stable log-softmax pieces for one row
template <typename S>
double row_nll(const S* row, int vocab, int32_t target) {
    double maxv = row[0];
    for (int i = 1; i < vocab; ++i) maxv = std::max(maxv, static_cast<double>(row[i]));
    double denom = 0;
    for (int i = 0; i < vocab; ++i) denom += std::exp(static_cast<double>(row[i]) - maxv);
    return -(static_cast<double>(row[target]) - maxv - std::log(denom));
}

LossChannel token_channel(const TokenSequence& seq, size_t i) { return seq.channel[i]; }

}  // namespace

template <typename S>
double masked_nll(const S* logits, std::span<const int32_t> ids,
                  std::span<const float> weights, int vocab) {
    if (ids.size() != weights.size()) throw std::invalid_argument("ids/weights size mismatch");
    double acc = 0, wsum = 0;
    for (size_t i = 0; i + 1 < ids.size(); ++i) {
        const float w = weights[i + 1];
        if (w == 0) continue;
        acc += w * row_nll(logits + i * static_cast<size_t>(vocab), vocab, ids[i + 1]);
        wsum += w;
    }
    if (wsum == 0) throw std::invalid_argument("no supervised tokens");
    return acc / wsum;
}

template double masked_nll<float>(const float*, std::span<const int32_t>,
                                  std::span<const float>, int);
template double masked_nll<double>(const double*, std::span<const int32_t>,
                                   std::span<const float>, int);

template <typename S>
BatchLoss batch_loss(TransformerT<S>& model, std::span<const TokenSequence> batch,
                     const LossWeights& weights, bool compute_grad) {
    const int vocab = model.config().vocab;

    // channel weight totals over the whole batch, known before any forward
    double wsum[4] = {0, 0, 0, 0};
    for (const auto& seq : batch) {
        for (size_t i = 1; i < seq.size(); ++i)
            wsum[static_cast<int>(token_channel(seq, i))] += seq.loss_weight[i];
    }
    const double coef[4] = {0.0, weights.alpha, weights.beta, weights.gamma};

    BatchLoss out;
    double acc[4] = {0, 0, 0, 0};
    std::vector<S> dlogits;
    for (const auto& seq : batch) {
        const S* logits = model.forward(seq.ids);
        const size_t t = seq.size();
        if (compute_grad) dlogits.assign(t * static_cast<size_t>(vocab), S(0));
        for (size_t i = 0; i + 1 < t; ++i) {
            const float w = seq.loss_weight[i + 1];
            if (w == 0) continue;
            const int ch = static_cast<int>(token_channel(seq, i + 1));
            const S* row = logits + i * static_cast<size_t>(vocab);
            const int32_t target = seq.ids[i + 1];

            double maxv = row[0];
            for (int k = 1; k < vocab; ++k) maxv = std::max(maxv, static_cast<double>(row[k]));
            double denom = 0;
            for (int k = 0; k < vocab; ++k)
                denom += std::exp(static_cast<double>(row[k]) - maxv);
            const double log_denom = std::log(denom);
            const double nll = -(static_cast<double>(row[target]) - maxv - log_denom);
            acc[ch] += w * nll;
            out.supervised_nll += nll;
            out.supervised_tokens += 1;

            if (compute_grad && coef[ch] != 0 && wsum[ch] > 0) {
                const double scale = coef[ch] * w / wsum[ch];
                S* drow = dlogits.data() + i * static_cast<size_t>(vocab);
                for (int k = 0; k < vocab; ++k) {
                    const double p = std::exp(static_cast<double>(row[k]) - maxv - log_denom);
                    drow[k] = static_cast<S>(scale * p);
                }
                drow[target] -= static_cast<S>(scale);
            }
        }
        if (compute_grad) model.backward(seq.ids, dlogits.data());
    }

    out.lp = wsum[1] > 0 ? acc[1] / wsum[1] : 0.0;
    out.lig = wsum[2] > 0 ? acc[2] / wsum[2] : 0.0;
    out.ilu = wsum[3] > 0 ? acc[3] / wsum[3] : 0.0;
    out.total = weights.alpha * out.lp + weights.beta * out.lig + weights.gamma * out.ilu;
    if (out.supervised_tokens > 0) out.supervised_nll /= out.supervised_tokens;
    return out;
}

template BatchLoss batch_loss<float>(TransformerT<float>&, std::span<const TokenSequence>,
                                     const LossWeights&, bool);
template BatchLoss batch_loss<double>(TransformerT<double>&, std::span<const TokenSequence>,
                                      const LossWeights&, bool);

TokenSequence apply_condition_dropout(const TokenSequence& seq, double probability, Rng& rng,
                                      const SequenceBuilder& builder) {
    if (seq.task != Task::Joint && seq.task != Task::LayoutToImage)
        throw std::invalid_argument("condition dropout applies to generation sequences");
    if (!rng.next_bernoulli(probability)) return seq;

    const auto image_span = seq.find_segment(SegmentKind::ImageTokens);
    if (!image_span) throw std::logic_error("generation sequence lacks an image span");
    const Vocab& vocab = builder.vocab();
    ImageTokens image(vocab.grid());
    size_t cell = 0;
    for (size_t i = image_span->begin; i < image_span->end; ++i)
        image.cells[cell++] = vocab.image_index(seq.ids[i]);

    // the supervised structural closers carry the original alpha/beta
    float alpha = 0, beta = 0;
    for (size_t i = 0; i < seq.size(); ++i) {
        if (seq.ids[i] == vocab.grounding_end) alpha = seq.loss_weight[i];
        if (seq.ids[i] == vocab.image_end) beta = seq.loss_weight[i];
    }
    TokenSequence dropped = builder.build_joint("", Layout{}, image, alpha, beta);
    dropped.task = seq.task;
    return dropped;
}

double grad_check(TransformerT<double>& model, const TokenSequence& seq, int sample_count,
                  uint64_t seed, const LossWeights& weights) {
    const TokenSequence batch[1] = {seq};
    model.zero_grads();
    const BatchLoss base = batch_loss<double>(model, batch, weights, true);
    (void)base;
    std::vector<double> analytic = model.grads();

    Rng rng(mix_seed(seed, 0x9cad));
    const double eps = 1e-3;
    double max_rel = 0;
    auto loss_at = [&]() {
        return batch_loss<double>(model, batch, weights, false).total;
    };
    for (int s = 0; s < sample_count; ++s) {
        const size_t idx = rng.next_below(model.params().size());
        const double saved = model.params()[idx];
        model.params()[idx] = saved + eps;
        const double up = loss_at();
        model.params()[idx] = saved - eps;
        const double down = loss_at();
        model.params()[idx] = saved;
        const double numeric = (up - down) / (2 * eps);
        const double a = analytic[idx];
        const double rel = std::abs(a - numeric) / std::max(1e-5, std::abs(a) + std::abs(numeric));
        max_rel = std::max(max_rel, rel);
    }
    return max_rel;
}

double lr_at_step(const TrainConfig& cfg, int64_t step) {
    if (cfg.warmup_steps > 0 && step < cfg.warmup_steps)
        return cfg.lr * static_cast<double>(step + 1) / cfg.warmup_steps;
    const double lr_min = cfg.lr * cfg.lr_min_frac;
    const double span = std::max<int64_t>(1, cfg.steps - cfg.warmup_steps);
    const double progress =
        std::clamp(static_cast<double>(step - cfg.warmup_steps) / span, 0.0, 1.0);
    return lr_min + 0.5 * (cfg.lr - lr_min) * (1.0 + std::cos(progress * M_PI));
}

Task slot_task(const TrainConfig& cfg, int slot) {
    const int total = cfg.mix_joint + cfg.mix_understanding + cfg.mix_planning;
    const int r = (slot * total) / cfg.batch;  // proportional slices of the batch
    if (r < cfg.mix_joint) return Task::Joint;
    if (r < cfg.mix_joint + cfg.mix_understanding) return Task::Understanding;
    return Task::PlanOnly;
}

size_t slot_record(const TrainConfig& cfg, int64_t step, int slot, size_t dataset_size) {
    return static_cast<size_t>(
        mix_seed(cfg.seed, 0xba7c000ull + static_cast<uint64_t>(step), slot) % dataset_size);
}

TokenSequence build_task_sequence(const SequenceBuilder& builder, const SceneRecord& record,
                                  Task task, const LossWeights& weights) {
    switch (task) {
        case Task::Joint:
            return builder.build_joint(record.global_caption, record.layout,
                                       record.image_tokens, weights.alpha, weights.beta);
        case Task::LayoutToImage:
            return builder.build_layout_to_image(record.global_caption, record.layout,
                                                 record.image_tokens);
        case Task::PlanOnly:
            return builder.build_plan_only(record.global_caption, record.layout,
                                           weights.alpha);
        case Task::Understanding:
            return builder.build_understanding(record.image_tokens, record.global_caption,
                                               record.layout, weights.gamma);
    }
    throw std::logic_error("unknown task");
}

TrainResult train(Transformer& model, const Vocab& vocab,
                  const std::vector<SceneRecord>& data, const TrainConfig& cfg,
                  const std::string& out_dir, int64_t start_step, OptimizerState* opt_in) {
    cfg.validate();
    if (data.empty()) throw std::invalid_argument("dataset is empty");
    fs::create_directories(out_dir);

    SequenceBuilder builder(vocab, model.config().max_len);
    OptimizerState opt;
    if (opt_in) {
        opt = *opt_in;
        if (opt.m.size() != model.params().size())
            throw std::invalid_argument("optimizer state does not match the model");
    } else {
        opt.m.assign(model.params().size(), 0.0f);
        opt.v.assign(model.params().size(), 0.0f);
        opt.step = start_step;
    }

    std::ofstream metrics(fs::path(out_dir) / "metrics.ndjson",
                          start_step > 0 ? std::ios::app : std::ios::trunc);

    TrainResult result;
    std::vector<TokenSequence> batch;
    for (int64_t step = start_step; step < cfg.steps; ++step) {
        batch.clear();
        for (int slot = 0; slot < cfg.batch; ++slot) {
            const Task task = slot_task(cfg, slot);
            const SceneRecord& rec = data[slot_record(cfg, step, slot, data.size())];
            TokenSequence seq = build_task_sequence(builder, rec, task, cfg.weights);
            if (task == Task::Joint && cfg.cond_dropout > 0) {
                Rng drop_rng(mix_seed(cfg.seed, 0xd209ull + static_cast<uint64_t>(step), slot));
                seq = apply_condition_dropout(seq, cfg.cond_dropout, drop_rng, builder);
            }
            batch.push_back(std::move(seq));
        }

        model.zero_grads();
        const BatchLoss loss = batch_loss<float>(model, batch, cfg.weights, true);
        if (!std::isfinite(loss.total)) {
            nlohmann::json dump;
            dump["step"] = step;
            dump["losses"] = {loss.lp, loss.lig, loss.ilu};
            dump["sequences"] = nlohmann::json::array();
            for (const auto& seq : batch) {
                dump["sequences"].push_back(
                    {{"task", task_name(seq.task)}, {"len", seq.size()}});
            }
            const auto dump_path = fs::path(out_dir) / ("diagnostic_step_" +
                                                        std::to_string(step) + ".json");
            std::ofstream(dump_path) << dump.dump(2);
            throw std::runtime_error("non-finite loss at step " + std::to_string(step) +
                                     "; batch dump at " + dump_path.string());
        }

        const double lr = lr_at_step(cfg, step);
        opt.step += 1;
        kernels::adamw_update<float>(model.exec, model.params().data(), model.grads().data(),
                                     opt.m.data(), opt.v.data(), model.params().size(),
                                     static_cast<float>(lr),
                                     static_cast<float>(cfg.adam_beta1),
                                     static_cast<float>(cfg.adam_beta2),
                                     static_cast<float>(cfg.adam_eps),
                                     static_cast<float>(cfg.weight_decay),
                                     static_cast<int>(opt.step));

        StepMetrics m{step, loss.lp, loss.lig, loss.ilu, loss.total, lr};
        result.log.push_back(m);
        metrics << nlohmann::json({{"step", step},
                                   {"loss_lp", loss.lp},
                                   {"loss_lig", loss.lig},
                                   {"loss_ilu", loss.ilu},
                                   {"total", loss.total},
                                   {"lr", lr}})
                       .dump()
                << "\n";

        const bool periodic =
            cfg.checkpoint_every > 0 && (step + 1) % cfg.checkpoint_every == 0;
        if (periodic || step + 1 == cfg.steps) {
            Checkpoint ckpt;
            ckpt.config = model.config();
            ckpt.mode = vocab.mode();
            ckpt.vocab_hash = vocab.hash();
            ckpt.step = step + 1;
            ckpt.params = model.params();
            ckpt.opt = opt;
            const auto path = fs::path(out_dir) / (step + 1 == cfg.steps
                                                       ? "model_final.ckpt"
                                                       : "model_step_" +
                                                             std::to_string(step + 1) +
                                                             ".ckpt");
            save_checkpoint(path.string(), ckpt);
            result.checkpoint_path = path.string();
        }
    }
    return result;
}

}  // namespace plangen
