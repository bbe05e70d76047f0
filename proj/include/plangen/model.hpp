#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "plangen/kernels.hpp"

namespace plangen {

struct ModelConfig {
    int layers = 4;
    int heads = 4;
    int width = 128;
    int ffn = 512;
    int max_len = 1024;
    int vocab = 0;  // set from the vocabulary
    float dropout = 0.0f;

    void validate() const;  // throws std::invalid_argument
    std::string to_json() const;
    static ModelConfig from_json(std::string_view json_text);
    bool operator==(const ModelConfig&) const = default;
};

template <typename S>
struct DecodeCacheT {
    explicit DecodeCacheT(const ModelConfig& cfg)
        : max_len(cfg.max_len),
          width(cfg.width),
          k(cfg.layers, std::vector<S>(static_cast<size_t>(cfg.max_len) * cfg.width)),
          v(cfg.layers, std::vector<S>(static_cast<size_t>(cfg.max_len) * cfg.width)) {}

    void reset() { len = 0; }

    int len = 0;
    int max_len = 0;
    int width = 0;
    std::vector<std::vector<S>> k, v;  // per layer, rows [0, len)
};

// Decoder-only causal transformer with pre-norm blocks, learned positional
// embeddings and a single softmax head over the unified vocabulary. The
// scalar type is a template parameter: float for training and inference,
// double for finite-difference gradient checks.
template <typename S>
class TransformerT {
public:
    explicit TransformerT(const ModelConfig& cfg);

    // deterministic under seed; weights N(0, 0.02), biases zero, gains one
    void init_params(uint64_t seed);

    static size_t param_count(const ModelConfig& cfg);
    size_t param_count() const { return params_.size(); }

    // Full training forward; returns logits [T, vocab] (owned by the model,
    // valid until the next forward). Activations are retained for backward.
    const S* forward(std::span<const int32_t> ids);

    // Accumulates parameter gradients for the forward above.
    void backward(std::span<const int32_t> ids, const S* dlogits);
    void zero_grads();

    // Runs the prefix through the model, filling the cache; optionally
    // returns the logits of the last position.
    void prefill(DecodeCacheT<S>& cache, std::span<const int32_t> ids,
                 S* last_logits = nullptr);
    // Appends one token and returns logits for the next position.
    void decode_step(DecodeCacheT<S>& cache, int32_t token, S* logits);

    std::vector<S>& params() { return params_; }
    const std::vector<S>& params() const { return params_; }
    std::vector<S>& grads() { return grads_; }

    const ModelConfig& config() const { return cfg_; }

    // Seeds the dropout mask stream for the next training forward.
    void set_dropout_seed(uint64_t seed) { dropout_seed_ = seed; }

    kernels::Exec exec = kernels::Exec::Parallel;

private:
    struct LayerParams {
        size_t ln1_g, ln1_b, q_w, k_w, v_w, qkv_b, ao_w, ao_b;
        size_t ln2_g, ln2_b, fc_w, fc_b, mp_w, mp_b;
    };
    struct LayerActs {
        std::vector<S> ln1_out, ln1_mean, ln1_rstd;
        std::vector<S> q, k, v, probs, att, mid;
        std::vector<S> ln2_out, ln2_mean, ln2_rstd;
        std::vector<S> fc_out, gelu_out, out;
        std::vector<S> drop_att, drop_mlp;  // dropout masks when enabled
    };

    const S* p(size_t off) const { return params_.data() + off; }
    S* g(size_t off) { return grads_.data() + off; }
    void ensure_acts(int t);
    void apply_dropout(std::vector<S>& mask, S* data, size_t n, uint64_t stream);

    ModelConfig cfg_;
    std::vector<S> params_, grads_;
    size_t wte_ = 0, wpe_ = 0, lnf_g_ = 0, lnf_b_ = 0, head_w_ = 0, head_b_ = 0;
    std::vector<LayerParams> layer_;

    // training activations
    int act_t_ = 0;
    std::vector<S> x0_, lnf_out_, lnf_mean_, lnf_rstd_, logits_;
    std::vector<S> drop_emb_;
    std::vector<LayerActs> acts_;
    uint64_t dropout_seed_ = 0;

    // scratch for incremental decoding
    std::vector<S> step_buf_;
};

using Transformer = TransformerT<float>;
using DecodeCache = DecodeCacheT<float>;

}  // namespace plangen
