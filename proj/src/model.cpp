#include "plangen/model.hpp"

#include <cstring>
#include <stdexcept>

#include "plangen/rng.hpp"
#include <nlohmann/json.hpp>

namespace plangen {

void ModelConfig::validate() const {
    if (layers < 1) throw std::invalid_argument("layers must be >= 1");
    if (heads < 1) throw std::invalid_argument("heads must be >= 1");
    if (width < 1 || width % heads != 0)
        throw std::invalid_argument("width must be a positive multiple of heads");
    if (ffn < 1) throw std::invalid_argument("ffn must be >= 1");
    if (max_len < 1) throw std::invalid_argument("max_len must be >= 1");
    if (vocab < 2) throw std::invalid_argument("vocab must be >= 2");
    if (dropout < 0.0f || dropout >= 1.0f)
        throw std::invalid_argument("dropout must be in [0, 1)");
}

std::string ModelConfig::to_json() const {
    nlohmann::json j;
    j["layers"] = layers;
    j["heads"] = heads;
    j["width"] = width;
    j["ffn"] = ffn;
    j["max_len"] = max_len;
    j["vocab"] = vocab;
    j["dropout"] = dropout;
    return j.dump();
}

ModelConfig ModelConfig::from_json(std::string_view json_text) {
    const auto j = nlohmann::json::parse(json_text);
    ModelConfig c;
    auto opt = [&j](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    opt("layers", c.layers);
    opt("heads", c.heads);
    opt("width", c.width);
    opt("ffn", c.ffn);
    opt("max_len", c.max_len);
    opt("vocab", c.vocab);
    opt("dropout", c.dropout);
    return c;
}

template <typename S>
size_t TransformerT<S>::param_count(const ModelConfig& cfg) {
    const size_t v = cfg.vocab, c = cfg.width, f = cfg.ffn, ml = cfg.max_len;
    const size_t per_layer = 2 * c                 // ln1
                             + 3 * c * c + 3 * c   // qkv
                             + c * c + c           // attn out proj
                             + 2 * c               // ln2
                             + f * c + f           // fc
                             + c * f + c;          // mlp proj
    return v * c + ml * c + cfg.layers * per_layer + 2 * c + v * c + v;
}

template <typename S>
TransformerT<S>::TransformerT(const ModelConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    const size_t c = cfg_.width, f = cfg_.ffn, v = cfg_.vocab;
    size_t off = 0;
    auto claim = [&off](size_t n) {
        const size_t at = off;
        off += n;
        return at;
    };
    wte_ = claim(v * c);
    wpe_ = claim(static_cast<size_t>(cfg_.max_len) * c);
    layer_.resize(cfg_.layers);
    for (auto& lp : layer_) {
        lp.ln1_g = claim(c);
        lp.ln1_b = claim(c);
        lp.q_w = claim(c * c);
        lp.k_w = claim(c * c);
        lp.v_w = claim(c * c);
        lp.qkv_b = claim(3 * c);
        lp.ao_w = claim(c * c);
        lp.ao_b = claim(c);
        lp.ln2_g = claim(c);
        lp.ln2_b = claim(c);
        lp.fc_w = claim(f * c);
        lp.fc_b = claim(f);
        lp.mp_w = claim(c * f);
        lp.mp_b = claim(c);
    }
    lnf_g_ = claim(c);
    lnf_b_ = claim(c);
    head_w_ = claim(v * c);
    head_b_ = claim(v);
    if (off != param_count(cfg_)) throw std::logic_error("parameter layout mismatch");
    params_.assign(off, S(0));
    grads_.assign(off, S(0));
}

template <typename S>
void TransformerT<S>::init_params(uint64_t seed) {
    Rng rng(mix_seed(seed, 0x90de1));
    const size_t c = cfg_.width, f = cfg_.ffn, v = cfg_.vocab;
    auto gauss = [&](size_t off, size_t n, double std) {
        for (size_t i = 0; i < n; ++i)
            params_[off + i] = static_cast<S>(rng.next_gaussian() * std);
    };
    auto fill = [&](size_t off, size_t n, S value) {
        for (size_t i = 0; i < n; ++i) params_[off + i] = value;
    };
    gauss(wte_, v * c, 0.02);
    gauss(wpe_, static_cast<size_t>(cfg_.max_len) * c, 0.02);
    for (const auto& lp : layer_) {
        fill(lp.ln1_g, c, S(1));
        fill(lp.ln1_b, c, S(0));
        gauss(lp.q_w, c * c, 0.02);
        gauss(lp.k_w, c * c, 0.02);
        gauss(lp.v_w, c * c, 0.02);
        fill(lp.qkv_b, 3 * c, S(0));
        gauss(lp.ao_w, c * c, 0.02);
        fill(lp.ao_b, c, S(0));
        fill(lp.ln2_g, c, S(1));
        fill(lp.ln2_b, c, S(0));
        gauss(lp.fc_w, f * c, 0.02);
        fill(lp.fc_b, f, S(0));
        gauss(lp.mp_w, c * f, 0.02);
        fill(lp.mp_b, c, S(0));
    }
    fill(lnf_g_, c, S(1));
    fill(lnf_b_, c, S(0));
    gauss(head_w_, v * c, 0.02);
    fill(head_b_, v, S(0));
}

template <typename S>
void TransformerT<S>::zero_grads() {
    std::fill(grads_.begin(), grads_.end(), S(0));
}

template <typename S>
void TransformerT<S>::ensure_acts(int t) {
    if (act_t_ >= t && !acts_.empty()) return;
    const size_t c = cfg_.width, f = cfg_.ffn, v = cfg_.vocab, h = cfg_.heads;
    const size_t tc = static_cast<size_t>(t) * c;
    x0_.resize(tc);
    lnf_out_.resize(tc);
    lnf_mean_.resize(t);
    lnf_rstd_.resize(t);
    logits_.resize(static_cast<size_t>(t) * v);
    acts_.resize(cfg_.layers);
    for (auto& a : acts_) {
        a.ln1_out.resize(tc);
        a.ln1_mean.resize(t);
        a.ln1_rstd.resize(t);
        a.q.resize(tc);
        a.k.resize(tc);
        a.v.resize(tc);
        a.probs.resize(h * static_cast<size_t>(t) * t);
        a.att.resize(tc);
        a.mid.resize(tc);
        a.ln2_out.resize(tc);
        a.ln2_mean.resize(t);
        a.ln2_rstd.resize(t);
        a.fc_out.resize(static_cast<size_t>(t) * f);
        a.gelu_out.resize(static_cast<size_t>(t) * f);
        a.out.resize(tc);
    }
    act_t_ = t;
}

template <typename S>
void TransformerT<S>::apply_dropout(std::vector<S>& mask, S* data, size_t n,
                                    uint64_t stream) {
    const double p = cfg_.dropout;
    mask.resize(n);
    Rng rng(mix_seed(dropout_seed_, stream));
    const S keep_scale = static_cast<S>(1.0 / (1.0 - p));
    for (size_t i = 0; i < n; ++i) {
        mask[i] = rng.next_bernoulli(p) ? S(0) : keep_scale;
        data[i] *= mask[i];
    }
}

template <typename S>
const S* TransformerT<S>::forward(std::span<const int32_t> ids) {
    using namespace kernels;
    const int t = static_cast<int>(ids.size());
    if (t == 0) throw std::invalid_argument("empty sequence");
    if (t > cfg_.max_len)
        throw std::invalid_argument("sequence length " + std::to_string(t) +
                                    " exceeds max_len " + std::to_string(cfg_.max_len));
    const int c = cfg_.width, f = cfg_.ffn, v = cfg_.vocab, h = cfg_.heads;
    const int hd = c / h;
    ensure_acts(t);

    for (int i = 0; i < t; ++i) {
        const int32_t id = ids[i];
        if (id < 0 || id >= v) throw std::invalid_argument("token id out of vocabulary");
        const S* te = p(wte_) + static_cast<size_t>(id) * c;
        const S* pe = p(wpe_) + static_cast<size_t>(i) * c;
        S* x = x0_.data() + static_cast<size_t>(i) * c;
        for (int j = 0; j < c; ++j) x[j] = te[j] + pe[j];
    }
    if (cfg_.dropout > 0) apply_dropout(drop_emb_, x0_.data(), static_cast<size_t>(t) * c, 0);

    const S* x = x0_.data();
    for (int l = 0; l < cfg_.layers; ++l) {
        const auto& lp = layer_[l];
        auto& a = acts_[l];
        layernorm_forward<S>(exec, x, p(lp.ln1_g), p(lp.ln1_b), a.ln1_out.data(),
                             a.ln1_mean.data(), a.ln1_rstd.data(), t, c);
        linear_forward<S>(exec, a.ln1_out.data(), p(lp.q_w), p(lp.qkv_b), a.q.data(), t, c, c);
        linear_forward<S>(exec, a.ln1_out.data(), p(lp.k_w), p(lp.qkv_b) + c, a.k.data(), t,
                          c, c);
        linear_forward<S>(exec, a.ln1_out.data(), p(lp.v_w), p(lp.qkv_b) + 2 * c, a.v.data(),
                          t, c, c);
        attention_forward<S>(exec, a.q.data(), a.k.data(), a.v.data(), a.probs.data(),
                             a.att.data(), t, t, h, hd, 0);
        linear_forward<S>(exec, a.att.data(), p(lp.ao_w), p(lp.ao_b), a.mid.data(), t, c, c);
        if (cfg_.dropout > 0)
            apply_dropout(a.drop_att, a.mid.data(), static_cast<size_t>(t) * c,
                          2 * static_cast<uint64_t>(l) + 1);
        for (size_t i = 0; i < static_cast<size_t>(t) * c; ++i) a.mid[i] += x[i];

        layernorm_forward<S>(exec, a.mid.data(), p(lp.ln2_g), p(lp.ln2_b), a.ln2_out.data(),
                             a.ln2_mean.data(), a.ln2_rstd.data(), t, c);
        linear_forward<S>(exec, a.ln2_out.data(), p(lp.fc_w), p(lp.fc_b), a.fc_out.data(), t,
                          c, f);
        gelu_forward<S>(exec, a.fc_out.data(), a.gelu_out.data(),
                        static_cast<size_t>(t) * f);
        linear_forward<S>(exec, a.gelu_out.data(), p(lp.mp_w), p(lp.mp_b), a.out.data(), t, f,
                          c);
        if (cfg_.dropout > 0)
            apply_dropout(a.drop_mlp, a.out.data(), static_cast<size_t>(t) * c,
                          2 * static_cast<uint64_t>(l) + 2);
        for (size_t i = 0; i < static_cast<size_t>(t) * c; ++i) a.out[i] += a.mid[i];
        x = a.out.data();
    }

    layernorm_forward<S>(exec, x, p(lnf_g_), p(lnf_b_), lnf_out_.data(), lnf_mean_.data(),
                         lnf_rstd_.data(), t, c);
    linear_forward<S>(exec, lnf_out_.data(), p(head_w_), p(head_b_), logits_.data(), t, c, v);
    return logits_.data();
}

template <typename S>
void TransformerT<S>::backward(std::span<const int32_t> ids, const S* dlogits) {
    using namespace kernels;
    const int t = static_cast<int>(ids.size());
    if (t == 0 || t != act_t_ || acts_.empty())
        throw std::logic_error("backward must follow a forward of the same length");
    const int c = cfg_.width, f = cfg_.ffn, v = cfg_.vocab, h = cfg_.heads;
    const int hd = c / h;
    const size_t tc = static_cast<size_t>(t) * c;

    std::vector<S> dx(tc), d_mid(tc), d_att(tc), scratch(tc);
    std::vector<S> dq(tc), dk(tc), dv(tc);
    std::vector<S> d_fc(static_cast<size_t>(t) * f), d_gelu(static_cast<size_t>(t) * f);

    // head and final norm
    linear_backward_params<S>(exec, lnf_out_.data(), dlogits, g(head_w_), g(head_b_), t, c,
                              v);
    linear_backward_input<S>(exec, dlogits, p(head_w_), scratch.data(), t, c, v);
    const S* x_last =
        cfg_.layers > 0 ? acts_[cfg_.layers - 1].out.data() : x0_.data();
    layernorm_backward<S>(exec, x_last, p(lnf_g_), lnf_mean_.data(), lnf_rstd_.data(),
                          scratch.data(), dx.data(), g(lnf_g_), g(lnf_b_), t, c);

    for (int l = cfg_.layers - 1; l >= 0; --l) {
        const auto& lp = layer_[l];
        auto& a = acts_[l];
        const S* x_in = l == 0 ? x0_.data() : acts_[l - 1].out.data();

        // out = mid + dropout(mp(gelu(fc(ln2(mid)))))
        std::copy(dx.begin(), dx.end(), d_mid.begin());
        if (cfg_.dropout > 0) {
            for (size_t i = 0; i < tc; ++i) dx[i] *= a.drop_mlp[i];
        }
        linear_backward_params<S>(exec, a.gelu_out.data(), dx.data(), g(lp.mp_w), g(lp.mp_b),
                                  t, f, c);
        linear_backward_input<S>(exec, dx.data(), p(lp.mp_w), d_gelu.data(), t, f, c);
        gelu_backward<S>(exec, a.fc_out.data(), d_gelu.data(), d_fc.data(),
                         static_cast<size_t>(t) * f);
        linear_backward_params<S>(exec, a.ln2_out.data(), d_fc.data(), g(lp.fc_w), g(lp.fc_b),
                                  t, c, f);
        linear_backward_input<S>(exec, d_fc.data(), p(lp.fc_w), scratch.data(), t, c, f);
        layernorm_backward<S>(exec, a.mid.data(), p(lp.ln2_g), a.ln2_mean.data(),
                              a.ln2_rstd.data(), scratch.data(), d_mid.data(), g(lp.ln2_g),
                              g(lp.ln2_b), t, c, /*accumulate=*/true);

        // mid = x_in + dropout(ao(att))
        std::copy(d_mid.begin(), d_mid.end(), dx.begin());
        if (cfg_.dropout > 0) {
            for (size_t i = 0; i < tc; ++i) d_mid[i] *= a.drop_att[i];
        }
        linear_backward_params<S>(exec, a.att.data(), d_mid.data(), g(lp.ao_w), g(lp.ao_b), t,
                                  c, c);
        linear_backward_input<S>(exec, d_mid.data(), p(lp.ao_w), d_att.data(), t, c, c);
        attention_backward<S>(exec, a.q.data(), a.k.data(), a.v.data(), a.probs.data(),
                              d_att.data(), dq.data(), dk.data(), dv.data(), t, h, hd);
        linear_backward_params<S>(exec, a.ln1_out.data(), dq.data(), g(lp.q_w), g(lp.qkv_b),
                                  t, c, c);
        linear_backward_params<S>(exec, a.ln1_out.data(), dk.data(), g(lp.k_w),
                                  g(lp.qkv_b) + c, t, c, c);
        linear_backward_params<S>(exec, a.ln1_out.data(), dv.data(), g(lp.v_w),
                                  g(lp.qkv_b) + 2 * c, t, c, c);
        linear_backward_input<S>(exec, dq.data(), p(lp.q_w), scratch.data(), t, c, c);
        linear_backward_input<S>(exec, dk.data(), p(lp.k_w), scratch.data(), t, c, c, true);
        linear_backward_input<S>(exec, dv.data(), p(lp.v_w), scratch.data(), t, c, c, true);
        layernorm_backward<S>(exec, x_in, p(lp.ln1_g), a.ln1_mean.data(), a.ln1_rstd.data(),
                              scratch.data(), dx.data(), g(lp.ln1_g), g(lp.ln1_b), t, c,
                              /*accumulate=*/true);
    }

    // embeddings; parallel over columns so repeated token ids cannot race
    if (cfg_.dropout > 0) {
        for (size_t i = 0; i < tc; ++i) dx[i] *= drop_emb_[i];
    }
    S* wte_g = g(wte_);
    S* wpe_g = g(wpe_);
    auto emb_col = [&](int col) {
        for (int i = 0; i < t; ++i) {
            const S d = dx[static_cast<size_t>(i) * c + col];
            wte_g[static_cast<size_t>(ids[i]) * c + col] += d;
            wpe_g[static_cast<size_t>(i) * c + col] += d;
        }
    };
    if (exec == Exec::Serial) {
        for (int col = 0; col < c; ++col) emb_col(col);
    } else {
#pragma omp parallel for schedule(static)
        for (int col = 0; col < c; ++col) emb_col(col);
    }
}

template <typename S>
void TransformerT<S>::prefill(DecodeCacheT<S>& cache, std::span<const int32_t> ids,
                              S* last_logits) {
    using namespace kernels;
    const int t = static_cast<int>(ids.size());
    if (t == 0) {
        if (last_logits) throw std::invalid_argument("cannot take logits of an empty prefix");
        return;
    }
    const int pos0 = cache.len;
    if (pos0 + t > cfg_.max_len) throw std::invalid_argument("prefix exceeds max_len");
    const int c = cfg_.width, f = cfg_.ffn, v = cfg_.vocab, h = cfg_.heads;
    const int hd = c / h;
    const size_t tc = static_cast<size_t>(t) * c;

    std::vector<S> x(tc), ln1(tc), q(tc), att(tc), mid(tc), ln2(tc);
    std::vector<S> fc(static_cast<size_t>(t) * f), gelu(static_cast<size_t>(t) * f);
    std::vector<S> probs(static_cast<size_t>(h) * t * (pos0 + t));
    std::vector<S> mean(t), rstd(t);

    for (int i = 0; i < t; ++i) {
        const int32_t id = ids[i];
        if (id < 0 || id >= v) throw std::invalid_argument("token id out of vocabulary");
        const S* te = p(wte_) + static_cast<size_t>(id) * c;
        const S* pe = p(wpe_) + static_cast<size_t>(pos0 + i) * c;
        for (int j = 0; j < c; ++j) x[static_cast<size_t>(i) * c + j] = te[j] + pe[j];
    }

    for (int l = 0; l < cfg_.layers; ++l) {
        const auto& lp = layer_[l];
        S* ck = cache.k[l].data();
        S* cv = cache.v[l].data();
        layernorm_forward<S>(exec, x.data(), p(lp.ln1_g), p(lp.ln1_b), ln1.data(),
                             mean.data(), rstd.data(), t, c);
        linear_forward<S>(exec, ln1.data(), p(lp.q_w), p(lp.qkv_b), q.data(), t, c, c);
        // keys/values land directly in the cache rows for this span
        linear_forward<S>(exec, ln1.data(), p(lp.k_w), p(lp.qkv_b) + c,
                          ck + static_cast<size_t>(pos0) * c, t, c, c);
        linear_forward<S>(exec, ln1.data(), p(lp.v_w), p(lp.qkv_b) + 2 * c,
                          cv + static_cast<size_t>(pos0) * c, t, c, c);
        attention_forward<S>(exec, q.data(), ck, cv, probs.data(), att.data(), t, pos0 + t, h,
                             hd, pos0);
        linear_forward<S>(exec, att.data(), p(lp.ao_w), p(lp.ao_b), mid.data(), t, c, c);
        for (size_t i = 0; i < tc; ++i) mid[i] += x[i];
        layernorm_forward<S>(exec, mid.data(), p(lp.ln2_g), p(lp.ln2_b), ln2.data(),
                             mean.data(), rstd.data(), t, c);
        linear_forward<S>(exec, ln2.data(), p(lp.fc_w), p(lp.fc_b), fc.data(), t, c, f);
        gelu_forward<S>(exec, fc.data(), gelu.data(), static_cast<size_t>(t) * f);
        linear_forward<S>(exec, gelu.data(), p(lp.mp_w), p(lp.mp_b), x.data(), t, f, c);
        for (size_t i = 0; i < tc; ++i) x[i] += mid[i];
    }
    cache.len = pos0 + t;

    if (last_logits) {
        std::vector<S> lnf(c);
        S m, r;
        layernorm_forward<S>(exec, x.data() + static_cast<size_t>(t - 1) * c, p(lnf_g_),
                             p(lnf_b_), lnf.data(), &m, &r, 1, c);
        linear_forward<S>(exec, lnf.data(), p(head_w_), p(head_b_), last_logits, 1, c, v);
    }
}

template <typename S>
void TransformerT<S>::decode_step(DecodeCacheT<S>& cache, int32_t token, S* logits) {
    const int32_t ids[1] = {token};
    prefill(cache, std::span<const int32_t>(ids, 1), logits);
}

template class TransformerT<float>;
template class TransformerT<double>;

}  // namespace plangen
