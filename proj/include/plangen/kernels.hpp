#pragma once

#include <cmath>
#include <cstddef>

// Dense kernels behind the transformer. Every kernel comes in two flavors
// selected by Exec: a naive serial reference and an OpenMP/ILP-optimized
// parallel path. The parallel path partitions work across OUTPUT elements
// only and uses a fixed accumulation order per output, so results do not
// depend on the runtime thread count. The reference path uses textbook loop
// order; the two agree to rounding (see tests and bench/).

namespace plangen::kernels {

enum class Exec { Serial, Parallel };

namespace detail {

// dot product with eight independent accumulator chains; the fixed final
// reduction order keeps results thread-count invariant while letting the
// compiler vectorize the lanes
template <typename S>
inline S dot8(const S* a, const S* b, int n) {
    S acc[8] = {0, 0, 0, 0, 0, 0, 0, 0};
    int k = 0;
    for (; k + 8 <= n; k += 8) {
        for (int j = 0; j < 8; ++j) acc[j] += a[k + j] * b[k + j];
    }
    for (; k < n; ++k) acc[k % 8] += a[k] * b[k];
    return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
}

template <typename S>
inline void axpy(S alpha, const S* x, S* y, int n) {
    for (int i = 0; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace detail

// y = x @ W^T + b ; x: [rows, in], W: [out, in] row-major, b: [out] or null.
template <typename S>
void linear_forward(Exec exec, const S* x, const S* w, const S* b, S* y, int rows,
                    int in_dim, int out_dim) {
    if (exec == Exec::Serial) {
        for (int r = 0; r < rows; ++r) {
            for (int o = 0; o < out_dim; ++o) {
                S acc = b ? b[o] : S(0);
                for (int k = 0; k < in_dim; ++k) acc += x[r * in_dim + k] * w[o * in_dim + k];
                y[r * out_dim + o] = acc;
            }
        }
        return;
    }
#pragma omp parallel for schedule(static)
    for (int r = 0; r < rows; ++r) {
        const S* xr = x + static_cast<size_t>(r) * in_dim;
        S* yr = y + static_cast<size_t>(r) * out_dim;
        for (int o = 0; o < out_dim; ++o) {
            const S base = b ? b[o] : S(0);
            yr[o] = base + detail::dot8(xr, w + static_cast<size_t>(o) * in_dim, in_dim);
        }
    }
}

// dx = dy @ W (or dx += with accumulate)
template <typename S>
void linear_backward_input(Exec exec, const S* dy, const S* w, S* dx, int rows, int in_dim,
                           int out_dim, bool accumulate = false) {
    if (exec == Exec::Serial) {
        for (int r = 0; r < rows; ++r) {
            for (int k = 0; k < in_dim; ++k) {
                S acc = accumulate ? dx[r * in_dim + k] : S(0);
                for (int o = 0; o < out_dim; ++o)
                    acc += dy[r * out_dim + o] * w[o * in_dim + k];
                dx[r * in_dim + k] = acc;
            }
        }
        return;
    }
#pragma omp parallel for schedule(static)
    for (int r = 0; r < rows; ++r) {
        const S* dyr = dy + static_cast<size_t>(r) * out_dim;
        S* dxr = dx + static_cast<size_t>(r) * in_dim;
        if (!accumulate) {
            for (int k = 0; k < in_dim; ++k) dxr[k] = 0;
        }
        for (int o = 0; o < out_dim; ++o)
            detail::axpy(dyr[o], w + static_cast<size_t>(o) * in_dim, dxr, in_dim);
    }
}

// dW += dy^T @ x ; db += column sums of dy
template <typename S>
void linear_backward_params(Exec exec, const S* x, const S* dy, S* dw, S* db, int rows,
                            int in_dim, int out_dim) {
    if (exec == Exec::Serial) {
        for (int o = 0; o < out_dim; ++o) {
            for (int r = 0; r < rows; ++r) {
                const S g = dy[r * out_dim + o];
                for (int k = 0; k < in_dim; ++k) dw[o * in_dim + k] += g * x[r * in_dim + k];
                if (db) db[o] += g;
            }
        }
        return;
    }
#pragma omp parallel for schedule(static)
    for (int o = 0; o < out_dim; ++o) {
        S* dwo = dw + static_cast<size_t>(o) * in_dim;
        S dbo = 0;
        for (int r = 0; r < rows; ++r) {
            const S g = dy[static_cast<size_t>(r) * out_dim + o];
            detail::axpy(g, x + static_cast<size_t>(r) * in_dim, dwo, in_dim);
            dbo += g;
        }
        if (db) db[o] += dbo;
    }
}

template <typename S>
void layernorm_forward(Exec exec, const S* x, const S* gamma, const S* beta, S* y, S* mean,
                       S* rstd, int rows, int dim) {
    const S eps = static_cast<S>(1e-5);
    auto row = [&](int r) {
        const S* xr = x + static_cast<size_t>(r) * dim;
        S* yr = y + static_cast<size_t>(r) * dim;
        S m = 0;
        for (int i = 0; i < dim; ++i) m += xr[i];
        m /= dim;
        S v = 0;
        for (int i = 0; i < dim; ++i) v += (xr[i] - m) * (xr[i] - m);
        v /= dim;
        const S rs = S(1) / std::sqrt(v + eps);
        for (int i = 0; i < dim; ++i) yr[i] = (xr[i] - m) * rs * gamma[i] + beta[i];
        mean[r] = m;
        rstd[r] = rs;
    };
    if (exec == Exec::Serial) {
        for (int r = 0; r < rows; ++r) row(r);
        return;
    }
#pragma omp parallel for schedule(static)
    for (int r = 0; r < rows; ++r) row(r);
}

// dgamma/dbeta accumulate serially after the parallel dx pass so their sums
// keep a fixed order.
template <typename S>
void layernorm_backward(Exec exec, const S* x, const S* gamma, const S* mean, const S* rstd,
                        const S* dy, S* dx, S* dgamma, S* dbeta, int rows, int dim,
                        bool accumulate = false) {
    auto row_dx = [&](int r) {
        const S* xr = x + static_cast<size_t>(r) * dim;
        const S* dyr = dy + static_cast<size_t>(r) * dim;
        S* dxr = dx + static_cast<size_t>(r) * dim;
        const S m = mean[r], rs = rstd[r];
        S sum_dyg = 0, sum_dyg_xhat = 0;
        for (int i = 0; i < dim; ++i) {
            const S xhat = (xr[i] - m) * rs;
            const S dyg = dyr[i] * gamma[i];
            sum_dyg += dyg;
            sum_dyg_xhat += dyg * xhat;
        }
        const S inv_dim = S(1) / dim;
        for (int i = 0; i < dim; ++i) {
            const S xhat = (xr[i] - m) * rs;
            const S v = rs * (dyr[i] * gamma[i] - inv_dim * (sum_dyg + xhat * sum_dyg_xhat));
            dxr[i] = accumulate ? dxr[i] + v : v;
        }
    };
    if (exec == Exec::Serial) {
        for (int r = 0; r < rows; ++r) row_dx(r);
    } else {
#pragma omp parallel for schedule(static)
        for (int r = 0; r < rows; ++r) row_dx(r);
    }
    if (dgamma || dbeta) {
        for (int r = 0; r < rows; ++r) {
            const S* xr = x + static_cast<size_t>(r) * dim;
            const S* dyr = dy + static_cast<size_t>(r) * dim;
            const S m = mean[r], rs = rstd[r];
            for (int i = 0; i < dim; ++i) {
                if (dgamma) dgamma[i] += dyr[i] * (xr[i] - m) * rs;
                if (dbeta) dbeta[i] += dyr[i];
            }
        }
    }
}

// tanh-approximation GELU
template <typename S>
void gelu_forward(Exec exec, const S* x, S* y, size_t n) {
    const S c = static_cast<S>(0.7978845608028654);  // sqrt(2/pi)
    auto f = [c](S v) {
        const S inner = c * (v + static_cast<S>(0.044715) * v * v * v);
        return static_cast<S>(0.5) * v * (S(1) + std::tanh(inner));
    };
    if (exec == Exec::Serial) {
        for (size_t i = 0; i < n; ++i) y[i] = f(x[i]);
        return;
    }
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(n); ++i) y[i] = f(x[i]);
}

template <typename S>
void gelu_backward(Exec exec, const S* x, const S* dy, S* dx, size_t n) {
    const S c = static_cast<S>(0.7978845608028654);
    auto g = [c](S v) {
        const S v3 = v * v * v;
        const S inner = c * (v + static_cast<S>(0.044715) * v3);
        const S t = std::tanh(inner);
        const S sech2 = S(1) - t * t;
        return static_cast<S>(0.5) * (S(1) + t) +
               static_cast<S>(0.5) * v * sech2 * c * (S(1) + static_cast<S>(0.134145) * v * v);
    };
    if (exec == Exec::Serial) {
        for (size_t i = 0; i < n; ++i) dx[i] = dy[i] * g(x[i]);
        return;
    }
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(n); ++i) dx[i] = dy[i] * g(x[i]);
}

// Causal multi-head attention. q: [t_q, C]; k, v: [t_kv, C] with
// C = heads * head_dim and head h occupying columns [h*head_dim, ...).
// Query row i (global position pos0 + i) attends key rows j <= pos0 + i.
// probs: [heads, t_q, t_kv] softmax weights, kept for the backward pass.
template <typename S>
void attention_forward(Exec exec, const S* q, const S* k, const S* v, S* probs, S* y,
                       int t_q, int t_kv, int heads, int head_dim, int pos0) {
    const int c = heads * head_dim;
    const S scale = S(1) / std::sqrt(static_cast<S>(head_dim));
    auto cell = [&](int h, int i) {
        const S* qi = q + static_cast<size_t>(i) * c + h * head_dim;
        S* pr = probs + (static_cast<size_t>(h) * t_q + i) * t_kv;
        const int limit = pos0 + i;  // inclusive attention horizon
        S maxv = -INFINITY;
        for (int j = 0; j <= limit; ++j) {
            const S s =
                detail::dot8(qi, k + static_cast<size_t>(j) * c + h * head_dim, head_dim) *
                scale;
            pr[j] = s;
            if (s > maxv) maxv = s;
        }
        S denom = 0;
        for (int j = 0; j <= limit; ++j) {
            pr[j] = std::exp(pr[j] - maxv);
            denom += pr[j];
        }
        const S inv = S(1) / denom;
        for (int j = 0; j <= limit; ++j) pr[j] *= inv;
        for (int j = limit + 1; j < t_kv; ++j) pr[j] = 0;

        S* yi = y + static_cast<size_t>(i) * c + h * head_dim;
        for (int d = 0; d < head_dim; ++d) yi[d] = 0;
        for (int j = 0; j <= limit; ++j)
            detail::axpy(pr[j], v + static_cast<size_t>(j) * c + h * head_dim, yi, head_dim);
    };
    if (exec == Exec::Serial) {
        for (int h = 0; h < heads; ++h) {
            for (int i = 0; i < t_q; ++i) cell(h, i);
        }
        return;
    }
#pragma omp parallel for collapse(2) schedule(static)
    for (int h = 0; h < heads; ++h) {
        for (int i = 0; i < t_q; ++i) cell(h, i);
    }
}

// Backward for the training case (t_q == t_kv, pos0 == 0).
template <typename S>
void attention_backward(Exec exec, const S* q, const S* k, const S* v, const S* probs,
                        const S* dy, S* dq, S* dk, S* dv, int t, int heads, int head_dim) {
    const int c = heads * head_dim;
    const S scale = S(1) / std::sqrt(static_cast<S>(head_dim));

    // dq rows are independent; dk/dv columns are independent per (h, j)
    auto dq_cell = [&](int h, int i) {
        const S* pr = probs + (static_cast<size_t>(h) * t + i) * t;
        const S* dyi = dy + static_cast<size_t>(i) * c + h * head_dim;
        S* dqi = dq + static_cast<size_t>(i) * c + h * head_dim;
        // dscore_j = p_j * (dot(dy, v_j) - sum_l p_l dot(dy, v_l))
        S mix = 0;
        for (int j = 0; j <= i; ++j) {
            mix += pr[j] *
                   detail::dot8(dyi, v + static_cast<size_t>(j) * c + h * head_dim, head_dim);
        }
        for (int d = 0; d < head_dim; ++d) dqi[d] = 0;
        for (int j = 0; j <= i; ++j) {
            const S dv_dot =
                detail::dot8(dyi, v + static_cast<size_t>(j) * c + h * head_dim, head_dim);
            const S ds = pr[j] * (dv_dot - mix) * scale;
            detail::axpy(ds, k + static_cast<size_t>(j) * c + h * head_dim, dqi, head_dim);
        }
    };
    auto dkv_cell = [&](int h, int j) {
        S* dkj = dk + static_cast<size_t>(j) * c + h * head_dim;
        S* dvj = dv + static_cast<size_t>(j) * c + h * head_dim;
        for (int d = 0; d < head_dim; ++d) {
            dkj[d] = 0;
            dvj[d] = 0;
        }
        for (int i = j; i < t; ++i) {
            const S* pr = probs + (static_cast<size_t>(h) * t + i) * t;
            const S* dyi = dy + static_cast<size_t>(i) * c + h * head_dim;
            const S p = pr[j];
            if (p == 0) continue;
            detail::axpy(p, dyi, dvj, head_dim);
            S mix = 0;
            for (int l = 0; l <= i; ++l) {
                mix += pr[l] * detail::dot8(
                                   dyi, v + static_cast<size_t>(l) * c + h * head_dim, head_dim);
            }
            const S dv_dot =
                detail::dot8(dyi, v + static_cast<size_t>(j) * c + h * head_dim, head_dim);
            const S ds = p * (dv_dot - mix) * scale;
            detail::axpy(ds, q + static_cast<size_t>(i) * c + h * head_dim, dkj, head_dim);
        }
    };

    if (exec == Exec::Serial) {
        for (int h = 0; h < heads; ++h) {
            for (int i = 0; i < t; ++i) dq_cell(h, i);
            for (int j = 0; j < t; ++j) dkv_cell(h, j);
        }
        return;
    }
#pragma omp parallel for collapse(2) schedule(static)
    for (int h = 0; h < heads; ++h) {
        for (int i = 0; i < t; ++i) dq_cell(h, i);
    }
#pragma omp parallel for collapse(2) schedule(static)
    for (int h = 0; h < heads; ++h) {
        for (int j = 0; j < t; ++j) dkv_cell(h, j);
    }
}

template <typename S>
void softmax_rows(Exec exec, const S* logits, S* probs, int rows, int cols) {
    auto row = [&](int r) {
        const S* lr = logits + static_cast<size_t>(r) * cols;
        S* pr = probs + static_cast<size_t>(r) * cols;
        S maxv = lr[0];
        for (int i = 1; i < cols; ++i) maxv = std::max(maxv, lr[i]);
        S denom = 0;
        for (int i = 0; i < cols; ++i) {
            pr[i] = std::exp(lr[i] - maxv);
            denom += pr[i];
        }
        const S inv = S(1) / denom;
        for (int i = 0; i < cols; ++i) pr[i] *= inv;
    };
    if (exec == Exec::Serial) {
        for (int r = 0; r < rows; ++r) row(r);
        return;
    }
#pragma omp parallel for schedule(static)
    for (int r = 0; r < rows; ++r) row(r);
}

// Decoupled weight decay; step is 1-based for bias correction.
template <typename S>
void adamw_update(Exec exec, S* param, const S* grad, S* m, S* v, size_t n, S lr, S beta1,
                  S beta2, S eps, S weight_decay, int step) {
    const S bc1 = S(1) - std::pow(beta1, static_cast<S>(step));
    const S bc2 = S(1) - std::pow(beta2, static_cast<S>(step));
    auto upd = [&](size_t i) {
        m[i] = beta1 * m[i] + (S(1) - beta1) * grad[i];
        v[i] = beta2 * v[i] + (S(1) - beta2) * grad[i] * grad[i];
        const S mhat = m[i] / bc1;
        const S vhat = v[i] / bc2;
        param[i] -= lr * (mhat / (std::sqrt(vhat) + eps) + weight_decay * param[i]);
    };
    if (exec == Exec::Serial) {
        for (size_t i = 0; i < n; ++i) upd(i);
        return;
    }
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(n); ++i) upd(static_cast<size_t>(i));
}

// C = A @ B^T, the benchmark-facing primitive.
template <typename S>
void matmul_nt(Exec exec, const S* a, const S* bt, S* c, int rows, int inner, int cols) {
    linear_forward<S>(exec, a, bt, nullptr, c, rows, inner, cols);
}

}  // namespace plangen::kernels
