#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "drdc/rng.hpp"
#include "drdc/tensor.hpp"

namespace drdc {

/// One logged optimization step.
struct TrainLogPoint {
    int step;
    double loss;
};

} // namespace drdc

namespace drdc::nn {

/// Learnable tensor with its gradient and AdamW moment buffers.
struct Param {
    std::string name;
    Tensor value;
    Tensor grad;
    Tensor m, v;
    bool weight_decay = true; // norms and biases opt out

    void init_buffers() {
        grad = Tensor(value.shape());
        m = Tensor(value.shape());
        v = Tensor(value.shape());
    }
    void zero_grad() { grad.fill(0.0); }
};

/// Decoupled weight decay Adam. lr and weight_decay are per-step settings;
/// bias correction uses the internal step counter.
class AdamW {
public:
    AdamW(double lr, double weight_decay, double beta1 = 0.9, double beta2 = 0.999,
          double eps = 1e-8)
        : lr_(lr), wd_(weight_decay), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void step(const std::vector<Param*>& params);
    void zero_grad(const std::vector<Param*>& params) {
        for (Param* p : params) p->zero_grad();
    }
    int64_t steps_taken() const { return t_; }

private:
    double lr_, wd_, beta1_, beta2_, eps_;
    int64_t t_ = 0;
};

// ---------------------------------------------------------------------------
// Layers. Each caches what its backward pass needs; backward returns the
// gradient w.r.t. the forward input and accumulates parameter gradients.
// ---------------------------------------------------------------------------

/// y = x W^T + b with x: [rows, in], W: [out, in].
class Linear {
public:
    Linear() = default;
    Linear(int in, int out, RngStream& rng, const std::string& name);

    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& gy);
    void collect(std::vector<Param*>& out) {
        out.push_back(&w_);
        out.push_back(&b_);
    }

    Param w_, b_;

private:
    Tensor x_; // cached input
};

class Conv2d {
public:
    Conv2d() = default;
    Conv2d(int in_ch, int out_ch, int ksize, int stride, int pad, RngStream& rng,
           const std::string& name, bool zero_init = false);

    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& gy);
    void collect(std::vector<Param*>& out) {
        out.push_back(&w_);
        out.push_back(&b_);
    }

    Param w_, b_;
    int stride_ = 1, pad_ = 0, ksize_ = 1;

private:
    Tensor x_;
};

/// GroupNorm over NCHW with per-channel affine.
class GroupNorm {
public:
    GroupNorm() = default;
    GroupNorm(int channels, int groups, const std::string& name);

    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& gy);
    void collect(std::vector<Param*>& out) {
        out.push_back(&gamma_);
        out.push_back(&beta_);
    }

    Param gamma_, beta_;
    int groups_ = 1;
    double eps_ = 1e-5;

private:
    Tensor xhat_;
    Tensor inv_std_; // [N, groups]
};

/// LayerNorm over the last dimension of [rows, d].
class LayerNorm {
public:
    LayerNorm() = default;
    LayerNorm(int d, const std::string& name);

    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& gy);
    void collect(std::vector<Param*>& out) {
        out.push_back(&gamma_);
        out.push_back(&beta_);
    }

    Param gamma_, beta_;
    double eps_ = 1e-5;

private:
    Tensor xhat_;
    Tensor inv_std_; // [rows]
};

/// SiLU (x * sigmoid(x)), elementwise.
class SiLU {
public:
    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& gy);

private:
    Tensor x_;
};

class ReLU {
public:
    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& gy);

private:
    Tensor x_;
};

/// Inverted dropout; identity when p == 0 or eval mode.
class Dropout {
public:
    explicit Dropout(double p = 0.0) : p_(p) {}
    Tensor forward(const Tensor& x, bool training, RngStream& rng);
    Tensor backward(const Tensor& gy);

private:
    double p_;
    Tensor mask_;
    bool active_ = false;
};

/// Multi-head attention over [B, T, d] stored row-major as [B*T, d].
/// Self-attention when kv == q source; cross-attention otherwise.
class MultiHeadAttention {
public:
    MultiHeadAttention() = default;
    MultiHeadAttention(int d_model, int heads, RngStream& rng, const std::string& name);

    /// xq: [B*Tq, d], xkv: [B*Tk, d]; batch/token geometry passed explicitly.
    Tensor forward(const Tensor& xq, const Tensor& xkv, int batch, int tq, int tk);
    /// Returns grad w.r.t. xq; grad w.r.t. xkv is accumulated into gkv_out.
    Tensor backward(const Tensor& gy, Tensor& gkv_out);

    void collect(std::vector<Param*>& out) {
        wq_.collect(out);
        wk_.collect(out);
        wv_.collect(out);
        wo_.collect(out);
    }

    Linear wq_, wk_, wv_, wo_;
    int heads_ = 1, d_model_ = 0;

private:
    Tensor q_, k_, v_, probs_, concat_;
    int batch_ = 0, tq_ = 0, tk_ = 0;
};

/// Sinusoidal embedding of integer positions/timesteps into `dim` channels.
/// Matches the transformer convention: pairs of (sin, cos) at geometric
/// frequencies 10000^(-2i/dim).
Tensor sinusoidal_embedding(const std::vector<int>& positions, int dim);

/// Weight initializers.
Tensor he_normal(std::vector<int> shape, int fan_in, RngStream& rng);
Tensor xavier_normal(std::vector<int> shape, int fan_in, int fan_out, RngStream& rng);

} // namespace drdc::nn
