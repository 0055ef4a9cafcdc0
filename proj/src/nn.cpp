#include "drdc/nn.hpp"

#include <cmath>
#include <omp.h>

#include "drdc/kernels.hpp"

namespace drdc::nn {

namespace k = drdc::kernels;

Tensor he_normal(std::vector<int> shape, int fan_in, RngStream& rng) {
    Tensor t(std::move(shape));
    const double std = std::sqrt(2.0 / fan_in);
    for (int64_t i = 0; i < t.numel(); ++i) t[i] = std * rng.normal();
    return t;
}

Tensor xavier_normal(std::vector<int> shape, int fan_in, int fan_out, RngStream& rng) {
    Tensor t(std::move(shape));
    const double std = std::sqrt(2.0 / (fan_in + fan_out));
    for (int64_t i = 0; i < t.numel(); ++i) t[i] = std * rng.normal();
    return t;
}

void AdamW::step(const std::vector<Param*>& params) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (Param* p : params) {
        const int64_t n = p->value.numel();
        double* val = p->value.data();
        const double* g = p->grad.data();
        double* m = p->m.data();
        double* v = p->v.data();
        const double wd = p->weight_decay ? wd_ : 0.0;
#pragma omp parallel for schedule(static) if (n > 4096 && !omp_in_parallel())
        for (int64_t i = 0; i < n; ++i) {
            m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
            v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            val[i] -= lr_ * (mhat / (std::sqrt(vhat) + eps_) + wd * val[i]);
        }
    }
}

// ---------------------------------------------------------------------------

Linear::Linear(int in, int out, RngStream& rng, const std::string& name) {
    w_.name = name + ".w";
    w_.value = xavier_normal({out, in}, in, out, rng);
    w_.init_buffers();
    b_.name = name + ".b";
    b_.value = Tensor({out});
    b_.init_buffers();
    b_.weight_decay = false;
}

Tensor Linear::forward(const Tensor& x) {
    x_ = x;
    Tensor y = k::matmul(x, w_.value, false, true);
    const int rows = y.dim(0), out = y.dim(1);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < out; ++c) y.at2(r, c) += b_.value[c];
    return y;
}

Tensor Linear::backward(const Tensor& gy) {
    // gx = gy W ; gW += gy^T x ; gb += colsum(gy)
    Tensor gw = k::matmul(gy, x_, true, false);
    for (int64_t i = 0; i < gw.numel(); ++i) w_.grad[i] += gw[i];
    const int rows = gy.dim(0), out = gy.dim(1);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < out; ++c) b_.grad[c] += gy.at2(r, c);
    return k::matmul(gy, w_.value, false, false);
}

Conv2d::Conv2d(int in_ch, int out_ch, int ksize, int stride, int pad, RngStream& rng,
               const std::string& name, bool zero_init)
    : stride_(stride), pad_(pad), ksize_(ksize) {
    w_.name = name + ".w";
    if (zero_init)
        w_.value = Tensor({out_ch, in_ch, ksize, ksize});
    else
        w_.value = he_normal({out_ch, in_ch, ksize, ksize}, in_ch * ksize * ksize, rng);
    w_.init_buffers();
    b_.name = name + ".b";
    b_.value = Tensor({out_ch});
    b_.init_buffers();
    b_.weight_decay = false;
}

Tensor Conv2d::forward(const Tensor& x) {
    x_ = x;
    return k::conv2d_forward(x, w_.value, b_.value, stride_, pad_);
}

Tensor Conv2d::backward(const Tensor& gy) {
    Tensor gw, gb;
    k::conv2d_grad_weights(gy, x_, stride_, pad_, ksize_, ksize_, gw, gb);
    for (int64_t i = 0; i < gw.numel(); ++i) w_.grad[i] += gw[i];
    for (int64_t i = 0; i < gb.numel(); ++i) b_.grad[i] += gb[i];
    return k::conv2d_grad_input(gy, w_.value, stride_, pad_, x_.dim(2), x_.dim(3));
}

// ---------------------------------------------------------------------------

GroupNorm::GroupNorm(int channels, int groups, const std::string& name) : groups_(groups) {
    if (channels % groups != 0)
        throw std::invalid_argument("GroupNorm: channels must divide into groups");
    gamma_.name = name + ".gamma";
    gamma_.value = Tensor({channels}, 1.0);
    gamma_.init_buffers();
    gamma_.weight_decay = false;
    beta_.name = name + ".beta";
    beta_.value = Tensor({channels});
    beta_.init_buffers();
    beta_.weight_decay = false;
}

Tensor GroupNorm::forward(const Tensor& x) {
    const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    const int cpg = C / groups_;
    const int64_t gsize = static_cast<int64_t>(cpg) * H * W;
    xhat_ = Tensor(x.shape());
    inv_std_ = Tensor({N, groups_});
    Tensor y(x.shape());

#pragma omp parallel for schedule(static) collapse(2) if (!omp_in_parallel())
    for (int n = 0; n < N; ++n) {
        for (int g = 0; g < groups_; ++g) {
            const size_t base = ((static_cast<size_t>(n) * C) + static_cast<size_t>(g) * cpg) *
                                H * W;
            const double* xp = x.data() + base;
            double mean = 0.0;
            for (int64_t i = 0; i < gsize; ++i) mean += xp[i];
            mean /= static_cast<double>(gsize);
            double var = 0.0;
            for (int64_t i = 0; i < gsize; ++i) {
                const double d = xp[i] - mean;
                var += d * d;
            }
            var /= static_cast<double>(gsize);
            const double inv = 1.0 / std::sqrt(var + eps_);
            inv_std_.at2(n, g) = inv;
            double* xh = xhat_.data() + base;
            double* yp = y.data() + base;
            for (int c = 0; c < cpg; ++c) {
                const double ga = gamma_.value[g * cpg + c];
                const double be = beta_.value[g * cpg + c];
                for (int64_t i = 0; i < static_cast<int64_t>(H) * W; ++i) {
                    const int64_t j = static_cast<int64_t>(c) * H * W + i;
                    xh[j] = (xp[j] - mean) * inv;
                    yp[j] = ga * xh[j] + be;
                }
            }
        }
    }
    return y;
}

Tensor GroupNorm::backward(const Tensor& gy) {
    const int N = gy.dim(0), C = gy.dim(1), H = gy.dim(2), W = gy.dim(3);
    const int cpg = C / groups_;
    const int64_t gsize = static_cast<int64_t>(cpg) * H * W;
    Tensor gx(gy.shape());

    // per-channel parameter grads (serial; cheap)
    for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c) {
            const size_t base = (static_cast<size_t>(n) * C + c) * H * W;
            double ggamma = 0.0, gbeta = 0.0;
            for (int64_t i = 0; i < static_cast<int64_t>(H) * W; ++i) {
                ggamma += gy.data()[base + i] * xhat_.data()[base + i];
                gbeta += gy.data()[base + i];
            }
            gamma_.grad[c] += ggamma;
            beta_.grad[c] += gbeta;
        }

#pragma omp parallel for schedule(static) collapse(2) if (!omp_in_parallel())
    for (int n = 0; n < N; ++n) {
        for (int g = 0; g < groups_; ++g) {
            const size_t base = ((static_cast<size_t>(n) * C) + static_cast<size_t>(g) * cpg) *
                                H * W;
            const double* gyp = gy.data() + base;
            const double* xh = xhat_.data() + base;
            double* gxp = gx.data() + base;
            const double inv = inv_std_.at2(n, g);
            // dl/dxhat = gy * gamma (per channel)
            double sum_g = 0.0, sum_gx = 0.0;
            for (int c = 0; c < cpg; ++c) {
                const double ga = gamma_.value[g * cpg + c];
                for (int64_t i = 0; i < static_cast<int64_t>(H) * W; ++i) {
                    const int64_t j = static_cast<int64_t>(c) * H * W + i;
                    const double dxh = gyp[j] * ga;
                    sum_g += dxh;
                    sum_gx += dxh * xh[j];
                }
            }
            const double inv_n = 1.0 / static_cast<double>(gsize);
            for (int c = 0; c < cpg; ++c) {
                const double ga = gamma_.value[g * cpg + c];
                for (int64_t i = 0; i < static_cast<int64_t>(H) * W; ++i) {
                    const int64_t j = static_cast<int64_t>(c) * H * W + i;
                    const double dxh = gyp[j] * ga;
                    gxp[j] = inv * (dxh - inv_n * sum_g - inv_n * xh[j] * sum_gx);
                }
            }
        }
    }
    return gx;
}

LayerNorm::LayerNorm(int d, const std::string& name) {
    gamma_.name = name + ".gamma";
    gamma_.value = Tensor({d}, 1.0);
    gamma_.init_buffers();
    gamma_.weight_decay = false;
    beta_.name = name + ".beta";
    beta_.value = Tensor({d});
    beta_.init_buffers();
    beta_.weight_decay = false;
}

Tensor LayerNorm::forward(const Tensor& x) {
    const int rows = x.dim(0), d = x.dim(1);
    xhat_ = Tensor(x.shape());
    inv_std_ = Tensor({rows});
    Tensor y(x.shape());
#pragma omp parallel for schedule(static) if (!omp_in_parallel())
    for (int r = 0; r < rows; ++r) {
        const double* xp = x.data() + static_cast<size_t>(r) * d;
        double mean = 0.0;
        for (int i = 0; i < d; ++i) mean += xp[i];
        mean /= d;
        double var = 0.0;
        for (int i = 0; i < d; ++i) {
            const double dv = xp[i] - mean;
            var += dv * dv;
        }
        var /= d;
        const double inv = 1.0 / std::sqrt(var + eps_);
        inv_std_[r] = inv;
        double* xh = xhat_.data() + static_cast<size_t>(r) * d;
        double* yp = y.data() + static_cast<size_t>(r) * d;
        for (int i = 0; i < d; ++i) {
            xh[i] = (xp[i] - mean) * inv;
            yp[i] = gamma_.value[i] * xh[i] + beta_.value[i];
        }
    }
    return y;
}

Tensor LayerNorm::backward(const Tensor& gy) {
    const int rows = gy.dim(0), d = gy.dim(1);
    Tensor gx(gy.shape());
    for (int r = 0; r < rows; ++r) {
        const double* gyp = gy.data() + static_cast<size_t>(r) * d;
        const double* xh = xhat_.data() + static_cast<size_t>(r) * d;
        for (int i = 0; i < d; ++i) {
            gamma_.grad[i] += gyp[i] * xh[i];
            beta_.grad[i] += gyp[i];
        }
    }
#pragma omp parallel for schedule(static) if (!omp_in_parallel())
    for (int r = 0; r < rows; ++r) {
        const double* gyp = gy.data() + static_cast<size_t>(r) * d;
        const double* xh = xhat_.data() + static_cast<size_t>(r) * d;
        double* gxp = gx.data() + static_cast<size_t>(r) * d;
        double sum_g = 0.0, sum_gx = 0.0;
        for (int i = 0; i < d; ++i) {
            const double dxh = gyp[i] * gamma_.value[i];
            sum_g += dxh;
            sum_gx += dxh * xh[i];
        }
        const double inv = inv_std_[r];
        for (int i = 0; i < d; ++i) {
            const double dxh = gyp[i] * gamma_.value[i];
            gxp[i] = inv * (dxh - (sum_g + xh[i] * sum_gx) / d);
        }
    }
    return gx;
}

// ---------------------------------------------------------------------------

namespace {
inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
} // namespace

Tensor SiLU::forward(const Tensor& x) {
    x_ = x;
    Tensor y(x.shape());
    const int64_t n = x.numel();
#pragma omp parallel for schedule(static) if (n > 16384 && !omp_in_parallel())
    for (int64_t i = 0; i < n; ++i) y[i] = x[i] * sigmoid(x[i]);
    return y;
}

Tensor SiLU::backward(const Tensor& gy) {
    Tensor gx(gy.shape());
    const int64_t n = gy.numel();
#pragma omp parallel for schedule(static) if (n > 16384 && !omp_in_parallel())
    for (int64_t i = 0; i < n; ++i) {
        const double s = sigmoid(x_[i]);
        gx[i] = gy[i] * (s * (1.0 + x_[i] * (1.0 - s)));
    }
    return gx;
}

Tensor ReLU::forward(const Tensor& x) {
    x_ = x;
    Tensor y(x.shape());
    for (int64_t i = 0; i < x.numel(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
    return y;
}

Tensor ReLU::backward(const Tensor& gy) {
    Tensor gx(gy.shape());
    for (int64_t i = 0; i < gy.numel(); ++i) gx[i] = x_[i] > 0.0 ? gy[i] : 0.0;
    return gx;
}

Tensor Dropout::forward(const Tensor& x, bool training, RngStream& rng) {
    active_ = training && p_ > 0.0;
    if (!active_) return x;
    mask_ = Tensor(x.shape());
    Tensor y(x.shape());
    const double scale = 1.0 / (1.0 - p_);
    for (int64_t i = 0; i < x.numel(); ++i) {
        mask_[i] = rng.uniform() < p_ ? 0.0 : scale;
        y[i] = x[i] * mask_[i];
    }
    return y;
}

Tensor Dropout::backward(const Tensor& gy) {
    if (!active_) return gy;
    Tensor gx(gy.shape());
    for (int64_t i = 0; i < gy.numel(); ++i) gx[i] = gy[i] * mask_[i];
    return gx;
}

// ---------------------------------------------------------------------------

MultiHeadAttention::MultiHeadAttention(int d_model, int heads, RngStream& rng,
                                       const std::string& name)
    : wq_(d_model, d_model, rng, name + ".wq"),
      wk_(d_model, d_model, rng, name + ".wk"),
      wv_(d_model, d_model, rng, name + ".wv"),
      wo_(d_model, d_model, rng, name + ".wo"),
      heads_(heads),
      d_model_(d_model) {
    if (d_model % heads != 0)
        throw std::invalid_argument("MultiHeadAttention: heads must divide d_model");
}

Tensor MultiHeadAttention::forward(const Tensor& xq, const Tensor& xkv, int batch, int tq,
                                   int tk) {
    batch_ = batch;
    tq_ = tq;
    tk_ = tk;
    q_ = wq_.forward(xq);
    k_ = wk_.forward(xkv);
    v_ = wv_.forward(xkv);
    const int dk = d_model_ / heads_;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
    probs_ = Tensor({batch * heads_ * tq, tk});
    concat_ = Tensor({batch * tq, d_model_});

#pragma omp parallel for schedule(static) collapse(2) if (!omp_in_parallel())
    for (int b = 0; b < batch; ++b) {
        for (int h = 0; h < heads_; ++h) {
            for (int i = 0; i < tq; ++i) {
                const double* qrow = q_.data() + (static_cast<size_t>(b) * tq + i) * d_model_ +
                                     static_cast<size_t>(h) * dk;
                double* prow = probs_.data() +
                               ((static_cast<size_t>(b) * heads_ + h) * tq + i) * tk;
                double mx = -1e300;
                for (int j = 0; j < tk; ++j) {
                    const double* krow = k_.data() +
                                         (static_cast<size_t>(b) * tk + j) * d_model_ +
                                         static_cast<size_t>(h) * dk;
                    double dot = 0.0;
                    for (int l = 0; l < dk; ++l) dot += qrow[l] * krow[l];
                    prow[j] = dot * scale;
                    mx = std::max(mx, prow[j]);
                }
                double denom = 0.0;
                for (int j = 0; j < tk; ++j) {
                    prow[j] = std::exp(prow[j] - mx);
                    denom += prow[j];
                }
                for (int j = 0; j < tk; ++j) prow[j] /= denom;
                double* orow = concat_.data() + (static_cast<size_t>(b) * tq + i) * d_model_ +
                               static_cast<size_t>(h) * dk;
                for (int l = 0; l < dk; ++l) orow[l] = 0.0;
                for (int j = 0; j < tk; ++j) {
                    const double* vrow = v_.data() +
                                         (static_cast<size_t>(b) * tk + j) * d_model_ +
                                         static_cast<size_t>(h) * dk;
                    const double p = prow[j];
                    for (int l = 0; l < dk; ++l) orow[l] += p * vrow[l];
                }
            }
        }
    }
    return wo_.forward(concat_);
}

Tensor MultiHeadAttention::backward(const Tensor& gy, Tensor& gkv_out) {
    const int dk = d_model_ / heads_;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
    Tensor gconcat = wo_.backward(gy);
    Tensor gq(q_.shape()), gk(k_.shape()), gv(v_.shape());

#pragma omp parallel for schedule(static) collapse(2) if (!omp_in_parallel())
    for (int b = 0; b < batch_; ++b) {
        for (int h = 0; h < heads_; ++h) {
            for (int i = 0; i < tq_; ++i) {
                const double* go = gconcat.data() +
                                   (static_cast<size_t>(b) * tq_ + i) * d_model_ +
                                   static_cast<size_t>(h) * dk;
                const double* prow = probs_.data() +
                                     ((static_cast<size_t>(b) * heads_ + h) * tq_ + i) * tk_;
                // dP[j] = go . V[j] ; softmax backward ; then into q,k,v
                double dot_sum = 0.0;
                std::vector<double> dp(static_cast<size_t>(tk_));
                for (int j = 0; j < tk_; ++j) {
                    const double* vrow = v_.data() +
                                         (static_cast<size_t>(b) * tk_ + j) * d_model_ +
                                         static_cast<size_t>(h) * dk;
                    double dot = 0.0;
                    for (int l = 0; l < dk; ++l) dot += go[l] * vrow[l];
                    dp[static_cast<size_t>(j)] = dot;
                    dot_sum += dot * prow[j];
                }
                const double* qrow = q_.data() +
                                     (static_cast<size_t>(b) * tq_ + i) * d_model_ +
                                     static_cast<size_t>(h) * dk;
                double* gqrow = gq.data() + (static_cast<size_t>(b) * tq_ + i) * d_model_ +
                                static_cast<size_t>(h) * dk;
                for (int j = 0; j < tk_; ++j) {
                    const double ds = prow[j] * (dp[static_cast<size_t>(j)] - dot_sum) * scale;
                    const double* krow = k_.data() +
                                         (static_cast<size_t>(b) * tk_ + j) * d_model_ +
                                         static_cast<size_t>(h) * dk;
                    double* gkrow = gk.data() + (static_cast<size_t>(b) * tk_ + j) * d_model_ +
                                    static_cast<size_t>(h) * dk;
                    double* gvrow = gv.data() + (static_cast<size_t>(b) * tk_ + j) * d_model_ +
                                    static_cast<size_t>(h) * dk;
                    const double p = prow[j];
                    for (int l = 0; l < dk; ++l) {
                        gqrow[l] += ds * krow[l];
                        // gk/gv rows are written by multiple (h,i); guard order
                        gkrow[l] += ds * qrow[l];
                        gvrow[l] += p * go[l];
                    }
                }
            }
        }
    }

    Tensor gxq = wq_.backward(gq);
    Tensor gxk = wk_.backward(gk);
    Tensor gxv = wv_.backward(gv);
    gkv_out = Tensor(gxk.shape());
    for (int64_t i = 0; i < gkv_out.numel(); ++i) gkv_out[i] = gxk[i] + gxv[i];
    return gxq;
}

Tensor sinusoidal_embedding(const std::vector<int>& positions, int dim) {
    if (dim % 2 != 0) throw std::invalid_argument("sinusoidal_embedding: dim must be even");
    Tensor out({static_cast<int>(positions.size()), dim});
    const int half = dim / 2;
    for (size_t p = 0; p < positions.size(); ++p) {
        for (int i = 0; i < half; ++i) {
            const double freq = std::exp(-std::log(10000.0) * i / half);
            const double a = positions[p] * freq;
            out.at2(static_cast<int>(p), i) = std::sin(a);
            out.at2(static_cast<int>(p), half + i) = std::cos(a);
        }
    }
    return out;
}

} // namespace drdc::nn
