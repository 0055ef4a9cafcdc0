// Test-only scalar denoiser: a small MLP eps-predictor over (x_t, t) used to
// check the training machinery against the closed-form optimal predictor for
// a Gaussian data distribution. Lives with the tests on purpose; the product
// denoiser is the conditional U-Net.

#pragma once

#include <cmath>
#include <vector>

#include "drdc/diffusion.hpp"
#include "drdc/nn.hpp"
#include "drdc/rng.hpp"
#include "drdc/schedule.hpp"

namespace drdc::testing {

class ScalarDenoiser {
public:
    ScalarDenoiser(int emb_dim, int hidden, uint64_t seed) : emb_dim_(emb_dim) {
        RngStream rng(seed);
        l1_ = nn::Linear(1 + emb_dim, hidden, rng, "toy.l1");
        l2_ = nn::Linear(hidden, hidden, rng, "toy.l2");
        l3_ = nn::Linear(hidden, 1, rng, "toy.l3");
    }

    /// x_t: [N,1]; one timestep per row.
    Tensor forward(const Tensor& x_t, const std::vector<int>& t) {
        const int n = x_t.dim(0);
        Tensor emb = nn::sinusoidal_embedding(t, emb_dim_);
        Tensor in({n, 1 + emb_dim_});
        for (int i = 0; i < n; ++i) {
            in.at2(i, 0) = x_t.at2(i, 0);
            for (int j = 0; j < emb_dim_; ++j) in.at2(i, 1 + j) = emb.at2(i, j);
        }
        return l3_.forward(a2_.forward(l2_.forward(a1_.forward(l1_.forward(in)))));
    }

    void backward(const Tensor& g) {
        l1_.backward(a1_.backward(l2_.backward(a2_.backward(l3_.backward(g)))));
    }

    std::vector<nn::Param*> params() {
        std::vector<nn::Param*> out;
        l1_.collect(out);
        l2_.collect(out);
        l3_.collect(out);
        return out;
    }

private:
    int emb_dim_;
    nn::Linear l1_, l2_, l3_;
    nn::SiLU a1_, a2_;
};

struct GaussianToy {
    double mean = 0.3;
    double stddev = 0.2;
};

/// Train the scalar denoiser on x0 ~ N(mean, stddev^2).
inline void train_scalar_denoiser(ScalarDenoiser& model, const NoiseSchedule& s,
                                  const GaussianToy& toy, int steps, int batch, double lr,
                                  uint64_t seed) {
    auto params = model.params();
    nn::AdamW opt(lr, 1e-4);
    RngStream rng(seed);
    for (int step = 0; step < steps; ++step) {
        Tensor x_t({batch, 1}), eps({batch, 1});
        std::vector<int> ts(static_cast<size_t>(batch));
        for (int b = 0; b < batch; ++b) {
            const double x0 = toy.mean + toy.stddev * rng.normal();
            const int t = static_cast<int>(rng.uniform_int(1, s.T));
            const double e = rng.normal();
            ts[static_cast<size_t>(b)] = t;
            eps.at2(b, 0) = e;
            x_t.at2(b, 0) = std::sqrt(s.alpha_bar[t]) * x0 +
                            std::sqrt(1.0 - s.alpha_bar[t]) * e;
        }
        Tensor pred = model.forward(x_t, ts);
        Tensor grad(pred.shape());
        for (int b = 0; b < batch; ++b) grad.at2(b, 0) = 2.0 * (pred.at2(b, 0) - eps.at2(b, 0)) / batch;
        opt.zero_grad(params);
        model.backward(grad);
        opt.step(params);
    }
}

/// Closed-form optimal eps-predictor for the Gaussian toy, derived from the
/// posterior mean of x0 given x_t (independent of any trained model):
///   E[x0|x_t] = mean + sqrt(abar) s^2 / (abar s^2 + 1 - abar) (x_t - sqrt(abar) mean)
///   eps*(x_t, t) = (x_t - sqrt(abar) E[x0|x_t]) / sqrt(1 - abar)
inline double analytic_eps(const GaussianToy& toy, const NoiseSchedule& s, double x_t, int t) {
    const double abar = s.alpha_bar[t];
    const double var = toy.stddev * toy.stddev;
    const double gain = std::sqrt(abar) * var / (abar * var + 1.0 - abar);
    const double post_mean = toy.mean + gain * (x_t - std::sqrt(abar) * toy.mean);
    return (x_t - std::sqrt(abar) * post_mean) / std::sqrt(1.0 - abar);
}

/// MSE between the trained model and the analytic predictor over a grid of
/// 50 x_t values (marginal mean +- 3 sd per t) and `nt` timesteps.
inline double toy_grid_mse(ScalarDenoiser& model, const GaussianToy& toy,
                           const NoiseSchedule& s, int nt = 20, int nx = 50) {
    double total = 0.0;
    int count = 0;
    for (int k = 0; k < nt; ++k) {
        const int t = 1 + (s.T - 1) * k / (nt - 1);
        const double abar = s.alpha_bar[t];
        const double mean = std::sqrt(abar) * toy.mean;
        const double sd = std::sqrt(abar * toy.stddev * toy.stddev + 1.0 - abar);
        Tensor x({nx, 1});
        std::vector<int> ts(static_cast<size_t>(nx), t);
        for (int i = 0; i < nx; ++i)
            x.at2(i, 0) = mean + sd * (-3.0 + 6.0 * i / (nx - 1));
        Tensor pred = model.forward(x, ts);
        for (int i = 0; i < nx; ++i) {
            const double d = pred.at2(i, 0) - analytic_eps(toy, s, x.at2(i, 0), t);
            total += d * d;
            ++count;
        }
    }
    return total / count;
}

} // namespace drdc::testing
