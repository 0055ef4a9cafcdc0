#pragma once

#include <functional>
#include <vector>

#include "drdc/rng.hpp"
#include "drdc/schedule.hpp"
#include "drdc/tensor.hpp"

namespace drdc {

/// Noise predictor signature: eps_hat = f(x_t, condition, t). The U-Net
/// denoiser, the toy models in the tests, and oracle test doubles all plug
/// in through this.
using DenoiseFn = std::function<Tensor(const Tensor& x_t, const Tensor& cond, int t)>;

/// One training batch for the conditioned diffusion loss.
struct ConditionedBatch {
    Tensor x0;          // [N,C,H,W]
    Tensor cond;        // [N,C,H,W], masked + noise-filled images
    std::vector<int> t; // per-sample timesteps in [1, T]
    Tensor eps;         // [N,C,H,W], standard normal draws
};

/// x_t = sqrt(abar_t) x0 + sqrt(1-abar_t) eps. t = 0 returns x0.
Tensor forward_sample(const Tensor& x0, int t, const Tensor& eps, const NoiseSchedule& s);

/// Single Markov step given the injected noise z: sqrt(1-beta_t) x + sqrt(beta_t) z.
Tensor forward_step_given(const Tensor& x_prev, int t, const Tensor& z,
                          const NoiseSchedule& s);

/// Single Markov step with noise drawn from rng.
Tensor forward_step(const Tensor& x_prev, int t, RngStream& rng, const NoiseSchedule& s);

/// x0_tilde = (x_t - sqrt(1-abar_t) eps_hat) / sqrt(abar_t). t = 0 returns x_t.
Tensor predict_x0(const Tensor& x_t, const Tensor& eps_hat, int t, const NoiseSchedule& s);

/// Posterior mean of the fixed-variance reverse process at step t.
Tensor ancestral_mean(const Tensor& x_t, const Tensor& eps_hat, int t,
                      const NoiseSchedule& s);

/// Deterministic (eta = 0) strided update t -> t_next using eps_hat.
Tensor deterministic_step(const Tensor& x_t, const Tensor& eps_hat, int t, int t_next,
                          const NoiseSchedule& s);

enum class ReverseMode { ancestral, deterministic };

/// One reverse step. Ancestral mode requires t_next == t-1 and adds sigma_t
/// noise (none on the final step to t_next == 0); deterministic mode supports
/// strided jumps.
Tensor reverse_step(const DenoiseFn& denoise, const Tensor& x_t, const Tensor& cond, int t,
                    int t_next, ReverseMode mode, RngStream& rng, const NoiseSchedule& s);

/// Mean over the batch of the per-sample squared L2 norm
/// || eps - denoise(forward_sample(x0, t, eps), cond, t) ||^2.
double diffusion_loss(const DenoiseFn& denoise, const ConditionedBatch& batch,
                      const NoiseSchedule& s);

/// Builds the training-time condition image I_in from a clean sample
/// (masked regions filled with Gaussian noise); a fresh random partition is
/// drawn per call.
using ConditionSampler = std::function<Tensor(const Tensor& x0, RngStream& rng)>;

struct DiffusionTrainConfig {
    int steps = 1500;
    int batch_size = 4;
    double lr = 4e-4;
    double weight_decay = 1e-4; // AdamW, decoupled
};

} // namespace drdc
