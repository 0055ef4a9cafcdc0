#pragma once

#include <memory>
#include <vector>

#include "drdc/diffusion.hpp"
#include "drdc/nn.hpp"
#include "drdc/synthdata.hpp"
#include "drdc/tensor.hpp"

namespace drdc {

struct UNetConfig {
    int image_channels = 3;
    int base_width = 24;                   // multiple of the norm group count
    std::vector<int> channel_mults = {1, 2, 2};
    int res_blocks = 2;                    // per resolution, both paths
    int norm_groups = 8;

    int levels() const { return static_cast<int>(channel_mults.size()); }
    void validate() const;
};

/// Residual block with timestep-embedding injection after the first conv.
struct ResBlock {
    ResBlock() = default;
    ResBlock(int in_ch, int out_ch, int temb_dim, int groups, RngStream& rng,
             const std::string& name);

    Tensor forward(const Tensor& x, const Tensor& silu_temb);
    /// Returns grad wrt x; accumulates grad wrt silu(temb) into gst.
    Tensor backward(const Tensor& gy, Tensor& gst);
    void collect(std::vector<nn::Param*>& out);

    nn::GroupNorm gn1, gn2;
    nn::SiLU act1, act2;
    nn::Conv2d conv1, conv2;
    nn::Linear temb_proj;
    nn::Conv2d skip; // 1x1 when in_ch != out_ch
    bool has_skip = false;

private:
    Tensor x_in_;
};

/// Conditional U-Net noise predictor: input is x_t concatenated with the
/// masked-and-noise-filled condition image along channels; the timestep
/// enters through a sinusoidal embedding -> MLP -> per-block bias.
class UNet {
public:
    UNet() = default;
    UNet(const UNetConfig& cfg, uint64_t seed);

    /// x_t, cond: [N,C,H,W]; t: one timestep per sample.
    Tensor forward(const Tensor& x_t, const Tensor& cond, const std::vector<int>& t);
    /// Backpropagate from grad of the output; parameter grads accumulate.
    void backward(const Tensor& gout);

    std::vector<nn::Param*> params();
    const UNetConfig& config() const { return cfg_; }

    /// Single-sample CHW adapter. The returned callable runs a batch-of-one
    /// forward pass; it shares this network's caches, so it is not safe to
    /// call concurrently (clone the UNet per worker instead).
    DenoiseFn as_denoiser();

private:
    UNetConfig cfg_;

    nn::Conv2d stem_;
    nn::Linear temb_l1_, temb_l2_;
    nn::SiLU temb_act1_, temb_act2_;

    std::vector<ResBlock> down_blocks_;
    std::vector<nn::Conv2d> downsamples_;
    std::vector<ResBlock> up_blocks_;
    std::vector<nn::Conv2d> upsample_convs_;

    nn::GroupNorm head_norm_;
    nn::SiLU head_act_;
    nn::Conv2d head_conv_;

    // forward caches
    Tensor silu_temb_;
    std::vector<Tensor> skips_;
    std::vector<int> skip_channels_;
};

/// Conditioned denoiser training: per sample, a fresh condition image from
/// the sampler, t uniform in [1, T], eps ~ N(0, I); AdamW on the mean
/// per-sample squared-L2 noise-prediction error. Trains on the manifest's
/// train split only and rejects anomalous records there.
std::vector<TrainLogPoint> train_diffusion(UNet& net, const DatasetManifest& data,
                                           const ConditionSampler& sample_condition,
                                           const NoiseSchedule& schedule,
                                           const DiffusionTrainConfig& cfg, uint64_t seed);

} // namespace drdc
