#pragma once

#include <string>
#include <vector>

#include "drdc/tensor.hpp"

namespace drdc {

struct ExtractorConfig {
    std::vector<int> stage_channels = {16, 24, 32, 48};
    int target_grid = 8; // H_feat = W_feat
    uint64_t seed = 0;
};

/// Frozen multi-scale convolutional pyramid. Stand-in for a pretrained
/// backbone: stride-2 stages with fixed seeded weights; each stage's
/// activation is resized bilinearly to the target grid and concatenated
/// along channels. Weights never change after construction.
class FeatureExtractor {
public:
    FeatureExtractor() = default;
    FeatureExtractor(const ExtractorConfig& cfg, int image_channels, int image_h, int image_w);

    /// image: [C,H,W] -> features: [C_feat, target, target]. Pure and
    /// thread-safe.
    Tensor extract(const Tensor& image) const;

    int feat_channels() const { return feat_channels_; }
    int feat_grid() const { return cfg_.target_grid; }
    const ExtractorConfig& config() const { return cfg_; }

    /// Named weight arrays for checkpointing (read-only contract).
    std::vector<std::pair<std::string, const Tensor*>> weights() const;
    void load_weights(const std::vector<std::pair<std::string, Tensor>>& arrays);

private:
    ExtractorConfig cfg_;
    int image_channels_ = 0, image_h_ = 0, image_w_ = 0;
    int feat_channels_ = 0;
    std::vector<Tensor> stage_w_; // conv kernels, stride 2, pad 1
    std::vector<Tensor> stage_b_;
};

} // namespace drdc
