#pragma once

#include <vector>

#include "drdc/features.hpp"
#include "drdc/synthdata.hpp"
#include "drdc/transformer.hpp"

namespace drdc {

/// Mean squared feature-reconstruction error: sum of squared differences
/// over all channels and positions, divided by H_feat * W_feat.
double feat_loss(const Tensor& f_in, const Tensor& f_out);

/// Per-position channel-L2 norm of the reconstruction difference: [H,W],
/// entries >= 0.
Tensor base_heatmap(const Tensor& f_in, const Tensor& f_out);

struct BaseTrainConfig {
    int epochs = 200;
    int batch_size = 8;
    double lr = 1e-3;
    double weight_decay = 1e-4; // AdamW, decoupled
    double dropout = 0.1;
    int d_model = 64;
    int heads = 4;
    int enc_layers = 4;
    int dec_layers = 4;
    int ffn_dim = 128;
};

/// Feature-reconstruction base model: transformer encoder-decoder over the
/// frozen extractor's output grid.
class BaseModel {
public:
    BaseModel() = default;
    BaseModel(const BaseTrainConfig& cfg, int feat_channels, int feat_grid, uint64_t seed);

    /// Evaluation-mode reconstruction; deterministic, thread-compatible only
    /// through per-thread clones (forward caches live in the object).
    Tensor reconstruct(const Tensor& f_in_chw);

    FeatureReconstructor& net() { return net_; }
    const TransformerConfig& net_config() const { return net_.config(); }
    int feat_grid() const { return grid_; }

private:
    FeatureReconstructor net_;
    int grid_ = 0;
};

/// Train on the manifest's train split (normal samples only; anomalous
/// records there are an error). Deterministic for a fixed seed.
std::vector<TrainLogPoint> train_base(BaseModel& model, const DatasetManifest& data,
                                      const FeatureExtractor& extractor,
                                      const BaseTrainConfig& cfg, uint64_t seed);

} // namespace drdc
