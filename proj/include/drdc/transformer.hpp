#pragma once

#include <vector>

#include "drdc/nn.hpp"
#include "drdc/tensor.hpp"

namespace drdc {

struct TransformerConfig {
    int feat_channels = 0; // C_feat
    int tokens = 0;        // H_feat * W_feat
    int d_model = 64;
    int heads = 4;
    int enc_layers = 4;
    int dec_layers = 4;
    int ffn_dim = 128;
    double dropout = 0.1;

    void validate() const;
};

/// Pre-norm transformer encoder-decoder that reconstructs frozen backbone
/// features. The decoder reads a learnable query embedding (one query per
/// feature-map position), so the output is produced from attended context
/// rather than copied from the input tokens.
class FeatureReconstructor {
public:
    FeatureReconstructor() = default;
    FeatureReconstructor(const TransformerConfig& cfg, uint64_t seed);

    /// tokens_in: [B*T, C_feat] row-major by (batch, token).
    Tensor forward(const Tensor& tokens_in, int batch, bool training, RngStream* dropout_rng);
    void backward(const Tensor& gout);

    std::vector<nn::Param*> params();
    const TransformerConfig& config() const { return cfg_; }

private:
    struct EncoderLayer {
        nn::LayerNorm ln1, ln2;
        nn::MultiHeadAttention attn;
        nn::Linear ffn1, ffn2;
        nn::ReLU act;
        nn::Dropout drop_attn, drop_ffn;
    };
    struct DecoderLayer {
        nn::LayerNorm ln1, ln2, ln3;
        nn::MultiHeadAttention self_attn, cross_attn;
        nn::Linear ffn1, ffn2;
        nn::ReLU act;
        nn::Dropout drop_self, drop_cross, drop_ffn;
    };

    TransformerConfig cfg_;
    nn::Linear in_proj_, out_proj_;
    nn::Param query_embed_;
    Tensor pos_; // fixed sinusoidal positions [T, d_model]
    std::vector<EncoderLayer> enc_;
    std::vector<DecoderLayer> dec_;
    nn::LayerNorm enc_final_ln_, dec_final_ln_;

    int batch_ = 0;
};

} // namespace drdc
