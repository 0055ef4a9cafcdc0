#include "drdc/base_recon.hpp"

#include <cmath>
#include <stdexcept>

#include "drdc/nn.hpp"

namespace drdc {

double feat_loss(const Tensor& f_in, const Tensor& f_out) {
    require_same_shape(f_in, f_out, "feat_loss");
    if (f_in.ndim() != 3) throw std::invalid_argument("feat_loss: CHW features expected");
    const double denom = static_cast<double>(f_in.dim(1)) * f_in.dim(2);
    double sq = 0.0;
    for (int64_t i = 0; i < f_in.numel(); ++i) {
        const double d = f_in[i] - f_out[i];
        sq += d * d;
    }
    return sq / denom;
}

Tensor base_heatmap(const Tensor& f_in, const Tensor& f_out) {
    require_same_shape(f_in, f_out, "base_heatmap");
    if (f_in.ndim() != 3) throw std::invalid_argument("base_heatmap: CHW features expected");
    const int C = f_in.dim(0), H = f_in.dim(1), W = f_in.dim(2);
    Tensor h({H, W});
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            double sq = 0.0;
            for (int c = 0; c < C; ++c) {
                const double d = f_in.at3(c, y, x) - f_out.at3(c, y, x);
                sq += d * d;
            }
            h.at2(y, x) = std::sqrt(sq);
        }
    return h;
}

namespace {

// CHW feature map <-> [tokens, C] rows ordered by position (y*W + x)
Tensor chw_to_tokens(const Tensor& f) {
    const int C = f.dim(0), H = f.dim(1), W = f.dim(2);
    Tensor t({H * W, C});
    for (int c = 0; c < C; ++c)
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) t.at2(y * W + x, c) = f.at3(c, y, x);
    return t;
}

Tensor tokens_to_chw(const Tensor& t, int C, int H, int W) {
    Tensor f({C, H, W});
    for (int c = 0; c < C; ++c)
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) f.at3(c, y, x) = t.at2(y * W + x, c);
    return f;
}

} // namespace

BaseModel::BaseModel(const BaseTrainConfig& cfg, int feat_channels, int feat_grid,
                     uint64_t seed)
    : grid_(feat_grid) {
    TransformerConfig tc;
    tc.feat_channels = feat_channels;
    tc.tokens = feat_grid * feat_grid;
    tc.d_model = cfg.d_model;
    tc.heads = cfg.heads;
    tc.enc_layers = cfg.enc_layers;
    tc.dec_layers = cfg.dec_layers;
    tc.ffn_dim = cfg.ffn_dim;
    tc.dropout = cfg.dropout;
    net_ = FeatureReconstructor(tc, seed);
}

Tensor BaseModel::reconstruct(const Tensor& f_in_chw) {
    const int C = f_in_chw.dim(0), H = f_in_chw.dim(1), W = f_in_chw.dim(2);
    if (C != net_.config().feat_channels || H * W != net_.config().tokens)
        throw std::invalid_argument("BaseModel::reconstruct: feature shape mismatch");
    Tensor tokens = chw_to_tokens(f_in_chw);
    Tensor out = net_.forward(tokens, 1, false, nullptr);
    return tokens_to_chw(out, C, H, W);
}

std::vector<TrainLogPoint> train_base(BaseModel& model, const DatasetManifest& data,
                                      const FeatureExtractor& extractor,
                                      const BaseTrainConfig& cfg, uint64_t seed) {
    std::vector<int> train_idx = data.split_indices("train");
    if (train_idx.empty()) throw std::invalid_argument("train_base: empty train split");
    for (int i : train_idx)
        if (data.records[static_cast<size_t>(i)].is_anomalous)
            throw std::invalid_argument("train_base: anomalous record in train split: " +
                                        data.records[static_cast<size_t>(i)].id);

    // features are frozen; extract once
    std::vector<Tensor> feats;
    feats.reserve(train_idx.size());
    for (int i : train_idx)
        feats.push_back(extractor.extract(data.records[static_cast<size_t>(i)].image));

    const int C = extractor.feat_channels();
    const int grid = extractor.feat_grid();
    const int T = grid * grid;

    auto params = model.net().params();
    nn::AdamW opt(cfg.lr, cfg.weight_decay);
    RngStream shuffle_rng = RngStream::substream(seed, "base-train/shuffle");
    RngStream dropout_rng = RngStream::substream(seed, "base-train/dropout");

    std::vector<TrainLogPoint> log;
    std::vector<int> order(train_idx.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

    int step = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        for (size_t pos = 0; pos < order.size(); pos += static_cast<size_t>(cfg.batch_size)) {
            const int bsz =
                static_cast<int>(std::min(static_cast<size_t>(cfg.batch_size),
                                          order.size() - pos));
            Tensor tokens({bsz * T, C});
            for (int b = 0; b < bsz; ++b) {
                Tensor tk = chw_to_tokens(feats[static_cast<size_t>(order[pos + b])]);
                for (int64_t j = 0; j < tk.numel(); ++j) tokens[b * T * C + j] = tk[j];
            }
            Tensor out = model.net().forward(tokens, bsz, true, &dropout_rng);

            // mean over batch of Eq.1: (1/(H*W)) sum of squared differences
            double loss = 0.0;
            Tensor grad(out.shape());
            const double denom = static_cast<double>(T) * bsz;
            for (int64_t j = 0; j < out.numel(); ++j) {
                const double d = out[j] - tokens[j];
                loss += d * d;
                grad[j] = 2.0 * d / denom;
            }
            loss /= denom;

            opt.zero_grad(params);
            model.net().backward(grad);
            opt.step(params);
            log.push_back({step, loss});
            ++step;
        }
    }
    return log;
}

} // namespace drdc
