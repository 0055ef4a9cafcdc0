#include "drdc/unet.hpp"

#include <stdexcept>

#include "drdc/kernels.hpp"

namespace drdc {

namespace {

Tensor concat_channels(const Tensor& a, const Tensor& b) {
    const int N = a.dim(0), Ca = a.dim(1), Cb = b.dim(1), H = a.dim(2), W = a.dim(3);
    Tensor out({N, Ca + Cb, H, W});
    const int64_t plane = static_cast<int64_t>(H) * W;
    for (int n = 0; n < N; ++n) {
        for (int c = 0; c < Ca; ++c)
            for (int64_t i = 0; i < plane; ++i)
                out[(static_cast<int64_t>(n) * (Ca + Cb) + c) * plane + i] =
                    a[(static_cast<int64_t>(n) * Ca + c) * plane + i];
        for (int c = 0; c < Cb; ++c)
            for (int64_t i = 0; i < plane; ++i)
                out[(static_cast<int64_t>(n) * (Ca + Cb) + Ca + c) * plane + i] =
                    b[(static_cast<int64_t>(n) * Cb + c) * plane + i];
    }
    return out;
}

void split_channels(const Tensor& g, int ca, Tensor& ga, Tensor& gb) {
    const int N = g.dim(0), C = g.dim(1), H = g.dim(2), W = g.dim(3);
    const int cb = C - ca;
    ga = Tensor({N, ca, H, W});
    gb = Tensor({N, cb, H, W});
    const int64_t plane = static_cast<int64_t>(H) * W;
    for (int n = 0; n < N; ++n) {
        for (int c = 0; c < ca; ++c)
            for (int64_t i = 0; i < plane; ++i)
                ga[(static_cast<int64_t>(n) * ca + c) * plane + i] =
                    g[(static_cast<int64_t>(n) * C + c) * plane + i];
        for (int c = 0; c < cb; ++c)
            for (int64_t i = 0; i < plane; ++i)
                gb[(static_cast<int64_t>(n) * cb + c) * plane + i] =
                    g[(static_cast<int64_t>(n) * C + ca + c) * plane + i];
    }
}

void add_inplace(Tensor& a, const Tensor& b) {
    for (int64_t i = 0; i < a.numel(); ++i) a[i] += b[i];
}

} // namespace

void UNetConfig::validate() const {
    if (base_width % norm_groups != 0)
        throw std::invalid_argument("UNetConfig: base_width must be a multiple of norm_groups");
    if (channel_mults.empty()) throw std::invalid_argument("UNetConfig: empty channel_mults");
    if (res_blocks < 1) throw std::invalid_argument("UNetConfig: res_blocks must be >= 1");
}

ResBlock::ResBlock(int in_ch, int out_ch, int temb_dim, int groups, RngStream& rng,
                   const std::string& name)
    : gn1(in_ch, groups, name + ".gn1"),
      gn2(out_ch, groups, name + ".gn2"),
      conv1(in_ch, out_ch, 3, 1, 1, rng, name + ".conv1"),
      conv2(out_ch, out_ch, 3, 1, 1, rng, name + ".conv2"),
      temb_proj(temb_dim, out_ch, rng, name + ".temb"),
      has_skip(in_ch != out_ch) {
    if (has_skip) skip = nn::Conv2d(in_ch, out_ch, 1, 1, 0, rng, name + ".skip");
}

Tensor ResBlock::forward(const Tensor& x, const Tensor& silu_temb) {
    x_in_ = x;
    Tensor h = conv1.forward(act1.forward(gn1.forward(x)));
    Tensor tp = temb_proj.forward(silu_temb); // [N, out_ch]
    const int N = h.dim(0), C = h.dim(1), HW = h.dim(2) * h.dim(3);
    for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c) {
            const double b = tp.at2(n, c);
            double* hp = h.data() + (static_cast<int64_t>(n) * C + c) * HW;
            for (int i = 0; i < HW; ++i) hp[i] += b;
        }
    h = conv2.forward(act2.forward(gn2.forward(h)));
    Tensor s = has_skip ? skip.forward(x) : x;
    add_inplace(h, s);
    return h;
}

Tensor ResBlock::backward(const Tensor& gy, Tensor& gst) {
    Tensor gh = gn2.backward(act2.backward(conv2.backward(gy)));
    // temb bias: pool gradient over spatial positions
    const int N = gh.dim(0), C = gh.dim(1), HW = gh.dim(2) * gh.dim(3);
    Tensor gtp({N, C});
    for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c) {
            const double* gp = gh.data() + (static_cast<int64_t>(n) * C + c) * HW;
            double acc = 0.0;
            for (int i = 0; i < HW; ++i) acc += gp[i];
            gtp.at2(n, c) = acc;
        }
    add_inplace(gst, temb_proj.backward(gtp));

    Tensor gx = gn1.backward(act1.backward(conv1.backward(gh)));
    Tensor gskip = has_skip ? skip.backward(gy) : gy;
    add_inplace(gx, gskip);
    return gx;
}

void ResBlock::collect(std::vector<nn::Param*>& out) {
    gn1.collect(out);
    conv1.collect(out);
    temb_proj.collect(out);
    gn2.collect(out);
    conv2.collect(out);
    if (has_skip) skip.collect(out);
}

UNet::UNet(const UNetConfig& cfg, uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    RngStream rng(seed);
    const int w = cfg_.base_width;
    const int temb_dim = 4 * w;
    const int L = cfg_.levels();

    stem_ = nn::Conv2d(2 * cfg_.image_channels, w, 3, 1, 1, rng, "unet.stem");
    temb_l1_ = nn::Linear(w, temb_dim, rng, "unet.temb1");
    temb_l2_ = nn::Linear(temb_dim, temb_dim, rng, "unet.temb2");

    // down path
    int ch = w;
    std::vector<int> level_width(static_cast<size_t>(L));
    for (int l = 0; l < L; ++l) {
        const int out_ch = w * cfg_.channel_mults[static_cast<size_t>(l)];
        level_width[static_cast<size_t>(l)] = out_ch;
        for (int b = 0; b < cfg_.res_blocks; ++b) {
            down_blocks_.emplace_back(ch, out_ch, temb_dim, cfg_.norm_groups, rng,
                                      "unet.down" + std::to_string(l) + ".b" + std::to_string(b));
            ch = out_ch;
        }
        if (l + 1 < L)
            downsamples_.emplace_back(ch, ch, 3, 2, 1, rng,
                                      "unet.down" + std::to_string(l) + ".pool");
    }

    // up path (levels L-2 .. 0)
    for (int l = L - 2; l >= 0; --l) {
        const int out_ch = level_width[static_cast<size_t>(l)];
        upsample_convs_.emplace_back(ch, out_ch, 3, 1, 1, rng,
                                     "unet.up" + std::to_string(l) + ".conv");
        ch = out_ch + out_ch; // concat with the level's skip
        for (int b = 0; b < cfg_.res_blocks; ++b) {
            up_blocks_.emplace_back(ch, out_ch, temb_dim, cfg_.norm_groups, rng,
                                    "unet.up" + std::to_string(l) + ".b" + std::to_string(b));
            ch = out_ch;
        }
    }

    head_norm_ = nn::GroupNorm(ch, cfg_.norm_groups, "unet.head.norm");
    head_conv_ = nn::Conv2d(ch, cfg_.image_channels, 3, 1, 1, rng, "unet.head.conv",
                            /*zero_init=*/true);
}

Tensor UNet::forward(const Tensor& x_t, const Tensor& cond, const std::vector<int>& t) {
    if (x_t.ndim() != 4 || cond.ndim() != 4)
        throw std::invalid_argument("UNet::forward: NCHW tensors expected");
    if (x_t.dim(1) != cfg_.image_channels || cond.dim(1) != cfg_.image_channels ||
        x_t.dim(2) != cond.dim(2) || x_t.dim(3) != cond.dim(3) || x_t.dim(0) != cond.dim(0))
        throw std::invalid_argument("UNet::forward: x_t / condition shape mismatch");
    if (static_cast<int>(t.size()) != x_t.dim(0))
        throw std::invalid_argument("UNet::forward: one timestep per sample required");
    const int L = cfg_.levels();
    const int side = x_t.dim(2);
    if (side % (1 << (L - 1)) != 0 || x_t.dim(3) % (1 << (L - 1)) != 0)
        throw std::invalid_argument("UNet::forward: spatial size must divide by 2^(levels-1)");

    Tensor temb = nn::sinusoidal_embedding(t, cfg_.base_width);
    temb = temb_l2_.forward(temb_act1_.forward(temb_l1_.forward(temb)));
    silu_temb_ = temb_act2_.forward(temb);

    Tensor h = stem_.forward(concat_channels(x_t, cond));
    skips_.clear();
    skip_channels_.clear();

    int bi = 0;
    for (int l = 0; l < L; ++l) {
        for (int b = 0; b < cfg_.res_blocks; ++b)
            h = down_blocks_[static_cast<size_t>(bi++)].forward(h, silu_temb_);
        if (l + 1 < L) {
            skips_.push_back(h);
            skip_channels_.push_back(h.dim(1));
            h = downsamples_[static_cast<size_t>(l)].forward(h);
        }
    }

    bi = 0;
    for (int l = L - 2; l >= 0; --l) {
        h = kernels::upsample_nearest2x(h);
        h = upsample_convs_[static_cast<size_t>(L - 2 - l)].forward(h);
        h = concat_channels(h, skips_[static_cast<size_t>(l)]);
        for (int b = 0; b < cfg_.res_blocks; ++b)
            h = up_blocks_[static_cast<size_t>(bi++)].forward(h, silu_temb_);
    }

    return head_conv_.forward(head_act_.forward(head_norm_.forward(h)));
}

void UNet::backward(const Tensor& gout) {
    const int L = cfg_.levels();
    Tensor g = head_norm_.backward(head_act_.backward(head_conv_.backward(gout)));
    Tensor gst(silu_temb_.shape());

    std::vector<Tensor> skip_grads(static_cast<size_t>(L - 1));
    int bi = static_cast<int>(up_blocks_.size());
    for (int l = 0; l <= L - 2; ++l) {
        // reverse of the up path: level order during backward is 0 .. L-2
        for (int b = 0; b < cfg_.res_blocks; ++b)
            g = up_blocks_[static_cast<size_t>(--bi)].backward(g, gst);
        Tensor gh, gskip;
        split_channels(g, upsample_convs_[static_cast<size_t>(L - 2 - l)].w_.value.dim(0), gh,
                       gskip);
        skip_grads[static_cast<size_t>(l)] = gskip;
        gh = upsample_convs_[static_cast<size_t>(L - 2 - l)].backward(gh);
        g = kernels::upsample_nearest2x_backward(gh);
    }

    bi = static_cast<int>(down_blocks_.size());
    for (int l = L - 1; l >= 0; --l) {
        if (l + 1 < L) {
            g = downsamples_[static_cast<size_t>(l)].backward(g);
            add_inplace(g, skip_grads[static_cast<size_t>(l)]);
        }
        for (int b = 0; b < cfg_.res_blocks; ++b)
            g = down_blocks_[static_cast<size_t>(--bi)].backward(g, gst);
    }
    g = stem_.backward(g);

    // timestep-embedding MLP
    Tensor gtemb = temb_act2_.backward(gst);
    temb_l1_.backward(temb_act1_.backward(temb_l2_.backward(gtemb)));
}

std::vector<nn::Param*> UNet::params() {
    std::vector<nn::Param*> out;
    stem_.collect(out);
    temb_l1_.collect(out);
    temb_l2_.collect(out);
    for (auto& b : down_blocks_) b.collect(out);
    for (auto& d : downsamples_) d.collect(out);
    for (auto& u : upsample_convs_) u.collect(out);
    for (auto& b : up_blocks_) b.collect(out);
    head_norm_.collect(out);
    head_conv_.collect(out);
    return out;
}

DenoiseFn UNet::as_denoiser() {
    return [this](const Tensor& x_t, const Tensor& cond, int t) {
        const int C = x_t.dim(0), H = x_t.dim(1), W = x_t.dim(2);
        Tensor xb = Tensor::from({1, C, H, W},
                                 std::vector<double>(x_t.data(), x_t.data() + x_t.numel()));
        Tensor cb = Tensor::from({1, C, H, W},
                                 std::vector<double>(cond.data(), cond.data() + cond.numel()));
        Tensor out = forward(xb, cb, {t});
        return Tensor::from({C, H, W},
                            std::vector<double>(out.data(), out.data() + out.numel()));
    };
}

std::vector<TrainLogPoint> train_diffusion(UNet& net, const DatasetManifest& data,
                                           const ConditionSampler& sample_condition,
                                           const NoiseSchedule& schedule,
                                           const DiffusionTrainConfig& cfg, uint64_t seed) {
    std::vector<int> train_idx = data.split_indices("train");
    if (train_idx.empty()) throw std::invalid_argument("train_diffusion: empty train split");
    for (int i : train_idx)
        if (data.records[static_cast<size_t>(i)].is_anomalous)
            throw std::invalid_argument("train_diffusion: anomalous record in train split: " +
                                        data.records[static_cast<size_t>(i)].id);

    const int C = data.channels, H = data.height, W = data.width;
    auto params = net.params();
    nn::AdamW opt(cfg.lr, cfg.weight_decay);
    RngStream rng = RngStream::substream(seed, "diff-train");

    std::vector<TrainLogPoint> log;
    const int B = cfg.batch_size;
    const int64_t per = static_cast<int64_t>(C) * H * W;
    for (int step = 0; step < cfg.steps; ++step) {
        Tensor x_t({B, C, H, W}), cond({B, C, H, W}), eps({B, C, H, W});
        std::vector<int> ts(static_cast<size_t>(B));
        for (int b = 0; b < B; ++b) {
            const int pick = train_idx[static_cast<size_t>(
                rng.uniform_int(0, static_cast<int64_t>(train_idx.size()) - 1))];
            const Tensor& x0 = data.records[static_cast<size_t>(pick)].image;
            Tensor i_in = sample_condition(x0, rng);
            const int t = static_cast<int>(rng.uniform_int(1, schedule.T));
            ts[static_cast<size_t>(b)] = t;
            const double a = std::sqrt(schedule.alpha_bar[t]);
            const double s = std::sqrt(1.0 - schedule.alpha_bar[t]);
            for (int64_t j = 0; j < per; ++j) {
                const double e = rng.normal();
                eps[b * per + j] = e;
                x_t[b * per + j] = a * x0[j] + s * e;
                cond[b * per + j] = i_in[j];
            }
        }

        Tensor pred = net.forward(x_t, cond, ts);
        double loss = 0.0;
        Tensor grad(pred.shape());
        for (int64_t j = 0; j < pred.numel(); ++j) {
            const double d = pred[j] - eps[j];
            loss += d * d;
            grad[j] = 2.0 * d / B;
        }
        loss /= B;

        opt.zero_grad(params);
        net.backward(grad);
        opt.step(params);
        log.push_back({step, loss});
    }
    return log;
}

} // namespace drdc
