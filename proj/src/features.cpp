#include "drdc/features.hpp"

#include <stdexcept>

#include "drdc/kernels.hpp"
#include "drdc/nn.hpp"
#include "drdc/rng.hpp"

namespace drdc {

FeatureExtractor::FeatureExtractor(const ExtractorConfig& cfg, int image_channels, int image_h,
                                   int image_w)
    : cfg_(cfg), image_channels_(image_channels), image_h_(image_h), image_w_(image_w) {
    if (cfg.stage_channels.empty())
        throw std::invalid_argument("FeatureExtractor: no stages configured");
    if (cfg.target_grid < 1) throw std::invalid_argument("FeatureExtractor: bad target grid");

    // the target grid must divide at least one stage resolution cleanly
    bool divides_some = false;
    int h = image_h, w = image_w;
    for (size_t i = 0; i < cfg.stage_channels.size(); ++i) {
        h = (h + 1) / 2;
        w = (w + 1) / 2;
        if (h % cfg.target_grid == 0 && w % cfg.target_grid == 0) divides_some = true;
    }
    if (!divides_some)
        throw std::invalid_argument(
            "FeatureExtractor: target grid divides no stage resolution");

    RngStream rng(cfg.seed);
    int in_ch = image_channels;
    for (size_t i = 0; i < cfg.stage_channels.size(); ++i) {
        const int out_ch = cfg.stage_channels[i];
        stage_w_.push_back(nn::he_normal({out_ch, in_ch, 3, 3}, in_ch * 9, rng));
        Tensor b({out_ch});
        for (int64_t j = 0; j < b.numel(); ++j) b[j] = 0.1 * rng.normal();
        stage_b_.push_back(b);
        feat_channels_ += out_ch;
        in_ch = out_ch;
    }
}

Tensor FeatureExtractor::extract(const Tensor& image) const {
    if (image.ndim() != 3 || image.dim(0) != image_channels_ || image.dim(1) != image_h_ ||
        image.dim(2) != image_w_)
        throw std::invalid_argument("FeatureExtractor::extract: image shape mismatch");

    Tensor x = Tensor::from({1, image.dim(0), image.dim(1), image.dim(2)},
                            std::vector<double>(image.data(), image.data() + image.numel()));
    Tensor out({feat_channels_, cfg_.target_grid, cfg_.target_grid});
    int ch_off = 0;
    for (size_t i = 0; i < stage_w_.size(); ++i) {
        x = kernels::conv2d_forward(x, stage_w_[i], stage_b_[i], 2, 1);
        // leaky ReLU keeps variance alive through the frozen stack
        for (int64_t j = 0; j < x.numel(); ++j)
            if (x[j] < 0.0) x[j] *= 0.2;
        const int C = x.dim(1), H = x.dim(2), W = x.dim(3);
        Tensor stage = Tensor::from({C, H, W},
                                    std::vector<double>(x.data(), x.data() + x.numel()));
        Tensor resized = kernels::resize_bilinear(stage, cfg_.target_grid, cfg_.target_grid);
        for (int c = 0; c < C; ++c)
            for (int y = 0; y < cfg_.target_grid; ++y)
                for (int xx = 0; xx < cfg_.target_grid; ++xx)
                    out.at3(ch_off + c, y, xx) = resized.at3(c, y, xx);
        ch_off += C;
    }
    return out;
}

std::vector<std::pair<std::string, const Tensor*>> FeatureExtractor::weights() const {
    std::vector<std::pair<std::string, const Tensor*>> out;
    for (size_t i = 0; i < stage_w_.size(); ++i) {
        out.emplace_back("extractor.stage" + std::to_string(i) + ".w", &stage_w_[i]);
        out.emplace_back("extractor.stage" + std::to_string(i) + ".b", &stage_b_[i]);
    }
    return out;
}

void FeatureExtractor::load_weights(const std::vector<std::pair<std::string, Tensor>>& arrays) {
    for (const auto& [name, tensor] : arrays) {
        bool found = false;
        for (size_t i = 0; i < stage_w_.size(); ++i) {
            if (name == "extractor.stage" + std::to_string(i) + ".w") {
                if (!stage_w_[i].same_shape(tensor))
                    throw std::runtime_error("extractor weight shape mismatch: " + name);
                stage_w_[i] = tensor;
                found = true;
            } else if (name == "extractor.stage" + std::to_string(i) + ".b") {
                stage_b_[i] = tensor;
                found = true;
            }
        }
        if (!found) throw std::runtime_error("unknown extractor weight: " + name);
    }
}

} // namespace drdc
