#include "doctest.h"

#include <cmath>

#include "drdc/base_recon.hpp"
#include "drdc/features.hpp"
#include "drdc/rng.hpp"
#include "drdc/synthdata.hpp"

using namespace drdc;

namespace {
bool tensors_equal(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) return false;
    for (int64_t i = 0; i < a.numel(); ++i)
        if (a[i] != b[i]) return false;
    return true;
}
} // namespace

TEST_CASE("extractor: deterministic build, channel count, purity") {
    ExtractorConfig cfg;
    cfg.stage_channels = {16, 24, 32, 48};
    cfg.target_grid = 8;
    cfg.seed = 3;
    FeatureExtractor a(cfg, 3, 64, 64);
    FeatureExtractor b(cfg, 3, 64, 64);
    CHECK(a.feat_channels() == 120);
    for (size_t i = 0; i < a.weights().size(); ++i)
        CHECK(tensors_equal(*a.weights()[i].second, *b.weights()[i].second));

    RngStream rng(1);
    Tensor img = rng.normal_tensor({3, 64, 64});
    Tensor f1 = a.extract(img);
    Tensor f2 = a.extract(img);
    CHECK(tensors_equal(f1, f2));
    CHECK(f1.dim(0) == 120);
    CHECK(f1.dim(1) == 8);
    CHECK(f1.dim(2) == 8);

    Tensor zero({3, 64, 64});
    Tensor fz = a.extract(zero);
    for (int64_t i = 0; i < fz.numel(); ++i) CHECK(std::isfinite(fz[i]));
}

TEST_CASE("extractor: incompatible target grid is rejected") {
    ExtractorConfig cfg;
    cfg.stage_channels = {8, 8, 8, 8};
    cfg.target_grid = 7; // stage resolutions of a 64x64 input: 32,16,8,4
    CHECK_THROWS(FeatureExtractor(cfg, 3, 64, 64));
}

TEST_CASE("extractor: paper geometry 224 -> 14x14") {
    ExtractorConfig cfg;
    cfg.stage_channels = {8, 12, 16, 24};
    cfg.target_grid = 14;
    FeatureExtractor e(cfg, 3, 224, 224);
    RngStream rng(5);
    Tensor f = e.extract(rng.normal_tensor({3, 224, 224}));
    CHECK(f.dim(1) == 14);
    CHECK(f.dim(2) == 14);
}

TEST_CASE("feat_loss: identity, direct value, homogeneity") {
    Tensor a({2, 2, 2});
    CHECK(feat_loss(a, a) == 0.0);

    Tensor zeros({2, 2, 2});
    Tensor ones({2, 2, 2}, 1.0);
    CHECK(feat_loss(zeros, ones) == doctest::Approx(2.0)); // (1/4) * 8

    RngStream rng(2);
    Tensor x = rng.normal_tensor({3, 4, 4});
    Tensor y = rng.normal_tensor({3, 4, 4});
    const double base = feat_loss(x, y);
    Tensor xs(x.shape()), ys(y.shape());
    for (int64_t i = 0; i < x.numel(); ++i) {
        xs[i] = 3.0 * x[i];
        ys[i] = 3.0 * y[i];
    }
    CHECK(feat_loss(xs, ys) == doctest::Approx(9.0 * base).epsilon(1e-12));

    Tensor bad({3, 4, 5});
    CHECK_THROWS(feat_loss(x, bad));
}

TEST_CASE("base_heatmap: identity, 3-4-5, nonnegativity, loss identity") {
    Tensor a({2, 3, 3});
    Tensor h0 = base_heatmap(a, a);
    for (int64_t i = 0; i < h0.numel(); ++i) CHECK(h0[i] == 0.0);

    Tensor b = a;
    b.at3(0, 1, 1) = 3.0;
    b.at3(1, 1, 1) = 4.0;
    Tensor h = base_heatmap(a, b);
    CHECK(h.at2(1, 1) == doctest::Approx(5.0));
    for (int64_t i = 0; i < h.numel(); ++i) CHECK(h[i] >= 0.0);

    // sum of squared heatmap over positions / (H*W) equals feat_loss
    RngStream rng(9);
    Tensor x = rng.normal_tensor({5, 6, 6});
    Tensor y = rng.normal_tensor({5, 6, 6});
    Tensor hm = base_heatmap(x, y);
    double acc = 0.0;
    for (int64_t i = 0; i < hm.numel(); ++i) acc += hm[i] * hm[i];
    acc /= 36.0;
    const double fl = feat_loss(x, y);
    CHECK(std::abs(acc - fl) <= 1e-5 * std::max(1.0, std::abs(fl)));
}

TEST_CASE("BaseModel: shape contract, eval determinism, untrained loss > 0") {
    BaseTrainConfig cfg;
    cfg.d_model = 32;
    cfg.heads = 2;
    cfg.enc_layers = 1;
    cfg.dec_layers = 1;
    cfg.ffn_dim = 48;
    BaseModel model(cfg, 10, 4, 123);
    RngStream rng(4);
    Tensor f_in = rng.normal_tensor({10, 4, 4});
    Tensor f_out = model.reconstruct(f_in);
    CHECK(f_out.same_shape(f_in));
    Tensor f_out2 = model.reconstruct(f_in);
    CHECK(tensors_equal(f_out, f_out2));
    CHECK(feat_loss(f_in, f_out) > 0.0);

    Tensor bad = rng.normal_tensor({10, 5, 5});
    CHECK_THROWS(model.reconstruct(bad));
}

TEST_CASE("train_base: rejects anomalous train records, reduces loss, deterministic") {
    GenerationSpec spec;
    spec.categories = {"stripes", "checker"};
    spec.train_per_category = 6;
    spec.test_normal_per_category = 1;
    spec.test_anomalous_per_category = 1;
    spec.height = spec.width = 32;
    spec.grid_sizes = {1, 8};
    DatasetManifest data = generate_dataset(spec, 5);

    ExtractorConfig ec;
    ec.stage_channels = {8, 12, 16};
    ec.target_grid = 4;
    ec.seed = 2;
    FeatureExtractor extractor(ec, 3, 32, 32);

    BaseTrainConfig cfg;
    cfg.d_model = 32;
    cfg.heads = 2;
    cfg.enc_layers = 1;
    cfg.dec_layers = 1;
    cfg.ffn_dim = 48;
    cfg.epochs = 6;
    cfg.batch_size = 4;

    BaseModel m1(cfg, extractor.feat_channels(), 4, 77);
    auto log1 = train_base(m1, data, extractor, cfg, 99);
    REQUIRE_FALSE(log1.empty());
    CHECK(log1.back().loss < log1.front().loss);

    BaseModel m2(cfg, extractor.feat_channels(), 4, 77);
    auto log2 = train_base(m2, data, extractor, cfg, 99);
    CHECK(std::abs(log1.back().loss - log2.back().loss) <= 1e-6);

    // flip one train record to anomalous: must be rejected
    DatasetManifest corrupted = data;
    for (auto& r : corrupted.records)
        if (r.split == "train") {
            r.is_anomalous = true;
            r.gt_mask.at2(0, 0) = 1.0;
            break;
        }
    BaseModel m3(cfg, extractor.feat_channels(), 4, 77);
    CHECK_THROWS(train_base(m3, corrupted, extractor, cfg, 99));
}
