#include "doctest.h"

#include <cmath>

#include "drdc/evalkit.hpp"
#include "drdc/fusion.hpp"
#include "drdc/inpaint.hpp"
#include "drdc/kernels.hpp"
#include "drdc/rng.hpp"

using namespace drdc;

namespace {
double max_abs_diff(const Tensor& a, const Tensor& b) {
    double m = 0.0;
    for (int64_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}
} // namespace

TEST_CASE("multiscale_heatmap: l=1 equals diff_heatmap, zero case, errors") {
    RngStream rng(1);
    Tensor a = rng.normal_tensor({3, 16, 16});
    Tensor b = rng.normal_tensor({3, 16, 16});
    CHECK(max_abs_diff(multiscale_heatmap(a, b, 1), diff_heatmap(a, b)) < 1e-6);
    for (int l : {1, 2, 4}) {
        Tensor z = multiscale_heatmap(a, a, l);
        for (int64_t i = 0; i < z.numel(); ++i) CHECK(z[i] == 0.0);
    }
    CHECK_THROWS(multiscale_heatmap(a, b, 3));
}

TEST_CASE("multiscale_heatmap: single-pixel area averaging at l=2") {
    Tensor a({3, 8, 8});
    Tensor b = a;
    b.at3(0, 4, 4) = 1.0; // one anomalous pixel, magnitude 1, one channel

    // oracle route: area-downsample the per-pixel diff, then upsample
    Tensor diff({1, 8, 8});
    diff.at3(0, 4, 4) = 1.0;
    Tensor low = kernels::downsample_area(diff, 2);
    CHECK(low.at3(0, 2, 2) == doctest::Approx(0.25)); // the 2x2 average
    Tensor expected = kernels::resize_bilinear(low, 8, 8);

    Tensor got = multiscale_heatmap(a, b, 2);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x)
            CHECK(got.at2(y, x) == doctest::Approx(expected.at3(0, y, x)).epsilon(1e-12));
}

TEST_CASE("st_average: identical entries, mean, missing entry") {
    HeatmapStack stack;
    stack.timesteps = {50, 0};
    stack.grid_sizes = {4};
    stack.scales = {1};
    Tensor zeros({6, 6});
    Tensor ones({6, 6}, 1.0);
    stack.insert(50, 4, 1, zeros);
    stack.insert(0, 4, 1, ones);
    Tensor avg = st_average(stack);
    for (int64_t i = 0; i < avg.numel(); ++i) CHECK(avg[i] == doctest::Approx(0.5));

    HeatmapStack same;
    same.timesteps = {10, 5};
    same.grid_sizes = {2};
    same.scales = {1, 2};
    RngStream rng(3);
    Tensor h = rng.normal_tensor({6, 6});
    for (int t : same.timesteps)
        for (int l : same.scales) same.insert(t, 2, l, h);
    CHECK(max_abs_diff(st_average(same), h) < 1e-12);

    HeatmapStack missing;
    missing.timesteps = {10, 5};
    missing.grid_sizes = {2};
    missing.scales = {1};
    missing.insert(10, 2, 1, h);
    CHECK_THROWS(st_average(missing));
}

TEST_CASE("st_average and smooth scale linearly (ranking invariance)") {
    RngStream rng(4);
    HeatmapStack s1, s2;
    s1.timesteps = s2.timesteps = {10};
    s1.grid_sizes = s2.grid_sizes = {2, 4};
    s1.scales = s2.scales = {1};
    const double k = 3.7;
    for (int c : {2, 4}) {
        Tensor h = rng.normal_tensor({8, 8});
        for (int64_t i = 0; i < h.numel(); ++i) h[i] = std::abs(h[i]);
        Tensor hk(h.shape());
        for (int64_t i = 0; i < h.numel(); ++i) hk[i] = k * h[i];
        s1.insert(10, c, 1, h);
        s2.insert(10, c, 1, hk);
    }
    Tensor a = smooth(st_average(s1), 3);
    Tensor b = smooth(st_average(s2), 3);
    for (int64_t i = 0; i < a.numel(); ++i)
        CHECK(b[i] == doctest::Approx(k * a[i]).epsilon(1e-12));
}

TEST_CASE("smooth: fixed point and identity") {
    Tensor c({9, 9}, 2.5);
    Tensor sm = smooth(c, 3);
    for (int64_t i = 0; i < sm.numel(); ++i) CHECK(sm[i] == doctest::Approx(2.5));
    RngStream rng(5);
    Tensor h = rng.normal_tensor({9, 9});
    CHECK(max_abs_diff(smooth(h, 1), h) == 0.0);
    CHECK_THROWS(smooth(h, 4));
}

TEST_CASE("blend: endpoints are exact, gamma domain enforced") {
    RngStream rng(6);
    Tensor h_base({4, 4});
    for (int64_t i = 0; i < h_base.numel(); ++i) h_base[i] = std::abs(rng.normal());
    Tensor h_sst({8, 8});
    for (int64_t i = 0; i < h_sst.numel(); ++i) h_sst[i] = std::abs(rng.normal());

    Tensor g0 = blend(h_base, h_sst, 0.0, 120, 3);
    Tensor up = kernels::resize_bilinear(
        Tensor::from({1, 4, 4}, std::vector<double>(h_base.data(), h_base.data() + 16)), 8, 8);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) CHECK(g0.at2(y, x) == up.at3(0, y, x) / 120.0);

    Tensor g1 = blend(h_base, h_sst, 1.0, 120, 3);
    for (int64_t i = 0; i < g1.numel(); ++i) CHECK(g1[i] == h_sst[i] / 3.0);

    Tensor gmid = blend(h_base, h_sst, 0.9, 120, 3);
    for (int64_t i = 0; i < gmid.numel(); ++i) CHECK(gmid[i] >= 0.0);

    CHECK_THROWS(blend(h_base, h_sst, -0.1, 120, 3));
    CHECK_THROWS(blend(h_base, h_sst, 1.1, 120, 3));
}

TEST_CASE("image_score: degenerate pooling, fixed point, monotonicity") {
    RngStream rng(7);
    Tensor h({10, 10});
    for (int64_t i = 0; i < h.numel(); ++i) h[i] = std::abs(rng.normal());
    double mx = h[0];
    for (int64_t i = 0; i < h.numel(); ++i) mx = std::max(mx, h[i]);
    CHECK(image_score(h, 1) == doctest::Approx(mx));

    Tensor c({10, 10}, 0.7);
    for (int p : {1, 2, 3, 5}) CHECK(image_score(c, p) == doctest::Approx(0.7));

    // raising one pixel cannot lower the score
    for (int p : {1, 3, 4}) {
        const double before = image_score(h, p);
        Tensor h2 = h;
        h2.at2(4, 7) += 1.0;
        CHECK(image_score(h2, p) >= before - 1e-12);
    }
    CHECK_THROWS(image_score(h, 11));
}

// ---------------------------------------------------------------------------

TEST_CASE("auroc: worked example, endpoints, ties, errors") {
    ScoredSet s;
    s.scores = {0.1, 0.4, 0.35, 0.8};
    s.labels = {0, 0, 1, 1};
    CHECK(auroc(s) == doctest::Approx(0.75)); // 3 of 4 pairs ordered correctly

    ScoredSet perfect;
    perfect.scores = {0.1, 0.2, 0.8, 0.9};
    perfect.labels = {0, 0, 1, 1};
    CHECK(auroc(perfect) == doctest::Approx(1.0));

    ScoredSet tied;
    tied.scores = {0.5, 0.5, 0.5, 0.5};
    tied.labels = {0, 1, 0, 1};
    CHECK(auroc(tied) == doctest::Approx(0.5));

    ScoredSet single;
    single.scores = {0.5, 0.6};
    single.labels = {1, 1};
    CHECK_THROWS(auroc(single));
}

TEST_CASE("auroc equals brute-force pairwise counting on random instances") {
    RngStream rng(8);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 2 + static_cast<int>(rng.uniform_int(0, 198));
        ScoredSet s;
        bool has0 = false, has1 = false;
        for (int i = 0; i < n; ++i) {
            // coarse quantization to force ties
            s.scores.push_back(std::round(rng.uniform() * 8.0) / 8.0);
            const int l = rng.uniform() < 0.4 ? 1 : 0;
            s.labels.push_back(l);
            (l ? has1 : has0) = true;
        }
        if (!has0 || !has1) continue;

        double num = 0.0;
        int64_t pairs = 0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                if (s.labels[static_cast<size_t>(i)] != 1 ||
                    s.labels[static_cast<size_t>(j)] != 0)
                    continue;
                ++pairs;
                if (s.scores[static_cast<size_t>(i)] > s.scores[static_cast<size_t>(j)])
                    num += 1.0;
                else if (s.scores[static_cast<size_t>(i)] == s.scores[static_cast<size_t>(j)])
                    num += 0.5;
            }
        CHECK(std::abs(auroc(s) - num / static_cast<double>(pairs)) < 1e-9);
    }
}

TEST_CASE("auroc is invariant under strictly increasing transforms") {
    RngStream rng(9);
    ScoredSet s;
    for (int i = 0; i < 60; ++i) {
        s.scores.push_back(rng.normal());
        s.labels.push_back(rng.uniform() < 0.5 ? 1 : 0);
    }
    s.labels[0] = 0;
    s.labels[1] = 1;
    const double base = auroc(s);
    ScoredSet t = s;
    for (double& v : t.scores) v = std::exp(v);
    CHECK(auroc(t) == doctest::Approx(base));
    for (double& v : t.scores) v = 2.0 * v + 1.0;
    CHECK(auroc(t) == doctest::Approx(base));
}

TEST_CASE("pixel_auroc: perfect, inverted, constant") {
    RngStream rng(10);
    std::vector<Tensor> masks;
    for (int i = 0; i < 3; ++i) {
        Tensor m({8, 8});
        for (int64_t j = 0; j < m.numel(); ++j) m[j] = rng.uniform() < 0.2 ? 1.0 : 0.0;
        masks.push_back(m);
    }
    CHECK(pixel_auroc(masks, masks) == doctest::Approx(1.0));

    std::vector<Tensor> inverted;
    for (const Tensor& m : masks) {
        Tensor inv(m.shape());
        for (int64_t j = 0; j < m.numel(); ++j) inv[j] = 1.0 - m[j];
        inverted.push_back(inv);
    }
    CHECK(pixel_auroc(inverted, masks) == doctest::Approx(0.0));

    std::vector<Tensor> constant(masks.size(), Tensor({8, 8}, 0.3));
    CHECK(pixel_auroc(constant, masks) == doctest::Approx(0.5));
}

TEST_CASE("mask_degradation: identity factor, monotone decline on thin masks") {
    RngStream rng(11);
    std::vector<Tensor> masks;
    for (int i = 0; i < 40; ++i) {
        Tensor m({32, 32});
        const int y = static_cast<int>(rng.uniform_int(2, 29));
        const int x0 = static_cast<int>(rng.uniform_int(0, 16));
        for (int x = x0; x < x0 + 12; ++x) m.at2(y, x) = 1.0; // width-1 lines
        masks.push_back(m);
    }
    auto res = mask_degradation_experiment(masks, {1, 2, 4, 8, 16});
    CHECK(res.at(1) == 1.0); // exactly, by the identity transform
    CHECK(res.at(2) >= res.at(4));
    CHECK(res.at(4) >= res.at(8));
    CHECK(res.at(8) >= res.at(16));
    CHECK(res.at(16) < res.at(2));

    CHECK_THROWS(mask_degradation_experiment(masks, {3})); // non-divisor
}

TEST_CASE("histogram_report: overlap extremes and bin normalization") {
    std::map<std::string, ScoredSet> input;
    ScoredSet disjoint;
    for (int i = 0; i < 30; ++i) {
        disjoint.scores.push_back(0.1 + 0.001 * i);
        disjoint.labels.push_back(0);
        disjoint.scores.push_back(0.9 + 0.001 * i);
        disjoint.labels.push_back(1);
    }
    input["disjoint"] = disjoint;

    ScoredSet identical;
    for (int i = 0; i < 50; ++i) {
        identical.scores.push_back(i / 50.0);
        identical.labels.push_back(0);
        identical.scores.push_back(i / 50.0);
        identical.labels.push_back(1);
    }
    input["identical"] = identical;

    auto rep = histogram_report(input);
    CHECK(rep.at("disjoint").overlap == doctest::Approx(0.0));
    CHECK(rep.at("identical").overlap == doctest::Approx(1.0).epsilon(1e-9));
    for (const auto& [cat, h] : rep) {
        double sn = 0.0, sa = 0.0;
        for (double v : h.normal_bins) sn += v;
        for (double v : h.anomalous_bins) sa += v;
        CHECK(sn == doctest::Approx(1.0));
        CHECK(sa == doctest::Approx(1.0));
    }

    std::map<std::string, ScoredSet> empty_cat;
    empty_cat["nothing"] = ScoredSet{};
    CHECK_THROWS(histogram_report(empty_cat));
}
