#include "drdc/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "drdc/kernels.hpp"

namespace drdc {

double auroc(const ScoredSet& set) {
    if (set.scores.size() != set.labels.size())
        throw std::invalid_argument("auroc: scores/labels length mismatch");
    const size_t n = set.scores.size();
    int64_t pos = 0;
    for (int l : set.labels) pos += (l != 0);
    const int64_t neg = static_cast<int64_t>(n) - pos;
    if (pos == 0 || neg == 0)
        throw std::invalid_argument("auroc: both classes must be present");

    std::vector<size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&](size_t a, size_t b) { return set.scores[a] < set.scores[b]; });

    // average ranks within tie groups, accumulate positive rank sum
    double rank_sum_pos = 0.0;
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && set.scores[idx[j + 1]] == set.scores[idx[i]]) ++j;
        const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
        for (size_t k = i; k <= j; ++k)
            if (set.labels[idx[k]] != 0) rank_sum_pos += avg_rank;
        i = j + 1;
    }
    const double u = rank_sum_pos - 0.5 * static_cast<double>(pos) * (pos + 1);
    return u / (static_cast<double>(pos) * static_cast<double>(neg));
}

double pixel_auroc(const std::vector<Tensor>& heatmaps, const std::vector<Tensor>& masks) {
    if (heatmaps.size() != masks.size() || heatmaps.empty())
        throw std::invalid_argument("pixel_auroc: need matching non-empty lists");
    ScoredSet pool;
    for (size_t i = 0; i < heatmaps.size(); ++i) {
        require_same_shape(heatmaps[i], masks[i], "pixel_auroc");
        for (int64_t j = 0; j < heatmaps[i].numel(); ++j) {
            pool.scores.push_back(heatmaps[i][j]);
            pool.labels.push_back(masks[i][j] > 0.5 ? 1 : 0);
        }
    }
    return auroc(pool);
}

std::map<int, double> mask_degradation_experiment(const std::vector<Tensor>& masks,
                                                  const std::vector<int>& factors) {
    if (masks.empty()) throw std::invalid_argument("mask_degradation: no masks supplied");
    std::map<int, double> out;
    for (int f : factors) {
        ScoredSet pool;
        for (const Tensor& m : masks) {
            const int H = m.dim(0), W = m.dim(1);
            if (f < 1 || H % f != 0 || W % f != 0)
                throw std::invalid_argument("mask_degradation: factor must divide mask size");
            Tensor scores;
            if (f == 1) {
                scores = m;
            } else {
                Tensor chw = Tensor::from(
                    {1, H, W}, std::vector<double>(m.data(), m.data() + m.numel()));
                Tensor down = kernels::resize_bilinear(chw, H / f, W / f);
                Tensor up = kernels::resize_bilinear(down, H, W);
                scores = Tensor::from({H, W},
                                      std::vector<double>(up.data(), up.data() + up.numel()));
            }
            for (int64_t j = 0; j < m.numel(); ++j) {
                pool.scores.push_back(scores[j]);
                pool.labels.push_back(m[j] > 0.5 ? 1 : 0);
            }
        }
        out[f] = auroc(pool);
    }
    return out;
}

std::map<std::string, CategoryHistogram> histogram_report(
    const std::map<std::string, ScoredSet>& by_category) {
    constexpr int kBins = 50;
    std::map<std::string, CategoryHistogram> out;
    for (const auto& [cat, set] : by_category) {
        if (set.scores.empty())
            throw std::invalid_argument("histogram_report: empty category " + cat);
        double lo = set.scores[0], hi = set.scores[0];
        for (double v : set.scores) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        const double span = hi > lo ? hi - lo : 1.0;

        CategoryHistogram h;
        h.normal_bins.assign(kBins, 0.0);
        h.anomalous_bins.assign(kBins, 0.0);
        int64_t n_norm = 0, n_anom = 0;
        for (size_t i = 0; i < set.scores.size(); ++i) {
            const double z = (set.scores[i] - lo) / span;
            const int bin = std::min(kBins - 1, static_cast<int>(z * kBins));
            if (set.labels[i] != 0) {
                h.anomalous_bins[static_cast<size_t>(bin)] += 1.0;
                ++n_anom;
            } else {
                h.normal_bins[static_cast<size_t>(bin)] += 1.0;
                ++n_norm;
            }
        }
        if (n_norm > 0)
            for (double& v : h.normal_bins) v /= static_cast<double>(n_norm);
        if (n_anom > 0)
            for (double& v : h.anomalous_bins) v /= static_cast<double>(n_anom);
        for (int b = 0; b < kBins; ++b)
            h.overlap += std::min(h.normal_bins[static_cast<size_t>(b)],
                                  h.anomalous_bins[static_cast<size_t>(b)]);
        out[cat] = std::move(h);
    }
    return out;
}

} // namespace drdc
