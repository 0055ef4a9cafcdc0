#pragma once

#include <map>
#include <string>
#include <vector>

#include "drdc/tensor.hpp"

namespace drdc {

struct ScoredSet {
    std::vector<double> scores;
    std::vector<int> labels; // 1 = anomalous
};

/// Rank-based (Mann-Whitney) AUROC in [0,1]; ties count one half. Requires
/// both classes.
double auroc(const ScoredSet& set);

/// Pools every pixel of every heatmap into one scored set against the
/// binary masks and applies auroc.
double pixel_auroc(const std::vector<Tensor>& heatmaps, const std::vector<Tensor>& masks);

/// The scaled-mask study: per factor, bilinearly downsample each mask by the
/// factor and back up, then score the float result against the original
/// binary mask. Factor 1 is the identity and yields exactly 1.
std::map<int, double> mask_degradation_experiment(const std::vector<Tensor>& masks,
                                                  const std::vector<int>& factors);

struct CategoryHistogram {
    std::vector<double> normal_bins;    // 50 bins, sums to 1
    std::vector<double> anomalous_bins; // 50 bins, sums to 1
    double overlap = 0.0;               // sum of per-bin minima
};

/// Per-category score histograms on min-max normalized scores (normalization
/// over the category's pooled test scores). 50 fixed bins.
std::map<std::string, CategoryHistogram> histogram_report(
    const std::map<std::string, ScoredSet>& by_category);

} // namespace drdc
