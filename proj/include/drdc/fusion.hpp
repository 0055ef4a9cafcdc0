#pragma once

#include <map>
#include <tuple>
#include <vector>

#include "drdc/tensor.hpp"

namespace drdc {

/// Diffusion heatmaps indexed by (timestep t, grid size c, scale l). The
/// index sets are declared up front; st_average requires the map to be total
/// over them.
struct HeatmapStack {
    std::vector<int> timesteps, grid_sizes, scales;
    std::map<std::tuple<int, int, int>, Tensor> entries;

    void insert(int t, int c, int l, Tensor h);
    const Tensor& at(int t, int c, int l) const;
    int64_t expected_count() const {
        return static_cast<int64_t>(timesteps.size()) * grid_sizes.size() * scales.size();
    }
};

/// Scale-l anomaly map: area-downsample both images by l, channel-L2
/// distance, bilinear upsampling back to full resolution.
Tensor multiscale_heatmap(const Tensor& i_ori, const Tensor& i_out, int l);

/// Per-pixel mean over all (t, c, l) entries.
Tensor st_average(const HeatmapStack& stack);

/// m x m mean filter (symmetric padding); m odd and smaller than the map.
Tensor smooth(const Tensor& h_st, int m);

/// (1 - gamma) * upsample(h_base)/c_feat + gamma * h_sst/c_img.
Tensor blend(const Tensor& h_base, const Tensor& h_sst, double gamma, int c_feat, int c_img);

/// Maximum of the stride-1 p x p average pooling of the fused map.
double image_score(const Tensor& h_out, int pool);

} // namespace drdc
