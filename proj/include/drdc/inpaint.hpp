#pragma once

#include <map>
#include <vector>

#include "drdc/diffusion.hpp"
#include "drdc/rng.hpp"
#include "drdc/tensor.hpp"

namespace drdc {

/// Disjoint grid decomposition of an image: G = (H/c)*(W/c) cells of c x c
/// pixels, split uniformly into num_sets sets. masks[i] is 0 on pixels of
/// set i ("unknown", to be inpainted) and 1 elsewhere ("known").
struct GridPartition {
    int cell = 0;      // c
    int grid_count = 0; // G
    int num_sets = 0;  // n_s
    std::vector<std::vector<int>> sets; // grid indices, row-major cells
    std::vector<Tensor> masks;          // [H,W] each

    void validate() const;
};

GridPartition make_partition(int height, int width, int c, int num_sets, RngStream& rng);

/// I_in = mask * image + (1 - mask) * g, g ~ N(0, I). Known pixels are
/// copied bit-identically.
Tensor apply_mask_noise(const Tensor& image, const Tensor& mask, RngStream& rng);

/// One dual-conditioned deterministic reverse trajectory for a single mask.
/// timesteps must be strictly descending and end at 0. Before every model
/// call the known region is overwritten with a correctly-noised copy of the
/// original image (fresh noise per step, or its mean when
/// known_region_deterministic). Returns the x0 prediction at every visited
/// timestep, keyed by t.
std::map<int, Tensor> conditioned_reverse(const DenoiseFn& denoise, const NoiseSchedule& s,
                                          const Tensor& i_ori, const Tensor& mask,
                                          const std::vector<int>& timesteps, RngStream& rng,
                                          bool known_region_deterministic = false);

/// Union of the unknown parts of the per-set predictions at one timestep:
/// every pixel is unknown in exactly one set, so coverage is exactly 1.
Tensor assemble_output(const GridPartition& partition,
                       const std::vector<Tensor>& per_set_x0);

/// Per-pixel channel-L2 distance between original and inpainted image: [H,W].
Tensor diff_heatmap(const Tensor& i_ori, const Tensor& i_out);

} // namespace drdc
