#include "drdc/fusion.hpp"

#include <cmath>
#include <stdexcept>

#include "drdc/kernels.hpp"

namespace drdc {

void HeatmapStack::insert(int t, int c, int l, Tensor h) {
    entries[{t, c, l}] = std::move(h);
}

const Tensor& HeatmapStack::at(int t, int c, int l) const {
    auto it = entries.find({t, c, l});
    if (it == entries.end())
        throw std::out_of_range("HeatmapStack: missing entry (t=" + std::to_string(t) +
                                ", c=" + std::to_string(c) + ", l=" + std::to_string(l) + ")");
    return it->second;
}

Tensor multiscale_heatmap(const Tensor& i_ori, const Tensor& i_out, int l) {
    require_same_shape(i_ori, i_out, "multiscale_heatmap");
    const int C = i_ori.dim(0), H = i_ori.dim(1), W = i_ori.dim(2);
    if (l < 1 || H % l != 0 || W % l != 0)
        throw std::invalid_argument("multiscale_heatmap: scale must divide image size");
    Tensor da = kernels::downsample_area(i_ori, l);
    Tensor db = kernels::downsample_area(i_out, l);
    Tensor low({H / l, W / l});
    for (int y = 0; y < H / l; ++y)
        for (int x = 0; x < W / l; ++x) {
            double sq = 0.0;
            for (int c = 0; c < C; ++c) {
                const double d = da.at3(c, y, x) - db.at3(c, y, x);
                sq += d * d;
            }
            low.at2(y, x) = std::sqrt(sq);
        }
    if (l == 1) return low;
    Tensor low_chw = Tensor::from({1, H / l, W / l},
                                  std::vector<double>(low.data(), low.data() + low.numel()));
    Tensor up = kernels::resize_bilinear(low_chw, H, W);
    return Tensor::from({H, W}, std::vector<double>(up.data(), up.data() + up.numel()));
}

Tensor st_average(const HeatmapStack& stack) {
    if (stack.expected_count() == 0)
        throw std::invalid_argument("st_average: empty index sets");
    Tensor sum;
    int64_t n = 0;
    for (int t : stack.timesteps)
        for (int c : stack.grid_sizes)
            for (int l : stack.scales) {
                const Tensor& h = stack.at(t, c, l);
                if (n == 0) sum = Tensor(h.shape());
                require_same_shape(sum, h, "st_average");
                for (int64_t i = 0; i < h.numel(); ++i) sum[i] += h[i];
                ++n;
            }
    const double inv = 1.0 / static_cast<double>(n);
    for (int64_t i = 0; i < sum.numel(); ++i) sum[i] *= inv;
    return sum;
}

Tensor smooth(const Tensor& h_st, int m) { return kernels::box_mean(h_st, m); }

Tensor blend(const Tensor& h_base, const Tensor& h_sst, double gamma, int c_feat, int c_img) {
    if (!(gamma >= 0.0 && gamma <= 1.0))
        throw std::invalid_argument("blend: gamma must lie in [0,1]");
    if (h_base.ndim() != 2 || h_sst.ndim() != 2)
        throw std::invalid_argument("blend: HW heatmaps expected");
    if (c_feat < 1 || c_img < 1) throw std::invalid_argument("blend: bad channel normalizers");
    const int H = h_sst.dim(0), W = h_sst.dim(1);
    Tensor base_up;
    if (h_base.dim(0) == H && h_base.dim(1) == W) {
        base_up = h_base;
    } else {
        Tensor chw = Tensor::from({1, h_base.dim(0), h_base.dim(1)},
                                  std::vector<double>(h_base.data(),
                                                      h_base.data() + h_base.numel()));
        Tensor up = kernels::resize_bilinear(chw, H, W);
        base_up = Tensor::from({H, W}, std::vector<double>(up.data(), up.data() + up.numel()));
    }
    Tensor out({H, W});
    // division form keeps the gamma = 0 / 1 endpoints bit-exact
    for (int64_t i = 0; i < out.numel(); ++i)
        out[i] = (1.0 - gamma) * (base_up[i] / c_feat) + gamma * (h_sst[i] / c_img);
    return out;
}

double image_score(const Tensor& h_out, int pool) {
    if (h_out.ndim() != 2) throw std::invalid_argument("image_score: HW map expected");
    Tensor pooled = kernels::avg_pool_same(h_out, pool);
    double mx = pooled[0];
    for (int64_t i = 1; i < pooled.numel(); ++i) mx = std::max(mx, pooled[i]);
    return mx;
}

} // namespace drdc
