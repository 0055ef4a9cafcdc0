#include "drdc/inpaint.hpp"

#include <cmath>
#include <stdexcept>

namespace drdc {

void GridPartition::validate() const {
    if (masks.empty() || sets.size() != masks.size())
        throw std::runtime_error("GridPartition: inconsistent sets/masks");
    const int expected = grid_count / num_sets;
    std::vector<char> seen(static_cast<size_t>(grid_count), 0);
    for (const auto& s : sets) {
        if (static_cast<int>(s.size()) != expected)
            throw std::runtime_error("GridPartition: set sizes must equal G / n_s");
        for (int g : s) {
            if (g < 0 || g >= grid_count || seen[static_cast<size_t>(g)])
                throw std::runtime_error("GridPartition: sets are not a disjoint cover");
            seen[static_cast<size_t>(g)] = 1;
        }
    }
    for (char c : seen)
        if (!c) throw std::runtime_error("GridPartition: cover is incomplete");
}

GridPartition make_partition(int height, int width, int c, int num_sets, RngStream& rng) {
    if (c < 1 || height % c != 0 || width % c != 0)
        throw std::invalid_argument("make_partition: c must divide image height and width");
    const int gh = height / c, gw = width / c;
    const int G = gh * gw;
    if (num_sets < 1 || G % num_sets != 0)
        throw std::invalid_argument("make_partition: n_s must divide the grid count");

    GridPartition p;
    p.cell = c;
    p.grid_count = G;
    p.num_sets = num_sets;

    std::vector<int> order(static_cast<size_t>(G));
    for (int i = 0; i < G; ++i) order[static_cast<size_t>(i)] = i;
    rng.shuffle(order);

    const int per = G / num_sets;
    p.sets.resize(static_cast<size_t>(num_sets));
    p.masks.assign(static_cast<size_t>(num_sets), Tensor({height, width}, 1.0));
    for (int i = 0; i < num_sets; ++i) {
        auto& set = p.sets[static_cast<size_t>(i)];
        set.assign(order.begin() + static_cast<int64_t>(i) * per,
                   order.begin() + static_cast<int64_t>(i + 1) * per);
        Tensor& mask = p.masks[static_cast<size_t>(i)];
        for (int g : set) {
            const int gy = g / gw, gx = g % gw;
            for (int y = gy * c; y < (gy + 1) * c; ++y)
                for (int x = gx * c; x < (gx + 1) * c; ++x) mask.at2(y, x) = 0.0;
        }
    }
    p.validate();
    return p;
}

namespace {

void check_mask_shape(const Tensor& image, const Tensor& mask, const char* where) {
    if (image.ndim() != 3 || mask.ndim() != 2 || image.dim(1) != mask.dim(0) ||
        image.dim(2) != mask.dim(1))
        throw std::invalid_argument(std::string(where) + ": image/mask shape mismatch");
}

// mask * known + (1 - mask) * other, channel-broadcast over the HW mask
Tensor combine_masked(const Tensor& mask, const Tensor& known, const Tensor& other) {
    Tensor out(known.shape());
    const int C = known.dim(0), H = known.dim(1), W = known.dim(2);
    for (int c = 0; c < C; ++c)
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x)
                out.at3(c, y, x) = mask.at2(y, x) > 0.5 ? known.at3(c, y, x)
                                                        : other.at3(c, y, x);
    return out;
}

} // namespace

Tensor apply_mask_noise(const Tensor& image, const Tensor& mask, RngStream& rng) {
    check_mask_shape(image, mask, "apply_mask_noise");
    Tensor out = image;
    const int C = image.dim(0), H = image.dim(1), W = image.dim(2);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            if (mask.at2(y, x) > 0.5) continue;
            for (int c = 0; c < C; ++c) out.at3(c, y, x) = rng.normal();
        }
    return out;
}

std::map<int, Tensor> conditioned_reverse(const DenoiseFn& denoise, const NoiseSchedule& s,
                                          const Tensor& i_ori, const Tensor& mask,
                                          const std::vector<int>& timesteps, RngStream& rng,
                                          bool known_region_deterministic) {
    check_mask_shape(i_ori, mask, "conditioned_reverse");
    if (timesteps.empty() || timesteps.back() != 0)
        throw std::invalid_argument("conditioned_reverse: timesteps must end at 0");
    for (size_t k = 0; k + 1 < timesteps.size(); ++k)
        if (timesteps[k] <= timesteps[k + 1])
            throw std::invalid_argument("conditioned_reverse: timesteps must be descending");
    if (timesteps.front() > s.T)
        throw std::invalid_argument("conditioned_reverse: first timestep exceeds T");

    // image condition, fixed for the whole trajectory
    Tensor i_in = apply_mask_noise(i_ori, mask, rng);

    // start the trajectory from the condition image processed forward
    Tensor x = forward_sample(i_in, timesteps.front(), rng.normal_tensor(i_ori.shape()), s);

    auto known_at = [&](int t) {
        if (known_region_deterministic || t == 0) {
            Tensor k(i_ori.shape());
            const double a = std::sqrt(s.alpha_bar[t]);
            for (int64_t i = 0; i < k.numel(); ++i) k[i] = a * i_ori[i];
            return k;
        }
        return forward_sample(i_ori, t, rng.normal_tensor(i_ori.shape()), s);
    };

    std::map<int, Tensor> predictions;
    for (size_t k = 0; k < timesteps.size(); ++k) {
        const int t = timesteps[k];
        x = combine_masked(mask, known_at(t), x);
        if (t == 0) {
            predictions[0] = x;
            break;
        }
        Tensor eps_hat = denoise(x, i_in, t);
        require_same_shape(x, eps_hat, "conditioned_reverse: denoiser output");
        predictions[t] = predict_x0(x, eps_hat, t, s);
        x = deterministic_step(x, eps_hat, t, timesteps[k + 1], s);
    }
    return predictions;
}

Tensor assemble_output(const GridPartition& partition, const std::vector<Tensor>& per_set_x0) {
    if (per_set_x0.size() != partition.masks.size())
        throw std::invalid_argument("assemble_output: one prediction per set required");
    const Tensor& first = per_set_x0.front();
    Tensor out(first.shape());
    const int C = first.dim(0), H = first.dim(1), W = first.dim(2);
    for (size_t i = 0; i < per_set_x0.size(); ++i) {
        require_same_shape(first, per_set_x0[i], "assemble_output");
        const Tensor& mask = partition.masks[i];
        if (mask.dim(0) != H || mask.dim(1) != W)
            throw std::invalid_argument("assemble_output: mask/prediction size mismatch");
        for (int c = 0; c < C; ++c)
            for (int y = 0; y < H; ++y)
                for (int x = 0; x < W; ++x)
                    if (mask.at2(y, x) < 0.5) out.at3(c, y, x) = per_set_x0[i].at3(c, y, x);
    }
    return out;
}

Tensor diff_heatmap(const Tensor& i_ori, const Tensor& i_out) {
    require_same_shape(i_ori, i_out, "diff_heatmap");
    const int C = i_ori.dim(0), H = i_ori.dim(1), W = i_ori.dim(2);
    Tensor h({H, W});
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            double sq = 0.0;
            for (int c = 0; c < C; ++c) {
                const double d = i_ori.at3(c, y, x) - i_out.at3(c, y, x);
                sq += d * d;
            }
            h.at2(y, x) = std::sqrt(sq);
        }
    return h;
}

} // namespace drdc
