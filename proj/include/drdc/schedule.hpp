#pragma once

#include <vector>

namespace drdc {

/// Variance schedule tables for a T-step diffusion. Arrays are indexed by
/// timestep t in [0, T]; index 0 holds the conventions beta_0 = 0,
/// alpha_bar_0 = 1, sigma_0 = 0 so that t = 0 means "the clean image".
struct NoiseSchedule {
    int T = 0;
    std::vector<double> beta;
    std::vector<double> alpha;     // 1 - beta_t
    std::vector<double> alpha_bar; // prod_{s<=t} alpha_s, strictly decreasing
    std::vector<double> sigma;     // sqrt(beta_t): fixed-variance reverse process

    bool valid_t(int t) const { return t >= 0 && t <= T; }
};

/// Linearly spaced beta in [beta_start, beta_end] over T steps.
NoiseSchedule make_schedule(int T, double beta_start, double beta_end);

} // namespace drdc
