#include "drdc/diffusion.hpp"

#include <cmath>
#include <stdexcept>

namespace drdc {

namespace {

void check_t(int t, const NoiseSchedule& s, const char* where, int min_t = 1) {
    if (t < min_t || t > s.T)
        throw std::invalid_argument(std::string(where) + ": timestep out of range");
}

} // namespace

Tensor forward_sample(const Tensor& x0, int t, const Tensor& eps, const NoiseSchedule& s) {
    check_t(t, s, "forward_sample", 0);
    require_same_shape(x0, eps, "forward_sample");
    const double a = std::sqrt(s.alpha_bar[t]);
    const double b = std::sqrt(1.0 - s.alpha_bar[t]);
    Tensor out(x0.shape());
    for (int64_t i = 0; i < x0.numel(); ++i) out[i] = a * x0[i] + b * eps[i];
    return out;
}

Tensor forward_step_given(const Tensor& x_prev, int t, const Tensor& z,
                          const NoiseSchedule& s) {
    check_t(t, s, "forward_step");
    require_same_shape(x_prev, z, "forward_step");
    const double a = std::sqrt(1.0 - s.beta[t]);
    const double b = std::sqrt(s.beta[t]);
    Tensor out(x_prev.shape());
    for (int64_t i = 0; i < x_prev.numel(); ++i) out[i] = a * x_prev[i] + b * z[i];
    return out;
}

Tensor forward_step(const Tensor& x_prev, int t, RngStream& rng, const NoiseSchedule& s) {
    Tensor z = rng.normal_tensor(x_prev.shape());
    return forward_step_given(x_prev, t, z, s);
}

Tensor predict_x0(const Tensor& x_t, const Tensor& eps_hat, int t, const NoiseSchedule& s) {
    check_t(t, s, "predict_x0", 0);
    require_same_shape(x_t, eps_hat, "predict_x0");
    if (t == 0) return x_t;
    const double abar = s.alpha_bar[t];
    if (!(abar > 0.0)) throw std::domain_error("predict_x0: alpha_bar underflow");
    const double inv = 1.0 / std::sqrt(abar);
    const double b = std::sqrt(1.0 - abar);
    Tensor out(x_t.shape());
    for (int64_t i = 0; i < x_t.numel(); ++i) out[i] = (x_t[i] - b * eps_hat[i]) * inv;
    return out;
}

Tensor ancestral_mean(const Tensor& x_t, const Tensor& eps_hat, int t,
                      const NoiseSchedule& s) {
    check_t(t, s, "ancestral_mean");
    require_same_shape(x_t, eps_hat, "ancestral_mean");
    const double inv_sqrt_alpha = 1.0 / std::sqrt(s.alpha[t]);
    const double coef = s.beta[t] / std::sqrt(1.0 - s.alpha_bar[t]);
    Tensor out(x_t.shape());
    for (int64_t i = 0; i < x_t.numel(); ++i)
        out[i] = inv_sqrt_alpha * (x_t[i] - coef * eps_hat[i]);
    return out;
}

Tensor deterministic_step(const Tensor& x_t, const Tensor& eps_hat, int t, int t_next,
                          const NoiseSchedule& s) {
    check_t(t, s, "deterministic_step");
    if (t_next < 0 || t_next >= t)
        throw std::invalid_argument("deterministic_step: need 0 <= t_next < t");
    Tensor x0t = predict_x0(x_t, eps_hat, t, s);
    if (t_next == 0) return x0t;
    const double a = std::sqrt(s.alpha_bar[t_next]);
    const double b = std::sqrt(1.0 - s.alpha_bar[t_next]);
    Tensor out(x_t.shape());
    for (int64_t i = 0; i < x_t.numel(); ++i) out[i] = a * x0t[i] + b * eps_hat[i];
    return out;
}

Tensor reverse_step(const DenoiseFn& denoise, const Tensor& x_t, const Tensor& cond, int t,
                    int t_next, ReverseMode mode, RngStream& rng, const NoiseSchedule& s) {
    check_t(t, s, "reverse_step");
    if (t_next < 0 || t_next >= t)
        throw std::invalid_argument("reverse_step: need 0 <= t_next < t");
    Tensor eps_hat = denoise(x_t, cond, t);
    require_same_shape(x_t, eps_hat, "reverse_step: denoiser output");
    if (mode == ReverseMode::deterministic)
        return deterministic_step(x_t, eps_hat, t, t_next, s);

    if (t_next != t - 1)
        throw std::invalid_argument("reverse_step: ancestral mode requires t_next == t-1");
    Tensor out = ancestral_mean(x_t, eps_hat, t, s);
    if (t_next > 0) {
        const double sig = s.sigma[t];
        for (int64_t i = 0; i < out.numel(); ++i) out[i] += sig * rng.normal();
    }
    return out;
}

double diffusion_loss(const DenoiseFn& denoise, const ConditionedBatch& batch,
                      const NoiseSchedule& s) {
    require_same_shape(batch.x0, batch.eps, "diffusion_loss");
    require_same_shape(batch.x0, batch.cond, "diffusion_loss");
    const int n = batch.x0.dim(0);
    if (static_cast<int>(batch.t.size()) != n)
        throw std::invalid_argument("diffusion_loss: t count != batch size");

    const int64_t per = batch.x0.numel() / n;
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        check_t(batch.t[static_cast<size_t>(i)], s, "diffusion_loss");
        // slice sample i
        std::vector<int> shape(batch.x0.shape().begin() + 1, batch.x0.shape().end());
        Tensor x0(shape), eps(shape), cond(shape);
        for (int64_t j = 0; j < per; ++j) {
            x0[j] = batch.x0[i * per + j];
            eps[j] = batch.eps[i * per + j];
            cond[j] = batch.cond[i * per + j];
        }
        Tensor x_t = forward_sample(x0, batch.t[static_cast<size_t>(i)], eps, s);
        Tensor eps_hat = denoise(x_t, cond, batch.t[static_cast<size_t>(i)]);
        require_same_shape(eps, eps_hat, "diffusion_loss: denoiser output");
        double sq = 0.0;
        for (int64_t j = 0; j < per; ++j) {
            const double d = eps[j] - eps_hat[j];
            sq += d * d;
        }
        total += sq;
    }
    return total / n;
}

} // namespace drdc
