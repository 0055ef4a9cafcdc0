// Timing comparison between the OpenMP kernels and their serial references.
// Prints one row per kernel: serial ms, parallel ms, speedup, max |diff|.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>

#include "drdc/kernels.hpp"
#include "drdc/rng.hpp"

using namespace drdc;
namespace k = drdc::kernels;

namespace {

double max_abs_diff(const Tensor& a, const Tensor& b) {
    double m = 0.0;
    for (int64_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

template <typename F>
double time_ms(F&& f, int reps) {
    f(); // warm up
    auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < reps; ++i) f();
    auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

void row(const char* name, double serial_ms, double par_ms, double diff) {
    std::printf("%-28s %10.3f %10.3f %8.2fx %12.3e\n", name, serial_ms, par_ms,
                serial_ms / par_ms, diff);
}

} // namespace

int main() {
    RngStream rng(123);

    std::printf("%-28s %10s %10s %9s %12s\n", "kernel", "serial ms", "omp ms", "speedup",
                "max|diff|");

    {
        Tensor in = rng.normal_tensor({4, 32, 64, 64});
        Tensor w = rng.normal_tensor({32, 32, 3, 3});
        Tensor b = rng.normal_tensor({32});
        Tensor ref_out, par_out;
        double ts = time_ms([&] { ref_out = k::ref::conv2d_forward(in, w, b, 1, 1); }, 3);
        double tp = time_ms([&] { par_out = k::conv2d_forward(in, w, b, 1, 1); }, 3);
        row("conv2d_fwd 4x32x64x64", ts, tp, max_abs_diff(ref_out, par_out));

        Tensor gout = rng.normal_tensor({4, 32, 64, 64});
        Tensor gi_r, gi_p;
        ts = time_ms([&] { gi_r = k::ref::conv2d_grad_input(gout, w, 1, 1, 64, 64); }, 3);
        tp = time_ms([&] { gi_p = k::conv2d_grad_input(gout, w, 1, 1, 64, 64); }, 3);
        row("conv2d_grad_input", ts, tp, max_abs_diff(gi_r, gi_p));

        Tensor gw_r, gb_r, gw_p, gb_p;
        ts = time_ms([&] { k::ref::conv2d_grad_weights(gout, in, 1, 1, 3, 3, gw_r, gb_r); }, 3);
        tp = time_ms([&] { k::conv2d_grad_weights(gout, in, 1, 1, 3, 3, gw_p, gb_p); }, 3);
        row("conv2d_grad_weights", ts, tp, max_abs_diff(gw_r, gw_p));
    }

    {
        Tensor a = rng.normal_tensor({512, 512});
        Tensor b = rng.normal_tensor({512, 512});
        Tensor cr, cp;
        double ts = time_ms([&] { cr = k::ref::matmul(a, b, false, false); }, 3);
        double tp = time_ms([&] { cp = k::matmul(a, b, false, false); }, 3);
        row("matmul 512x512", ts, tp, max_abs_diff(cr, cp));
    }

    {
        Tensor img = rng.normal_tensor({3, 224, 224});
        Tensor rr, rp;
        double ts = time_ms([&] { rr = k::ref::resize_bilinear(img, 64, 64); }, 20);
        double tp = time_ms([&] { rp = k::resize_bilinear(img, 64, 64); }, 20);
        row("resize_bilinear 224->64", ts, tp, max_abs_diff(rr, rp));
    }

    {
        Tensor map = rng.normal_tensor({224, 224});
        Tensor mr, mp;
        double ts = time_ms([&] { mr = k::ref::box_mean(map, 41); }, 5);
        double tp = time_ms([&] { mp = k::box_mean(map, 41); }, 5);
        row("box_mean 224 m=41", ts, tp, max_abs_diff(mr, mp));
    }

    return 0;
}
