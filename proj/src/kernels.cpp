#include "drdc/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <omp.h>

namespace drdc::kernels {

namespace {

void check_conv_args(const Tensor& in, const Tensor& w, const Tensor& bias) {
    if (in.ndim() != 4 || w.ndim() != 4)
        throw std::invalid_argument("conv2d: expected 4-D input and weights");
    if (in.dim(1) != w.dim(1))
        throw std::invalid_argument("conv2d: channel mismatch");
    if (!bias.empty() && (bias.ndim() != 1 || bias.dim(0) != w.dim(0)))
        throw std::invalid_argument("conv2d: bad bias shape");
}

inline int conv_out_size(int in, int k, int stride, int pad) {
    return (in + 2 * pad - k) / stride + 1;
}

} // namespace

namespace {

// Fused 3x3 stride-1 pad-1 path: one pass per (ic, output row) with all nine
// taps, instead of nine strided passes. Boundary columns handled scalar.
void conv3x3_s1_rows(const double* iplane, int H, int W, const double* wk,
                     double* orow, int oh) {
    const double* r0 = oh - 1 >= 0 ? iplane + static_cast<size_t>(oh - 1) * W : nullptr;
    const double* r1 = iplane + static_cast<size_t>(oh) * W;
    const double* r2 = oh + 1 < H ? iplane + static_cast<size_t>(oh + 1) * W : nullptr;
    const double w00 = wk[0], w01 = wk[1], w02 = wk[2];
    const double w10 = wk[3], w11 = wk[4], w12 = wk[5];
    const double w20 = wk[6], w21 = wk[7], w22 = wk[8];

    auto tap = [&](const double* r, double a, double b, double c, int x) {
        double acc = b * r[x];
        if (x - 1 >= 0) acc += a * r[x - 1];
        if (x + 1 < W) acc += c * r[x + 1];
        return acc;
    };
    auto edge = [&](int x) {
        double acc = tap(r1, w10, w11, w12, x);
        if (r0) acc += tap(r0, w00, w01, w02, x);
        if (r2) acc += tap(r2, w20, w21, w22, x);
        orow[x] += acc;
    };
    edge(0);
    if (W > 1) edge(W - 1);
    // vector core
    if (r0 && r2) {
        for (int x = 1; x < W - 1; ++x)
            orow[x] += w00 * r0[x - 1] + w01 * r0[x] + w02 * r0[x + 1] +
                       w10 * r1[x - 1] + w11 * r1[x] + w12 * r1[x + 1] +
                       w20 * r2[x - 1] + w21 * r2[x] + w22 * r2[x + 1];
    } else if (r0) {
        for (int x = 1; x < W - 1; ++x)
            orow[x] += w00 * r0[x - 1] + w01 * r0[x] + w02 * r0[x + 1] +
                       w10 * r1[x - 1] + w11 * r1[x] + w12 * r1[x + 1];
    } else if (r2) {
        for (int x = 1; x < W - 1; ++x)
            orow[x] += w10 * r1[x - 1] + w11 * r1[x] + w12 * r1[x + 1] +
                       w20 * r2[x - 1] + w21 * r2[x] + w22 * r2[x + 1];
    } else {
        for (int x = 1; x < W - 1; ++x)
            orow[x] += w10 * r1[x - 1] + w11 * r1[x] + w12 * r1[x + 1];
    }
}

} // namespace

Tensor conv2d_forward(const Tensor& in, const Tensor& w, const Tensor& bias,
                      int stride, int pad) {
    check_conv_args(in, w, bias);
    const int N = in.dim(0), Ci = in.dim(1), H = in.dim(2), W = in.dim(3);
    const int Co = w.dim(0), kh = w.dim(2), kw = w.dim(3);
    const int Ho = conv_out_size(H, kh, stride, pad);
    const int Wo = conv_out_size(W, kw, stride, pad);
    Tensor out({N, Co, Ho, Wo});

    const double* ip = in.data();
    const double* wp = w.data();
    double* op = out.data();
    const bool fast3x3 = (stride == 1 && pad == 1 && kh == 3 && kw == 3 && Ho == H && Wo == W);

#pragma omp parallel for schedule(static) collapse(2) if (!omp_in_parallel())
    for (int n = 0; n < N; ++n) {
        for (int oc = 0; oc < Co; ++oc) {
            const double b = bias.empty() ? 0.0 : bias[oc];
            double* oplane = op + (static_cast<size_t>(n) * Co + oc) * Ho * Wo;
            for (int64_t i = 0; i < static_cast<int64_t>(Ho) * Wo; ++i) oplane[i] = b;
            if (fast3x3) {
                for (int ic = 0; ic < Ci; ++ic) {
                    const double* iplane = ip + (static_cast<size_t>(n) * Ci + ic) * H * W;
                    const double* wk = wp + (static_cast<size_t>(oc) * Ci + ic) * 9;
                    for (int oh = 0; oh < Ho; ++oh)
                        conv3x3_s1_rows(iplane, H, W, wk, oplane + static_cast<size_t>(oh) * Wo, oh);
                }
                continue;
            }
            for (int oh = 0; oh < Ho; ++oh) {
                double* orow = oplane + static_cast<size_t>(oh) * Wo;
                for (int ic = 0; ic < Ci; ++ic) {
                    for (int ky = 0; ky < kh; ++ky) {
                        const int ih = oh * stride + ky - pad;
                        if (ih < 0 || ih >= H) continue;
                        const double* irow =
                            ip + ((static_cast<size_t>(n) * Ci + ic) * H + ih) * W;
                        const double* wrow =
                            wp + ((static_cast<size_t>(oc) * Ci + ic) * kh + ky) * kw;
                        for (int kx = 0; kx < kw; ++kx) {
                            const double wv = wrow[kx];
                            const int iw0 = kx - pad;
                            // ow range keeping iw = ow*stride + iw0 inside [0, W)
                            int lo = iw0 < 0 ? (-iw0 + stride - 1) / stride : 0;
                            int hi = std::min(Wo, (W - iw0 + stride - 1) / stride);
                            if (stride == 1) {
                                const double* src = irow + iw0 + lo;
                                double* dst = orow + lo;
                                const int len = hi - lo;
                                for (int i = 0; i < len; ++i) dst[i] += wv * src[i];
                            } else {
                                for (int ow = lo; ow < hi; ++ow)
                                    orow[ow] += wv * irow[ow * stride + iw0];
                            }
                        }
                    }
                }
            }
        }
    }
    return out;
}

Tensor conv2d_grad_input(const Tensor& gout, const Tensor& w, int stride, int pad,
                         int in_h, int in_w) {
    const int N = gout.dim(0), Co = gout.dim(1), Ho = gout.dim(2), Wo = gout.dim(3);
    const int Ci = w.dim(1), kh = w.dim(2), kw = w.dim(3);
    Tensor gin({N, Ci, in_h, in_w});
    const double* gp = gout.data();
    const double* wp = w.data();
    double* xp = gin.data();
    const bool fast3x3 = (stride == 1 && pad == 1 && kh == 3 && kw == 3 &&
                          Ho == in_h && Wo == in_w);

#pragma omp parallel for schedule(static) collapse(2) if (!omp_in_parallel())
    for (int n = 0; n < N; ++n) {
        for (int ic = 0; ic < Ci; ++ic) {
            double* plane = xp + (static_cast<size_t>(n) * Ci + ic) * in_h * in_w;
            if (fast3x3) {
                // grad wrt input is a correlation of gout with the flipped
                // kernel; reuse the fused row pass with reversed taps.
                for (int oc = 0; oc < Co; ++oc) {
                    const double* gplane = gp + (static_cast<size_t>(n) * Co + oc) * Ho * Wo;
                    const double* wk = wp + (static_cast<size_t>(oc) * Ci + ic) * 9;
                    const double wf[9] = {wk[8], wk[7], wk[6], wk[5], wk[4],
                                          wk[3], wk[2], wk[1], wk[0]};
                    for (int ih = 0; ih < in_h; ++ih)
                        conv3x3_s1_rows(gplane, Ho, Wo, wf,
                                        plane + static_cast<size_t>(ih) * in_w, ih);
                }
                continue;
            }
            for (int oc = 0; oc < Co; ++oc) {
                for (int ky = 0; ky < kh; ++ky) {
                    const double* wrow =
                        wp + ((static_cast<size_t>(oc) * Ci + ic) * kh + ky) * kw;
                    for (int oh = 0; oh < Ho; ++oh) {
                        const int ih = oh * stride + ky - pad;
                        if (ih < 0 || ih >= in_h) continue;
                        const double* grow =
                            gp + ((static_cast<size_t>(n) * Co + oc) * Ho + oh) * Wo;
                        double* irow = plane + static_cast<size_t>(ih) * in_w;
                        for (int kx = 0; kx < kw; ++kx) {
                            const double wv = wrow[kx];
                            const int iw0 = kx - pad;
                            int lo = iw0 < 0 ? (-iw0 + stride - 1) / stride : 0;
                            int hi = std::min(Wo, (in_w - iw0 + stride - 1) / stride);
                            if (stride == 1) {
                                double* dst = irow + iw0 + lo;
                                const double* src = grow + lo;
                                const int len = hi - lo;
                                for (int i = 0; i < len; ++i) dst[i] += wv * src[i];
                            } else {
                                for (int ow = lo; ow < hi; ++ow)
                                    irow[ow * stride + iw0] += wv * grow[ow];
                            }
                        }
                    }
                }
            }
        }
    }
    return gin;
}

void conv2d_grad_weights(const Tensor& gout, const Tensor& in, int stride, int pad,
                         int kh, int kw, Tensor& gw, Tensor& gbias) {
    const int N = gout.dim(0), Co = gout.dim(1), Ho = gout.dim(2), Wo = gout.dim(3);
    const int Ci = in.dim(1), H = in.dim(2), W = in.dim(3);
    gw = Tensor({Co, Ci, kh, kw});
    gbias = Tensor({Co});
    const double* gp = gout.data();
    const double* ip = in.data();
    double* gwp = gw.data();

#pragma omp parallel for schedule(static) collapse(2) if (!omp_in_parallel())
    for (int oc = 0; oc < Co; ++oc) {
        for (int ic = 0; ic < Ci; ++ic) {
            double* wslice = gwp + (static_cast<size_t>(oc) * Ci + ic) * kh * kw;
            for (int ky = 0; ky < kh; ++ky) {
                for (int kx = 0; kx < kw; ++kx) {
                    const int iw0 = kx - pad;
                    double acc = 0.0;
                    for (int n = 0; n < N; ++n) {
                        for (int oh = 0; oh < Ho; ++oh) {
                            const int ih = oh * stride + ky - pad;
                            if (ih < 0 || ih >= H) continue;
                            const double* grow =
                                gp + ((static_cast<size_t>(n) * Co + oc) * Ho + oh) * Wo;
                            const double* irow =
                                ip + ((static_cast<size_t>(n) * Ci + ic) * H + ih) * W;
                            int lo = iw0 < 0 ? (-iw0 + stride - 1) / stride : 0;
                            int hi = std::min(Wo, (W - iw0 + stride - 1) / stride);
                            if (stride == 1) {
                                const double* src = irow + iw0 + lo;
                                const double* g = grow + lo;
                                const int len = hi - lo;
                                // eight independent partial sums so the dot
                                // product vectorizes without -ffast-math
                                double p[8] = {0, 0, 0, 0, 0, 0, 0, 0};
                                int i = 0;
                                for (; i + 8 <= len; i += 8)
                                    for (int u = 0; u < 8; ++u) p[u] += g[i + u] * src[i + u];
                                for (; i < len; ++i) p[i & 7] += g[i] * src[i];
                                acc += ((p[0] + p[1]) + (p[2] + p[3])) +
                                       ((p[4] + p[5]) + (p[6] + p[7]));
                            } else {
                                for (int ow = lo; ow < hi; ++ow)
                                    acc += grow[ow] * irow[ow * stride + iw0];
                            }
                        }
                    }
                    wslice[static_cast<size_t>(ky) * kw + kx] = acc;
                }
            }
        }
    }

#pragma omp parallel for schedule(static) if (!omp_in_parallel())
    for (int oc = 0; oc < Co; ++oc) {
        double acc = 0.0;
        for (int n = 0; n < N; ++n) {
            const double* g = gp + (static_cast<size_t>(n) * Co + oc) * Ho * Wo;
            for (int i = 0; i < Ho * Wo; ++i) acc += g[i];
        }
        gbias[oc] = acc;
    }
}

Tensor matmul(const Tensor& a, const Tensor& b, bool trans_a, bool trans_b) {
    if (a.ndim() != 2 || b.ndim() != 2) throw std::invalid_argument("matmul: 2-D only");
    if (trans_a && trans_b) throw std::invalid_argument("matmul: TT unsupported");
    const int m = trans_a ? a.dim(1) : a.dim(0);
    const int k = trans_a ? a.dim(0) : a.dim(1);
    const int kb = trans_b ? b.dim(1) : b.dim(0);
    const int n = trans_b ? b.dim(0) : b.dim(1);
    if (k != kb) throw std::invalid_argument("matmul: inner dimension mismatch");
    Tensor c({m, n});
    const double* ap = a.data();
    const double* bp = b.data();
    double* cp = c.data();

    if (!trans_b) {
#pragma omp parallel for schedule(static) if (!omp_in_parallel())
        for (int i = 0; i < m; ++i) {
            double* crow = cp + static_cast<size_t>(i) * n;
            for (int l = 0; l < k; ++l) {
                const double av = trans_a ? ap[static_cast<size_t>(l) * m + i]
                                          : ap[static_cast<size_t>(i) * k + l];
                const double* brow = bp + static_cast<size_t>(l) * n;
                for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
            }
        }
    } else {
        // NT: dot products of contiguous rows, eight partial sums to let the
        // reduction vectorize
#pragma omp parallel for schedule(static) if (!omp_in_parallel())
        for (int i = 0; i < m; ++i) {
            const double* arow = ap + static_cast<size_t>(i) * k;
            double* crow = cp + static_cast<size_t>(i) * n;
            for (int j = 0; j < n; ++j) {
                const double* brow = bp + static_cast<size_t>(j) * k;
                double p[8] = {0, 0, 0, 0, 0, 0, 0, 0};
                int l = 0;
                for (; l + 8 <= k; l += 8)
                    for (int u = 0; u < 8; ++u) p[u] += arow[l + u] * brow[l + u];
                for (; l < k; ++l) p[l & 7] += arow[l] * brow[l];
                crow[j] = ((p[0] + p[1]) + (p[2] + p[3])) + ((p[4] + p[5]) + (p[6] + p[7]));
            }
        }
    }
    return c;
}

namespace {

struct LinearWeights {
    int i0, i1;
    double w0, w1;
};

std::vector<LinearWeights> bilinear_axis(int in, int out) {
    std::vector<LinearWeights> ws(static_cast<size_t>(out));
    const double scale = static_cast<double>(in) / out;
    for (int o = 0; o < out; ++o) {
        double src = (o + 0.5) * scale - 0.5;
        double f = std::floor(src);
        int i0 = static_cast<int>(f);
        double w1 = src - f;
        int i1 = i0 + 1;
        if (i0 < 0) { i0 = 0; i1 = 0; w1 = 0.0; }
        if (i1 >= in) { i1 = in - 1; if (i0 >= in) i0 = in - 1; }
        ws[static_cast<size_t>(o)] = {i0, i1, 1.0 - w1, w1};
    }
    return ws;
}

} // namespace

Tensor resize_bilinear(const Tensor& in, int out_h, int out_w) {
    if (in.ndim() != 3) throw std::invalid_argument("resize_bilinear: CHW expected");
    const int C = in.dim(0), H = in.dim(1), W = in.dim(2);
    if (out_h <= 0 || out_w <= 0) throw std::invalid_argument("resize_bilinear: bad size");
    Tensor out({C, out_h, out_w});
    const auto wy = bilinear_axis(H, out_h);
    const auto wx = bilinear_axis(W, out_w);

#pragma omp parallel for schedule(static) if (!omp_in_parallel())
    for (int c = 0; c < C; ++c) {
        for (int y = 0; y < out_h; ++y) {
            const auto& ay = wy[static_cast<size_t>(y)];
            for (int x = 0; x < out_w; ++x) {
                const auto& ax = wx[static_cast<size_t>(x)];
                const double v =
                    ay.w0 * (ax.w0 * in.at3(c, ay.i0, ax.i0) + ax.w1 * in.at3(c, ay.i0, ax.i1)) +
                    ay.w1 * (ax.w0 * in.at3(c, ay.i1, ax.i0) + ax.w1 * in.at3(c, ay.i1, ax.i1));
                out.at3(c, y, x) = v;
            }
        }
    }
    return out;
}

Tensor downsample_area(const Tensor& in, int factor) {
    if (in.ndim() != 3) throw std::invalid_argument("downsample_area: CHW expected");
    const int C = in.dim(0), H = in.dim(1), W = in.dim(2);
    if (factor < 1 || H % factor != 0 || W % factor != 0)
        throw std::invalid_argument("downsample_area: factor must divide H and W");
    if (factor == 1) return in;
    const int Ho = H / factor, Wo = W / factor;
    Tensor out({C, Ho, Wo});
    const double inv = 1.0 / (factor * factor);

#pragma omp parallel for schedule(static) if (!omp_in_parallel())
    for (int c = 0; c < C; ++c) {
        for (int y = 0; y < Ho; ++y) {
            for (int x = 0; x < Wo; ++x) {
                double acc = 0.0;
                for (int dy = 0; dy < factor; ++dy)
                    for (int dx = 0; dx < factor; ++dx)
                        acc += in.at3(c, y * factor + dy, x * factor + dx);
                out.at3(c, y, x) = acc * inv;
            }
        }
    }
    return out;
}

Tensor upsample_nearest2x(const Tensor& in) {
    if (in.ndim() != 4) throw std::invalid_argument("upsample_nearest2x: NCHW expected");
    const int N = in.dim(0), C = in.dim(1), H = in.dim(2), W = in.dim(3);
    Tensor out({N, C, 2 * H, 2 * W});
#pragma omp parallel for schedule(static) collapse(2) if (!omp_in_parallel())
    for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c)
            for (int y = 0; y < 2 * H; ++y)
                for (int x = 0; x < 2 * W; ++x)
                    out.at4(n, c, y, x) = in.at4(n, c, y / 2, x / 2);
    return out;
}

Tensor upsample_nearest2x_backward(const Tensor& gout) {
    if (gout.ndim() != 4) throw std::invalid_argument("upsample backward: NCHW expected");
    const int N = gout.dim(0), C = gout.dim(1), H = gout.dim(2) / 2, W = gout.dim(3) / 2;
    Tensor gin({N, C, H, W});
#pragma omp parallel for schedule(static) collapse(2) if (!omp_in_parallel())
    for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c)
            for (int y = 0; y < H; ++y)
                for (int x = 0; x < W; ++x)
                    gin.at4(n, c, y, x) = gout.at4(n, c, 2 * y, 2 * x) +
                                          gout.at4(n, c, 2 * y, 2 * x + 1) +
                                          gout.at4(n, c, 2 * y + 1, 2 * x) +
                                          gout.at4(n, c, 2 * y + 1, 2 * x + 1);
    return gin;
}

namespace {

// 1-D box mean along rows of an HW map with symmetric padding; pad_l + pad_r
// + 1 = window. Exact per-output sums (no running window).
Tensor box1d_rows(const Tensor& in, int pad_l, int pad_r) {
    const int H = in.dim(0), W = in.dim(1);
    const double inv = 1.0 / (pad_l + pad_r + 1);
    Tensor out({H, W});
#pragma omp parallel for schedule(static) if (!omp_in_parallel())
    for (int y = 0; y < H; ++y) {
        const double* row = in.data() + static_cast<size_t>(y) * W;
        double* orow = out.data() + static_cast<size_t>(y) * W;
        for (int x = 0; x < W; ++x) {
            double acc = 0.0;
            for (int d = -pad_l; d <= pad_r; ++d) acc += row[reflect_index(x + d, W)];
            orow[x] = acc * inv;
        }
    }
    return out;
}

Tensor transpose_hw(const Tensor& in) {
    const int H = in.dim(0), W = in.dim(1);
    Tensor out({W, H});
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) out.at2(x, y) = in.at2(y, x);
    return out;
}

Tensor box_separable(const Tensor& in, int pad_l, int pad_r) {
    Tensor t = box1d_rows(in, pad_l, pad_r);
    t = transpose_hw(t);
    t = box1d_rows(t, pad_l, pad_r);
    return transpose_hw(t);
}

} // namespace

Tensor box_mean(const Tensor& in, int m) {
    if (in.ndim() != 2) throw std::invalid_argument("box_mean: HW map expected");
    if (m < 1 || m % 2 == 0) throw std::invalid_argument("box_mean: m must be odd");
    if (m >= std::min(in.dim(0), in.dim(1)))
        throw std::invalid_argument("box_mean: m must be smaller than the map");
    if (m == 1) return in;
    return box_separable(in, (m - 1) / 2, (m - 1) / 2);
}

Tensor avg_pool_same(const Tensor& in, int p) {
    if (in.ndim() != 2) throw std::invalid_argument("avg_pool_same: HW map expected");
    if (p < 1 || p > std::min(in.dim(0), in.dim(1)))
        throw std::invalid_argument("avg_pool_same: window must fit in the map");
    if (p == 1) return in;
    return box_separable(in, (p - 1) / 2, p / 2);
}

// ---------------------------------------------------------------------------
// Serial reference implementations. Straight from the definitions; no
// parallelism, no loop restructuring.
// ---------------------------------------------------------------------------

namespace ref {

Tensor conv2d_forward(const Tensor& in, const Tensor& w, const Tensor& bias,
                      int stride, int pad) {
    check_conv_args(in, w, bias);
    const int N = in.dim(0), Ci = in.dim(1), H = in.dim(2), W = in.dim(3);
    const int Co = w.dim(0), kh = w.dim(2), kw = w.dim(3);
    const int Ho = conv_out_size(H, kh, stride, pad);
    const int Wo = conv_out_size(W, kw, stride, pad);
    Tensor out({N, Co, Ho, Wo});
    for (int n = 0; n < N; ++n)
        for (int oc = 0; oc < Co; ++oc)
            for (int oh = 0; oh < Ho; ++oh)
                for (int ow = 0; ow < Wo; ++ow) {
                    double acc = bias.empty() ? 0.0 : bias[oc];
                    for (int ic = 0; ic < Ci; ++ic)
                        for (int ky = 0; ky < kh; ++ky)
                            for (int kx = 0; kx < kw; ++kx) {
                                const int ih = oh * stride + ky - pad;
                                const int iw = ow * stride + kx - pad;
                                if (ih < 0 || ih >= H || iw < 0 || iw >= W) continue;
                                acc += w.at4(oc, ic, ky, kx) * in.at4(n, ic, ih, iw);
                            }
                    out.at4(n, oc, oh, ow) = acc;
                }
    return out;
}

Tensor conv2d_grad_input(const Tensor& gout, const Tensor& w, int stride, int pad,
                         int in_h, int in_w) {
    const int N = gout.dim(0), Co = gout.dim(1), Ho = gout.dim(2), Wo = gout.dim(3);
    const int Ci = w.dim(1), kh = w.dim(2), kw = w.dim(3);
    Tensor gin({N, Ci, in_h, in_w});
    for (int n = 0; n < N; ++n)
        for (int oc = 0; oc < Co; ++oc)
            for (int oh = 0; oh < Ho; ++oh)
                for (int ow = 0; ow < Wo; ++ow)
                    for (int ic = 0; ic < Ci; ++ic)
                        for (int ky = 0; ky < kh; ++ky)
                            for (int kx = 0; kx < kw; ++kx) {
                                const int ih = oh * stride + ky - pad;
                                const int iw = ow * stride + kx - pad;
                                if (ih < 0 || ih >= in_h || iw < 0 || iw >= in_w) continue;
                                gin.at4(n, ic, ih, iw) +=
                                    w.at4(oc, ic, ky, kx) * gout.at4(n, oc, oh, ow);
                            }
    return gin;
}

void conv2d_grad_weights(const Tensor& gout, const Tensor& in, int stride, int pad,
                         int kh, int kw, Tensor& gw, Tensor& gbias) {
    const int N = gout.dim(0), Co = gout.dim(1), Ho = gout.dim(2), Wo = gout.dim(3);
    const int Ci = in.dim(1), H = in.dim(2), W = in.dim(3);
    gw = Tensor({Co, Ci, kh, kw});
    gbias = Tensor({Co});
    for (int n = 0; n < N; ++n)
        for (int oc = 0; oc < Co; ++oc)
            for (int oh = 0; oh < Ho; ++oh)
                for (int ow = 0; ow < Wo; ++ow) {
                    const double g = gout.at4(n, oc, oh, ow);
                    gbias[oc] += g;
                    for (int ic = 0; ic < Ci; ++ic)
                        for (int ky = 0; ky < kh; ++ky)
                            for (int kx = 0; kx < kw; ++kx) {
                                const int ih = oh * stride + ky - pad;
                                const int iw = ow * stride + kx - pad;
                                if (ih < 0 || ih >= H || iw < 0 || iw >= W) continue;
                                gw.at4(oc, ic, ky, kx) += g * in.at4(n, ic, ih, iw);
                            }
                }
}

Tensor matmul(const Tensor& a, const Tensor& b, bool trans_a, bool trans_b) {
    if (trans_a && trans_b) throw std::invalid_argument("matmul: TT unsupported");
    const int m = trans_a ? a.dim(1) : a.dim(0);
    const int k = trans_a ? a.dim(0) : a.dim(1);
    const int n = trans_b ? b.dim(0) : b.dim(1);
    Tensor c({m, n});
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int l = 0; l < k; ++l) {
                const double av = trans_a ? a.at2(l, i) : a.at2(i, l);
                const double bv = trans_b ? b.at2(j, l) : b.at2(l, j);
                acc += av * bv;
            }
            c.at2(i, j) = acc;
        }
    return c;
}

Tensor resize_bilinear(const Tensor& in, int out_h, int out_w) {
    const int C = in.dim(0), H = in.dim(1), W = in.dim(2);
    Tensor out({C, out_h, out_w});
    for (int c = 0; c < C; ++c)
        for (int y = 0; y < out_h; ++y)
            for (int x = 0; x < out_w; ++x) {
                const double sy = (y + 0.5) * H / out_h - 0.5;
                const double sx = (x + 0.5) * W / out_w - 0.5;
                int y0 = static_cast<int>(std::floor(sy));
                int x0 = static_cast<int>(std::floor(sx));
                const double fy = sy - y0, fx = sx - x0;
                const int y1 = std::clamp(y0 + 1, 0, H - 1);
                const int x1 = std::clamp(x0 + 1, 0, W - 1);
                y0 = std::clamp(y0, 0, H - 1);
                x0 = std::clamp(x0, 0, W - 1);
                out.at3(c, y, x) = (1 - fy) * ((1 - fx) * in.at3(c, y0, x0) + fx * in.at3(c, y0, x1)) +
                                   fy * ((1 - fx) * in.at3(c, y1, x0) + fx * in.at3(c, y1, x1));
            }
    return out;
}

Tensor downsample_area(const Tensor& in, int factor) {
    const int C = in.dim(0), H = in.dim(1) / factor, W = in.dim(2) / factor;
    Tensor out({C, H, W});
    for (int c = 0; c < C; ++c)
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                double acc = 0.0;
                for (int dy = 0; dy < factor; ++dy)
                    for (int dx = 0; dx < factor; ++dx)
                        acc += in.at3(c, y * factor + dy, x * factor + dx);
                out.at3(c, y, x) = acc / (factor * factor);
            }
    return out;
}

namespace {
Tensor box2d_direct(const Tensor& in, int pad_l, int pad_r) {
    const int H = in.dim(0), W = in.dim(1);
    const int win = pad_l + pad_r + 1;
    Tensor out({H, W});
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            double acc = 0.0;
            for (int dy = -pad_l; dy <= pad_r; ++dy)
                for (int dx = -pad_l; dx <= pad_r; ++dx)
                    acc += in.at2(reflect_index(y + dy, H), reflect_index(x + dx, W));
            out.at2(y, x) = acc / (win * win);
        }
    return out;
}
} // namespace

Tensor box_mean(const Tensor& in, int m) {
    if (m == 1) return in;
    return box2d_direct(in, (m - 1) / 2, (m - 1) / 2);
}

Tensor avg_pool_same(const Tensor& in, int p) {
    if (p == 1) return in;
    return box2d_direct(in, (p - 1) / 2, p / 2);
}

} // namespace ref

} // namespace drdc::kernels
