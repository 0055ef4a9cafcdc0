#pragma once

#include "drdc/tensor.hpp"

namespace drdc::kernels {

// Dense numeric kernels behind the models and the fusion stage. The tuned
// versions parallelize with OpenMP over disjoint output slices, so results
// are bit-identical for any thread count (each output element is reduced
// in a fixed serial order by exactly one thread).
//
// kernels::ref holds naive serial implementations of the same contracts.
// Tests compare the two; tools/drdc_bench times them.

/// 2-D convolution, NCHW layout. in: [N,Ci,H,W], w: [Co,Ci,kh,kw], bias: [Co]
/// (empty tensor = no bias). Zero padding `pad`, square stride.
Tensor conv2d_forward(const Tensor& in, const Tensor& w, const Tensor& bias,
                      int stride, int pad);

/// Gradient of conv2d w.r.t. its input. gout: [N,Co,Ho,Wo] -> [N,Ci,H,W].
Tensor conv2d_grad_input(const Tensor& gout, const Tensor& w, int stride, int pad,
                         int in_h, int in_w);

/// Gradients w.r.t. weights and bias. Accumulates over batch and positions.
void conv2d_grad_weights(const Tensor& gout, const Tensor& in, int stride, int pad,
                         int kh, int kw, Tensor& gw, Tensor& gbias);

/// C = op(A) * op(B); trans flags select [m,k]x[k,n] views. TT unsupported.
Tensor matmul(const Tensor& a, const Tensor& b, bool trans_a, bool trans_b);

/// Bilinear resize of a CHW tensor (half-pixel centers). Identity when the
/// target size equals the source size.
Tensor resize_bilinear(const Tensor& in, int out_h, int out_w);

/// Area-average downsampling of a CHW tensor by an integer factor.
Tensor downsample_area(const Tensor& in, int factor);

/// Nearest-neighbor 2x upsampling of an NCHW tensor.
Tensor upsample_nearest2x(const Tensor& in);

/// Backward of upsample_nearest2x: sums gradients over each 2x2 block.
Tensor upsample_nearest2x_backward(const Tensor& gout);

/// m x m mean filter over an HW map, symmetric (edge-reflecting) padding.
Tensor box_mean(const Tensor& in, int m);

/// Stride-1 p x p average pooling with symmetric padding; output same size.
/// For even p the padding splits as (p-1)/2 left, p/2 right.
Tensor avg_pool_same(const Tensor& in, int p);

namespace ref {

Tensor conv2d_forward(const Tensor& in, const Tensor& w, const Tensor& bias,
                      int stride, int pad);
Tensor conv2d_grad_input(const Tensor& gout, const Tensor& w, int stride, int pad,
                         int in_h, int in_w);
void conv2d_grad_weights(const Tensor& gout, const Tensor& in, int stride, int pad,
                         int kh, int kw, Tensor& gw, Tensor& gbias);
Tensor matmul(const Tensor& a, const Tensor& b, bool trans_a, bool trans_b);
Tensor resize_bilinear(const Tensor& in, int out_h, int out_w);
Tensor downsample_area(const Tensor& in, int factor);
Tensor box_mean(const Tensor& in, int m);
Tensor avg_pool_same(const Tensor& in, int p);

} // namespace ref

/// Symmetric (reflect-with-edge) index mapping for padding, valid for
/// |i| <= 2n. Used by box_mean / avg_pool_same in both implementations.
inline int reflect_index(int i, int n) {
    while (i < 0 || i >= n) {
        if (i < 0) i = -1 - i;
        if (i >= n) i = 2 * n - 1 - i;
    }
    return i;
}

} // namespace drdc::kernels
