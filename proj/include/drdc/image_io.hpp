#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "drdc/tensor.hpp"

namespace drdc {

/// 8-bit interleaved RGB image buffer (what goes to and from PNG files).
struct ImageU8 {
    int height = 0;
    int width = 0;
    int channels = 0; // 1 or 3
    std::vector<uint8_t> pixels; // row-major, interleaved

    size_t idx(int y, int x, int c) const {
        return (static_cast<size_t>(y) * width + x) * channels + c;
    }
};

ImageU8 read_png(const std::string& path);
void write_png(const std::string& path, const ImageU8& img);

/// [0,1] CHW tensor -> 8-bit (values clamped, rounded to nearest).
ImageU8 to_u8(const Tensor& chw);

/// 8-bit -> [0,1] CHW tensor; grayscale inputs are replicated to 3 channels
/// when want_channels == 3.
Tensor to_tensor(const ImageU8& img, int want_channels);

/// Binary HW mask -> 0/255 grayscale image and back (threshold at 127.5).
ImageU8 mask_to_u8(const Tensor& hw);
Tensor mask_from_u8(const ImageU8& img);

} // namespace drdc
