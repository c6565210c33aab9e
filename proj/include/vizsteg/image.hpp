#pragma once

#include <string>
#include <vector>

#include "vizsteg/tensor.hpp"

namespace vizsteg {

// Interleaved 8-bit image, c in {1, 3}.
struct ImageU8 {
    int c = 0, h = 0, w = 0;
    std::vector<uint8_t> pix;  // h * w * c, row-major, channel-interleaved

    ImageU8() = default;
    ImageU8(int c_, int h_, int w_) : c(c_), h(h_), w(w_), pix(static_cast<size_t>(c_) * h_ * w_, 0) {}

    uint8_t& at(int y, int x, int ch) { return pix[(static_cast<size_t>(y) * w + x) * c + ch]; }
    uint8_t at(int y, int x, int ch) const { return pix[(static_cast<size_t>(y) * w + x) * c + ch]; }
};

// PNG I/O. Reading expands palette/16-bit/interlaced files to 8-bit and
// composites alpha over white (chart backgrounds are white in practice).
ImageU8 load_png(const std::string& path);
void save_png(const std::string& path, const ImageU8& img);

// [0,255] u8 <-> [0,1] planar float.
TensorF to_float(const ImageU8& img);
ImageU8 to_u8(const TensorF& t);

// Round every value onto the 8-bit grid k/255 after clamping to [0,1].
template <class S>
void quantize_8bit(Tensor<S>& t) {
    t.m = t.m.unaryExpr([](S v) {
        S c = v < S(0) ? S(0) : (v > S(1) ? S(1) : v);
        return std::round(c * S(255)) / S(255);
    });
}

}  // namespace vizsteg
