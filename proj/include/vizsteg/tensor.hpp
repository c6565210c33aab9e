#pragma once

#include <Eigen/Dense>

#include "vizsteg/common.hpp"

namespace vizsteg {

// Planar image/feature tensor: `m` has one row per channel, each row holding
// an h*w row-major raster. All network math runs on these.
template <class S>
struct Tensor {
    using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

    int c = 0, h = 0, w = 0;
    Mat m;

    Tensor() = default;
    Tensor(int c_, int h_, int w_) : c(c_), h(h_), w(w_), m(Mat::Zero(c_, h_ * w_)) {}

    static Tensor zeros(int c_, int h_, int w_) { return Tensor(c_, h_, w_); }

    S& at(int ci, int y, int x) { return m(ci, y * w + x); }
    S at(int ci, int y, int x) const { return m(ci, y * w + x); }

    Eigen::Index pixels() const { return static_cast<Eigen::Index>(h) * w; }

    bool same_shape(const Tensor& o) const { return c == o.c && h == o.h && w == o.w; }
};

template <class S>
Tensor<S> concat_channels(const Tensor<S>& a, const Tensor<S>& b) {
    if (a.h != b.h || a.w != b.w) throw ShapeError("concat_channels: spatial dims differ");
    Tensor<S> out(a.c + b.c, a.h, a.w);
    out.m.topRows(a.c) = a.m;
    out.m.bottomRows(b.c) = b.m;
    return out;
}

template <class S>
Tensor<S> slice_channels(const Tensor<S>& t, int from, int count) {
    if (from < 0 || count < 0 || from + count > t.c) throw ShapeError("slice_channels: out of range");
    Tensor<S> out(count, t.h, t.w);
    out.m = t.m.middleRows(from, count);
    return out;
}

template <class S>
Tensor<S> to_scalar(const Tensor<float>& t) {
    Tensor<S> out(t.c, t.h, t.w);
    out.m = t.m.template cast<S>();
    return out;
}

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

}  // namespace vizsteg
