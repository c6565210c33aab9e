#pragma once

#include "vizsteg/tensor.hpp"

namespace vizsteg {

// Single-level orthonormal Haar transform. A (C,H,W) tensor becomes
// (4C,H/2,W/2); sub-bands are grouped band-major: channels [0,C) hold LL,
// then HL, LH, HH. Being orthonormal, the adjoint equals the inverse, so
// dwt/iwt double as each other's backward passes.
template <class S>
Tensor<S> dwt(const Tensor<S>& x) {
    if (x.h % 2 != 0 || x.w % 2 != 0) throw ShapeError("dwt: dimensions must be even");
    const int hh = x.h / 2, ww = x.w / 2;
    Tensor<S> out(4 * x.c, hh, ww);
    const S half = S(0.5);
    for (int ci = 0; ci < x.c; ++ci)
        for (int y = 0; y < hh; ++y)
            for (int xx = 0; xx < ww; ++xx) {
                const S a = x.at(ci, 2 * y, 2 * xx);
                const S b = x.at(ci, 2 * y, 2 * xx + 1);
                const S c = x.at(ci, 2 * y + 1, 2 * xx);
                const S d = x.at(ci, 2 * y + 1, 2 * xx + 1);
                out.at(ci, y, xx) = half * (a + b + c + d);              // LL
                out.at(x.c + ci, y, xx) = half * (b - a + d - c);        // HL
                out.at(2 * x.c + ci, y, xx) = half * (c + d - a - b);    // LH
                out.at(3 * x.c + ci, y, xx) = half * (a - b - c + d);    // HH
            }
    return out;
}

template <class S>
Tensor<S> iwt(const Tensor<S>& x) {
    if (x.c % 4 != 0) throw ShapeError("iwt: channel count must be a multiple of 4");
    const int cc = x.c / 4;
    Tensor<S> out(cc, 2 * x.h, 2 * x.w);
    const S half = S(0.5);
    for (int ci = 0; ci < cc; ++ci)
        for (int y = 0; y < x.h; ++y)
            for (int xx = 0; xx < x.w; ++xx) {
                const S ll = x.at(ci, y, xx);
                const S hl = x.at(cc + ci, y, xx);
                const S lh = x.at(2 * cc + ci, y, xx);
                const S hh = x.at(3 * cc + ci, y, xx);
                out.at(ci, 2 * y, 2 * xx) = half * (ll - hl - lh + hh);
                out.at(ci, 2 * y, 2 * xx + 1) = half * (ll + hl - lh - hh);
                out.at(ci, 2 * y + 1, 2 * xx) = half * (ll - hl + lh - hh);
                out.at(ci, 2 * y + 1, 2 * xx + 1) = half * (ll + hl + lh + hh);
            }
    return out;
}

// 2x2 space-to-depth: channel c, pixel (2r+dr, 2c+dc) lands in output channel
// c*4 + dr*2 + dc at (r, c). Exact inverse pair, fixed ordering so that
// checkpoints stay portable.
template <class S>
Tensor<S> space_to_depth(const Tensor<S>& x) {
    if (x.h % 2 != 0 || x.w % 2 != 0) throw ShapeError("space_to_depth: dimensions must be even");
    const int hh = x.h / 2, ww = x.w / 2;
    Tensor<S> out(4 * x.c, hh, ww);
    for (int ci = 0; ci < x.c; ++ci)
        for (int dr = 0; dr < 2; ++dr)
            for (int dc = 0; dc < 2; ++dc) {
                const int oc = ci * 4 + dr * 2 + dc;
                for (int y = 0; y < hh; ++y)
                    for (int xx = 0; xx < ww; ++xx)
                        out.at(oc, y, xx) = x.at(ci, 2 * y + dr, 2 * xx + dc);
            }
    return out;
}

template <class S>
Tensor<S> depth_to_space(const Tensor<S>& x) {
    if (x.c % 4 != 0) throw ShapeError("depth_to_space: channel count must be a multiple of 4");
    const int cc = x.c / 4;
    Tensor<S> out(cc, 2 * x.h, 2 * x.w);
    for (int ci = 0; ci < cc; ++ci)
        for (int dr = 0; dr < 2; ++dr)
            for (int dc = 0; dc < 2; ++dc) {
                const int ic = ci * 4 + dr * 2 + dc;
                for (int y = 0; y < x.h; ++y)
                    for (int xx = 0; xx < x.w; ++xx)
                        out.at(ci, 2 * y + dr, 2 * xx + dc) = x.at(ic, y, xx);
            }
    return out;
}

}  // namespace vizsteg
