#pragma once

#include <array>

#include "vizsteg/tensor.hpp"
#include "vizsteg/wavelet.hpp"

namespace vizsteg {

template <class S>
S mse(const Tensor<S>& a, const Tensor<S>& b) {
    if (!a.same_shape(b)) throw ShapeError("mse: shape mismatch");
    return (a.m - b.m).squaredNorm() / static_cast<S>(a.m.size());
}

template <class S>
S l1(const Tensor<S>& a, const Tensor<S>& b) {
    if (!a.same_shape(b)) throw ShapeError("l1: shape mismatch");
    return (a.m - b.m).cwiseAbs().sum() / static_cast<S>(a.m.size());
}

// MSE over the LL sub-bands of the orthonormal Haar decomposition.
template <class S>
S freq_loss(const Tensor<S>& a, const Tensor<S>& b) {
    Tensor<S> wa = dwt(a), wb = dwt(b);
    const auto da = (wa.m.topRows(a.c) - wb.m.topRows(b.c)).eval();
    return da.squaredNorm() / static_cast<S>(da.size());
}

template <class S>
S loss_enc(const Tensor<S>& carrier, const Tensor<S>& encoded, S alpha) {
    return mse(carrier, encoded) + alpha * freq_loss(carrier, encoded);
}

// Sum of per-channel (L1 + MSE) over populated secret channels.
template <class S>
S loss_res(const Tensor<S>& secrets, const Tensor<S>& restored, const std::array<bool, 4>& mask) {
    if (!secrets.same_shape(restored)) throw ShapeError("loss_res: shape mismatch");
    S total = 0;
    const S n = static_cast<S>(secrets.pixels());
    for (int i = 0; i < secrets.c && i < 4; ++i) {
        if (!mask[i]) continue;
        const auto diff = (restored.m.row(i) - secrets.m.row(i)).eval();
        total += diff.cwiseAbs().sum() / n + diff.squaredNorm() / n;
    }
    return total;
}

template <class S>
S loss_total(const Tensor<S>& carrier, const Tensor<S>& encoded, const Tensor<S>& secrets,
             const Tensor<S>& restored, const std::array<bool, 4>& mask, S alpha, S beta) {
    return loss_enc(carrier, encoded, alpha) + beta * loss_res(secrets, restored, mask);
}

}  // namespace vizsteg
