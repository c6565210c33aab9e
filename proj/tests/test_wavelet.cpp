#include <doctest.h>

#include "vizsteg/common.hpp"
#include "vizsteg/wavelet.hpp"

using namespace vizsteg;

namespace {

template <class S>
Tensor<S> random_tensor(Rng& rng, int c, int h, int w) {
    Tensor<S> t(c, h, w);
    for (Eigen::Index i = 0; i < t.m.size(); ++i) t.m.data()[i] = static_cast<S>(rng.uniform());
    return t;
}

}  // namespace

TEST_CASE("dwt shape contract: (3,512,512) -> (12,256,256)") {
    TensorF x(3, 512, 512);
    TensorF y = dwt(x);
    CHECK(y.c == 12);
    CHECK(y.h == 256);
    CHECK(y.w == 256);
    CHECK_THROWS_AS(dwt(TensorF(3, 511, 512)), ShapeError);
}

TEST_CASE("constant images have exactly zero high-frequency sub-bands") {
    TensorF x(2, 16, 16);
    x.m.row(0).setConstant(0.37f);
    x.m.row(1).setConstant(0.91f);
    TensorF y = dwt(x);
    // channels [C,4C) are HL/LH/HH
    CHECK(y.m.bottomRows(6).cwiseAbs().maxCoeff() == 0.0f);
    // LL of a constant c is 2c under the orthonormal normalization
    CHECK(y.at(0, 3, 3) == doctest::Approx(0.74f));
}

TEST_CASE("iwt(dwt(x)) reconstructs within 1e-6 in float, 1e-12 in double") {
    Rng rng(21);
    auto xf = random_tensor<float>(rng, 3, 64, 64);
    CHECK((iwt(dwt(xf)).m - xf.m).cwiseAbs().maxCoeff() <= 1e-6f);
    auto xd = random_tensor<double>(rng, 5, 32, 48);
    CHECK((iwt(dwt(xd)).m - xd.m).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("orthonormality: the adjoint equals the inverse") {
    // <dwt(x), y> == <x, iwt(y)> makes iwt the exact backward pass of dwt.
    Rng rng(22);
    auto x = random_tensor<double>(rng, 2, 16, 16);
    auto y = random_tensor<double>(rng, 8, 8, 8);
    const double lhs = dwt(x).m.cwiseProduct(y.m).sum();
    const double rhs = x.m.cwiseProduct(iwt(y).m).sum();
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("space_to_depth: (4,512,512) -> (16,256,256), exact inverse, pinned order") {
    TensorF x(4, 512, 512);
    TensorF y = space_to_depth(x);
    CHECK(y.c == 16);
    CHECK(y.h == 256);
    CHECK(y.w == 256);

    Rng rng(23);
    auto t = random_tensor<float>(rng, 4, 32, 32);
    TensorF s = space_to_depth(t);
    TensorF back = depth_to_space(s);
    CHECK((back.m - t.m).cwiseAbs().maxCoeff() == 0.0f);

    // pixel (c, 2r+dr, 2c+dc) lands in channel c*4 + dr*2 + dc at (r, c)
    for (int ci = 0; ci < 4; ++ci)
        for (int dr = 0; dr < 2; ++dr)
            for (int dc = 0; dc < 2; ++dc)
                CHECK(s.at(ci * 4 + dr * 2 + dc, 3, 5) == t.at(ci, 6 + dr, 10 + dc));
}
