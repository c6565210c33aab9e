#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "vizsteg/image.hpp"
#include "vizsteg/stegnet.hpp"
#include "vizsteg/synth.hpp"

using namespace vizsteg;
using namespace vizsteg::stegnet;

namespace {

template <class S>
Tensor<S> random_tensor(Rng& rng, int c, int h, int w, double scale = 1.0) {
    Tensor<S> t(c, h, w);
    for (Eigen::Index i = 0; i < t.m.size(); ++i)
        t.m.data()[i] = static_cast<S>(rng.uniform() * scale);
    return t;
}

template <class S>
void perturb(Model<S>& m, uint64_t seed, double scale) {
    Rng rng(seed);
    for (auto& p : m.params())
        for (Eigen::Index i = 0; i < p.value->size(); ++i)
            p.value->data()[i] += static_cast<S>(rng.normal() * scale);
}

NetConfig tiny_cfg(int n_acb = 4, int growth = 6, int ffb = 1) {
    NetConfig c;
    c.n_acb = n_acb;
    c.growth = growth;
    c.ffb_blocks = ffb;
    return c;
}

}  // namespace

TEST_CASE("conceal output matches carrier dimensions and is 8-bit quantized") {
    ModelF m;
    m.build(tiny_cfg());
    m.init_weights(1);
    Rng rng(50);
    TensorF carrier = random_tensor<float>(rng, 3, 64, 96);
    TensorF secrets = random_tensor<float>(rng, 4, 64, 96);
    auto res = conceal(m, carrier, secrets);
    CHECK(res.encoded.c == 3);
    CHECK(res.encoded.h == 64);
    CHECK(res.encoded.w == 96);
    CHECK(res.aux.c == 16);
    for (Eigen::Index i = 0; i < res.encoded.m.size(); ++i) {
        const float v = res.encoded.m.data()[i];
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
        CHECK(std::abs(v * 255.0f - std::round(v * 255.0f)) <= 1e-4f);
    }
    CHECK_THROWS_AS(conceal(m, TensorF(3, 63, 64), TensorF(4, 63, 64)), ShapeError);
    CHECK_THROWS_AS(conceal(m, carrier, TensorF(4, 32, 32)), ShapeError);
}

TEST_CASE("ISN chain is exactly invertible when the aux channels are fed back") {
    // Double precision, randomly perturbed weights (active couplings).
    Model<double> m;
    m.build(tiny_cfg(8, 6, 1));
    m.init_weights(2);
    perturb(m, 99, 0.05);
    Rng rng(51);
    nn::Mat<double> ac = random_tensor<double>(rng, 12, 16, 16).m;
    nn::Mat<double> as = random_tensor<double>(rng, 16, 16, 16).m;
    nn::Mat<double> c = ac, s = as;
    for (const auto& blk : m.acbs) {
        nn::Mat<double> nc, ns;
        blk.forward(c, s, 16, 16, nc, ns, nullptr);
        c = std::move(nc);
        s = std::move(ns);
    }
    for (int i = static_cast<int>(m.acbs.size()) - 1; i >= 0; --i) {
        nn::Mat<double> nc, ns;
        m.acbs[i].inverse_forward(c, s, 16, 16, nc, ns, m.acbs[i].mix.inverse_kernel(), nullptr);
        c = std::move(nc);
        s = std::move(ns);
    }
    CHECK((c - ac).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK((s - as).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("full pipeline at init: reveal(conceal) with aux substitution recovers inputs") {
    // FFBs contribute nothing at init, so the whole pipeline is invertible
    // when quantization is bypassed and I_l is fed back in place of I_z.
    ModelF m;
    m.build(tiny_cfg(6, 8, 2));
    m.init_weights(3);
    Rng rng(52);
    TensorF carrier = random_tensor<float>(rng, 3, 64, 64);
    TensorF secrets = random_tensor<float>(rng, 4, 64, 64);
    auto [enc_pre, aux] = conceal_core(m, carrier, secrets);
    auto [sec, car] = reveal_core(m, enc_pre, std::optional<TensorF>(aux));
    CHECK((sec.m - secrets.m).cwiseAbs().maxCoeff() <= 1e-4f);
    CHECK((car.m - carrier.m).cwiseAbs().maxCoeff() <= 1e-4f);
}

TEST_CASE("reveal shape contract and zero-aux default") {
    ModelF m;
    m.build(tiny_cfg());
    m.init_weights(4);
    Rng rng(53);
    TensorF enc = random_tensor<float>(rng, 3, 32, 32);
    auto res = reveal(m, enc);
    CHECK(res.secrets.c == 4);
    CHECK(res.secrets.h == 32);
    CHECK(res.carrier.c == 3);
    CHECK_THROWS_AS(reveal(m, TensorF(4, 32, 32)), ShapeError);
    CHECK_THROWS_AS(reveal(m, TensorF(3, 31, 32)), ShapeError);
}

TEST_CASE("untrained model with zero secrets: encoded image is regression-locked") {
    ModelF m;
    m.build(tiny_cfg(4, 6, 1));
    m.init_weights(7);
    TensorF carrier = synth::synth_chart(1234, 64, 64);
    TensorF secrets(4, 64, 64);
    auto res = conceal(m, carrier, secrets);
    ImageU8 got = to_u8(res.encoded);

    const std::filesystem::path golden = std::filesystem::path(TESTS_DATA_DIR) / "golden_encoded.png";
    if (!std::filesystem::exists(golden)) {
        save_png(golden.string(), got);
        MESSAGE("golden fixture regenerated; rerun to compare");
        return;
    }
    ImageU8 want = load_png(golden.string());
    REQUIRE(want.h == got.h);
    REQUIRE(want.w == got.w);
    int worst = 0;
    for (size_t i = 0; i < got.pix.size(); ++i)
        worst = std::max(worst, std::abs(static_cast<int>(got.pix[i]) - static_cast<int>(want.pix[i])));
    CHECK(worst <= 1);  // within one 8-bit quantization step
}

TEST_CASE("checkpoints round-trip bit-exactly and validate integrity") {
    ModelF m;
    m.build(tiny_cfg(3, 5, 1));
    m.init_weights(8);
    const std::string path = "test_ckpt.bin";
    save_checkpoint(path, m, "{\"note\":1}");

    std::string extra;
    ModelF loaded = load_checkpoint(path, &extra);
    CHECK(extra == "{\"note\":1}");
    auto pa = m.params();
    auto pb = loaded.params();
    REQUIRE(pa.size() == pb.size());
    for (size_t i = 0; i < pa.size(); ++i) {
        CHECK(pa[i].name == pb[i].name);
        CHECK(std::memcmp(pa[i].value->data(), pb[i].value->data(),
                          sizeof(float) * pa[i].value->size()) == 0);
    }

    // Tampered magic is rejected.
    {
        std::FILE* f = std::fopen(path.c_str(), "r+b");
        std::fputc('X', f);
        std::fclose(f);
        CHECK_THROWS_AS(load_checkpoint(path), FormatError);
    }
    std::remove(path.c_str());

    // Singular kernels are an integrity error.
    ModelF bad;
    bad.build(tiny_cfg(2, 4, 1));
    bad.init_weights(9);
    bad.acbs[0].mix.K.setZero();
    CHECK_THROWS_AS(bad.validate(), ModelError);
    const std::string path2 = "test_ckpt_bad.bin";
    save_checkpoint(path2, bad);
    CHECK_THROWS_AS(load_checkpoint(path2), ModelError);
    std::remove(path2.c_str());
}

TEST_CASE("conceal is bit-deterministic for fixed inputs and seed") {
    ModelF m1, m2;
    m1.build(tiny_cfg());
    m1.init_weights(10);
    m2.build(tiny_cfg());
    m2.init_weights(10);
    TensorF carrier = synth::synth_chart(55, 64, 64);
    Rng rng(56);
    TensorF secrets = random_tensor<float>(rng, 4, 64, 64, 0.5);
    auto r1 = conceal(m1, carrier, secrets);
    auto r2 = conceal(m2, carrier, secrets);
    CHECK(std::memcmp(r1.encoded.m.data(), r2.encoded.m.data(),
                      sizeof(float) * r1.encoded.m.size()) == 0);
}
