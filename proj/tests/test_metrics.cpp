#include <doctest.h>

#include <cmath>

#include "vizsteg/metrics.hpp"
#include "vizsteg/synth.hpp"

using namespace vizsteg;
namespace mt = vizsteg::metrics;

namespace {

TensorF random_img(Rng& rng, int c, int h, int w) {
    TensorF t(c, h, w);
    for (Eigen::Index i = 0; i < t.m.size(); ++i)
        t.m.data()[i] = static_cast<float>(std::round(rng.uniform() * 255.0) / 255.0);
    return t;
}

// Straight-line reference SSIM: direct per-window double-precision loops,
// independent of the library's separable-filter implementation.
double ssim_reference(const TensorF& a, const TensorF& b, double L) {
    std::vector<double> g(11);
    double gsum = 0;
    for (int i = 0; i < 11; ++i) {
        const double d = i - 5;
        g[i] = std::exp(-d * d / 4.5);
        gsum += g[i];
    }
    for (auto& v : g) v /= gsum;
    const double c1 = 0.0001 * L * L, c2 = 0.0009 * L * L;
    double total = 0;
    for (int ch = 0; ch < a.c; ++ch) {
        double acc = 0;
        long n = 0;
        for (int y0 = 0; y0 + 11 <= a.h; ++y0)
            for (int x0 = 0; x0 + 11 <= a.w; ++x0) {
                double ma = 0, mb = 0;
                for (int dy = 0; dy < 11; ++dy)
                    for (int dx = 0; dx < 11; ++dx) {
                        const double wgt = g[dy] * g[dx];
                        ma += wgt * a.at(ch, y0 + dy, x0 + dx) * L;
                        mb += wgt * b.at(ch, y0 + dy, x0 + dx) * L;
                    }
                double va = 0, vb = 0, cov = 0;
                for (int dy = 0; dy < 11; ++dy)
                    for (int dx = 0; dx < 11; ++dx) {
                        const double wgt = g[dy] * g[dx];
                        const double xa = a.at(ch, y0 + dy, x0 + dx) * L;
                        const double xb = b.at(ch, y0 + dy, x0 + dx) * L;
                        va += wgt * xa * xa;
                        vb += wgt * xb * xb;
                        cov += wgt * xa * xb;
                    }
                va -= ma * ma;
                vb -= mb * mb;
                cov -= ma * mb;
                acc += ((2 * ma * mb + c1) * (2 * cov + c2)) /
                       ((ma * ma + mb * mb + c1) * (va + vb + c2));
                ++n;
            }
        total += acc / n;
    }
    return total / a.c;
}

}  // namespace

TEST_CASE("psnr closed forms") {
    Rng rng(71);
    TensorF a = random_img(rng, 3, 16, 16);
    CHECK(std::isinf(mt::psnr(a, a, mt::Range::u8)));

    TensorF b = a;
    b.m.array() += 1.0f / 255.0f;  // uniform |diff| of one 8-bit step
    CHECK(mt::psnr(a, b, mt::Range::u8) == doctest::Approx(48.130803608679103).epsilon(1e-5));

    TensorF c = a;
    c.m.array() += 16.0f / 255.0f;
    // 20*log10(255/16); with MAX pinned to 255 for 8-bit comparisons
    CHECK(mt::psnr(a, c, mt::Range::u8) == doctest::Approx(24.048400654908026).epsilon(1e-5));

    // float mode: MAX = 1
    TensorF d = a;
    d.m.array() += 0.5f;
    CHECK(mt::psnr(a, d, mt::Range::unit) == doctest::Approx(20.0 * std::log10(2.0)).epsilon(1e-5));

    // symmetry
    CHECK(mt::psnr(a, c, mt::Range::u8) == mt::psnr(c, a, mt::Range::u8));
}

TEST_CASE("psnr and rmse are invariant under identical pixel permutations") {
    Rng rng(72);
    TensorF a = random_img(rng, 1, 8, 8), b = random_img(rng, 1, 8, 8);
    // reverse both rasters with the same permutation
    TensorF ap = a, bp = b;
    ap.m.row(0) = a.m.row(0).reverse();
    bp.m.row(0) = b.m.row(0).reverse();
    CHECK(mt::psnr(a, b, mt::Range::u8) == doctest::Approx(mt::psnr(ap, bp, mt::Range::u8)).epsilon(1e-12));
    CHECK(mt::rmse(a, b) == doctest::Approx(mt::rmse(ap, bp)).epsilon(1e-12));
}

TEST_CASE("ssim: identical, anti-correlated, and reference-locked values") {
    Rng rng(73);
    TensorF a = random_img(rng, 1, 32, 32);
    CHECK(mt::ssim(a, a, mt::Range::u8) == doctest::Approx(1.0).epsilon(1e-9));

    // binary checkerboard vs its inverse: strongly negative structure
    TensorF cb(1, 32, 32), inv(1, 32, 32);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) {
            cb.at(0, y, x) = static_cast<float>((x + y) % 2);
            inv.at(0, y, x) = 1.0f - cb.at(0, y, x);
        }
    CHECK(mt::ssim(cb, inv, mt::Range::u8) < 0.0);

    TensorF b = random_img(rng, 3, 24, 40);
    TensorF noisy = b;
    for (Eigen::Index i = 0; i < noisy.m.size(); ++i)
        noisy.m.data()[i] =
            static_cast<float>(clamp01(noisy.m.data()[i] + 0.05 * rng.normal()));
    const double lib = mt::ssim(b, noisy, mt::Range::u8);
    const double ref = ssim_reference(b, noisy, 255.0);
    CHECK(lib == doctest::Approx(ref).epsilon(1e-9));
    CHECK(lib > 0.2);
    CHECK(lib < 0.9999);
    // symmetry
    CHECK(mt::ssim(b, noisy, mt::Range::u8) == doctest::Approx(mt::ssim(noisy, b, mt::Range::u8)).epsilon(1e-12));
}

TEST_CASE("rmse closed forms and channel masking") {
    Rng rng(74);
    TensorF a = random_img(rng, 3, 8, 8);
    CHECK(mt::rmse(a, a) == 0.0);
    TensorF b = a;
    b.m.array() += 0.1f;
    CHECK(mt::rmse(a, b) == doctest::Approx(0.1).epsilon(1e-6));
    // checkerboard +-0.2
    TensorF c = a;
    for (Eigen::Index i = 0; i < c.m.size(); ++i) c.m.data()[i] += (i % 2 == 0 ? 0.2f : -0.2f);
    CHECK(mt::rmse(a, c) == doctest::Approx(0.2).epsilon(1e-6));
    // only populated channels count
    TensorF d = a;
    d.m.row(2).array() += 100.0f;
    CHECK(mt::rmse(a, d, {true, true, false}) == 0.0);
}

TEST_CASE("tra counts positional character matches") {
    CHECK(mt::tra("hello", "hello") == 1.0);
    CHECK(mt::tra("hello", "") == 0.0);
    std::string orig(100, 'a');
    std::string one_off = orig;
    one_off[31] = 'b';
    CHECK(mt::tra(orig, one_off) == doctest::Approx(0.99).epsilon(1e-12));
    // length mismatch counts missing positions as errors
    CHECK(mt::tra("abcd", "ab") == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(mt::tra("ab", "abcd") == 1.0);
    CHECK(mt::tra("", "") == 1.0);
}

TEST_CASE("bpp follows the exact formula on fixed and random tuples") {
    CHECK(mt::bpp(3 * 512 * 512, 3, 512, 512) == 1.0);
    CHECK(mt::bpp(16000, 3, 512, 512) == doctest::Approx(16000.0 / 786432.0).epsilon(1e-15));
    Rng rng(75);
    for (int t = 0; t < 20; ++t) {
        const long L = static_cast<long>(rng.uniform_int(1 << 24));
        const int c = 1 + static_cast<int>(rng.uniform_int(4));
        const int h = 1 + static_cast<int>(rng.uniform_int(2048));
        const int w = 1 + static_cast<int>(rng.uniform_int(2048));
        CHECK(mt::bpp(L, c, h, w) ==
              doctest::Approx(static_cast<double>(L) / (static_cast<double>(c) * h * w)).epsilon(1e-15));
    }
    // linear in L, inversely proportional to the pixel count
    CHECK(mt::bpp(2000, 3, 100, 100) == doctest::Approx(2 * mt::bpp(1000, 3, 100, 100)).epsilon(1e-12));
    CHECK(mt::bpp(1000, 3, 200, 100) == doctest::Approx(0.5 * mt::bpp(1000, 3, 100, 100)).epsilon(1e-12));
    CHECK_THROWS_AS(mt::bpp(-1, 3, 8, 8), ParamError);
    CHECK_THROWS_AS(mt::bpp(10, 0, 8, 8), ParamError);
}

TEST_CASE("report aggregation and serialization") {
    mt::EvalReport r;
    r.layout = "low";
    mt::ImageEval e1{"a", 40.0, 0.99, 0.01, 1.0, 0.5, false, std::nullopt};
    mt::ImageEval e2{"b", 0.0, 0.97, 0.03, 0.9, 0.7, true, std::nullopt};
    r.per_image = {e1, e2};
    mt::aggregate(r);
    CHECK(r.psnr == doctest::Approx(40.0));  // infinite entries excluded from the mean
    CHECK(r.ssim == doctest::Approx(0.98));
    CHECK(r.tra == doctest::Approx(0.95));

    const std::string js = mt::to_json({r});
    CHECK(js.find("\"layout\": \"low\"") != std::string::npos);
    const std::string csv = mt::to_csv({r});
    CHECK(csv.find("layout,psnr_db,ssim,rmse,tra,bpp") != std::string::npos);
    CHECK(csv.find("low,") != std::string::npos);
}
