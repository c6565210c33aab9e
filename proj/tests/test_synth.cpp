#include <doctest.h>

#include "vizsteg/synth.hpp"

using namespace vizsteg;

TEST_CASE("perlin fields are deterministic and exactly min-max normalized") {
    auto a = synth::perlin(42, 64, 64);
    auto b = synth::perlin(42, 64, 64);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
    CHECK(a.minCoeff() == 0.0);
    CHECK(a.maxCoeff() == 1.0);
    auto c = synth::perlin(43, 64, 64);
    CHECK((a - c).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("perlin smoothness: mean adjacent difference under 0.05 at 256^2") {
    auto img = synth::perlin(7, 256, 256, 4);
    double acc = 0;
    long n = 0;
    for (int y = 0; y < 256; ++y)
        for (int x = 1; x < 256; ++x) {
            acc += std::abs(img(y, x) - img(y, x - 1));
            ++n;
        }
    CHECK(acc / n < 0.05);
}

TEST_CASE("vector fields come back as two correlated finite planes") {
    auto f = synth::synth_vector_field(11, 48, 48);
    REQUIRE(f.planes.size() == 2);
    for (const auto& p : f.planes) CHECK(p.allFinite());
    // shared base keeps them positively correlated
    const auto a = f.planes[0].array() - f.planes[0].mean();
    const auto b = f.planes[1].array() - f.planes[1].mean();
    const double corr = (a * b).sum() / std::sqrt((a * a).sum() * (b * b).sum());
    CHECK(corr > 0.2);
}

TEST_CASE("scatter sets honor the count, stay finite, and are seed-stable") {
    auto s = synth::synth_scatter(5, 1234);
    CHECK(s.points.size() == 1234);
    for (const auto& p : s.points) {
        CHECK(std::isfinite(p.x));
        CHECK(std::isfinite(p.y));
    }
    auto s2 = synth::synth_scatter(5, 1234);
    CHECK(s.points[7].x == s2.points[7].x);
    auto sets = synth::synth_scatter_sets(3, 100, 9);
    CHECK(sets.size() == 3);
    CHECK(sets[0].points[0].x != sets[1].points[0].x);
}

TEST_CASE("random strings respect the length range and the seed") {
    for (uint64_t seed = 0; seed < 50; ++seed) {
        auto s = synth::random_string(seed, 1, 1273);
        CHECK(s.size() >= 1);
        CHECK(s.size() <= 1273);
    }
    CHECK(synth::random_string(3, 10, 10).size() == 10);
    CHECK(synth::random_string(3, 40, 40) == synth::random_string(3, 40, 40));
}

TEST_CASE("synthetic charts are deterministic RGB images in [0,1]") {
    auto img = synth::synth_chart(77, 64, 96);
    CHECK(img.c == 3);
    CHECK(img.h == 64);
    CHECK(img.w == 96);
    CHECK(img.m.minCoeff() >= 0.0f);
    CHECK(img.m.maxCoeff() <= 1.0f);
    auto img2 = synth::synth_chart(77, 64, 96);
    CHECK((img.m - img2.m).cwiseAbs().maxCoeff() == 0.0f);
    // different seeds draw different charts
    auto img3 = synth::synth_chart(78, 64, 96);
    CHECK((img.m - img3.m).cwiseAbs().maxCoeff() > 0.0f);
}
