#include <doctest.h>

#include <cstdio>

#include "vizsteg/common.hpp"
#include "vizsteg/image.hpp"

using namespace vizsteg;

TEST_CASE("png round-trips rgb and grayscale images bit-exactly") {
    Rng rng(81);
    for (int channels : {1, 3}) {
        ImageU8 img(channels, 37, 53);
        for (auto& p : img.pix) p = static_cast<uint8_t>(rng.uniform_int(256));
        const std::string path = "test_io_" + std::to_string(channels) + ".png";
        save_png(path, img);
        ImageU8 back = load_png(path);
        CHECK(back.c == channels);
        CHECK(back.h == 37);
        CHECK(back.w == 53);
        CHECK(back.pix == img.pix);
        std::remove(path.c_str());
    }
}

TEST_CASE("float conversion quantizes symmetrically") {
    Rng rng(82);
    ImageU8 img(3, 9, 11);
    for (auto& p : img.pix) p = static_cast<uint8_t>(rng.uniform_int(256));
    TensorF t = to_float(img);
    CHECK(t.m.minCoeff() >= 0.0f);
    CHECK(t.m.maxCoeff() <= 1.0f);
    ImageU8 back = to_u8(t);
    CHECK(back.pix == img.pix);
}

TEST_CASE("quantize_8bit clamps then rounds to the 255 grid") {
    TensorF t(1, 1, 4);
    t.m << -0.5f, 0.299f, 0.5f, 1.7f;
    quantize_8bit(t);
    CHECK(t.at(0, 0, 0) == 0.0f);
    CHECK(t.at(0, 0, 1) == doctest::Approx(std::round(0.299f * 255.f) / 255.f));
    CHECK(t.at(0, 0, 3) == 1.0f);
}

TEST_CASE("loading a missing or non-png file fails cleanly") {
    CHECK_THROWS_AS(load_png("definitely_missing_file.png"), Error);
    const std::string path = "not_a_png.png";
    std::FILE* f = std::fopen(path.c_str(), "wb");
    std::fputs("this is not a png", f);
    std::fclose(f);
    CHECK_THROWS_AS(load_png(path), FormatError);
    std::remove(path.c_str());
}

TEST_CASE("crc32 matches the classic check value") {
    CHECK(crc32(std::string("123456789")) == 0xCBF43926u);
    CHECK(crc32(std::string("")) == 0x00000000u);
}
