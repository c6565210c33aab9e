#include <doctest.h>

#include "vizsteg/payload.hpp"
#include "vizsteg/qr.hpp"
#include "vizsteg/synth.hpp"

using namespace vizsteg;
using payload::ChartInfo;
using payload::QrImage;

TEST_CASE("metadata blob round-trips chart info and plans exactly") {
    ChartInfo info;
    info.spec_text = "{\"mark\":\"line\",\"data\":{\"url\":\"data.csv\"}}\nsecond line\t✓";
    info.aux = {{"title", "Quarterly revenue"}, {"type", "line"}};

    dtoi::DataImagePlan plan;
    plan.kind = dtoi::DataKind::continuous;
    plan.channels = 2;
    plan.planes.push_back({{2.0, 6.0, false}, {0, 0, 0, 100, 120}});
    plan.planes.push_back({{-1.0e-9, 1.0 / 3.0, false}, {1, 10, 20, 64, 64}});
    plan.pad_bottom = 1;

    const std::string blob = payload::serialize_metadata(info, plan);
    CHECK(blob == payload::serialize_metadata(info, plan));  // deterministic

    auto [info2, plan2] = payload::parse_metadata(blob);
    CHECK(info2 == info);
    REQUIRE(plan2.planes.size() == 2);
    CHECK(plan2.kind == dtoi::DataKind::continuous);
    CHECK(plan2.planes[0].norm.lo == 2.0);
    CHECK(plan2.planes[0].norm.hi == 6.0);
    CHECK(plan2.planes[1].norm.lo == -1.0e-9);
    CHECK(plan2.planes[1].norm.hi == 1.0 / 3.0);  // bit-exact via %.17g
    CHECK(plan2.planes[1].place.col0 == 20);
    CHECK(plan2.pad_bottom == 1);
    CHECK(payload::parse_checksum_ok(blob));
}

TEST_CASE("metadata blob round-trips discrete plans with full float precision") {
    ChartInfo info;  // empty info, minimal plan
    dtoi::DataImagePlan plan;
    plan.kind = dtoi::DataKind::discrete;
    plan.k_interp = 3;
    plan.channels = 2;
    dtoi::PartPlan pt;
    pt.n = 9999;
    pt.hs = 100;
    pt.ws = 100;
    pt.pad = 1;
    pt.nx = {0.1234567890123456789, 987654.321012345678, false};
    pt.ny = {-5.5, -5.5, true};
    pt.x_place = {0, 0, 0, 400, 400};
    pt.y_place = {1, 0, 0, 400, 400};
    plan.parts.push_back(pt);

    auto [info2, plan2] = payload::parse_metadata(payload::serialize_metadata(info, plan));
    CHECK(info2.spec_text.empty());
    REQUIRE(plan2.parts.size() == 1);
    CHECK(plan2.parts[0].nx.lo == pt.nx.lo);
    CHECK(plan2.parts[0].nx.hi == pt.nx.hi);
    CHECK(plan2.parts[0].ny.degenerate);
    CHECK(plan2.parts[0].n == 9999);
}

TEST_CASE("serialize rejects non-UTF-8 text naming the byte index") {
    ChartInfo info;
    info.spec_text = std::string("ok\xFFz");
    dtoi::DataImagePlan plan;
    try {
        payload::serialize_metadata(info, plan);
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find("index 2") != std::string::npos);
    }
}

TEST_CASE("parse rejects truncated and tampered blobs") {
    ChartInfo info;
    info.spec_text = "hello";
    dtoi::DataImagePlan plan;
    std::string blob = payload::serialize_metadata(info, plan);
    CHECK_THROWS_AS(payload::parse_metadata(blob.substr(0, blob.size() / 2)), FormatError);
    std::string bad = blob;
    bad[0] = 'X';
    CHECK_THROWS_AS(payload::parse_metadata(bad), FormatError);
}

TEST_CASE("qr payload grid sizing follows the capacity table") {
    // 1273 characters fit exactly one symbol.
    const std::string s1(1273, 'a');
    QrImage img1 = payload::encode_qr_payload(s1, 512, 512);
    CHECK(img1.grid_rows * img1.grid_cols == 1);
    CHECK(img1.symbols == 1);
    CHECK(img1.scale == 2);  // 354 <= 512
    CHECK(img1.symbol_px == 354);

    // One more character forces a second symbol.
    const std::string s2(1274, 'b');
    QrImage img2 = payload::encode_qr_payload(s2, 512, 512);
    CHECK(img2.symbols == 2);

    // Empty text still renders a decodable symbol.
    QrImage img0 = payload::encode_qr_payload("", 512, 512);
    CHECK(img0.symbols == 1);
    CHECK(payload::decode_qr_payload(img0).empty());

    // Beyond capacity: the 512x512 carrier fits 2x2 symbols at scale 1.
    CHECK(payload::max_symbols(512, 512) == 4);
    const std::string big(payload::max_text_bytes(512, 512) + 1, 'c');
    CHECK_THROWS_AS(payload::encode_qr_payload(big, 512, 512), CapacityError);
}

TEST_CASE("qr payload round-trips text, including multi-symbol grids") {
    const std::string s = synth::random_string(77, 500, 500);
    CHECK(payload::decode_qr_payload(payload::encode_qr_payload(s, 512, 512)) == s);

    const std::string s2 = synth::random_string(78, 3000, 3000);
    QrImage img = payload::encode_qr_payload(s2, 512, 512);
    CHECK(img.symbols == 3);
    CHECK(payload::decode_qr_payload(img) == s2);

    CHECK(payload::encode_qr_payload(s, 512, 512).pixels ==
          payload::encode_qr_payload(s, 512, 512).pixels);  // deterministic
}

TEST_CASE("qr decode survives 20% burst damage per symbol") {
    Rng rng(5150);
    const std::string s = synth::random_string(79, 800, 800);
    QrImage img = payload::encode_qr_payload(s, 512, 512);
    const int side = static_cast<int>(img.symbol_px * 0.447);  // ~20% of the area
    for (int r = 0; r < side; ++r)
        for (int c = 0; c < side; ++c)
            img.pixels(40 + r, 40 + c) = static_cast<float>(rng.uniform_int(2));
    CHECK(payload::decode_qr_payload(img) == s);
}

TEST_CASE("qr decode errors identify the failing grid cell") {
    const std::string s(2000, 'q');  // two symbols
    QrImage img = payload::encode_qr_payload(s, 512, 512);
    REQUIRE(img.symbols == 2);
    // Wreck the second symbol's data region beyond repair but keep finders.
    Rng rng(99);
    const int spx = img.symbol_px;
    for (int r = 12; r < spx - 12; ++r)
        for (int c = spx + 12; c < 2 * spx - 12; ++c)
            img.pixels(r, c) = static_cast<float>(rng.uniform_int(2));
    try {
        payload::decode_qr_payload(img);
        FAIL("expected DecodeError");
    } catch (const DecodeError& e) {
        CHECK(std::string(e.what()).find("(0,1)") != std::string::npos);
    }
}

TEST_CASE("all-zero image fails with a decode error") {
    payload::GrayF zero = payload::GrayF::Zero(512, 512);
    CHECK_THROWS_AS(payload::decode_qr_payload(zero), DecodeError);
}

TEST_CASE("scale_qr multiplies and unscale_qr divides exactly") {
    QrImage img = payload::encode_qr_payload("hello", 256, 256);
    CHECK(img.scale == 1);
    payload::GrayF scaled = payload::scale_qr(img.pixels, 0.15);
    // Binary pixels map onto {0, 0.15}.
    for (Eigen::Index i = 0; i < scaled.size(); ++i) {
        const float v = scaled.data()[i];
        CHECK((v == 0.0f || v == doctest::Approx(0.15f).epsilon(1e-6)));
    }
    payload::GrayF back = payload::unscale_qr(scaled, 0.15);
    CHECK((back - img.pixels).cwiseAbs().maxCoeff() <= 1e-7f);

    CHECK(payload::scale_qr(img.pixels, 1.0) == img.pixels);
    CHECK_THROWS_AS(payload::scale_qr(img.pixels, 0.0), ParamError);
    CHECK_THROWS_AS(payload::unscale_qr(img.pixels, 0.0), ParamError);
}

TEST_CASE("decode handles noisy grayscale renderings via Otsu") {
    Rng rng(321);
    const std::string s = synth::random_string(80, 300, 300);
    QrImage img = payload::encode_qr_payload(s, 512, 512);
    payload::GrayF noisy(512, 512);
    noisy.setZero();
    for (int r = 0; r < img.pixels.rows(); ++r)
        for (int c = 0; c < img.pixels.cols(); ++c)
            noisy(r, c) = img.pixels(r, c) * 0.8f + 0.1f + 0.08f * static_cast<float>(rng.normal());
    CHECK(payload::decode_qr_payload(noisy) == s);
}
