#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "vizsteg/cli.hpp"
#include "vizsteg/image.hpp"
#include "vizsteg/stegnet.hpp"
#include "vizsteg/synth.hpp"

using namespace vizsteg;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::path("cli_test_tmp") / name) {
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all("cli_test_tmp", ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

std::string make_model(const TempDir& dir) {
    stegnet::ModelF m;
    stegnet::NetConfig cfg;
    cfg.n_acb = 2;
    cfg.growth = 4;
    cfg.ffb_blocks = 1;
    m.build(cfg);
    m.init_weights(5);
    const std::string path = dir.file("model.ckpt");
    stegnet::save_checkpoint(path, m);
    return path;
}

std::string make_carrier(const TempDir& dir, int h, int w) {
    const std::string path = dir.file("carrier.png");
    save_png(path, to_u8(synth::synth_chart(1, h, w)));
    return path;
}

}  // namespace

TEST_CASE("encode refuses lossy output extensions") {
    TempDir dir("lossy");
    cli::EncodeOptions opt;
    opt.carrier_path = make_carrier(dir, 256, 256);
    opt.info_path = dir.file("info.json");
    write_text(opt.info_path, R"({"spec_text":"hi"})");
    opt.model_path = make_model(dir);
    opt.out_path = dir.file("out.jpg");
    CHECK(cli::cmd_encode(opt) == cli::kExitUsage);
}

TEST_CASE("encode emits a PNG and a capacity report for an info-only bundle") {
    TempDir dir("info_only");
    cli::EncodeOptions opt;
    opt.carrier_path = make_carrier(dir, 256, 256);
    opt.info_path = dir.file("info.json");
    write_text(opt.info_path, R"({"spec_text":"{\"mark\":\"bar\"}","aux":{"title":"t"}})");
    opt.model_path = make_model(dir);
    opt.out_path = dir.file("out.png");
    CHECK(cli::cmd_encode(opt) == cli::kExitOk);
    ImageU8 out = load_png(opt.out_path);
    CHECK(out.h == 256);
    CHECK(out.w == 256);
}

TEST_CASE("encode reports capacity violations with the representable maximum") {
    TempDir dir("capacity");
    cli::EncodeOptions opt;
    opt.carrier_path = make_carrier(dir, 256, 256);
    opt.info_path = dir.file("info.json");
    write_text(opt.info_path, R"({"spec_text":"x"})");
    opt.model_path = make_model(dir);
    opt.out_path = dir.file("out.png");
    opt.data_path = dir.file("data.json");

    // 256x256 with K=3 holds floor(3*64/2)*64 = 6144 points; send more.
    std::string pts = R"({"kind":"discrete","points":[)";
    for (int i = 0; i < 6500; ++i) pts += (i ? "," : "") + std::string("[") + std::to_string(i) + ",1]";
    pts += "]}";
    write_text(opt.data_path, pts);
    CHECK(cli::cmd_encode(opt) == cli::kExitCapacity);
}

TEST_CASE("decode of a plain unencoded image exits with the no-payload code") {
    TempDir dir("plain");
    cli::DecodeOptions opt;
    opt.image_path = make_carrier(dir, 256, 256);
    opt.model_path = make_model(dir);
    opt.out_dir = dir.file("out");
    CHECK(cli::cmd_decode(opt) == cli::kExitNoPayload);
}

TEST_CASE("train rejects an unknown config key naming it") {
    TempDir dir("badcfg");
    cli::TrainOptions opt;
    opt.config_path = dir.file("cfg.json");
    write_text(opt.config_path, R"({"step_count": 10})");
    CHECK(cli::cmd_train(opt) == cli::kExitUsage);
}

TEST_CASE("eval writes JSON and CSV reports on a synthetic corpus") {
    TempDir dir("eval");
    cli::EvalOptions opt;
    opt.model_path = make_model(dir);
    opt.report_path = dir.file("report.json");
    opt.max_images = 1;
    CHECK(cli::cmd_eval(opt) == cli::kExitOk);
    CHECK(fs::exists(dir.file("report.json")));
    CHECK(fs::exists(dir.file("report.csv")));
    std::ifstream in(dir.file("report.json"));
    std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(body.find("\"layout\": \"low\"") != std::string::npos);
    CHECK(body.find("\"bpp\"") != std::string::npos);
    CHECK(body.find("\"tra\"") != std::string::npos);
}
