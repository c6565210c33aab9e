#include <CLI11.hpp>

#include "vizsteg/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"vizsteg: embed chart data and chart information invisibly in chart images"};
    app.require_subcommand(1);

    uint64_t seed = 1;
    app.add_option("--seed", seed, "Global deterministic seed")->capture_default_str();

    vizsteg::cli::EncodeOptions enc;
    auto* cmd_enc = app.add_subcommand("encode", "Embed chart metadata into a carrier image");
    cmd_enc->add_option("--carrier", enc.carrier_path, "Carrier PNG")->required();
    cmd_enc->add_option("--data", enc.data_path, "Chart data JSON (continuous or discrete)");
    cmd_enc->add_option("--info", enc.info_path, "Chart information JSON")->required();
    cmd_enc->add_option("--model", enc.model_path, "Model checkpoint")->required();
    cmd_enc->add_option("--out", enc.out_path, "Output image (lossless, .png)")->required();
    cmd_enc->add_option("--interp-k", enc.interp_k, "Pixels inserted between discrete samples")
        ->capture_default_str();
    cmd_enc->add_option("--max-data-channels", enc.max_data_channels, "Data channel budget (1-3)")
        ->capture_default_str();

    vizsteg::cli::DecodeOptions dec;
    auto* cmd_dec = app.add_subcommand("decode", "Recover chart metadata from an encoded image");
    cmd_dec->add_option("--image", dec.image_path, "Encoded PNG")->required();
    cmd_dec->add_option("--model", dec.model_path, "Model checkpoint")->required();
    cmd_dec->add_option("--out-dir", dec.out_dir, "Output directory")->required();

    vizsteg::cli::TrainOptions trn;
    auto* cmd_trn = app.add_subcommand("train", "Train a concealing/revealing model");
    cmd_trn->add_option("--config", trn.config_path, "Training config JSON")->required();
    cmd_trn->add_option("--resume", trn.resume_path, "Checkpoint to resume from");

    vizsteg::cli::EvalOptions evl;
    auto* cmd_evl = app.add_subcommand("eval", "Measure quality and capacity on a corpus");
    cmd_evl->add_option("--model", evl.model_path, "Model checkpoint")->required();
    cmd_evl->add_option("--corpus", evl.corpus_dir, "Directory of carrier PNGs (synthetic fallback)");
    cmd_evl->add_option("--report", evl.report_path, "JSON report path (.csv written alongside)")
        ->required();
    cmd_evl->add_option("--max-images", evl.max_images, "Carrier count cap")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    if (cmd_enc->parsed()) {
        enc.seed = seed;
        return vizsteg::cli::cmd_encode(enc);
    }
    if (cmd_dec->parsed()) {
        dec.seed = seed;
        return vizsteg::cli::cmd_decode(dec);
    }
    if (cmd_trn->parsed()) {
        if (app.count("--seed") > 0) trn.seed_override = seed;
        return vizsteg::cli::cmd_train(trn);
    }
    if (cmd_evl->parsed()) {
        evl.seed = seed;
        return vizsteg::cli::cmd_eval(evl);
    }
    return vizsteg::cli::kExitUsage;
}
