#pragma once

#include <array>
#include <string>
#include <vector>

#include "vizsteg/stegnet.hpp"
#include "vizsteg/tensor.hpp"

namespace vizsteg::trainer {

struct CorpusConfig {
    std::string carrier_dir;  // optional directory of PNG carriers; synthetic charts otherwise
    int n_carriers = 200;
    int n_perlin = 100;
    int n_scatter = 100;
    int n_qr = 50;
    int scatter_k = 3;   // interpolation factor of the scatter data images
    int qr_render = 384; // resolution at which QR images are rendered before cropping
};

struct LayoutMix {
    double p_qr = 1.0;                          // probability the QR channel is populated
    std::array<double, 3> p_data = {0.25, 0.5, 0.25};  // P(1), P(2), P(3) data channels
    double p_zero_channel = 0.1;                // populated-but-blank channel probability
    double p_scatter = 0.5;                     // scatter pair vs perlin for data channels
};

struct TrainConfig {
    uint64_t seed = 1;
    int steps = 1000;
    int batch_size = 2;
    double lr = 2e-4;
    int lr_halve_patience = 4;  // evals without improvement before halving
    int crop = 64;
    stegnet::NetConfig net;     // n_acb / growth / ffb_blocks / m_qr / clamp
    double alpha = 0.5;
    double beta = 1.6;
    CorpusConfig corpus;
    LayoutMix layout;
    int eval_every = 100;
    int eval_count = 8;
    std::string checkpoint_path = "model.ckpt";
    int checkpoint_every = 0;  // 0: final only
    std::string log_path;      // empty: stdout only
    int threads = 2;
    bool quiet = false;  // suppress stdout echo (file log still written); not a config key
};

// Strict parser: unknown or ill-typed keys raise FormatError naming the key.
TrainConfig parse_config(const std::string& json_text);
TrainConfig load_config(const std::string& path);

// Pre-generated pools, deterministic per (config, seed). The last fifth of
// every pool is reserved for held-out evaluation.
struct Corpus {
    std::vector<TensorF> carriers;
    std::vector<nn::Mat<float>> perlin;                               // 1 x crop^2 rows
    std::vector<std::pair<nn::Mat<float>, nn::Mat<float>>> scatter;   // x/y data images
    std::vector<nn::Mat<float>> qr;                                   // {0,1} rendered grids
    int crop = 0;
};

Corpus build_corpus(const TrainConfig& cfg);

struct Sample {
    TensorF carrier;
    TensorF secrets;  // 4 channels, QR channel already scaled by m_qr
    std::array<bool, 4> mask{};
};

// Deterministic sample assembly; `held_out` draws from the reserved pool tail.
Sample assemble_sample(const TrainConfig& cfg, const Corpus& corpus, uint64_t index, bool held_out);

struct EvalStats {
    double loss = 0, l_mse = 0, l_freq = 0, l_res = 0;
    double psnr = 0;   // carrier vs encoded, 8-bit scale
    double rmse = 0;   // populated data channels
};

EvalStats evaluate(stegnet::ModelF& model, const TrainConfig& cfg, const Corpus& corpus);

struct TrainResult {
    stegnet::ModelF model;
    double initial_loss = 0;
    double final_loss = 0;
    EvalStats final_eval;
    int steps_run = 0;
};

// Runs the optimization loop (Adam on the hybrid loss), streaming JSON-line
// metrics, periodically checkpointing, optionally resuming.
TrainResult train(const TrainConfig& cfg, const std::string& resume_path = "");

}  // namespace vizsteg::trainer
