#pragma once

#include <cstdint>
#include <string>

namespace vizsteg::cli {

// Exit codes: 0 success, 1 usage/config error, 2 capacity exceeded,
// 3 payload unrecoverable on decode.
constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitCapacity = 2;
constexpr int kExitNoPayload = 3;

struct EncodeOptions {
    std::string carrier_path;
    std::string data_path;  // optional chart-data JSON
    std::string info_path;  // chart-information JSON
    std::string model_path;
    std::string out_path;
    int interp_k = 3;
    int max_data_channels = 3;
    uint64_t seed = 1;
};

struct DecodeOptions {
    std::string image_path;
    std::string model_path;
    std::string out_dir;
    uint64_t seed = 1;
};

struct TrainOptions {
    std::string config_path;
    std::string resume_path;
    uint64_t seed_override = 0;  // 0: keep the config seed
};

struct EvalOptions {
    std::string model_path;
    std::string corpus_dir;
    std::string report_path;  // JSON report; a .csv sibling is written next to it
    int max_images = 8;
    uint64_t seed = 1;
};

int cmd_encode(const EncodeOptions& opt);
int cmd_decode(const DecodeOptions& opt);
int cmd_train(const TrainOptions& opt);
int cmd_eval(const EvalOptions& opt);

}  // namespace vizsteg::cli
