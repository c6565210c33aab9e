#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "vizsteg/image.hpp"
#include "vizsteg/tensor.hpp"

namespace vizsteg::metrics {

// Value scale of the compared images: 8-bit (MAX = 255) or normalized floats
// (MAX = 1). Recorded in reports.
enum class Range { u8, unit };

// PSNR in dB; +infinity for identical inputs.
double psnr(const TensorF& a, const TensorF& b, Range range);
double psnr(const ImageU8& a, const ImageU8& b);

// Windowed SSIM: 11x11 Gaussian (sigma 1.5), K1=0.01, K2=0.03, valid region,
// mean over windows and channels.
double ssim(const TensorF& a, const TensorF& b, Range range);
double ssim(const ImageU8& a, const ImageU8& b);

// RMSE over [0,1] data images, restricted to populated channels.
double rmse(const TensorF& a, const TensorF& b, const std::vector<bool>& populated);
double rmse(const TensorF& a, const TensorF& b);

// Text recovery accuracy: per-position character matches over the original
// length; extra or missing positions count as errors.
double tra(const std::string& original, const std::string& restored);

// Bits per pixel of a payload over a (C,H,W) carrier.
double bpp(long payload_bits, int c, int h, int w);

// Optional perceptual metric plug-in (external feature extractor); never part
// of the acceptance path, merely reported when registered.
using PerceptualMetric = std::function<double(const ImageU8&, const ImageU8&)>;

struct ImageEval {
    std::string name;
    double psnr = 0, ssim = 0, rmse = 0, tra = 0, bpp = 0;
    bool psnr_infinite = false;
    std::optional<double> perceptual;
};

struct EvalReport {
    std::string layout;      // low / medium / maximum / custom
    Range range = Range::u8;
    double psnr = 0, ssim = 0, rmse = 0, tra = 0, bpp = 0;
    bool psnr_infinite = false;
    double encode_seconds = 0, decode_seconds = 0;
    std::vector<ImageEval> per_image;
};

// Aggregates per-image rows into the report means (infinite PSNR entries are
// flagged and excluded from the finite mean).
void aggregate(EvalReport& report);

std::string to_json(const std::vector<EvalReport>& reports);
std::string to_csv(const std::vector<EvalReport>& reports);

}  // namespace vizsteg::metrics
