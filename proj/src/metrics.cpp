#include "vizsteg/metrics.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace vizsteg::metrics {

namespace {

double max_of(Range r) { return r == Range::u8 ? 255.0 : 1.0; }

double mse_of(const TensorF& a, const TensorF& b, double scale) {
    double acc = 0;
    for (Eigen::Index i = 0; i < a.m.size(); ++i) {
        const double d = (static_cast<double>(a.m.data()[i]) - b.m.data()[i]) * scale;
        acc += d * d;
    }
    return acc / static_cast<double>(a.m.size());
}

std::vector<double> gaussian_window() {
    std::vector<double> g(11);
    double sum = 0;
    for (int i = 0; i < 11; ++i) {
        const double d = i - 5;
        g[i] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
        sum += g[i];
    }
    for (auto& v : g) v /= sum;
    return g;
}

// Separable valid-region Gaussian filtering of one channel.
Eigen::MatrixXd filter_valid(const Eigen::MatrixXd& img) {
    static const std::vector<double> g = gaussian_window();
    const int h = static_cast<int>(img.rows()), w = static_cast<int>(img.cols());
    Eigen::MatrixXd tmp(h, w - 10);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x + 10 < w; ++x) {
            double acc = 0;
            for (int k = 0; k < 11; ++k) acc += g[k] * img(y, x + k);
            tmp(y, x) = acc;
        }
    Eigen::MatrixXd out(h - 10, w - 10);
    for (int y = 0; y + 10 < h; ++y)
        for (int x = 0; x < tmp.cols(); ++x) {
            double acc = 0;
            for (int k = 0; k < 11; ++k) acc += g[k] * tmp(y + k, x);
            out(y, x) = acc;
        }
    return out;
}

}  // namespace

double psnr(const TensorF& a, const TensorF& b, Range range) {
    if (!a.same_shape(b)) throw ShapeError("psnr: shape mismatch");
    const double scale = range == Range::u8 ? 255.0 : 1.0;
    const double m = mse_of(a, b, scale);
    if (m == 0) return std::numeric_limits<double>::infinity();
    const double mx = max_of(range);
    return 10.0 * std::log10(mx * mx / m);
}

double psnr(const ImageU8& a, const ImageU8& b) { return psnr(to_float(a), to_float(b), Range::u8); }

double ssim(const TensorF& a, const TensorF& b, Range range) {
    if (!a.same_shape(b)) throw ShapeError("ssim: shape mismatch");
    if (a.h < 11 || a.w < 11) throw ShapeError("ssim: images must be at least 11x11");
    const double L = max_of(range);
    const double scale = range == Range::u8 ? 255.0 : 1.0;
    const double c1 = (0.01 * L) * (0.01 * L), c2 = (0.03 * L) * (0.03 * L);

    double total = 0;
    for (int ch = 0; ch < a.c; ++ch) {
        Eigen::MatrixXd xa(a.h, a.w), xb(a.h, a.w);
        for (int y = 0; y < a.h; ++y)
            for (int x = 0; x < a.w; ++x) {
                xa(y, x) = a.at(ch, y, x) * scale;
                xb(y, x) = b.at(ch, y, x) * scale;
            }
        const Eigen::MatrixXd mu_a = filter_valid(xa);
        const Eigen::MatrixXd mu_b = filter_valid(xb);
        const Eigen::MatrixXd aa = filter_valid(xa.cwiseProduct(xa));
        const Eigen::MatrixXd bb = filter_valid(xb.cwiseProduct(xb));
        const Eigen::MatrixXd ab = filter_valid(xa.cwiseProduct(xb));

        double acc = 0;
        for (Eigen::Index y = 0; y < mu_a.rows(); ++y)
            for (Eigen::Index x = 0; x < mu_a.cols(); ++x) {
                const double ma = mu_a(y, x), mb = mu_b(y, x);
                const double va = aa(y, x) - ma * ma;
                const double vb = bb(y, x) - mb * mb;
                const double cov = ab(y, x) - ma * mb;
                acc += ((2 * ma * mb + c1) * (2 * cov + c2)) /
                       ((ma * ma + mb * mb + c1) * (va + vb + c2));
            }
        total += acc / static_cast<double>(mu_a.size());
    }
    return total / a.c;
}

double ssim(const ImageU8& a, const ImageU8& b) { return ssim(to_float(a), to_float(b), Range::u8); }

double rmse(const TensorF& a, const TensorF& b, const std::vector<bool>& populated) {
    if (!a.same_shape(b)) throw ShapeError("rmse: shape mismatch");
    double acc = 0;
    long n = 0;
    for (int ch = 0; ch < a.c; ++ch) {
        if (ch < static_cast<int>(populated.size()) && !populated[ch]) continue;
        for (Eigen::Index i = 0; i < a.pixels(); ++i) {
            const double d = static_cast<double>(a.m(ch, i)) - b.m(ch, i);
            acc += d * d;
            ++n;
        }
    }
    if (n == 0) return 0.0;
    return std::sqrt(acc / static_cast<double>(n));
}

double rmse(const TensorF& a, const TensorF& b) {
    return rmse(a, b, std::vector<bool>(a.c, true));
}

double tra(const std::string& original, const std::string& restored) {
    if (original.empty()) return restored.empty() ? 1.0 : 0.0;
    long match = 0;
    for (size_t i = 0; i < original.size(); ++i)
        if (i < restored.size() && restored[i] == original[i]) ++match;
    return static_cast<double>(match) / static_cast<double>(original.size());
}

double bpp(long payload_bits, int c, int h, int w) {
    if (c <= 0 || h <= 0 || w <= 0) throw ParamError("bpp: carrier dimensions must be positive");
    if (payload_bits < 0) throw ParamError("bpp: payload bits must be non-negative");
    return static_cast<double>(payload_bits) / (static_cast<double>(c) * h * w);
}

void aggregate(EvalReport& report) {
    if (report.per_image.empty()) return;
    double sp = 0, ss = 0, sr = 0, st = 0, sb = 0;
    long finite = 0;
    bool any_inf = false;
    for (const auto& e : report.per_image) {
        if (e.psnr_infinite) {
            any_inf = true;
        } else {
            sp += e.psnr;
            ++finite;
        }
        ss += e.ssim;
        sr += e.rmse;
        st += e.tra;
        sb += e.bpp;
    }
    const double n = static_cast<double>(report.per_image.size());
    report.psnr = finite > 0 ? sp / finite : 0.0;
    report.psnr_infinite = any_inf && finite == 0;
    report.ssim = ss / n;
    report.rmse = sr / n;
    report.tra = st / n;
    report.bpp = sb / n;
}

std::string to_json(const std::vector<EvalReport>& reports) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& r : reports) {
        nlohmann::json j;
        j["layout"] = r.layout;
        j["range"] = r.range == Range::u8 ? "u8" : "unit";
        j["psnr_db"] = r.psnr_infinite ? nlohmann::json(nullptr) : nlohmann::json(r.psnr);
        j["psnr_infinite"] = r.psnr_infinite;
        j["ssim"] = r.ssim;
        j["rmse"] = r.rmse;
        j["tra"] = r.tra;
        j["bpp"] = r.bpp;
        j["encode_seconds"] = r.encode_seconds;
        j["decode_seconds"] = r.decode_seconds;
        nlohmann::json per = nlohmann::json::array();
        for (const auto& e : r.per_image) {
            per.push_back({{"name", e.name},
                           {"psnr_db", e.psnr_infinite ? nlohmann::json(nullptr) : nlohmann::json(e.psnr)},
                           {"psnr_infinite", e.psnr_infinite},
                           {"ssim", e.ssim},
                           {"rmse", e.rmse},
                           {"tra", e.tra},
                           {"bpp", e.bpp}});
            if (e.perceptual) per.back()["perceptual"] = *e.perceptual;
        }
        j["per_image"] = per;
        out.push_back(j);
    }
    return out.dump(2);
}

std::string to_csv(const std::vector<EvalReport>& reports) {
    std::ostringstream os;
    os << "layout,psnr_db,ssim,rmse,tra,bpp\n";
    os.precision(6);
    os << std::fixed;
    for (const auto& r : reports) {
        os << r.layout << ",";
        if (r.psnr_infinite) os << "inf";
        else os << r.psnr;
        os << "," << r.ssim << "," << r.rmse << "," << r.tra << "," << r.bpp << "\n";
    }
    return os.str();
}

}  // namespace vizsteg::metrics
