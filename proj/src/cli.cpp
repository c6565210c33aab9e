#include "vizsteg/cli.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "vizsteg/dtoi.hpp"
#include "vizsteg/image.hpp"
#include "vizsteg/metrics.hpp"
#include "vizsteg/payload.hpp"
#include "vizsteg/stegnet.hpp"
#include "vizsteg/synth.hpp"
#include "vizsteg/trainer.hpp"

namespace vizsteg::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Shared helpers
// ---------------------------------------------------------------------------

bool lossless_extension(const std::string& path) {
    std::string ext = fs::path(path).extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".png";
}

TensorF load_carrier(const std::string& path) {
    ImageU8 img = load_png(path);
    TensorF t = to_float(img);
    if (t.c == 1) {
        TensorF rgb(3, t.h, t.w);
        for (int c = 0; c < 3; ++c) rgb.m.row(c) = t.m.row(0);
        return rgb;
    }
    return t;
}

// Reflect-pad to even dimensions; geometry is recoverable from the image size.
TensorF pad_even(const TensorF& t, int& pad_bottom, int& pad_right) {
    pad_bottom = t.h % 2;
    pad_right = t.w % 2;
    if (!pad_bottom && !pad_right) return t;
    TensorF out(t.c, t.h + pad_bottom, t.w + pad_right);
    for (int c = 0; c < t.c; ++c)
        for (int y = 0; y < out.h; ++y)
            for (int x = 0; x < out.w; ++x) {
                const int sy = y < t.h ? y : 2 * t.h - 2 - y;
                const int sx = x < t.w ? x : 2 * t.w - 2 - x;
                out.at(c, y, x) = t.at(c, sy, sx);
            }
    return out;
}

TensorF crop_to(const TensorF& t, int h, int w) {
    if (t.h == h && t.w == w) return t;
    TensorF out(t.c, h, w);
    for (int c = 0; c < t.c; ++c)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) out.at(c, y, x) = t.at(c, y, x);
    return out;
}

json load_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open file: " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw FormatError(path + " is not valid JSON: " + e.what());
    }
}

payload::ChartInfo parse_info_json(const json& j) {
    payload::ChartInfo info;
    if (j.contains("spec_text")) info.spec_text = j.at("spec_text").get<std::string>();
    if (j.contains("aux"))
        for (auto it = j.at("aux").begin(); it != j.at("aux").end(); ++it)
            info.aux[it.key()] = it.value().get<std::string>();
    return info;
}

struct ChartData {
    dtoi::DataKind kind = dtoi::DataKind::none;
    dtoi::ContinuousField field;
    dtoi::DiscreteSet set;
};

ChartData parse_data_json(const json& j) {
    ChartData d;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "continuous") {
        d.kind = dtoi::DataKind::continuous;
        for (const auto& pj : j.at("planes")) {
            const size_t rows = pj.size();
            if (rows == 0) throw FormatError("chart data: empty plane");
            const size_t cols = pj.at(0).size();
            Eigen::MatrixXd plane(rows, cols);
            for (size_t r = 0; r < rows; ++r) {
                if (pj.at(r).size() != cols) throw FormatError("chart data: ragged plane rows");
                for (size_t c = 0; c < cols; ++c) plane(r, c) = pj.at(r).at(c).get<double>();
            }
            d.field.planes.push_back(std::move(plane));
        }
    } else if (kind == "discrete") {
        d.kind = dtoi::DataKind::discrete;
        for (const auto& pj : j.at("points")) {
            if (pj.size() != 2) throw FormatError("chart data: points must be [x,y] pairs");
            d.set.points.push_back({pj.at(0).get<double>(), pj.at(1).get<double>()});
        }
    } else {
        throw FormatError("chart data: kind must be 'continuous' or 'discrete'");
    }
    return d;
}

// Payload-bit accounting: 8 bits per original data pixel (interpolated and
// padded pixels excluded) plus 8 bits per serialized metadata character.
long payload_bits(const dtoi::DataImagePlan& plan, const std::string& blob) {
    long bits = 8L * static_cast<long>(blob.size());
    for (const auto& pp : plan.planes) bits += 8L * pp.place.h * pp.place.w;
    for (const auto& pt : plan.parts) bits += 8L * 2L * pt.n;
    return bits;
}

TensorF assemble_secrets(const dtoi::DataImageSet& data, const payload::QrImage& qrimg, float m_qr,
                         int h, int w) {
    TensorF secrets(stegnet::kSecretChannels, h, w);
    for (size_t c = 0; c < data.channels.size() && c < 3; ++c) {
        const auto& ch = data.channels[c];
        for (int y = 0; y < std::min<int>(h, ch.rows()); ++y)
            for (int x = 0; x < std::min<int>(w, ch.cols()); ++x)
                secrets.at(static_cast<int>(c), y, x) = static_cast<float>(ch(y, x));
    }
    for (int y = 0; y < std::min<int>(h, qrimg.pixels.rows()); ++y)
        for (int x = 0; x < std::min<int>(w, qrimg.pixels.cols()); ++x)
            secrets.at(3, y, x) = qrimg.pixels(y, x) * m_qr;
    return secrets;
}

int report_error(const std::exception& e, int code) {
    std::cerr << "error: " << e.what() << "\n";
    return code;
}

}  // namespace

// ---------------------------------------------------------------------------
// encode
// ---------------------------------------------------------------------------

int cmd_encode(const EncodeOptions& opt) {
    try {
        if (!lossless_extension(opt.out_path)) {
            std::cerr << "error: refusing lossy or unknown output format '"
                      << fs::path(opt.out_path).extension().string()
                      << "'; encoded images survive only lossless storage (use .png)\n";
            return kExitUsage;
        }
        TensorF carrier = load_carrier(opt.carrier_path);
        const int orig_h = carrier.h, orig_w = carrier.w;
        int pad_b = 0, pad_r = 0;
        carrier = pad_even(carrier, pad_b, pad_r);

        payload::ChartInfo info = parse_info_json(load_json_file(opt.info_path));
        ChartData data;
        if (!opt.data_path.empty()) data = parse_data_json(load_json_file(opt.data_path));

        dtoi::DataImageSet images;
        dtoi::DataImagePlan plan;
        if (data.kind == dtoi::DataKind::continuous) {
            std::tie(images, plan) =
                dtoi::dtoi_continuous(data.field, carrier.h, carrier.w, opt.max_data_channels);
        } else if (data.kind == dtoi::DataKind::discrete) {
            std::tie(images, plan) = dtoi::dtoi_discrete_auto(data.set, carrier.h, carrier.w,
                                                              opt.interp_k, opt.max_data_channels);
        }
        plan.pad_bottom = pad_b;
        plan.pad_right = pad_r;
        dtoi::quantize_channels(images);

        const std::string blob = payload::serialize_metadata(info, plan);
        payload::QrImage qrimg = payload::encode_qr_payload(blob, carrier.h, carrier.w);

        stegnet::ModelF model = stegnet::load_checkpoint(opt.model_path);
        TensorF secrets = assemble_secrets(images, qrimg, model.cfg.m_qr, carrier.h, carrier.w);

        auto result = stegnet::conceal(model, carrier, secrets);
        TensorF out = crop_to(result.encoded, orig_h, orig_w);
        save_png(opt.out_path, to_u8(out));

        const long bits = payload_bits(plan, blob);
        const double bpp = metrics::bpp(bits, 3, orig_h, orig_w);
        int data_channels = plan.channels;
        std::cout << "encoded " << opt.out_path << "\n"
                  << "  carrier: " << orig_w << "x" << orig_h << "\n"
                  << "  data channels: " << data_channels << ", qr symbols: " << qrimg.symbols
                  << " (scale " << qrimg.scale << ")\n"
                  << "  payload: " << bits << " bits, bpp " << bpp << "\n";
        return kExitOk;
    } catch (const CapacityError& e) {
        return report_error(e, kExitCapacity);
    } catch (const std::exception& e) {
        return report_error(e, kExitUsage);
    }
}

// ---------------------------------------------------------------------------
// decode
// ---------------------------------------------------------------------------

int cmd_decode(const DecodeOptions& opt) {
    try {
        TensorF encoded = load_carrier(opt.image_path);
        int pad_b = 0, pad_r = 0;
        encoded = pad_even(encoded, pad_b, pad_r);

        stegnet::ModelF model = stegnet::load_checkpoint(opt.model_path);
        auto revealed = stegnet::reveal(model, encoded);

        fs::create_directories(opt.out_dir);
        const fs::path dir(opt.out_dir);

        // QR channel -> metadata blob. Without it the plan (and with it every
        // de-normalization constant) is lost.
        payload::GrayF qr_chan(encoded.h, encoded.w);
        for (int y = 0; y < encoded.h; ++y)
            for (int x = 0; x < encoded.w; ++x) qr_chan(y, x) = revealed.secrets.at(3, y, x);
        qr_chan = payload::unscale_qr(qr_chan, model.cfg.m_qr);

        std::string blob;
        payload::ChartInfo info;
        dtoi::DataImagePlan plan;
        try {
            blob = payload::decode_qr_payload(qr_chan);
            std::tie(info, plan) = payload::parse_metadata(blob);
        } catch (const std::exception& e) {
            std::cerr << "error: chart metadata unrecoverable: " << e.what() << "\n";
            return kExitNoPayload;
        }
        const bool checksum_ok = payload::parse_checksum_ok(blob);

        json manifest;
        manifest["info_checksum_ok"] = checksum_ok;
        manifest["plan"] = {{"kind", plan.kind == dtoi::DataKind::none
                                         ? "none"
                                         : (plan.kind == dtoi::DataKind::continuous ? "continuous"
                                                                                    : "discrete")},
                            {"channels", plan.channels},
                            {"k", plan.k_interp},
                            {"planes", plan.planes.size()},
                            {"parts", plan.parts.size()},
                            {"pad_bottom", plan.pad_bottom},
                            {"pad_right", plan.pad_right}};

        {
            json ij;
            ij["spec_text"] = info.spec_text;
            json aux = json::object();
            for (const auto& [k, v] : info.aux) aux[k] = v;
            ij["aux"] = aux;
            std::ofstream out(dir / "chart_info.json", std::ios::binary);
            out << ij.dump(2) << "\n";
            manifest["files"].push_back("chart_info.json");
        }

        // Restored data channels: snap back onto the 8-bit grid the encoder
        // used, then invert the DTOI transform.
        dtoi::DataImageSet restored;
        for (int c = 0; c < plan.channels && c < 3; ++c) {
            Eigen::MatrixXd ch(encoded.h, encoded.w);
            for (int y = 0; y < encoded.h; ++y)
                for (int x = 0; x < encoded.w; ++x)
                    ch(y, x) = std::round(clamp01(revealed.secrets.at(c, y, x)) * 255.0) / 255.0;
            restored.channels.push_back(std::move(ch));

            ImageU8 png(1, encoded.h, encoded.w);
            for (int y = 0; y < encoded.h; ++y)
                for (int x = 0; x < encoded.w; ++x)
                    png.at(y, x, 0) = static_cast<uint8_t>(
                        std::lround(restored.channels.back()(y, x) * 255.0));
            const std::string name = "data_image_" + std::to_string(c) + ".png";
            save_png((dir / name).string(), png);
            manifest["files"].push_back(name);
        }

        try {
            json dj;
            if (plan.kind == dtoi::DataKind::continuous) {
                dtoi::ContinuousField field = dtoi::inverse_dtoi_continuous(restored, plan);
                dj["kind"] = "continuous";
                json planes = json::array();
                for (const auto& p : field.planes) {
                    json rows = json::array();
                    for (Eigen::Index r = 0; r < p.rows(); ++r) {
                        json row = json::array();
                        for (Eigen::Index c = 0; c < p.cols(); ++c) row.push_back(p(r, c));
                        rows.push_back(std::move(row));
                    }
                    planes.push_back(std::move(rows));
                }
                dj["planes"] = planes;
            } else if (plan.kind == dtoi::DataKind::discrete) {
                dtoi::DiscreteSet set = dtoi::inverse_dtoi_discrete(restored, plan);
                dj["kind"] = "discrete";
                json pts = json::array();
                for (const auto& p : set.points) pts.push_back({p.x, p.y});
                dj["points"] = pts;
            }
            if (plan.kind != dtoi::DataKind::none) {
                std::ofstream out(dir / "chart_data.json", std::ios::binary);
                out << dj.dump() << "\n";
                manifest["files"].push_back("chart_data.json");
                manifest["data_restored"] = true;
            } else {
                manifest["data_restored"] = false;
            }
        } catch (const std::exception& e) {
            // Partial recovery: the chart information is already on disk.
            manifest["data_restored"] = false;
            manifest["data_error"] = e.what();
        }

        std::ofstream mout(dir / "manifest.json", std::ios::binary);
        mout << manifest.dump(2) << "\n";
        std::cout << "decoded into " << opt.out_dir << " (checksum "
                  << (checksum_ok ? "ok" : "MISMATCH") << ")\n";
        return kExitOk;
    } catch (const std::exception& e) {
        return report_error(e, kExitUsage);
    }
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

int cmd_train(const TrainOptions& opt) {
    try {
        trainer::TrainConfig cfg = trainer::load_config(opt.config_path);
        if (opt.seed_override != 0) cfg.seed = opt.seed_override;
        trainer::train(cfg, opt.resume_path);
        return kExitOk;
    } catch (const FormatError& e) {
        return report_error(e, kExitUsage);
    } catch (const std::exception& e) {
        return report_error(e, kExitUsage);
    }
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

namespace {

struct EvalCase {
    TensorF carrier;
    std::string name;
};

}  // namespace

int cmd_eval(const EvalOptions& opt) {
    try {
        stegnet::ModelF model = stegnet::load_checkpoint(opt.model_path);
        std::vector<EvalCase> cases;
        if (!opt.corpus_dir.empty() && fs::is_directory(opt.corpus_dir)) {
            std::vector<std::string> files;
            for (const auto& e : fs::directory_iterator(opt.corpus_dir))
                if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path().string());
            std::sort(files.begin(), files.end());
            for (const auto& f : files) {
                if (static_cast<int>(cases.size()) >= opt.max_images) break;
                TensorF t = load_carrier(f);
                if (t.h < 384 || t.w < 384) continue;  // needs room for a QR symbol
                int pb = 0, pr = 0;
                cases.push_back({pad_even(t, pb, pr), fs::path(f).filename().string()});
            }
        }
        if (cases.empty()) {
            for (int i = 0; i < opt.max_images; ++i)
                cases.push_back({synth::synth_chart(derive_seed(opt.seed, 40, i), 512, 512),
                                 "synthetic_" + std::to_string(i)});
        }

        const char* layouts[] = {"low", "medium", "maximum"};
        std::vector<metrics::EvalReport> reports;
        for (int li = 0; li < 3; ++li) {
            metrics::EvalReport rep;
            rep.layout = layouts[li];
            rep.range = metrics::Range::u8;
            double enc_s = 0, dec_s = 0;
            for (size_t ci = 0; ci < cases.size(); ++ci) {
                const TensorF& carrier = cases[ci].carrier;
                const uint64_t cseed = derive_seed(opt.seed, 41 + li, ci);

                dtoi::ContinuousField field;
                if (li == 0) {
                    field.planes.push_back(synth::perlin(cseed, carrier.h, carrier.w));
                } else if (li == 1) {
                    field = synth::synth_vector_field(cseed, carrier.h, carrier.w);
                } else {
                    for (int p = 0; p < 3; ++p)
                        field.planes.push_back(synth::perlin(derive_seed(cseed, 5, p), carrier.h, carrier.w));
                }
                payload::ChartInfo info;
                const long cap = payload::max_text_bytes(carrier.h, carrier.w);
                const int text_len =
                    li == 0 ? 200 : (li == 1 ? 1000 : static_cast<int>(std::min<long>(cap, 2400)));
                info.spec_text = synth::random_string(derive_seed(cseed, 6, 0), text_len, text_len);

                auto [images, plan] = dtoi::dtoi_continuous(field, carrier.h, carrier.w);
                dtoi::quantize_channels(images);
                const std::string blob = payload::serialize_metadata(info, plan);
                payload::QrImage qrimg = payload::encode_qr_payload(blob, carrier.h, carrier.w);
                TensorF secrets = assemble_secrets(images, qrimg, model.cfg.m_qr, carrier.h, carrier.w);

                const auto t0 = std::chrono::steady_clock::now();
                auto conc = stegnet::conceal(model, carrier, secrets);
                const auto t1 = std::chrono::steady_clock::now();
                auto rev = stegnet::reveal(model, conc.encoded);
                const auto t2 = std::chrono::steady_clock::now();
                enc_s += std::chrono::duration<double>(t1 - t0).count();
                dec_s += std::chrono::duration<double>(t2 - t1).count();

                metrics::ImageEval ie;
                ie.name = cases[ci].name;
                const double p = metrics::psnr(carrier, conc.encoded, metrics::Range::u8);
                ie.psnr_infinite = std::isinf(p);
                ie.psnr = ie.psnr_infinite ? 0 : p;
                ie.ssim = metrics::ssim(carrier, conc.encoded, metrics::Range::u8);

                std::vector<bool> populated(3, false);
                for (int c = 0; c < plan.channels && c < 3; ++c) populated[c] = true;
                TensorF sec_data = slice_channels(secrets, 0, 3);
                TensorF res_data = slice_channels(rev.secrets, 0, 3);
                ie.rmse = metrics::rmse(sec_data, res_data, populated);

                payload::GrayF qr_chan(carrier.h, carrier.w);
                for (int y = 0; y < carrier.h; ++y)
                    for (int x = 0; x < carrier.w; ++x) qr_chan(y, x) = rev.secrets.at(3, y, x);
                std::string text;
                try {
                    const std::string rblob =
                        payload::decode_qr_payload(payload::unscale_qr(qr_chan, model.cfg.m_qr));
                    text = payload::parse_metadata(rblob).first.spec_text;
                } catch (const std::exception&) {
                    text.clear();
                }
                ie.tra = metrics::tra(info.spec_text, text);
                ie.bpp = metrics::bpp(payload_bits(plan, blob), 3, carrier.h, carrier.w);
                rep.per_image.push_back(std::move(ie));
            }
            rep.encode_seconds = enc_s / cases.size();
            rep.decode_seconds = dec_s / cases.size();
            metrics::aggregate(rep);
            reports.push_back(std::move(rep));
        }

        const std::string js = metrics::to_json(reports);
        std::ofstream jout(opt.report_path, std::ios::binary);
        if (!jout) throw Error("cannot write report: " + opt.report_path);
        jout << js << "\n";
        fs::path csv = fs::path(opt.report_path).replace_extension(".csv");
        std::ofstream cout_(csv, std::ios::binary);
        cout_ << metrics::to_csv(reports);
        std::cout << metrics::to_csv(reports);
        return kExitOk;
    } catch (const std::exception& e) {
        return report_error(e, kExitUsage);
    }
}

}  // namespace vizsteg::cli
