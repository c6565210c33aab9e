#pragma once

#include <map>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "vizsteg/dtoi.hpp"

namespace vizsteg::payload {

using GrayF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Chart information: the source/spec text plus auxiliary key-value entries.
// Serialization is deterministic (ordered map, fixed grammar).
struct ChartInfo {
    std::string spec_text;
    std::map<std::string, std::string> aux;

    bool operator==(const ChartInfo& o) const = default;
};

// Stitched grid of Version 40-H symbols. pixels holds {0,1}, 1 = dark module;
// unused trailing cells stay light.
struct QrImage {
    GrayF pixels;
    int grid_rows = 0, grid_cols = 0;
    int symbol_px = 0;  // scale * 177
    int scale = 1;
    int symbols = 0;  // rendered symbol count (<= grid_rows * grid_cols)
};

// ---------------------------------------------------------------------------
// Metadata blob: chart info + everything needed to invert the DTOI transform.
// Grammar documented in docs/payload-format.md. Round-trips exactly,
// including float constants (17 significant digits).
// ---------------------------------------------------------------------------

std::string serialize_metadata(const ChartInfo& info, const dtoi::DataImagePlan& plan);
std::pair<ChartInfo, dtoi::DataImagePlan> parse_metadata(const std::string& blob);

// CRC recorded inside the blob; decode reports whether it still matches.
uint32_t info_checksum(const ChartInfo& info);
bool parse_checksum_ok(const std::string& blob);

// ---------------------------------------------------------------------------
// QR payload
// ---------------------------------------------------------------------------

// Splits text into symbol chunks, renders and stitches them row-major at the
// largest module scale that fits the carrier.
QrImage encode_qr_payload(const std::string& text, int carrier_h, int carrier_w);

// Recovers the text from a (possibly noisy, real-valued) grayscale image:
// Otsu binarization, grid/scale search, per-symbol decode.
std::string decode_qr_payload(const GrayF& gray);
inline std::string decode_qr_payload(const QrImage& img) { return decode_qr_payload(img.pixels); }

// Pixel-wise scaling by the QR damping coefficient (m_qr > 0).
GrayF scale_qr(const GrayF& img, double m_qr);
GrayF unscale_qr(const GrayF& img, double m_qr);

// Largest symbol count a carrier can hold (at module scale 1).
int max_symbols(int carrier_h, int carrier_w);

// Text capacity in bytes for a carrier (headerless single symbol, 4-byte
// chunk headers once several symbols are needed).
long max_text_bytes(int carrier_h, int carrier_w);

}  // namespace vizsteg::payload
