#include "vizsteg/payload.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <vector>

#include "vizsteg/qr.hpp"

namespace vizsteg::payload {

namespace {

constexpr int kMod = qr::kModules;
constexpr long kChunkHeader = 4;  // u16 index + u16 total, big-endian
constexpr long kMultiChunk = qr::kByteCapacity - kChunkHeader;

// ---------------------------------------------------------------------------
// Metadata blob
// ---------------------------------------------------------------------------

void require_utf8(const std::string& s, const char* what) {
    size_t i = 0;
    while (i < s.size()) {
        const unsigned char b = s[i];
        int len = 0;
        if (b < 0x80)
            len = 1;
        else if ((b >> 5) == 0x6)
            len = 2;
        else if ((b >> 4) == 0xE)
            len = 3;
        else if ((b >> 3) == 0x1E)
            len = 4;
        else
            throw FormatError(std::string(what) + ": byte at index " + std::to_string(i) +
                              " is not valid UTF-8");
        if (i + len > s.size())
            throw FormatError(std::string(what) + ": truncated UTF-8 sequence at index " +
                              std::to_string(i));
        for (int k = 1; k < len; ++k)
            if ((static_cast<unsigned char>(s[i + k]) >> 6) != 0x2)
                throw FormatError(std::string(what) + ": byte at index " + std::to_string(i + k) +
                                  " is not valid UTF-8");
        i += len;
    }
}

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void emit_str(std::string& out, char tag, const std::string& s) {
    out += tag;
    out += ':';
    out += std::to_string(s.size());
    out += ':';
    out += s;
    out += '\n';
}

struct Cursor {
    const std::string& s;
    size_t pos = 0;

    [[noreturn]] void fail(const std::string& why) const {
        throw FormatError("metadata blob parse error at offset " + std::to_string(pos) + ": " + why);
    }

    std::string line() {
        const size_t nl = s.find('\n', pos);
        if (nl == std::string::npos) fail("missing newline");
        std::string out = s.substr(pos, nl - pos);
        pos = nl + 1;
        return out;
    }

    std::string tagged_str(char tag) {
        if (pos + 2 > s.size() || s[pos] != tag || s[pos + 1] != ':') fail(std::string("expected ") + tag);
        pos += 2;
        size_t len = 0;
        while (pos < s.size() && s[pos] != ':') {
            if (!isdigit(static_cast<unsigned char>(s[pos]))) fail("bad length prefix");
            len = len * 10 + (s[pos] - '0');
            ++pos;
        }
        if (pos >= s.size()) fail("bad length prefix");
        ++pos;  // ':'
        if (pos + len + 1 > s.size() || s[pos + len] != '\n') fail("string body truncated");
        std::string out = s.substr(pos, len);
        pos += len + 1;
        return out;
    }

    bool done() const { return pos >= s.size(); }
};

std::vector<std::string> split_fields(const std::string& line, char sep) {
    std::vector<std::string> out;
    size_t start = 0;
    while (true) {
        const size_t p = line.find(sep, start);
        if (p == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, p - start));
        start = p + 1;
    }
    return out;
}

double parse_double(const std::string& f) {
    char* end = nullptr;
    const double v = std::strtod(f.c_str(), &end);
    if (end == f.c_str() || *end != '\0') throw FormatError("metadata blob: bad float '" + f + "'");
    return v;
}

long parse_long(const std::string& f) {
    char* end = nullptr;
    const long v = std::strtol(f.c_str(), &end, 10);
    if (end == f.c_str() || *end != '\0') throw FormatError("metadata blob: bad integer '" + f + "'");
    return v;
}

std::string place_str(const dtoi::Placement& p) {
    return std::to_string(p.channel) + "," + std::to_string(p.row0) + "," + std::to_string(p.col0) +
           "," + std::to_string(p.h) + "," + std::to_string(p.w);
}

dtoi::Placement parse_place(const std::vector<std::string>& f, size_t at) {
    dtoi::Placement p;
    p.channel = static_cast<int>(parse_long(f.at(at)));
    p.row0 = static_cast<int>(parse_long(f.at(at + 1)));
    p.col0 = static_cast<int>(parse_long(f.at(at + 2)));
    p.h = static_cast<int>(parse_long(f.at(at + 3)));
    p.w = static_cast<int>(parse_long(f.at(at + 4)));
    return p;
}

std::string norm_str(const dtoi::NormRange& n) {
    return fmt_double(n.lo) + "," + fmt_double(n.hi) + "," + (n.degenerate ? "1" : "0");
}

dtoi::NormRange parse_norm(const std::vector<std::string>& f, size_t at) {
    dtoi::NormRange n;
    n.lo = parse_double(f.at(at));
    n.hi = parse_double(f.at(at + 1));
    n.degenerate = parse_long(f.at(at + 2)) != 0;
    return n;
}

}  // namespace

uint32_t info_checksum(const ChartInfo& info) { return crc32(info.spec_text); }

std::string serialize_metadata(const ChartInfo& info, const dtoi::DataImagePlan& plan) {
    require_utf8(info.spec_text, "chart info text");
    for (const auto& [k, v] : info.aux) {
        require_utf8(k, "chart info aux key");
        require_utf8(v, "chart info aux value");
    }
    for (const auto& pp : plan.planes) {
        if (!std::isfinite(pp.norm.lo) || !std::isfinite(pp.norm.hi))
            throw ParamError("plan normalization constants must be finite");
    }
    for (const auto& pt : plan.parts) {
        if (!std::isfinite(pt.nx.lo) || !std::isfinite(pt.nx.hi) || !std::isfinite(pt.ny.lo) ||
            !std::isfinite(pt.ny.hi))
            throw ParamError("plan normalization constants must be finite");
    }

    std::string out = "VMB1\n";
    emit_str(out, 'I', info.spec_text);
    out += "A:" + std::to_string(info.aux.size()) + "\n";
    for (const auto& [k, v] : info.aux) {
        emit_str(out, 'K', k);
        emit_str(out, 'V', v);
    }
    char crc[16];
    std::snprintf(crc, sizeof(crc), "%08" PRIx32, info_checksum(info));
    out += std::string("C:") + crc + "\n";

    switch (plan.kind) {
        case dtoi::DataKind::none:
            out += "P:n\n";
            break;
        case dtoi::DataKind::continuous:
            out += "P:c:" + std::to_string(plan.planes.size()) + ":" + std::to_string(plan.channels) + "\n";
            for (const auto& pp : plan.planes)
                out += "L:" + norm_str(pp.norm) + "," + place_str(pp.place) + "\n";
            break;
        case dtoi::DataKind::discrete:
            out += "P:d:" + std::to_string(plan.k_interp) + ":" + std::to_string(plan.parts.size()) +
                   ":" + std::to_string(plan.channels) + "\n";
            for (const auto& pt : plan.parts)
                out += "T:" + std::to_string(pt.n) + "," + std::to_string(pt.hs) + "," +
                       std::to_string(pt.ws) + "," + std::to_string(pt.pad) + "," + fmt_double(pt.pad_x) +
                       "," + fmt_double(pt.pad_y) + "," + norm_str(pt.nx) + "," + norm_str(pt.ny) + "," +
                       place_str(pt.x_place) + "," + place_str(pt.y_place) + "\n";
            break;
    }
    out += "G:" + std::to_string(plan.pad_bottom) + "," + std::to_string(plan.pad_right) + "\n";
    out += "E\n";
    return out;
}

std::pair<ChartInfo, dtoi::DataImagePlan> parse_metadata(const std::string& blob) {
    Cursor cur{blob};
    if (cur.line() != "VMB1") cur.fail("bad magic");
    ChartInfo info;
    info.spec_text = cur.tagged_str('I');

    std::string aline = cur.line();
    if (aline.rfind("A:", 0) != 0) cur.fail("expected aux count");
    const long acount = parse_long(aline.substr(2));
    for (long i = 0; i < acount; ++i) {
        std::string k = cur.tagged_str('K');
        std::string v = cur.tagged_str('V');
        info.aux.emplace(std::move(k), std::move(v));
    }

    std::string cline = cur.line();
    if (cline.rfind("C:", 0) != 0 || cline.size() != 10) cur.fail("expected checksum");

    dtoi::DataImagePlan plan;
    std::string pline = cur.line();
    if (pline.rfind("P:", 0) != 0) cur.fail("expected plan header");
    const auto pf = split_fields(pline.substr(2), ':');
    if (pf.at(0) == "n") {
        plan.kind = dtoi::DataKind::none;
    } else if (pf.at(0) == "c") {
        plan.kind = dtoi::DataKind::continuous;
        const long n = parse_long(pf.at(1));
        plan.channels = static_cast<int>(parse_long(pf.at(2)));
        for (long i = 0; i < n; ++i) {
            std::string l = cur.line();
            if (l.rfind("L:", 0) != 0) cur.fail("expected plane record");
            const auto f = split_fields(l.substr(2), ',');
            if (f.size() != 8) cur.fail("plane record has wrong arity");
            dtoi::PlanePlan pp;
            pp.norm = parse_norm(f, 0);
            pp.place = parse_place(f, 3);
            plan.planes.push_back(pp);
        }
    } else if (pf.at(0) == "d") {
        plan.kind = dtoi::DataKind::discrete;
        plan.k_interp = static_cast<int>(parse_long(pf.at(1)));
        const long n = parse_long(pf.at(2));
        plan.channels = static_cast<int>(parse_long(pf.at(3)));
        for (long i = 0; i < n; ++i) {
            std::string l = cur.line();
            if (l.rfind("T:", 0) != 0) cur.fail("expected part record");
            const auto f = split_fields(l.substr(2), ',');
            if (f.size() != 22) cur.fail("part record has wrong arity");
            dtoi::PartPlan pt;
            pt.n = parse_long(f[0]);
            pt.hs = static_cast<int>(parse_long(f[1]));
            pt.ws = static_cast<int>(parse_long(f[2]));
            pt.pad = parse_long(f[3]);
            pt.pad_x = parse_double(f[4]);
            pt.pad_y = parse_double(f[5]);
            pt.nx = parse_norm(f, 6);
            pt.ny = parse_norm(f, 9);
            pt.x_place = parse_place(f, 12);
            pt.y_place = parse_place(f, 17);
            plan.parts.push_back(pt);
        }
    } else {
        cur.fail("unknown plan kind");
    }

    std::string gline = cur.line();
    if (gline.rfind("G:", 0) != 0) cur.fail("expected pad record");
    const auto gf = split_fields(gline.substr(2), ',');
    plan.pad_bottom = static_cast<int>(parse_long(gf.at(0)));
    plan.pad_right = static_cast<int>(parse_long(gf.at(1)));
    if (cur.line() != "E") cur.fail("expected end marker");
    return {std::move(info), std::move(plan)};
}

bool parse_checksum_ok(const std::string& blob) {
    auto [info, plan] = parse_metadata(blob);
    const size_t cpos = blob.find("\nC:");
    if (cpos == std::string::npos) return false;
    const std::string hex = blob.substr(cpos + 3, 8);
    char expect[16];
    std::snprintf(expect, sizeof(expect), "%08" PRIx32, info_checksum(info));
    return hex == expect;
}

// ---------------------------------------------------------------------------
// QR payload
// ---------------------------------------------------------------------------

int max_symbols(int carrier_h, int carrier_w) { return (carrier_h / kMod) * (carrier_w / kMod); }

long max_text_bytes(int carrier_h, int carrier_w) {
    const int n = max_symbols(carrier_h, carrier_w);
    if (n <= 0) return 0;
    if (n == 1) return qr::kByteCapacity;
    return static_cast<long>(n) * kMultiChunk;
}

QrImage encode_qr_payload(const std::string& text, int carrier_h, int carrier_w) {
    // Chunking: a text that fits one symbol is stored headerless; otherwise
    // every chunk carries a 2-byte index + 2-byte total prefix.
    std::vector<std::vector<uint8_t>> chunks;
    if (static_cast<long>(text.size()) <= qr::kByteCapacity) {
        chunks.emplace_back(text.begin(), text.end());
    } else {
        const long total = (static_cast<long>(text.size()) + kMultiChunk - 1) / kMultiChunk;
        if (total > 0xFFFF) throw CapacityError("payload needs more than 65535 QR symbols");
        for (long i = 0; i < total; ++i) {
            std::vector<uint8_t> c;
            c.push_back(static_cast<uint8_t>(i >> 8));
            c.push_back(static_cast<uint8_t>(i & 0xFF));
            c.push_back(static_cast<uint8_t>(total >> 8));
            c.push_back(static_cast<uint8_t>(total & 0xFF));
            const long from = i * kMultiChunk;
            const long len = std::min<long>(kMultiChunk, static_cast<long>(text.size()) - from);
            c.insert(c.end(), text.begin() + from, text.begin() + from + len);
            chunks.push_back(std::move(c));
        }
    }

    const int need = static_cast<int>(chunks.size());
    const int avail = max_symbols(carrier_h, carrier_w);
    if (need > avail)
        throw CapacityError("chart information needs " + std::to_string(need) +
                            " QR symbols but the carrier fits only " + std::to_string(avail));

    // Largest module scale admitting a grid, then the most compact grid.
    int scale = 1, rows = 0, cols = 0;
    for (int s = std::min(carrier_h, carrier_w) / kMod; s >= 1; --s) {
        const int R = carrier_h / (kMod * s), C = carrier_w / (kMod * s);
        if (static_cast<long>(R) * C < need) continue;
        long best = -1;
        for (int c = 1; c <= C; ++c) {
            const int r = (need + c - 1) / c;
            if (r > R) continue;
            const long key = static_cast<long>(r) * c * 1024 + std::abs(r - c) * 4 + r;
            if (best < 0 || key < best) {
                best = key;
                rows = r;
                cols = c;
            }
        }
        if (best >= 0) {
            scale = s;
            break;
        }
    }
    if (rows == 0) throw CapacityError("carrier too small for any QR symbol");

    QrImage img;
    img.scale = scale;
    img.symbol_px = kMod * scale;
    img.grid_rows = rows;
    img.grid_cols = cols;
    img.symbols = need;
    img.pixels = GrayF::Zero(static_cast<Eigen::Index>(rows) * img.symbol_px,
                             static_cast<Eigen::Index>(cols) * img.symbol_px);
    for (int k = 0; k < need; ++k) {
        const auto mat = qr::encode_symbol(chunks[k]);
        const int r0 = (k / cols) * img.symbol_px, c0 = (k % cols) * img.symbol_px;
        for (int r = 0; r < kMod; ++r)
            for (int c = 0; c < kMod; ++c) {
                if (!mat(r, c)) continue;
                for (int dy = 0; dy < scale; ++dy)
                    for (int dx = 0; dx < scale; ++dx)
                        img.pixels(r0 + r * scale + dy, c0 + c * scale + dx) = 1.0f;
            }
    }
    return img;
}

namespace {

// Otsu threshold over a real-valued image (256-bin histogram).
float otsu_threshold(const GrayF& g) {
    const float lo = g.minCoeff(), hi = g.maxCoeff();
    if (!(hi > lo)) return lo;  // constant image: everything one class
    std::array<long, 256> hist{};
    const float scale = 255.0f / (hi - lo);
    for (Eigen::Index i = 0; i < g.size(); ++i) {
        int bin = static_cast<int>((g.data()[i] - lo) * scale);
        bin = std::clamp(bin, 0, 255);
        ++hist[bin];
    }
    const double total = static_cast<double>(g.size());
    double sum = 0;
    for (int i = 0; i < 256; ++i) sum += static_cast<double>(i) * hist[i];
    double sum_b = 0, w_b = 0, best_var = -1;
    int best_bin = 127;
    for (int i = 0; i < 256; ++i) {
        w_b += hist[i];
        if (w_b == 0) continue;
        const double w_f = total - w_b;
        if (w_f == 0) break;
        sum_b += static_cast<double>(i) * hist[i];
        const double m_b = sum_b / w_b, m_f = (sum - sum_b) / w_f;
        const double var = w_b * w_f * (m_b - m_f) * (m_b - m_f);
        if (var > best_var) {
            best_var = var;
            best_bin = i;
        }
    }
    return lo + (best_bin + 0.5f) / scale;
}

qr::ModuleMatrix sample_cell(const GrayF& gray, int r0, int c0, int scale, float thresh) {
    qr::ModuleMatrix mat(kMod, kMod);
    for (int r = 0; r < kMod; ++r)
        for (int c = 0; c < kMod; ++c) {
            float acc = 0;
            for (int dy = 0; dy < scale; ++dy)
                for (int dx = 0; dx < scale; ++dx) acc += gray(r0 + r * scale + dy, c0 + c * scale + dx);
            mat(r, c) = (acc / (scale * scale) > thresh) ? 1 : 0;
        }
    return mat;
}

}  // namespace

std::string decode_qr_payload(const GrayF& gray) {
    if (gray.rows() < kMod || gray.cols() < kMod)
        throw DecodeError("image smaller than one QR symbol");
    const float thresh = otsu_threshold(gray);

    const int smax = static_cast<int>(std::min(gray.rows(), gray.cols())) / kMod;
    for (int scale = smax; scale >= 1; --scale) {
        const int spx = kMod * scale;
        const int R = static_cast<int>(gray.rows()) / spx, C = static_cast<int>(gray.cols()) / spx;
        if (!qr::looks_like_symbol(sample_cell(gray, 0, 0, scale, thresh))) continue;

        // Presence map over the cell grid.
        std::vector<std::pair<int, int>> cells;
        for (int r = 0; r < R; ++r)
            for (int c = 0; c < C; ++c)
                if (qr::looks_like_symbol(sample_cell(gray, r * spx, c * spx, scale, thresh)))
                    cells.emplace_back(r, c);

        if (cells.size() == 1) {
            const auto bytes = qr::decode_symbol(
                sample_cell(gray, cells[0].first * spx, cells[0].second * spx, scale, thresh));
            return std::string(bytes.begin(), bytes.end());
        }

        // Multi-symbol payload: every chunk carries its index header.
        std::vector<std::string> parts;
        std::vector<bool> seen;
        long total = -1;
        for (const auto& [r, c] : cells) {
            std::vector<uint8_t> bytes;
            try {
                bytes = qr::decode_symbol(sample_cell(gray, r * spx, c * spx, scale, thresh));
            } catch (const DecodeError& e) {
                throw DecodeError("QR symbol at grid cell (" + std::to_string(r) + "," +
                                  std::to_string(c) + ") undecodable: " + e.what());
            }
            if (static_cast<long>(bytes.size()) < kChunkHeader)
                throw DecodeError("QR symbol at grid cell (" + std::to_string(r) + "," +
                                  std::to_string(c) + ") lacks a chunk header");
            const long idx = (bytes[0] << 8) | bytes[1];
            const long tot = (bytes[2] << 8) | bytes[3];
            if (total < 0) {
                total = tot;
                parts.assign(total, std::string());
                seen.assign(total, false);
            }
            if (tot != total || idx >= total || seen[idx])
                throw DecodeError("inconsistent chunk header in QR symbol at grid cell (" +
                                  std::to_string(r) + "," + std::to_string(c) + ")");
            parts[idx].assign(bytes.begin() + kChunkHeader, bytes.end());
            seen[idx] = true;
        }
        std::string text;
        for (long i = 0; i < total; ++i) {
            if (!seen[i])
                throw DecodeError("QR chunk " + std::to_string(i) + " of " + std::to_string(total) +
                                  " missing from the stitched image");
            text += parts[i];
        }
        return text;
    }
    throw DecodeError("no QR symbols found in the image");
}

GrayF scale_qr(const GrayF& img, double m_qr) {
    if (!(m_qr > 0)) throw ParamError("m_qr must be positive");
    return img * static_cast<float>(m_qr);
}

GrayF unscale_qr(const GrayF& img, double m_qr) {
    if (!(m_qr > 0)) throw ParamError("m_qr must be positive");
    return img / static_cast<float>(m_qr);
}

}  // namespace vizsteg::payload
