#include "vizsteg/qr.hpp"

#include <algorithm>
#include <array>
#include <cassert>
#include <cstring>
#include <string>

namespace vizsteg::qr {

namespace {

constexpr int N = kModules;

// ---------------------------------------------------------------------------
// GF(256) arithmetic, primitive polynomial x^8 + x^4 + x^3 + x^2 + 1 (0x11D).
// ---------------------------------------------------------------------------

struct Gf {
    std::array<uint8_t, 512> exp{};
    std::array<int, 256> log{};

    Gf() {
        int x = 1;
        for (int i = 0; i < 255; ++i) {
            exp[i] = static_cast<uint8_t>(x);
            log[x] = i;
            x <<= 1;
            if (x & 0x100) x ^= 0x11D;
        }
        for (int i = 255; i < 512; ++i) exp[i] = exp[i - 255];
        log[0] = -1;
    }

    uint8_t mul(uint8_t a, uint8_t b) const {
        if (a == 0 || b == 0) return 0;
        return exp[log[a] + log[b]];
    }
    uint8_t div(uint8_t a, uint8_t b) const {
        if (b == 0) throw Error("GF division by zero");
        if (a == 0) return 0;
        return exp[log[a] - log[b] + 255];
    }
    uint8_t inv(uint8_t a) const { return div(1, a); }
    uint8_t pow_alpha(int p) const {
        p %= 255;
        if (p < 0) p += 255;
        return exp[p];
    }
};

const Gf& gf() {
    static const Gf g;
    return g;
}

// Generator polynomial with roots alpha^0..alpha^{nsym-1}, lowest degree last.
std::vector<uint8_t> rs_generator(int nsym) {
    std::vector<uint8_t> g{1};
    for (int i = 0; i < nsym; ++i) {
        std::vector<uint8_t> next(g.size() + 1, 0);
        const uint8_t root = gf().pow_alpha(i);
        for (size_t j = 0; j < g.size(); ++j) {
            next[j] ^= g[j];
            next[j + 1] ^= gf().mul(g[j], root);
        }
        g = std::move(next);
    }
    return g;
}

// Evaluate polynomial with coefficients highest-degree-first at x.
uint8_t poly_eval(const std::vector<uint8_t>& p, uint8_t x) {
    uint8_t acc = 0;
    for (uint8_t c : p) acc = static_cast<uint8_t>(gf().mul(acc, x) ^ c);
    return acc;
}

// ---------------------------------------------------------------------------
// Version 40 geometry
// ---------------------------------------------------------------------------

constexpr std::array<int, 7> kAlignCenters = {6, 30, 58, 86, 114, 142, 170};

struct Layout {
    // function[i] true where the module is reserved (finder, timing, format, ...)
    std::vector<uint8_t> function;
    // base[i] holds the fixed value of function modules (format/version filled later)
    std::vector<uint8_t> base;
    // zigzag order of the data modules
    std::vector<int> order;

    int idx(int r, int c) const { return r * N + c; }
};

void place_finder(Layout& L, int r0, int c0) {
    for (int dr = -1; dr <= 7; ++dr) {
        for (int dc = -1; dc <= 7; ++dc) {
            const int r = r0 + dr, c = c0 + dc;
            if (r < 0 || r >= N || c < 0 || c >= N) continue;
            const bool ring = (dr >= 0 && dr <= 6 && dc >= 0 && dc <= 6) &&
                              (dr == 0 || dr == 6 || dc == 0 || dc == 6);
            const bool core = (dr >= 2 && dr <= 4 && dc >= 2 && dc <= 4);
            L.function[L.idx(r, c)] = 1;
            L.base[L.idx(r, c)] = (ring || core) ? 1 : 0;
        }
    }
}

void place_alignment(Layout& L, int r0, int c0) {
    for (int dr = -2; dr <= 2; ++dr)
        for (int dc = -2; dc <= 2; ++dc) {
            const int r = r0 + dr, c = c0 + dc;
            const bool dark = std::max(std::abs(dr), std::abs(dc)) != 1;
            L.function[L.idx(r, c)] = 1;
            L.base[L.idx(r, c)] = dark ? 1 : 0;
        }
}

const Layout& layout() {
    static const Layout L = [] {
        Layout l;
        l.function.assign(N * N, 0);
        l.base.assign(N * N, 0);

        place_finder(l, 0, 0);
        place_finder(l, 0, N - 7);
        place_finder(l, N - 7, 0);

        // Timing patterns.
        for (int i = 8; i < N - 8; ++i) {
            l.function[l.idx(6, i)] = 1;
            l.base[l.idx(6, i)] = (i % 2 == 0) ? 1 : 0;
            l.function[l.idx(i, 6)] = 1;
            l.base[l.idx(i, 6)] = (i % 2 == 0) ? 1 : 0;
        }

        // Alignment patterns (skip the three finder corners).
        for (int a : kAlignCenters)
            for (int b : kAlignCenters) {
                if ((a <= 8 && b <= 8) || (a <= 8 && b >= N - 9) || (a >= N - 9 && b <= 8)) continue;
                place_alignment(l, a, b);
            }

        // Format information areas (values written per symbol).
        for (int i = 0; i <= 8; ++i) {
            if (i != 6) {
                l.function[l.idx(8, i)] = 1;
                l.function[l.idx(i, 8)] = 1;
            }
        }
        for (int i = 0; i < 8; ++i) l.function[l.idx(8, N - 1 - i)] = 1;
        for (int i = 0; i < 7; ++i) l.function[l.idx(N - 1 - i, 8)] = 1;
        // Dark module.
        l.function[l.idx(N - 8, 8)] = 1;
        l.base[l.idx(N - 8, 8)] = 1;

        // Version information blocks (6x3).
        for (int r = 0; r < 6; ++r)
            for (int k = 0; k < 3; ++k) {
                l.function[l.idx(r, N - 11 + k)] = 1;
                l.function[l.idx(N - 11 + k, r)] = 1;
            }

        // Zigzag traversal of the remaining modules.
        int col = N - 1;
        bool upward = true;
        while (col > 0) {
            if (col == 6) --col;  // timing column
            for (int i = 0; i < N; ++i) {
                const int r = upward ? N - 1 - i : i;
                for (int dc = 0; dc >= -1; --dc) {
                    const int c = col + dc;
                    if (!l.function[l.idx(r, c)]) l.order.push_back(l.idx(r, c));
                }
            }
            col -= 2;
            upward = !upward;
        }
        assert(static_cast<int>(l.order.size()) == kTotalCodewords * 8);
        return l;
    }();
    return L;
}

// ---------------------------------------------------------------------------
// Format / version information
// ---------------------------------------------------------------------------

// 5 data bits -> 15-bit format string (BCH(15,5) + fixed XOR mask).
int format_bits(int data5) {
    int v = data5 << 10;
    for (int i = 14; i >= 10; --i)
        if (v & (1 << i)) v ^= 0x537 << (i - 10);
    return ((data5 << 10) | v) ^ 0x5412;
}

// 6-bit version -> 18-bit version string (Golay(18,6)).
int version_bits(int version) {
    int v = version << 12;
    for (int i = 17; i >= 12; --i)
        if (v & (1 << i)) v ^= 0x1F25 << (i - 12);
    return (version << 12) | v;
}

// ECC level H indicator.
constexpr int kEccIndicator = 0b10;

// Module positions of the two format copies, MSB (bit 14) first.
struct FormatPositions {
    std::array<std::pair<int, int>, 15> a, b;
};

const FormatPositions& format_positions() {
    static const FormatPositions P = [] {
        FormatPositions p;
        int k = 0;
        for (int c = 0; c <= 5; ++c) p.a[k++] = {8, c};
        p.a[k++] = {8, 7};
        p.a[k++] = {8, 8};
        p.a[k++] = {7, 8};
        for (int r = 5; r >= 0; --r) p.a[k++] = {r, 8};
        k = 0;
        for (int r = N - 1; r >= N - 7; --r) p.b[k++] = {r, 8};
        for (int c = N - 8; c <= N - 1; ++c) p.b[k++] = {8, c};
        return p;
    }();
    return P;
}

void write_format(ModuleMatrix& mat, int mask_id) {
    const int bits = format_bits((kEccIndicator << 3) | mask_id);
    const auto& P = format_positions();
    for (int i = 0; i < 15; ++i) {
        const uint8_t bit = static_cast<uint8_t>((bits >> (14 - i)) & 1);
        mat(P.a[i].first, P.a[i].second) = bit;
        mat(P.b[i].first, P.b[i].second) = bit;
    }
}

void write_version(ModuleMatrix& mat) {
    const int bits = version_bits(40);
    for (int r = 0; r < 6; ++r)
        for (int k = 0; k < 3; ++k) {
            const uint8_t bit = static_cast<uint8_t>((bits >> (3 * r + k)) & 1);
            mat(r, N - 11 + k) = bit;
            mat(N - 11 + k, r) = bit;
        }
}

bool mask_at(int id, int r, int c) {
    switch (id) {
        case 0: return (r + c) % 2 == 0;
        case 1: return r % 2 == 0;
        case 2: return c % 3 == 0;
        case 3: return (r + c) % 3 == 0;
        case 4: return (r / 2 + c / 3) % 2 == 0;
        case 5: return (r * c) % 2 + (r * c) % 3 == 0;
        case 6: return ((r * c) % 2 + (r * c) % 3) % 2 == 0;
        default: return ((r + c) % 2 + (r * c) % 3) % 2 == 0;
    }
}

// Standard mask-selection penalty (rules N1..N4).
long penalty(const ModuleMatrix& m) {
    long score = 0;
    // N1: runs of >= 5 identical modules, rows and columns.
    for (int pass = 0; pass < 2; ++pass) {
        for (int i = 0; i < N; ++i) {
            int run = 1;
            for (int j = 1; j < N; ++j) {
                const uint8_t cur = pass == 0 ? m(i, j) : m(j, i);
                const uint8_t prev = pass == 0 ? m(i, j - 1) : m(j - 1, i);
                if (cur == prev) {
                    ++run;
                } else {
                    if (run >= 5) score += 3 + (run - 5);
                    run = 1;
                }
            }
            if (run >= 5) score += 3 + (run - 5);
        }
    }
    // N2: 2x2 blocks of one colour.
    for (int r = 0; r + 1 < N; ++r)
        for (int c = 0; c + 1 < N; ++c)
            if (m(r, c) == m(r, c + 1) && m(r, c) == m(r + 1, c) && m(r, c) == m(r + 1, c + 1))
                score += 3;
    // N3: finder-like 1:1:3:1:1 pattern with 4-module light flank.
    static const std::array<uint8_t, 11> p1 = {1, 0, 1, 1, 1, 0, 1, 0, 0, 0, 0};
    static const std::array<uint8_t, 11> p2 = {0, 0, 0, 0, 1, 0, 1, 1, 1, 0, 1};
    for (int pass = 0; pass < 2; ++pass)
        for (int i = 0; i < N; ++i)
            for (int j = 0; j + 11 <= N; ++j) {
                bool m1 = true, m2 = true;
                for (int k = 0; k < 11; ++k) {
                    const uint8_t v = pass == 0 ? m(i, j + k) : m(j + k, i);
                    m1 &= (v == p1[k]);
                    m2 &= (v == p2[k]);
                }
                if (m1) score += 40;
                if (m2) score += 40;
            }
    // N4: dark-module proportion.
    long dark = 0;
    for (int r = 0; r < N; ++r)
        for (int c = 0; c < N; ++c) dark += m(r, c);
    const long pct = dark * 100 / (static_cast<long>(N) * N);
    score += 10 * (std::abs(pct - 50) / 5);
    return score;
}

// ---------------------------------------------------------------------------
// Codeword plumbing: bitstream, block split, interleave
// ---------------------------------------------------------------------------

struct BlockSpec {
    int count, total, data;
};
constexpr std::array<BlockSpec, 2> kBlocks = {{{20, 45, 15}, {61, 46, 16}}};

std::vector<uint8_t> build_data_codewords(const std::vector<uint8_t>& payload) {
    if (static_cast<int>(payload.size()) > kByteCapacity)
        throw CapacityError("QR payload exceeds version 40-H capacity of 1273 bytes");
    std::vector<uint8_t> bits;
    bits.reserve(kDataCodewords * 8);
    auto push_bits = [&bits](uint32_t value, int n) {
        for (int i = n - 1; i >= 0; --i) bits.push_back((value >> i) & 1);
    };
    push_bits(0b0100, 4);  // byte mode
    push_bits(static_cast<uint32_t>(payload.size()), 16);
    for (uint8_t b : payload) push_bits(b, 8);
    const size_t limit = static_cast<size_t>(kDataCodewords) * 8;
    for (int i = 0; i < 4 && bits.size() < limit; ++i) bits.push_back(0);  // terminator
    while (bits.size() % 8 != 0) bits.push_back(0);

    std::vector<uint8_t> bytes;
    bytes.reserve(kDataCodewords);
    for (size_t i = 0; i < bits.size(); i += 8) {
        uint8_t b = 0;
        for (int j = 0; j < 8; ++j) b = static_cast<uint8_t>((b << 1) | bits[i + j]);
        bytes.push_back(b);
    }
    const std::array<uint8_t, 2> pad = {0xEC, 0x11};
    for (size_t i = 0; bytes.size() < kDataCodewords; ++i) bytes.push_back(pad[i % 2]);
    return bytes;
}

std::vector<uint8_t> interleave(const std::vector<uint8_t>& data) {
    std::vector<std::vector<uint8_t>> blocks;
    size_t off = 0;
    for (const auto& spec : kBlocks)
        for (int b = 0; b < spec.count; ++b) {
            std::vector<uint8_t> d(data.begin() + off, data.begin() + off + spec.data);
            off += spec.data;
            blocks.push_back(rs::encode(d, kEccPerBlock));
        }

    std::vector<uint8_t> out;
    out.reserve(kTotalCodewords);
    const int max_data = kBlocks[1].data;
    for (int i = 0; i < max_data; ++i)
        for (size_t b = 0; b < blocks.size(); ++b) {
            const int dlen = b < static_cast<size_t>(kBlocks[0].count) ? kBlocks[0].data : kBlocks[1].data;
            if (i < dlen) out.push_back(blocks[b][i]);
        }
    for (int i = 0; i < kEccPerBlock; ++i)
        for (size_t b = 0; b < blocks.size(); ++b) {
            const int dlen = b < static_cast<size_t>(kBlocks[0].count) ? kBlocks[0].data : kBlocks[1].data;
            out.push_back(blocks[b][dlen + i]);
        }
    assert(static_cast<int>(out.size()) == kTotalCodewords);
    return out;
}

// Splits the interleaved stream back into per-block codewords.
std::vector<std::vector<uint8_t>> deinterleave(const std::vector<uint8_t>& stream) {
    const int nblocks = kBlocks[0].count + kBlocks[1].count;
    std::vector<std::vector<uint8_t>> blocks(nblocks);
    size_t pos = 0;
    const int max_data = kBlocks[1].data;
    for (int i = 0; i < max_data; ++i)
        for (int b = 0; b < nblocks; ++b) {
            const int dlen = b < kBlocks[0].count ? kBlocks[0].data : kBlocks[1].data;
            if (i < dlen) blocks[b].push_back(stream[pos++]);
        }
    for (int i = 0; i < kEccPerBlock; ++i)
        for (int b = 0; b < nblocks; ++b) blocks[b].push_back(stream[pos++]);
    return blocks;
}

std::vector<uint8_t> parse_bitstream(const std::vector<uint8_t>& data) {
    if (data.size() < 3) throw DecodeError("QR data stream too short");
    const int mode = data[0] >> 4;
    if (mode != 0b0100) throw DecodeError("unsupported QR mode indicator");
    const int count = ((data[0] & 0x0F) << 12) | (data[1] << 4) | (data[2] >> 4);
    if (count > kByteCapacity || count + 3 > static_cast<int>(data.size()))
        throw DecodeError("QR byte segment length out of range");
    std::vector<uint8_t> out(count);
    for (int i = 0; i < count; ++i) {
        const size_t lo = 2 + i, hi = 3 + i;
        out[i] = static_cast<uint8_t>(((data[lo] & 0x0F) << 4) | (data[hi] >> 4));
    }
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Reed-Solomon
// ---------------------------------------------------------------------------

namespace rs {

std::vector<uint8_t> encode(const std::vector<uint8_t>& data, int nsym) {
    const auto gen = rs_generator(nsym);
    std::vector<uint8_t> rem(nsym, 0);
    for (uint8_t d : data) {
        const uint8_t factor = static_cast<uint8_t>(d ^ rem[0]);
        std::memmove(rem.data(), rem.data() + 1, nsym - 1);
        rem[nsym - 1] = 0;
        if (factor != 0)
            for (int i = 0; i < nsym; ++i)
                rem[i] ^= gf().mul(gen[i + 1], factor);
    }
    std::vector<uint8_t> out = data;
    out.insert(out.end(), rem.begin(), rem.end());
    return out;
}

bool decode(std::vector<uint8_t>& block, int nsym) {
    const int n = static_cast<int>(block.size());
    std::vector<uint8_t> synd(nsym);
    bool clean = true;
    for (int i = 0; i < nsym; ++i) {
        synd[i] = poly_eval(block, gf().pow_alpha(i));
        clean &= (synd[i] == 0);
    }
    if (clean) return true;

    // Berlekamp-Massey; lambda/prev hold ascending-degree coefficients.
    std::vector<uint8_t> lambda{1}, prev{1};
    int L = 0, m = 1;
    uint8_t b = 1;
    for (int i = 0; i < nsym; ++i) {
        uint8_t delta = synd[i];
        for (int j = 1; j <= L; ++j)
            if (j < static_cast<int>(lambda.size()))
                delta ^= gf().mul(lambda[j], synd[i - j]);
        if (delta == 0) {
            ++m;
        } else if (2 * L <= i) {
            const std::vector<uint8_t> tmp = lambda;
            const uint8_t coef = gf().div(delta, b);
            if (lambda.size() < prev.size() + m) lambda.resize(prev.size() + m, 0);
            for (size_t j = 0; j < prev.size(); ++j)
                lambda[j + m] ^= gf().mul(coef, prev[j]);
            L = i + 1 - L;
            prev = tmp;
            b = delta;
            m = 1;
        } else {
            const uint8_t coef = gf().div(delta, b);
            if (lambda.size() < prev.size() + m) lambda.resize(prev.size() + m, 0);
            for (size_t j = 0; j < prev.size(); ++j)
                lambda[j + m] ^= gf().mul(coef, prev[j]);
            ++m;
        }
    }
    while (!lambda.empty() && lambda.back() == 0) lambda.pop_back();
    const int nerr = static_cast<int>(lambda.size()) - 1;
    if (nerr <= 0 || nerr > nsym / 2) return false;

    // Chien search over the block positions.
    std::vector<int> positions;
    std::vector<uint8_t> xinvs;
    for (int pos = 0; pos < n; ++pos) {
        const int power = n - 1 - pos;
        const uint8_t xinv = gf().pow_alpha(-power);
        uint8_t acc = 0;
        for (int j = static_cast<int>(lambda.size()) - 1; j >= 0; --j)
            acc = static_cast<uint8_t>(gf().mul(acc, xinv) ^ lambda[j]);
        if (acc == 0) {
            positions.push_back(pos);
            xinvs.push_back(xinv);
        }
    }
    if (static_cast<int>(positions.size()) != nerr) return false;

    // Omega(x) = S(x) * Lambda(x) mod x^nsym, ascending degree.
    std::vector<uint8_t> omega(nsym, 0);
    for (int i = 0; i < nsym; ++i) {
        uint8_t acc = 0;
        for (int j = 0; j <= i && j < static_cast<int>(lambda.size()); ++j)
            acc ^= gf().mul(lambda[j], synd[i - j]);
        omega[i] = acc;
    }

    // Forney with b = 0: e = X * Omega(X^-1) / Lambda'(X^-1).
    for (size_t k = 0; k < positions.size(); ++k) {
        const uint8_t xinv = xinvs[k];
        uint8_t om = 0;
        for (int j = nsym - 1; j >= 0; --j)
            om = static_cast<uint8_t>(gf().mul(om, xinv) ^ omega[j]);
        uint8_t dl = 0;  // Lambda'(x) keeps odd-degree terms only
        for (size_t j = 1; j < lambda.size(); j += 2) {
            uint8_t term = lambda[j];
            for (size_t e = 0; e + 1 < j; ++e) term = gf().mul(term, xinv);
            dl ^= term;
        }
        if (dl == 0) return false;
        const uint8_t x = gf().inv(xinv);
        const uint8_t magnitude = gf().mul(x, gf().div(om, dl));
        block[positions[k]] ^= magnitude;
    }

    // Re-check syndromes.
    for (int i = 0; i < nsym; ++i)
        if (poly_eval(block, gf().pow_alpha(i)) != 0) return false;
    return true;
}

}  // namespace rs

// ---------------------------------------------------------------------------
// Symbol encode / decode
// ---------------------------------------------------------------------------

ModuleMatrix encode_symbol(const std::vector<uint8_t>& payload) {
    const auto& L = layout();
    const auto stream = interleave(build_data_codewords(payload));

    // Unmasked data module values.
    std::vector<uint8_t> data_bits(L.order.size());
    for (size_t i = 0; i < L.order.size(); ++i)
        data_bits[i] = (stream[i / 8] >> (7 - i % 8)) & 1;

    ModuleMatrix best;
    long best_score = -1;
    for (int mask_id = 0; mask_id < 8; ++mask_id) {
        ModuleMatrix mat(N, N);
        for (int r = 0; r < N; ++r)
            for (int c = 0; c < N; ++c) mat(r, c) = L.base[L.idx(r, c)];
        for (size_t i = 0; i < L.order.size(); ++i) {
            const int r = L.order[i] / N, c = L.order[i] % N;
            mat(r, c) = data_bits[i] ^ (mask_at(mask_id, r, c) ? 1 : 0);
        }
        write_format(mat, mask_id);
        write_version(mat);
        const long score = penalty(mat);
        if (best_score < 0 || score < best_score) {
            best_score = score;
            best = std::move(mat);
        }
    }
    return best;
}

bool looks_like_symbol(const ModuleMatrix& modules) {
    if (modules.rows() != N || modules.cols() != N) return false;
    const auto& L = layout();
    int mismatch = 0, total = 0;
    auto scan = [&](int r0, int c0) {
        for (int dr = -1; dr <= 7; ++dr)
            for (int dc = -1; dc <= 7; ++dc) {
                const int r = r0 + dr, c = c0 + dc;
                if (r < 0 || r >= N || c < 0 || c >= N) continue;
                ++total;
                if (modules(r, c) != L.base[L.idx(r, c)]) ++mismatch;
            }
    };
    scan(0, 0);
    scan(0, N - 7);
    scan(N - 7, 0);
    return mismatch * 4 < total;  // tolerate up to 25% damage
}

std::vector<uint8_t> decode_symbol(const ModuleMatrix& modules) {
    if (modules.rows() != N || modules.cols() != N)
        throw ShapeError("decode_symbol: expected a 177x177 module matrix");
    if (!looks_like_symbol(modules)) throw DecodeError("finder patterns not found");

    const auto& L = layout();
    const auto& P = format_positions();

    // Rank the 8 masks by format-info agreement; ECC level is implied by the
    // symbol structure, but the indicator participates in the distance check.
    std::array<std::pair<int, int>, 8> ranked;  // (distance, mask_id)
    for (int mask_id = 0; mask_id < 8; ++mask_id) {
        int best_dist = 99;
        for (int ecc = 0; ecc < 4; ++ecc) {
            const int bits = format_bits((ecc << 3) | mask_id);
            int da = 0, db = 0;
            for (int i = 0; i < 15; ++i) {
                const int bit = (bits >> (14 - i)) & 1;
                da += (modules(P.a[i].first, P.a[i].second) != bit);
                db += (modules(P.b[i].first, P.b[i].second) != bit);
            }
            best_dist = std::min({best_dist, da, db});
        }
        ranked[mask_id] = {best_dist, mask_id};
    }
    std::sort(ranked.begin(), ranked.end());

    std::string last_error = "format information unreadable";
    for (const auto& [dist, mask_id] : ranked) {
        std::vector<uint8_t> stream(kTotalCodewords, 0);
        for (size_t i = 0; i < L.order.size(); ++i) {
            const int r = L.order[i] / N, c = L.order[i] % N;
            const uint8_t bit = modules(r, c) ^ (mask_at(mask_id, r, c) ? 1 : 0);
            stream[i / 8] = static_cast<uint8_t>((stream[i / 8] << 1) | bit);
        }
        auto blocks = deinterleave(stream);
        bool ok = true;
        for (auto& blk : blocks)
            if (!rs::decode(blk, kEccPerBlock)) {
                ok = false;
                break;
            }
        if (!ok) {
            last_error = "error correction capacity exceeded";
            continue;
        }
        std::vector<uint8_t> data;
        data.reserve(kDataCodewords);
        for (int b = 0; b < kBlocks[0].count + kBlocks[1].count; ++b) {
            const int dlen = b < kBlocks[0].count ? kBlocks[0].data : kBlocks[1].data;
            data.insert(data.end(), blocks[b].begin(), blocks[b].begin() + dlen);
        }
        return parse_bitstream(data);
    }
    throw DecodeError(last_error);
}

}  // namespace vizsteg::qr
