#include "vizsteg/dtoi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace vizsteg::dtoi {

namespace {

void require_finite(const MatrixXd& m, const char* what) {
    if (!m.allFinite()) throw ParamError(std::string(what) + " contains non-finite values");
}

std::pair<MatrixXd, NormRange> normalize_one(const MatrixXd& p) {
    NormRange r;
    r.lo = p.minCoeff();
    r.hi = p.maxCoeff();
    if (r.hi == r.lo) {
        r.degenerate = true;
        return {MatrixXd::Zero(p.rows(), p.cols()), r};
    }
    MatrixXd out = (p.array() - r.lo) / (r.hi - r.lo);
    return {out, r};
}

double denorm_value(double v, const NormRange& r) {
    if (r.degenerate) return r.lo;
    return v * (r.hi - r.lo) + r.lo;
}

// First-fit shelf packer across up to max_channels carrier-sized channels.
struct Shelf {
    int y0, height, x_used;
};

struct Packer {
    int H, W, max_channels;
    std::vector<std::vector<Shelf>> shelves;  // per channel
    std::vector<int> y_next;

    Packer(int h, int w, int mc) : H(h), W(w), max_channels(mc) {}

    // Returns (channel, row0, col0); throws CapacityError when out of room.
    Placement place(int h, int w, const char* what) {
        if (h > H || w > W)
            throw CapacityError(std::string(what) + " of " + std::to_string(h) + "x" + std::to_string(w) +
                                " exceeds carrier " + std::to_string(H) + "x" + std::to_string(W));
        for (size_t ch = 0; ch < shelves.size(); ++ch) {
            for (auto& s : shelves[ch]) {
                if (h <= s.height && s.x_used + w <= W) {
                    Placement p{static_cast<int>(ch), s.y0, s.x_used, h, w};
                    s.x_used += w;
                    return p;
                }
            }
            if (y_next[ch] + h <= H) {
                shelves[ch].push_back({y_next[ch], h, w});
                Placement p{static_cast<int>(ch), y_next[ch], 0, h, w};
                y_next[ch] += h;
                return p;
            }
        }
        if (static_cast<int>(shelves.size()) < max_channels) {
            shelves.push_back({{0, h, w}});
            y_next.push_back(h);
            return Placement{static_cast<int>(shelves.size()) - 1, 0, 0, h, w};
        }
        throw CapacityError(std::string(what) + " does not fit: " + std::to_string(max_channels) +
                            " channels of " + std::to_string(H) + "x" + std::to_string(W) + " exhausted");
    }

    int channels_used() const { return static_cast<int>(shelves.size()); }
};

void paste(MatrixXd& channel, const MatrixXd& img, const Placement& p) {
    channel.block(p.row0, p.col0, p.h, p.w) = img;
}

MatrixXd read_block(const std::vector<MatrixXd>& channels, const Placement& p, const char* what) {
    if (p.channel < 0 || p.channel >= static_cast<int>(channels.size()))
        throw FormatError(std::string("corrupt plan: ") + what + " references channel " +
                          std::to_string(p.channel));
    const MatrixXd& ch = channels[p.channel];
    if (p.row0 < 0 || p.col0 < 0 || p.h <= 0 || p.w <= 0 || p.row0 + p.h > ch.rows() ||
        p.col0 + p.w > ch.cols())
        throw FormatError(std::string("corrupt plan: ") + what + " placement outside image bounds");
    return ch.block(p.row0, p.col0, p.h, p.w);
}

// Core of Algorithm 1 up to (but not including) interpolation.
struct PartImages {
    MatrixXd x_img, y_img;  // hs x ws, normalized
    NormRange nx, ny;
    long pad = 0;
    Point2 pad_elem;  // the element the padding step replicated
};

PartImages transform_part(const DiscreteSet& set, int hs, int ws) {
    const long n = static_cast<long>(set.points.size());
    const long slots = static_cast<long>(hs) * ws;
    if (slots < n) throw CapacityError("grid " + std::to_string(hs) + "x" + std::to_string(ws) +
                                       " holds " + std::to_string(slots) + " points, got " + std::to_string(n));

    std::vector<Point2> s = set.points;
    std::stable_sort(s.begin(), s.end(), [](const Point2& a, const Point2& b) { return a.x < b.x; });
    const Point2 last = s.back();
    s.resize(slots, last);
    PartImages out;
    out.pad_elem = last;

    for (int g = 0; g < hs; ++g)
        std::stable_sort(s.begin() + static_cast<long>(g) * ws, s.begin() + static_cast<long>(g + 1) * ws,
                         [](const Point2& a, const Point2& b) { return a.y < b.y; });

    NormRange nx, ny;
    nx.lo = ny.lo = std::numeric_limits<double>::infinity();
    nx.hi = ny.hi = -std::numeric_limits<double>::infinity();
    for (const auto& p : s) {
        nx.lo = std::min(nx.lo, p.x);
        nx.hi = std::max(nx.hi, p.x);
        ny.lo = std::min(ny.lo, p.y);
        ny.hi = std::max(ny.hi, p.y);
    }
    nx.degenerate = (nx.hi == nx.lo);
    ny.degenerate = (ny.hi == ny.lo);

    out.nx = nx;
    out.ny = ny;
    out.pad = slots - n;
    out.x_img.resize(hs, ws);
    out.y_img.resize(hs, ws);
    for (int r = 0; r < hs; ++r)
        for (int c = 0; c < ws; ++c) {
            const Point2& p = s[static_cast<long>(r) * ws + c];
            out.x_img(r, c) = nx.degenerate ? 0.0 : (p.x - nx.lo) / (nx.hi - nx.lo);
            out.y_img(r, c) = ny.degenerate ? 0.0 : (p.y - ny.lo) / (ny.hi - ny.lo);
        }
    return out;
}

void validate_discrete(const DiscreteSet& set) {
    if (set.points.empty()) throw ParamError("discrete set is empty");
    for (const auto& p : set.points)
        if (!std::isfinite(p.x) || !std::isfinite(p.y))
            throw ParamError("discrete set contains non-finite coordinates");
}

// Most-square grid with hs*ws >= n under the (R, Wmax) fit limits.
std::pair<int, int> square_grid(long n, int R, int Wmax) {
    int best_hs = -1, best_ws = -1;
    long best_key = -1;
    for (int hs = 1; hs <= R; ++hs) {
        const int ws = static_cast<int>((n + hs - 1) / hs);
        if (ws > Wmax) continue;
        const long key = static_cast<long>(std::abs(hs - ws)) * (1L << 40) +
                         static_cast<long>(hs) * ws * 2048 + hs;
        if (best_key < 0 || key < best_key) {
            best_key = key;
            best_hs = hs;
            best_ws = ws;
        }
    }
    if (best_hs < 0) throw CapacityError("no grid fits " + std::to_string(n) + " points");
    return {best_hs, best_ws};
}

}  // namespace

// ---------------------------------------------------------------------------
// Continuous
// ---------------------------------------------------------------------------

std::pair<std::vector<MatrixXd>, std::vector<NormRange>> normalize_planes(const ContinuousField& field) {
    if (field.planes.empty()) throw ParamError("continuous field has no planes");
    std::vector<MatrixXd> out;
    std::vector<NormRange> norms;
    for (const auto& p : field.planes) {
        if (p.rows() <= 0 || p.cols() <= 0) throw ShapeError("continuous plane has empty dimensions");
        require_finite(p, "continuous plane");
        auto [img, r] = normalize_one(p);
        out.push_back(std::move(img));
        norms.push_back(r);
    }
    return {out, norms};
}

std::pair<DataImageSet, DataImagePlan> dtoi_continuous(const ContinuousField& field, int carrier_h,
                                                       int carrier_w, int max_channels) {
    auto [imgs, norms] = normalize_planes(field);

    // Tall planes first improves shelf packing; the plan keeps original order.
    std::vector<int> idx(imgs.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return imgs[a].rows() > imgs[b].rows(); });

    Packer packer(carrier_h, carrier_w, max_channels);
    DataImagePlan plan;
    plan.kind = DataKind::continuous;
    plan.planes.resize(imgs.size());
    std::vector<Placement> placements(imgs.size());
    for (int i : idx)
        placements[i] = packer.place(static_cast<int>(imgs[i].rows()), static_cast<int>(imgs[i].cols()),
                                     "continuous plane");

    DataImageSet set;
    std::vector<int> ext_h(packer.channels_used(), 0), ext_w(packer.channels_used(), 0);
    for (const auto& p : placements) {
        ext_h[p.channel] = std::max(ext_h[p.channel], p.row0 + p.h);
        ext_w[p.channel] = std::max(ext_w[p.channel], p.col0 + p.w);
    }
    for (int ch = 0; ch < packer.channels_used(); ++ch)
        set.channels.push_back(MatrixXd::Zero(ext_h[ch], ext_w[ch]));
    for (size_t i = 0; i < imgs.size(); ++i) {
        paste(set.channels[placements[i].channel], imgs[i], placements[i]);
        plan.planes[i] = PlanePlan{norms[i], placements[i]};
    }
    plan.channels = packer.channels_used();
    return {std::move(set), std::move(plan)};
}

ContinuousField inverse_dtoi_continuous(const DataImageSet& imgs, const DataImagePlan& plan) {
    if (plan.kind != DataKind::continuous) throw FormatError("plan kind is not continuous");
    ContinuousField field;
    for (const auto& pp : plan.planes) {
        MatrixXd block = read_block(imgs.channels, pp.place, "plane");
        MatrixXd plane(block.rows(), block.cols());
        for (Eigen::Index r = 0; r < block.rows(); ++r)
            for (Eigen::Index c = 0; c < block.cols(); ++c) plane(r, c) = denorm_value(block(r, c), pp.norm);
        field.planes.push_back(std::move(plane));
    }
    return field;
}

// ---------------------------------------------------------------------------
// Discrete
// ---------------------------------------------------------------------------

MatrixXd interpolate_grid(const MatrixXd& base, int k) {
    if (k < 0) throw ParamError("interpolation factor K must be non-negative");
    if (k == 0) return base;
    const int hs = static_cast<int>(base.rows()), ws = static_cast<int>(base.cols());
    const double kk = k + 1.0;

    MatrixXd rows_out(hs, (k + 1) * ws);
    for (int r = 0; r < hs; ++r) {
        for (int c = 0; c < ws; ++c) {
            const double pa = base(r, c);
            rows_out(r, c * (k + 1)) = pa;
            const bool edge = (c + 1 >= ws);
            const double pb = edge ? pa : base(r, c + 1);
            for (int i = 1; i <= k; ++i)
                rows_out(r, c * (k + 1) + i) = edge ? pa : ((k - i + 1) / kk) * pa + (i / kk) * pb;
        }
    }

    MatrixXd out((k + 1) * hs, (k + 1) * ws);
    for (int c = 0; c < rows_out.cols(); ++c) {
        for (int r = 0; r < hs; ++r) {
            const double pa = rows_out(r, c);
            out(r * (k + 1), c) = pa;
            const bool edge = (r + 1 >= hs);
            const double pb = edge ? pa : rows_out(r + 1, c);
            for (int i = 1; i <= k; ++i)
                out(r * (k + 1) + i, c) = edge ? pa : ((k - i + 1) / kk) * pa + (i / kk) * pb;
        }
    }
    return out;
}

MatrixXd sample_grid(const MatrixXd& interp, int hs, int ws, int k) {
    if (interp.rows() < static_cast<long>(hs - 1) * (k + 1) + 1 ||
        interp.cols() < static_cast<long>(ws - 1) * (k + 1) + 1)
        throw ShapeError("interpolated image smaller than its grid");
    MatrixXd out(hs, ws);
    for (int r = 0; r < hs; ++r)
        for (int c = 0; c < ws; ++c) out(r, c) = interp(r * (k + 1), c * (k + 1));
    return out;
}

std::pair<DataImageSet, DataImagePlan> dtoi_discrete(const DiscreteSet& set, int hs, int ws, int k) {
    validate_discrete(set);
    if (hs < 1 || ws < 1) throw ParamError("grid dimensions must be positive");
    PartImages part = transform_part(set, hs, ws);

    DataImageSet out;
    out.channels.push_back(interpolate_grid(part.x_img, k));
    out.channels.push_back(interpolate_grid(part.y_img, k));

    DataImagePlan plan;
    plan.kind = DataKind::discrete;
    plan.k_interp = k;
    plan.channels = 2;
    const int hp = (k + 1) * hs, wp = (k + 1) * ws;
    PartPlan pp;
    pp.n = static_cast<long>(set.points.size());
    pp.hs = hs;
    pp.ws = ws;
    pp.pad = part.pad;
    pp.pad_x = part.pad_elem.x;
    pp.pad_y = part.pad_elem.y;
    pp.nx = part.nx;
    pp.ny = part.ny;
    pp.x_place = Placement{0, 0, 0, hp, wp};
    pp.y_place = Placement{1, 0, 0, hp, wp};
    plan.parts.push_back(pp);
    return {std::move(out), std::move(plan)};
}

DiscreteSet inverse_dtoi_discrete(const DataImageSet& imgs, const DataImagePlan& plan) {
    if (plan.kind != DataKind::discrete) throw FormatError("plan kind is not discrete");
    const int k = plan.k_interp;
    DiscreteSet out;
    for (const auto& pp : plan.parts) {
        const int hp = (k + 1) * pp.hs, wp = (k + 1) * pp.ws;
        if (pp.x_place.h != hp || pp.x_place.w != wp || pp.y_place.h != hp || pp.y_place.w != wp)
            throw FormatError("corrupt plan: part extent disagrees with its grid and K");
        MatrixXd xi = sample_grid(read_block(imgs.channels, pp.x_place, "x image"), pp.hs, pp.ws, k);
        MatrixXd yi = sample_grid(read_block(imgs.channels, pp.y_place, "y image"), pp.hs, pp.ws, k);
        const long slots = static_cast<long>(pp.hs) * pp.ws;
        if (slots - pp.pad != pp.n || pp.pad < 0)
            throw FormatError("corrupt plan: pad count inconsistent with point count");
        std::vector<Point2> grid(slots);
        for (long i = 0; i < slots; ++i) {
            const int r = static_cast<int>(i / pp.ws), c = static_cast<int>(i % pp.ws);
            grid[i] = Point2{denorm_value(xi(r, c), pp.nx), denorm_value(yi(r, c), pp.ny)};
        }
        // Padding replicated one element; the per-group y-sort may have moved
        // the replicas anywhere inside their group. All replicas restore to
        // bit-identical values, so identify them by the expected restored
        // value of the recorded element (plain and 8-bit-quantized variants),
        // falling back to nearest-distance only if corruption broke equality.
        std::vector<char> dropped(slots, 0);
        if (pp.pad > 0) {
            auto norm_of = [](double v, const NormRange& n) {
                return n.degenerate ? 0.0 : (v - n.lo) / (n.hi - n.lo);
            };
            auto expected = [&](bool quantized) {
                double qx = norm_of(pp.pad_x, pp.nx), qy = norm_of(pp.pad_y, pp.ny);
                if (quantized) {
                    qx = std::round(clamp01(qx) * 255.0) / 255.0;
                    qy = std::round(clamp01(qy) * 255.0) / 255.0;
                }
                return Point2{denorm_value(qx, pp.nx), denorm_value(qy, pp.ny)};
            };
            const Point2 cand[2] = {expected(false), expected(true)};
            const double tol = 1e-9 * (std::abs(pp.nx.lo) + std::abs(pp.nx.hi) +
                                       std::abs(pp.ny.lo) + std::abs(pp.ny.hi) + 1.0);
            long remaining = pp.pad;
            for (long i = slots - 1; i >= 0 && remaining > 0; --i) {
                for (const auto& c : cand)
                    if (std::abs(grid[i].x - c.x) <= tol && std::abs(grid[i].y - c.y) <= tol) {
                        dropped[i] = 1;
                        --remaining;
                        break;
                    }
            }
            if (remaining > 0) {
                std::vector<std::pair<double, long>> dist;
                for (long i = 0; i < slots; ++i)
                    if (!dropped[i])
                        dist.push_back({std::max(std::abs(grid[i].x - pp.pad_x),
                                                 std::abs(grid[i].y - pp.pad_y)),
                                        -i});
                std::sort(dist.begin(), dist.end());
                for (long k2 = 0; k2 < remaining && k2 < static_cast<long>(dist.size()); ++k2)
                    dropped[-dist[k2].second] = 1;
            }
        }
        for (long i = 0; i < slots; ++i)
            if (!dropped[i]) out.points.push_back(grid[i]);
    }
    return out;
}

long max_discrete_points(int carrier_h, int carrier_w, int k, int max_channels) {
    const int R = carrier_h / (k + 1), Wmax = carrier_w / (k + 1);
    if (R < 1 || Wmax < 1) return 0;
    return static_cast<long>(max_channels * R / 2) * Wmax;
}

std::vector<DiscretePart> split_discrete(const DiscreteSet& set, int carrier_h, int carrier_w, int k,
                                         int max_channels) {
    validate_discrete(set);
    const int R = carrier_h / (k + 1), Wmax = carrier_w / (k + 1);
    const long n = static_cast<long>(set.points.size());
    const long cap = max_discrete_points(carrier_h, carrier_w, k, max_channels);
    if (n > cap)
        throw CapacityError("discrete set of " + std::to_string(n) + " points exceeds capacity; at most " +
                            std::to_string(cap) + " points fit a " + std::to_string(carrier_h) + "x" +
                            std::to_string(carrier_w) + " carrier with K=" + std::to_string(k));

    // With a single channel the x/y image pair has to share it, halving rows.
    const int R_single = max_channels >= 2 ? R : R / 2;
    if (n <= static_cast<long>(R_single) * Wmax) {
        auto [hs, ws] = square_grid(n, R_single, Wmax);
        return {DiscretePart{set, hs, ws}};
    }

    // Multiple parts: full-width strips allocated against per-channel row budgets.
    // Points are assigned to parts in x-sorted order to keep parts coherent.
    std::vector<Point2> sorted = set.points;
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const Point2& a, const Point2& b) { return a.x < b.x; });

    std::vector<int> free_rows(max_channels, R);
    std::vector<DiscretePart> parts;
    long remaining = n;
    size_t cursor = 0;
    while (remaining > 0) {
        std::vector<int> order(free_rows.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) { return free_rows[a] > free_rows[b]; });
        const int f1 = free_rows[order[0]];
        const int f2 = free_rows.size() > 1 ? free_rows[order[1]] : 0;
        const int h_pair = std::max(std::min(f1, f2), f1 / 2);
        const int need = static_cast<int>(std::min<long>(R, (remaining + Wmax - 1) / Wmax));
        const int hs = std::min(h_pair, need);
        if (hs <= 0) throw CapacityError("discrete split failed to allocate image rows");
        // Consume the rows: prefer two channels, else split the largest one.
        if (std::min(f1, f2) >= hs) {
            free_rows[order[0]] -= hs;
            free_rows[order[1]] -= hs;
        } else {
            free_rows[order[0]] -= 2 * hs;
        }
        const long take = std::min<long>(remaining, static_cast<long>(hs) * Wmax);
        DiscretePart part;
        part.hs = hs;
        part.ws = Wmax;
        part.set.points.assign(sorted.begin() + cursor, sorted.begin() + cursor + take);
        cursor += take;
        remaining -= take;
        parts.push_back(std::move(part));
    }
    return parts;
}

std::pair<DataImageSet, DataImagePlan> dtoi_discrete_auto(const DiscreteSet& set, int carrier_h,
                                                          int carrier_w, int k, int max_channels) {
    auto parts = split_discrete(set, carrier_h, carrier_w, k, max_channels);

    DataImagePlan plan;
    plan.kind = DataKind::discrete;
    plan.k_interp = k;

    Packer packer(carrier_h, carrier_w, max_channels);
    struct Prepared {
        MatrixXd x_img, y_img;
        PartPlan pp;
    };
    std::vector<Prepared> prepared;
    for (const auto& part : parts) {
        PartImages t = transform_part(part.set, part.hs, part.ws);
        Prepared p;
        p.x_img = interpolate_grid(t.x_img, k);
        p.y_img = interpolate_grid(t.y_img, k);
        p.pp.n = static_cast<long>(part.set.points.size());
        p.pp.hs = part.hs;
        p.pp.ws = part.ws;
        p.pp.pad = t.pad;
        p.pp.pad_x = t.pad_elem.x;
        p.pp.pad_y = t.pad_elem.y;
        p.pp.nx = t.nx;
        p.pp.ny = t.ny;
        const int hp = static_cast<int>(p.x_img.rows()), wp = static_cast<int>(p.x_img.cols());
        p.pp.x_place = packer.place(hp, wp, "discrete x image");
        p.pp.y_place = packer.place(hp, wp, "discrete y image");
        prepared.push_back(std::move(p));
    }

    DataImageSet set_out;
    std::vector<int> ext_h(packer.channels_used(), 0), ext_w(packer.channels_used(), 0);
    for (const auto& p : prepared)
        for (const auto* pl : {&p.pp.x_place, &p.pp.y_place}) {
            ext_h[pl->channel] = std::max(ext_h[pl->channel], pl->row0 + pl->h);
            ext_w[pl->channel] = std::max(ext_w[pl->channel], pl->col0 + pl->w);
        }
    for (int ch = 0; ch < packer.channels_used(); ++ch)
        set_out.channels.push_back(MatrixXd::Zero(ext_h[ch], ext_w[ch]));
    for (auto& p : prepared) {
        paste(set_out.channels[p.pp.x_place.channel], p.x_img, p.pp.x_place);
        paste(set_out.channels[p.pp.y_place.channel], p.y_img, p.pp.y_place);
        plan.parts.push_back(p.pp);
    }
    plan.channels = packer.channels_used();
    return {std::move(set_out), std::move(plan)};
}

void quantize_channels(DataImageSet& imgs) {
    for (auto& ch : imgs.channels)
        ch = ch.unaryExpr([](double v) { return std::round(clamp01(v) * 255.0) / 255.0; });
}

}  // namespace vizsteg::dtoi
