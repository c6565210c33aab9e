#include "vizsteg/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace vizsteg::synth {

namespace {

double fade(double t) { return t * t * t * (t * (t * 6 - 15) + 10); }

// One octave of lattice gradient noise.
Eigen::MatrixXd gradient_octave(Rng& rng, int h, int w, double cells) {
    const int gh = static_cast<int>(cells) + 2, gw = static_cast<int>(cells) + 2;
    std::vector<double> gx(static_cast<size_t>(gh) * gw), gy(gx.size());
    for (size_t i = 0; i < gx.size(); ++i) {
        const double a = rng.uniform() * 6.283185307179586;
        gx[i] = std::cos(a);
        gy[i] = std::sin(a);
    }
    auto dot = [&](int cy, int cx, double dy, double dx) {
        const size_t i = static_cast<size_t>(cy) * gw + cx;
        return gx[i] * dx + gy[i] * dy;
    };
    Eigen::MatrixXd out(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double fy = static_cast<double>(y) / h * cells;
            const double fx = static_cast<double>(x) / w * cells;
            const int cy = static_cast<int>(fy), cx = static_cast<int>(fx);
            const double dy = fy - cy, dx = fx - cx;
            const double v00 = dot(cy, cx, dy, dx);
            const double v01 = dot(cy, cx + 1, dy, dx - 1);
            const double v10 = dot(cy + 1, cx, dy - 1, dx);
            const double v11 = dot(cy + 1, cx + 1, dy - 1, dx - 1);
            const double uy = fade(dy), ux = fade(dx);
            const double a = v00 + ux * (v01 - v00);
            const double b = v10 + ux * (v11 - v10);
            out(y, x) = a + uy * (b - a);
        }
    return out;
}

// ---------------------------------------------------------------------------
// Tiny rasterizer for the synthetic chart carriers.
// ---------------------------------------------------------------------------

struct Canvas {
    TensorF img;

    Canvas(int h, int w) : img(3, h, w) {
        for (int c = 0; c < 3; ++c) img.m.row(c).setConstant(1.0f);  // white
    }

    void fill_rect(int y0, int x0, int y1, int x1, float r, float g, float b) {
        y0 = std::clamp(y0, 0, img.h);
        y1 = std::clamp(y1, 0, img.h);
        x0 = std::clamp(x0, 0, img.w);
        x1 = std::clamp(x1, 0, img.w);
        for (int y = y0; y < y1; ++y)
            for (int x = x0; x < x1; ++x) {
                img.at(0, y, x) = r;
                img.at(1, y, x) = g;
                img.at(2, y, x) = b;
            }
    }

    void disc(int cy, int cx, int rad, float r, float g, float b) {
        for (int y = std::max(0, cy - rad); y <= std::min(img.h - 1, cy + rad); ++y)
            for (int x = std::max(0, cx - rad); x <= std::min(img.w - 1, cx + rad); ++x)
                if ((y - cy) * (y - cy) + (x - cx) * (x - cx) <= rad * rad) {
                    img.at(0, y, x) = r;
                    img.at(1, y, x) = g;
                    img.at(2, y, x) = b;
                }
    }

    void line(int y0, int x0, int y1, int x1, int half_width, float r, float g, float b) {
        const int steps = std::max(std::abs(y1 - y0), std::abs(x1 - x0)) + 1;
        for (int i = 0; i <= steps; ++i) {
            const int y = y0 + (y1 - y0) * i / steps;
            const int x = x0 + (x1 - x0) * i / steps;
            fill_rect(y - half_width, x - half_width, y + half_width + 1, x + half_width + 1, r, g, b);
        }
    }
};

struct Color {
    float r, g, b;
};
constexpr Color kPalette[] = {
    {0.26f, 0.45f, 0.76f}, {0.91f, 0.47f, 0.20f}, {0.30f, 0.66f, 0.35f}, {0.78f, 0.26f, 0.26f},
    {0.51f, 0.37f, 0.66f}, {0.55f, 0.55f, 0.22f}, {0.23f, 0.62f, 0.66f},
};

}  // namespace

Eigen::MatrixXd perlin(uint64_t seed, int h, int w, int octaves, double base_cells) {
    if (h <= 0 || w <= 0) throw ParamError("perlin: dimensions must be positive");
    Rng rng(seed);
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(h, w);
    double amp = 1.0, cells = base_cells;
    for (int o = 0; o < octaves; ++o) {
        acc += amp * gradient_octave(rng, h, w, cells);
        amp *= 0.5;
        cells *= 2.0;
    }
    const double lo = acc.minCoeff(), hi = acc.maxCoeff();
    if (hi > lo) acc = (acc.array() - lo) / (hi - lo);
    else acc.setZero();
    return acc;
}

std::vector<Eigen::MatrixXd> synth_perlin(int count, int h, int w, uint64_t seed) {
    std::vector<Eigen::MatrixXd> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) out.push_back(perlin(derive_seed(seed, 1, i), h, w));
    return out;
}

dtoi::ContinuousField synth_vector_field(uint64_t seed, int h, int w) {
    // Shared base field plus small independent detail keeps the planes correlated.
    Eigen::MatrixXd base = perlin(derive_seed(seed, 2, 0), h, w, 3, 3.0);
    Eigen::MatrixXd du = perlin(derive_seed(seed, 2, 1), h, w, 3, 6.0);
    Eigen::MatrixXd dv = perlin(derive_seed(seed, 2, 2), h, w, 3, 6.0);
    dtoi::ContinuousField f;
    f.planes.push_back(0.7 * base + 0.3 * du);
    f.planes.push_back(0.7 * base + 0.3 * dv);
    return f;
}

dtoi::DiscreteSet synth_scatter(uint64_t seed, int n_points) {
    if (n_points < 1) throw ParamError("scatter: need at least one point");
    Rng rng(seed);
    dtoi::DiscreteSet set;
    set.points.reserve(n_points);

    const double sx = rng.uniform(0.5, 50.0), sy = rng.uniform(0.5, 50.0);
    const double ox = rng.uniform(-100.0, 100.0), oy = rng.uniform(-100.0, 100.0);
    const int n_clusters = 1 + static_cast<int>(rng.uniform_int(4));
    std::vector<std::array<double, 4>> clusters;  // cx, cy, sdx, sdy
    for (int c = 0; c < n_clusters; ++c)
        clusters.push_back({rng.uniform(), rng.uniform(), rng.uniform(0.02, 0.15), rng.uniform(0.02, 0.15)});
    const double p_uniform = rng.uniform(0.1, 0.9);

    for (int i = 0; i < n_points; ++i) {
        double x, y;
        if (rng.uniform() < p_uniform) {
            x = rng.uniform();
            y = rng.uniform();
        } else {
            const auto& c = clusters[rng.uniform_int(clusters.size())];
            x = c[0] + rng.normal() * c[2];
            y = c[1] + rng.normal() * c[3];
        }
        set.points.push_back({ox + sx * x, oy + sy * y});
    }
    return set;
}

std::vector<dtoi::DiscreteSet> synth_scatter_sets(int count, int n_points, uint64_t seed) {
    std::vector<dtoi::DiscreteSet> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) out.push_back(synth_scatter(derive_seed(seed, 3, i), n_points));
    return out;
}

std::string random_string(uint64_t seed, int min_len, int max_len) {
    static const char charset[] =
        "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789 .,;:-_+*/=()[]{}";
    Rng rng(seed);
    const int len = min_len + static_cast<int>(rng.uniform_int(max_len - min_len + 1));
    std::string out(len, ' ');
    for (int i = 0; i < len; ++i) out[i] = charset[rng.uniform_int(sizeof(charset) - 1)];
    return out;
}

TensorF synth_chart(uint64_t seed, int h, int w) {
    Rng rng(seed);
    Canvas cv(h, w);

    // Plot area with light gridlines.
    const int m = std::max(4, std::min(h, w) / 12);
    const float bg = static_cast<float>(rng.uniform(0.92, 1.0));
    cv.fill_rect(0, 0, h, w, bg, bg, bg);
    cv.fill_rect(m, m, h - m, w - m, 1.0f, 1.0f, 1.0f);
    const int n_grid = 3 + static_cast<int>(rng.uniform_int(4));
    for (int i = 1; i <= n_grid; ++i) {
        const int y = m + (h - 2 * m) * i / (n_grid + 1);
        cv.fill_rect(y, m, y + 1, w - m, 0.85f, 0.85f, 0.85f);
    }
    cv.line(h - m, m, h - m, w - m, 0, 0.3f, 0.3f, 0.3f);
    cv.line(m, m, h - m, m, 0, 0.3f, 0.3f, 0.3f);

    const int kind = static_cast<int>(rng.uniform_int(3));
    const int inner_h = h - 2 * m, inner_w = w - 2 * m;
    if (kind == 0) {  // bars
        const int n = 4 + static_cast<int>(rng.uniform_int(8));
        const int bw = std::max(1, inner_w / (n * 2));
        for (int i = 0; i < n; ++i) {
            const int bh = static_cast<int>(rng.uniform(0.2, 1.0) * inner_h);
            const auto& c = kPalette[rng.uniform_int(std::size(kPalette))];
            const int x0 = m + inner_w * i / n + bw / 2;
            cv.fill_rect(h - m - bh, x0, h - m, x0 + bw, c.r, c.g, c.b);
        }
    } else if (kind == 1) {  // lines
        const int series = 1 + static_cast<int>(rng.uniform_int(3));
        for (int s = 0; s < series; ++s) {
            const auto& c = kPalette[rng.uniform_int(std::size(kPalette))];
            const int n = 6 + static_cast<int>(rng.uniform_int(10));
            int py = m + static_cast<int>(rng.uniform() * inner_h);
            int px = m;
            for (int i = 1; i < n; ++i) {
                const int x = m + inner_w * i / (n - 1);
                const int y = m + static_cast<int>(rng.uniform() * inner_h);
                cv.line(py, px, y, x, std::max(0, std::min(h, w) / 256), c.r, c.g, c.b);
                px = x;
                py = y;
            }
        }
    } else {  // scatter
        const int n = 20 + static_cast<int>(rng.uniform_int(60));
        const int rad = std::max(1, std::min(h, w) / 80);
        for (int i = 0; i < n; ++i) {
            const auto& c = kPalette[rng.uniform_int(std::size(kPalette))];
            cv.disc(m + static_cast<int>(rng.uniform() * inner_h),
                    m + static_cast<int>(rng.uniform() * inner_w), rad, c.r, c.g, c.b);
        }
    }
    return cv.img;
}

}  // namespace vizsteg::synth
