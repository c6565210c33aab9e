#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/LU>

#include "vizsteg/common.hpp"
#include "vizsteg/tensor.hpp"

namespace vizsteg::nn {

template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// One named parameter matrix with its gradient accumulator.
template <class S>
struct ParamRef {
    std::string name;
    Mat<S>* value;
    Mat<S>* grad;
};

// ---------------------------------------------------------------------------
// im2col convolution, kernel 3x3 pad 1 (stride 1) or 1x1.
// Feature maps are (channels, h*w) row-major rasters.
// ---------------------------------------------------------------------------

template <class S>
void im2col3(const Eigen::Ref<const Mat<S>>& x, int h, int w, Mat<S>& col) {
    const int c = static_cast<int>(x.rows());
    col.resize(static_cast<Eigen::Index>(c) * 9, static_cast<Eigen::Index>(h) * w);
    for (int ci = 0; ci < c; ++ci) {
        const S* src_base = x.data() + static_cast<size_t>(ci) * x.cols();
        for (int ky = 0; ky < 3; ++ky)
            for (int kx = 0; kx < 3; ++kx) {
                S* dst_base = col.data() + (static_cast<size_t>(ci) * 9 + ky * 3 + kx) * col.cols();
                const int dy = ky - 1, dx = kx - 1;
                for (int y = 0; y < h; ++y) {
                    S* dst = dst_base + static_cast<size_t>(y) * w;
                    const int sy = y + dy;
                    if (sy < 0 || sy >= h) {
                        std::fill(dst, dst + w, S(0));
                        continue;
                    }
                    const S* src = src_base + static_cast<size_t>(sy) * w;
                    if (dx == -1) {
                        dst[0] = S(0);
                        std::copy(src, src + w - 1, dst + 1);
                    } else if (dx == 0) {
                        std::copy(src, src + w, dst);
                    } else {
                        std::copy(src + 1, src + w, dst);
                        dst[w - 1] = S(0);
                    }
                }
            }
    }
}

// Transpose of im2col3: scatter-adds column gradients back onto the image.
template <class S>
void col2im3_add(const Mat<S>& col, int h, int w, Eigen::Ref<Mat<S>> dx) {
    const int c = static_cast<int>(dx.rows());
    for (int ci = 0; ci < c; ++ci) {
        S* dst_base = dx.data() + static_cast<size_t>(ci) * dx.cols();
        for (int ky = 0; ky < 3; ++ky)
            for (int kx = 0; kx < 3; ++kx) {
                const S* src_base = col.data() + (static_cast<size_t>(ci) * 9 + ky * 3 + kx) * col.cols();
                const int dy = ky - 1, dx_ = kx - 1;
                for (int y = 0; y < h; ++y) {
                    const int sy = y + dy;
                    if (sy < 0 || sy >= h) continue;
                    const S* src = src_base + static_cast<size_t>(y) * w;
                    S* dst = dst_base + static_cast<size_t>(sy) * w;
                    if (dx_ == -1) {
                        for (int xx = 1; xx < w; ++xx) dst[xx - 1] += src[xx];
                    } else if (dx_ == 0) {
                        for (int xx = 0; xx < w; ++xx) dst[xx] += src[xx];
                    } else {
                        for (int xx = 0; xx + 1 < w; ++xx) dst[xx + 1] += src[xx];
                    }
                }
            }
    }
}

template <class S>
struct Conv2d {
    int in_c = 0, out_c = 0, ksize = 3;
    Mat<S> W, b;    // W: (out_c, in_c * k*k), b: (out_c, 1)
    Mat<S> gW, gb;
    std::string name;

    void init_shape(int in, int out, int k, std::string n) {
        in_c = in;
        out_c = out;
        ksize = k;
        name = std::move(n);
        W = Mat<S>::Zero(out, in * k * k);
        b = Mat<S>::Zero(out, 1);
        gW = Mat<S>::Zero(W.rows(), W.cols());
        gb = Mat<S>::Zero(b.rows(), b.cols());
    }

    void init_he(Rng& rng, double scale) {
        const double std = scale * std::sqrt(2.0 / (in_c * ksize * ksize));
        for (Eigen::Index i = 0; i < W.rows(); ++i)
            for (Eigen::Index j = 0; j < W.cols(); ++j) W(i, j) = static_cast<S>(rng.normal() * std);
        b.setZero();
    }

    Mat<S> forward(const Eigen::Ref<const Mat<S>>& x, int h, int w) const {
        Mat<S> y;
        if (ksize == 1) {
            y.noalias() = W * x;
        } else {
            Mat<S> col;
            im2col3<S>(x, h, w, col);
            y.noalias() = W * col;
        }
        y.colwise() += b.col(0);
        return y;
    }

    // Accumulates parameter gradients and adds the input gradient into dx.
    void backward(const Eigen::Ref<const Mat<S>>& x, int h, int w, const Mat<S>& dy,
                  Eigen::Ref<Mat<S>> dx) {
        gb.col(0) += dy.rowwise().sum();
        if (ksize == 1) {
            gW.noalias() += dy * x.transpose();
            dx.noalias() += W.transpose() * dy;
        } else {
            Mat<S> col;
            im2col3<S>(x, h, w, col);
            gW.noalias() += dy * col.transpose();
            Mat<S> dcol;
            dcol.noalias() = W.transpose() * dy;
            col2im3_add<S>(dcol, h, w, dx);
        }
    }

    void collect(std::vector<ParamRef<S>>& out) {
        out.push_back({name + ".W", &W, &gW});
        out.push_back({name + ".b", &b, &gb});
    }
};

inline float leaky_slope() { return 0.2f; }

// ---------------------------------------------------------------------------
// ESRGAN-style dense block: five 3x3 convolutions with growing concatenated
// input, LeakyReLU(0.2) between, linear zero-initialized tail so the block
// contributes nothing at initialization.
// ---------------------------------------------------------------------------

template <class S>
struct DenseTape {
    Mat<S> buf;  // (in_c + 4*growth, h*w): input plus the four activations
    int h = 0, w = 0;
};

template <class S>
struct DenseBlock {
    int in_c = 0, out_c = 0, growth = 0;
    Conv2d<S> conv[5];

    void init_shape(int in, int out, int g, const std::string& n) {
        in_c = in;
        out_c = out;
        growth = g;
        for (int i = 0; i < 4; ++i) conv[i].init_shape(in + i * g, g, 3, n + ".c" + std::to_string(i));
        conv[4].init_shape(in + 4 * g, out, 3, n + ".c4");
    }

    void init_weights(Rng& rng) {
        for (int i = 0; i < 4; ++i) conv[i].init_he(rng, 0.1);
        conv[4].W.setZero();  // identity contribution at init
        conv[4].b.setZero();
    }

    Mat<S> forward(const Eigen::Ref<const Mat<S>>& x, int h, int w, DenseTape<S>* tape) const {
        Mat<S> buf(in_c + 4 * growth, x.cols());
        buf.topRows(in_c) = x;
        for (int i = 0; i < 4; ++i) {
            Mat<S> y = conv[i].forward(buf.topRows(in_c + i * growth), h, w);
            buf.middleRows(in_c + i * growth, growth) = y.unaryExpr([](S v) {
                return v > S(0) ? v : S(leaky_slope()) * v;
            });
        }
        Mat<S> out = conv[4].forward(buf, h, w);
        if (tape) {
            tape->buf = std::move(buf);
            tape->h = h;
            tape->w = w;
        }
        return out;
    }

    // Returns the gradient with respect to the block input.
    Mat<S> backward(const Mat<S>& dout, const DenseTape<S>& tape) {
        const int h = tape.h, w = tape.w;
        Mat<S> dbuf = Mat<S>::Zero(tape.buf.rows(), tape.buf.cols());
        conv[4].backward(tape.buf, h, w, dout, dbuf);
        for (int i = 3; i >= 0; --i) {
            const int row0 = in_c + i * growth;
            Mat<S> dy = dbuf.middleRows(row0, growth);
            const auto act = tape.buf.middleRows(row0, growth);
            for (Eigen::Index r = 0; r < dy.rows(); ++r)
                for (Eigen::Index cidx = 0; cidx < dy.cols(); ++cidx)
                    if (act(r, cidx) <= S(0)) dy(r, cidx) *= S(leaky_slope());
            conv[i].backward(tape.buf.topRows(row0), h, w, dy, dbuf.topRows(row0));
        }
        return dbuf.topRows(in_c);
    }

    void collect(std::vector<ParamRef<S>>& out) {
        for (auto& c : conv) c.collect(out);
    }
};

// ---------------------------------------------------------------------------
// Invertible 1x1 convolution across all channels (a full channel mix).
// ---------------------------------------------------------------------------

template <class S>
struct ChannelMix {
    Mat<S> K, gK;
    std::string name;

    void init_shape(int c, std::string n) {
        name = std::move(n);
        K = Mat<S>::Identity(c, c);
        gK = Mat<S>::Zero(c, c);
    }

    // Random orthogonal kernel concentrated near the identity: QR of
    // I + eps*G with the R-diagonal signs fixed. Orthogonality guarantees
    // invertibility; staying near I keeps the untrained network benign.
    void init_weights(Rng& rng, double eps = 0.05) {
        const int c = static_cast<int>(K.rows());
        Eigen::MatrixXd g(c, c);
        for (int i = 0; i < c; ++i)
            for (int j = 0; j < c; ++j) g(i, j) = rng.normal() * eps / std::sqrt(static_cast<double>(c));
        Eigen::MatrixXd a = Eigen::MatrixXd::Identity(c, c) + g;
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
        Eigen::MatrixXd q = qr.householderQ();
        Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
        for (int i = 0; i < c; ++i)
            if (r(i, i) < 0) q.col(i) = -q.col(i);
        for (int i = 0; i < c; ++i)
            for (int j = 0; j < c; ++j) K(i, j) = static_cast<S>(q(i, j));
    }

    double abs_det() const {
        Eigen::MatrixXd kd = K.template cast<double>();
        return std::abs(Eigen::PartialPivLU<Eigen::MatrixXd>(kd).determinant());
    }

    void require_invertible() const {
        if (!(abs_det() > 1e-8))
            throw ModelError("1x1 kernel '" + name + "' is numerically singular");
    }

    Mat<S> inverse_kernel() const {
        require_invertible();
        Eigen::MatrixXd kd = K.template cast<double>();
        Eigen::MatrixXd inv = kd.inverse();
        Mat<S> out(K.rows(), K.cols());
        for (Eigen::Index i = 0; i < K.rows(); ++i)
            for (Eigen::Index j = 0; j < K.cols(); ++j) out(i, j) = static_cast<S>(inv(i, j));
        return out;
    }

    Mat<S> forward(const Mat<S>& x) const { return K * x; }

    Mat<S> backward(const Mat<S>& x, const Mat<S>& dy) {
        gK.noalias() += dy * x.transpose();
        return K.transpose() * dy;
    }

    Mat<S> inverse_forward(const Mat<S>& x, const Mat<S>& kinv) const { return kinv * x; }

    // One relaxation step toward the orthogonal manifold:
    // K <- K - gamma * K (K^T K - I). Keeps the kernel invertible and
    // well-conditioned throughout training; a no-op once K is orthogonal.
    void relax_toward_orthogonal(double gamma) {
        Mat<S> g = K.transpose() * K;
        g.diagonal().array() -= S(1);
        K -= static_cast<S>(gamma) * (K * g);
    }

    // Backward through y = K^{-1} x: dK = -K^{-T} dy x^T K^{-T}.
    Mat<S> inverse_backward(const Mat<S>& x, const Mat<S>& dy, const Mat<S>& kinv) {
        Mat<S> kit = kinv.transpose();
        gK.noalias() -= kit * dy * x.transpose() * kit;
        return kit * dy;
    }

    void collect(std::vector<ParamRef<S>>& out) { out.push_back({name + ".K", &K, &gK}); }
};

// ---------------------------------------------------------------------------
// Affine coupling block (carrier side 12 channels, secret side 16).
//   (xc', xs') = K [xc; xs]
//   ac = xc' + phi(xs')
//   as = xs' o exp(clamp(rho(ac))) + eta(ac)
// clamp(t) = bound * tanh(t / bound) keeps the amplification inside
// [e^-bound, e^bound].
// ---------------------------------------------------------------------------

template <class S>
struct AcbTape {
    Mat<S> x28;         // mix input
    Mat<S> xs_prime;    // secret half after the mix
    Mat<S> sclamp, ex;  // clamped rho output and its exponential
    DenseTape<S> phi_t, rho_t, eta_t;
    int h = 0, w = 0;
};

template <class S>
struct AcbInvTape {
    Mat<S> z28;         // mix-inverse input [xc'; xs']
    Mat<S> xs_prime;    // == z28 bottom rows (kept for clarity of the math)
    Mat<S> sclamp, em;  // clamped rho output and exp(-s)
    DenseTape<S> phi_t, rho_t, eta_t;
    int h = 0, w = 0;
};

template <class S>
struct Acb {
    int ca = 12, cs = 16;
    S bound = S(2);
    ChannelMix<S> mix;
    DenseBlock<S> phi, rho, eta;

    void init_shape(int ca_, int cs_, int growth, S clamp_bound, const std::string& n) {
        ca = ca_;
        cs = cs_;
        bound = clamp_bound;
        mix.init_shape(ca + cs, n + ".mix");
        phi.init_shape(cs, ca, growth, n + ".phi");
        rho.init_shape(ca, cs, growth, n + ".rho");
        eta.init_shape(ca, cs, growth, n + ".eta");
    }

    void init_weights(Rng& rng) {
        mix.init_weights(rng);
        phi.init_weights(rng);
        rho.init_weights(rng);
        eta.init_weights(rng);
    }

    Mat<S> clamp_fn(const Mat<S>& r) const {
        const S b = bound;
        return r.unaryExpr([b](S v) { return b * std::tanh(v / b); });
    }

    void forward(const Mat<S>& xc, const Mat<S>& xs, int h, int w, Mat<S>& ac, Mat<S>& as,
                 AcbTape<S>* tape) const {
        Mat<S> x28(ca + cs, xc.cols());
        x28.topRows(ca) = xc;
        x28.bottomRows(cs) = xs;
        Mat<S> y28 = mix.forward(x28);
        Mat<S> xs_p = y28.bottomRows(cs);

        DenseTape<S>*pt = nullptr, *rt = nullptr, *et = nullptr;
        if (tape) {
            pt = &tape->phi_t;
            rt = &tape->rho_t;
            et = &tape->eta_t;
        }
        ac = y28.topRows(ca) + phi.forward(xs_p, h, w, pt);
        Mat<S> s = clamp_fn(rho.forward(ac, h, w, rt));
        Mat<S> ex = s.unaryExpr([](S v) { return std::exp(v); });
        as = xs_p.cwiseProduct(ex) + eta.forward(ac, h, w, et);

        if (tape) {
            tape->x28 = std::move(x28);
            tape->xs_prime = std::move(xs_p);
            tape->sclamp = std::move(s);
            tape->ex = std::move(ex);
            tape->h = h;
            tape->w = w;
        }
    }

    // Gradients flow from (dac, das) back to the block input halves.
    void backward(const Mat<S>& dac_in, const Mat<S>& das, const AcbTape<S>& tape, Mat<S>& dxc,
                  Mat<S>& dxs) {
        const int h = tape.h, w = tape.w;
        // as = xs' o ex + eta(ac)
        Mat<S> dxs_p = das.cwiseProduct(tape.ex);
        Mat<S> ds = das.cwiseProduct(tape.xs_prime).cwiseProduct(tape.ex);
        const S b = bound;
        Mat<S> dr = ds.binaryExpr(tape.sclamp, [b](S g, S s) {
            const S t = s / b;
            return g * (S(1) - t * t);
        });
        Mat<S> dac = dac_in;
        dac += eta.backward(das, tape.eta_t);
        dac += rho.backward(dr, tape.rho_t);
        // ac = xc' + phi(xs')
        dxs_p += phi.backward(dac, tape.phi_t);
        Mat<S> dy28(ca + cs, dac.cols());
        dy28.topRows(ca) = dac;
        dy28.bottomRows(cs) = dxs_p;
        Mat<S> dx28 = mix.backward(tape.x28, dy28);
        dxc = dx28.topRows(ca);
        dxs = dx28.bottomRows(cs);
        (void)h;
        (void)w;
    }

    // Inverse data flow (revealing direction).
    void inverse_forward(const Mat<S>& ac, const Mat<S>& as, int h, int w, Mat<S>& xc, Mat<S>& xs,
                         const Mat<S>& kinv, AcbInvTape<S>* tape) const {
        DenseTape<S>*pt = nullptr, *rt = nullptr, *et = nullptr;
        if (tape) {
            pt = &tape->phi_t;
            rt = &tape->rho_t;
            et = &tape->eta_t;
        }
        Mat<S> s = clamp_fn(rho.forward(ac, h, w, rt));
        Mat<S> em = s.unaryExpr([](S v) { return std::exp(-v); });
        Mat<S> xs_p = (as - eta.forward(ac, h, w, et)).cwiseProduct(em);
        Mat<S> xc_p = ac - phi.forward(xs_p, h, w, pt);
        Mat<S> z28(ca + cs, ac.cols());
        z28.topRows(ca) = xc_p;
        z28.bottomRows(cs) = xs_p;
        Mat<S> x28 = mix.inverse_forward(z28, kinv);
        xc = x28.topRows(ca);
        xs = x28.bottomRows(cs);
        if (tape) {
            tape->z28 = std::move(z28);
            tape->xs_prime = tape->z28.bottomRows(cs);
            tape->sclamp = std::move(s);
            tape->em = std::move(em);
            tape->h = h;
            tape->w = w;
        }
    }

    // Backward through the inverse flow: (dxc, dxs) -> (dac, das).
    void inverse_backward(const Mat<S>& dxc, const Mat<S>& dxs, const AcbInvTape<S>& tape,
                          const Mat<S>& kinv, Mat<S>& dac, Mat<S>& das) {
        Mat<S> dx28(ca + cs, dxc.cols());
        dx28.topRows(ca) = dxc;
        dx28.bottomRows(cs) = dxs;
        Mat<S> dz28 = mix.inverse_backward(tape.z28, dx28, kinv);
        Mat<S> dxc_p = dz28.topRows(ca);
        Mat<S> dxs_p = dz28.bottomRows(cs);
        // xc' = ac - phi(xs'): the gradient reaching phi's output is -dxc'.
        dac = dxc_p;
        Mat<S> g_phi = -dxc_p;
        dxs_p += phi.backward(g_phi, tape.phi_t);
        // xs' = (as - eta(ac)) o em, with d(xs')/ds = -xs'
        das = dxs_p.cwiseProduct(tape.em);
        Mat<S> xs_p = tape.z28.bottomRows(cs);
        Mat<S> ds = -(dxs_p.cwiseProduct(xs_p));
        const S b = bound;
        Mat<S> dr = ds.binaryExpr(tape.sclamp, [b](S g, S s) {
            const S t = s / b;
            return g * (S(1) - t * t);
        });
        Mat<S> g_eta = -das;
        dac += eta.backward(g_eta, tape.eta_t);
        dac += rho.backward(dr, tape.rho_t);
    }

    void collect(std::vector<ParamRef<S>>& out) {
        mix.collect(out);
        phi.collect(out);
        rho.collect(out);
        eta.collect(out);
    }
};

// ---------------------------------------------------------------------------
// Feature fusion block: residual chain of dense blocks on the stacked
// carrier+secret channels.
// ---------------------------------------------------------------------------

template <class S>
struct FfbTape {
    std::vector<Mat<S>> inputs;
    std::vector<DenseTape<S>> tapes;
    int h = 0, w = 0;
};

template <class S>
struct Ffb {
    int channels = 7;
    std::vector<DenseBlock<S>> blocks;

    void init_shape(int c, int n_blocks, int growth, const std::string& n) {
        channels = c;
        blocks.resize(n_blocks);
        for (int i = 0; i < n_blocks; ++i)
            blocks[i].init_shape(c, c, growth, n + ".db" + std::to_string(i));
    }

    void init_weights(Rng& rng) {
        for (auto& b : blocks) b.init_weights(rng);
    }

    Mat<S> forward(const Mat<S>& x, int h, int w, FfbTape<S>* tape) const {
        Mat<S> cur = x;
        if (tape) {
            tape->inputs.clear();
            tape->tapes.resize(blocks.size());
            tape->h = h;
            tape->w = w;
        }
        for (size_t i = 0; i < blocks.size(); ++i) {
            if (tape) tape->inputs.push_back(cur);
            Mat<S> delta = blocks[i].forward(cur, h, w, tape ? &tape->tapes[i] : nullptr);
            cur += delta;
        }
        return cur;
    }

    Mat<S> backward(const Mat<S>& dout, const FfbTape<S>& tape) {
        Mat<S> d = dout;
        for (int i = static_cast<int>(blocks.size()) - 1; i >= 0; --i)
            d += blocks[i].backward(d, tape.tapes[i]);
        return d;
    }

    void collect(std::vector<ParamRef<S>>& out) {
        for (auto& b : blocks) b.collect(out);
    }
};

}  // namespace vizsteg::nn
