#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "vizsteg/image.hpp"
#include "vizsteg/nn.hpp"
#include "vizsteg/tensor.hpp"
#include "vizsteg/wavelet.hpp"

namespace vizsteg::stegnet {

// Carrier is RGB, secrets are up to 3 data channels plus 1 QR channel.
constexpr int kCarrierChannels = 3;
constexpr int kSecretChannels = 4;
constexpr int kCarrierSide = 4 * kCarrierChannels;  // 12 after DWT
constexpr int kSecretSide = 4 * kSecretChannels;    // 16 after reshape

struct NetConfig {
    int n_acb = 32;
    int growth = 32;
    int ffb_blocks = 2;
    float m_qr = 0.15f;
    float clamp_bound = 2.0f;
};

template <class S>
struct Model {
    NetConfig cfg;
    nn::Ffb<S> ffb_enc, ffb_dec;
    std::vector<nn::Acb<S>> acbs;

    void build(const NetConfig& c) {
        cfg = c;
        if (c.n_acb < 1 || c.growth < 1 || c.ffb_blocks < 1)
            throw ParamError("network config fields must be positive");
        const int ch = kCarrierChannels + kSecretChannels;
        ffb_enc.init_shape(ch, c.ffb_blocks, c.growth, "ffb_enc");
        ffb_dec.init_shape(ch, c.ffb_blocks, c.growth, "ffb_dec");
        acbs.resize(c.n_acb);
        for (int i = 0; i < c.n_acb; ++i)
            acbs[i].init_shape(kCarrierSide, kSecretSide, c.growth, static_cast<S>(c.clamp_bound),
                               "acb" + std::to_string(i));
    }

    void init_weights(uint64_t seed) {
        Rng rng(seed);
        ffb_enc.init_weights(rng);
        ffb_dec.init_weights(rng);
        for (auto& a : acbs) a.init_weights(rng);
    }

    std::vector<nn::ParamRef<S>> params() {
        std::vector<nn::ParamRef<S>> out;
        ffb_enc.collect(out);
        ffb_dec.collect(out);
        for (auto& a : acbs) a.collect(out);
        return out;
    }

    void zero_grads() {
        for (auto& p : params()) p.grad->setZero();
    }

    void validate() const {
        for (const auto& a : acbs) a.mix.require_invertible();
    }
};

using ModelF = Model<float>;

// ---------------------------------------------------------------------------
// Inference pipeline
// ---------------------------------------------------------------------------

template <class S>
void check_conceal_shapes(const Tensor<S>& carrier, const Tensor<S>& secrets) {
    if (carrier.c != kCarrierChannels) throw ShapeError("carrier must have 3 channels");
    if (secrets.c != kSecretChannels) throw ShapeError("secret stack must have 4 channels");
    if (carrier.h != secrets.h || carrier.w != secrets.w)
        throw ShapeError("carrier and secrets must share dimensions");
    if (carrier.h % 2 != 0 || carrier.w % 2 != 0)
        throw ShapeError("carrier dimensions must be even (pad upstream)");
}

// FFB -> DWT/reshape -> coupling chain. No clamping or quantization; `aux`
// comes back so invertibility can be tested exactly.
template <class S>
std::pair<Tensor<S>, Tensor<S>> conceal_core(const Model<S>& m, const Tensor<S>& carrier,
                                             const Tensor<S>& secrets) {
    check_conceal_shapes(carrier, secrets);
    const int h = carrier.h, w = carrier.w;
    Tensor<S> x7 = concat_channels(carrier, secrets);
    Tensor<S> f7 = x7;
    f7.m = m.ffb_enc.forward(x7.m, h, w, nullptr);
    Tensor<S> a = dwt(slice_channels(f7, 0, kCarrierChannels));
    Tensor<S> b = space_to_depth(slice_channels(f7, kCarrierChannels, kSecretChannels));
    nn::Mat<S> ac = a.m, as = b.m;
    for (const auto& blk : m.acbs) {
        nn::Mat<S> nc, ns;
        blk.forward(ac, as, a.h, a.w, nc, ns, nullptr);
        ac = std::move(nc);
        as = std::move(ns);
    }
    Tensor<S> enc_w(kCarrierSide, a.h, a.w);
    enc_w.m = ac;
    Tensor<S> aux(kSecretSide, a.h, a.w);
    aux.m = as;
    return {iwt(enc_w), std::move(aux)};
}

// Inverse chain -> reshape/IWT -> decode-side FFB. `aux` substitutes the
// constant matrix fed beside the encoded image (zeros in normal operation).
template <class S>
std::pair<Tensor<S>, Tensor<S>> reveal_core(const Model<S>& m, const Tensor<S>& encoded,
                                            const std::optional<Tensor<S>>& aux = std::nullopt) {
    if (encoded.c != kCarrierChannels) throw ShapeError("encoded image must have 3 channels");
    if (encoded.h % 2 != 0 || encoded.w % 2 != 0) throw ShapeError("encoded dimensions must be even");
    Tensor<S> a = dwt(encoded);
    nn::Mat<S> ac = a.m;
    nn::Mat<S> as;
    if (aux) {
        if (aux->c != kSecretSide || aux->h != a.h || aux->w != a.w)
            throw ShapeError("aux matrix shape mismatch");
        as = aux->m;
    } else {
        as = nn::Mat<S>::Zero(kSecretSide, a.pixels());
    }
    for (int i = static_cast<int>(m.acbs.size()) - 1; i >= 0; --i) {
        const nn::Mat<S> kinv = m.acbs[i].mix.inverse_kernel();
        nn::Mat<S> nc, ns;
        m.acbs[i].inverse_forward(ac, as, a.h, a.w, nc, ns, kinv, nullptr);
        ac = std::move(nc);
        as = std::move(ns);
    }
    Tensor<S> cw(kCarrierSide, a.h, a.w);
    cw.m = ac;
    Tensor<S> sw(kSecretSide, a.h, a.w);
    sw.m = as;
    Tensor<S> car3 = iwt(cw);
    Tensor<S> sec4 = depth_to_space(sw);
    Tensor<S> g7 = concat_channels(car3, sec4);
    g7.m = m.ffb_dec.forward(g7.m, encoded.h, encoded.w, nullptr);
    return {slice_channels(g7, kCarrierChannels, kSecretChannels),
            slice_channels(g7, 0, kCarrierChannels)};
}

// Full conceal: clamp to [0,1] and quantize onto the 8-bit grid.
struct ConcealResult {
    TensorF encoded;  // quantized, [0,1]
    TensorF aux;      // I_l, wavelet-domain secret-side output
};

inline ConcealResult conceal(const ModelF& m, const TensorF& carrier, const TensorF& secrets) {
    auto [pre, aux] = conceal_core(m, carrier, secrets);
    TensorF enc = pre;
    quantize_8bit(enc);
    return {std::move(enc), std::move(aux)};
}

struct RevealResult {
    TensorF secrets;  // 4 channels: data 0..2, QR 3 (still scaled by m_qr)
    TensorF carrier;
};

inline RevealResult reveal(const ModelF& m, const TensorF& encoded) {
    auto [sec, car] = reveal_core(m, encoded);
    return {std::move(sec), std::move(car)};
}

// ---------------------------------------------------------------------------
// Training graph: conceal -> quantize (straight-through) -> reveal with the
// zero matrix -> hybrid loss. Backward accumulates into the model grads.
// ---------------------------------------------------------------------------

template <class S>
struct TrainForward {
    nn::FfbTape<S> ffb_enc_t, ffb_dec_t;
    std::vector<nn::AcbTape<S>> acb_t;
    std::vector<nn::AcbInvTape<S>> inv_t;
    std::vector<nn::Mat<S>> kinvs;
    Tensor<S> x7, f7;
    Tensor<S> enc_pre, enc_q;
    Tensor<S> g7_in;   // [iwt(carrier side), reshaped secrets] entering ffb_dec
    Tensor<S> restored;  // 4 secret channels
    S l_mse = 0, l_freq = 0, l_res = 0, l_total = 0;
};

template <class S>
void masked_res_loss(const Tensor<S>& secrets, const Tensor<S>& restored,
                     const std::array<bool, 4>& mask, S& l_res) {
    l_res = 0;
    const S n = static_cast<S>(secrets.pixels());
    for (int i = 0; i < 4; ++i) {
        if (!mask[i]) continue;
        auto diff = (restored.m.row(i) - secrets.m.row(i)).eval();
        l_res += diff.cwiseAbs().sum() / n + diff.squaredNorm() / n;
    }
}

// `apply_quant` exists for gradient checking: the straight-through surrogate
// is by definition the gradient of the quantization-free graph.
template <class S>
TrainForward<S> train_forward(Model<S>& m, const Tensor<S>& carrier, const Tensor<S>& secrets,
                              const std::array<bool, 4>& mask, S alpha, S beta,
                              bool apply_quant = true) {
    check_conceal_shapes(carrier, secrets);
    const int h = carrier.h, w = carrier.w;
    TrainForward<S> fw;
    fw.acb_t.resize(m.acbs.size());
    fw.inv_t.resize(m.acbs.size());
    fw.kinvs.resize(m.acbs.size());

    fw.x7 = concat_channels(carrier, secrets);
    fw.f7 = fw.x7;
    fw.f7.m = m.ffb_enc.forward(fw.x7.m, h, w, &fw.ffb_enc_t);
    Tensor<S> a = dwt(slice_channels(fw.f7, 0, kCarrierChannels));
    Tensor<S> b = space_to_depth(slice_channels(fw.f7, kCarrierChannels, kSecretChannels));
    const int hh = a.h, ww = a.w;
    nn::Mat<S> ac = a.m, as = b.m;
    for (size_t i = 0; i < m.acbs.size(); ++i) {
        nn::Mat<S> nc, ns;
        m.acbs[i].forward(ac, as, hh, ww, nc, ns, &fw.acb_t[i]);
        ac = std::move(nc);
        as = std::move(ns);
    }
    Tensor<S> enc_w(kCarrierSide, hh, ww);
    enc_w.m = ac;
    fw.enc_pre = iwt(enc_w);
    fw.enc_q = fw.enc_pre;
    if (apply_quant) {
        quantize_8bit(fw.enc_q);
    } else {
        fw.enc_q.m = fw.enc_q.m.unaryExpr([](S v) { return v < S(0) ? S(0) : (v > S(1) ? S(1) : v); });
    }

    // Revealing path with the zero constant matrix.
    Tensor<S> ra = dwt(fw.enc_q);
    nn::Mat<S> rc = ra.m;
    nn::Mat<S> rs = nn::Mat<S>::Zero(kSecretSide, ra.pixels());
    for (int i = static_cast<int>(m.acbs.size()) - 1; i >= 0; --i) {
        fw.kinvs[i] = m.acbs[i].mix.inverse_kernel();
        nn::Mat<S> nc, ns;
        m.acbs[i].inverse_forward(rc, rs, hh, ww, nc, ns, fw.kinvs[i], &fw.inv_t[i]);
        rc = std::move(nc);
        rs = std::move(ns);
    }
    Tensor<S> cw(kCarrierSide, hh, ww);
    cw.m = rc;
    Tensor<S> sw(kSecretSide, hh, ww);
    sw.m = rs;
    fw.g7_in = concat_channels(iwt(cw), depth_to_space(sw));
    Tensor<S> g7 = fw.g7_in;
    g7.m = m.ffb_dec.forward(fw.g7_in.m, h, w, &fw.ffb_dec_t);
    fw.restored = slice_channels(g7, kCarrierChannels, kSecretChannels);

    const S n_img = static_cast<S>(carrier.m.size());
    fw.l_mse = (fw.enc_q.m - carrier.m).squaredNorm() / n_img;
    Tensor<S> wc = dwt(carrier);
    Tensor<S> we = dwt(fw.enc_q);
    const S n_ll = static_cast<S>(kCarrierChannels) * hh * ww;
    fw.l_freq = (we.m.topRows(kCarrierChannels) - wc.m.topRows(kCarrierChannels)).squaredNorm() / n_ll;
    masked_res_loss(secrets, fw.restored, mask, fw.l_res);
    fw.l_total = fw.l_mse + alpha * fw.l_freq + beta * fw.l_res;
    return fw;
}

template <class S>
void train_backward(Model<S>& m, TrainForward<S>& fw, const Tensor<S>& carrier,
                    const Tensor<S>& secrets, const std::array<bool, 4>& mask, S alpha, S beta,
                    nn::Mat<S>* d_restored_out = nullptr) {
    const int h = carrier.h, w = carrier.w;
    const int hh = h / 2, ww = w / 2;
    const S n_img = static_cast<S>(carrier.m.size());
    const S n_px = static_cast<S>(carrier.pixels());

    // d l_res / d restored (masked channels only)
    Tensor<S> d_g7(kCarrierChannels + kSecretChannels, h, w);
    for (int i = 0; i < 4; ++i) {
        if (!mask[i]) continue;
        auto diff = (fw.restored.m.row(i) - secrets.m.row(i)).eval();
        d_g7.m.row(kCarrierChannels + i) =
            beta * (diff.unaryExpr([](S v) { return v > S(0) ? S(1) : (v < S(0) ? S(-1) : S(0)); }) +
                    S(2) * diff) /
            static_cast<S>(secrets.pixels());
    }
    if (d_restored_out) *d_restored_out = d_g7.m.bottomRows(kSecretChannels);
    nn::Mat<S> d_g7in = m.ffb_dec.backward(d_g7.m, fw.ffb_dec_t);

    Tensor<S> d_car3(kCarrierChannels, h, w);
    d_car3.m = d_g7in.topRows(kCarrierChannels);
    Tensor<S> d_sec4(kSecretChannels, h, w);
    d_sec4.m = d_g7in.bottomRows(kSecretChannels);
    nn::Mat<S> d_rc = dwt(d_car3).m;              // iwt backward
    nn::Mat<S> d_rs = space_to_depth(d_sec4).m;   // depth_to_space backward

    // back through the inverse chain (reveal applied blocks n-1..0, so the
    // backward sweep walks 0..n-1)
    for (size_t i = 0; i < m.acbs.size(); ++i) {
        nn::Mat<S> dac, das;
        m.acbs[i].inverse_backward(d_rc, d_rs, fw.inv_t[i], fw.kinvs[i], dac, das);
        d_rc = std::move(dac);
        d_rs = std::move(das);  // gradient into I_z, discarded after the loop
    }
    Tensor<S> d_ra(kCarrierSide, hh, ww);
    d_ra.m = d_rc;
    Tensor<S> d_encq = iwt(d_ra);  // dwt backward

    // encoding losses
    d_encq.m += S(2) / n_img * (fw.enc_q.m - carrier.m);
    {
        Tensor<S> wc = dwt(carrier);
        Tensor<S> we = dwt(fw.enc_q);
        Tensor<S> d_w(kCarrierSide, hh, ww);
        const S n_ll = static_cast<S>(kCarrierChannels) * hh * ww;
        d_w.m.topRows(kCarrierChannels) =
            alpha * S(2) / n_ll * (we.m.topRows(kCarrierChannels) - wc.m.topRows(kCarrierChannels));
        d_encq.m += iwt(d_w).m;
    }

    // Rounding is straight-through; the clamp keeps its true subgradient
    // (the revealing network never sees values beyond the clamp, so passing
    // gradient there would chase gains that cannot materialize).
    Tensor<S> d_encpre = d_encq;
    for (Eigen::Index i = 0; i < d_encpre.m.rows(); ++i)
        for (Eigen::Index j = 0; j < d_encpre.m.cols(); ++j) {
            const S v = fw.enc_pre.m(i, j);
            if (v < S(0) || v > S(1)) d_encpre.m(i, j) = S(0);
        }

    nn::Mat<S> d_ac = dwt(d_encpre).m;  // iwt backward
    nn::Mat<S> d_as = nn::Mat<S>::Zero(kSecretSide, static_cast<Eigen::Index>(hh) * ww);  // I_l: no loss
    for (int i = static_cast<int>(m.acbs.size()) - 1; i >= 0; --i) {
        nn::Mat<S> dxc, dxs;
        m.acbs[i].backward(d_ac, d_as, fw.acb_t[i], dxc, dxs);
        d_ac = std::move(dxc);
        d_as = std::move(dxs);
    }
    Tensor<S> d_a(kCarrierSide, hh, ww);
    d_a.m = d_ac;
    Tensor<S> d_b(kSecretSide, hh, ww);
    d_b.m = d_as;
    Tensor<S> d_f7(kCarrierChannels + kSecretChannels, h, w);
    d_f7.m.topRows(kCarrierChannels) = iwt(d_a).m;
    d_f7.m.bottomRows(kSecretChannels) = depth_to_space(d_b).m;
    (void)m.ffb_enc.backward(d_f7.m, fw.ffb_enc_t);  // input gradient unused
    (void)n_px;
}

// ---------------------------------------------------------------------------
// Checkpoint I/O (float models). `extra_json` and named side tensors
// round-trip trainer state (optimizer moments etc.).
// ---------------------------------------------------------------------------

struct NamedTensor {
    std::string name;
    nn::Mat<float>* mat;
};

void save_checkpoint(const std::string& path, ModelF& model, const std::string& extra_json = "",
                     const std::vector<NamedTensor>& side = {});
ModelF load_checkpoint(const std::string& path, std::string* extra_json = nullptr,
                       const std::vector<NamedTensor>& side = {});

}  // namespace vizsteg::stegnet
