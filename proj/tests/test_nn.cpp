#include <doctest.h>

#include <functional>

#include "vizsteg/common.hpp"
#include "vizsteg/nn.hpp"

using namespace vizsteg;
using nn::Mat;

namespace {

using MatD = Mat<double>;

MatD random_mat(Rng& rng, Eigen::Index r, Eigen::Index c, double scale = 0.5) {
    MatD m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal() * scale;
    return m;
}

void randomize(std::vector<nn::ParamRef<double>>& params, Rng& rng, double scale = 0.2) {
    for (auto& p : params)
        for (Eigen::Index i = 0; i < p.value->size(); ++i) p.value->data()[i] = rng.normal() * scale;
}

double rel_err(double a, double b) {
    const double denom = std::max({std::abs(a), std::abs(b), 1e-9});
    return std::abs(a - b) / denom;
}

// Central finite difference through an arbitrary scalar loss.
double fd(const std::function<double()>& loss, double* x, double eps = 1e-6) {
    const double orig = *x;
    *x = orig + eps;
    const double lp = loss();
    *x = orig - eps;
    const double lm = loss();
    *x = orig;
    return (lp - lm) / (2 * eps);
}

// Check a sample of parameter gradients against finite differences.
void check_param_grads(std::vector<nn::ParamRef<double>>& params, const std::function<double()>& loss,
                       Rng& rng, int samples, double tol = 2e-5) {
    for (int s = 0; s < samples; ++s) {
        auto& p = params[rng.uniform_int(params.size())];
        if (p.value->size() == 0) continue;
        const Eigen::Index i = static_cast<Eigen::Index>(rng.uniform_int(p.value->size()));
        const double numeric = fd(loss, p.value->data() + i);
        const double analytic = p.grad->data()[i];
        INFO(p.name << "[" << i << "] analytic=" << analytic << " numeric=" << numeric);
        CHECK(rel_err(analytic, numeric) <= tol);
    }
}

}  // namespace

TEST_CASE("conv2d 3x3 gradients match finite differences") {
    Rng rng(31);
    const int ci = 3, co = 2, h = 5, w = 6;
    nn::Conv2d<double> conv;
    conv.init_shape(ci, co, 3, "conv");
    std::vector<nn::ParamRef<double>> params;
    conv.collect(params);
    randomize(params, rng);
    MatD x = random_mat(rng, ci, h * w);

    auto loss = [&] { return 0.5 * conv.forward(x, h, w).squaredNorm(); };

    conv.gW.setZero();
    conv.gb.setZero();
    MatD dx = MatD::Zero(ci, h * w);
    MatD y = conv.forward(x, h, w);
    conv.backward(x, h, w, y, dx);

    check_param_grads(params, loss, rng, 25);
    for (int s = 0; s < 15; ++s) {
        const Eigen::Index i = static_cast<Eigen::Index>(rng.uniform_int(x.size()));
        const double numeric = fd(loss, x.data() + i);
        CHECK(rel_err(dx.data()[i], numeric) <= 2e-5);
    }
}

TEST_CASE("dense block is an exact zero contribution at init") {
    Rng rng(32);
    nn::DenseBlock<double> db;
    db.init_shape(7, 7, 8, "db");
    db.init_weights(rng);
    MatD x = random_mat(rng, 7, 64);
    MatD y = db.forward(x, 8, 8, nullptr);
    CHECK(y.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("dense block gradients match finite differences") {
    Rng rng(33);
    nn::DenseBlock<double> db;
    db.init_shape(4, 3, 4, "db");
    std::vector<nn::ParamRef<double>> params;
    db.collect(params);
    randomize(params, rng);
    const int h = 4, w = 5;
    MatD x = random_mat(rng, 4, h * w);

    auto loss = [&] { return 0.5 * db.forward(x, h, w, nullptr).squaredNorm(); };

    for (auto& p : params) p.grad->setZero();
    nn::DenseTape<double> tape;
    MatD y = db.forward(x, h, w, &tape);
    MatD dx = db.backward(y, tape);

    check_param_grads(params, loss, rng, 30);
    for (int s = 0; s < 10; ++s) {
        const Eigen::Index i = static_cast<Eigen::Index>(rng.uniform_int(x.size()));
        CHECK(rel_err(dx.data()[i], fd(loss, x.data() + i)) <= 2e-5);
    }
}

TEST_CASE("channel mix: orthogonal near-identity init, forward and inverse gradients") {
    Rng rng(34);
    nn::ChannelMix<double> mix;
    mix.init_shape(6, "mix");
    mix.init_weights(rng);
    CHECK((mix.K.transpose() * mix.K - MatD::Identity(6, 6)).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(mix.abs_det() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK((mix.K - MatD::Identity(6, 6)).cwiseAbs().maxCoeff() <= 0.2);  // near identity

    MatD x = random_mat(rng, 6, 10);
    auto loss_f = [&] { return 0.5 * mix.forward(x).squaredNorm(); };
    mix.gK.setZero();
    MatD y = mix.forward(x);
    MatD dx = mix.backward(x, y);
    std::vector<nn::ParamRef<double>> params;
    mix.collect(params);
    check_param_grads(params, loss_f, rng, 15);
    for (int s = 0; s < 8; ++s) {
        const Eigen::Index i = static_cast<Eigen::Index>(rng.uniform_int(x.size()));
        CHECK(rel_err(dx.data()[i], fd(loss_f, x.data() + i)) <= 2e-5);
    }

    auto loss_i = [&] { return 0.5 * mix.inverse_forward(x, mix.inverse_kernel()).squaredNorm(); };
    mix.gK.setZero();
    MatD kinv = mix.inverse_kernel();
    MatD yi = mix.inverse_forward(x, kinv);
    MatD dxi = mix.inverse_backward(x, yi, kinv);
    check_param_grads(params, loss_i, rng, 15);
    for (int s = 0; s < 8; ++s) {
        const Eigen::Index i = static_cast<Eigen::Index>(rng.uniform_int(x.size()));
        CHECK(rel_err(dxi.data()[i], fd(loss_i, x.data() + i)) <= 2e-5);
    }
}

TEST_CASE("channel mix flags singular kernels") {
    nn::ChannelMix<double> mix;
    mix.init_shape(4, "mix");
    mix.K.setZero();
    CHECK_THROWS_AS(mix.require_invertible(), ModelError);
}

TEST_CASE("coupling block: identity when nets are zero and the kernel is identity") {
    Rng rng(35);
    nn::Acb<double> acb;
    acb.init_shape(3, 4, 4, 2.0, "acb");
    // init_weights zeroes the dense tails; force the kernel to exact identity.
    acb.init_weights(rng);
    acb.mix.K = MatD::Identity(7, 7);
    MatD xc = random_mat(rng, 3, 12), xs = random_mat(rng, 4, 12);
    MatD ac, as;
    acb.forward(xc, xs, 3, 4, ac, as, nullptr);
    CHECK((ac - xc).cwiseAbs().maxCoeff() == 0.0);
    CHECK((as - xs).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("coupling block inverse undoes forward to machine precision") {
    Rng rng(36);
    nn::Acb<double> acb;
    acb.init_shape(3, 4, 4, 2.0, "acb");
    std::vector<nn::ParamRef<double>> params;
    acb.collect(params);
    randomize(params, rng, 0.1);  // active couplings, non-identity kernel
    MatD xc = random_mat(rng, 3, 20), xs = random_mat(rng, 4, 20);
    MatD ac, as, bc, bs;
    acb.forward(xc, xs, 4, 5, ac, as, nullptr);
    acb.inverse_forward(ac, as, 4, 5, bc, bs, acb.mix.inverse_kernel(), nullptr);
    CHECK((bc - xc).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((bs - xs).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("coupling block amplification is clamped to [e^-2, e^2]") {
    Rng rng(37);
    nn::Acb<double> acb;
    acb.init_shape(3, 4, 4, 2.0, "acb");
    std::vector<nn::ParamRef<double>> params;
    acb.collect(params);
    randomize(params, rng, 3.0);  // extreme weights drive rho hard
    MatD xc = random_mat(rng, 3, 16, 2.0), xs = random_mat(rng, 4, 16, 2.0);
    MatD ac, as;
    nn::AcbTape<double> tape;
    acb.forward(xc, xs, 4, 4, ac, as, &tape);
    CHECK(tape.ex.maxCoeff() <= std::exp(2.0) + 1e-9);
    CHECK(tape.ex.minCoeff() >= std::exp(-2.0) - 1e-9);
}

TEST_CASE("coupling block forward gradients match finite differences") {
    Rng rng(38);
    nn::Acb<double> acb;
    acb.init_shape(3, 4, 3, 2.0, "acb");
    std::vector<nn::ParamRef<double>> params;
    acb.collect(params);
    randomize(params, rng, 0.15);
    MatD xc = random_mat(rng, 3, 12), xs = random_mat(rng, 4, 12);

    auto loss = [&] {
        MatD ac, as;
        acb.forward(xc, xs, 3, 4, ac, as, nullptr);
        return 0.5 * (ac.squaredNorm() + as.squaredNorm());
    };

    for (auto& p : params) p.grad->setZero();
    nn::AcbTape<double> tape;
    MatD ac, as, dxc, dxs;
    acb.forward(xc, xs, 3, 4, ac, as, &tape);
    acb.backward(ac, as, tape, dxc, dxs);

    check_param_grads(params, loss, rng, 40);
    for (int s = 0; s < 10; ++s) {
        const Eigen::Index i = static_cast<Eigen::Index>(rng.uniform_int(xc.size()));
        CHECK(rel_err(dxc.data()[i], fd(loss, xc.data() + i)) <= 5e-5);
        const Eigen::Index j = static_cast<Eigen::Index>(rng.uniform_int(xs.size()));
        CHECK(rel_err(dxs.data()[j], fd(loss, xs.data() + j)) <= 5e-5);
    }
}

TEST_CASE("coupling block inverse gradients match finite differences") {
    Rng rng(39);
    nn::Acb<double> acb;
    acb.init_shape(3, 4, 3, 2.0, "acb");
    std::vector<nn::ParamRef<double>> params;
    acb.collect(params);
    randomize(params, rng, 0.15);
    MatD ac = random_mat(rng, 3, 12), as = random_mat(rng, 4, 12);

    auto loss = [&] {
        MatD xc, xs;
        acb.inverse_forward(ac, as, 3, 4, xc, xs, acb.mix.inverse_kernel(), nullptr);
        return 0.5 * (xc.squaredNorm() + xs.squaredNorm());
    };

    for (auto& p : params) p.grad->setZero();
    nn::AcbInvTape<double> tape;
    MatD kinv = acb.mix.inverse_kernel();
    MatD xc, xs, dac, das;
    acb.inverse_forward(ac, as, 3, 4, xc, xs, kinv, &tape);
    acb.inverse_backward(xc, xs, tape, kinv, dac, das);

    check_param_grads(params, loss, rng, 40);
    for (int s = 0; s < 10; ++s) {
        const Eigen::Index i = static_cast<Eigen::Index>(rng.uniform_int(ac.size()));
        CHECK(rel_err(dac.data()[i], fd(loss, ac.data() + i)) <= 5e-5);
        const Eigen::Index j = static_cast<Eigen::Index>(rng.uniform_int(as.size()));
        CHECK(rel_err(das.data()[j], fd(loss, as.data() + j)) <= 5e-5);
    }
}

TEST_CASE("ffb is the identity at init and differentiable when randomized") {
    Rng rng(40);
    nn::Ffb<double> ffb;
    ffb.init_shape(7, 2, 4, "ffb");
    ffb.init_weights(rng);
    MatD x = random_mat(rng, 7, 30);
    CHECK((ffb.forward(x, 5, 6, nullptr) - x).cwiseAbs().maxCoeff() == 0.0);

    std::vector<nn::ParamRef<double>> params;
    ffb.collect(params);
    randomize(params, rng, 0.1);
    auto loss = [&] { return 0.5 * ffb.forward(x, 5, 6, nullptr).squaredNorm(); };
    for (auto& p : params) p.grad->setZero();
    nn::FfbTape<double> tape;
    MatD y = ffb.forward(x, 5, 6, &tape);
    MatD dx = ffb.backward(y, tape);
    check_param_grads(params, loss, rng, 30);
    for (int s = 0; s < 10; ++s) {
        const Eigen::Index i = static_cast<Eigen::Index>(rng.uniform_int(x.size()));
        CHECK(rel_err(dx.data()[i], fd(loss, x.data() + i)) <= 5e-5);
    }
}
