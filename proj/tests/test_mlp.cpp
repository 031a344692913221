#include <cmath>
#include <cstddef>
#include <limits>
#include <sstream>
#include <tuple>
#include <utility>
#include <vector>

#include "doctest.h"
#include "lirl/core/rng.hpp"
#include "lirl/kernels/kernels.hpp"
#include "lirl/nn/mlp.hpp"

using namespace lirl;
namespace kn = lirl::kernels;

namespace {

struct BackendGuard {
    ~BackendGuard() { kn::force_backend(std::nullopt); }
};

std::vector<float> random_vec(std::size_t n, Rng& rng, double lo = -1.0, double hi = 1.0) {
    std::vector<float> v(n);
    for (auto& x : v) x = static_cast<float>(rng.uniform(lo, hi));
    return v;
}

// f64 forward of an Mlp<float>'s parameters, std::tanh activations
std::vector<double> reference_forward(const Mlp<float>& net, const std::vector<float>& x,
                                      int batch) {
    const auto& sizes = net.sizes();
    std::vector<double> cur(x.begin(), x.end());
    for (int l = 0; l < net.layer_count(); ++l) {
        const int in = sizes[l], out = sizes[l + 1];
        const float* w = net.params().data() + net.weight_offset(l);
        const float* b = net.params().data() + net.bias_offset(l);
        std::vector<double> next(static_cast<std::size_t>(batch) * out, 0.0);
        for (int r = 0; r < batch; ++r)
            for (int j = 0; j < out; ++j) {
                double s = b[j];
                for (int i = 0; i < in; ++i) s += cur[r * in + i] * static_cast<double>(w[i * out + j]);
                next[r * out + j] = (l + 1 < net.layer_count()) ? std::tanh(s) : s;
            }
        cur = std::move(next);
    }
    return cur;
}

}  // namespace

TEST_CASE("init is He-uniform with zero biases") {
    Mlp<float> net({10, 16, 4}, 99);
    const auto& p = net.params();
    double limit0 = std::sqrt(6.0 / 10), limit1 = std::sqrt(6.0 / 16);
    double max0 = 0.0;
    for (std::size_t i = 0; i < 160; ++i) {
        CHECK(std::abs(p[net.weight_offset(0) + i]) <= limit0);
        max0 = std::max(max0, static_cast<double>(std::abs(p[net.weight_offset(0) + i])));
    }
    for (std::size_t i = 0; i < 64; ++i)
        CHECK(std::abs(p[net.weight_offset(1) + i]) <= limit1);
    // fan-in-only limit: some draw exceeds the (fan_in + fan_out) bound
    CHECK(max0 > std::sqrt(6.0 / (10 + 16)));
    for (std::size_t i = 0; i < 16; ++i) CHECK(p[net.bias_offset(0) + i] == 0.0f);
    for (std::size_t i = 0; i < 4; ++i) CHECK(p[net.bias_offset(1) + i] == 0.0f);
    Mlp<float> other({10, 16, 4}, 100);
    CHECK(other.params() != net.params());
}

TEST_CASE("fp32 forward matches a float64 reference") {
    Mlp<float> net({5, 16, 16, 4}, 77);
    Rng rng(3);
    const int batch = 7;
    auto x = random_vec(5 * batch, rng, -2.0, 2.0);
    std::vector<float> y(4 * batch);
    net.forward(x.data(), batch, y.data());
    auto want = reference_forward(net, x, batch);
    for (std::size_t i = 0; i < y.size(); ++i)
        CHECK(y[i] == doctest::Approx(want[i]).epsilon(1e-4));

    // forward1 equals the batch path row for row
    std::vector<float> x0(x.begin(), x.begin() + 5);
    auto y0 = net.forward1(x0);
    REQUIRE(y0.size() == 4);
    for (int j = 0; j < 4; ++j) CHECK(y0[j] == doctest::Approx(y[j]).epsilon(1e-6));
}

TEST_CASE("params_changed refreshes cached transposes") {
    Mlp<float> net({3, 8, 2}, 5);
    Rng rng(6);
    auto x = random_vec(3, rng);
    auto before = net.forward1(x);
    for (auto& p : net.params()) p = static_cast<float>(rng.uniform(-0.4, 0.4));
    net.params_changed();
    auto after = net.forward1(x);
    CHECK(after != before);
    auto want = reference_forward(net, x, 1);
    for (int j = 0; j < 2; ++j) CHECK(after[j] == doctest::Approx(want[j]).epsilon(1e-4));
}

TEST_CASE("backward gradients match central differences") {
    Mlp<double> net({4, 8, 8, 2}, 123);
    Rng rng(9);
    const int batch = 3, in = 4, out = 2;
    std::vector<double> x(batch * in), target(batch * out);
    for (auto& v : x) v = rng.uniform(-1.5, 1.5);
    for (auto& v : target) v = rng.uniform(-1.0, 1.0);

    auto loss_of = [&]() {
        std::vector<double> y(batch * out);
        net.forward(x.data(), batch, y.data());
        double s = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) s += 0.5 * (y[i] - target[i]) * (y[i] - target[i]);
        return s;
    };

    std::vector<double> y(batch * out);
    net.forward(x.data(), batch, y.data());
    std::vector<double> dy(batch * out);
    for (std::size_t i = 0; i < dy.size(); ++i) dy[i] = y[i] - target[i];
    std::vector<double> dx(batch * in);
    net.backward(dy.data(), true, dx.data(), 0, -1);
    auto analytic = net.grads();

    const double h = 1e-6;
    for (std::size_t i = 0; i < net.params().size(); ++i) {
        double saved = net.params()[i];
        net.params()[i] = saved + h;
        net.params_changed();
        double up = loss_of();
        net.params()[i] = saved - h;
        net.params_changed();
        double dn = loss_of();
        net.params()[i] = saved;
        net.params_changed();
        double numeric = (up - dn) / (2 * h);
        CHECK(analytic[i] == doctest::Approx(numeric).epsilon(1e-5));
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
        double saved = x[i];
        x[i] = saved + h;
        double up = loss_of();
        x[i] = saved - h;
        double dn = loss_of();
        x[i] = saved;
        double numeric = (up - dn) / (2 * h);
        CHECK(dx[i] == doctest::Approx(numeric).epsilon(1e-5));
    }
}

TEST_CASE("backward can restrict input gradients to a column window") {
    Mlp<double> net({6, 10, 3}, 21);
    Rng rng(22);
    const int batch = 4;
    std::vector<double> x(6 * batch), dy(3 * batch);
    for (auto& v : x) v = rng.uniform(-1.0, 1.0);
    for (auto& v : dy) v = rng.uniform(-1.0, 1.0);
    std::vector<double> y(3 * batch);

    net.forward(x.data(), batch, y.data());
    std::vector<double> full(6 * batch);
    net.backward(dy.data(), false, full.data(), 0, -1);

    net.forward(x.data(), batch, y.data());
    std::vector<double> window(2 * batch);
    net.backward(dy.data(), false, window.data(), 1, 3);
    for (int r = 0; r < batch; ++r)
        for (int c = 0; c < 2; ++c)
            CHECK(window[r * 2 + c] == doctest::Approx(full[r * 6 + 1 + c]).epsilon(1e-12));
}

TEST_CASE("adam follows the bias-corrected update") {
    Mlp<double> net({2, 3, 1}, 4);
    AdamState<double> st(net.params().size(), 0.01);
    auto p0 = net.params();
    std::vector<double> g(net.params().size());
    Rng rng(8);
    for (auto& v : g) v = rng.uniform(-1.0, 1.0);

    std::vector<double> m(g.size(), 0.0), v2(g.size(), 0.0), want = p0;
    for (int step = 1; step <= 3; ++step) {
        net.grads() = g;
        net.adam(st);
        double bc1 = 1.0 / (1.0 - std::pow(0.9, step));
        double bc2 = 1.0 / (1.0 - std::pow(0.999, step));
        for (std::size_t i = 0; i < g.size(); ++i) {
            m[i] = 0.9 * m[i] + 0.1 * g[i];
            v2[i] = 0.999 * v2[i] + 0.001 * g[i] * g[i];
            want[i] -= 0.01 * (m[i] * bc1) / (std::sqrt(v2[i] * bc2) + 1e-8);
        }
        for (std::size_t i = 0; i < g.size(); ++i)
            CHECK(net.params()[i] == doctest::Approx(want[i]).epsilon(1e-12));
    }
    CHECK(st.step == 3);

    net.grads()[0] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS(net.adam(st));
    AdamState<double> wrong(3, 0.01);
    CHECK_THROWS(net.adam(wrong));
}

TEST_CASE("clip_grads rescales only above the threshold") {
    Mlp<double> net({3, 4, 1}, 11);
    const std::size_t n = net.params().size();
    for (auto& g : net.grads()) g = 3.0;
    double norm = 3.0 * std::sqrt(static_cast<double>(n));
    REQUIRE(norm > 1.0);
    net.clip_grads(1.0);
    CHECK(net.grad_norm() == doctest::Approx(1.0).epsilon(1e-12));
    for (auto& g : net.grads()) CHECK(g == doctest::Approx(3.0 / norm));

    for (auto& g : net.grads()) g = 0.01;
    net.clip_grads(1.0);
    for (auto& g : net.grads()) CHECK(g == 0.01);

    net.grads()[0] = std::numeric_limits<double>::infinity();
    net.clip_grads(1.0);  // must not scale garbage into the params path
    CHECK(std::isinf(net.grads()[0]));
    AdamState<double> st(n, 0.01);
    CHECK_THROWS(net.adam(st));
}

TEST_CASE("soft updates blend parameters elementwise") {
    Mlp<double> online({4, 6, 2}, 31);
    Mlp<double> target({4, 6, 2}, 32);
    auto t0 = target.params();
    target.soft_update_from(online, 0.25);
    for (std::size_t i = 0; i < t0.size(); ++i)
        CHECK(target.params()[i] ==
              doctest::Approx(0.75 * t0[i] + 0.25 * online.params()[i]).epsilon(1e-12));
    // tau = 1 copies the online net
    target.soft_update_from(online, 1.0);
    for (std::size_t i = 0; i < t0.size(); ++i)
        CHECK(target.params()[i] == doctest::Approx(online.params()[i]).epsilon(1e-12));
    Mlp<double> mismatch({4, 7, 2}, 33);
    CHECK_THROWS(target.soft_update_from(mismatch, 0.5));
}

TEST_CASE("mlp save and load round trip bitwise") {
    Mlp<float> net({7, 12, 5}, 55);
    Rng rng(56);
    auto x = random_vec(7, rng);
    auto y = net.forward1(x);
    std::stringstream ss;
    net.save(ss);
    Mlp<float> back = Mlp<float>::load(ss);
    CHECK(back.sizes() == net.sizes());
    REQUIRE(back.params().size() == net.params().size());
    for (std::size_t i = 0; i < net.params().size(); ++i)
        CHECK(back.params()[i] == net.params()[i]);
    auto y2 = back.forward1(x);
    for (std::size_t i = 0; i < y.size(); ++i) CHECK(y2[i] == y[i]);

    AdamState<float> st(net.params().size(), 0.002);
    net.grads() = random_vec(net.params().size(), rng);
    net.adam(st);
    std::stringstream so;
    st.save(so);
    AdamState<float> st2 = AdamState<float>::load(so);
    CHECK(st2.step == st.step);
    CHECK(st2.lr == st.lr);
    CHECK(st2.m == st.m);
    CHECK(st2.v == st.v);
}

TEST_CASE("fp32 tanh approximation stays within 1e-6 of std::tanh") {
    std::vector<float> v;
    for (double t = -6.0; t <= 6.0; t += 0.003) v.push_back(static_cast<float>(t));
    std::vector<float> y = v;
    kn::tanh_forward(y.data(), static_cast<int>(y.size()));
    for (std::size_t i = 0; i < v.size(); ++i)
        CHECK(std::abs(y[i] - std::tanh(static_cast<double>(v[i]))) < 1e-6);
}

TEST_CASE("simd lanes agree with the scalar reference") {
    std::vector<std::pair<const char*, const kn::Ops*>> lanes;
    if (kn::ops_avx2()) lanes.emplace_back("avx2", kn::ops_avx2());
    if (kn::ops_avx512()) lanes.emplace_back("avx512", kn::ops_avx512());
    if (lanes.empty()) return;  // nothing to compare on this machine
    const kn::Ops& ref = kn::ops_scalar();
    Rng rng(17);

    const std::tuple<int, int, int> shapes[] = {{1, 1, 1},  {3, 5, 7},  {4, 16, 16},
                                                {5, 17, 33}, {2, 31, 9}, {8, 64, 40}};
    for (auto [name, lane] : lanes) {
        CAPTURE(name);
        for (auto [M, N, K] : shapes) {
            auto A = random_vec(static_cast<std::size_t>(M) * K, rng);
            auto Bnt = random_vec(static_cast<std::size_t>(N) * K, rng);
            auto Bnn = random_vec(static_cast<std::size_t>(K) * N, rng);
            auto Atn = random_vec(static_cast<std::size_t>(K) * M, rng);
            auto C0 = random_vec(static_cast<std::size_t>(M) * N, rng);
            for (bool acc : {false, true}) {
                auto c1 = C0, c2 = C0;
                ref.gemm_nt(A.data(), Bnt.data(), c1.data(), M, N, K, acc);
                lane->gemm_nt(A.data(), Bnt.data(), c2.data(), M, N, K, acc);
                for (std::size_t i = 0; i < c1.size(); ++i)
                    CHECK(c2[i] == doctest::Approx(c1[i]).epsilon(1e-4));
                c1 = C0, c2 = C0;
                ref.gemm_nn(A.data(), Bnn.data(), c1.data(), M, N, K, acc);
                lane->gemm_nn(A.data(), Bnn.data(), c2.data(), M, N, K, acc);
                for (std::size_t i = 0; i < c1.size(); ++i)
                    CHECK(c2[i] == doctest::Approx(c1[i]).epsilon(1e-4));
                c1 = C0, c2 = C0;
                ref.gemm_tn(Atn.data(), Bnn.data(), c1.data(), M, N, K, acc);
                lane->gemm_tn(Atn.data(), Bnn.data(), c2.data(), M, N, K, acc);
                for (std::size_t i = 0; i < c1.size(); ++i)
                    CHECK(c2[i] == doctest::Approx(c1[i]).epsilon(1e-4));
            }
        }

        for (int n : {1, 7, 16, 33, 100}) {
            auto base = random_vec(static_cast<std::size_t>(5) * n, rng);
            auto bias = random_vec(n, rng);
            auto y1 = base, y2 = base;
            ref.add_bias_rows(y1.data(), bias.data(), 5, n);
            lane->add_bias_rows(y2.data(), bias.data(), 5, n);
            CHECK(y1 == y2);

            std::vector<float> s1(n), s2(n);
            for (bool acc : {false, true}) {
                auto i1 = random_vec(n, rng);
                s1 = i1, s2 = i1;
                ref.col_sums(base.data(), s1.data(), 5, n, acc);
                lane->col_sums(base.data(), s2.data(), 5, n, acc);
                for (int j = 0; j < n; ++j) CHECK(s2[j] == doctest::Approx(s1[j]).epsilon(1e-5));
            }

            auto t1 = random_vec(n, rng, -5.0, 5.0);
            auto t2 = t1;
            ref.tanh_fwd(t1.data(), n);
            lane->tanh_fwd(t2.data(), n);
            for (int j = 0; j < n; ++j) CHECK(std::abs(t1[j] - t2[j]) < 1e-6);

            auto act = random_vec(n, rng), dact = random_vec(n, rng);
            std::vector<float> d1(n), d2(n);
            ref.tanh_backward(d1.data(), act.data(), dact.data(), n);
            lane->tanh_backward(d2.data(), act.data(), dact.data(), n);
            for (int j = 0; j < n; ++j) CHECK(d2[j] == doctest::Approx(d1[j]).epsilon(1e-6));

            auto x = random_vec(n, rng);
            auto ya = random_vec(n, rng);
            auto yb = ya;
            ref.axpy(0.37f, x.data(), ya.data(), n);
            lane->axpy(0.37f, x.data(), yb.data(), n);
            for (int j = 0; j < n; ++j) CHECK(yb[j] == doctest::Approx(ya[j]).epsilon(1e-6));

            auto sa = x;
            auto sb = x;
            ref.scale(0.81f, sa.data(), n);
            lane->scale(0.81f, sb.data(), n);
            CHECK(sa == sb);

            CHECK(lane->sumsq(x.data(), n) == doctest::Approx(ref.sumsq(x.data(), n)).epsilon(1e-6));

            auto p1 = random_vec(n, rng), g = random_vec(n, rng);
            auto m1 = random_vec(n, rng, 0.0, 1.0), v1 = random_vec(n, rng, 0.1, 1.0);
            auto p2 = p1, m2 = m1, v2 = v1;
            ref.adam_step(p1.data(), g.data(), m1.data(), v1.data(), n, 0.001f, 0.9f, 0.999f,
                          1e-8f, 1.5f, 1.2f);
            lane->adam_step(p2.data(), g.data(), m2.data(), v2.data(), n, 0.001f, 0.9f, 0.999f,
                            1e-8f, 1.5f, 1.2f);
            for (int j = 0; j < n; ++j) {
                CHECK(p2[j] == doctest::Approx(p1[j]).epsilon(1e-5));
                CHECK(m2[j] == doctest::Approx(m1[j]).epsilon(1e-6));
                CHECK(v2[j] == doctest::Approx(v1[j]).epsilon(1e-6));
            }

            auto tg1 = random_vec(n, rng);
            auto tg2 = tg1;
            auto src = random_vec(n, rng);
            ref.soft_update(tg1.data(), src.data(), 0.005f, n);
            lane->soft_update(tg2.data(), src.data(), 0.005f, n);
            for (int j = 0; j < n; ++j) CHECK(tg2[j] == doctest::Approx(tg1[j]).epsilon(1e-6));
        }
    }
}

TEST_CASE("forced backends produce matching network outputs") {
    BackendGuard guard;
    Mlp<float> net({33, 128, 128, 10}, 2024);
    Rng rng(41);
    auto x = random_vec(33 * 4, rng, -2.0, 2.0);
    std::vector<float> y_scalar(10 * 4), y_lane(10 * 4);

    kn::force_backend(kn::Backend::Scalar);
    CHECK(kn::active_backend() == kn::Backend::Scalar);
    net.forward(x.data(), 4, y_scalar.data());

    for (kn::Backend b : {kn::Backend::Avx2, kn::Backend::Avx512}) {
        if (b == kn::Backend::Avx2 && !kn::cpu_has_avx2()) continue;
        if (b == kn::Backend::Avx512 && !kn::cpu_has_avx512()) continue;
        kn::force_backend(b);
        CHECK(kn::active_backend() == b);
        net.forward(x.data(), 4, y_lane.data());
        for (std::size_t i = 0; i < y_scalar.size(); ++i)
            CHECK(y_lane[i] == doctest::Approx(y_scalar[i]).epsilon(1e-4));
    }
    kn::force_backend(std::nullopt);
    if (!kn::cpu_has_avx512()) CHECK_THROWS(kn::force_backend(kn::Backend::Avx512));
}
