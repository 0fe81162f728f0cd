#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "tcnn/layers.hpp"
#include "tcnn/rng.hpp"

using tcnn::Rng;
using tcnn::Tensor;

namespace {

Tensor<double> random_tensor(std::vector<std::size_t> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor<double> t(std::move(shape));
    for (auto& v : t.data) v = rng.uniform(lo, hi);
    return t;
}

// Direct sliding-window convolution, nothing shared with the im2col path.
Tensor<double> naive_conv2d(const Tensor<double>& x, const Tensor<double>& k, const Tensor<double>& b,
                            std::size_t stride) {
    const std::size_t n = x.shape[0], cin = x.shape[1], h = x.shape[2], w = x.shape[3];
    const std::size_t cout = k.shape[0], kh = k.shape[2], kw = k.shape[3];
    const std::size_t oh = (h - kh) / stride + 1, ow = (w - kw) / stride + 1;
    Tensor<double> out({n, cout, oh, ow});
    for (std::size_t s = 0; s < n; ++s)
        for (std::size_t co = 0; co < cout; ++co)
            for (std::size_t i = 0; i < oh; ++i)
                for (std::size_t j = 0; j < ow; ++j) {
                    double acc = 0.0;
                    for (std::size_t ci = 0; ci < cin; ++ci)
                        for (std::size_t u = 0; u < kh; ++u)
                            for (std::size_t v = 0; v < kw; ++v)
                                acc += x.at(s, ci, i * stride + u, j * stride + v) * k.at(co, ci, u, v);
                    out.at(s, co, i, j) = acc + b[co];
                }
    return out;
}

Tensor<double> naive_dense(const Tensor<double>& x, const Tensor<double>& w, const Tensor<double>& b) {
    const std::size_t n = x.shape[0], d = x.shape[1], m = w.shape[1];
    Tensor<double> out({n, m});
    for (std::size_t s = 0; s < n; ++s)
        for (std::size_t j = 0; j < m; ++j) {
            double acc = b[j];
            for (std::size_t k = 0; k < d; ++k) acc += x.at(s, k) * w.at(k, j);
            out.at(s, j) = acc;
        }
    return out;
}

double max_abs_diff(const Tensor<double>& a, const Tensor<double>& b) {
    REQUIRE(a.shape == b.shape);
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a.data[i] - b.data[i]));
    return worst;
}

}  // namespace

TEST_CASE("gemm_rrr matches triple loop", "[layers]") {
    Rng rng(1);
    for (int trial = 0; trial < 5; ++trial) {
        const std::size_t m = 1 + static_cast<std::size_t>(rng.uniform_int(0, 6));
        const std::size_t k = 1 + static_cast<std::size_t>(rng.uniform_int(0, 9));
        const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform_int(0, 11));
        std::vector<double> a(m * k), b(k * n), c(m * n, 0.5), want(m * n, 0.5);
        for (auto& v : a) v = rng.uniform(-1, 1);
        for (auto& v : b) v = rng.uniform(-1, 1);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j)
                for (std::size_t kk = 0; kk < k; ++kk) want[i * n + j] += a[i * k + kk] * b[kk * n + j];
        tcnn::gemm_rrr(a.data(), b.data(), c.data(), m, k, n, true);
        for (std::size_t i = 0; i < m * n; ++i) CHECK(c[i] == Catch::Approx(want[i]).margin(1e-12));
    }
}

TEST_CASE("dot_blocked matches sequential sum", "[layers]") {
    Rng rng(2);
    for (std::size_t n : {1, 7, 8, 9, 64, 100}) {
        std::vector<double> a(n), b(n);
        for (auto& v : a) v = rng.uniform(-1, 1);
        for (auto& v : b) v = rng.uniform(-1, 1);
        const double want = std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
        CHECK(tcnn::dot_blocked(a.data(), b.data(), n) == Catch::Approx(want).margin(1e-12));
    }
}

TEST_CASE("conv2d forward matches direct convolution", "[layers]") {
    Rng rng(3);
    for (const std::size_t stride : {1, 2, 3}) {
        auto x = random_tensor({2, 3, 13, 11}, rng);
        auto k = random_tensor({4, 3, 3, 3}, rng);
        auto b = random_tensor({4}, rng);
        auto got = tcnn::conv2d_forward(x, k, b, stride);
        auto want = naive_conv2d(x, k, b, stride);
        CHECK(got.output.shape == want.shape);
        CHECK(max_abs_diff(got.output, want) < 1e-12);
    }
}

TEST_CASE("conv2d rejects malformed calls", "[layers]") {
    Rng rng(4);
    auto x = random_tensor({1, 2, 8, 8}, rng);
    auto k = random_tensor({3, 2, 3, 3}, rng);
    auto b = random_tensor({3}, rng);
    CHECK_THROWS_AS(tcnn::conv2d_forward(x, random_tensor({3, 1, 3, 3}, rng), b, 1), std::invalid_argument);
    CHECK_THROWS_AS(tcnn::conv2d_forward(x, k, random_tensor({4}, rng), 1), std::invalid_argument);
    CHECK_THROWS_AS(tcnn::conv2d_forward(x, k, b, 0), std::invalid_argument);
    CHECK_THROWS_AS(tcnn::conv2d_forward(x, random_tensor({3, 2, 9, 9}, rng), b, 1), std::invalid_argument);
}

TEST_CASE("conv2d output shape follows valid-window arithmetic", "[layers]") {
    Rng rng(5);
    auto x = random_tensor({1, 1, 224, 224}, rng);
    auto k = random_tensor({2, 1, 11, 11}, rng);
    auto b = random_tensor({2}, rng);
    auto got = tcnn::conv2d_forward(x, k, b, 3);
    CHECK(got.output.shape == std::vector<std::size_t>{1, 2, 72, 72});
}

TEST_CASE("conv2d backward matches loss-level finite structure", "[layers]") {
    // dW[co,ci,u,v] = sum_{s,i,j} G[s,co,i,j] * X[s,ci,i*st+u,j*st+v]
    // dX accumulated by scattering kernel taps; both checked against loops.
    Rng rng(6);
    const std::size_t stride = 2;
    auto x = random_tensor({2, 2, 9, 11}, rng);
    auto k = random_tensor({3, 2, 3, 3}, rng);
    auto b = random_tensor({3}, rng);
    auto fwd = tcnn::conv2d_forward(x, k, b, stride);
    auto g = random_tensor(fwd.output.shape, rng);
    auto grads = tcnn::conv2d_backward(fwd.cache, k, g, true);

    const std::size_t oh = fwd.output.shape[2], ow = fwd.output.shape[3];
    Tensor<double> dw(k.shape), db({3}), dx(x.shape);
    for (std::size_t s = 0; s < 2; ++s)
        for (std::size_t co = 0; co < 3; ++co)
            for (std::size_t i = 0; i < oh; ++i)
                for (std::size_t j = 0; j < ow; ++j) {
                    const double gv = g.at(s, co, i, j);
                    db[co] += gv;
                    for (std::size_t ci = 0; ci < 2; ++ci)
                        for (std::size_t u = 0; u < 3; ++u)
                            for (std::size_t v = 0; v < 3; ++v) {
                                dw.at(co, ci, u, v) += gv * x.at(s, ci, i * stride + u, j * stride + v);
                                dx.at(s, ci, i * stride + u, j * stride + v) += gv * k.at(co, ci, u, v);
                            }
                }
    CHECK(max_abs_diff(grads.kernels, dw) < 1e-12);
    CHECK(max_abs_diff(grads.bias, db) < 1e-12);
    CHECK(max_abs_diff(grads.input, dx) < 1e-12);
}

TEST_CASE("conv2d backward can skip the input gradient", "[layers]") {
    Rng rng(7);
    auto x = random_tensor({1, 1, 6, 6}, rng);
    auto k = random_tensor({2, 1, 3, 3}, rng);
    auto b = random_tensor({2}, rng);
    auto fwd = tcnn::conv2d_forward(x, k, b, 1);
    auto g = random_tensor(fwd.output.shape, rng);
    auto grads = tcnn::conv2d_backward(fwd.cache, k, g, false);
    CHECK(grads.input.size() == 0);
    CHECK(grads.kernels.shape == k.shape);
}

TEST_CASE("conv2d shape property sweep", "[layers]") {
    for (std::size_t h = 1; h <= 16; ++h)
        for (std::size_t k = 1; k <= std::min<std::size_t>(h, 5); ++k)
            for (std::size_t s = 1; s <= 3; ++s) {
                Tensor<double> x({1, 1, h, h}, 0.5);
                Tensor<double> kern({1, 1, k, k}, 1.0);
                Tensor<double> b({1});
                auto out = tcnn::conv2d_forward(x, kern, b, s).output;
                CHECK(out.shape[2] == (h - k) / s + 1);
                CHECK(out.shape[3] == (h - k) / s + 1);
            }
}

TEST_CASE("relu forward and backward", "[layers]") {
    Tensor<double> x({1, 1, 2, 3}, {-1.0, 0.0, 2.5, -0.1, 3.0, 0.0});
    auto fwd = tcnn::relu_forward(x);
    CHECK(fwd.output.data == std::vector<double>{0.0, 0.0, 2.5, 0.0, 3.0, 0.0});
    Tensor<double> g({1, 1, 2, 3}, {1.0, 1.0, 1.0, 1.0, 1.0, 1.0});
    auto back = tcnn::relu_backward(fwd.cache, g);
    // derivative at exactly 0 is 0
    CHECK(back.data == std::vector<double>{0.0, 0.0, 1.0, 0.0, 1.0, 0.0});

    Tensor<double> pos({2, 2}, {0.5, 1.0, 2.0, 3.0});
    CHECK(tcnn::relu_forward(pos).output.data == pos.data);  // identity on the positive orthant
}

TEST_CASE("maxpool forward matches direct scan and ties break row-major-first", "[layers]") {
    Rng rng(8);
    auto x = random_tensor({2, 3, 7, 9}, rng);
    auto fwd = tcnn::maxpool2d_forward(x, 2, 2);
    CHECK(fwd.output.shape == std::vector<std::size_t>{2, 3, 3, 4});
    for (std::size_t s = 0; s < 2; ++s)
        for (std::size_t c = 0; c < 3; ++c)
            for (std::size_t i = 0; i < 3; ++i)
                for (std::size_t j = 0; j < 4; ++j) {
                    const double want = std::max({x.at(s, c, 2 * i, 2 * j), x.at(s, c, 2 * i, 2 * j + 1),
                                                  x.at(s, c, 2 * i + 1, 2 * j), x.at(s, c, 2 * i + 1, 2 * j + 1)});
                    CHECK(fwd.output.at(s, c, i, j) == want);
                }

    Tensor<double> tie({1, 1, 2, 2}, {5.0, 5.0, 5.0, 5.0});
    auto tied = tcnn::maxpool2d_forward(tie, 2, 2);
    Tensor<double> g({1, 1, 1, 1}, {1.0});
    auto back = tcnn::maxpool2d_backward(tied.cache, g);
    CHECK(back.data == std::vector<double>{1.0, 0.0, 0.0, 0.0});
}

TEST_CASE("maxpool backward routes to the winner only", "[layers]") {
    Tensor<double> x({1, 1, 2, 4}, {1.0, 9.0, 2.0, 3.0, 4.0, 0.0, 8.0, 7.0});
    auto fwd = tcnn::maxpool2d_forward(x, 2, 2);
    Tensor<double> g({1, 1, 1, 2}, {10.0, 20.0});
    auto back = tcnn::maxpool2d_backward(fwd.cache, g);
    CHECK(back.data == std::vector<double>{0.0, 10.0, 0.0, 0.0, 0.0, 0.0, 20.0, 0.0});
}

TEST_CASE("maxpool constant map and gradient mass conservation", "[layers]") {
    Tensor<double> flat({1, 1, 6, 6}, 0.75);
    auto fwd = tcnn::maxpool2d_forward(flat, 2, 2);
    for (double v : fwd.output.data) CHECK(v == 0.75);

    Rng rng(80);
    Tensor<double> x({1, 2, 4, 4});
    for (auto& v : x.data) v = rng.uniform(-1, 1);
    auto pooled = tcnn::maxpool2d_forward(x, 2, 2);
    Tensor<double> g(pooled.output.shape);
    double upstream = 0.0;
    for (auto& v : g.data) {
        v = rng.uniform(-1, 1);
        upstream += v;
    }
    auto back = tcnn::maxpool2d_backward(pooled.cache, g);
    double routed = 0.0;
    for (double v : back.data) routed += v;
    CHECK(routed == Catch::Approx(upstream).margin(1e-12));

    CHECK_THROWS_AS(tcnn::maxpool2d_forward(x, 5, 2), std::invalid_argument);
    CHECK_THROWS_AS(tcnn::maxpool2d_forward(x, 2, 0), std::invalid_argument);
}

TEST_CASE("energy pool averages the rectified map", "[layers]") {
    Tensor<double> handbook({1, 1, 2, 2}, {1.0, -1.0, 2.0, 0.0});
    CHECK(tcnn::energy_pool_forward(handbook).output.data[0] == Catch::Approx(0.75));

    Tensor<double> wide({2, 64, 3, 3}, 0.5);
    CHECK(tcnn::energy_pool_forward(wide).output.shape == std::vector<std::size_t>{2, 64});

    Tensor<double> x({1, 2, 2, 2}, {1.0, -2.0, 3.0, 0.0, -1.0, -1.0, -1.0, -1.0});
    auto fwd = tcnn::energy_pool_forward(x);
    REQUIRE(fwd.output.shape == std::vector<std::size_t>{1, 2});
    CHECK(fwd.output.at(0, 0) == Catch::Approx(1.0));  // (1+0+3+0)/4
    CHECK(fwd.output.at(0, 1) == 0.0);                 // fully negative map

    Tensor<double> g({1, 2}, {4.0, 4.0});
    auto back = tcnn::energy_pool_backward(fwd.cache, g);
    CHECK(back.data == std::vector<double>{1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0});
}

TEST_CASE("energy pool is exactly invariant to spatial permutation on quantized data", "[layers]") {
    // Pixels quantized to k/256 keep the partial sums exactly representable,
    // so reordering the map cannot change the float result.
    Rng rng(9);
    Tensor<float> x({1, 1, 6, 6});
    for (auto& v : x.data) v = static_cast<float>(rng.uniform_int(-128, 255)) / 256.0f;
    Tensor<float> shuffled = x;
    std::vector<float> pixels(shuffled.data.begin(), shuffled.data.end());
    rng.shuffle(pixels);
    shuffled.data.assign(pixels.begin(), pixels.end());

    const auto a = tcnn::energy_pool_forward(x).output;
    const auto b = tcnn::energy_pool_forward(shuffled).output;
    CHECK(a.data[0] == b.data[0]);
}

TEST_CASE("energy pool maps a constant non-negative map to that constant", "[layers]") {
    for (int k = 0; k <= 256; k += 16) {
        const float c = static_cast<float>(k) / 256.0f;
        Tensor<float> x({1, 1, 5, 7}, c);
        CHECK(tcnn::energy_pool_forward(x).output.data[0] == c);
    }
}

TEST_CASE("dense forward and backward match direct loops", "[layers]") {
    Rng rng(10);
    auto x = random_tensor({3, 5}, rng);
    auto w = random_tensor({5, 4}, rng);
    auto b = random_tensor({4}, rng);
    auto fwd = tcnn::dense_forward(x, w, b);
    CHECK(max_abs_diff(fwd.output, naive_dense(x, w, b)) < 1e-12);

    auto g = random_tensor({3, 4}, rng);
    auto grads = tcnn::dense_backward(fwd.cache, w, g);
    Tensor<double> dx({3, 5}), dw({5, 4}), db({4});
    for (std::size_t s = 0; s < 3; ++s)
        for (std::size_t j = 0; j < 4; ++j) {
            db[j] += g.at(s, j);
            for (std::size_t k = 0; k < 5; ++k) {
                dx.at(s, k) += g.at(s, j) * w.at(k, j);
                dw.at(k, j) += g.at(s, j) * x.at(s, k);
            }
        }
    CHECK(max_abs_diff(grads.input, dx) < 1e-12);
    CHECK(max_abs_diff(grads.weights, dw) < 1e-12);
    CHECK(max_abs_diff(grads.bias, db) < 1e-12);
}

TEST_CASE("dense with identity weights is a passthrough", "[layers]") {
    Tensor<double> x({2, 3}, {1, 2, 3, 4, 5, 6});
    Tensor<double> w({3, 3});
    for (std::size_t i = 0; i < 3; ++i) w.at(i, i) = 1.0;
    Tensor<double> b({3});
    CHECK(tcnn::dense_forward(x, w, b).output.data == x.data);
}

TEST_CASE("dense validates shapes", "[layers]") {
    Rng rng(11);
    auto x = random_tensor({2, 5}, rng);
    CHECK_THROWS_AS(tcnn::dense_forward(x, random_tensor({4, 4}, rng), random_tensor({4}, rng)),
                    std::invalid_argument);
    CHECK_THROWS_AS(tcnn::dense_forward(x, random_tensor({5, 4}, rng), random_tensor({3}, rng)),
                    std::invalid_argument);
}

TEST_CASE("concat stitches features and splits gradients", "[layers]") {
    Tensor<double> a({2, 2}, {1, 2, 3, 4});
    Tensor<double> b({2, 3}, {5, 6, 7, 8, 9, 10});
    auto fwd = tcnn::concat_forward<double>({a, b});
    CHECK(fwd.output.shape == std::vector<std::size_t>{2, 5});
    CHECK(fwd.output.data == std::vector<double>{1, 2, 5, 6, 7, 3, 4, 8, 9, 10});

    auto parts = tcnn::concat_backward(fwd.cache, fwd.output);
    REQUIRE(parts.size() == 2);
    CHECK(parts[0].data == a.data);
    CHECK(parts[1].data == b.data);

    Tensor<double> mismatched({3, 2});
    CHECK_THROWS_AS(tcnn::concat_forward<double>({a, mismatched}), std::invalid_argument);

    auto solo = tcnn::concat_forward<double>({b});
    CHECK(solo.output.data == b.data);  // unary concat is the identity
    CHECK_THROWS_AS(tcnn::concat_forward<double>({}), std::invalid_argument);
}

TEST_CASE("softmax cross entropy basics", "[layers]") {
    Tensor<double> logits({2, 3}, {1.0, 2.0, 3.0, 0.0, 0.0, 0.0});
    auto res = tcnn::softmax_xent(logits, {2, 0});
    for (std::size_t s = 0; s < 2; ++s) {
        double total = 0.0, gtotal = 0.0;
        for (std::size_t j = 0; j < 3; ++j) {
            total += res.probabilities.at(s, j);
            gtotal += res.grad_logits.at(s, j);
        }
        CHECK(total == Catch::Approx(1.0));
        CHECK(gtotal == Catch::Approx(0.0).margin(1e-15));
    }
    // uniform row: p = 1/3, loss contribution = log 3
    CHECK(res.probabilities.at(1, 0) == Catch::Approx(1.0 / 3.0));
    const double want_loss = (-std::log(res.probabilities.at(0, 2)) + std::log(3.0)) / 2.0;
    CHECK(res.loss == Catch::Approx(want_loss));
}

TEST_CASE("softmax saturated correct prediction has near-zero loss", "[layers]") {
    Tensor<double> logits({1, 3}, {10.0, -10.0, -10.0});
    CHECK(tcnn::softmax_xent(logits, {0}).loss < 1e-4);
}

TEST_CASE("softmax cross entropy is shift-stable", "[layers]") {
    Tensor<double> small({1, 3}, {0.5, -0.25, 0.125});
    Tensor<double> big({1, 3}, {0.5 + 5000.0, -0.25 + 5000.0, 0.125 + 5000.0});
    auto a = tcnn::softmax_xent(small, {1});
    auto b = tcnn::softmax_xent(big, {1});
    for (std::size_t j = 0; j < 3; ++j)
        CHECK(a.probabilities.data[j] == Catch::Approx(b.probabilities.data[j]).margin(1e-12));
    CHECK(a.loss == Catch::Approx(b.loss).margin(1e-10));
}

TEST_CASE("softmax cross entropy rejects bad targets", "[layers]") {
    Tensor<double> logits({1, 3});
    CHECK_THROWS_AS(tcnn::softmax_xent(logits, {3}), std::invalid_argument);
    CHECK_THROWS_AS(tcnn::softmax_xent(logits, {-1}), std::invalid_argument);
    CHECK_THROWS_AS(tcnn::softmax_xent(logits, {0, 1}), std::invalid_argument);
    Tensor<double> one({1, 1});
    CHECK_THROWS_AS(tcnn::softmax_xent(one, {0}), std::invalid_argument);
}

TEST_CASE("layer outputs identical across worker counts", "[layers][parallel]") {
    Rng rng(12);
    auto x = random_tensor({3, 2, 12, 12}, rng);
    auto k = random_tensor({4, 2, 3, 3}, rng);
    auto b = random_tensor({4}, rng);

    tcnn::set_thread_count(1);
    auto f1 = tcnn::conv2d_forward(x, k, b, 1);
    auto g1 = tcnn::conv2d_backward(f1.cache, k, f1.output, true);
    tcnn::set_thread_count(5);
    auto f5 = tcnn::conv2d_forward(x, k, b, 1);
    auto g5 = tcnn::conv2d_backward(f5.cache, k, f5.output, true);
    tcnn::set_thread_count(1);

    CHECK(f1.output.data == f5.output.data);
    CHECK(g1.kernels.data == g5.kernels.data);
    CHECK(g1.bias.data == g5.bias.data);
    CHECK(g1.input.data == g5.input.data);
}
