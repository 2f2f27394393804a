#include <doctest.h>

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "lsw/adam.hpp"
#include "lsw/rng.hpp"
#include "lsw/tape.hpp"
#include "lsw/tensor.hpp"

#include "common.hpp"

using namespace lsw;

namespace {

ParamGroup random_layer(std::size_t out_dim, std::size_t in_dim, std::uint64_t seed) {
    ParamGroup g("layer", out_dim, in_dim);
    Rng rng(seed);
    for (double& w : g.weight.v) w = rng.uniform(-1.5, 1.5);
    for (double& b : g.bias.v) b = rng.uniform(-1.0, 1.0);
    return g;
}

Tensor1 random_vec(std::size_t n, std::uint64_t seed, double lo = -2.0, double hi = 2.0) {
    Tensor1 x(n);
    Rng rng(seed);
    for (double& v : x.v) v = rng.uniform(lo, hi);
    return x;
}

}  // namespace

TEST_CASE("dense_forward identity and zero-weight cases") {
    ParamGroup id("id", 3, 3);
    for (std::size_t i = 0; i < 3; ++i) id.weight.at(i, i) = 1.0;
    const Tensor1 x{1.0, 2.0, 3.0};
    const Tensor1 y = dense_forward(id, x);
    CHECK(y[0] == 1.0);
    CHECK(y[1] == 2.0);
    CHECK(y[2] == 3.0);

    ParamGroup zero("zero", 2, 3);
    zero.bias[0] = 5.0;
    zero.bias[1] = 5.0;
    const Tensor1 z = dense_forward(zero, x);
    CHECK(z[0] == 5.0);
    CHECK(z[1] == 5.0);
}

TEST_CASE("dense_forward matches naive matvec oracle exactly") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        ParamGroup layer = random_layer(4, 3, seed);
        const Tensor1 x = random_vec(3, seed + 100);
        const Tensor1 got = dense_forward(layer, x);
        const Tensor1 want = testutil::naive_matvec(layer.weight, x, layer.bias);
        for (std::size_t i = 0; i < want.len(); ++i) CHECK(got[i] == want[i]);
    }
}

TEST_CASE("dense_forward rejects shape mismatch naming both shapes") {
    ParamGroup layer = random_layer(4, 3, 9);
    CHECK_THROWS_WITH_AS(dense_forward(layer, Tensor1(5)), doctest::Contains("4x3"),
                         std::invalid_argument);
}

TEST_CASE("dense_forward is linear in x") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        ParamGroup layer = random_layer(5, 4, seed);
        const Tensor1 x = random_vec(4, seed * 7 + 1);
        const Tensor1 y = random_vec(4, seed * 7 + 2);
        Rng rng(seed * 7 + 3);
        const double a = rng.uniform(-2.0, 2.0);
        const double b = rng.uniform(-2.0, 2.0);
        Tensor1 mix(4);
        for (std::size_t i = 0; i < 4; ++i) mix[i] = a * x[i] + b * y[i];
        const Tensor1 lhs = dense_forward(layer, mix);
        const Tensor1 fx = dense_forward(layer, x);
        const Tensor1 fy = dense_forward(layer, y);
        for (std::size_t i = 0; i < lhs.len(); ++i) {
            const double rhs = a * fx[i] + b * fy[i] - (a + b - 1.0) * layer.bias[i];
            CHECK(lhs[i] == doctest::Approx(rhs).epsilon(1e-9));
        }
    }
}

TEST_CASE("relu basics and idempotence") {
    const Tensor1 y = relu(Tensor1{-1.0, 0.0, 2.0});
    CHECK(y[0] == 0.0);
    CHECK(y[1] == 0.0);
    CHECK(y[2] == 2.0);

    const Tensor1 z = relu(Tensor1{-3.0, -0.5, -1e9});
    for (double v : z.v) CHECK(v == 0.0);

    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const Tensor1 x = random_vec(16, seed);
        const Tensor1 once = relu(x);
        const Tensor1 twice = relu(once);
        for (std::size_t i = 0; i < x.len(); ++i) CHECK(once[i] == twice[i]);
    }
}

TEST_CASE("softmax examples") {
    const Tensor1 u = softmax(Tensor1{4.2, 4.2, 4.2});
    for (double v : u.v) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

    CHECK(softmax(Tensor1{123.0})[0] == 1.0);

    // closed form: exp(0)/(exp(0)+exp(ln 2)) = 1/3
    const Tensor1 s = softmax(Tensor1{0.0, std::log(2.0)});
    CHECK(s[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(s[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));

    CHECK_THROWS_AS(softmax(Tensor1()), std::invalid_argument);
}

TEST_CASE("softmax invariants: positive, sums to 1, argmax preserved, overflow safe") {
    for (std::uint64_t seed = 1; seed <= 200; ++seed) {
        Tensor1 logits = random_vec(1 + seed % 7, seed, -40.0, 40.0);
        if (seed % 5 == 0) logits[0] = 700.0;  // would overflow exp() without max-subtraction
        const Tensor1 s = softmax(logits);
        double sum = 0.0;
        std::size_t argmax_in = 0, argmax_out = 0;
        for (std::size_t i = 0; i < s.len(); ++i) {
            CHECK(s[i] > 0.0);
            sum += s[i];
            if (logits[i] > logits[argmax_in]) argmax_in = i;
            if (s[i] > s[argmax_out]) argmax_out = i;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(argmax_in == argmax_out);
        CHECK(s.all_finite());
    }
}

TEST_CASE("sigmoid_bce closed forms and unfused oracle") {
    CHECK(sigmoid_bce(Tensor1{0.0}, Tensor1{1.0}) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(sigmoid_bce(Tensor1{20.0}, Tensor1{1.0}) < 1e-8);
    CHECK(sigmoid_bce(Tensor1{-20.0}, Tensor1{0.0}) < 1e-8);

    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        const Tensor1 logits = random_vec(6, seed, -8.0, 8.0);
        Tensor1 targets(6);
        Rng rng(seed + 999);
        for (double& t : targets.v) t = rng.uniform() < 0.5 ? 0.0 : 1.0;
        const double got = sigmoid_bce(logits, targets);
        CHECK(got >= 0.0);
        CHECK(got == doctest::Approx(testutil::naive_bce(logits, targets)).epsilon(1e-9));
    }

    CHECK_THROWS_AS(sigmoid_bce(Tensor1{0.0, 1.0}, Tensor1{1.0}), std::invalid_argument);
}

TEST_CASE("tape backward requires a recorded forward") {
    Tape empty;
    CHECK_THROWS_AS(empty.backward(0), std::logic_error);

    Tape t;
    const auto leaf = t.leaf(Tensor1{1.0, 2.0});
    CHECK_THROWS_AS(t.backward(leaf), std::invalid_argument);  // not scalar

    Tape t2;
    const auto loss = t2.bce_with_logits(t2.leaf(Tensor1{0.5}), Tensor1{1.0});
    t2.backward(loss);
    CHECK_THROWS_AS(t2.backward(loss), std::logic_error);  // one backward per tape
}

TEST_CASE("tape: loss independent of a parameter has exactly zero gradient") {
    ParamGroup used = random_layer(2, 3, 1);
    ParamGroup unused = random_layer(2, 3, 2);
    used.zero_grad();
    unused.zero_grad();

    Tape t;
    const auto x = t.leaf(random_vec(3, 3));
    const auto out = t.dense(used, x);
    const auto loss = t.bce_with_logits(out, Tensor1{1.0, 0.0});
    t.backward(loss);

    CHECK(used.has_grad);
    CHECK(used.grad_max_abs() > 0.0);
    CHECK_FALSE(unused.has_grad);
    CHECK(unused.grad_max_abs() == 0.0);
}

TEST_CASE("tape: doubling the loss doubles every gradient") {
    ParamGroup layer = random_layer(3, 4, 11);
    const Tensor1 x = random_vec(4, 12);
    const Tensor1 targets{1.0, 0.0, 1.0};

    auto run = [&](double seed_adj) {
        layer.zero_grad();
        Tape t;
        const auto out = t.dense(layer, t.leaf(x));
        const auto loss = t.bce_with_logits(out, targets);
        t.backward(loss, seed_adj);
        return std::make_pair(layer.grad_weight, layer.grad_bias);
    };
    const auto [gw1, gb1] = run(1.0);
    const auto [gw2, gb2] = run(2.0);
    for (std::size_t i = 0; i < gw1.v.size(); ++i) {
        CHECK(gw2.v[i] == doctest::Approx(2.0 * gw1.v[i]).epsilon(1e-12));
    }
    for (std::size_t i = 0; i < gb1.v.size(); ++i) {
        CHECK(gb2.v[i] == doctest::Approx(2.0 * gb1.v[i]).epsilon(1e-12));
    }
}

TEST_CASE("tape gradients match central finite differences across all op kinds") {
    int checked = 0;
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
        ParamGroup table("table", 6, 4, /*with_bias=*/false);
        Rng trng(seed);
        for (double& w : table.weight.v) w = trng.uniform(-1.0, 1.0);
        ParamGroup l1 = random_layer(3, 4, seed + 10);
        ParamGroup l2 = random_layer(3, 3, seed + 20);
        const std::vector<int> ids{0, 2, 5, 2};
        const Tensor1 targets{1.0, 0.0, 1.0};

        // embedding_mean -> dense -> relu -> dense -> softmax -> weighted_sum
        // -> concat -> sigmoid/bce, so every op kind contributes adjoints.
        auto build = [&](Tape& t) {
            const auto bag = t.embedding_mean(table, ids);
            const auto h = t.relu(t.dense(l1, bag));
            const auto z = t.dense(l2, h);
            const auto w = t.softmax(z);
            const auto mixed = t.weighted_sum({h, h, h}, w);
            return t.bce_with_logits(t.concat({mixed}), targets);
        };
        auto loss_value = [&]() {
            Tape t;
            return t.scalar(build(t));
        };

        table.zero_grad();
        l1.zero_grad();
        l2.zero_grad();
        Tape t;
        const auto loss = build(t);
        if (t.min_abs_relu_input() < 1e-3) continue;  // keep clear of the relu kink
        t.backward(loss);

        CHECK(testutil::gradcheck(loss_value, {&table, &l1, &l2}) < 1e-4);
        ++checked;
    }
    CHECK(checked >= 3);
}

TEST_CASE("tape: bce_on_probs after softmax matches finite differences") {
    for (std::uint64_t seed = 3; seed <= 6; ++seed) {
        ParamGroup l1 = random_layer(4, 3, seed);
        const Tensor1 x = random_vec(3, seed + 50);
        const Tensor1 targets{0.0, 1.0, 0.0, 1.0};
        auto build = [&](Tape& t) {
            const auto probs = t.softmax(t.dense(l1, t.leaf(x)));
            return t.bce_on_probs(probs, targets);
        };
        auto loss_value = [&]() {
            Tape t;
            return t.scalar(build(t));
        };
        l1.zero_grad();
        Tape t;
        const auto loss = build(t);
        t.backward(loss);
        CHECK(testutil::gradcheck(loss_value, {&l1}) < 1e-4);
    }
}

TEST_CASE("adam: all-zero gradients leave parameters unchanged") {
    ParamGroup g = random_layer(3, 3, 5);
    const Tensor2 before = g.weight;
    g.zero_grad();
    g.has_grad = true;
    AdamState st(AdamConfig{}, {&g});
    adam_step({&g}, st);
    CHECK(st.step_count() == 1);
    for (std::size_t i = 0; i < before.v.size(); ++i) CHECK(g.weight.v[i] == before.v[i]);
}

TEST_CASE("adam: first-step magnitude and hand-stepped oracle") {
    // single scalar parameter, constant gradient
    ParamGroup g("w", 1, 1, /*with_bias=*/false);
    g.weight.at(0, 0) = 0.7;
    const double grad = 0.3;
    AdamConfig cfg;
    cfg.lr = 0.01;
    AdamState st(cfg, {&g});

    double w_oracle = 0.7, m = 0.0, v = 0.0;
    for (int t = 1; t <= 5; ++t) {
        g.zero_grad();
        g.grad_weight.at(0, 0) = grad;
        g.has_grad = true;
        adam_step({&g}, st);

        m = cfg.beta1 * m + (1 - cfg.beta1) * grad;
        v = cfg.beta2 * v + (1 - cfg.beta2) * grad * grad;
        const double m_hat = m / (1 - std::pow(cfg.beta1, t));
        const double v_hat = v / (1 - std::pow(cfg.beta2, t));
        w_oracle -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);

        CHECK(g.weight.at(0, 0) == doctest::Approx(w_oracle).epsilon(1e-15));
        if (t == 1) {
            // bias-corrected ratio ~ 1 => first step magnitude ~ lr
            CHECK(std::fabs(0.7 - g.weight.at(0, 0)) == doctest::Approx(cfg.lr).epsilon(1e-6));
        }
    }
    CHECK(st.step_count() == 5);
}

TEST_CASE("adam: frozen group stays bit-identical; missing grads are an error") {
    ParamGroup g = random_layer(2, 2, 8);
    const Tensor2 w_before = g.weight;
    const Tensor1 b_before = g.bias;
    g.frozen = true;
    g.zero_grad();
    g.grad_weight.at(0, 0) = 42.0;  // nonzero gradient must be ignored
    AdamState st(AdamConfig{}, {&g});
    adam_step({&g}, st);
    CHECK(std::memcmp(g.weight.v.data(), w_before.v.data(),
                      w_before.v.size() * sizeof(double)) == 0);
    CHECK(std::memcmp(g.bias.v.data(), b_before.v.data(),
                      b_before.v.size() * sizeof(double)) == 0);

    g.frozen = false;
    g.zero_grad();  // clears has_grad
    CHECK_THROWS_AS(adam_step({&g}, st), std::logic_error);
}

TEST_CASE("adam defaults are the canonical constants") {
    AdamConfig cfg;
    CHECK(cfg.beta1 == 0.9);
    CHECK(cfg.beta2 == 0.999);
    CHECK(cfg.eps == 1e-8);
}
