#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "flowcast/tensor.hpp"
#include "testutil.hpp"

using namespace flowcast;
using testutil::finite_difference_check;
using testutil::random_values;

TEST_CASE("square gradient: d(x*x)/dx = 2x") {
    Tape tape;
    Tensor x = Tensor::scalar(3.0, /*requires_grad=*/true);
    Tensor y = tape.mul(x, x);
    tape.backward(y);
    REQUIRE(y.item() == 9.0);
    REQUIRE(x.grad()[0] == Catch::Approx(6.0));
}

TEST_CASE("sigmoid gradient at zero is 0.25") {
    Tape tape;
    Tensor x = Tensor::scalar(0.0, true);
    Tensor y = tape.sigmoid(x);
    tape.backward(y);
    REQUIRE(x.grad()[0] == Catch::Approx(0.25));
}

TEST_CASE("3x3 matmul chain matches finite differences") {
    std::mt19937_64 rng(7);
    std::vector<Tensor> leaves = {
        Tensor::from({3, 3}, random_values(9, rng), true),
        Tensor::from({3, 3}, random_values(9, rng), true),
        Tensor::from({3, 3}, random_values(9, rng), true),
    };
    auto build = [&](Tape& t) {
        return t.reduce_mean(t.matmul(t.matmul(leaves[0], leaves[1]), leaves[2]));
    };
    auto report = finite_difference_check(leaves, build);
    REQUIRE(report.checked == 27);
    REQUIRE(report.max_rel <= 1e-4);
}

TEST_CASE("every primitive op passes the finite-difference check") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        std::mt19937_64 rng(seed);
        // inputs kept away from kinks (abs/relu/max) and poles (div/log)
        Tensor a = Tensor::from({2, 3}, random_values(6, rng, 0.2, 1.5), true);
        Tensor b = Tensor::from({2, 3}, random_values(6, rng, 0.3, 1.2), true);
        Tensor v = Tensor::from({3}, random_values(3, rng, 0.2, 1.0), true);
        Tensor m1 = Tensor::from({2, 3}, random_values(6, rng), true);
        Tensor m2 = Tensor::from({3, 2}, random_values(6, rng), true);

        std::vector<std::pair<const char*, std::function<Tensor(Tape&)>>> cases = {
            {"add", [&](Tape& t) { return t.reduce_mean(t.add(a, b)); }},
            {"sub", [&](Tape& t) { return t.reduce_mean(t.sub(a, b)); }},
            {"mul", [&](Tape& t) { return t.reduce_mean(t.mul(a, b)); }},
            {"div", [&](Tape& t) { return t.reduce_mean(t.div(a, b)); }},
            {"add_scalar", [&](Tape& t) { return t.reduce_mean(t.add_scalar(a, 0.7)); }},
            {"mul_scalar", [&](Tape& t) { return t.reduce_mean(t.mul_scalar(a, -1.3)); }},
            {"tanh", [&](Tape& t) { return t.reduce_mean(t.tanh(m1)); }},
            {"sigmoid", [&](Tape& t) { return t.reduce_mean(t.sigmoid(m1)); }},
            {"exp", [&](Tape& t) { return t.reduce_mean(t.exp(m1)); }},
            {"log", [&](Tape& t) { return t.reduce_mean(t.log(a)); }},
            {"softplus", [&](Tape& t) { return t.reduce_mean(t.softplus(m1)); }},
            {"relu", [&](Tape& t) { return t.reduce_mean(t.relu(a)); }},
            {"abs", [&](Tape& t) { return t.reduce_mean(t.abs(a)); }},
            {"square", [&](Tape& t) { return t.reduce_mean(t.square(m1)); }},
            {"max_scalar", [&](Tape& t) { return t.reduce_mean(t.max_scalar(a, 0.1)); }},
            {"expand_rows", [&](Tape& t) { return t.reduce_mean(t.mul(a, t.expand_rows(v, 2))); }},
            {"expand_cols",
             [&](Tape& t) { return t.reduce_mean(t.mul(m2, t.expand_cols(v, 2))); }},
            {"concat_cols", [&](Tape& t) { return t.reduce_mean(t.concat_cols(a, b)); }},
            {"slice_cols", [&](Tape& t) { return t.reduce_mean(t.slice_cols(a, 1, 3)); }},
            {"reduce_sum", [&](Tape& t) { return t.reduce_sum(a); }},
            {"matmul", [&](Tape& t) { return t.reduce_mean(t.matmul(m1, m2)); }},
        };
        for (auto& [name, build] : cases) {
            std::vector<Tensor> leaves = {a, b, v, m1, m2};
            auto report = finite_difference_check(leaves, build);
            INFO("op " << name << " seed " << seed);
            REQUIRE(report.max_rel <= 1e-4);
        }
    }
}

TEST_CASE("fan-out accumulates gradients") {
    Tape tape;
    Tensor x = Tensor::scalar(1.5, true);
    Tensor y = tape.add(x, x);
    tape.backward(y);
    REQUIRE(x.grad()[0] == Catch::Approx(2.0));
}

TEST_CASE("backward requires a scalar loss") {
    Tape tape;
    Tensor x = Tensor::from({2}, {1.0, 2.0}, true);
    Tensor y = tape.mul(x, x);
    REQUIRE_THROWS_AS(tape.backward(y), TensorError);
}

TEST_CASE("shape mismatches are reported") {
    Tape tape;
    Tensor a = Tensor::from({2, 2}, {1, 2, 3, 4});
    Tensor b = Tensor::from({2}, {1, 2});
    REQUIRE_THROWS_AS(tape.add(a, b), TensorError);
    REQUIRE_THROWS_AS(tape.matmul(a, b), TensorError);
    REQUIRE_THROWS_AS(Tensor::from({3}, {1.0, 2.0}), TensorError);
}

TEST_CASE("non-finite results surface as errors") {
    Tape tape;
    Tensor big = Tensor::from({1}, {1000.0});
    REQUIRE_THROWS_AS(tape.exp(big), TensorError);
    Tensor zero = Tensor::from({1}, {0.0});
    Tensor one = Tensor::from({1}, {1.0});
    REQUIRE_THROWS_AS(tape.div(one, zero), TensorError);
}

TEST_CASE("recording gate skips tape growth") {
    Tape tape;
    tape.set_recording(false);
    Tensor x = Tensor::scalar(2.0, true);
    Tensor y = tape.mul(x, x);
    REQUIRE(y.item() == 4.0);
    REQUIRE(tape.size() == 0);
}
