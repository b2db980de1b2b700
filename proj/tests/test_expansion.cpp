#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "resflat/expansion.hpp"

#include "oracles.hpp"

using namespace resflat;

namespace {

std::vector<LinearOperator> random_ops(std::uint64_t seed, int depth, int dim, double scale) {
    std::uint64_t s = seed;
    std::vector<LinearOperator> ops;
    for (int h = 0; h < depth; ++h) {
        LinearOperator op(dim);
        for (double& v : op.m) v = scale * (-1 + 2 * oracle::unit_double(s));
        ops.push_back(std::move(op));
    }
    return ops;
}

std::vector<double> random_vec(std::uint64_t seed, int dim) {
    std::uint64_t s = seed;
    std::vector<double> x(dim);
    for (double& v : x) v = -1 + 2 * oracle::unit_double(s);
    return x;
}

double rel_norm_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += (a[i] - b[i]) * (a[i] - b[i]);
        den += b[i] * b[i];
    }
    return std::sqrt(num) / std::max(std::sqrt(den), 1e-300);
}

}  // namespace

TEST_CASE("sequential_apply trivial cases") {
    std::vector<double> x = {1.0, -2.0, 3.0};
    CHECK(sequential_apply({}, x) == x);

    std::vector<LinearOperator> zeros(3, LinearOperator(3));
    CHECK(sequential_apply(zeros, x) == x);
}

TEST_CASE("sequential_apply H=2 d=2 against explicit matrix arithmetic") {
    LinearOperator w1(2), w2(2);
    w1.m = {0.5, -0.25, 1.0, 0.75};
    w2.m = {-0.5, 0.2, 0.3, 0.1};
    std::vector<double> x = {2.0, -1.0};

    // y1 = (I + W1) x
    std::vector<double> y1 = {x[0] + 0.5 * 2 + (-0.25) * (-1), x[1] + 1.0 * 2 + 0.75 * (-1)};
    // y2 = (I + W2) y1
    std::vector<double> y2 = {y1[0] + (-0.5) * y1[0] + 0.2 * y1[1],
                              y1[1] + 0.3 * y1[0] + 0.1 * y1[1]};

    auto y = sequential_apply({w1, w2}, x);
    CHECK(std::fabs(y[0] - y2[0]) < 1e-12);
    CHECK(std::fabs(y[1] - y2[1]) < 1e-12);
}

TEST_CASE("expansion at full order equals sequential composition") {
    for (int trial = 0; trial < 100; ++trial) {
        std::uint64_t s = 1000 + trial;
        const int depth = 1 + static_cast<int>(oracle::unit_double(s) * 8);
        const int dim = 1 + static_cast<int>(oracle::unit_double(s) * 8);
        auto ops = random_ops(s, depth, dim, 0.5);
        auto x = random_vec(s + 1, dim);
        auto seq = sequential_apply(ops, x);
        auto exp = expansion_apply(ops, x, depth);
        CHECK(rel_norm_diff(exp, seq) <= 1e-10);
    }
}

TEST_CASE("expansion order bounds") {
    auto ops = random_ops(5, 4, 3, 0.5);
    auto x = random_vec(6, 3);
    CHECK(expansion_apply(ops, x, 0) == x);
    CHECK_THROWS_AS(expansion_apply(ops, x, -1), std::invalid_argument);
    CHECK_THROWS_AS(expansion_apply(ops, x, 5), std::invalid_argument);
}

TEST_CASE("expansion order one equals x plus sum of single applications") {
    auto ops = random_ops(9, 5, 4, 0.5);
    auto x = random_vec(10, 4);
    std::vector<double> direct = x;
    for (const auto& op : ops) {
        auto wx = op.apply(x);
        for (int i = 0; i < 4; ++i) direct[i] += wx[i];
    }
    auto trunc = expansion_apply(ops, x, 1);
    for (int i = 0; i < 4; ++i) CHECK(std::fabs(direct[i] - trunc[i]) <= 1e-12);
}

TEST_CASE("expansion composition order is ascending within a subset") {
    // W1 maps e1 -> e2, W2 maps e2 -> e3; the pair term must be W2 W1 x.
    LinearOperator w1(3), w2(3);
    w1.at(1, 0) = 1.0;
    w2.at(2, 1) = 1.0;
    std::vector<double> x = {1.0, 0.0, 0.0};
    auto full = expansion_apply({w1, w2}, x, 2);
    // I x + W1 x + W2 x + W2 W1 x = (1, 1, 1)
    CHECK(full[0] == doctest::Approx(1.0));
    CHECK(full[1] == doctest::Approx(1.0));
    CHECK(full[2] == doctest::Approx(1.0));

    // reversed roles: W1' maps e2 -> e3, W2' maps e1 -> e2. The ascending
    // convention makes the pair term W2' W1' x = 0, so the last coordinate
    // stays 0.
    LinearOperator w1r(3), w2r(3);
    w1r.at(2, 1) = 1.0;
    w2r.at(1, 0) = 1.0;
    auto swapped = expansion_apply({w1r, w2r}, x, 2);
    CHECK(swapped[2] == doctest::Approx(0.0));
}

TEST_CASE("expansion term counts match binomial sums") {
    for (int depth = 1; depth <= 12; ++depth) {
        std::uint64_t total = 0;
        for (int order = 0; order <= depth; ++order) {
            std::uint64_t expect = 0;
            for (int j = 0; j <= order; ++j) expect += oracle::binomial(depth, j);
            CHECK(expansion_term_count(depth, order) == expect);
            total = expansion_term_count(depth, order);
        }
        CHECK(total == (1ULL << depth));
    }
}

TEST_CASE("truncation error trivial cases") {
    auto ops = random_ops(21, 4, 3, 0.5);
    auto x = random_vec(22, 3);
    CHECK(truncation_error(ops, x, 4) <= 1e-12);

    std::vector<LinearOperator> zeros(4, LinearOperator(3));
    for (int order = 0; order <= 4; ++order) {
        CHECK(truncation_error(zeros, x, order) == 0.0);
    }
}

TEST_CASE("truncation error rejects zero input") {
    auto ops = random_ops(23, 2, 3, 0.5);
    std::vector<double> zero(3, 0.0);
    CHECK_THROWS_AS(truncation_error(ops, zero, 1), std::invalid_argument);

    // W = -I annihilates the sequential output, leaving no reference norm.
    LinearOperator neg(3);
    for (int i = 0; i < 3; ++i) neg.at(i, i) = -1.0;
    std::vector<double> x = {1.0, 2.0, 3.0};
    CHECK_THROWS_AS(truncation_error({neg}, x, 0), std::domain_error);
}

TEST_CASE("order-1 truncation error scales quadratically in the operator size") {
    for (int trial = 0; trial < 10; ++trial) {
        auto base = random_ops(31 + trial, 4, 6, 0.5);
        auto x = random_vec(81 + trial, 6);
        auto scaled = [&](double alpha) {
            auto ops = base;
            for (auto& op : ops)
                for (double& v : op.m) v *= alpha;
            return ops;
        };
        const double e1 = truncation_error(scaled(0.1), x, 1);
        const double e2 = truncation_error(scaled(0.01), x, 1);
        REQUIRE(e2 > 1e-14);
        const double ratio = e1 / e2;
        CHECK(ratio >= 80.0);
        CHECK(ratio <= 120.0);
    }
}

TEST_CASE("truncation error is non-increasing in order for small operators") {
    for (int trial = 0; trial < 10; ++trial) {
        const int depth = 2 + trial % 4;
        const int dim = 3 + trial % 3;
        // entries bounded by 0.2/dim keep the 2-norm of every operator below 0.2
        auto ops = random_ops(51 + trial, depth, dim, 0.2 / dim);
        auto x = random_vec(91 + trial, dim);
        double prev = 1e300;
        for (int order = 0; order <= depth; ++order) {
            const double err = truncation_error(ops, x, order);
            CHECK(err <= prev + 1e-12);
            prev = err;
        }
    }
}

TEST_CASE("residual gradient product trivial cases") {
    const int dim = 4;
    ResidualDenseStack stack;
    stack.activation = Activation::Identity;
    for (int h = 0; h < 3; ++h) {
        stack.weights.emplace_back(dim);
        stack.biases.emplace_back(dim, 0.0);
    }
    auto x = random_vec(61, dim);
    auto g = random_vec(62, dim);

    // empty product: layer == H
    CHECK(residual_gradient_product(stack, x, g, 3) == g);
    // identity activation with zero weights: every factor is I
    CHECK(residual_gradient_product(stack, x, g, 0) == g);
}

TEST_CASE("residual gradient product matches independent backprop") {
    for (Activation act : {Activation::Sigmoid, Activation::Relu}) {
        for (int trial = 0; trial < 20; ++trial) {
            std::uint64_t s = 500 + trial;
            const int depth = 1 + static_cast<int>(oracle::unit_double(s) * 4);
            const int dim = 2 + static_cast<int>(oracle::unit_double(s) * 4);
            ResidualDenseStack stack;
            stack.activation = act;
            for (int h = 0; h < depth; ++h) {
                LinearOperator op(dim);
                for (double& v : op.m) v = -0.8 + 1.6 * oracle::unit_double(s);
                stack.weights.push_back(std::move(op));
                std::vector<double> b(dim);
                for (double& v : b) v = -0.5 + 1.0 * oracle::unit_double(s);
                stack.biases.push_back(std::move(b));
            }
            auto x = random_vec(s + 7, dim);
            auto g = random_vec(s + 8, dim);
            for (int layer = 0; layer <= depth; ++layer) {
                auto a = residual_gradient_product(stack, x, g, layer);
                auto b = oracle::stack_backprop(stack, x, g, layer);
                for (int i = 0; i < dim; ++i) CHECK(std::fabs(a[i] - b[i]) <= 1e-10);
            }
        }
    }
}

TEST_CASE("linear operator dimension limits") {
    CHECK_THROWS_AS(LinearOperator(0), std::invalid_argument);
    CHECK_THROWS_AS(LinearOperator(33), std::invalid_argument);
    CHECK_NOTHROW(LinearOperator(32));
}
