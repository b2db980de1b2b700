#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <vector>

#include "resflat/data.hpp"
#include "resflat/model.hpp"

#include "oracles.hpp"

using namespace resflat;

namespace {

ArchitectureSpec make_spec(int channels, int depth, int filters, int kernel,
                           Activation act, Variant variant, std::uint64_t seed) {
    ArchitectureSpec s;
    s.input_channels = channels;
    s.depth = depth;
    s.filters = filters;
    s.kernel = kernel;
    s.activation = act;
    s.variant = variant;
    s.base_seed = seed;
    return s;
}

Tensor random_input(int n, int channels, std::uint64_t seed) {
    Tensor x(n, channels, kSpatial, kSpatial);
    std::uint64_t s = seed;
    for (double& v : x.data) v = oracle::unit_double(s);
    return x;
}

double model_loss(const ModelParams& params, const ArchitectureSpec& spec,
                  const Tensor& x, const std::vector<int>& labels) {
    auto out = forward(params, spec, x);
    return softmax_cross_entropy(out.logits, x.n, spec.num_classes, labels).loss;
}

struct BlockRef {
    std::vector<double>* values;
    const std::vector<double>* grads;
};

std::vector<BlockRef> param_blocks(ModelParams& p, const ModelGrads& g) {
    std::vector<BlockRef> blocks;
    blocks.push_back({&p.projection.weights, &g.projection.weights});
    blocks.push_back({&p.projection.bias, &g.projection.bias});
    for (std::size_t h = 0; h < p.branches.size(); ++h) {
        blocks.push_back({&p.branches[h].weights, &g.branches[h].weights});
        blocks.push_back({&p.branches[h].bias, &g.branches[h].bias});
    }
    blocks.push_back({&p.classifier_w, &g.classifier_w});
    blocks.push_back({&p.classifier_b, &g.classifier_b});
    return blocks;
}

}  // namespace

TEST_CASE("spec validation rejects bad fields") {
    ArchitectureSpec s = make_spec(1, 2, 2, 3, Activation::Relu, Variant::Sequential, 1);
    CHECK_NOTHROW(s.validate());

    auto bad = s;
    bad.input_channels = 2;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = s;
    bad.depth = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = s;
    bad.filters = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = s;
    bad.kernel = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = s;
    bad.num_classes = 2;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("variant names round-trip") {
    CHECK(variant_from_string("sequential") == Variant::Sequential);
    CHECK(variant_from_string("parallel") == Variant::Parallel);
    CHECK(to_string(Variant::Sequential) == "sequential");
    CHECK(to_string(Variant::Parallel) == "parallel");
    CHECK_THROWS_AS(variant_from_string("residual"), std::invalid_argument);
}

TEST_CASE("build_model is deterministic and variant independent") {
    auto seq = make_spec(1, 16, 1, 16, Activation::Relu, Variant::Sequential, 7);
    auto par = seq;
    par.variant = Variant::Parallel;

    ModelParams a = build_model(seq);
    ModelParams b = build_model(seq);
    ModelParams c = build_model(par);
    CHECK(a.bitwise_equal(b));
    CHECK(a.bitwise_equal(c));
    CHECK(a.scalar_count() == 14364);

    auto other_seed = seq;
    other_seed.base_seed = 8;
    CHECK_FALSE(a.bitwise_equal(build_model(other_seed)));
}

TEST_CASE("build_model gives each branch distinct weights") {
    auto spec = make_spec(1, 4, 2, 3, Activation::Relu, Variant::Sequential, 11);
    ModelParams p = build_model(spec);
    REQUIRE(p.branches.size() == 4);
    for (std::size_t h = 0; h + 1 < p.branches.size(); ++h) {
        CHECK(p.branches[h].weights != p.branches[h + 1].weights);
    }
    for (const auto& br : p.branches) {
        for (double b : br.bias) CHECK(b == 0.0);
    }
    for (double b : p.projection.bias) CHECK(b == 0.0);
    for (double b : p.classifier_b) CHECK(b == 0.0);
}

TEST_CASE("zeroed relu branches leave the projection untouched") {
    for (Variant variant : {Variant::Sequential, Variant::Parallel}) {
        auto spec = make_spec(1, 3, 2, 3, Activation::Relu, variant, 13);
        ModelParams p = build_model(spec);
        for (auto& br : p.branches) {
            for (double& w : br.weights) w = 0.0;
        }
        Tensor x = random_input(2, 1, 99);
        auto out = forward(p, spec, x);
        CHECK(out.cache.features.data == out.cache.projected.data);
    }
}

TEST_CASE("zeroed sigmoid branches add one half per branch") {
    for (Variant variant : {Variant::Sequential, Variant::Parallel}) {
        auto spec = make_spec(1, 2, 1, 3, Activation::Sigmoid, variant, 17);
        ModelParams p = build_model(spec);
        for (auto& br : p.branches) {
            for (double& w : br.weights) w = 0.0;
        }
        Tensor x = random_input(1, 1, 123);
        auto out = forward(p, spec, x);
        for (std::size_t i = 0; i < out.cache.features.data.size(); ++i) {
            CHECK(out.cache.features.data[i] ==
                  doctest::Approx(out.cache.projected.data[i] + 1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("depth one variants produce identical logits") {
    for (Activation act : {Activation::Relu, Activation::Sigmoid}) {
        auto seq = make_spec(1, 1, 2, 3, act, Variant::Sequential, 19);
        auto par = seq;
        par.variant = Variant::Parallel;
        Tensor x = random_input(3, 1, 31);
        auto a = forward(build_model(seq), seq, x);
        auto b = forward(build_model(par), par, x);
        CHECK(a.logits == b.logits);
    }
}

TEST_CASE("variants diverge once depth exceeds one") {
    auto seq = make_spec(1, 2, 1, 3, Activation::Sigmoid, Variant::Sequential, 23);
    auto par = seq;
    par.variant = Variant::Parallel;
    Tensor x = random_input(1, 1, 37);
    auto a = forward(build_model(seq), seq, x);
    auto b = forward(build_model(par), par, x);
    double diff = 0.0;
    for (std::size_t i = 0; i < a.logits.size(); ++i) {
        diff = std::max(diff, std::fabs(a.logits[i] - b.logits[i]));
    }
    CHECK(diff > 1e-8);
}

TEST_CASE("forward rejects mismatched input") {
    auto spec = make_spec(1, 1, 1, 3, Activation::Relu, Variant::Sequential, 29);
    ModelParams p = build_model(spec);
    CHECK_THROWS_AS(forward(p, spec, Tensor(1, 3, kSpatial, kSpatial)),
                    std::invalid_argument);
    CHECK_THROWS_AS(forward(p, spec, Tensor(1, 1, 16, 16)), std::invalid_argument);
}

TEST_CASE("backward of zero gradient is zero") {
    for (Variant variant : {Variant::Sequential, Variant::Parallel}) {
        auto spec = make_spec(1, 2, 1, 2, Activation::Relu, variant, 41);
        ModelParams p = build_model(spec);
        Tensor x = random_input(2, 1, 43);
        auto out = forward(p, spec, x);
        std::vector<double> zero(2 * 10, 0.0);
        ModelGrads g = backward(p, spec, out.cache, zero);
        for (double v : g.projection.weights) CHECK(v == 0.0);
        for (const auto& br : g.branches)
            for (double v : br.weights) CHECK(v == 0.0);
        for (double v : g.classifier_w) CHECK(v == 0.0);
        for (double v : g.classifier_b) CHECK(v == 0.0);
    }
}

TEST_CASE("backward rejects stale caches") {
    auto spec = make_spec(1, 2, 1, 2, Activation::Relu, Variant::Sequential, 47);
    ModelParams p = build_model(spec);
    Tensor x = random_input(1, 1, 53);
    auto out = forward(p, spec, x);
    std::vector<double> g(10, 0.0);

    auto deeper = spec;
    deeper.depth = 3;
    CHECK_THROWS_AS(backward(build_model(deeper), deeper, out.cache, g),
                    std::invalid_argument);
    CHECK_THROWS_AS(backward(p, spec, out.cache, std::vector<double>(7, 0.0)),
                    std::invalid_argument);
}

TEST_CASE("analytic model gradients match finite differences") {
    Tensor x = random_input(2, 1, 61);
    std::vector<int> labels = {3, 8};
    const double step = 1e-5;

    for (Variant variant : {Variant::Sequential, Variant::Parallel}) {
        auto spec = make_spec(1, 2, 2, 2, Activation::Sigmoid, variant, 67);
        ModelParams p = build_model(spec);
        auto out = forward(p, spec, x);
        auto ce = softmax_cross_entropy(out.logits, x.n, spec.num_classes, labels);
        ModelGrads g = backward(p, spec, out.cache, ce.grad_logits);

        double worst = 0.0;
        for (auto& block : param_blocks(p, g)) {
            for (std::size_t i = 0; i < block.values->size(); i += 5) {
                double& theta = (*block.values)[i];
                const double saved = theta;
                theta = saved + step;
                const double up = model_loss(p, spec, x, labels);
                theta = saved - step;
                const double down = model_loss(p, spec, x, labels);
                theta = saved;
                const double fd = (up - down) / (2 * step);
                worst = std::max(worst, oracle::rel_err(fd, (*block.grads)[i]));
            }
        }
        CHECK(worst < 1e-4);
    }
}

TEST_CASE("parameter_count matches closed form") {
    auto spec = make_spec(1, 16, 1, 16, Activation::Relu, Variant::Sequential, 0);
    CHECK(parameter_count(spec) == 14364);

    spec.filters = 4;
    CHECK(parameter_count(spec) == 106578);

    spec = make_spec(3, 16, 1, 16, Activation::Relu, Variant::Parallel, 0);
    CHECK(parameter_count(spec) == 14366);
}

TEST_CASE("parameter_count ignores the variant") {
    for (int depth : {1, 4, 16}) {
        for (int filters : {1, 2, 8}) {
            auto seq = make_spec(1, depth, filters, 5, Activation::Relu,
                                 Variant::Sequential, 0);
            auto par = seq;
            par.variant = Variant::Parallel;
            CHECK(parameter_count(seq) == parameter_count(par));
            CHECK(parameter_count(seq) ==
                  static_cast<std::int64_t>(build_model(seq).scalar_count()));
        }
    }
}

TEST_CASE("overdetermination ratio basics") {
    CHECK(overdetermination_ratio(50000, 10, 500000) == doctest::Approx(1.0));
    CHECK(overdetermination_ratio(60000, 10, 14364) ==
          doctest::Approx(41.771).epsilon(1e-4));
    CHECK(overdetermination_ratio(50000, 10, 4522634) ==
          doctest::Approx(0.1106).epsilon(1e-3));
    CHECK_THROWS_AS(overdetermination_ratio(1, 10, 0), std::invalid_argument);
}

TEST_CASE("params table matches frozen values for both datasets") {
    const std::vector<int> filters = {1, 2, 4, 8, 16, 32};
    const std::vector<std::int64_t> mnist_p = {14364,   36910,   106578,
                                               344218,  1212714, 4522570};
    const std::vector<double> mnist_q = {41.771, 16.256, 5.630, 1.743, 0.495, 0.133};
    const std::vector<std::int64_t> cifar_p = {14366,   36914,   106586,
                                               344234,  1212746, 4522634};
    const std::vector<double> cifar_q = {34.804, 13.545, 4.691, 1.453, 0.412, 0.111};

    auto mnist = params_table("mnist", 16, 16, filters);
    auto cifar = params_table("cifar10", 16, 16, filters);
    REQUIRE(mnist.size() == 6);
    REQUIRE(cifar.size() == 6);
    for (int i = 0; i < 6; ++i) {
        CHECK(mnist[i].filters == filters[i]);
        CHECK(mnist[i].params == mnist_p[i]);
        CHECK(std::fabs(mnist[i].q_ratio - mnist_q[i]) <= 0.001);
        CHECK(cifar[i].params == cifar_p[i]);
        CHECK(std::fabs(cifar[i].q_ratio - cifar_q[i]) <= 0.001);
    }
    for (int i = 0; i + 1 < 6; ++i) {
        CHECK(mnist[i].q_ratio > mnist[i + 1].q_ratio);
        CHECK(cifar[i].q_ratio > cifar[i + 1].q_ratio);
    }
    CHECK_THROWS_AS(params_table("imagenet", 16, 16, filters), std::invalid_argument);
}

TEST_CASE("params table honors an example-count override") {
    auto rows = params_table("mnist", 16, 16, {1}, 6000);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].q_ratio == doctest::Approx(60000.0 / 14364.0));
}

TEST_CASE("spec json round-trips") {
    auto spec = make_spec(3, 5, 8, 7, Activation::Sigmoid, Variant::Parallel, 424242);
    std::string text = spec_to_json(spec);
    for (const char* field :
         {"\"input_channels\"", "\"depth\"", "\"filters\"", "\"kernel\"",
          "\"activation\"", "\"variant\"", "\"base_seed\"", "\"num_classes\""}) {
        CHECK(text.find(field) != std::string::npos);
    }
    ArchitectureSpec back = spec_from_json(text);
    CHECK(back.input_channels == spec.input_channels);
    CHECK(back.depth == spec.depth);
    CHECK(back.filters == spec.filters);
    CHECK(back.kernel == spec.kernel);
    CHECK(back.activation == spec.activation);
    CHECK(back.variant == spec.variant);
    CHECK(back.base_seed == spec.base_seed);
    CHECK(spec_to_json(back) == text);
    CHECK_THROWS(spec_from_json("{\"depth\": 1}"));
}
