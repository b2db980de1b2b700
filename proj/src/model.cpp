#include "resflat/model.hpp"

#include <cstring>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "resflat/rng.hpp"

namespace resflat {

Variant variant_from_string(const std::string& s) {
    if (s == "sequential") return Variant::Sequential;
    if (s == "parallel") return Variant::Parallel;
    throw std::invalid_argument("unknown variant: " + s);
}

std::string to_string(Variant v) {
    return v == Variant::Sequential ? "sequential" : "parallel";
}

void ArchitectureSpec::validate() const {
    if (input_channels != 1 && input_channels != 3) {
        throw std::invalid_argument("spec: input_channels must be 1 or 3");
    }
    if (depth < 1 || filters < 1 || kernel < 1) {
        throw std::invalid_argument("spec: depth, filters, kernel must be >= 1");
    }
    if (num_classes != 10) {
        throw std::invalid_argument("spec: num_classes must be 10");
    }
}

std::size_t ModelParams::scalar_count() const {
    std::size_t total = projection.weights.size() + projection.bias.size();
    for (const auto& b : branches) total += b.weights.size() + b.bias.size();
    return total + classifier_w.size() + classifier_b.size();
}

bool ModelParams::bitwise_equal(const ModelParams& o) const {
    auto eq = [](const std::vector<double>& a, const std::vector<double>& b) {
        return a.size() == b.size() &&
               (a.empty() ||
                std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
    };
    if (!eq(projection.weights, o.projection.weights) ||
        !eq(projection.bias, o.projection.bias)) {
        return false;
    }
    if (branches.size() != o.branches.size()) return false;
    for (std::size_t i = 0; i < branches.size(); ++i) {
        if (!eq(branches[i].weights, o.branches[i].weights) ||
            !eq(branches[i].bias, o.branches[i].bias)) {
            return false;
        }
    }
    return eq(classifier_w, o.classifier_w) && eq(classifier_b, o.classifier_b);
}

ModelParams build_model(const ArchitectureSpec& spec) {
    spec.validate();
    const int F = spec.filters, k = spec.kernel;

    ModelParams p;
    p.projection = ConvKernel(F, spec.input_channels, 1);
    p.projection.weights = glorot_uniform(
        layer_seed(spec.base_seed, kProjectionLayerIndex), spec.input_channels, F,
        p.projection.weights.size());

    p.branches.reserve(spec.depth);
    for (int h = 1; h <= spec.depth; ++h) {
        ConvKernel b(F, F, k);
        b.weights = glorot_uniform(layer_seed(spec.base_seed, h), F * k * k,
                                   F * k * k, b.weights.size());
        p.branches.push_back(std::move(b));
    }

    const int d = kSpatial * kSpatial * F;
    p.classifier_w = glorot_uniform(layer_seed(spec.base_seed, kClassifierLayerIndex),
                                    d, spec.num_classes,
                                    static_cast<std::size_t>(d) * spec.num_classes);
    p.classifier_b.assign(spec.num_classes, 0.0);
    return p;
}

ForwardResult forward(const ModelParams& params, const ArchitectureSpec& spec,
                      const Tensor& x) {
    spec.validate();
    if (x.c != spec.input_channels || x.h != kSpatial || x.w != kSpatial) {
        throw std::invalid_argument("forward: input shape mismatch");
    }

    ForwardResult res;
    ForwardCache& cache = res.cache;
    cache.input = x;
    cache.projected = conv2d_forward(x, params.projection);

    const int H = spec.depth;
    cache.preact.reserve(H);
    Tensor z = cache.projected;
    if (spec.variant == Variant::Sequential) {
        cache.branch_in.reserve(H);
        for (int h = 0; h < H; ++h) {
            cache.branch_in.push_back(z);
            Tensor pre = conv2d_forward(z, params.branches[h]);
            Tensor a = activation_forward(spec.activation, pre);
            cache.preact.push_back(std::move(pre));
            for (std::size_t i = 0; i < z.data.size(); ++i) z.data[i] += a.data[i];
        }
    } else {
        for (int h = 0; h < H; ++h) {
            Tensor pre = conv2d_forward(cache.projected, params.branches[h]);
            Tensor a = activation_forward(spec.activation, pre);
            cache.preact.push_back(std::move(pre));
            for (std::size_t i = 0; i < z.data.size(); ++i) z.data[i] += a.data[i];
        }
    }
    cache.features = std::move(z);

    // Flatten (n, F, 32, 32) -> (n, 1024*F) keeping memory order.
    cache.flat = cache.features.data;
    const int d = kSpatial * kSpatial * spec.filters;
    res.logits = dense_forward(cache.flat, x.n, d, params.classifier_w,
                               spec.num_classes, params.classifier_b);
    return res;
}

ModelGrads backward(const ModelParams& params, const ArchitectureSpec& spec,
                    const ForwardCache& cache,
                    const std::vector<double>& grad_logits) {
    spec.validate();
    const int n = cache.input.n;
    const int F = spec.filters;
    const int H = spec.depth;
    const int d = kSpatial * kSpatial * F;
    if (grad_logits.size() != static_cast<std::size_t>(n) * spec.num_classes) {
        throw std::invalid_argument("backward: grad_logits shape mismatch");
    }
    if (static_cast<int>(cache.preact.size()) != H ||
        cache.features.c != F || cache.flat.size() != static_cast<std::size_t>(n) * d) {
        throw std::invalid_argument("backward: stale cache");
    }
    if (spec.variant == Variant::Sequential &&
        static_cast<int>(cache.branch_in.size()) != H) {
        throw std::invalid_argument("backward: stale cache");
    }

    ModelGrads g;
    g.branches.resize(H);

    DenseGrads dg = dense_backward(cache.flat, n, d, params.classifier_w,
                                   spec.num_classes, grad_logits);
    g.classifier_w = std::move(dg.grad_weights);
    g.classifier_b = std::move(dg.grad_bias);

    Tensor grad_z(n, F, kSpatial, kSpatial);
    grad_z.data = std::move(dg.grad_x);

    Tensor grad_p(n, F, kSpatial, kSpatial);
    if (spec.variant == Variant::Sequential) {
        // z_h = z_{h-1} + act(conv_h(z_{h-1})): the identity path passes the
        // gradient through unchanged, the branch path adds its own term.
        for (int h = H - 1; h >= 0; --h) {
            Tensor ga = activation_backward(spec.activation, cache.preact[h], grad_z);
            ConvGrads cg = conv2d_backward(cache.branch_in[h], params.branches[h], ga);
            g.branches[h] = std::move(cg.grad_kern);
            for (std::size_t i = 0; i < grad_z.data.size(); ++i) {
                grad_z.data[i] += cg.grad_x.data[i];
            }
        }
        grad_p = std::move(grad_z);
    } else {
        // z = p + sum_h act(conv_h(p)): every branch sees the same input p.
        grad_p = grad_z;
        for (int h = 0; h < H; ++h) {
            Tensor ga = activation_backward(spec.activation, cache.preact[h], grad_z);
            ConvGrads cg = conv2d_backward(cache.projected, params.branches[h], ga);
            g.branches[h] = std::move(cg.grad_kern);
            for (std::size_t i = 0; i < grad_p.data.size(); ++i) {
                grad_p.data[i] += cg.grad_x.data[i];
            }
        }
    }

    ConvGrads pg = conv2d_backward(cache.input, params.projection, grad_p);
    g.projection = std::move(pg.grad_kern);
    return g;
}

std::int64_t parameter_count(const ArchitectureSpec& spec) {
    spec.validate();
    const std::int64_t F = spec.filters, H = spec.depth, k = spec.kernel;
    const std::int64_t projection = spec.input_channels * F + F;
    const std::int64_t branches = H * (k * k * F * F + F);
    const std::int64_t classifier =
        static_cast<std::int64_t>(kSpatial) * kSpatial * F * spec.num_classes +
        spec.num_classes;
    return projection + branches + classifier;
}

double overdetermination_ratio(std::int64_t example_count, int outputs,
                               std::int64_t parameters) {
    if (parameters < 1) {
        throw std::invalid_argument("overdetermination_ratio: parameters must be >= 1");
    }
    return static_cast<double>(example_count) * outputs /
           static_cast<double>(parameters);
}

std::vector<ParamsRow> params_table(const std::string& dataset, int depth, int kernel,
                                    const std::vector<int>& filters,
                                    std::int64_t example_count) {
    int channels;
    std::int64_t K;
    if (dataset == "mnist") {
        channels = 1;
        K = 60000;
    } else if (dataset == "cifar10") {
        channels = 3;
        K = 50000;
    } else {
        throw std::invalid_argument("params_table: unknown dataset " + dataset);
    }
    if (example_count > 0) K = example_count;

    std::vector<ParamsRow> rows;
    for (int f : filters) {
        ArchitectureSpec spec;
        spec.input_channels = channels;
        spec.depth = depth;
        spec.filters = f;
        spec.kernel = kernel;
        ParamsRow row;
        row.filters = f;
        row.params = parameter_count(spec);
        row.q_ratio = overdetermination_ratio(K, spec.num_classes, row.params);
        rows.push_back(row);
    }
    return rows;
}

std::string spec_to_json(const ArchitectureSpec& spec) {
    nlohmann::json j;
    j["input_channels"] = spec.input_channels;
    j["depth"] = spec.depth;
    j["filters"] = spec.filters;
    j["kernel"] = spec.kernel;
    j["activation"] = to_string(spec.activation);
    j["variant"] = to_string(spec.variant);
    j["base_seed"] = spec.base_seed;
    j["num_classes"] = spec.num_classes;
    return j.dump();
}

ArchitectureSpec spec_from_json(const std::string& json_text) {
    nlohmann::json j = nlohmann::json::parse(json_text);
    ArchitectureSpec spec;
    spec.input_channels = j.at("input_channels").get<int>();
    spec.depth = j.at("depth").get<int>();
    spec.filters = j.at("filters").get<int>();
    spec.kernel = j.at("kernel").get<int>();
    spec.activation = activation_from_string(j.at("activation").get<std::string>());
    spec.variant = variant_from_string(j.at("variant").get<std::string>());
    spec.base_seed = j.at("base_seed").get<std::uint64_t>();
    spec.num_classes = j.at("num_classes").get<int>();
    spec.validate();
    return spec;
}

}  // namespace resflat
