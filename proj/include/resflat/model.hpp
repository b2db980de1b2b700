#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "resflat/tensor.hpp"

namespace resflat {

enum class Variant { Sequential, Parallel };

Variant variant_from_string(const std::string& s);
std::string to_string(Variant v);

// One architecture cell: both network variants are built from this.
// Spatial size is fixed at 32 x 32, ten output classes.
struct ArchitectureSpec {
    int input_channels = 1;  // 1 = MNIST, 3 = CIFAR-10
    int depth = 1;           // H, number of residual conv layers / branches
    int filters = 1;         // F, output channels of every conv layer
    int kernel = 1;          // k, square kernel size
    Activation activation = Activation::Relu;
    Variant variant = Variant::Sequential;
    std::uint64_t base_seed = 0;
    int num_classes = 10;

    void validate() const;
};

inline constexpr int kSpatial = 32;

// Parameter blocks in fixed order: 1x1 projection, H conv branches, linear
// classifier. Initial values never depend on the variant, so branch h of the
// parallel model and layer h of the sequential model start identical.
struct ModelParams {
    ConvKernel projection;              // 1x1, input_channels -> F
    std::vector<ConvKernel> branches;   // H kernels, k x k, F -> F
    std::vector<double> classifier_w;   // (32*32*F, 10)
    std::vector<double> classifier_b;   // (10)

    std::size_t scalar_count() const;
    bool bitwise_equal(const ModelParams& o) const;
};

ModelParams build_model(const ArchitectureSpec& spec);

// Intermediate activations needed by backward().
struct ForwardCache {
    Tensor input;                  // (n, input_channels, 32, 32)
    Tensor projected;              // (n, F, 32, 32)
    std::vector<Tensor> branch_in; // sequential: z_{h-1}; parallel: unused (all = projected)
    std::vector<Tensor> preact;    // conv_h output before activation
    Tensor features;               // final z before flattening
    std::vector<double> flat;      // (n, 32*32*F)
};

struct ForwardResult {
    std::vector<double> logits;  // (n, 10)
    ForwardCache cache;
};

ForwardResult forward(const ModelParams& params, const ArchitectureSpec& spec,
                      const Tensor& x);

// Gradient blocks, same shapes as ModelParams.
struct ModelGrads {
    ConvKernel projection;
    std::vector<ConvKernel> branches;
    std::vector<double> classifier_w;
    std::vector<double> classifier_b;
};

ModelGrads backward(const ModelParams& params, const ArchitectureSpec& spec,
                    const ForwardCache& cache,
                    const std::vector<double>& grad_logits);

// Total scalar parameter count; independent of the variant.
std::int64_t parameter_count(const ArchitectureSpec& spec);

// Q = K * M / P (constraints per free parameter).
double overdetermination_ratio(std::int64_t example_count, int outputs,
                               std::int64_t parameters);

struct ParamsRow {
    int filters = 0;
    std::int64_t params = 0;
    double q_ratio = 0.0;
};

// P and Q per filter count at full training-set size
// (mnist: 1 channel, 60000 examples; cifar10: 3 channels, 50000).
// example_count overrides K when positive.
std::vector<ParamsRow> params_table(const std::string& dataset, int depth, int kernel,
                                    const std::vector<int>& filters,
                                    std::int64_t example_count = 0);

// Flat JSON (de)serialization with snake_case field names.
std::string spec_to_json(const ArchitectureSpec& spec);
ArchitectureSpec spec_from_json(const std::string& json_text);

}  // namespace resflat
