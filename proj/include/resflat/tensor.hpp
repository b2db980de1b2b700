#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace resflat {

// Dense N x C x H x W tensor of doubles, contiguous row-major.
// The single numeric carrier for images, feature maps and logits.
struct Tensor {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<double> data;

    Tensor() = default;
    Tensor(int n_, int c_, int h_, int w_);

    std::size_t size() const { return data.size(); }

    double& at(int ni, int ci, int hi, int wi) {
        return data[((static_cast<std::size_t>(ni) * c + ci) * h + hi) * w + wi];
    }
    const double& at(int ni, int ci, int hi, int wi) const {
        return data[((static_cast<std::size_t>(ni) * c + ci) * h + hi) * w + wi];
    }

    bool same_shape(const Tensor& o) const {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }
};

// Weights for one convolutional layer: (f_out, f_in, k, k) plus bias (f_out).
struct ConvKernel {
    int f_out = 0, f_in = 0, k = 0;
    std::vector<double> weights;  // row-major (f_out, f_in, k, k)
    std::vector<double> bias;     // length f_out

    ConvKernel() = default;
    ConvKernel(int f_out_, int f_in_, int k_);

    double& weight(int o, int ci, int u, int v) {
        return weights[((static_cast<std::size_t>(o) * f_in + ci) * k + u) * k + v];
    }
    double weight(int o, int ci, int u, int v) const {
        return weights[((static_cast<std::size_t>(o) * f_in + ci) * k + u) * k + v];
    }
};

enum class Activation { Sigmoid, Relu, Identity };

Activation activation_from_string(const std::string& s);
std::string to_string(Activation a);

// Throws std::domain_error if any value is NaN or infinite.
void require_finite(const std::vector<double>& data, const char* what);
void require_finite(const Tensor& t, const char* what);

// Same-padding convolution, stride 1. Zero padding with
// pad_before = floor((k-1)/2) and pad_after = ceil((k-1)/2) on both axes,
// so spatial dimensions are preserved for every kernel size.
Tensor conv2d_forward(const Tensor& x, const ConvKernel& kern);

struct ConvGrads {
    Tensor grad_x;
    ConvKernel grad_kern;  // same shapes as the kernel, holds gradients
};

ConvGrads conv2d_backward(const Tensor& x, const ConvKernel& kern,
                          const Tensor& grad_y);

// y = x * weights + bias for a flat batch x of shape (n, d), weights (d, m).
std::vector<double> dense_forward(const std::vector<double>& x, int n, int d,
                                  const std::vector<double>& weights, int m,
                                  const std::vector<double>& bias);

struct DenseGrads {
    std::vector<double> grad_x;        // (n, d)
    std::vector<double> grad_weights;  // (d, m)
    std::vector<double> grad_bias;     // (m)
};

DenseGrads dense_backward(const std::vector<double>& x, int n, int d,
                          const std::vector<double>& weights, int m,
                          const std::vector<double>& grad_y);

// Elementwise activation; backward takes the forward *input* (pre-activation).
// ReLU uses subgradient 0 at t = 0.
Tensor activation_forward(Activation kind, const Tensor& x);
Tensor activation_backward(Activation kind, const Tensor& x, const Tensor& grad_y);

inline double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

struct SoftmaxCeResult {
    double loss = 0.0;                // mean over the batch
    std::vector<double> grad_logits;  // (n, num_classes), (softmax - onehot)/n
};

// Mean categorical cross-entropy with max-subtracted log-sum-exp.
SoftmaxCeResult softmax_cross_entropy(const std::vector<double>& logits, int n,
                                      int num_classes,
                                      const std::vector<int>& labels);

}  // namespace resflat
