#include "resflat/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace resflat {

Tensor::Tensor(int n_, int c_, int h_, int w_) : n(n_), c(c_), h(h_), w(w_) {
    if (n < 0 || c < 0 || h < 0 || w < 0) {
        throw std::invalid_argument("Tensor: negative dimension");
    }
    data.assign(static_cast<std::size_t>(n) * c * h * w, 0.0);
}

ConvKernel::ConvKernel(int f_out_, int f_in_, int k_)
    : f_out(f_out_), f_in(f_in_), k(k_) {
    if (f_out < 1 || f_in < 1 || k < 1) {
        throw std::invalid_argument("ConvKernel: f_out, f_in, k must be >= 1");
    }
    weights.assign(static_cast<std::size_t>(f_out) * f_in * k * k, 0.0);
    bias.assign(static_cast<std::size_t>(f_out), 0.0);
}

Activation activation_from_string(const std::string& s) {
    if (s == "sigmoid") return Activation::Sigmoid;
    if (s == "relu") return Activation::Relu;
    if (s == "identity") return Activation::Identity;
    throw std::invalid_argument("unknown activation: " + s);
}

std::string to_string(Activation a) {
    switch (a) {
        case Activation::Sigmoid: return "sigmoid";
        case Activation::Relu: return "relu";
        case Activation::Identity: return "identity";
    }
    throw std::logic_error("bad activation enum");
}

void require_finite(const std::vector<double>& data, const char* what) {
    for (double v : data) {
        if (!std::isfinite(v)) {
            throw std::domain_error(std::string("non-finite value in ") + what);
        }
    }
}

void require_finite(const Tensor& t, const char* what) {
    require_finite(t.data, what);
}

Tensor conv2d_forward(const Tensor& x, const ConvKernel& kern) {
    if (x.n < 1 || x.c < 1 || x.h < 1 || x.w < 1) {
        throw std::invalid_argument("conv2d_forward: empty tensor");
    }
    if (x.c != kern.f_in) {
        throw std::invalid_argument("conv2d_forward: channel mismatch");
    }
    require_finite(x, "conv2d_forward input");
    require_finite(kern.weights, "conv2d_forward weights");
    require_finite(kern.bias, "conv2d_forward bias");

    const int k = kern.k;
    const int pad_before = (k - 1) / 2;
    const int H = x.h, W = x.w;
    Tensor y(x.n, kern.f_out, H, W);

    // Per output element the accumulation order is: bias, then (c, u, v)
    // ascending. The (i, j) loops sit innermost for contiguous access; this
    // does not change any per-element summation order.
    for (int ni = 0; ni < x.n; ++ni) {
        for (int o = 0; o < kern.f_out; ++o) {
            double* yrow0 = &y.at(ni, o, 0, 0);
            const double b = kern.bias[o];
            for (std::size_t idx = 0; idx < static_cast<std::size_t>(H) * W; ++idx) {
                yrow0[idx] = b;
            }
            for (int ci = 0; ci < x.c; ++ci) {
                for (int u = 0; u < k; ++u) {
                    for (int v = 0; v < k; ++v) {
                        const double wgt = kern.weight(o, ci, u, v);
                        if (wgt == 0.0) continue;
                        // x row index r = i + u - pad_before must be in range.
                        const int i_lo = std::max(0, pad_before - u);
                        const int i_hi = std::min(H, H + pad_before - u);
                        const int j_lo = std::max(0, pad_before - v);
                        const int j_hi = std::min(W, W + pad_before - v);
                        for (int i = i_lo; i < i_hi; ++i) {
                            const double* xrow = &x.at(ni, ci, i + u - pad_before, 0);
                            double* yrow = yrow0 + static_cast<std::size_t>(i) * W;
                            const int shift = v - pad_before;
                            for (int j = j_lo; j < j_hi; ++j) {
                                yrow[j] += wgt * xrow[j + shift];
                            }
                        }
                    }
                }
            }
        }
    }
    return y;
}

ConvGrads conv2d_backward(const Tensor& x, const ConvKernel& kern,
                          const Tensor& grad_y) {
    if (x.c != kern.f_in) {
        throw std::invalid_argument("conv2d_backward: channel mismatch");
    }
    if (grad_y.n != x.n || grad_y.c != kern.f_out || grad_y.h != x.h ||
        grad_y.w != x.w) {
        throw std::invalid_argument("conv2d_backward: grad_y shape mismatch");
    }
    require_finite(x, "conv2d_backward input");
    require_finite(grad_y, "conv2d_backward grad_y");

    const int k = kern.k;
    const int pad_before = (k - 1) / 2;
    const int H = x.h, W = x.w;

    ConvGrads g;
    g.grad_x = Tensor(x.n, x.c, H, W);
    g.grad_kern = ConvKernel(kern.f_out, kern.f_in, k);

    for (int ni = 0; ni < x.n; ++ni) {
        for (int o = 0; o < kern.f_out; ++o) {
            const double* gyrow0 = &grad_y.at(ni, o, 0, 0);
            double bsum = g.grad_kern.bias[o];
            for (std::size_t idx = 0; idx < static_cast<std::size_t>(H) * W; ++idx) {
                bsum += gyrow0[idx];
            }
            g.grad_kern.bias[o] = bsum;

            for (int ci = 0; ci < x.c; ++ci) {
                for (int u = 0; u < k; ++u) {
                    for (int v = 0; v < k; ++v) {
                        const int i_lo = std::max(0, pad_before - u);
                        const int i_hi = std::min(H, H + pad_before - u);
                        const int j_lo = std::max(0, pad_before - v);
                        const int j_hi = std::min(W, W + pad_before - v);
                        const int shift = v - pad_before;
                        const double wgt = kern.weight(o, ci, u, v);
                        double wsum = g.grad_kern.weight(o, ci, u, v);
                        for (int i = i_lo; i < i_hi; ++i) {
                            const double* xrow = &x.at(ni, ci, i + u - pad_before, 0);
                            double* gxrow = &g.grad_x.at(ni, ci, i + u - pad_before, 0);
                            const double* gyrow =
                                gyrow0 + static_cast<std::size_t>(i) * W;
                            for (int j = j_lo; j < j_hi; ++j) {
                                wsum += gyrow[j] * xrow[j + shift];
                                gxrow[j + shift] += wgt * gyrow[j];
                            }
                        }
                        g.grad_kern.weight(o, ci, u, v) = wsum;
                    }
                }
            }
        }
    }
    return g;
}

std::vector<double> dense_forward(const std::vector<double>& x, int n, int d,
                                  const std::vector<double>& weights, int m,
                                  const std::vector<double>& bias) {
    if (x.size() != static_cast<std::size_t>(n) * d ||
        weights.size() != static_cast<std::size_t>(d) * m ||
        bias.size() != static_cast<std::size_t>(m)) {
        throw std::invalid_argument("dense_forward: dimension mismatch");
    }
    require_finite(x, "dense_forward input");
    require_finite(weights, "dense_forward weights");

    std::vector<double> y(static_cast<std::size_t>(n) * m);
    for (int ni = 0; ni < n; ++ni) {
        const double* xi = &x[static_cast<std::size_t>(ni) * d];
        double* yi = &y[static_cast<std::size_t>(ni) * m];
        for (int j = 0; j < m; ++j) yi[j] = bias[j];
        for (int i = 0; i < d; ++i) {
            const double xv = xi[i];
            if (xv == 0.0) continue;
            const double* wrow = &weights[static_cast<std::size_t>(i) * m];
            for (int j = 0; j < m; ++j) yi[j] += xv * wrow[j];
        }
    }
    return y;
}

DenseGrads dense_backward(const std::vector<double>& x, int n, int d,
                          const std::vector<double>& weights, int m,
                          const std::vector<double>& grad_y) {
    if (x.size() != static_cast<std::size_t>(n) * d ||
        weights.size() != static_cast<std::size_t>(d) * m ||
        grad_y.size() != static_cast<std::size_t>(n) * m) {
        throw std::invalid_argument("dense_backward: dimension mismatch");
    }
    require_finite(x, "dense_backward input");
    require_finite(grad_y, "dense_backward grad_y");

    DenseGrads g;
    g.grad_x.assign(static_cast<std::size_t>(n) * d, 0.0);
    g.grad_weights.assign(static_cast<std::size_t>(d) * m, 0.0);
    g.grad_bias.assign(static_cast<std::size_t>(m), 0.0);

    for (int ni = 0; ni < n; ++ni) {
        const double* xi = &x[static_cast<std::size_t>(ni) * d];
        const double* gy = &grad_y[static_cast<std::size_t>(ni) * m];
        double* gx = &g.grad_x[static_cast<std::size_t>(ni) * d];
        for (int j = 0; j < m; ++j) g.grad_bias[j] += gy[j];
        for (int i = 0; i < d; ++i) {
            const double* wrow = &weights[static_cast<std::size_t>(i) * m];
            double* gwrow = &g.grad_weights[static_cast<std::size_t>(i) * m];
            double acc = 0.0;
            const double xv = xi[i];
            for (int j = 0; j < m; ++j) {
                acc += gy[j] * wrow[j];
                gwrow[j] += xv * gy[j];
            }
            gx[i] = acc;
        }
    }
    return g;
}

Tensor activation_forward(Activation kind, const Tensor& x) {
    if (kind == Activation::Identity) return x;
    Tensor y = x;
    if (kind == Activation::Sigmoid) {
        for (double& v : y.data) v = sigmoid(v);
    } else {
        for (double& v : y.data) v = v > 0.0 ? v : 0.0;
    }
    return y;
}

Tensor activation_backward(Activation kind, const Tensor& x,
                           const Tensor& grad_y) {
    if (!x.same_shape(grad_y)) {
        throw std::invalid_argument("activation_backward: shape mismatch");
    }
    if (kind == Activation::Identity) return grad_y;
    Tensor gx(x.n, x.c, x.h, x.w);
    if (kind == Activation::Sigmoid) {
        for (std::size_t i = 0; i < x.data.size(); ++i) {
            const double s = sigmoid(x.data[i]);
            gx.data[i] = grad_y.data[i] * s * (1.0 - s);
        }
    } else {
        for (std::size_t i = 0; i < x.data.size(); ++i) {
            gx.data[i] = x.data[i] > 0.0 ? grad_y.data[i] : 0.0;
        }
    }
    return gx;
}

SoftmaxCeResult softmax_cross_entropy(const std::vector<double>& logits, int n,
                                      int num_classes,
                                      const std::vector<int>& labels) {
    if (logits.size() != static_cast<std::size_t>(n) * num_classes ||
        labels.size() != static_cast<std::size_t>(n)) {
        throw std::invalid_argument("softmax_cross_entropy: shape mismatch");
    }
    require_finite(logits, "softmax_cross_entropy logits");
    for (int lbl : labels) {
        if (lbl < 0 || lbl >= num_classes) {
            throw std::out_of_range("softmax_cross_entropy: label out of range");
        }
    }

    SoftmaxCeResult res;
    res.grad_logits.assign(logits.size(), 0.0);
    const double inv_n = 1.0 / n;
    double loss_sum = 0.0;
    for (int ni = 0; ni < n; ++ni) {
        const double* row = &logits[static_cast<std::size_t>(ni) * num_classes];
        double* grow = &res.grad_logits[static_cast<std::size_t>(ni) * num_classes];
        double mx = row[0];
        for (int j = 1; j < num_classes; ++j) mx = std::max(mx, row[j]);
        double z = 0.0;
        for (int j = 0; j < num_classes; ++j) z += std::exp(row[j] - mx);
        const double log_z = std::log(z);
        loss_sum += log_z - (row[labels[ni]] - mx);
        for (int j = 0; j < num_classes; ++j) {
            grow[j] = std::exp(row[j] - mx) / z * inv_n;
        }
        grow[labels[ni]] -= inv_n;
    }
    res.loss = loss_sum * inv_n;
    return res;
}

}  // namespace resflat
