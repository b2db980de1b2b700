#include "resflat/expansion.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

namespace resflat {

namespace {

void check_dims(const std::vector<LinearOperator>& ops,
                const std::vector<double>& x, const char* where) {
    for (const auto& op : ops) {
        if (op.dim != static_cast<int>(x.size())) {
            throw std::invalid_argument(std::string(where) +
                                        ": operator/vector dimension mismatch");
        }
    }
}

double norm2(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

}  // namespace

LinearOperator::LinearOperator(int d) : dim(d) {
    if (d < 1 || d > 32) {
        throw std::invalid_argument("LinearOperator: dim must be in [1, 32]");
    }
    m.assign(static_cast<std::size_t>(d) * d, 0.0);
}

std::vector<double> LinearOperator::apply(const std::vector<double>& x) const {
    if (static_cast<int>(x.size()) != dim) {
        throw std::invalid_argument("LinearOperator::apply: dimension mismatch");
    }
    std::vector<double> y(dim, 0.0);
    for (int r = 0; r < dim; ++r) {
        const double* row = &m[static_cast<std::size_t>(r) * dim];
        double acc = 0.0;
        for (int c = 0; c < dim; ++c) acc += row[c] * x[c];
        y[r] = acc;
    }
    return y;
}

std::vector<double> sequential_apply(const std::vector<LinearOperator>& ops,
                                     const std::vector<double>& x) {
    check_dims(ops, x, "sequential_apply");
    std::vector<double> z = x;
    for (const auto& op : ops) {
        std::vector<double> branch = op.apply(z);
        for (std::size_t i = 0; i < z.size(); ++i) z[i] += branch[i];
    }
    return z;
}

std::vector<double> expansion_apply(const std::vector<LinearOperator>& ops,
                                    const std::vector<double>& x, int max_order) {
    const int H = static_cast<int>(ops.size());
    if (H > 20) {
        throw std::invalid_argument("expansion_apply: capped at 20 layers");
    }
    if (max_order < 0 || max_order > H) {
        throw std::invalid_argument("expansion_apply: order must be in [0, H]");
    }
    check_dims(ops, x, "expansion_apply");

    std::vector<double> y(x.size(), 0.0);
    const std::uint64_t masks = 1ULL << H;
    for (std::uint64_t mask = 0; mask < masks; ++mask) {
        if (std::popcount(mask) > max_order) continue;
        std::vector<double> term = x;
        for (int h = 0; h < H; ++h) {
            if (mask & (1ULL << h)) term = ops[h].apply(term);
        }
        for (std::size_t i = 0; i < y.size(); ++i) y[i] += term[i];
    }
    return y;
}

std::uint64_t expansion_term_count(int num_layers, int max_order) {
    if (num_layers < 0 || max_order < 0 || max_order > num_layers) {
        throw std::invalid_argument("expansion_term_count: bad arguments");
    }
    std::uint64_t total = 0;
    std::uint64_t binom = 1;  // C(H, 0)
    for (int j = 0; j <= max_order; ++j) {
        total += binom;
        binom = binom * (num_layers - j) / (j + 1);
    }
    return total;
}

double truncation_error(const std::vector<LinearOperator>& ops,
                        const std::vector<double>& x, int order) {
    if (norm2(x) == 0.0) {
        throw std::invalid_argument("truncation_error: x must be nonzero");
    }
    std::vector<double> full = sequential_apply(ops, x);
    const double ref = norm2(full);
    if (ref == 0.0) {
        throw std::domain_error("truncation_error: zero-norm reference");
    }
    std::vector<double> approx = expansion_apply(ops, x, order);
    for (std::size_t i = 0; i < full.size(); ++i) approx[i] -= full[i];
    return norm2(approx) / ref;
}

std::vector<double> residual_gradient_product(const ResidualDenseStack& stack,
                                              const std::vector<double>& x,
                                              const std::vector<double>& grad_out,
                                              int layer) {
    const int H = static_cast<int>(stack.weights.size());
    if (stack.biases.size() != stack.weights.size()) {
        throw std::invalid_argument("residual_gradient_product: bias count mismatch");
    }
    if (layer < 0 || layer > H) {
        throw std::invalid_argument("residual_gradient_product: layer out of range");
    }
    const int d = static_cast<int>(x.size());
    for (const auto& w : stack.weights) {
        if (w.dim != d) {
            throw std::invalid_argument("residual_gradient_product: dim mismatch");
        }
    }
    if (static_cast<int>(grad_out.size()) != d) {
        throw std::invalid_argument("residual_gradient_product: grad dim mismatch");
    }

    // Forward pass to collect pre-activations a_k = W_k z_{k-1} + b_k.
    std::vector<std::vector<double>> preacts(H);
    std::vector<double> z = x;
    for (int k = 0; k < H; ++k) {
        std::vector<double> a = stack.weights[k].apply(z);
        for (int i = 0; i < d; ++i) a[i] += stack.biases[k][i];
        preacts[k] = a;
        for (int i = 0; i < d; ++i) {
            double f = a[i];
            if (stack.activation == Activation::Sigmoid) f = sigmoid(a[i]);
            else if (stack.activation == Activation::Relu) f = a[i] > 0.0 ? a[i] : 0.0;
            z[i] += f;
        }
    }

    // Apply (I + W_k^T D_k) for k = H down to layer+1.
    std::vector<double> g = grad_out;
    for (int k = H - 1; k >= layer; --k) {
        std::vector<double> dg(d);
        for (int i = 0; i < d; ++i) {
            double deriv = 1.0;
            const double a = preacts[k][i];
            if (stack.activation == Activation::Sigmoid) {
                const double s = sigmoid(a);
                deriv = s * (1.0 - s);
            } else if (stack.activation == Activation::Relu) {
                deriv = a > 0.0 ? 1.0 : 0.0;
            }
            dg[i] = deriv * g[i];
        }
        // g += W_k^T dg
        const LinearOperator& wk = stack.weights[k];
        for (int r = 0; r < d; ++r) {
            const double* row = &wk.m[static_cast<std::size_t>(r) * d];
            const double dgr = dg[r];
            for (int c = 0; c < d; ++c) g[c] += row[c] * dgr;
        }
    }
    return g;
}

}  // namespace resflat
