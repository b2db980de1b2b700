#pragma once

#include <cstdint>
#include <vector>

#include "resflat/tensor.hpp"

namespace resflat {

// Small dense square matrix standing in for one residual branch in the
// linear analysis. d is kept small (<= 32); exactness, not speed, is the point.
struct LinearOperator {
    int dim = 0;
    std::vector<double> m;  // row-major d x d

    LinearOperator() = default;
    explicit LinearOperator(int d);

    double& at(int r, int c) { return m[static_cast<std::size_t>(r) * dim + c]; }
    double at(int r, int c) const { return m[static_cast<std::size_t>(r) * dim + c]; }

    std::vector<double> apply(const std::vector<double>& x) const;
};

// y = (I + W_H) ... (I + W_1) x, layers applied in ascending order.
std::vector<double> sequential_apply(const std::vector<LinearOperator>& ops,
                                     const std::vector<double>& x);

// Sum over all operator subsets S of {1..H} with |S| <= max_order of
// (prod_{h in S} W_h) x, the empty subset contributing the identity term.
// For S = {h < k} the term is W_k W_h x: higher index applied later.
// Subset enumeration is capped at H <= 20 (2^H terms).
std::vector<double> expansion_apply(const std::vector<LinearOperator>& ops,
                                    const std::vector<double>& x, int max_order);

// Number of subset terms the expansion sums at the given order:
// sum_{j=0}^{max_order} C(H, j).
std::uint64_t expansion_term_count(int num_layers, int max_order);

// ||expansion(order) - sequential|| / ||sequential|| in the 2-norm.
double truncation_error(const std::vector<LinearOperator>& ops,
                        const std::vector<double>& x, int order);

// Residual dense stack z_h = z_{h-1} + act(W_h z_{h-1} + b_h), used by the
// gradient-product formula and its verification.
struct ResidualDenseStack {
    std::vector<LinearOperator> weights;
    std::vector<std::vector<double>> biases;
    Activation activation = Activation::Identity;
};

// Evaluates dE/dz_h = (I + W_{h+1}^T D_{h+1}) ... (I + W_H^T D_H) dE/dz_H
// where D_k is the diagonal activation derivative at the forward
// pre-activation of layer k. `layer` is h; factors above it are applied
// from k = H down to h+1.
std::vector<double> residual_gradient_product(const ResidualDenseStack& stack,
                                              const std::vector<double>& x,
                                              const std::vector<double>& grad_out,
                                              int layer);

}  // namespace resflat
