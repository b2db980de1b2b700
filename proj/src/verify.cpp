#include "resflat/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "resflat/data.hpp"
#include "resflat/expansion.hpp"
#include "resflat/model.hpp"
#include "resflat/rng.hpp"
#include "resflat/tensor.hpp"
#include "resflat/train.hpp"

namespace resflat {
namespace {

struct Rng {
    RngState s;
    explicit Rng(std::uint64_t seed) : s{seed} {}
    double unit() {
        auto [s2, v] = uniform01(s);
        s = s2;
        return v;
    }
    double range(double lo, double hi) { return lo + (hi - lo) * unit(); }
    int irange(int lo, int hi) {  // inclusive
        return lo + static_cast<int>(unit() * (hi - lo + 1));
    }
};

std::string fmt_err(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "max err %.3g", v);
    return std::string(buf);
}

double rel_err(double a, double b) {
    return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), 1e-5});
}

double vec_rel_err(const std::vector<double>& a, const std::vector<double>& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, rel_err(a[i], b[i]));
    return worst;
}

std::vector<LinearOperator> random_ops(Rng& rng, int depth, int dim, double scale) {
    std::vector<LinearOperator> ops;
    for (int h = 0; h < depth; ++h) {
        LinearOperator op(dim);
        for (double& v : op.m) v = rng.range(-scale, scale);
        ops.push_back(std::move(op));
    }
    return ops;
}

std::vector<double> random_vec(Rng& rng, int dim, double scale) {
    std::vector<double> x(dim);
    for (double& v : x) v = rng.range(-scale, scale);
    return x;
}

double vec_norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double e : v) s += e * e;
    return std::sqrt(s);
}

VerifyCheck check_expansion_matches_product(int trials) {
    Rng rng(0x9d2c5681);
    double worst = 0.0;
    for (int t = 0; t < trials; ++t) {
        const int depth = rng.irange(1, 8);
        const int dim = rng.irange(1, 8);
        auto ops = random_ops(rng, depth, dim, 0.5);
        auto x = random_vec(rng, dim, 1.0);
        auto seq = sequential_apply(ops, x);
        auto exp = expansion_apply(ops, x, depth);
        double diff = 0.0;
        for (std::size_t i = 0; i < seq.size(); ++i) diff += (seq[i] - exp[i]) * (seq[i] - exp[i]);
        const double rel = std::sqrt(diff) / std::max(vec_norm(seq), 1e-12);
        worst = std::max(worst, rel);
    }
    return {"expansion_matches_product", worst <= 1e-10, fmt_err(worst)};
}

VerifyCheck check_expansion_term_counts() {
    for (int depth = 1; depth <= 10; ++depth) {
        std::uint64_t running = 0;
        for (int order = 0; order <= depth; ++order) {
            std::uint64_t direct = 0;  // subsets counted one mask at a time
            for (std::uint64_t mask = 0; mask < (1ULL << depth); ++mask) {
                int bits = 0;
                for (int b = 0; b < depth; ++b) bits += (mask >> b) & 1;
                if (bits <= order) ++direct;
            }
            running = expansion_term_count(depth, order);
            if (running != direct) {
                return {"expansion_term_counts", false,
                        "depth " + std::to_string(depth) + " order " + std::to_string(order)};
            }
        }
        if (running != (1ULL << depth)) {
            return {"expansion_term_counts", false, "full order != 2^H at depth " +
                                                        std::to_string(depth)};
        }
    }
    return {"expansion_term_counts", true, "depths 1..10"};
}

VerifyCheck check_order_one_truncation(int trials) {
    Rng rng(0xb5297a4d);
    double worst = 0.0;
    for (int t = 0; t < trials; ++t) {
        const int depth = rng.irange(1, 6);
        const int dim = rng.irange(2, 6);
        auto ops = random_ops(rng, depth, dim, 0.5);
        auto x = random_vec(rng, dim, 1.0);
        std::vector<double> direct = x;
        for (const auto& op : ops) {
            auto wx = op.apply(x);
            for (int i = 0; i < dim; ++i) direct[i] += wx[i];
        }
        auto trunc = expansion_apply(ops, x, 1);
        worst = std::max(worst, vec_rel_err(direct, trunc));
    }
    return {"order_one_truncation", worst <= 1e-12, fmt_err(worst)};
}

VerifyCheck check_truncation_scaling(int trials) {
    Rng rng(0x68e31da4);
    double lo = 1e300, hi = 0.0;
    int used = 0;
    for (int t = 0; t < trials * 4 && used < trials; ++t) {
        const int depth = 4, dim = 6;
        auto base = random_ops(rng, depth, dim, 0.5);
        auto x = random_vec(rng, dim, 1.0);
        auto scaled = [&](double alpha) {
            auto ops = base;
            for (auto& op : ops)
                for (double& v : op.m) v *= alpha;
            return ops;
        };
        const double e1 = truncation_error(scaled(0.1), x, 1);
        const double e2 = truncation_error(scaled(0.01), x, 1);
        if (e2 < 1e-14) continue;  // degenerate draw
        const double ratio = e1 / e2;
        lo = std::min(lo, ratio);
        hi = std::max(hi, ratio);
        ++used;
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "ratio in [%.3g, %.3g]", lo, hi);
    const bool ok = used == trials && lo >= 80.0 && hi <= 120.0;
    return {"truncation_error_scaling", ok, buf};
}

VerifyCheck check_refinement_monotone(int trials) {
    Rng rng(0x1b56c4e9);
    for (int t = 0; t < trials; ++t) {
        const int depth = rng.irange(2, 6);
        const int dim = rng.irange(2, 6);
        // keep every operator well inside the contraction regime
        auto ops = random_ops(rng, depth, dim, 0.4 / dim);
        auto x = random_vec(rng, dim, 1.0);
        double prev = 1e300;
        for (int order = 0; order <= depth; ++order) {
            const double err = truncation_error(ops, x, order);
            if (err > prev + 1e-12) {
                return {"refinement_monotone", false,
                        "error grew at order " + std::to_string(order)};
            }
            prev = err;
        }
        const double last = truncation_error(ops, x, depth);
        if (last > 1e-12) {
            return {"refinement_monotone", false, "full order not exact"};
        }
    }
    return {"refinement_monotone", true, std::to_string(trials) + " stacks"};
}

// Forward through layers [first, last) of the stack.
std::vector<double> stack_forward(const ResidualDenseStack& stack, std::vector<double> z,
                                  std::size_t first, std::size_t last) {
    for (std::size_t h = first; h < last; ++h) {
        auto pre = stack.weights[h].apply(z);
        for (std::size_t i = 0; i < pre.size(); ++i) pre[i] += stack.biases[h][i];
        for (std::size_t i = 0; i < pre.size(); ++i) {
            double a;
            switch (stack.activation) {
                case Activation::Sigmoid: a = sigmoid(pre[i]); break;
                case Activation::Relu: a = pre[i] > 0.0 ? pre[i] : 0.0; break;
                default: a = pre[i]; break;
            }
            z[i] += a;
        }
    }
    return z;
}

VerifyCheck check_gradient_product(int trials) {
    Rng rng(0x5f24e923);
    double worst = 0.0;
    for (int t = 0; t < trials; ++t) {
        const int depth = rng.irange(2, 5);
        const int dim = rng.irange(2, 6);
        ResidualDenseStack stack;
        stack.activation = (t % 2 == 0) ? Activation::Sigmoid : Activation::Relu;
        for (int h = 0; h < depth; ++h) {
            LinearOperator op(dim);
            for (double& v : op.m) v = rng.range(-0.6, 0.6);
            stack.weights.push_back(std::move(op));
            stack.biases.push_back(random_vec(rng, dim, 0.5));
        }
        const auto x = random_vec(rng, dim, 1.0);
        const auto grad_out = random_vec(rng, dim, 1.0);

        for (int layer = 0; layer <= depth; ++layer) {
            const auto z_h = stack_forward(stack, x, 0, layer);
            const auto analytic = residual_gradient_product(stack, x, grad_out, layer);
            const double step = 1e-6;
            std::vector<double> fd(dim);
            for (int i = 0; i < dim; ++i) {
                auto zp = z_h, zm = z_h;
                zp[i] += step;
                zm[i] -= step;
                const auto yp = stack_forward(stack, zp, layer, depth);
                const auto ym = stack_forward(stack, zm, layer, depth);
                double sp = 0.0, sm = 0.0;
                for (int j = 0; j < dim; ++j) {
                    sp += grad_out[j] * yp[j];
                    sm += grad_out[j] * ym[j];
                }
                fd[i] = (sp - sm) / (2.0 * step);
            }
            worst = std::max(worst, vec_rel_err(analytic, fd));
        }
    }
    return {"gradient_product_rule", worst <= 1e-5, fmt_err(worst)};
}

Tensor random_tensor(Rng& rng, int n, int c, int h, int w, double scale) {
    Tensor t(n, c, h, w);
    for (double& v : t.data) v = rng.range(-scale, scale);
    return t;
}

VerifyCheck check_kernel_gradients() {
    Rng rng(0x77163a21);
    double worst = 0.0;
    const double step = 1e-5;

    {  // conv2d: loss = <G, conv(x)>
        Tensor x = random_tensor(rng, 2, 2, 4, 4, 1.0);
        ConvKernel kern(2, 2, 3);
        for (double& v : kern.weights) v = rng.range(-0.7, 0.7);
        for (double& v : kern.bias) v = rng.range(-0.5, 0.5);
        Tensor g = random_tensor(rng, 2, 2, 4, 4, 1.0);
        auto loss = [&](const Tensor& xx, const ConvKernel& kk) {
            Tensor y = conv2d_forward(xx, kk);
            double s = 0.0;
            for (std::size_t i = 0; i < y.data.size(); ++i) s += g.data[i] * y.data[i];
            return s;
        };
        ConvGrads grads = conv2d_backward(x, kern, g);
        for (std::size_t i = 0; i < x.data.size(); ++i) {
            Tensor xp = x, xm = x;
            xp.data[i] += step;
            xm.data[i] -= step;
            const double fd = (loss(xp, kern) - loss(xm, kern)) / (2.0 * step);
            worst = std::max(worst, rel_err(fd, grads.grad_x.data[i]));
        }
        for (std::size_t i = 0; i < kern.weights.size(); ++i) {
            ConvKernel kp = kern, km = kern;
            kp.weights[i] += step;
            km.weights[i] -= step;
            const double fd = (loss(x, kp) - loss(x, km)) / (2.0 * step);
            worst = std::max(worst, rel_err(fd, grads.grad_kern.weights[i]));
        }
        for (std::size_t i = 0; i < kern.bias.size(); ++i) {
            ConvKernel kp = kern, km = kern;
            kp.bias[i] += step;
            km.bias[i] -= step;
            const double fd = (loss(x, kp) - loss(x, km)) / (2.0 * step);
            worst = std::max(worst, rel_err(fd, grads.grad_kern.bias[i]));
        }
    }

    {  // dense
        const int n = 2, d = 5, m = 3;
        auto x = random_vec(rng, n * d, 1.0);
        auto w = random_vec(rng, d * m, 0.7);
        auto b = random_vec(rng, m, 0.5);
        auto g = random_vec(rng, n * m, 1.0);
        auto loss = [&](const std::vector<double>& xx, const std::vector<double>& ww,
                        const std::vector<double>& bb) {
            auto y = dense_forward(xx, n, d, ww, m, bb);
            double s = 0.0;
            for (std::size_t i = 0; i < y.size(); ++i) s += g[i] * y[i];
            return s;
        };
        DenseGrads grads = dense_backward(x, n, d, w, m, g);
        for (std::size_t i = 0; i < x.size(); ++i) {
            auto xp = x, xm = x;
            xp[i] += step;
            xm[i] -= step;
            worst = std::max(worst,
                             rel_err((loss(xp, w, b) - loss(xm, w, b)) / (2 * step), grads.grad_x[i]));
        }
        for (std::size_t i = 0; i < w.size(); ++i) {
            auto wp = w, wm = w;
            wp[i] += step;
            wm[i] -= step;
            worst = std::max(
                worst, rel_err((loss(x, wp, b) - loss(x, wm, b)) / (2 * step), grads.grad_weights[i]));
        }
        // bias gradient: column sums of g
        for (int j = 0; j < m; ++j) {
            double expect = 0.0;
            for (int i = 0; i < n; ++i) expect += g[static_cast<std::size_t>(i) * m + j];
            worst = std::max(worst, rel_err(expect, grads.grad_bias[j]));
        }
    }

    for (Activation act : {Activation::Sigmoid, Activation::Relu}) {
        Tensor x = random_tensor(rng, 1, 2, 3, 3, 1.0);
        if (act == Activation::Relu) {
            for (double& v : x.data) {
                if (std::fabs(v) < 1e-2) v = 0.1;  // stay off the kink
            }
        }
        Tensor g = random_tensor(rng, 1, 2, 3, 3, 1.0);
        Tensor grad = activation_backward(act, x, g);
        for (std::size_t i = 0; i < x.data.size(); ++i) {
            Tensor xp = x, xm = x;
            xp.data[i] += step;
            xm.data[i] -= step;
            Tensor yp = activation_forward(act, xp);
            Tensor ym = activation_forward(act, xm);
            double fd = 0.0;
            for (std::size_t j = 0; j < yp.data.size(); ++j) {
                fd += g.data[j] * (yp.data[j] - ym.data[j]);
            }
            fd /= 2.0 * step;
            worst = std::max(worst, rel_err(fd, grad.data[i]));
        }
    }

    {  // softmax cross-entropy wrt logits
        const int n = 3, classes = 10;
        auto logits = random_vec(rng, n * classes, 2.0);
        std::vector<int> labels = {1, 7, 3};
        auto base = softmax_cross_entropy(logits, n, classes, labels);
        for (std::size_t i = 0; i < logits.size(); ++i) {
            auto lp = logits, lm = logits;
            lp[i] += step;
            lm[i] -= step;
            const double fd = (softmax_cross_entropy(lp, n, classes, labels).loss -
                               softmax_cross_entropy(lm, n, classes, labels).loss) /
                              (2.0 * step);
            worst = std::max(worst, rel_err(fd, base.grad_logits[i]));
        }
    }

    return {"kernel_gradients", worst <= 1e-5, fmt_err(worst)};
}

std::vector<std::vector<double>*> grad_blocks(ModelGrads& g) {
    std::vector<std::vector<double>*> out = {&g.projection.weights, &g.projection.bias};
    for (auto& b : g.branches) {
        out.push_back(&b.weights);
        out.push_back(&b.bias);
    }
    out.push_back(&g.classifier_w);
    out.push_back(&g.classifier_b);
    return out;
}

std::vector<std::vector<double>*> param_blocks(ModelParams& p) {
    std::vector<std::vector<double>*> out = {&p.projection.weights, &p.projection.bias};
    for (auto& b : p.branches) {
        out.push_back(&b.weights);
        out.push_back(&b.bias);
    }
    out.push_back(&p.classifier_w);
    out.push_back(&p.classifier_b);
    return out;
}

double model_fd_worst(const ArchitectureSpec& spec, int sample_stride) {
    Dataset ds = synthetic_dataset(4, spec.input_channels, 0xfeed);
    auto [x, labels] = slice(ds, 0, 4);

    ModelParams params = build_model(spec);
    auto loss_of = [&](const ModelParams& p) {
        ForwardResult res = forward(p, spec, x);
        return softmax_cross_entropy(res.logits, x.n, spec.num_classes, labels).loss;
    };

    ForwardResult res = forward(params, spec, x);
    auto ce = softmax_cross_entropy(res.logits, x.n, spec.num_classes, labels);
    ModelGrads grads = backward(params, spec, res.cache, ce.grad_logits);

    auto pblocks = param_blocks(params);
    auto gblocks = grad_blocks(grads);

    const double step = 1e-5;
    double worst = 0.0;
    std::size_t counter = 0;
    for (std::size_t b = 0; b < pblocks.size(); ++b) {
        std::vector<double>& theta = *pblocks[b];
        const std::vector<double>& g = *gblocks[b];
        for (std::size_t i = 0; i < theta.size(); ++i, ++counter) {
            if (sample_stride > 1 && counter % sample_stride != 0) continue;
            const double saved = theta[i];
            theta[i] = saved + step;
            const double lp = loss_of(params);
            theta[i] = saved - step;
            const double lm = loss_of(params);
            theta[i] = saved;
            const double fd = (lp - lm) / (2.0 * step);
            worst = std::max(worst, rel_err(fd, g[i]));
        }
    }
    return worst;
}

VerifyCheck check_model_gradients(VerifyLevel level) {
    double worst = 0.0;
    if (level == VerifyLevel::Quick) {
        for (Variant v : {Variant::Sequential, Variant::Parallel}) {
            ArchitectureSpec spec;
            spec.input_channels = 1;
            spec.depth = 2;
            spec.filters = 1;
            spec.kernel = 2;
            spec.activation = Activation::Relu;
            spec.variant = v;
            spec.base_seed = 11;
            worst = std::max(worst, model_fd_worst(spec, 97));
        }
    } else {
        for (Variant v : {Variant::Sequential, Variant::Parallel}) {
            for (Activation act : {Activation::Sigmoid, Activation::Relu}) {
                ArchitectureSpec spec;
                spec.input_channels = 1;
                spec.depth = 3;
                spec.filters = 2;
                spec.kernel = 2;
                spec.activation = act;
                spec.variant = v;
                spec.base_seed = 11;
                worst = std::max(worst, model_fd_worst(spec, 13));
            }
        }
    }
    return {"model_gradients", worst <= 1e-4, fmt_err(worst)};
}

VerifyCheck check_shared_initialization() {
    ArchitectureSpec seq;
    seq.input_channels = 1;
    seq.depth = 4;
    seq.filters = 3;
    seq.kernel = 3;
    seq.base_seed = 42;
    seq.variant = Variant::Sequential;
    ArchitectureSpec par = seq;
    par.variant = Variant::Parallel;

    ModelParams a = build_model(seq);
    ModelParams b = build_model(par);
    if (!a.bitwise_equal(b)) {
        return {"shared_initialization", false, "variants differ at init"};
    }
    ModelParams c = build_model(seq);
    if (!a.bitwise_equal(c)) {
        return {"shared_initialization", false, "rebuild not reproducible"};
    }
    if (a.branches[0].weights == a.branches[1].weights) {
        return {"shared_initialization", false, "adjacent branches share weights"};
    }
    return {"shared_initialization", true, "bitwise equal across variants and rebuilds"};
}

VerifyCheck check_depth_one_collapse() {
    ArchitectureSpec seq;
    seq.input_channels = 1;
    seq.depth = 1;
    seq.filters = 2;
    seq.kernel = 3;
    seq.activation = Activation::Sigmoid;
    seq.base_seed = 5;
    seq.variant = Variant::Sequential;
    ArchitectureSpec par = seq;
    par.variant = Variant::Parallel;

    Dataset ds = synthetic_dataset(2, 1, 0xabc);
    auto [x, labels] = slice(ds, 0, 2);
    (void)labels;
    auto ra = forward(build_model(seq), seq, x);
    auto rb = forward(build_model(par), par, x);
    if (ra.logits != rb.logits) {
        return {"depth_one_collapse", false, "logits differ at depth 1"};
    }
    return {"depth_one_collapse", true, "logits bitwise equal"};
}

VerifyCheck check_training_determinism() {
    ArchitectureSpec spec;
    spec.input_channels = 1;
    spec.depth = 2;
    spec.filters = 1;
    spec.kernel = 2;
    spec.activation = Activation::Relu;
    spec.variant = Variant::Sequential;
    spec.base_seed = 77;

    TrainConfig config;
    config.learning_rate = 1e-3;
    config.epochs = 2;
    config.batch_size = 16;

    Dataset train_ds = synthetic_dataset(32, 1, 7);
    Dataset val_ds = synthetic_dataset(16, 1, 9);
    TrainResult r1 = train(spec, train_ds, val_ds, config);
    TrainResult r2 = train(spec, train_ds, val_ds, config);
    if (!r1.final_params.bitwise_equal(r2.final_params)) {
        return {"training_determinism", false, "final parameters differ"};
    }
    if (r1.metrics.size() != r2.metrics.size()) {
        return {"training_determinism", false, "metric counts differ"};
    }
    for (std::size_t i = 0; i < r1.metrics.size(); ++i) {
        const auto& m1 = r1.metrics[i];
        const auto& m2 = r2.metrics[i];
        if (m1.train_loss != m2.train_loss || m1.val_loss != m2.val_loss ||
            m1.train_accuracy != m2.train_accuracy || m1.val_accuracy != m2.val_accuracy) {
            return {"training_determinism", false, "metrics differ at epoch " + std::to_string(i)};
        }
    }
    return {"training_determinism", true, "two runs bitwise identical"};
}

}  // namespace

VerifyLevel verify_level_from_string(const std::string& s) {
    if (s == "quick") return VerifyLevel::Quick;
    if (s == "full") return VerifyLevel::Full;
    throw std::invalid_argument("unknown verify level: " + s);
}

std::vector<VerifyCheck> run_verification(VerifyLevel level) {
    const bool full = level == VerifyLevel::Full;
    std::vector<VerifyCheck> checks;
    checks.push_back(check_expansion_matches_product(full ? 60 : 20));
    checks.push_back(check_expansion_term_counts());
    checks.push_back(check_order_one_truncation(full ? 30 : 10));
    checks.push_back(check_truncation_scaling(full ? 15 : 5));
    checks.push_back(check_refinement_monotone(full ? 15 : 5));
    checks.push_back(check_gradient_product(full ? 8 : 3));
    checks.push_back(check_kernel_gradients());
    checks.push_back(check_model_gradients(level));
    checks.push_back(check_shared_initialization());
    checks.push_back(check_depth_one_collapse());
    checks.push_back(check_training_determinism());
    return checks;
}

bool all_passed(const std::vector<VerifyCheck>& checks) {
    for (const auto& c : checks) {
        if (!c.passed) return false;
    }
    return true;
}

}  // namespace resflat
