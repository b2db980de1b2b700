#include "resflat/train.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace resflat {

void TrainConfig::validate() const {
    if (learning_rate <= 0.0) throw std::invalid_argument("learning_rate must be > 0");
    if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (rmsprop_decay <= 0.0 || rmsprop_decay >= 1.0) {
        throw std::invalid_argument("rmsprop_decay must be in (0, 1)");
    }
    if (rmsprop_epsilon <= 0.0) throw std::invalid_argument("rmsprop_epsilon must be > 0");
}

RmsPropState make_rmsprop_state(const ModelParams& params) {
    RmsPropState s;
    s.projection = ConvKernel(params.projection.f_out, params.projection.f_in,
                              params.projection.k);
    for (const auto& b : params.branches) {
        s.branches.emplace_back(b.f_out, b.f_in, b.k);
    }
    s.classifier_w.assign(params.classifier_w.size(), 0.0);
    s.classifier_b.assign(params.classifier_b.size(), 0.0);
    return s;
}

void rmsprop_apply(std::vector<double>& theta, const std::vector<double>& grad,
                   std::vector<double>& v, const TrainConfig& config) {
    if (theta.size() != grad.size() || theta.size() != v.size()) {
        throw std::invalid_argument("rmsprop_apply: shape mismatch");
    }
    const double rho = config.rmsprop_decay;
    const double lr = config.learning_rate;
    const double eps = config.rmsprop_epsilon;
    for (std::size_t i = 0; i < theta.size(); ++i) {
        const double g = grad[i];
        if (!std::isfinite(g)) {
            throw std::domain_error("rmsprop_apply: non-finite gradient");
        }
        v[i] = rho * v[i] + (1.0 - rho) * g * g;
        theta[i] -= lr * g / (std::sqrt(v[i]) + eps);
    }
}

void rmsprop_step(ModelParams& params, const ModelGrads& grads,
                  RmsPropState& state, const TrainConfig& config) {
    config.validate();
    rmsprop_apply(params.projection.weights, grads.projection.weights,
                  state.projection.weights, config);
    rmsprop_apply(params.projection.bias, grads.projection.bias,
                  state.projection.bias, config);
    if (params.branches.size() != grads.branches.size() ||
        params.branches.size() != state.branches.size()) {
        throw std::invalid_argument("rmsprop_step: branch count mismatch");
    }
    for (std::size_t h = 0; h < params.branches.size(); ++h) {
        rmsprop_apply(params.branches[h].weights, grads.branches[h].weights,
                      state.branches[h].weights, config);
        rmsprop_apply(params.branches[h].bias, grads.branches[h].bias,
                      state.branches[h].bias, config);
    }
    rmsprop_apply(params.classifier_w, grads.classifier_w, state.classifier_w, config);
    rmsprop_apply(params.classifier_b, grads.classifier_b, state.classifier_b, config);
}

EvalResult evaluate(const ModelParams& params, const ArchitectureSpec& spec,
                    const Dataset& ds) {
    constexpr int kEvalBatch = 512;
    const int K = ds.size();
    EvalResult res;
    if (K == 0) return res;

    double loss_sum = 0.0;
    std::int64_t correct = 0;
    const BatchPlan plan = batches(K, kEvalBatch);
    for (const auto& [begin, end] : plan.ranges) {
        auto [batch, labels] = slice(ds, begin, end);
        const int n = end - begin;
        ForwardResult fw = forward(params, spec, batch);
        SoftmaxCeResult ce =
            softmax_cross_entropy(fw.logits, n, spec.num_classes, labels);
        loss_sum += ce.loss * n;
        for (int i = 0; i < n; ++i) {
            const double* row = &fw.logits[static_cast<std::size_t>(i) * spec.num_classes];
            int best = 0;
            for (int j = 1; j < spec.num_classes; ++j) {
                if (row[j] > row[best]) best = j;
            }
            if (best == labels[i]) ++correct;
        }
    }
    res.loss = loss_sum / K;
    res.accuracy = static_cast<double>(correct) / K;
    return res;
}

TrainResult train(const ArchitectureSpec& spec, const Dataset& train_ds,
                  const Dataset& val_ds, const TrainConfig& config) {
    spec.validate();
    config.validate();
    if (train_ds.images.c != spec.input_channels ||
        val_ds.images.c != spec.input_channels) {
        throw std::invalid_argument("train: dataset channels do not match spec");
    }

    TrainResult result;
    result.final_params = build_model(spec);
    ModelParams& params = result.final_params;
    RmsPropState state = make_rmsprop_state(params);
    const BatchPlan plan = batches(train_ds.size(), config.batch_size);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        int batch_index = 0;
        for (const auto& [begin, end] : plan.ranges) {
            try {
                auto [batch, labels] = slice(train_ds, begin, end);
                ForwardResult fw = forward(params, spec, batch);
                SoftmaxCeResult ce = softmax_cross_entropy(
                    fw.logits, end - begin, spec.num_classes, labels);
                if (!std::isfinite(ce.loss)) {
                    throw std::domain_error("non-finite training loss");
                }
                ModelGrads grads = backward(params, spec, fw.cache, ce.grad_logits);
                rmsprop_step(params, grads, state, config);
            } catch (const std::domain_error& e) {
                throw std::runtime_error("training aborted at epoch " +
                                         std::to_string(epoch) + ", batch " +
                                         std::to_string(batch_index) + ": " +
                                         e.what());
            }
            ++batch_index;
        }

        EvalResult tr = evaluate(params, spec, train_ds);
        EvalResult va = evaluate(params, spec, val_ds);
        if (!std::isfinite(tr.loss) || !std::isfinite(va.loss)) {
            throw std::runtime_error("training aborted at epoch " +
                                     std::to_string(epoch) +
                                     ": non-finite evaluation loss");
        }
        result.metrics.push_back(
            {epoch, tr.loss, va.loss, tr.accuracy, va.accuracy});
    }
    return result;
}

}  // namespace resflat
