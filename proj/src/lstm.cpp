#include "regimehmm/lstm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "regimehmm/kernels.hpp"

namespace regimehmm::lstm {

namespace {

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

void check_targets(const StackedInput& input) {
    if (input.targets.size() != input.steps() || input.defined.size() != input.steps()) {
        fail(ErrorCode::dimension_mismatch, "target length does not match sequence");
    }
    std::size_t n_defined = 0;
    for (std::size_t t = 0; t < input.steps(); ++t) {
        if (!input.defined[t]) {
            continue;
        }
        if (input.targets[t] < -1 || input.targets[t] > 1) {
            fail(ErrorCode::invalid_argument, "targets must be in {-1, 0, +1}");
        }
        ++n_defined;
    }
    if (n_defined == 0) {
        fail(ErrorCode::degenerate_input, "no defined labels");
    }
}

// Caches of every per-step vector needed by the backward pass.
struct ForwardCache {
    Matrix f, i, g, o, c, tanh_c, h, probs;  // hidden x T (probs: 3 x T)
};

ForwardCache run_forward(const LstmParams& p, const Matrix& x) {
    p.validate();
    if (x.rows() != static_cast<std::size_t>(p.input_dim)) {
        fail(ErrorCode::dimension_mismatch,
             "input rows (" + std::to_string(x.rows()) + ") do not match input_dim (" +
                 std::to_string(p.input_dim) + ")");
    }
    if (!x.all_finite()) {
        fail(ErrorCode::nonfinite_input, "LSTM input contains non-finite values");
    }
    const std::size_t steps = x.cols();
    const auto hidden = static_cast<std::size_t>(p.hidden_dim);
    const auto input = static_cast<std::size_t>(p.input_dim);

    ForwardCache cache;
    for (Matrix* m : {&cache.f, &cache.i, &cache.g, &cache.o, &cache.c, &cache.tanh_c,
                      &cache.h}) {
        *m = Matrix(hidden, steps);
    }
    cache.probs = Matrix(3, steps);

    std::vector<double> z(input + hidden, 0.0);
    std::vector<double> h_prev(hidden, 0.0), c_prev(hidden, 0.0);
    for (std::size_t t = 0; t < steps; ++t) {
        for (std::size_t d = 0; d < input; ++d) {
            z[d] = x(d, t);
        }
        std::copy(h_prev.begin(), h_prev.end(), z.begin() + input);
        for (std::size_t u = 0; u < hidden; ++u) {
            cache.f(u, t) = sigmoid(kernels::dot(p.w_forget.row(u), z) + p.b_forget[u]);
            cache.i(u, t) = sigmoid(kernels::dot(p.w_input.row(u), z) + p.b_input[u]);
            cache.g(u, t) = std::tanh(kernels::dot(p.w_cand.row(u), z) + p.b_cand[u]);
            cache.o(u, t) = sigmoid(kernels::dot(p.w_output.row(u), z) + p.b_output[u]);
            cache.c(u, t) = cache.f(u, t) * c_prev[u] + cache.i(u, t) * cache.g(u, t);
            cache.tanh_c(u, t) = std::tanh(cache.c(u, t));
            cache.h(u, t) = cache.o(u, t) * cache.tanh_c(u, t);
        }
        for (std::size_t u = 0; u < hidden; ++u) {
            h_prev[u] = cache.h(u, t);
            c_prev[u] = cache.c(u, t);
        }

        double logits[3];
        double best = -std::numeric_limits<double>::infinity();
        for (int k = 0; k < 3; ++k) {
            double acc = p.b_readout[k];
            for (std::size_t u = 0; u < hidden; ++u) {
                acc += p.w_readout(k, u) * cache.h(u, t);
            }
            logits[k] = acc;
            best = std::max(best, acc);
        }
        double denom = 0.0;
        for (int k = 0; k < 3; ++k) {
            cache.probs(k, t) = std::exp(logits[k] - best);
            denom += cache.probs(k, t);
        }
        for (int k = 0; k < 3; ++k) {
            cache.probs(k, t) /= denom;
        }
    }
    return cache;
}

}  // namespace

LstmParams LstmParams::zeros(int input_dim, int hidden_dim) {
    LstmParams p;
    p.input_dim = input_dim;
    p.hidden_dim = hidden_dim;
    const auto h = static_cast<std::size_t>(hidden_dim);
    const auto z = static_cast<std::size_t>(input_dim + hidden_dim);
    p.w_forget = Matrix(h, z);
    p.w_input = Matrix(h, z);
    p.w_cand = Matrix(h, z);
    p.w_output = Matrix(h, z);
    p.b_forget.assign(h, 0.0);
    p.b_input.assign(h, 0.0);
    p.b_cand.assign(h, 0.0);
    p.b_output.assign(h, 0.0);
    p.w_readout = Matrix(3, h);
    p.b_readout.assign(3, 0.0);
    return p;
}

void LstmParams::validate() const {
    if (input_dim < 1 || hidden_dim < 1) {
        fail(ErrorCode::invalid_argument, "LSTM dimensions must be positive");
    }
    const auto h = static_cast<std::size_t>(hidden_dim);
    const auto z = static_cast<std::size_t>(input_dim + hidden_dim);
    for (const Matrix* m : {&w_forget, &w_input, &w_cand, &w_output}) {
        if (m->rows() != h || m->cols() != z || !m->all_finite()) {
            fail(ErrorCode::invalid_argument, "gate weight shape or value invalid");
        }
    }
    if (w_readout.rows() != 3 || w_readout.cols() != h || !w_readout.all_finite()) {
        fail(ErrorCode::invalid_argument, "readout weight shape or value invalid");
    }
    if (b_forget.size() != h || b_input.size() != h || b_cand.size() != h ||
        b_output.size() != h || b_readout.size() != 3) {
        fail(ErrorCode::invalid_argument, "bias shape invalid");
    }
}

StackedInput stack_state_probas(std::span<const hmm::PosteriorMatrix> posteriors) {
    if (posteriors.empty()) {
        fail(ErrorCode::invalid_argument, "no posterior matrices to stack");
    }
    const std::size_t steps = posteriors.front().gamma.cols();
    std::size_t total_rows = 0;
    for (const auto& post : posteriors) {
        if (post.gamma.cols() != steps) {
            fail(ErrorCode::dimension_mismatch,
                 "posterior matrices cover different numbers of bars");
        }
        total_rows += post.gamma.rows();
    }
    StackedInput out;
    out.x = Matrix(total_rows, steps);
    std::size_t row = 0;
    for (const auto& post : posteriors) {
        for (std::size_t t = 0; t < steps; ++t) {
            double col = 0.0;
            for (std::size_t i = 0; i < post.gamma.rows(); ++i) {
                col += post.gamma(i, t);
            }
            if (std::abs(col - 1.0) > 1e-6) {
                fail(ErrorCode::invalid_argument,
                     "posterior column " + std::to_string(t) + " is not stochastic");
            }
        }
        for (std::size_t i = 0; i < post.gamma.rows(); ++i, ++row) {
            std::copy(post.gamma.row(i).begin(), post.gamma.row(i).end(),
                      out.x.row(row).begin());
        }
    }
    out.targets.assign(steps, 0);
    out.defined.assign(steps, 0);
    return out;
}

void attach_targets(StackedInput& input, const labeling::LabelSeries& labels,
                    std::size_t offset) {
    if (labels.size() < offset + input.steps()) {
        fail(ErrorCode::dimension_mismatch, "label series shorter than stacked input");
    }
    for (std::size_t t = 0; t < input.steps(); ++t) {
        input.targets[t] = labels.labels[offset + t];
        input.defined[t] = labels.defined[offset + t];
    }
}

Matrix lstm_forward(const LstmParams& params, const Matrix& x) {
    return run_forward(params, x).probs;
}

LstmGradients lstm_gradients(const LstmParams& p, const StackedInput& input) {
    check_targets(input);
    const ForwardCache cache = run_forward(p, input.x);
    const std::size_t steps = input.steps();
    const auto hidden = static_cast<std::size_t>(p.hidden_dim);
    const auto in_dim = static_cast<std::size_t>(p.input_dim);

    double n_defined = 0.0;
    for (std::size_t t = 0; t < steps; ++t) {
        n_defined += input.defined[t] ? 1.0 : 0.0;
    }

    LstmGradients out;
    out.wrt = LstmParams::zeros(p.input_dim, p.hidden_dim);

    std::vector<double> dh(hidden, 0.0), dc(hidden, 0.0);
    std::vector<double> da_f(hidden), da_i(hidden), da_g(hidden), da_o(hidden);
    std::vector<double> z(in_dim + hidden);
    for (std::size_t t = steps; t-- > 0;) {
        // Loss term at t.
        double dlogits[3] = {0.0, 0.0, 0.0};
        if (input.defined[t]) {
            const int cls = label_to_class(input.targets[t]);
            for (int k = 0; k < 3; ++k) {
                dlogits[k] = (cache.probs(k, t) - (k == cls ? 1.0 : 0.0)) / n_defined;
            }
            out.loss -= std::log(std::max(cache.probs(cls, t), 1e-300)) / n_defined;
        }
        for (int k = 0; k < 3; ++k) {
            out.wrt.b_readout[k] += dlogits[k];
            for (std::size_t u = 0; u < hidden; ++u) {
                out.wrt.w_readout(k, u) += dlogits[k] * cache.h(u, t);
            }
        }
        for (std::size_t u = 0; u < hidden; ++u) {
            double acc = dh[u];
            for (int k = 0; k < 3; ++k) {
                acc += p.w_readout(k, u) * dlogits[k];
            }
            dh[u] = acc;
        }

        for (std::size_t d = 0; d < in_dim; ++d) {
            z[d] = input.x(d, t);
        }
        for (std::size_t u = 0; u < hidden; ++u) {
            z[in_dim + u] = (t > 0) ? cache.h(u, t - 1) : 0.0;
        }

        for (std::size_t u = 0; u < hidden; ++u) {
            const double f = cache.f(u, t), i = cache.i(u, t), g = cache.g(u, t),
                         o = cache.o(u, t), tc = cache.tanh_c(u, t);
            const double c_prev = (t > 0) ? cache.c(u, t - 1) : 0.0;
            const double d_o = dh[u] * tc;
            const double d_c = dc[u] + dh[u] * o * (1.0 - tc * tc);
            const double d_f = d_c * c_prev;
            const double d_i = d_c * g;
            const double d_g = d_c * i;
            da_f[u] = d_f * f * (1.0 - f);
            da_i[u] = d_i * i * (1.0 - i);
            da_g[u] = d_g * (1.0 - g * g);
            da_o[u] = d_o * o * (1.0 - o);
            dc[u] = d_c * f;  // flows to c_{t-1}
        }

        for (std::size_t u = 0; u < hidden; ++u) {
            kernels::axpy(da_f[u], z, out.wrt.w_forget.row(u));
            kernels::axpy(da_i[u], z, out.wrt.w_input.row(u));
            kernels::axpy(da_g[u], z, out.wrt.w_cand.row(u));
            kernels::axpy(da_o[u], z, out.wrt.w_output.row(u));
            out.wrt.b_forget[u] += da_f[u];
            out.wrt.b_input[u] += da_i[u];
            out.wrt.b_cand[u] += da_g[u];
            out.wrt.b_output[u] += da_o[u];
        }

        // dh for the previous step: gate weight columns covering the h part.
        std::fill(dh.begin(), dh.end(), 0.0);
        if (t > 0) {
            for (std::size_t u = 0; u < hidden; ++u) {
                const double af = da_f[u], ai = da_i[u], ag = da_g[u], ao = da_o[u];
                const auto fr = p.w_forget.row(u), ir = p.w_input.row(u),
                           gr = p.w_cand.row(u), orow = p.w_output.row(u);
                for (std::size_t v = 0; v < hidden; ++v) {
                    dh[v] += af * fr[in_dim + v] + ai * ir[in_dim + v] +
                             ag * gr[in_dim + v] + ao * orow[in_dim + v];
                }
            }
        }
    }
    return out;
}

namespace {

double grad_norm(const LstmParams& g) {
    double acc = 0.0;
    for (const Matrix* m : {&g.w_forget, &g.w_input, &g.w_cand, &g.w_output,
                            &g.w_readout}) {
        acc += kernels::dot(m->data(), m->data());
    }
    for (const auto* b : {&g.b_forget, &g.b_input, &g.b_cand, &g.b_output,
                          &g.b_readout}) {
        acc += kernels::dot(*b, *b);
    }
    return std::sqrt(acc);
}

void apply_update(LstmParams& p, const LstmParams& g, double step) {
    kernels::axpy(step, g.w_forget.data(), p.w_forget.data());
    kernels::axpy(step, g.w_input.data(), p.w_input.data());
    kernels::axpy(step, g.w_cand.data(), p.w_cand.data());
    kernels::axpy(step, g.w_output.data(), p.w_output.data());
    kernels::axpy(step, g.w_readout.data(), p.w_readout.data());
    kernels::axpy(step, g.b_forget, p.b_forget);
    kernels::axpy(step, g.b_input, p.b_input);
    kernels::axpy(step, g.b_cand, p.b_cand);
    kernels::axpy(step, g.b_output, p.b_output);
    kernels::axpy(step, g.b_readout, p.b_readout);
}

double masked_loss(const LstmParams& p, const StackedInput& input) {
    const Matrix probs = lstm_forward(p, input.x);
    double loss = 0.0;
    double n = 0.0;
    for (std::size_t t = 0; t < input.steps(); ++t) {
        if (!input.defined[t]) {
            continue;
        }
        loss -= std::log(std::max(probs(label_to_class(input.targets[t]), t), 1e-300));
        n += 1.0;
    }
    return loss / n;
}

}  // namespace

FitResult fit_lstm(const StackedInput& input, const FitHyper& hyper) {
    check_targets(input);
    if (hyper.epochs < 1 || hyper.hidden_dim < 1 || !(hyper.learning_rate > 0.0)) {
        fail(ErrorCode::invalid_argument, "invalid LSTM hyperparameters");
    }

    std::mt19937_64 rng(hyper.seed);
    LstmParams params = LstmParams::zeros(static_cast<int>(input.x.rows()),
                                          hyper.hidden_dim);
    const double gate_scale = 1.0 / std::sqrt(static_cast<double>(
                                  params.input_dim + params.hidden_dim));
    const double read_scale = 1.0 / std::sqrt(static_cast<double>(params.hidden_dim));
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (Matrix* m : {&params.w_forget, &params.w_input, &params.w_cand,
                      &params.w_output}) {
        for (double& v : m->data()) {
            v = gate_scale * unit(rng);
        }
    }
    for (double& v : params.w_readout.data()) {
        v = read_scale * unit(rng);
    }

    FitResult result;
    result.params = params;
    double best_loss = std::numeric_limits<double>::infinity();

    for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
        LstmGradients grads = lstm_gradients(params, input);
        if (grads.loss < best_loss) {
            best_loss = grads.loss;
            result.params = params;
        }
        result.best_loss_trace.push_back(best_loss);

        double step = -hyper.learning_rate;
        const double norm = grad_norm(grads.wrt);
        if (hyper.clip_norm > 0.0 && norm > hyper.clip_norm) {
            step *= hyper.clip_norm / norm;
        }
        apply_update(params, grads.wrt, step);
    }
    const double final_loss = masked_loss(params, input);
    if (final_loss < best_loss) {
        best_loss = final_loss;
        result.params = params;
    }
    result.best_loss_trace.push_back(best_loss);

    result.train_accuracy = evaluate(result.params, input).accuracy;
    return result;
}

Evaluation evaluate(const LstmParams& params, const StackedInput& input) {
    check_targets(input);
    const Matrix probs = lstm_forward(params, input.x);
    Evaluation out;
    std::int64_t correct = 0, total = 0;
    for (std::size_t t = 0; t < input.steps(); ++t) {
        if (!input.defined[t]) {
            continue;
        }
        int pred = 0;
        for (int k = 1; k < 3; ++k) {
            if (probs(k, t) > probs(pred, t)) {
                pred = k;
            }
        }
        const int truth = label_to_class(input.targets[t]);
        out.confusion[truth][pred] += 1;
        correct += (pred == truth) ? 1 : 0;
        total += 1;
    }
    out.accuracy = static_cast<double>(correct) / static_cast<double>(total);
    return out;
}

}  // namespace regimehmm::lstm
