#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "regimehmm/hmm.hpp"
#include "regimehmm/labeling.hpp"
#include "regimehmm/matrix.hpp"

namespace regimehmm::lstm {

// Single-layer LSTM with a 3-class softmax readout. Gate matrices act on the
// concatenation [x_t; h_{t-1}].
struct LstmParams {
    int input_dim = 0;
    int hidden_dim = 0;
    Matrix w_forget, w_input, w_cand, w_output;  // hidden x (input + hidden)
    std::vector<double> b_forget, b_input, b_cand, b_output;
    Matrix w_readout;               // 3 x hidden
    std::vector<double> b_readout;  // 3

    static LstmParams zeros(int input_dim, int hidden_dim);
    void validate() const;
};

// Row-stacked state posteriors plus per-bar targets. Targets use the label
// alphabet {-1, 0, +1}; bars without a defined label are masked out.
struct StackedInput {
    Matrix x;  // (K*N) x T
    std::vector<int> targets;
    std::vector<std::uint8_t> defined;

    std::size_t steps() const noexcept { return x.cols(); }
};

StackedInput stack_state_probas(std::span<const hmm::PosteriorMatrix> posteriors);

void attach_targets(StackedInput& input, const labeling::LabelSeries& labels,
                    std::size_t offset = 0);

// 3 x T class probabilities; c_0 = h_0 = 0.
Matrix lstm_forward(const LstmParams& params, const Matrix& x);

// Gradients of the mean cross-entropy over defined bars, by full BPTT.
struct LstmGradients {
    LstmParams wrt;  // same shapes as the parameters
    double loss = 0.0;
};

LstmGradients lstm_gradients(const LstmParams& params, const StackedInput& input);

struct FitHyper {
    int epochs = 300;
    double learning_rate = 0.05;
    int hidden_dim = 16;
    double clip_norm = 5.0;
    std::uint64_t seed = 0;
};

struct FitResult {
    LstmParams params;  // best-loss iterate
    double train_accuracy = 0.0;
    std::vector<double> best_loss_trace;  // running best, non-increasing
};

FitResult fit_lstm(const StackedInput& input, const FitHyper& hyper);

struct Evaluation {
    double accuracy = 0.0;
    // confusion[true][predicted], classes ordered -1, 0, +1
    std::array<std::array<std::int64_t, 3>, 3> confusion{};
};

Evaluation evaluate(const LstmParams& params, const StackedInput& input);

inline int label_to_class(int label) { return label + 1; }
inline int class_to_label(int cls) { return cls - 1; }

}  // namespace regimehmm::lstm
