#pragma once

#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "caud/dataset.hpp"
#include "caud/nn.hpp"
#include "caud/rng.hpp"

namespace caud {

struct CpaEpochEntry {
    std::size_t epoch;
    double train_bce_nats;
    double train_accuracy;
    double seconds;
};

struct CpaModel {
    MlpNetwork net;
    TrainConfig config;
    std::vector<CpaEpochEntry> trace;
};

struct GameResult {
    std::size_t trials = 0;
    std::size_t correct = 0;
    double accuracy = 0.0;
    // confusion[actual][guess]
    std::array<std::array<std::size_t, 2>, 2> confusion{{{0, 0}, {0, 0}}};
};

enum class Verdict { broken, secure_consistent };

inline const char* verdict_name(Verdict v) {
    return v == Verdict::broken ? "BROKEN" : "SECURE-CONSISTENT";
}

// Guess rule shared by training accuracy and the game: b' = 1 iff the model
// output exceeds the threshold; an exact tie guesses 0.
inline int classify(double prediction, double threshold = 0.5) {
    return prediction > threshold ? 1 : 0;
}

// Supervised BCE training on (ciphertext -> label); the plaintext side never
// reaches the adversary. Same shuffle/batch/SGD regime as the MI estimator.
inline CpaModel train_classifier(const SampleSet& train_set, const TrainConfig& cfg) {
    cfg.validate(train_set.rows());
    const std::size_t batches = train_set.rows() / cfg.batch_size;
    if (batches == 0) throw UsageError("train_classifier: batch size exceeds training rows");

    CpaModel model;
    model.config = cfg;
    model.net = make_network(train_set.ciphertext_bits, cfg.hidden_layers, cfg.hidden_width,
                             OutputActivation::sigmoid, cfg.seed);
    ForwardCache cache;
    Matrix inputs;
    std::vector<double> labels(cfg.batch_size);
    const auto start = std::chrono::steady_clock::now();

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng shuffle_rng(derive_seed(cfg.seed, stream_tag::epoch_shuffle, epoch));
        std::vector<std::size_t> order = random_permutation(train_set.rows(), shuffle_rng);
        double bce_sum = 0.0;
        std::size_t correct = 0;
        for (std::size_t b = 0; b < batches; ++b) {
            const std::size_t lo = b * cfg.batch_size, hi = lo + cfg.batch_size;
            if (inputs.rows() != cfg.batch_size || inputs.cols() != train_set.ciphertext_bits)
                inputs = Matrix(cfg.batch_size, train_set.ciphertext_bits);
            train_set.ciphertexts.unpack_indexed(order, lo, hi, inputs, 0);
            for (std::size_t i = lo; i < hi; ++i)
                labels[i - lo] = static_cast<double>(train_set.labels[order[i]]);
            std::vector<double> predictions = forward(model.net, inputs, cache);
            double bce = bce_objective(predictions, labels);
            if (!std::isfinite(bce))
                throw NumericError("train_classifier: non-finite loss at epoch " +
                                   std::to_string(epoch) + " batch " + std::to_string(b));
            for (std::size_t i = 0; i < predictions.size(); ++i)
                if (classify(predictions[i]) == static_cast<int>(labels[i])) ++correct;
            GradientBuffer grads = backward_bce(model.net, cache, predictions, labels);
            sgd_step(model.net, grads, cfg.learning_rate);
            bce_sum += bce;
        }
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        model.trace.push_back({epoch, bce_sum / static_cast<double>(batches),
                               static_cast<double>(correct) /
                                   static_cast<double>(batches * cfg.batch_size),
                               seconds});
    }
    return model;
}

// Plays the guessing game over every test challenge and aggregates accuracy
// and the confusion counts.
inline GameResult run_game(const CpaModel& model, const SampleSet& test_set,
                           double threshold = 0.5) {
    if (model.net.input_width() != test_set.ciphertext_bits)
        throw UsageError("run_game: ciphertext width does not match the model input");
    GameResult result;
    result.trials = test_set.rows();
    std::vector<std::size_t> order(test_set.rows());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    // Chunked evaluation keeps peak memory flat for wide ciphertexts.
    const std::size_t chunk = 4096;
    Matrix inputs;
    for (std::size_t lo = 0; lo < test_set.rows(); lo += chunk) {
        const std::size_t hi = std::min(test_set.rows(), lo + chunk);
        if (inputs.rows() != hi - lo || inputs.cols() != test_set.ciphertext_bits)
            inputs = Matrix(hi - lo, test_set.ciphertext_bits);
        test_set.ciphertexts.unpack_indexed(order, lo, hi, inputs, 0);
        std::vector<double> predictions = forward(model.net, inputs);
        for (std::size_t i = 0; i < predictions.size(); ++i) {
            int guess = classify(predictions[i], threshold);
            int actual = test_set.labels[lo + i];
            result.confusion[static_cast<std::size_t>(actual)]
                            [static_cast<std::size_t>(guess)]++;
            if (guess == actual) ++result.correct;
        }
    }
    result.accuracy =
        static_cast<double>(result.correct) / static_cast<double>(result.trials);
    return result;
}

// Statistical surrogate for negligible advantage: BROKEN iff accuracy beats
// coin flipping by more than four binomial standard errors. An audit signal,
// not a security proof.
inline Verdict verdict(const GameResult& result) {
    if (result.trials < 1000)
        throw UsageError("verdict: needs at least 1000 trials");
    const double se = std::sqrt(0.25 / static_cast<double>(result.trials));
    return result.accuracy > 0.5 + 4.0 * se ? Verdict::broken : Verdict::secure_consistent;
}

} // namespace caud
