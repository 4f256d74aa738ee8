#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "caud/dataset.hpp"
#include "caud/nn.hpp"
#include "caud/rng.hpp"

namespace caud {

// Joint pairs are row-wise concatenations (x_i, y_i); marginal pairs shuffle
// the y side through one uniform in-batch permutation (fixed points
// allowed). Batch size 1 forces the identity permutation.
inline std::pair<Matrix, Matrix> pair_batches(const Matrix& x_batch, const Matrix& y_batch,
                                              Rng& rng) {
    if (x_batch.rows() != y_batch.rows())
        throw UsageError("pair_batches: row counts disagree");
    const std::size_t n = x_batch.rows();
    const std::size_t xw = x_batch.cols(), yw = y_batch.cols();
    std::vector<std::size_t> perm = random_permutation(n, rng);
    Matrix joint(n, xw + yw), marginal(n, xw + yw);
    for (std::size_t i = 0; i < n; ++i) {
        const double* xr = x_batch.row(i);
        double* jr = joint.row(i);
        double* mr = marginal.row(i);
        for (std::size_t c = 0; c < xw; ++c) {
            jr[c] = xr[c];
            mr[c] = xr[c];
        }
        const double* yj = y_batch.row(i);
        const double* ym = y_batch.row(perm[i]);
        for (std::size_t c = 0; c < yw; ++c) {
            jr[xw + c] = yj[c];
            mr[xw + c] = ym[c];
        }
    }
    return {std::move(joint), std::move(marginal)};
}

struct MiEpochEntry {
    std::size_t epoch;
    double train_mi_nats;          // batch-mean unstabilized DV estimate
    double stabilized_objective;   // batch-mean of mi - coeff * lme^2
    double seconds;                // wall time since training start
};

struct MiTrainingTrace {
    std::vector<MiEpochEntry> epochs;
    double best_train_mi = 0.0;
    double last_train_mi = 0.0;
};

struct MiResult {
    double test_mi_nats = 0.0;
    MiTrainingTrace trace;
    TrainConfig config;
    std::string dataset_fingerprint;
};

namespace detail {

// Batch inputs as {0.0, 1.0} reals: plaintext bits then ciphertext bits.
inline void unpack_xy(const SampleSet& set, const std::vector<std::size_t>& order,
                      std::size_t lo, std::size_t hi, Matrix& x, Matrix& y) {
    const std::size_t n = hi - lo;
    if (x.rows() != n || x.cols() != set.plaintext_bits) x = Matrix(n, set.plaintext_bits);
    if (y.rows() != n || y.cols() != set.ciphertext_bits) y = Matrix(n, set.ciphertext_bits);
    set.plaintexts.unpack_indexed(order, lo, hi, x, 0);
    set.ciphertexts.unpack_indexed(order, lo, hi, y, 0);
}

inline std::vector<std::size_t> identity_order(std::size_t n) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    return order;
}

} // namespace detail

struct MineRun {
    MlpNetwork net;
    MiTrainingTrace trace;
};

// Algorithm: per epoch, shuffle, split into full batches (short tail
// dropped), pair joint/marginal, score with the critic, descend on the
// stabilized DV loss. The critic input width is plaintext_bits +
// ciphertext_bits. Training curves on near-deterministic pairs oscillate
// late (rare high-score marginal pairs dominate the log-mean-exp gradient);
// the trace keeps both the best and the final epoch estimates.
inline MineRun train_mi(const SampleSet& train_set, const TrainConfig& cfg) {
    cfg.validate(train_set.rows());
    const std::size_t batches = train_set.rows() / cfg.batch_size;
    if (batches == 0) throw UsageError("train_mi: batch size exceeds training rows");

    MineRun run;
    run.net = make_network(train_set.plaintext_bits + train_set.ciphertext_bits,
                           cfg.hidden_layers, cfg.hidden_width, OutputActivation::linear,
                           cfg.seed);
    ForwardCache joint_cache, marginal_cache;
    Matrix x, y;
    const auto start = std::chrono::steady_clock::now();

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng shuffle_rng(derive_seed(cfg.seed, stream_tag::epoch_shuffle, epoch));
        std::vector<std::size_t> order = random_permutation(train_set.rows(), shuffle_rng);
        double mi_sum = 0.0, stab_sum = 0.0;
        for (std::size_t b = 0; b < batches; ++b) {
            const std::size_t lo = b * cfg.batch_size, hi = lo + cfg.batch_size;
            detail::unpack_xy(train_set, order, lo, hi, x, y);
            Rng pair_rng(derive_seed(cfg.seed, stream_tag::marginal_perm,
                                     epoch * batches + b));
            auto [joint, marginal] = pair_batches(x, y, pair_rng);
            std::vector<double> joint_scores = forward(run.net, joint, joint_cache);
            std::vector<double> marginal_scores = forward(run.net, marginal, marginal_cache);
            DvValue dv = dv_objective(joint_scores, marginal_scores, cfg.stabilizer_coeff);
            if (!std::isfinite(dv.training_loss))
                throw NumericError("train_mi: non-finite loss at epoch " +
                                   std::to_string(epoch) + " batch " + std::to_string(b));
            GradientBuffer grads = backward_dv(run.net, joint_cache, marginal_cache,
                                               joint_scores, marginal_scores,
                                               cfg.stabilizer_coeff);
            sgd_step(run.net, grads, cfg.learning_rate);
            mi_sum += dv.mi_estimate;
            stab_sum += -dv.training_loss;
        }
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const double epoch_mi = mi_sum / static_cast<double>(batches);
        run.trace.epochs.push_back(
            {epoch, epoch_mi, stab_sum / static_cast<double>(batches), seconds});
        if (epoch == 0 || epoch_mi > run.trace.best_train_mi)
            run.trace.best_train_mi = epoch_mi;
    }
    run.trace.last_train_mi = run.trace.epochs.back().train_mi_nats;
    return run;
}

// Unstabilized DV estimate over the full set with seeded marginal
// permutations; `repeats` > 1 averages fresh permutations.
inline double evaluate_mi(const MlpNetwork& net, const SampleSet& test_set,
                          std::uint64_t seed, std::size_t repeats = 1) {
    if (net.input_width() != test_set.plaintext_bits + test_set.ciphertext_bits)
        throw UsageError("evaluate_mi: dataset widths do not match the critic input");
    if (repeats < 1) throw UsageError("evaluate_mi: repeats must be >= 1");
    std::vector<std::size_t> order = detail::identity_order(test_set.rows());
    Matrix x, y;
    detail::unpack_xy(test_set, order, 0, test_set.rows(), x, y);
    double total = 0.0;
    for (std::size_t r = 0; r < repeats; ++r) {
        Rng rng(derive_seed(seed, stream_tag::eval_marginal, r));
        auto [joint, marginal] = pair_batches(x, y, rng);
        std::vector<double> js = forward(net, joint);
        std::vector<double> ms = forward(net, marginal);
        total += dv_objective(js, ms, 0.0).mi_estimate;
    }
    return total / static_cast<double>(repeats);
}

} // namespace caud
