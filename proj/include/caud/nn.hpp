#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "caud/errors.hpp"
#include "caud/matrix.hpp"
#include "caud/rng.hpp"

namespace caud {

enum class OutputActivation : std::uint8_t { linear = 0, sigmoid = 1 };

// Feed-forward rectifier network with a single scalar output. Hidden layers
// are ReLU; the output is linear for the MI critic and sigmoid for the
// IND-CPA classifier.
struct MlpNetwork {
    std::vector<std::size_t> layer_dims;   // input width, hidden widths..., 1
    std::vector<Matrix> weights;           // layer l: dims[l+1] x dims[l]
    std::vector<std::vector<double>> biases;
    OutputActivation output_activation = OutputActivation::linear;

    std::size_t input_width() const { return layer_dims.front(); }
    std::size_t layer_count() const { return weights.size(); }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (std::size_t l = 0; l < weights.size(); ++l)
            n += weights[l].rows() * weights[l].cols() + biases[l].size();
        return n;
    }
};

struct TrainConfig {
    std::size_t epochs = 200;
    std::size_t batch_size = 2000;
    double learning_rate = 0.05;
    std::size_t hidden_layers = 2;
    std::size_t hidden_width = 100;
    std::uint64_t seed = 1;
    double stabilizer_coeff = 0.1;

    void validate(std::size_t train_rows) const {
        if (epochs < 1) throw UsageError("TrainConfig: epochs must be >= 1");
        if (batch_size < 1 || batch_size > train_rows)
            throw UsageError("TrainConfig: batch_size must be in [1, train rows]");
        if (!(learning_rate > 0.0)) throw UsageError("TrainConfig: learning_rate must be > 0");
        if (stabilizer_coeff < 0.0) throw UsageError("TrainConfig: stabilizer_coeff must be >= 0");
    }
};

// Per-layer parameter gradients, shapes mirroring the owning network.
struct GradientBuffer {
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> biases;

    static GradientBuffer zeros_like(const MlpNetwork& net) {
        GradientBuffer g;
        g.weights.reserve(net.weights.size());
        g.biases.reserve(net.biases.size());
        for (std::size_t l = 0; l < net.weights.size(); ++l) {
            g.weights.emplace_back(net.weights[l].rows(), net.weights[l].cols());
            g.biases.emplace_back(net.biases[l].size(), 0.0);
        }
        return g;
    }
};

// Weight init: uniform in +/- sqrt(6 / fan_in), biases zero. Draw order is
// layer by layer, row-major, so a seed pins the full parameter vector.
inline MlpNetwork make_network(std::size_t input_width, std::size_t hidden_layers,
                               std::size_t hidden_width, OutputActivation out_act,
                               std::uint64_t seed) {
    if (input_width == 0) throw ConfigError("make_network: input width must be positive");
    if (hidden_layers > 0 && hidden_width == 0)
        throw ConfigError("make_network: hidden width must be positive");
    MlpNetwork net;
    net.output_activation = out_act;
    net.layer_dims.push_back(input_width);
    for (std::size_t h = 0; h < hidden_layers; ++h) net.layer_dims.push_back(hidden_width);
    net.layer_dims.push_back(1);

    Rng rng(derive_seed(seed, stream_tag::weight_init));
    for (std::size_t l = 0; l + 1 < net.layer_dims.size(); ++l) {
        std::size_t fan_in = net.layer_dims[l];
        std::size_t fan_out = net.layer_dims[l + 1];
        double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
        Matrix w(fan_out, fan_in);
        for (double& v : w.data()) v = (2.0 * rng.next_double() - 1.0) * bound;
        net.weights.push_back(std::move(w));
        net.biases.emplace_back(fan_out, 0.0);
    }
    return net;
}

// Sigmoid with the argument clamped so outputs stay strictly inside (0,1)
// in double precision.
inline double sigmoid(double z) {
    if (z > 36.0) z = 36.0;
    if (z < -36.0) z = -36.0;
    return 1.0 / (1.0 + std::exp(-z));
}

// Activations of every layer for one batch; a[0] is the input, a[L] the
// n x 1 output column. Reused across steps to avoid reallocation.
struct ForwardCache {
    std::vector<Matrix> a;
    Matrix wt_scratch;
};

namespace detail {

inline void affine_forward(const Matrix& input, const Matrix& w,
                           const std::vector<double>& bias, Matrix& wt, Matrix& out) {
    // z = input * W^T, computed against a transposed copy so the inner loop
    // is a streaming accumulation.
    if (wt.rows() != w.cols() || wt.cols() != w.rows()) wt = Matrix(w.cols(), w.rows());
    for (std::size_t i = 0; i < w.rows(); ++i)
        for (std::size_t j = 0; j < w.cols(); ++j) wt(j, i) = w(i, j);
    matmul(input, wt, out);
    for (std::size_t i = 0; i < out.rows(); ++i) {
        double* r = out.row(i);
        for (std::size_t j = 0; j < out.cols(); ++j) r[j] += bias[j];
    }
}

inline void check_finite(const Matrix& m, std::size_t layer, const char* what) {
    if (!m.all_finite())
        throw NumericError(std::string(what) + " non-finite at layer " + std::to_string(layer));
}

} // namespace detail

// Forward pass over a batch; returns one score per row and fills `cache`
// for a subsequent backward call.
inline std::vector<double> forward(const MlpNetwork& net, const Matrix& batch,
                                   ForwardCache& cache) {
    if (batch.cols() != net.input_width())
        throw ConfigError("forward: batch width " + std::to_string(batch.cols()) +
                          " does not match network input " + std::to_string(net.input_width()));
    const std::size_t layers = net.layer_count();
    cache.a.resize(layers + 1);
    cache.a[0] = batch;
    for (std::size_t l = 0; l < layers; ++l) {
        detail::affine_forward(cache.a[l], net.weights[l], net.biases[l], cache.wt_scratch,
                               cache.a[l + 1]);
        Matrix& z = cache.a[l + 1];
        if (l + 1 < layers) {
            for (double& v : z.data()) v = v > 0.0 ? v : 0.0;
        } else if (net.output_activation == OutputActivation::sigmoid) {
            for (double& v : z.data()) v = sigmoid(v);
        }
        detail::check_finite(z, l, "activation");
    }
    const Matrix& out = cache.a[layers];
    std::vector<double> scores(out.rows());
    for (std::size_t i = 0; i < out.rows(); ++i) scores[i] = out(i, 0);
    return scores;
}

inline std::vector<double> forward(const MlpNetwork& net, const Matrix& batch) {
    ForwardCache cache;
    return forward(net, batch, cache);
}

struct DvValue {
    double mi_estimate;    // unstabilized Donsker-Varadhan value, nats
    double training_loss;  // negated stabilized objective (minimize this)
    double log_mean_exp;   // stable log-mean-exp of the marginal scores
};

// DV lower-bound objective. mi = mean(joint) - log(mean(exp(marginal)));
// the stabilizer penalizes (log-mean-exp)^2 during training only.
inline DvValue dv_objective(const std::vector<double>& joint_scores,
                            const std::vector<double>& marginal_scores,
                            double stabilizer_coeff) {
    if (joint_scores.empty() || marginal_scores.empty())
        throw UsageError("dv_objective: empty score vector");
    double joint_mean = 0.0;
    for (double s : joint_scores) joint_mean += s;
    joint_mean /= static_cast<double>(joint_scores.size());

    double max_m = marginal_scores[0];
    for (double s : marginal_scores) max_m = std::max(max_m, s);
    double sum_exp = 0.0;
    for (double s : marginal_scores) sum_exp += std::exp(s - max_m);
    double lme = max_m + std::log(sum_exp / static_cast<double>(marginal_scores.size()));

    DvValue v;
    v.mi_estimate = joint_mean - lme;
    v.log_mean_exp = lme;
    v.training_loss = -(v.mi_estimate - stabilizer_coeff * lme * lme);
    return v;
}

// Mean binary cross-entropy in nats, predictions clamped to [eps, 1-eps].
inline double bce_objective(const std::vector<double>& predictions,
                            const std::vector<double>& labels) {
    if (predictions.size() != labels.size())
        throw UsageError("bce_objective: length mismatch");
    if (predictions.empty()) throw UsageError("bce_objective: empty input");
    constexpr double eps = 1e-12;
    double total = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        double p = std::clamp(predictions[i], eps, 1.0 - eps);
        total -= labels[i] * std::log(p) + (1.0 - labels[i]) * std::log(1.0 - p);
    }
    return total / static_cast<double>(predictions.size());
}

namespace detail {

// Backpropagates d(loss)/d(output column) through the cached activations,
// accumulating parameter gradients. `dout` holds derivatives with respect to
// the output pre-activation (linear scores or sigmoid logits).
inline void backprop_from_output(const MlpNetwork& net, const ForwardCache& cache,
                                 Matrix& delta, GradientBuffer& grads) {
    const std::size_t layers = net.layer_count();
    Matrix delta_prev;
    for (std::size_t l = layers; l-- > 0;) {
        matmul_at_b(delta, cache.a[l], grads.weights[l], /*accumulate=*/true);
        std::vector<double>& db = grads.biases[l];
        for (std::size_t j = 0; j < db.size(); ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < delta.rows(); ++i) s += delta(i, j);
            db[j] += s;
        }
        if (l == 0) break;
        matmul(delta, net.weights[l], delta_prev);
        // ReLU mask: the cached activation is zero exactly where the
        // pre-activation was clipped.
        const Matrix& act = cache.a[l];
        for (std::size_t i = 0; i < delta_prev.rows(); ++i) {
            double* dr = delta_prev.row(i);
            const double* ar = act.row(i);
            for (std::size_t j = 0; j < delta_prev.cols(); ++j)
                if (ar[j] <= 0.0) dr[j] = 0.0;
        }
        std::swap(delta, delta_prev);
    }
}

} // namespace detail

// Gradients of the stabilized DV training loss with respect to every
// parameter, given cached forward passes over the joint and marginal batches.
inline GradientBuffer backward_dv(const MlpNetwork& net, const ForwardCache& joint_cache,
                                  const ForwardCache& marginal_cache,
                                  const std::vector<double>& joint_scores,
                                  const std::vector<double>& marginal_scores,
                                  double stabilizer_coeff) {
    DvValue v = dv_objective(joint_scores, marginal_scores, stabilizer_coeff);
    GradientBuffer grads = GradientBuffer::zeros_like(net);

    // d(loss)/d(joint score) = -1/n_joint.
    Matrix djoint(joint_scores.size(), 1);
    const double inv_nj = 1.0 / static_cast<double>(joint_scores.size());
    for (std::size_t i = 0; i < joint_scores.size(); ++i) djoint(i, 0) = -inv_nj;
    detail::backprop_from_output(net, joint_cache, djoint, grads);

    // d(loss)/d(marginal score) = (1 + 2*coeff*lme) * softmax(marginal)_i.
    double max_m = marginal_scores[0];
    for (double s : marginal_scores) max_m = std::max(max_m, s);
    double sum_exp = 0.0;
    for (double s : marginal_scores) sum_exp += std::exp(s - max_m);
    const double scale = 1.0 + 2.0 * stabilizer_coeff * v.log_mean_exp;
    Matrix dmarg(marginal_scores.size(), 1);
    for (std::size_t i = 0; i < marginal_scores.size(); ++i)
        dmarg(i, 0) = scale * std::exp(marginal_scores[i] - max_m) / sum_exp;
    detail::backprop_from_output(net, marginal_cache, dmarg, grads);

    for (std::size_t l = 0; l < grads.weights.size(); ++l) {
        if (!grads.weights[l].all_finite())
            throw NumericError("backward_dv: non-finite weight gradient at layer " +
                               std::to_string(l));
    }
    return grads;
}

// Gradients of the mean BCE loss for a sigmoid-output network.
inline GradientBuffer backward_bce(const MlpNetwork& net, const ForwardCache& cache,
                                   const std::vector<double>& predictions,
                                   const std::vector<double>& labels) {
    if (net.output_activation != OutputActivation::sigmoid)
        throw UsageError("backward_bce: network must have a sigmoid output");
    if (predictions.size() != labels.size())
        throw UsageError("backward_bce: length mismatch");
    GradientBuffer grads = GradientBuffer::zeros_like(net);
    Matrix dz(predictions.size(), 1);
    const double inv_n = 1.0 / static_cast<double>(predictions.size());
    for (std::size_t i = 0; i < predictions.size(); ++i)
        dz(i, 0) = (predictions[i] - labels[i]) * inv_n;
    detail::backprop_from_output(net, cache, dz, grads);
    for (std::size_t l = 0; l < grads.weights.size(); ++l) {
        if (!grads.weights[l].all_finite())
            throw NumericError("backward_bce: non-finite weight gradient at layer " +
                               std::to_string(l));
    }
    return grads;
}

// Plain SGD, no momentum: p <- p - lr * g.
inline void sgd_step(MlpNetwork& net, const GradientBuffer& grads, double learning_rate) {
    if (grads.weights.size() != net.weights.size())
        throw UsageError("sgd_step: gradient layer count mismatch");
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        if (!net.weights[l].same_shape(grads.weights[l]) ||
            net.biases[l].size() != grads.biases[l].size())
            throw UsageError("sgd_step: shape mismatch at layer " + std::to_string(l));
        double* w = net.weights[l].data().data();
        const double* g = grads.weights[l].data().data();
        const std::size_t nw = net.weights[l].data().size();
        for (std::size_t i = 0; i < nw; ++i) w[i] -= learning_rate * g[i];
        for (std::size_t i = 0; i < net.biases[l].size(); ++i)
            net.biases[l][i] -= learning_rate * grads.biases[l][i];
    }
}

// ---------------------------------------------------------------------------
// Network snapshot file: magic "CAUD", version u32, output activation u8,
// layer count u32, layer dims u32 each, then per layer the row-major
// little-endian float64 weights followed by biases.

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>(v >> (8 * i));
    os.write(b, 4);
}

inline std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw FormatError("snapshot: truncated u32");
    return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
           static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
}

inline void put_f64(std::ostream& os, double v) {
    std::uint64_t u;
    std::memcpy(&u, &v, 8);
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>(u >> (8 * i));
    os.write(b, 8);
}

inline double get_f64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    if (!is) throw FormatError("snapshot: truncated f64");
    std::uint64_t u = 0;
    for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    double v;
    std::memcpy(&v, &u, 8);
    return v;
}

} // namespace detail

inline constexpr std::uint32_t kSnapshotVersion = 1;

inline void save_network(const MlpNetwork& net, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw FormatError("save_network: cannot open " + path);
    os.write("CAUD", 4);
    detail::put_u32(os, kSnapshotVersion);
    os.put(static_cast<char>(net.output_activation));
    detail::put_u32(os, static_cast<std::uint32_t>(net.layer_dims.size()));
    for (std::size_t d : net.layer_dims) detail::put_u32(os, static_cast<std::uint32_t>(d));
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        for (double v : net.weights[l].data()) detail::put_f64(os, v);
        for (double v : net.biases[l]) detail::put_f64(os, v);
    }
    if (!os) throw FormatError("save_network: write failed for " + path);
}

inline MlpNetwork load_network(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError("load_network: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "CAUD", 4) != 0)
        throw FormatError("load_network: bad magic");
    std::uint32_t version = detail::get_u32(is);
    if (version != kSnapshotVersion)
        throw FormatError("load_network: unsupported version " + std::to_string(version));
    int act = is.get();
    if (act != 0 && act != 1) throw FormatError("load_network: bad activation tag");
    MlpNetwork net;
    net.output_activation = static_cast<OutputActivation>(act);
    std::uint32_t ndims = detail::get_u32(is);
    if (ndims < 2) throw FormatError("load_network: needs at least 2 layer dims");
    for (std::uint32_t i = 0; i < ndims; ++i) net.layer_dims.push_back(detail::get_u32(is));
    if (net.layer_dims.back() != 1) throw FormatError("load_network: output width must be 1");
    for (std::size_t l = 0; l + 1 < net.layer_dims.size(); ++l) {
        Matrix w(net.layer_dims[l + 1], net.layer_dims[l]);
        for (double& v : w.data()) v = detail::get_f64(is);
        std::vector<double> b(net.layer_dims[l + 1]);
        for (double& v : b) v = detail::get_f64(is);
        net.weights.push_back(std::move(w));
        net.biases.push_back(std::move(b));
    }
    return net;
}

} // namespace caud
