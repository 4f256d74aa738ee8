#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <unordered_map>
#include <vector>

#include "caud/cipher.hpp"
#include "caud/errors.hpp"
#include "caud/nn.hpp"

namespace caud::oracle {

// Ground-truth computations on small discrete distributions, independent of
// the learned estimators they validate. All values are in nats.

inline void check_distribution(const std::vector<double>& p, double tol = 1e-9) {
    double sum = 0.0;
    for (double v : p) {
        if (v < 0.0) throw UsageError("distribution has a negative entry");
        sum += v;
    }
    if (std::abs(sum - 1.0) > tol)
        throw UsageError("distribution does not sum to 1 (sum = " + std::to_string(sum) + ")");
}

inline double exact_entropy(const std::vector<double>& p) {
    check_distribution(p);
    double h = 0.0;
    for (double v : p)
        if (v > 0.0) h -= v * std::log(v);
    return h;
}

// Joint distribution over |X| x |Y| cells, row = x, column = y.
struct JointTable {
    Matrix probabilities;

    void validate(double tol = 1e-12) const {
        double sum = 0.0;
        for (double v : probabilities.data()) {
            if (v < 0.0) throw UsageError("JointTable: negative probability");
            sum += v;
        }
        if (std::abs(sum - 1.0) > tol)
            throw UsageError("JointTable: probabilities sum to " + std::to_string(sum));
    }

    std::vector<double> marginal_x() const {
        std::vector<double> px(probabilities.rows(), 0.0);
        for (std::size_t i = 0; i < probabilities.rows(); ++i)
            for (std::size_t j = 0; j < probabilities.cols(); ++j) px[i] += probabilities(i, j);
        return px;
    }

    std::vector<double> marginal_y() const {
        std::vector<double> py(probabilities.cols(), 0.0);
        for (std::size_t i = 0; i < probabilities.rows(); ++i)
            for (std::size_t j = 0; j < probabilities.cols(); ++j) py[j] += probabilities(i, j);
        return py;
    }
};

// I(X;Y) = sum p(x,y) log[ p(x,y) / (p(x) p(y)) ].
inline double exact_mi(const JointTable& joint) {
    joint.validate(1e-9);
    std::vector<double> px = joint.marginal_x();
    std::vector<double> py = joint.marginal_y();
    double mi = 0.0;
    for (std::size_t i = 0; i < joint.probabilities.rows(); ++i)
        for (std::size_t j = 0; j < joint.probabilities.cols(); ++j) {
            double p = joint.probabilities(i, j);
            if (p > 0.0) mi += p * std::log(p / (px[i] * py[j]));
        }
    return mi;
}

// H(p1, p2) = -sum p1(x) log p2(x). Reports +infinity when p2 misses mass
// that p1 carries.
inline double cross_entropy(const std::vector<double>& p1, const std::vector<double>& p2) {
    if (p1.size() != p2.size()) throw UsageError("cross_entropy: support size mismatch");
    check_distribution(p1);
    check_distribution(p2);
    double h = 0.0;
    for (std::size_t i = 0; i < p1.size(); ++i) {
        if (p1[i] <= 0.0) continue;
        if (p2[i] <= 0.0) return std::numeric_limits<double>::infinity();
        h -= p1[i] * std::log(p2[i]);
    }
    return h;
}

enum class LossKind { dv, bce };

// Scalar training loss of a network on a fixed batch, used both analytically
// (via the backward_* routines) and numerically (finite differences below).
struct LossProbe {
    LossKind kind;
    Matrix joint_batch;             // dv: joint pairs; bce: inputs
    Matrix marginal_batch;          // dv only
    std::vector<double> labels;     // bce only
    double stabilizer_coeff = 0.1;

    double operator()(const MlpNetwork& net) const {
        ForwardCache cache;
        if (kind == LossKind::dv) {
            std::vector<double> js = forward(net, joint_batch, cache);
            std::vector<double> ms = forward(net, marginal_batch, cache);
            return dv_objective(js, ms, stabilizer_coeff).training_loss;
        }
        std::vector<double> p = forward(net, joint_batch, cache);
        return bce_objective(p, labels);
    }

    GradientBuffer analytic_gradient(const MlpNetwork& net) const {
        if (kind == LossKind::dv) {
            ForwardCache jc, mc;
            std::vector<double> js = forward(net, joint_batch, jc);
            std::vector<double> ms = forward(net, marginal_batch, mc);
            return backward_dv(net, jc, mc, js, ms, stabilizer_coeff);
        }
        ForwardCache cache;
        std::vector<double> p = forward(net, joint_batch, cache);
        return backward_bce(net, cache, p, labels);
    }
};

// Central finite differences per parameter against the analytic gradient.
// Returns the maximum relative error, denominator max(|a|, |n|, 1e-8).
inline double finite_diff_check(const MlpNetwork& net, const LossProbe& probe, double eps) {
    if (eps < 1e-6 || eps > 1e-3)
        throw UsageError("finite_diff_check: eps outside [1e-6, 1e-3]");
    GradientBuffer analytic = probe.analytic_gradient(net);
    MlpNetwork work = net;
    double max_rel = 0.0;

    auto probe_param = [&](double& slot, double analytic_g) {
        const double saved = slot;
        slot = saved + eps;
        double up = probe(work);
        slot = saved - eps;
        double down = probe(work);
        slot = saved;
        double numeric = (up - down) / (2.0 * eps);
        double denom = std::max({std::abs(analytic_g), std::abs(numeric), 1e-8});
        max_rel = std::max(max_rel, std::abs(analytic_g - numeric) / denom);
    };

    for (std::size_t l = 0; l < work.layer_count(); ++l) {
        auto& w = work.weights[l].data();
        for (std::size_t i = 0; i < w.size(); ++i)
            probe_param(w[i], analytic.weights[l].data()[i]);
        for (std::size_t i = 0; i < work.biases[l].size(); ++i)
            probe_param(work.biases[l][i], analytic.biases[l][i]);
    }
    return max_rel;
}

// Exact joint distribution of (plaintext, ciphertext) for a scheme given as
// a pure map of (message, randomness) with uniform priors on both. Message
// and randomness spaces are capped at 12 bits each, so the enumeration stays
// within 2^24 evaluations.
inline JointTable enumerate_joint(
    const std::function<std::uint64_t(std::uint64_t m, std::uint64_t r)>& encrypt,
    std::size_t plaintext_bits, std::size_t randomness_bits) {
    if (plaintext_bits == 0 || plaintext_bits > 12)
        throw UsageError("enumerate_joint: plaintext_bits must be in [1, 12]");
    if (randomness_bits > 12)
        throw UsageError("enumerate_joint: randomness_bits must be <= 12");
    const std::uint64_t nm = 1ULL << plaintext_bits;
    const std::uint64_t nr = 1ULL << randomness_bits;

    std::unordered_map<std::uint64_t, std::size_t> ct_column;
    std::vector<std::vector<double>> rows(nm);
    for (std::uint64_t m = 0; m < nm; ++m) {
        for (std::uint64_t r = 0; r < nr; ++r) {
            std::uint64_t c = encrypt(m, r);
            auto [it, fresh] = ct_column.try_emplace(c, ct_column.size());
            std::size_t col = it->second;
            if (fresh)
                for (auto& row : rows) row.resize(ct_column.size(), 0.0);
            if (rows[m].size() <= col) rows[m].resize(ct_column.size(), 0.0);
            rows[m][col] += 1.0;
        }
    }
    JointTable joint;
    joint.probabilities = Matrix(nm, ct_column.size());
    const double cell = 1.0 / (static_cast<double>(nm) * static_cast<double>(nr));
    for (std::uint64_t m = 0; m < nm; ++m)
        for (std::size_t c = 0; c < rows[m].size(); ++c)
            joint.probabilities(m, c) = rows[m][c] * cell;
    joint.validate(1e-9);
    return joint;
}

// Exact joint for a keyed deterministic scheme at small plaintext widths;
// schemes with per-sample randomness go through the map form above with
// their randomness enumerated explicitly.
inline JointTable enumerate_scheme_joint(const CipherScheme& scheme,
                                         std::size_t plaintext_bits) {
    if (!scheme.deterministic())
        throw UsageError("enumerate_scheme_joint: scheme must be deterministic");
    if (plaintext_bits != scheme.plaintext_bits())
        throw UsageError("enumerate_scheme_joint: width disagrees with the scheme");
    if (scheme.ciphertext_bits() > 64)
        throw UsageError("enumerate_scheme_joint: ciphertext too wide to enumerate");
    auto encrypt = [&scheme, plaintext_bits](std::uint64_t m, std::uint64_t) {
        Bytes pt(bytes_for_bits(plaintext_bits), 0);
        for (std::size_t b = 0; b < pt.size(); ++b)
            pt[b] = static_cast<std::uint8_t>(m >> (8 * b));
        Bytes ct = scheme.encrypt(pt, 0);
        std::uint64_t packed = 0;
        for (std::size_t b = 0; b < ct.size(); ++b)
            packed |= static_cast<std::uint64_t>(ct[b]) << (8 * b);
        return packed;
    };
    return enumerate_joint(encrypt, plaintext_bits, 0);
}

} // namespace caud::oracle
