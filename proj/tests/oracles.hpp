// Test-only reference implementations, kept independent of the library's
// tape and op kernels: everything here computes with plain loops over raw
// doubles so the main code path has something honest to disagree with.
#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "promptstream/pattern.hpp"
#include "promptstream/tensor.hpp"

namespace oracles {

using promptstream::Shape;
using promptstream::Tensor;

// Builds a scalar graph from the given leaf tensors.
using GraphBuilder = std::function<Tensor(const std::vector<Tensor>&)>;

inline double relative_error(double a, double b) {
    return std::fabs(a - b) / std::max({1.0, std::fabs(a), std::fabs(b)});
}

// Central finite differences against reverse-mode gradients. Returns the
// worst relative error over every element of every input.
inline double max_gradient_error(const GraphBuilder& build, std::vector<Tensor> inputs,
                                 double h = 1e-5) {
    Tensor root = build(inputs);
    root.backward();

    double worst = 0.0;
    for (Tensor& input : inputs) {
        const std::vector<double> ad_grad = input.grad();
        std::vector<double>& values = input.mutable_data();
        for (size_t i = 0; i < values.size(); ++i) {
            const double saved = values[i];
            double plus, minus;
            {
                promptstream::NoGradGuard no_grad;
                values[i] = saved + h;
                plus = build(inputs).value();
                values[i] = saved - h;
                minus = build(inputs).value();
                values[i] = saved;
            }
            const double fd = (plus - minus) / (2.0 * h);
            worst = std::max(worst, relative_error(ad_grad[i], fd));
        }
    }
    return worst;
}

inline Tensor random_tensor(Shape shape, std::mt19937_64& rng, bool requires_grad = true,
                            double lo = -1.5, double hi = 1.5) {
    std::uniform_real_distribution<double> dist(lo, hi);
    std::vector<double> values(promptstream::shape_numel(shape));
    for (double& v : values) v = dist(rng);
    return Tensor::from_data(std::move(shape), std::move(values), requires_grad);
}

// Fixed random weights turn any op output into a scalar with non-uniform
// upstream gradients.
inline Tensor scalarize(const Tensor& out, std::mt19937_64& rng) {
    Tensor weights = random_tensor(out.shape(), rng, /*requires_grad=*/false);
    return promptstream::ops::sum_all(promptstream::ops::elementwise_mul(out, weights));
}

// ---------------------------------------------------------------------------
// Contrastive-loss oracle: plain-double reimplementation of the task-aware
// prompt construction, cosine similarity and the pair loss.

struct PlainPool {
    int length = 0, dim = 0;
    std::vector<double> ms;  // [3 * length * dim]
    std::vector<double> key_missing, key_available;  // [dim]
    bool invert_key_roles = false;
};

inline std::vector<double> plain_task_embedding(const PlainPool& pool, int task_id) {
    const promptstream::MissingPattern p = promptstream::pattern_from_task_id(task_id);
    // Sum over modalities of (key gated prompt), then mean over rows.
    std::vector<double> z(pool.dim, 0.0);
    for (int m = 0; m < 3; ++m) {
        const bool missing = m == 0 ? p.audio_missing : m == 1 ? p.video_missing : p.text_missing;
        const bool use_missing = pool.invert_key_roles ? !missing : missing;
        const std::vector<double>& key = use_missing ? pool.key_missing : pool.key_available;
        for (int r = 0; r < pool.length; ++r) {
            for (int c = 0; c < pool.dim; ++c) {
                z[c] += key[c] * pool.ms[(m * pool.length + r) * pool.dim + c];
            }
        }
    }
    for (double& v : z) v /= static_cast<double>(pool.length);
    return z;
}

inline double plain_cosine(const std::vector<double>& u, const std::vector<double>& v) {
    double dot = 0, nu = 0, nv = 0;
    for (size_t i = 0; i < u.size(); ++i) {
        dot += u[i] * v[i];
        nu += u[i] * u[i];
        nv += v[i] * v[i];
    }
    return dot / (std::sqrt(nu) * std::sqrt(nv));
}

struct PlainContrastiveConfig {
    double tau = 0.5;
    double lambda2 = 1.0;
    bool exclude_complete_task = true;
    bool standard_ntxent = false;
};

inline double plain_pair_loss(const std::vector<std::vector<double>>& z, int i, int j,
                              const PlainContrastiveConfig& cfg) {
    // z is indexed by task id - 1 over all 7 tasks.
    const double pos = std::exp(plain_cosine(z[i - 1], z[j - 1]) / cfg.tau);
    double denom = 0.0;
    for (int t = 1; t <= 7; ++t) {
        if (t == i) continue;
        if (t == j && !cfg.standard_ntxent) continue;
        if (t == 1 && cfg.exclude_complete_task) continue;
        denom += std::exp(plain_cosine(z[i - 1], z[t - 1]) / cfg.tau);
    }
    return -std::log(pos / denom);
}

inline double plain_contrastive(const PlainPool& pool, const PlainContrastiveConfig& cfg) {
    std::vector<std::vector<double>> z;
    for (int t = 1; t <= 7; ++t) z.push_back(plain_task_embedding(pool, t));
    return plain_pair_loss(z, 2, 4, cfg) + cfg.lambda2 * plain_pair_loss(z, 5, 7, cfg);
}

// ---------------------------------------------------------------------------
// Metrics oracle: double-loop AA / FM over a dense matrix a[i][j]
// (1-based tasks packed into 0-based vectors, j >= i).

inline double plain_average_accuracy(const std::vector<std::vector<double>>& a, int n) {
    double s = 0;
    for (int i = 1; i <= n; ++i) s += a[i - 1][n - i];
    return s / n;
}

inline double plain_forgetting(const std::vector<std::vector<double>>& a, int n) {
    double total = 0;
    for (int i = 1; i <= n - 1; ++i) {
        double best = -1e300;
        for (int j = i; j <= n - 1; ++j) best = std::max(best, a[i - 1][j - i]);
        total += best - a[i - 1][n - i];
    }
    return total / (n - 1);
}

// ---------------------------------------------------------------------------
// Softmax-regression oracle for calibrating generator difficulty: plain
// gradient descent on flattened features.

struct LogisticOracle {
    int num_classes = 0;
    int dim = 0;
    std::vector<double> w;  // [num_classes * (dim + 1)], last column bias

    void fit(const std::vector<std::vector<double>>& x, const std::vector<int>& y, int classes,
             int epochs = 200, double lr = 0.05) {
        num_classes = classes;
        dim = static_cast<int>(x[0].size());
        w.assign(static_cast<size_t>(num_classes) * (dim + 1), 0.0);
        std::vector<double> logits(num_classes), probs(num_classes);
        std::vector<double> grad(w.size());
        for (int e = 0; e < epochs; ++e) {
            std::fill(grad.begin(), grad.end(), 0.0);
            for (size_t k = 0; k < x.size(); ++k) {
                predict(x[k], logits);
                double mx = logits[0];
                for (double v : logits) mx = std::max(mx, v);
                double z = 0;
                for (int c = 0; c < num_classes; ++c) {
                    probs[c] = std::exp(logits[c] - mx);
                    z += probs[c];
                }
                for (int c = 0; c < num_classes; ++c) {
                    const double delta = probs[c] / z - (c == y[k] ? 1.0 : 0.0);
                    for (int d = 0; d < dim; ++d) grad[c * (dim + 1) + d] += delta * x[k][d];
                    grad[c * (dim + 1) + dim] += delta;
                }
            }
            for (size_t i = 0; i < w.size(); ++i) w[i] -= lr * grad[i] / static_cast<double>(x.size());
        }
    }

    void predict(const std::vector<double>& x, std::vector<double>& logits) const {
        for (int c = 0; c < num_classes; ++c) {
            double s = w[c * (dim + 1) + dim];
            for (int d = 0; d < dim; ++d) s += w[c * (dim + 1) + d] * x[d];
            logits[c] = s;
        }
    }

    double accuracy(const std::vector<std::vector<double>>& x, const std::vector<int>& y) const {
        std::vector<double> logits(num_classes);
        int correct = 0;
        for (size_t k = 0; k < x.size(); ++k) {
            predict(x[k], logits);
            int arg = 0;
            for (int c = 1; c < num_classes; ++c) {
                if (logits[c] > logits[arg]) arg = c;
            }
            if (arg == y[k]) ++correct;
        }
        return static_cast<double>(correct) / static_cast<double>(x.size());
    }
};

}  // namespace oracles
