// Shared per-op finite-difference harness, used by the unit tests and the
// acceptance suite. Every registered op kind gets random small-tensor trials
// with its inputs conditioned to stay inside the op's smooth domain.
#pragma once

#include <string>
#include <vector>

#include "oracles.hpp"
#include "promptstream/tensor.hpp"

namespace op_checks {

using namespace promptstream;
using oracles::max_gradient_error;
using oracles::random_tensor;
using oracles::scalarize;

struct OpGradReport {
    std::string op;
    double worst_error = 0.0;
};

inline std::vector<OpGradReport> run_op_gradient_checks(int trials, uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto ext = [&rng](int lo = 1, int hi = 5) {
        return std::uniform_int_distribution<int>(lo, hi)(rng);
    };
    std::vector<OpGradReport> reports;

    auto run = [&](const std::string& name, auto&& make_trial) {
        OpGradReport rep{name, 0.0};
        for (int t = 0; t < trials; ++t) {
            rep.worst_error = std::max(rep.worst_error, make_trial());
        }
        reports.push_back(rep);
    };

    run("matmul", [&] {
        const int m = ext(), k = ext(), n = ext();
        auto a = random_tensor({m, k}, rng);
        auto b = random_tensor({k, n}, rng);
        auto w = random_tensor({m, n}, rng, false);
        return max_gradient_error(
            [&](const std::vector<Tensor>& in) {
                return ops::sum_all(ops::elementwise_mul(ops::matmul(in[0], in[1]), w));
            },
            {a, b});
    });

    run("add", [&] {
        const int r = ext(), c = ext();
        auto a = random_tensor({r, c}, rng);
        auto b = random_tensor({r, c}, rng);
        auto w = random_tensor({r, c}, rng, false);
        return max_gradient_error(
            [&](const std::vector<Tensor>& in) {
                return ops::sum_all(ops::elementwise_mul(ops::add(in[0], in[1]), w));
            },
            {a, b});
    });

    run("add_row_broadcast", [&] {
        const int r = ext(), c = ext();
        auto a = random_tensor({r, c}, rng);
        auto b = random_tensor({c}, rng);
        auto w = random_tensor({r, c}, rng, false);
        return max_gradient_error(
            [&](const std::vector<Tensor>& in) {
                return ops::sum_all(ops::elementwise_mul(ops::add(in[0], in[1]), w));
            },
            {a, b});
    });

    run("sub", [&] {
        const int r = ext(), c = ext();
        auto a = random_tensor({r, c}, rng);
        auto b = random_tensor({r, c}, rng);
        auto w = random_tensor({r, c}, rng, false);
        return max_gradient_error(
            [&](const std::vector<Tensor>& in) {
                return ops::sum_all(ops::elementwise_mul(ops::sub(in[0], in[1]), w));
            },
            {a, b});
    });

    run("elementwise_mul", [&] {
        const int r = ext(), c = ext();
        auto a = random_tensor({r, c}, rng);
        auto b = random_tensor({r, c}, rng);
        auto w = random_tensor({r, c}, rng, false);
        return max_gradient_error(
            [&](const std::vector<Tensor>& in) {
                return ops::sum_all(ops::elementwise_mul(ops::elementwise_mul(in[0], in[1]), w));
            },
            {a, b});
    });

    run("broadcast_mul_vector", [&] {
        const int r = ext(), d = ext();
        auto v = random_tensor({d}, rng);
        auto m = random_tensor({r, d}, rng);
        auto w = random_tensor({r, d}, rng, false);
        return max_gradient_error(
            [&](const std::vector<Tensor>& in) {
                return ops::sum_all(ops::elementwise_mul(ops::broadcast_mul_vector(in[0], in[1]), w));
            },
            {v, m});
    });

    run("concat", [&] {
        const int axis = ext(0, 1);
        const int shared = ext(), e1 = ext(), e2 = ext();
        Shape s1 = axis == 0 ? Shape{e1, shared} : Shape{shared, e1};
        Shape s2 = axis == 0 ? Shape{e2, shared} : Shape{shared, e2};
        Shape so = axis == 0 ? Shape{e1 + e2, shared} : Shape{shared, e1 + e2};
        auto a = random_tensor(s1, rng);
        auto b = random_tensor(s2, rng);
        auto w = random_tensor(so, rng, false);
        return max_gradient_error(
            [&, axis](const std::vector<Tensor>& in) {
                return ops::sum_all(ops::elementwise_mul(ops::concat({in[0], in[1]}, axis), w));
            },
            {a, b});
    });

    run("sum_axis", [&] {
        const int r = ext(), c = ext();
        const int axis = ext(0, 1);
        auto a = random_tensor({r, c}, rng);
        auto w = random_tensor({axis == 0 ? c : r}, rng, false);
        return max_gradient_error(
            [&, axis](const std::vector<Tensor>& in) {
                return ops::sum_all(ops::elementwise_mul(ops::sum(in[0], axis), w));
            },
            {a});
    });

    run("mean_axis", [&] {
        const int r = ext(), c = ext();
        const int axis = ext(0, 1);
        auto a = random_tensor({r, c}, rng);
        auto w = random_tensor({axis == 0 ? c : r}, rng, false);
        return max_gradient_error(
            [&, axis](const std::vector<Tensor>& in) {
                return ops::sum_all(ops::elementwise_mul(ops::mean(in[0], axis), w));
            },
            {a});
    });

    run("mean_all", [&] {
        auto a = random_tensor({ext(), ext()}, rng);
        return max_gradient_error(
            [](const std::vector<Tensor>& in) { return ops::mean_all(in[0]); }, {a});
    });

    run("softmax", [&] {
        const int r = ext(), c = ext();
        auto a = random_tensor({r, c}, rng);
        auto w = random_tensor({r, c}, rng, false);
        return max_gradient_error(
            [&](const std::vector<Tensor>& in) {
                return ops::sum_all(ops::elementwise_mul(ops::softmax(in[0]), w));
            },
            {a});
    });

    run("layer_norm", [&] {
        // Rows need real spread: near-constant rows make 1/sigma huge and the
        // central-difference truncation term dominates the comparison.
        const int r = ext(), c = ext(2, 5);
        auto a = random_tensor({r, c}, rng);
        auto& values = a.mutable_data();
        for (int row = 0; row < r; ++row) {
            double mu = 0, var = 0;
            for (int j = 0; j < c; ++j) mu += values[row * c + j];
            mu /= c;
            for (int j = 0; j < c; ++j) {
                var += (values[row * c + j] - mu) * (values[row * c + j] - mu);
            }
            var /= c;
            if (var < 1e-6) {
                for (int j = 0; j < c; ++j) values[row * c + j] += 0.7 * j;
                var = 1.0;
            }
            while (var < 0.3) {
                for (int j = 0; j < c; ++j) values[row * c + j] *= 2.0;
                var *= 4.0;
            }
        }
        auto w = random_tensor({r, c}, rng, false);
        return max_gradient_error(
            [&](const std::vector<Tensor>& in) {
                return ops::sum_all(ops::elementwise_mul(ops::layer_norm(in[0]), w));
            },
            {a});
    });

    run("gelu", [&] {
        auto a = random_tensor({ext(), ext()}, rng);
        auto w = random_tensor(a.shape(), rng, false);
        return max_gradient_error(
            [&](const std::vector<Tensor>& in) {
                return ops::sum_all(ops::elementwise_mul(ops::gelu(in[0]), w));
            },
            {a});
    });

    run("scale", [&] {
        auto a = random_tensor({ext(), ext()}, rng);
        auto w = random_tensor(a.shape(), rng, false);
        const double c = std::uniform_real_distribution<double>(-2.0, 2.0)(rng);
        return max_gradient_error(
            [&, c](const std::vector<Tensor>& in) {
                return ops::sum_all(ops::elementwise_mul(ops::scale(in[0], c), w));
            },
            {a});
    });

    run("transpose", [&] {
        const int r = ext(), c = ext();
        auto a = random_tensor({r, c}, rng);
        auto w = random_tensor({c, r}, rng, false);
        return max_gradient_error(
            [&](const std::vector<Tensor>& in) {
                return ops::sum_all(ops::elementwise_mul(ops::transpose(in[0]), w));
            },
            {a});
    });

    run("slice", [&] {
        const int r = ext(2, 5), c = ext();
        const int begin = ext(0, r - 1);
        const int end = ext(begin + 1, r);
        auto a = random_tensor({r, c}, rng);
        auto w = random_tensor({end - begin, c}, rng, false);
        return max_gradient_error(
            [&, begin, end](const std::vector<Tensor>& in) {
                return ops::sum_all(ops::elementwise_mul(ops::slice(in[0], 0, begin, end), w));
            },
            {a});
    });

    run("log", [&] {
        auto a = random_tensor({ext(), ext()}, rng, true, 0.5, 2.0);
        auto w = random_tensor(a.shape(), rng, false);
        return max_gradient_error(
            [&](const std::vector<Tensor>& in) {
                return ops::sum_all(ops::elementwise_mul(ops::log(in[0]), w));
            },
            {a});
    });

    run("exp", [&] {
        auto a = random_tensor({ext(), ext()}, rng);
        auto w = random_tensor(a.shape(), rng, false);
        return max_gradient_error(
            [&](const std::vector<Tensor>& in) {
                return ops::sum_all(ops::elementwise_mul(ops::exp(in[0]), w));
            },
            {a});
    });

    run("abs", [&] {
        // Keep inputs away from the kink so central differences are valid.
        const int r = ext(), c = ext();
        auto a = random_tensor({r, c}, rng);
        for (double& v : a.mutable_data()) v = (v >= 0 ? 1.0 : -1.0) * (std::fabs(v) + 0.2);
        auto w = random_tensor({r, c}, rng, false);
        return max_gradient_error(
            [&](const std::vector<Tensor>& in) {
                return ops::sum_all(ops::elementwise_mul(ops::abs(in[0]), w));
            },
            {a});
    });

    run("reshape", [&] {
        const int r = ext(), c = ext();
        auto a = random_tensor({r, c}, rng);
        auto w = random_tensor({c * r}, rng, false);
        return max_gradient_error(
            [&, r, c](const std::vector<Tensor>& in) {
                return ops::sum_all(ops::elementwise_mul(ops::reshape(in[0], {r * c}), w));
            },
            {a});
    });

    run("cross_entropy_with_logits", [&] {
        const int classes = ext(2, 5);
        const int label = ext(0, classes - 1);
        auto a = random_tensor({classes}, rng);
        const double w0 = std::uniform_real_distribution<double>(0.5, 2.0)(rng);
        return max_gradient_error(
            [&, label, w0](const std::vector<Tensor>& in) {
                return ops::scale(ops::cross_entropy_with_logits(in[0], label), w0);
            },
            {a});
    });

    return reports;
}

}  // namespace op_checks
