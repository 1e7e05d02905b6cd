#include "promptstream/losses.hpp"

#include <cmath>

#include "promptstream/errors.hpp"

namespace promptstream {

void ContrastiveConfig::validate() const {
    if (tau <= 0) throw ConfigError("contrastive config: tau must be > 0");
    if (lambda1 < 0 || lambda2 < 0) throw ConfigError("contrastive config: lambdas must be >= 0");
}

TaskEmbeddings task_embeddings(const PromptPool& pool) {
    TaskEmbeddings out;
    for (int t = 1; t <= kNumTasks; ++t) {
        out[t] = ops::mean(pool.task_aware_prompt(pattern_from_task_id(t)), 0);
    }
    return out;
}

Tensor cosine_sim(const Tensor& u, const Tensor& v) {
    if (u.rank() != 1 || v.rank() != 1 || u.shape() != v.shape()) {
        throw DimensionError("cosine_sim: expected equal-length vectors, got " +
                             shape_to_string(u.shape()) + " and " + shape_to_string(v.shape()));
    }
    auto norm_sq_value = [](const Tensor& t) {
        double s = 0.0;
        for (double x : t.data()) s += x * x;
        return s;
    };
    if (norm_sq_value(u) == 0.0 || norm_sq_value(v) == 0.0) {
        throw DomainError("cosine_sim: zero vector");
    }
    Tensor dot = ops::sum_all(ops::elementwise_mul(u, v));
    Tensor nsq_u = ops::sum_all(ops::elementwise_mul(u, u));
    Tensor nsq_v = ops::sum_all(ops::elementwise_mul(v, v));
    // 1 / (||u|| ||v||) = exp(-(log|u|^2 + log|v|^2) / 2)
    Tensor inv_norms = ops::exp(ops::scale(ops::add(ops::log(nsq_u), ops::log(nsq_v)), -0.5));
    return ops::elementwise_mul(dot, inv_norms);
}

Tensor nt_xent_pair(const TaskEmbeddings& embeddings, int i, int j, const ContrastiveConfig& cfg) {
    cfg.validate();
    if (i == j) throw ContractError("nt_xent_pair: i and j must differ");
    auto zi = embeddings.find(i);
    auto zj = embeddings.find(j);
    if (zi == embeddings.end() || zj == embeddings.end()) {
        throw ContractError("nt_xent_pair: embeddings missing task " +
                            std::to_string(zi == embeddings.end() ? i : j));
    }
    Tensor pos = ops::scale(cosine_sim(zi->second, zj->second), 1.0 / cfg.tau);

    Tensor denom;
    int negatives = 0;
    for (const auto& [t, z] : embeddings) {
        if (t == i) continue;
        if (t == j && !cfg.standard_ntxent) continue;
        if (t == 1 && cfg.exclude_complete_task) continue;
        Tensor term = ops::exp(ops::scale(cosine_sim(zi->second, z), 1.0 / cfg.tau));
        denom = denom.defined() ? ops::add(denom, term) : term;
        ++negatives;
    }
    if (negatives < 1) throw ConfigError("nt_xent_pair: denominator has no terms");
    return ops::sub(ops::log(denom), pos);
}

Tensor contrastive_loss(const TaskEmbeddings& embeddings, const ContrastiveConfig& cfg) {
    for (int t : {2, 4, 5, 7}) {
        if (!embeddings.count(t)) {
            throw ContractError("contrastive_loss: embeddings missing task " + std::to_string(t));
        }
    }
    Tensor swap_with_video = nt_xent_pair(embeddings, 2, 4, cfg);
    Tensor swap_without_video = nt_xent_pair(embeddings, 5, 7, cfg);
    return ops::add(swap_with_video, ops::scale(swap_without_video, cfg.lambda2));
}

Tensor task_loss(const Tensor& pred, double target, TaskLossKind kind) {
    switch (kind) {
        case TaskLossKind::kCrossEntropy: {
            const int label = static_cast<int>(target);
            if (static_cast<double>(label) != target) {
                throw DomainError("task_loss: non-integer class label " + std::to_string(target));
            }
            return ops::cross_entropy_with_logits(pred, label);
        }
        case TaskLossKind::kL1Regression: {
            if (pred.numel() != 1) {
                throw DimensionError("task_loss: L1 expects a single-output prediction, got " +
                                     shape_to_string(pred.shape()));
            }
            Tensor flat = pred.rank() == 0 ? pred : ops::reshape(pred, {});
            return ops::abs(ops::sub(flat, Tensor::scalar(target)));
        }
    }
    throw ContractError("task_loss: bad kind");
}

Tensor total_loss(const Tensor& task_term, const Tensor& contrastive_term,
                  const ContrastiveConfig& cfg) {
    return ops::add(task_term, ops::scale(contrastive_term, cfg.lambda1));
}

}  // namespace promptstream
