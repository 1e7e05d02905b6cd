#pragma once

#include <map>

#include "promptstream/backbone.hpp"
#include "promptstream/prompts.hpp"
#include "promptstream/tensor.hpp"

namespace promptstream {

struct ContrastiveConfig {
    double tau = 0.5;      // temperature
    double lambda1 = 0.1;  // weight of the contrastive term in the total loss
    double lambda2 = 1.0;  // weight of the second positive pair
    bool exclude_complete_task = true;  // drop task 1 from the denominator
    bool standard_ntxent = false;       // keep the positive term in the denominator

    void validate() const;
};

// task id -> d-vector, the sequence-mean of that task's task-aware prompt.
using TaskEmbeddings = std::map<int, Tensor>;

TaskEmbeddings task_embeddings(const PromptPool& pool);

// u.v / (||u|| ||v||); throws DomainError on a zero vector.
Tensor cosine_sim(const Tensor& u, const Tensor& v);

// Softmax-style pair loss anchored at i:
//   -log( exp(sim(z_i,z_j)/tau) / sum_t exp(sim(z_i,z_t)/tau) )
// where the denominator skips t=i, skips t=j unless standard_ntxent, and
// skips the complete task when exclude_complete_task. Asymmetric in (i,j).
Tensor nt_xent_pair(const TaskEmbeddings& embeddings, int i, int j, const ContrastiveConfig& cfg);

// Pair loss over the audio<->text swap pairs: (2,4) with video available
// and (5,7) with video missing, the second weighted by lambda2.
Tensor contrastive_loss(const TaskEmbeddings& embeddings, const ContrastiveConfig& cfg);

// Single-sample task loss. Cross entropy takes rank-1 logits and an integer
// class label; L1 takes a single-output prediction and a real target.
Tensor task_loss(const Tensor& pred, double target, TaskLossKind kind);

// task + lambda1 * contrastive.
Tensor total_loss(const Tensor& task_term, const Tensor& contrastive_term,
                  const ContrastiveConfig& cfg);

}  // namespace promptstream
