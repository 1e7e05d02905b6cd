#pragma once

#include <optional>
#include <vector>

#include "promptstream/backbone.hpp"

namespace promptstream {

// Lower-triangular accuracy matrix: cell (i, j) holds the accuracy on task i
// after training through task j, defined for 1 <= i <= j <= T.
class AccuracyMatrix {
  public:
    AccuracyMatrix() = default;
    explicit AccuracyMatrix(int num_tasks);

    int num_tasks() const { return num_tasks_; }
    void set(int task, int after_task, double accuracy);
    double get(int task, int after_task) const;
    bool has(int task, int after_task) const;
    int populated_count() const;

  private:
    int num_tasks_ = 0;
    std::vector<std::optional<double>> cells_;
    size_t index(int task, int after_task) const;
};

// Classification: exact-match rate of argmax logits. Regression: agreement
// of prediction and label sides of the threshold, zero counted non-negative.
double accuracy(const std::vector<std::vector<double>>& preds, const std::vector<double>& labels,
                TaskLossKind kind, double threshold = 0.0);

// Mean of column n: (1/n) sum_i a_{i,n}.
double average_accuracy(const AccuracyMatrix& mat, int n);

// (1/(n-1)) sum_{i<n} max_{j in [i, n-1]} (a_{i,j} - a_{i,n}); negative
// values indicate backward transfer. Empty for n < 2.
std::optional<double> forgetting_measure(const AccuracyMatrix& mat, int n);

}  // namespace promptstream
