#include "promptstream/metrics.hpp"

#include <algorithm>

#include "promptstream/errors.hpp"

namespace promptstream {

AccuracyMatrix::AccuracyMatrix(int num_tasks) : num_tasks_(num_tasks) {
    if (num_tasks < 1) throw ContractError("accuracy matrix: need at least one task");
    cells_.resize(static_cast<size_t>(num_tasks) * (num_tasks + 1) / 2);
}

size_t AccuracyMatrix::index(int task, int after_task) const {
    if (task < 1 || after_task < task || after_task > num_tasks_) {
        throw ContractError("accuracy matrix: cell (" + std::to_string(task) + "," +
                            std::to_string(after_task) + ") outside lower triangle of T=" +
                            std::to_string(num_tasks_));
    }
    // Column-major packing of the triangle: column j holds j cells.
    const size_t j = after_task;
    return j * (j - 1) / 2 + (task - 1);
}

void AccuracyMatrix::set(int task, int after_task, double accuracy) {
    if (accuracy < 0.0 || accuracy > 1.0) {
        throw ContractError("accuracy matrix: value " + std::to_string(accuracy) + " outside [0,1]");
    }
    cells_[index(task, after_task)] = accuracy;
}

double AccuracyMatrix::get(int task, int after_task) const {
    const auto& cell = cells_[index(task, after_task)];
    if (!cell) {
        throw ContractError("accuracy matrix: cell (" + std::to_string(task) + "," +
                            std::to_string(after_task) + ") not populated");
    }
    return *cell;
}

bool AccuracyMatrix::has(int task, int after_task) const {
    return cells_[index(task, after_task)].has_value();
}

int AccuracyMatrix::populated_count() const {
    return static_cast<int>(std::count_if(cells_.begin(), cells_.end(),
                                          [](const auto& c) { return c.has_value(); }));
}

double accuracy(const std::vector<std::vector<double>>& preds, const std::vector<double>& labels,
                TaskLossKind kind, double threshold) {
    if (preds.empty() || preds.size() != labels.size()) {
        throw DomainError("accuracy: need equal nonzero prediction and label counts");
    }
    int correct = 0;
    for (size_t k = 0; k < preds.size(); ++k) {
        if (kind == TaskLossKind::kCrossEntropy) {
            const auto& logits = preds[k];
            const size_t arg =
                std::distance(logits.begin(), std::max_element(logits.begin(), logits.end()));
            if (static_cast<double>(arg) == labels[k]) ++correct;
        } else {
            const bool pred_pos = preds[k].at(0) >= threshold;
            const bool label_pos = labels[k] >= threshold;
            if (pred_pos == label_pos) ++correct;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(preds.size());
}

double average_accuracy(const AccuracyMatrix& mat, int n) {
    double sum = 0.0;
    for (int i = 1; i <= n; ++i) sum += mat.get(i, n);
    return sum / static_cast<double>(n);
}

std::optional<double> forgetting_measure(const AccuracyMatrix& mat, int n) {
    if (n < 2) return std::nullopt;
    double total = 0.0;
    for (int i = 1; i <= n - 1; ++i) {
        double peak_drop = mat.get(i, i) - mat.get(i, n);
        for (int j = i + 1; j <= n - 1; ++j) {
            peak_drop = std::max(peak_drop, mat.get(i, j) - mat.get(i, n));
        }
        total += peak_drop;
    }
    return total / static_cast<double>(n - 1);
}

}  // namespace promptstream
