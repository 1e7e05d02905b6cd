#pragma once

#include <cstdint>
#include <deque>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "promptstream/tensor.hpp"

namespace promptstream {

// Single RNG stream per run; all randomness flows through one of these so
// identical seeds reproduce identical runs byte for byte.
using Rng = std::mt19937_64;

// A named leaf tensor. `trainable` mirrors the tensor's requires_grad flag;
// frozen parameters never receive optimizer updates and record no tape.
struct Parameter {
    std::string id;
    Tensor tensor;
    bool trainable = true;
};

class ParameterSet {
  public:
    Parameter& add(const std::string& id, Tensor tensor, bool trainable = true);
    Parameter* find(const std::string& id);
    const Parameter* find(const std::string& id) const;
    Parameter& at(const std::string& id);
    const Parameter& at(const std::string& id) const;

    // Registration order, which is also checkpoint order. Stored in a deque
    // so references stay valid across later add() calls.
    std::deque<Parameter>& items() { return items_; }
    const std::deque<Parameter>& items() const { return items_; }
    size_t size() const { return items_.size(); }

    void set_trainable(const std::string& id, bool trainable);
    void set_all_trainable(bool trainable);
    int64_t count_values() const;
    int64_t count_trainable_values() const;

  private:
    std::deque<Parameter> items_;
    std::unordered_map<std::string, size_t> index_;
};

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Standard Adam with bias correction over an explicit parameter list.
// Non-trainable entries are skipped entirely; trainable entries must carry a
// populated gradient at step() time. Gradients are zeroed after the update.
class Adam {
  public:
    Adam(std::vector<Parameter*> params, AdamConfig config = {});

    void step();
    int64_t step_count() const { return step_count_; }
    const AdamConfig& config() const { return config_; }

  private:
    std::vector<Parameter*> params_;
    AdamConfig config_;
    int64_t step_count_ = 0;
    std::vector<std::vector<double>> first_moment_;
    std::vector<std::vector<double>> second_moment_;
};

// Fills a tensor with N(0, stddev^2) draws in flat index order.
void fill_normal(Tensor& t, Rng& rng, double stddev);

}  // namespace promptstream
