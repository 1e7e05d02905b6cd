#include "promptstream/optim.hpp"

#include <cmath>

#include "promptstream/errors.hpp"

namespace promptstream {

Parameter& ParameterSet::add(const std::string& id, Tensor tensor, bool trainable) {
    if (index_.count(id)) throw ContractError("parameter id already registered: " + id);
    if (!tensor.defined()) throw ContractError("parameter tensor undefined: " + id);
    tensor.node()->requires_grad = trainable;
    index_[id] = items_.size();
    items_.push_back(Parameter{id, std::move(tensor), trainable});
    return items_.back();
}

Parameter* ParameterSet::find(const std::string& id) {
    auto it = index_.find(id);
    return it == index_.end() ? nullptr : &items_[it->second];
}

const Parameter* ParameterSet::find(const std::string& id) const {
    auto it = index_.find(id);
    return it == index_.end() ? nullptr : &items_[it->second];
}

Parameter& ParameterSet::at(const std::string& id) {
    Parameter* p = find(id);
    if (!p) throw ContractError("unknown parameter id: " + id);
    return *p;
}

const Parameter& ParameterSet::at(const std::string& id) const {
    const Parameter* p = find(id);
    if (!p) throw ContractError("unknown parameter id: " + id);
    return *p;
}

void ParameterSet::set_trainable(const std::string& id, bool trainable) {
    Parameter& p = at(id);
    p.trainable = trainable;
    p.tensor.node()->requires_grad = trainable;
}

void ParameterSet::set_all_trainable(bool trainable) {
    for (Parameter& p : items_) {
        p.trainable = trainable;
        p.tensor.node()->requires_grad = trainable;
    }
}

int64_t ParameterSet::count_values() const {
    int64_t n = 0;
    for (const Parameter& p : items_) n += p.tensor.numel();
    return n;
}

int64_t ParameterSet::count_trainable_values() const {
    int64_t n = 0;
    for (const Parameter& p : items_) {
        if (p.trainable) n += p.tensor.numel();
    }
    return n;
}

Adam::Adam(std::vector<Parameter*> params, AdamConfig config)
    : params_(std::move(params)), config_(config) {
    first_moment_.resize(params_.size());
    second_moment_.resize(params_.size());
    for (size_t i = 0; i < params_.size(); ++i) {
        const size_t n = params_[i]->tensor.data().size();
        first_moment_[i].assign(n, 0.0);
        second_moment_[i].assign(n, 0.0);
    }
}

void Adam::step() {
    ++step_count_;
    const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_count_));
    const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_count_));
    for (size_t i = 0; i < params_.size(); ++i) {
        Parameter& p = *params_[i];
        if (!p.trainable) continue;
        if (!p.tensor.has_grad()) {
            throw ContractError("adam: missing gradient on trainable parameter " + p.id);
        }
        const auto& g = p.tensor.grad();
        auto& w = p.tensor.mutable_data();
        auto& m = first_moment_[i];
        auto& v = second_moment_[i];
        for (size_t j = 0; j < w.size(); ++j) {
            m[j] = config_.beta1 * m[j] + (1.0 - config_.beta1) * g[j];
            v[j] = config_.beta2 * v[j] + (1.0 - config_.beta2) * g[j] * g[j];
            const double mhat = m[j] / bc1;
            const double vhat = v[j] / bc2;
            w[j] -= config_.lr * mhat / (std::sqrt(vhat) + config_.eps);
        }
        p.tensor.zero_grad();
    }
}

void fill_normal(Tensor& t, Rng& rng, double stddev) {
    std::normal_distribution<double> dist(0.0, stddev);
    for (double& v : t.mutable_data()) v = dist(rng);
}

}  // namespace promptstream
