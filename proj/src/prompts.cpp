#include "promptstream/prompts.hpp"

#include <algorithm>
#include <set>

#include "promptstream/errors.hpp"
#include "promptstream/logging.hpp"

namespace promptstream {

namespace {

// Task ids follow the fixed enumeration of the seven legal patterns:
// 1 complete, 2 text missing, 3 video missing, 4 audio missing,
// 5 audio only, 6 video only, 7 text only.
constexpr MissingPattern kPatterns[kNumTasks] = {
    {false, false, false}, {false, false, true}, {false, true, false}, {true, false, false},
    {false, true, true},   {true, false, true},  {true, true, false},
};

}  // namespace

int task_id_from_pattern(const MissingPattern& pattern) {
    if (pattern.audio_missing && pattern.video_missing && pattern.text_missing) {
        throw DomainError("task_id_from_pattern: all modalities missing");
    }
    for (int t = 0; t < kNumTasks; ++t) {
        if (kPatterns[t] == pattern) return t + 1;
    }
    throw DomainError("task_id_from_pattern: unreachable pattern");
}

MissingPattern pattern_from_task_id(int task_id) {
    if (task_id < 1 || task_id > kNumTasks) {
        throw DomainError("pattern_from_task_id: task id " + std::to_string(task_id) +
                          " outside 1.." + std::to_string(kNumTasks));
    }
    return kPatterns[task_id - 1];
}

std::string pattern_to_string(const MissingPattern& p) {
    std::string s = "(";
    s += p.audio_missing ? "am" : "a";
    s += p.video_missing ? ",vm" : ",v";
    s += p.text_missing ? ",tm" : ",t";
    s += ")";
    return s;
}

std::string family_to_string(PromptFamily f) {
    switch (f) {
        case PromptFamily::kModality: return "MS";
        case PromptFamily::kTaskAware: return "TA";
        case PromptFamily::kTaskSpecific: return "TS";
    }
    return "?";
}

PromptFamily family_from_string(const std::string& s) {
    if (s == "MS") return PromptFamily::kModality;
    if (s == "TA") return PromptFamily::kTaskAware;
    if (s == "TS") return PromptFamily::kTaskSpecific;
    throw ConfigError("unknown prompt family: " + s + " (expected MS, TA or TS)");
}

PromptSchedule PromptSchedule::grouped(const std::vector<int>& group_sizes,
                                       const std::vector<PromptFamily>& order) {
    if (group_sizes.size() != 3 || order.size() != 3) {
        throw ConfigError("prompt schedule: need exactly three group sizes and three families");
    }
    std::set<PromptFamily> seen(order.begin(), order.end());
    if (seen.size() != 3) throw ConfigError("prompt schedule: families in order must be distinct");
    PromptSchedule s;
    int layer = 1;
    for (int g = 0; g < 3; ++g) {
        std::vector<int>& dst = s.layers(order[g]);
        dst.clear();
        for (int i = 0; i < group_sizes[g]; ++i) dst.push_back(layer++);
    }
    return s;
}

const std::vector<int>& PromptSchedule::layers(PromptFamily f) const {
    switch (f) {
        case PromptFamily::kModality: return modality_layers;
        case PromptFamily::kTaskAware: return task_aware_layers;
        case PromptFamily::kTaskSpecific: return task_specific_layers;
    }
    throw ContractError("prompt schedule: bad family");
}

std::vector<int>& PromptSchedule::layers(PromptFamily f) {
    return const_cast<std::vector<int>&>(static_cast<const PromptSchedule*>(this)->layers(f));
}

int PromptSchedule::max_layer() const {
    int mx = 0;
    for (PromptFamily f : {PromptFamily::kModality, PromptFamily::kTaskAware, PromptFamily::kTaskSpecific}) {
        for (int l : layers(f)) mx = std::max(mx, l);
    }
    return mx;
}

int PromptSchedule::total_layers() const {
    return static_cast<int>(modality_layers.size() + task_aware_layers.size() +
                            task_specific_layers.size());
}

void PromptSchedule::validate(int num_layers) const {
    std::set<int> seen;
    for (PromptFamily f : {PromptFamily::kModality, PromptFamily::kTaskAware, PromptFamily::kTaskSpecific}) {
        for (int l : layers(f)) {
            if (l < 1 || l > num_layers) {
                throw ConfigError("prompt schedule: layer " + std::to_string(l) + " outside 1.." +
                                  std::to_string(num_layers));
            }
            if (!seen.insert(l).second) {
                throw ConfigError("prompt schedule: layer " + std::to_string(l) +
                                  " assigned to more than one family");
            }
        }
    }
}

namespace {

std::string slot_suffix(const PromptConfig& cfg, int slot) {
    return cfg.per_layer_prompts ? "/" + std::to_string(slot) : "";
}

}  // namespace

PromptPool::PromptPool(const PromptConfig& config, const PromptSchedule& schedule, Rng& rng)
    : config_(config), schedule_(schedule) {
    if (config_.length < 1 || config_.dim < 1) {
        throw ConfigError("prompt pool: length and dim must be positive");
    }
    const Shape pool_shape{kNumModalities, config_.length, config_.dim};
    // Disabled families leave their tensors frozen so optimizers never see
    // parameters that cannot receive gradients. The shared prompts feed both
    // the per-modality attachments and the task-aware generation.
    const bool ms_used = config_.use_modality || config_.use_task_aware;
    const int ms_slots = num_layer_slots(PromptFamily::kModality);
    for (int s = 0; s < ms_slots; ++s) {
        Tensor t = Tensor::zeros(pool_shape);
        fill_normal(t, rng, config_.init_std);
        modality_prompts_.push_back(
            params_.add("prompts/ms" + slot_suffix(config_, s), t, ms_used).tensor);
    }
    key_missing_ = Tensor::zeros({config_.dim});
    key_available_ = Tensor::zeros({config_.dim});
    if (config_.keys_init_ones) {
        std::fill(key_missing_.mutable_data().begin(), key_missing_.mutable_data().end(), 1.0);
        std::fill(key_available_.mutable_data().begin(), key_available_.mutable_data().end(), 1.0);
    } else {
        fill_normal(key_missing_, rng, config_.init_std);
        fill_normal(key_available_, rng, config_.init_std);
    }
    key_missing_ = params_.add("prompts/keys/m", key_missing_, config_.use_task_aware).tensor;
    key_available_ = params_.add("prompts/keys/u", key_available_, config_.use_task_aware).tensor;
}

int PromptPool::num_layer_slots(PromptFamily f) const {
    if (!config_.per_layer_prompts) return 1;
    return std::max<int>(1, static_cast<int>(schedule_.layers(f).size()));
}

Tensor PromptPool::modality_prompt(int modality, int layer_slot) const {
    if (modality < 0 || modality >= kNumModalities) {
        throw ContractError("modality_prompt: modality index out of range");
    }
    const Tensor& pool = modality_prompts_.at(layer_slot);
    Tensor row = ops::slice(pool, 0, modality, modality + 1);
    return ops::reshape(row, {config_.length, config_.dim});
}

Tensor PromptPool::task_aware_prompt(const MissingPattern& pattern, int layer_slot) const {
    Tensor acc;
    for (int m = 0; m < kNumModalities; ++m) {
        const bool use_missing_key =
            config_.invert_key_roles ? !pattern.missing(m) : pattern.missing(m);
        const Tensor& key = use_missing_key ? key_missing_ : key_available_;
        Tensor gated = ops::broadcast_mul_vector(key, modality_prompt(m, layer_slot));
        acc = acc.defined() ? ops::add(acc, gated) : gated;
    }
    return acc;
}

void PromptPool::ensure_task(int task_id, Rng& rng) {
    if (has_task(task_id)) return;
    pattern_from_task_id(task_id);  // range check
    const Shape pool_shape{kNumModalities, config_.length, config_.dim};
    const int slots = num_layer_slots(PromptFamily::kTaskSpecific);
    std::vector<Tensor> tensors;
    for (int s = 0; s < slots; ++s) {
        Tensor t = Tensor::zeros(pool_shape);
        fill_normal(t, rng, config_.init_std);
        tensors.push_back(
            params_.add("prompts/ts/" + std::to_string(task_id) + slot_suffix(config_, s), t).tensor);
    }
    task_prompts_[task_id] = std::move(tensors);
}

Tensor PromptPool::task_prompt(int task_id, int modality, int layer_slot) const {
    auto it = task_prompts_.find(task_id);
    if (it == task_prompts_.end()) {
        throw ContractError("task_prompt: no entry for task " + std::to_string(task_id));
    }
    Tensor row = ops::slice(it->second.at(layer_slot), 0, modality, modality + 1);
    return ops::reshape(row, {config_.length, config_.dim});
}

void PromptPool::set_active_task(int task_id) {
    for (auto& [tid, tensors] : task_prompts_) {
        const bool trainable = (tid == task_id);
        for (size_t s = 0; s < tensors.size(); ++s) {
            params_.set_trainable("prompts/ts/" + std::to_string(tid) + slot_suffix(config_, static_cast<int>(s)),
                                  trainable);
        }
    }
}

std::vector<Parameter*> PromptPool::trainable_params() {
    std::vector<Parameter*> out;
    for (Parameter& p : params_.items()) {
        if (p.trainable) out.push_back(&p);
    }
    return out;
}

bool PromptContext::any() const {
    for (const auto& stream : per_layer) {
        for (const Tensor& t : stream) {
            if (t.defined()) return true;
        }
    }
    return false;
}

PromptContext resolve_prompt_context(const PromptPool& pool, const PromptSchedule& schedule,
                                     const MissingPattern& pattern, int num_layers) {
    schedule.validate(num_layers);
    const int task_id = task_id_from_pattern(pattern);
    const PromptConfig& cfg = pool.config();

    PromptContext ctx;
    ctx.per_layer.assign(kNumModalities, std::vector<Tensor>(num_layers));

    if (cfg.use_modality) {
        int slot = 0;
        for (int layer : schedule.modality_layers) {
            for (int m = 0; m < kNumModalities; ++m) {
                ctx.per_layer[m][layer - 1] = pool.modality_prompt(m, cfg.per_layer_prompts ? slot : 0);
            }
            ++slot;
        }
    }
    if (cfg.use_task_aware) {
        int slot = 0;
        for (int layer : schedule.task_aware_layers) {
            // One shared tensor: all three streams point at the same node.
            Tensor shared = pool.task_aware_prompt(pattern, cfg.per_layer_prompts ? slot : 0);
            for (int m = 0; m < kNumModalities; ++m) ctx.per_layer[m][layer - 1] = shared;
            ++slot;
        }
    }
    if (cfg.use_task_specific && !schedule.task_specific_layers.empty()) {
        if (!pool.has_task(task_id)) {
            log::warn("no task prompt for task ", task_id, " (", pattern_to_string(pattern),
                      "); falling back to zeros");
            Tensor zero = Tensor::zeros({cfg.length, cfg.dim});
            for (int layer : schedule.task_specific_layers) {
                for (int m = 0; m < kNumModalities; ++m) ctx.per_layer[m][layer - 1] = zero;
            }
        } else {
            int slot = 0;
            for (int layer : schedule.task_specific_layers) {
                for (int m = 0; m < kNumModalities; ++m) {
                    ctx.per_layer[m][layer - 1] =
                        pool.task_prompt(task_id, m, cfg.per_layer_prompts ? slot : 0);
                }
                ++slot;
            }
        }
    }
    return ctx;
}

}  // namespace promptstream
