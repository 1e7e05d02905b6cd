#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "promptstream/optim.hpp"
#include "promptstream/pattern.hpp"
#include "promptstream/tensor.hpp"

namespace promptstream {

enum class PromptFamily { kModality, kTaskAware, kTaskSpecific };

std::string family_to_string(PromptFamily f);
PromptFamily family_from_string(const std::string& s);

struct PromptConfig {
    int length = 16;  // rows per prompt
    int dim = 30;     // must equal the backbone hidden dim
    double init_std = 0.02;
    bool keys_init_ones = false;     // makes the key-collapse identity exact
    bool invert_key_roles = false;   // swap which key gates missing vs available
    bool per_layer_prompts = false;  // independent copies per scheduled layer
    bool use_modality = true;
    bool use_task_aware = true;
    bool use_task_specific = true;
};

// Which layers (1-based) each family attaches to. Lists must be disjoint and
// within [1, num_layers]; the default is contiguous groups of sizes {2,3,3}
// in modality -> task-aware -> task-specific order.
struct PromptSchedule {
    std::vector<int> modality_layers = {1, 2};
    std::vector<int> task_aware_layers = {3, 4, 5};
    std::vector<int> task_specific_layers = {6, 7, 8};

    static PromptSchedule grouped(const std::vector<int>& group_sizes,
                                  const std::vector<PromptFamily>& order);
    const std::vector<int>& layers(PromptFamily f) const;
    std::vector<int>& layers(PromptFamily f);
    int max_layer() const;
    int total_layers() const;
    void validate(int num_layers) const;
};

// All trainable continual-phase state: shared modality prompts, the two
// missing keys, and one task prompt tensor per seen task. Task prompts are
// trainable only while their task is active; earlier entries stay frozen.
class PromptPool {
  public:
    PromptPool() = default;
    PromptPool(const PromptConfig& config, const PromptSchedule& schedule, Rng& rng);

    const PromptConfig& config() const { return config_; }
    ParameterSet& params() { return params_; }
    const ParameterSet& params() const { return params_; }

    // [length, dim] view of one modality's shared prompt at a scheduled
    // layer slot (slot matters only when per_layer_prompts is on).
    Tensor modality_prompt(int modality, int layer_slot = 0) const;
    Tensor key_missing() const { return key_missing_; }
    Tensor key_available() const { return key_available_; }

    // Gates each modality's shared prompt by the key matching its
    // availability and sums over modalities; gradients reach the shared
    // prompts and both keys.
    Tensor task_aware_prompt(const MissingPattern& pattern, int layer_slot = 0) const;

    bool has_task(int task_id) const { return task_prompts_.count(task_id) > 0; }
    void ensure_task(int task_id, Rng& rng);
    Tensor task_prompt(int task_id, int modality, int layer_slot = 0) const;

    // Freezes every task prompt except the active one. Pass 0 to freeze all.
    void set_active_task(int task_id);
    std::vector<Parameter*> trainable_params();

    int num_layer_slots(PromptFamily f) const;

  private:
    PromptConfig config_;
    PromptSchedule schedule_;
    ParameterSet params_;
    std::vector<Tensor> modality_prompts_;           // [3, length, dim] per slot
    Tensor key_missing_, key_available_;             // [dim]
    std::map<int, std::vector<Tensor>> task_prompts_;  // task id -> [3, length, dim] per slot
};

// Prompts resolved for one (pattern, schedule) combination: what to prepend
// at each layer of each modality stream. Entries are undefined Tensors where
// no prompt attaches.
struct PromptContext {
    std::vector<std::vector<Tensor>> per_layer;  // [modality][layer 0-based]
    bool any() const;
};

// Builds the per-layer attachment map for the pattern's task. Modality
// layers get per-modality prompts; task-aware layers share one tensor across
// all three streams; task-specific layers use the task's own per-modality
// prompts. A missing task entry falls back to a zero prompt with a warning
// (only reachable when evaluating a task never trained).
PromptContext resolve_prompt_context(const PromptPool& pool, const PromptSchedule& schedule,
                                     const MissingPattern& pattern, int num_layers);

}  // namespace promptstream
