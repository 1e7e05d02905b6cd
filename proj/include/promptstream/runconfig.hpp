#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "promptstream/backbone.hpp"
#include "promptstream/continual.hpp"
#include "promptstream/data.hpp"
#include "promptstream/losses.hpp"
#include "promptstream/prompts.hpp"

namespace promptstream {

// Whole-run configuration: sections backbone, prompts, loss, trainer, data,
// stream. Every field has a default; unknown keys are rejected so typos
// cannot silently fall back. The fully resolved form is echoed into every
// run record.
struct RunConfig {
    BackboneConfig backbone;
    PromptConfig prompts;
    std::vector<int> prompt_group_sizes = {2, 3, 3};
    std::vector<PromptFamily> prompt_order = {PromptFamily::kModality, PromptFamily::kTaskAware,
                                              PromptFamily::kTaskSpecific};
    std::optional<PromptSchedule> explicit_positions;  // overrides grouping when set
    ContrastiveConfig loss;
    TaskLossKind loss_kind = TaskLossKind::kCrossEntropy;
    TrainerConfig trainer;
    int pretrain_epochs = 30;
    SyntheticSpec data;
    std::vector<int> stream_order = {1, 2, 3, 4, 5, 6, 7};
    std::optional<uint64_t> stream_shuffle_seed;  // permutes the order when set

    PromptSchedule make_schedule() const;
    void validate() const;
};

RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json run_config_to_json(const RunConfig& config);
RunConfig load_run_config(const std::string& path);

// Mutates one config dimension from an ablation spec string. Accepted forms:
//   prompts=MS,TA        enabled families (any subset incl. "none")
//   order=TA,MS,TS       family order over the layer groups
//   positions=1,2|3,4,5|6,7,8   explicit layers per family in current order
//   length=8             prompt length
void apply_ablation(RunConfig& config, const std::string& spec);

}  // namespace promptstream
