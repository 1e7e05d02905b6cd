#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "promptstream/backbone.hpp"
#include "promptstream/losses.hpp"
#include "promptstream/metrics.hpp"
#include "promptstream/prompts.hpp"

namespace promptstream {

enum class RunMode { kOurs, kLowerbound, kUpperbound, kUpperboundOurs };

std::string mode_to_string(RunMode mode);
RunMode mode_from_string(const std::string& s);

struct TrainerConfig {
    int epochs = 30;
    int batch_size = 64;
    double lr = 1e-3;
    uint64_t seed = 7;
    RunMode mode = RunMode::kOurs;
    bool eval_all_tasks = false;  // full 7-way sweep after every task

    void validate() const;
};

// One position in the continual stream. Position in the vector defines the
// index i of a_{i,j}; task_id names the missing pattern.
struct StreamEntry {
    int task_id = 0;
    Dataset train;
    Dataset test;
};

struct RunRecord {
    std::string mode;
    nlohmann::json config_snapshot;
    std::vector<int> task_order;  // task ids by stream position
    AccuracyMatrix matrix;        // sequential modes only
    bool has_matrix = false;
    std::vector<double> final_accuracies;
    double aa = 0.0;
    std::optional<double> fm;
    int64_t trainable_param_count = 0;
    int64_t backbone_param_count = 0;
    double trainable_ratio = 0.0;
    std::vector<std::vector<double>> loss_curves;  // per task (or phase), per epoch
    double wall_seconds = 0.0;  // written to the sidecar log, not the record file
};

// RRV1 schema. The record file itself is a pure function of config + seed +
// data; wall-clock goes to <path>.log so records stay byte-comparable.
void save_run_record(const RunRecord& record, const std::string& path);
RunRecord load_run_record(const std::string& path);

// Domain-incremental protocol driver. In `ours` mode the backbone stays
// frozen and only {shared prompts, keys, active task prompt} train; the
// other modes retrain the backbone with or without prompts attached.
class ContinualTrainer {
  public:
    // `rng` is the run's single random stream; pool init, task-prompt
    // creation and shuffles all consume it in a fixed order.
    ContinualTrainer(Backbone& backbone, PromptPool* pool, const PromptSchedule& schedule,
                     const ContrastiveConfig& contrastive, const TrainerConfig& trainer,
                     TaskLossKind loss_kind, Rng& rng);

    using TaskCallback = std::function<void(int stream_position, int task_id)>;

    // Sequential tasks; fills a_{i,n} for i <= n after each task n.
    RunRecord run_stream(const std::vector<StreamEntry>& stream, const TaskCallback& on_task_done = {});

    // Pooled training over the union of all task data (the i.i.d reference
    // points); evaluates every task's test split once at the end.
    RunRecord run_iid(const std::vector<StreamEntry>& tasks);

    double evaluate(const StreamEntry& entry) const;

  private:
    Backbone& backbone_;
    PromptPool* pool_;
    PromptSchedule schedule_;
    ContrastiveConfig contrastive_;
    TrainerConfig cfg_;
    TaskLossKind loss_kind_;
    Rng& rng_;

    bool prompts_active() const;
    bool contrastive_active() const;
    PromptSchedule effective_schedule() const;
    std::vector<double> train_phase(const std::vector<const Sample*>& samples,
                                    std::vector<Parameter*> trainables);
};

}  // namespace promptstream
