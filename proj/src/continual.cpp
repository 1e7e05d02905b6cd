#include "promptstream/continual.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <numeric>

#include "promptstream/errors.hpp"
#include "promptstream/logging.hpp"

namespace promptstream {

using nlohmann::json;

std::string mode_to_string(RunMode mode) {
    switch (mode) {
        case RunMode::kOurs: return "ours";
        case RunMode::kLowerbound: return "lowerbound";
        case RunMode::kUpperbound: return "upperbound";
        case RunMode::kUpperboundOurs: return "upperbound-ours";
    }
    return "?";
}

RunMode mode_from_string(const std::string& s) {
    if (s == "ours") return RunMode::kOurs;
    if (s == "lowerbound") return RunMode::kLowerbound;
    if (s == "upperbound") return RunMode::kUpperbound;
    if (s == "upperbound-ours" || s == "upperbound_ours") return RunMode::kUpperboundOurs;
    throw ConfigError("unknown run mode: " + s);
}

void TrainerConfig::validate() const {
    if (epochs < 0) throw ConfigError("trainer config: epochs must be >= 0");
    if (batch_size < 1) throw ConfigError("trainer config: batch_size must be >= 1");
    if (lr <= 0) throw ConfigError("trainer config: lr must be > 0");
}

ContinualTrainer::ContinualTrainer(Backbone& backbone, PromptPool* pool,
                                   const PromptSchedule& schedule,
                                   const ContrastiveConfig& contrastive,
                                   const TrainerConfig& trainer, TaskLossKind loss_kind, Rng& rng)
    : backbone_(backbone),
      pool_(pool),
      schedule_(schedule),
      contrastive_(contrastive),
      cfg_(trainer),
      loss_kind_(loss_kind),
      rng_(rng) {
    cfg_.validate();
    contrastive_.validate();
    schedule_.validate(backbone_.config().num_layers);
    if (prompts_active() && !pool_) {
        throw ContractError("continual trainer: mode " + mode_to_string(cfg_.mode) +
                            " needs a prompt pool");
    }
    if (pool_ && pool_->config().dim != backbone_.config().hidden_dim) {
        throw ConfigError("continual trainer: prompt dim " + std::to_string(pool_->config().dim) +
                          " != backbone hidden dim " + std::to_string(backbone_.config().hidden_dim));
    }
}

bool ContinualTrainer::prompts_active() const {
    return cfg_.mode == RunMode::kOurs || cfg_.mode == RunMode::kUpperboundOurs;
}

bool ContinualTrainer::contrastive_active() const {
    return prompts_active() && pool_ && pool_->config().use_task_aware && contrastive_.lambda1 > 0;
}

PromptSchedule ContinualTrainer::effective_schedule() const {
    PromptSchedule s = schedule_;
    if (cfg_.mode == RunMode::kUpperboundOurs) s.task_specific_layers.clear();
    return s;
}

std::vector<double> ContinualTrainer::train_phase(const std::vector<const Sample*>& samples,
                                                  std::vector<Parameter*> trainables) {
    Adam opt(std::move(trainables), AdamConfig{cfg_.lr, 0.9, 0.999, 1e-8});
    const PromptSchedule sched = effective_schedule();
    const int num_layers = backbone_.config().num_layers;

    std::vector<size_t> order(samples.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> epoch_losses;
    for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng_);
        double epoch_loss = 0.0;
        for (size_t start = 0; start < order.size(); start += cfg_.batch_size) {
            const size_t stop = std::min(order.size(), start + static_cast<size_t>(cfg_.batch_size));
            const double inv = 1.0 / static_cast<double>(stop - start);
            // Prompt contexts are pattern-keyed; rebuild per minibatch so the
            // tape ties fresh graph nodes to the current parameter values.
            std::map<int, PromptContext> contexts;
            for (size_t k = start; k < stop; ++k) {
                const Sample& s = *samples[order[k]];
                const PromptContext* ctx = nullptr;
                if (prompts_active()) {
                    const int tid = task_id_from_pattern(s.pattern);
                    auto it = contexts.find(tid);
                    if (it == contexts.end()) {
                        it = contexts.emplace(tid, resolve_prompt_context(*pool_, sched, s.pattern,
                                                                          num_layers)).first;
                    }
                    ctx = &it->second;
                }
                Tensor loss = task_loss(backbone_.forward(s, ctx), s.label, loss_kind_);
                epoch_loss += loss.value();
                // Nothing trainable reaches the loss when every family is
                // ablated away under a frozen backbone; skip the sweep then.
                if (loss.requires_grad()) ops::scale(loss, inv).backward();
            }
            if (contrastive_active()) {
                Tensor con = contrastive_loss(task_embeddings(*pool_), contrastive_);
                epoch_loss += contrastive_.lambda1 * con.value() * static_cast<double>(stop - start);
                if (con.requires_grad()) ops::scale(con, contrastive_.lambda1).backward();
            }
            opt.step();
        }
        epoch_losses.push_back(epoch_loss / static_cast<double>(samples.size()));
    }
    return epoch_losses;
}

double ContinualTrainer::evaluate(const StreamEntry& entry) const {
    NoGradGuard no_grad;
    const MissingPattern pattern = pattern_from_task_id(entry.task_id);
    const PromptSchedule sched = effective_schedule();
    PromptContext ctx;
    if (prompts_active()) {
        ctx = resolve_prompt_context(*pool_, sched, pattern, backbone_.config().num_layers);
    }
    std::vector<std::vector<double>> preds;
    std::vector<double> labels;
    preds.reserve(entry.test.size());
    for (const Sample& s : entry.test.samples) {
        preds.push_back(backbone_.forward(s, prompts_active() ? &ctx : nullptr).data());
        labels.push_back(s.label);
    }
    return accuracy(preds, labels, loss_kind_);
}

namespace {

void check_entry(const StreamEntry& entry) {
    const MissingPattern expected = pattern_from_task_id(entry.task_id);
    for (const Sample& s : entry.train.samples) {
        if (!(s.pattern == expected)) {
            throw ContractError("stream entry for task " + std::to_string(entry.task_id) +
                                ": sample " + s.id + " carries pattern " +
                                pattern_to_string(s.pattern) + ", expected " +
                                pattern_to_string(expected));
        }
    }
}

std::vector<const Sample*> collect(const Dataset& d) {
    std::vector<const Sample*> out;
    out.reserve(d.size());
    for (const Sample& s : d.samples) out.push_back(&s);
    return out;
}

}  // namespace

RunRecord ContinualTrainer::run_stream(const std::vector<StreamEntry>& stream,
                                       const TaskCallback& on_task_done) {
    if (stream.empty()) throw ContractError("run_stream: empty stream");
    if (cfg_.mode == RunMode::kUpperbound || cfg_.mode == RunMode::kUpperboundOurs) {
        throw ContractError("run_stream: i.i.d modes run through run_iid");
    }
    const auto t0 = std::chrono::steady_clock::now();
    const int num_tasks = static_cast<int>(stream.size());

    const bool freeze_backbone = (cfg_.mode == RunMode::kOurs);
    backbone_.params().set_all_trainable(!freeze_backbone);

    RunRecord rec;
    rec.mode = mode_to_string(cfg_.mode);
    rec.matrix = AccuracyMatrix(num_tasks);
    rec.has_matrix = true;

    for (int n = 1; n <= num_tasks; ++n) {
        const StreamEntry& entry = stream[n - 1];
        rec.task_order.push_back(entry.task_id);
        check_entry(entry);

        std::vector<Parameter*> trainables;
        if (cfg_.mode == RunMode::kOurs) {
            if (pool_->config().use_task_specific) {
                pool_->ensure_task(entry.task_id, rng_);
                pool_->set_active_task(entry.task_id);
            }
            trainables = pool_->trainable_params();
        } else {
            trainables = backbone_.all_params();
        }
        log::info("task ", n, "/", num_tasks, " (id ", entry.task_id, ", ",
                  pattern_to_string(pattern_from_task_id(entry.task_id)), "): ",
                  entry.train.size(), " train samples, ", cfg_.epochs, " epochs");
        rec.loss_curves.push_back(train_phase(collect(entry.train), std::move(trainables)));
        if (on_task_done) on_task_done(n, entry.task_id);

        const int sweep = cfg_.eval_all_tasks ? num_tasks : n;
        for (int i = 1; i <= sweep; ++i) {
            const double acc = evaluate(stream[i - 1]);
            if (i <= n) rec.matrix.set(i, n, acc);
        }
        log::info("task ", n, " done; AA so far ", average_accuracy(rec.matrix, n));
    }

    rec.final_accuracies.resize(num_tasks);
    for (int i = 1; i <= num_tasks; ++i) rec.final_accuracies[i - 1] = rec.matrix.get(i, num_tasks);
    rec.aa = average_accuracy(rec.matrix, num_tasks);
    rec.fm = forgetting_measure(rec.matrix, num_tasks);

    rec.backbone_param_count = backbone_.params().count_values();
    rec.trainable_param_count =
        (cfg_.mode == RunMode::kOurs) ? pool_->params().count_values() : rec.backbone_param_count;
    rec.trainable_ratio = static_cast<double>(rec.trainable_param_count) /
                          static_cast<double>(rec.backbone_param_count);
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

RunRecord ContinualTrainer::run_iid(const std::vector<StreamEntry>& tasks) {
    if (tasks.empty()) throw ContractError("run_iid: no task data");
    if (cfg_.mode != RunMode::kUpperbound && cfg_.mode != RunMode::kUpperboundOurs) {
        throw ContractError("run_iid: sequential modes run through run_stream");
    }
    const auto t0 = std::chrono::steady_clock::now();

    backbone_.params().set_all_trainable(true);
    std::vector<const Sample*> pooled;
    for (const StreamEntry& e : tasks) {
        check_entry(e);
        for (const Sample* s : collect(e.train)) pooled.push_back(s);
    }

    std::vector<Parameter*> trainables = backbone_.all_params();
    if (cfg_.mode == RunMode::kUpperboundOurs) {
        for (Parameter* p : pool_->trainable_params()) trainables.push_back(p);
    }

    RunRecord rec;
    rec.mode = mode_to_string(cfg_.mode);
    for (const StreamEntry& e : tasks) rec.task_order.push_back(e.task_id);
    log::info("i.i.d phase: ", pooled.size(), " pooled train samples, ", cfg_.epochs, " epochs");
    rec.loss_curves.push_back(train_phase(pooled, std::move(trainables)));

    double sum = 0.0;
    for (const StreamEntry& e : tasks) {
        const double acc = evaluate(e);
        rec.final_accuracies.push_back(acc);
        sum += acc;
    }
    rec.aa = sum / static_cast<double>(tasks.size());
    rec.fm = std::nullopt;  // single phase, nothing to forget

    rec.backbone_param_count = backbone_.params().count_values();
    rec.trainable_param_count = rec.backbone_param_count;
    if (cfg_.mode == RunMode::kUpperboundOurs) {
        rec.trainable_param_count += pool_->params().count_values();
    }
    rec.trainable_ratio = static_cast<double>(rec.trainable_param_count) /
                          static_cast<double>(rec.backbone_param_count);
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

void save_run_record(const RunRecord& record, const std::string& path) {
    json j;
    j["schema"] = "RRV1";
    j["mode"] = record.mode;
    j["config"] = record.config_snapshot.is_null() ? json::object() : record.config_snapshot;
    j["task_order"] = record.task_order;
    if (record.has_matrix) {
        json cols = json::array();
        for (int n = 1; n <= record.matrix.num_tasks(); ++n) {
            json col = json::array();
            for (int i = 1; i <= n; ++i) col.push_back(record.matrix.get(i, n));
            cols.push_back(std::move(col));
        }
        j["accuracy_matrix"] = std::move(cols);
    } else {
        j["accuracy_matrix"] = nullptr;
    }
    j["final_accuracies"] = record.final_accuracies;
    j["aa"] = record.aa;
    j["fm"] = record.fm ? json(*record.fm) : json(nullptr);
    j["params"] = {{"trainable", record.trainable_param_count},
                   {"backbone", record.backbone_param_count},
                   {"ratio", record.trainable_ratio}};
    j["loss_curves"] = record.loss_curves;

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("save_run_record: cannot open for writing: " + path);
    out << j.dump(2) << "\n";
    if (!out) throw IoError("save_run_record: write failed: " + path);

    // Timing is deliberately kept out of the record so identical runs stay
    // byte-identical; it lands in a sidecar log instead.
    std::ofstream side(path + ".log");
    if (side) {
        const std::time_t now = std::time(nullptr);
        char stamp[32];
        std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
        side << "finished " << stamp << "\nwall_seconds " << record.wall_seconds << "\n";
    }
}

RunRecord load_run_record(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("load_run_record: cannot open: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw IoError("load_run_record: " + path + ": " + e.what());
    }
    if (j.value("schema", "") != "RRV1") {
        throw IoError("load_run_record: " + path + ": unsupported schema '" +
                      j.value("schema", "<missing>") + "', expected RRV1");
    }
    RunRecord rec;
    rec.mode = j.at("mode").get<std::string>();
    rec.config_snapshot = j.at("config");
    rec.task_order = j.at("task_order").get<std::vector<int>>();
    if (!j.at("accuracy_matrix").is_null()) {
        const auto& cols = j.at("accuracy_matrix");
        rec.matrix = AccuracyMatrix(static_cast<int>(cols.size()));
        rec.has_matrix = true;
        for (int n = 1; n <= static_cast<int>(cols.size()); ++n) {
            const auto& col = cols.at(n - 1);
            for (int i = 1; i <= n; ++i) rec.matrix.set(i, n, col.at(i - 1).get<double>());
        }
    }
    rec.final_accuracies = j.at("final_accuracies").get<std::vector<double>>();
    rec.aa = j.at("aa").get<double>();
    if (!j.at("fm").is_null()) rec.fm = j.at("fm").get<double>();
    rec.trainable_param_count = j.at("params").at("trainable").get<int64_t>();
    rec.backbone_param_count = j.at("params").at("backbone").get<int64_t>();
    rec.trainable_ratio = j.at("params").at("ratio").get<double>();
    rec.loss_curves = j.at("loss_curves").get<std::vector<std::vector<double>>>();
    return rec;
}

}  // namespace promptstream
