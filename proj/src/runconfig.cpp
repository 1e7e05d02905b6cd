#include "promptstream/runconfig.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "promptstream/errors.hpp"

namespace promptstream {

using nlohmann::json;

namespace {

// Strict section reader: every key consumed explicitly, leftovers rejected.
class SectionReader {
  public:
    SectionReader(const json& j, std::string name) : name_(std::move(name)) {
        if (!j.is_object()) throw ConfigError("config section '" + name_ + "' must be an object");
        for (const auto& [k, v] : j.items()) remaining_[k] = v;
    }

    template <typename T>
    void read(const char* key, T& target) {
        auto it = remaining_.find(key);
        if (it == remaining_.end()) return;
        try {
            target = it->second.template get<T>();
        } catch (const json::exception& e) {
            throw ConfigError("config key '" + name_ + "." + key + "': " + e.what());
        }
        remaining_.erase(it);
    }

    std::optional<json> take(const char* key) {
        auto it = remaining_.find(key);
        if (it == remaining_.end()) return std::nullopt;
        json v = it->second;
        remaining_.erase(it);
        return v;
    }

    void finish() const {
        if (!remaining_.empty()) {
            throw ConfigError("unknown config key '" + name_ + "." + remaining_.begin()->first + "'");
        }
    }

  private:
    std::string name_;
    std::map<std::string, json> remaining_;
};

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string token;
    std::istringstream is(s);
    while (std::getline(is, token, sep)) out.push_back(token);
    return out;
}

std::vector<PromptFamily> families_from_strings(const std::vector<std::string>& names) {
    std::vector<PromptFamily> out;
    for (const auto& n : names) out.push_back(family_from_string(n));
    return out;
}

std::vector<std::string> families_to_strings(const std::vector<PromptFamily>& fams) {
    std::vector<std::string> out;
    for (PromptFamily f : fams) out.push_back(family_to_string(f));
    return out;
}

}  // namespace

PromptSchedule RunConfig::make_schedule() const {
    if (explicit_positions) return *explicit_positions;
    return PromptSchedule::grouped(prompt_group_sizes, prompt_order);
}

void RunConfig::validate() const {
    backbone.validate();
    loss.validate();
    trainer.validate();
    make_schedule().validate(backbone.num_layers);
    if (prompts.length < 1) throw ConfigError("prompts.length must be positive");
    if (prompts.dim != backbone.hidden_dim) {
        throw ConfigError("prompts.dim must equal backbone.hidden_dim");
    }
    if (pretrain_epochs < 0) throw ConfigError("trainer.pretrain_epochs must be >= 0");
    if (stream_order.empty()) throw ConfigError("stream.order must not be empty");
    std::set<int> seen;
    for (int t : stream_order) {
        pattern_from_task_id(t);  // range check
        if (!seen.insert(t).second) {
            throw ConfigError("stream.order repeats task " + std::to_string(t));
        }
    }
    if ((loss_kind == TaskLossKind::kL1Regression) != backbone.regression) {
        throw ConfigError("loss.kind l1_regression requires backbone.regression=true and vice versa");
    }
}

RunConfig run_config_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("config root must be an object");
    static const std::set<std::string> kSections = {"backbone", "prompts", "loss",
                                                    "trainer",  "data",    "stream"};
    for (const auto& [k, v] : j.items()) {
        (void)v;
        if (!kSections.count(k)) throw ConfigError("unknown config section '" + k + "'");
    }
    RunConfig c;

    if (j.contains("backbone")) {
        SectionReader r(j.at("backbone"), "backbone");
        r.read("input_dims", c.backbone.input_dims);
        r.read("hidden_dim", c.backbone.hidden_dim);
        r.read("num_layers", c.backbone.num_layers);
        r.read("num_heads", c.backbone.num_heads);
        r.read("ffn_multiple", c.backbone.ffn_multiple);
        r.read("num_classes", c.backbone.num_classes);
        r.read("regression", c.backbone.regression);
        r.read("propagate_prompts", c.backbone.propagate_prompts);
        r.finish();
    }
    c.prompts.dim = c.backbone.hidden_dim;
    if (j.contains("prompts")) {
        SectionReader r(j.at("prompts"), "prompts");
        r.read("length", c.prompts.length);
        r.read("init_std", c.prompts.init_std);
        r.read("keys_init_ones", c.prompts.keys_init_ones);
        r.read("invert_key_roles", c.prompts.invert_key_roles);
        r.read("per_layer_prompts", c.prompts.per_layer_prompts);
        r.read("use_modality", c.prompts.use_modality);
        r.read("use_task_aware", c.prompts.use_task_aware);
        r.read("use_task_specific", c.prompts.use_task_specific);
        r.read("group_sizes", c.prompt_group_sizes);
        if (auto order = r.take("order")) {
            c.prompt_order = families_from_strings(order->get<std::vector<std::string>>());
        }
        if (auto pos = r.take("positions")) {
            SectionReader pr(*pos, "prompts.positions");
            PromptSchedule s;
            s.modality_layers.clear();
            s.task_aware_layers.clear();
            s.task_specific_layers.clear();
            pr.read("MS", s.modality_layers);
            pr.read("TA", s.task_aware_layers);
            pr.read("TS", s.task_specific_layers);
            pr.finish();
            c.explicit_positions = s;
        }
        r.finish();
    }
    if (j.contains("loss")) {
        SectionReader r(j.at("loss"), "loss");
        std::string kind = "cross_entropy";
        r.read("kind", kind);
        if (kind == "cross_entropy") {
            c.loss_kind = TaskLossKind::kCrossEntropy;
        } else if (kind == "l1_regression") {
            c.loss_kind = TaskLossKind::kL1Regression;
        } else {
            throw ConfigError("loss.kind must be cross_entropy or l1_regression, got '" + kind + "'");
        }
        r.read("tau", c.loss.tau);
        r.read("lambda1", c.loss.lambda1);
        r.read("lambda2", c.loss.lambda2);
        r.read("exclude_complete_task", c.loss.exclude_complete_task);
        r.read("standard_ntxent", c.loss.standard_ntxent);
        r.finish();
    }
    if (j.contains("trainer")) {
        SectionReader r(j.at("trainer"), "trainer");
        r.read("epochs", c.trainer.epochs);
        r.read("batch_size", c.trainer.batch_size);
        r.read("lr", c.trainer.lr);
        r.read("seed", c.trainer.seed);
        r.read("eval_all_tasks", c.trainer.eval_all_tasks);
        r.read("pretrain_epochs", c.pretrain_epochs);
        if (auto mode = r.take("mode")) c.trainer.mode = mode_from_string(mode->get<std::string>());
        r.finish();
    }
    if (j.contains("data")) {
        SectionReader r(j.at("data"), "data");
        r.read("num_classes", c.data.num_classes);
        r.read("pretrain_samples", c.data.pretrain_samples);
        r.read("train_per_task", c.data.train_per_task);
        r.read("test_per_task", c.data.test_per_task);
        r.read("seq_lens", c.data.seq_lens);
        r.read("input_dims", c.data.input_dims);
        r.read("center_scale", c.data.center_scale);
        r.read("noise_scale", c.data.noise_scale);
        r.read("modality_weights", c.data.modality_weights);
        r.read("seed", c.data.seed);
        r.finish();
    }
    if (j.contains("stream")) {
        SectionReader r(j.at("stream"), "stream");
        r.read("order", c.stream_order);
        if (auto s = r.take("shuffle_seed")) c.stream_shuffle_seed = s->get<uint64_t>();
        r.finish();
    }

    // Data generation and backbone must agree on feature geometry; the data
    // section wins so one file describes the whole experiment.
    c.backbone.input_dims = c.data.input_dims;
    c.backbone.num_classes = c.data.num_classes;

    if (c.stream_shuffle_seed) {
        Rng rng(*c.stream_shuffle_seed);
        std::shuffle(c.stream_order.begin(), c.stream_order.end(), rng);
    }
    c.validate();
    return c;
}

json run_config_to_json(const RunConfig& c) {
    json j;
    j["backbone"] = {{"input_dims", c.backbone.input_dims},
                     {"hidden_dim", c.backbone.hidden_dim},
                     {"num_layers", c.backbone.num_layers},
                     {"num_heads", c.backbone.num_heads},
                     {"ffn_multiple", c.backbone.ffn_multiple},
                     {"num_classes", c.backbone.num_classes},
                     {"regression", c.backbone.regression},
                     {"propagate_prompts", c.backbone.propagate_prompts}};
    j["prompts"] = {{"length", c.prompts.length},
                    {"init_std", c.prompts.init_std},
                    {"keys_init_ones", c.prompts.keys_init_ones},
                    {"invert_key_roles", c.prompts.invert_key_roles},
                    {"per_layer_prompts", c.prompts.per_layer_prompts},
                    {"use_modality", c.prompts.use_modality},
                    {"use_task_aware", c.prompts.use_task_aware},
                    {"use_task_specific", c.prompts.use_task_specific},
                    {"group_sizes", c.prompt_group_sizes},
                    {"order", families_to_strings(c.prompt_order)}};
    const PromptSchedule sched = c.make_schedule();
    j["prompts"]["positions"] = {{"MS", sched.modality_layers},
                                 {"TA", sched.task_aware_layers},
                                 {"TS", sched.task_specific_layers}};
    j["loss"] = {{"kind", c.loss_kind == TaskLossKind::kCrossEntropy ? "cross_entropy"
                                                                     : "l1_regression"},
                 {"tau", c.loss.tau},
                 {"lambda1", c.loss.lambda1},
                 {"lambda2", c.loss.lambda2},
                 {"exclude_complete_task", c.loss.exclude_complete_task},
                 {"standard_ntxent", c.loss.standard_ntxent}};
    j["trainer"] = {{"epochs", c.trainer.epochs},
                    {"batch_size", c.trainer.batch_size},
                    {"lr", c.trainer.lr},
                    {"seed", c.trainer.seed},
                    {"mode", mode_to_string(c.trainer.mode)},
                    {"eval_all_tasks", c.trainer.eval_all_tasks},
                    {"pretrain_epochs", c.pretrain_epochs}};
    j["data"] = {{"num_classes", c.data.num_classes},
                 {"pretrain_samples", c.data.pretrain_samples},
                 {"train_per_task", c.data.train_per_task},
                 {"test_per_task", c.data.test_per_task},
                 {"seq_lens", c.data.seq_lens},
                 {"input_dims", c.data.input_dims},
                 {"center_scale", c.data.center_scale},
                 {"noise_scale", c.data.noise_scale},
                 {"modality_weights", c.data.modality_weights},
                 {"seed", c.data.seed}};
    j["stream"] = {{"order", c.stream_order}};
    return j;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("load_run_config: cannot open: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError("load_run_config: " + path + ": " + e.what());
    }
    return run_config_from_json(j);
}

void apply_ablation(RunConfig& config, const std::string& spec) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos) {
        throw ConfigError("ablation spec '" + spec + "' must look like key=value");
    }
    const std::string key = spec.substr(0, eq);
    const std::string value = spec.substr(eq + 1);
    if (key == "prompts") {
        config.prompts.use_modality = false;
        config.prompts.use_task_aware = false;
        config.prompts.use_task_specific = false;
        if (value != "none" && !value.empty()) {
            for (const std::string& name : split(value, ',')) {
                switch (family_from_string(name)) {
                    case PromptFamily::kModality: config.prompts.use_modality = true; break;
                    case PromptFamily::kTaskAware: config.prompts.use_task_aware = true; break;
                    case PromptFamily::kTaskSpecific: config.prompts.use_task_specific = true; break;
                }
            }
        }
    } else if (key == "order") {
        config.prompt_order = families_from_strings(split(value, ','));
        config.explicit_positions.reset();
    } else if (key == "positions") {
        const auto groups = split(value, '|');
        if (groups.size() != 3) {
            throw ConfigError("ablation positions need three |-separated groups, got '" + value + "'");
        }
        PromptSchedule s;
        for (int g = 0; g < 3; ++g) {
            std::vector<int> layers;
            for (const std::string& tok : split(groups[g], ',')) {
                if (!tok.empty()) layers.push_back(std::stoi(tok));
            }
            s.layers(config.prompt_order[g]) = layers;
        }
        config.explicit_positions = s;
    } else if (key == "length") {
        config.prompts.length = std::stoi(value);
    } else {
        throw ConfigError("unknown ablation key '" + key + "'");
    }
    config.validate();
}

}  // namespace promptstream
