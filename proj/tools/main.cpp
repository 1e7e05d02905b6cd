#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "promptstream/checkpoint.hpp"
#include "promptstream/continual.hpp"
#include "promptstream/errors.hpp"
#include "promptstream/logging.hpp"
#include "promptstream/report.hpp"
#include "promptstream/runconfig.hpp"

namespace fs = std::filesystem;
using namespace promptstream;

namespace {

RunConfig load_config_or_default(const std::string& path, std::optional<uint64_t> seed_override) {
    RunConfig cfg = path.empty() ? RunConfig{} : load_run_config(path);
    if (seed_override) {
        cfg.trainer.seed = *seed_override;
        cfg.data.seed = *seed_override;
    }
    log::info("resolved config: ", run_config_to_json(cfg).dump());
    return cfg;
}

std::string sibling(const std::string& manifest_path, const std::string& name) {
    return (fs::path(manifest_path).parent_path() / name).string();
}

int cmd_generate(const RunConfig& cfg, const std::string& out_dir) {
    fs::create_directories(out_dir);
    GeneratedSplits splits = generate_synthetic(cfg.data);

    DatasetManifest manifest;
    manifest.spec = cfg.data;
    manifest.spec_hash = synthetic_spec_hash(cfg.data);
    manifest.pretrain_path = "pretrain.jsonl";
    write_jsonl(splits.pretrain, (fs::path(out_dir) / manifest.pretrain_path).string());
    for (int t = 1; t <= kNumTasks; ++t) {
        manifest.train_paths[t - 1] = "task" + std::to_string(t) + "_train.jsonl";
        manifest.test_paths[t - 1] = "task" + std::to_string(t) + "_test.jsonl";
        write_jsonl(splits.task_train[t - 1], (fs::path(out_dir) / manifest.train_paths[t - 1]).string());
        write_jsonl(splits.task_test[t - 1], (fs::path(out_dir) / manifest.test_paths[t - 1]).string());
    }
    write_manifest(manifest, (fs::path(out_dir) / "manifest.json").string());
    std::cout << "spec hash " << manifest.spec_hash << "\n";
    std::cout << "wrote 1 pretrain split and " << kNumTasks << " task train/test pairs to " << out_dir
              << "\n";
    return kExitOk;
}

int cmd_pretrain(const RunConfig& cfg, const std::string& manifest_path, const std::string& out_path) {
    DatasetManifest manifest = load_manifest(manifest_path);
    Dataset pretrain_split =
        load_jsonl(sibling(manifest_path, manifest.pretrain_path), cfg.backbone.input_dims);

    Rng rng(cfg.trainer.seed);
    Backbone backbone(cfg.backbone, rng);
    PretrainResult result = pretrain(backbone, pretrain_split, cfg.pretrain_epochs, cfg.trainer.lr,
                                     cfg.trainer.batch_size, cfg.loss_kind, rng);
    for (size_t e = 0; e < result.epoch_losses.size(); ++e) {
        log::info("pretrain epoch ", e + 1, "/", result.epoch_losses.size(), " loss ",
                  result.epoch_losses[e]);
    }
    checkpoint::save(backbone.params(), out_path);
    std::cout << "checkpoint written to " << out_path << " (" << backbone.params().count_values()
              << " values)\n";
    return kExitOk;
}

std::vector<StreamEntry> load_stream(const RunConfig& cfg, const std::string& manifest_path) {
    DatasetManifest manifest = load_manifest(manifest_path);
    std::vector<StreamEntry> stream;
    for (int task_id : cfg.stream_order) {
        StreamEntry e;
        e.task_id = task_id;
        e.train = load_jsonl(sibling(manifest_path, manifest.train_paths[task_id - 1]),
                             cfg.backbone.input_dims);
        e.test = load_jsonl(sibling(manifest_path, manifest.test_paths[task_id - 1]),
                            cfg.backbone.input_dims);
        stream.push_back(std::move(e));
    }
    return stream;
}

void print_summary(const RunRecord& rec) {
    std::cout << "| method | AA (up) | FM (down) |\n|---|---|---|\n";
    char aa[32], fm[32];
    std::snprintf(aa, sizeof(aa), "%.2f", 100.0 * rec.aa);
    if (rec.fm) {
        std::snprintf(fm, sizeof(fm), "%.2f", 100.0 * *rec.fm);
    } else {
        std::snprintf(fm, sizeof(fm), "n/a");
    }
    std::cout << "| " << rec.mode << " | " << aa << " | " << fm << " |\n";
}

int cmd_train_stream(RunConfig cfg, const std::vector<std::string>& ablations,
                     const std::string& manifest_path, const std::string& checkpoint_path,
                     const std::string& out_path) {
    for (const std::string& spec : ablations) {
        log::info("applying ablation ", spec);
        apply_ablation(cfg, spec);
    }
    std::vector<StreamEntry> stream = load_stream(cfg, manifest_path);

    Rng rng(cfg.trainer.seed);
    Backbone backbone(cfg.backbone, rng);
    checkpoint::load_into(backbone.params(), checkpoint_path);

    const bool with_prompts =
        cfg.trainer.mode == RunMode::kOurs || cfg.trainer.mode == RunMode::kUpperboundOurs;
    std::optional<PromptPool> pool;
    if (with_prompts) pool.emplace(cfg.prompts, cfg.make_schedule(), rng);

    ContinualTrainer trainer(backbone, pool ? &*pool : nullptr, cfg.make_schedule(), cfg.loss,
                             cfg.trainer, cfg.loss_kind, rng);
    RunRecord rec;
    if (cfg.trainer.mode == RunMode::kUpperbound || cfg.trainer.mode == RunMode::kUpperboundOurs) {
        rec = trainer.run_iid(stream);
    } else {
        rec = trainer.run_stream(stream);
    }
    rec.config_snapshot = run_config_to_json(cfg);
    save_run_record(rec, out_path);

    print_summary(rec);
    if (cfg.trainer.mode == RunMode::kOurs) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.4f", rec.trainable_ratio);
        std::cout << "trainable/backbone parameter ratio: " << buf << " ("
                  << rec.trainable_param_count << "/" << rec.backbone_param_count << ")\n";
    }
    std::cout << "run record written to " << out_path << "\n";
    return kExitOk;
}

int cmd_report(const std::vector<std::string>& record_paths, const std::string& out_prefix) {
    std::vector<RunRecord> records;
    for (const std::string& p : record_paths) records.push_back(load_run_record(p));
    const std::string table = render_report_table(records);
    std::cout << table;
    if (!out_prefix.empty()) {
        std::ofstream md(out_prefix + ".md", std::ios::binary);
        if (!md) throw IoError("report: cannot write " + out_prefix + ".md");
        md << table;
        for (size_t k = 0; k < records.size(); ++k) {
            if (!records[k].has_matrix) continue;
            const std::string csv_path = out_prefix + "_matrix" + std::to_string(k + 1) + ".csv";
            std::ofstream csv(csv_path, std::ios::binary);
            if (!csv) throw IoError("report: cannot write " + csv_path);
            csv << render_matrix_csv(records[k]);
        }
        std::cout << "report written to " << out_prefix << ".md\n";
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"continual prompt tuning for missing-modality streams"};
    app.require_subcommand(1);

    std::string config_path, out_path, manifest_path, checkpoint_path, mode_str;
    std::optional<uint64_t> seed;
    std::vector<std::string> ablations;
    std::vector<std::string> record_paths;

    CLI::App* generate = app.add_subcommand("generate", "generate the synthetic benchmark splits");
    generate->add_option("--config", config_path, "run config JSON");
    generate->add_option("--out", out_path, "output directory")->required();
    generate->add_option("--seed", seed, "override data seed");

    CLI::App* pre = app.add_subcommand("pretrain", "train the backbone on complete-modality data");
    pre->add_option("--config", config_path, "run config JSON");
    pre->add_option("--data", manifest_path, "dataset manifest")->required();
    pre->add_option("--out", out_path, "checkpoint output path")->required();
    pre->add_option("--seed", seed, "override trainer seed");

    CLI::App* train = app.add_subcommand("train-stream", "run the continual (or i.i.d) protocol");
    train->add_option("--config", config_path, "run config JSON");
    train->add_option("--data", manifest_path, "dataset manifest")->required();
    train->add_option("--checkpoint", checkpoint_path, "pretrained backbone checkpoint")->required();
    train->add_option("--mode", mode_str, "ours|lowerbound|upperbound|upperbound-ours");
    train->add_option("--out", out_path, "run record output path")->required();
    train->add_option("--seed", seed, "override trainer seed");
    train->add_option("--ablate", ablations, "ablation spec, e.g. prompts=MS,TA or length=8");

    CLI::App* report = app.add_subcommand("report", "merge run records into a comparison report");
    report->add_option("records", record_paths, "run record files")->required();
    report->add_option("--out", out_path, "output prefix for .md and .csv files");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (app.got_subcommand(report)) return cmd_report(record_paths, out_path);
        RunConfig cfg = load_config_or_default(config_path, seed);
        if (!mode_str.empty()) cfg.trainer.mode = mode_from_string(mode_str);
        if (app.got_subcommand(generate)) return cmd_generate(cfg, out_path);
        if (app.got_subcommand(pre)) return cmd_pretrain(cfg, manifest_path, out_path);
        if (app.got_subcommand(train)) {
            return cmd_train_stream(cfg, ablations, manifest_path, checkpoint_path, out_path);
        }
        return kExitUsage;
    } catch (const ConfigError& e) {
        log::error(e.what());
        return kExitConfig;
    } catch (const IoError& e) {
        log::error(e.what());
        return kExitIo;
    } catch (const ContractError& e) {
        log::error(e.what());
        return kExitContract;
    } catch (const DimensionError& e) {
        log::error(e.what());
        return kExitContract;
    } catch (const DomainError& e) {
        log::error(e.what());
        return kExitContract;
    } catch (const std::exception& e) {
        log::error("internal error: ", e.what());
        return kExitInternal;
    }
}
