#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "promptstream/pattern.hpp"

namespace promptstream {

// Plain row-major feature matrix (no tape participation).
struct FeatureMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> values;

    double at(int r, int c) const { return values[static_cast<size_t>(r) * cols + c]; }
    bool all_zero() const;
};

struct Sample {
    std::string id;
    double label = 0.0;  // class index for classification, real score for regression
    std::array<FeatureMatrix, kNumModalities> features;  // audio, video, text
    MissingPattern pattern;
};

struct Dataset {
    std::vector<Sample> samples;
    bool empty() const { return samples.empty(); }
    size_t size() const { return samples.size(); }
};

struct SyntheticSpec {
    int num_classes = 4;
    int pretrain_samples = 600;
    int train_per_task = 200;
    int test_per_task = 100;
    std::array<int, kNumModalities> seq_lens = {8, 12, 10};
    std::array<int, kNumModalities> input_dims = {20, 35, 50};
    double center_scale = 0.6;
    double noise_scale = 1.0;
    std::array<double, kNumModalities> modality_weights = {1.0, 0.8, 0.9};
    uint64_t seed = 12345;
};

struct GeneratedSplits {
    Dataset pretrain;  // complete modalities
    std::array<Dataset, kNumTasks> task_train;  // patterns applied, task ids 1..7 at index id-1
    std::array<Dataset, kNumTasks> task_test;
};

// Per class, one set of per-modality center matrices is drawn from the seeded
// stream; each sample is its class center plus Gaussian noise. Modality m's
// center magnitude is scaled by modality_weights[m] so every modality is
// predictive on its own while the ensemble is stronger. Classes are assigned
// round-robin, so per-class counts in a split differ by at most one.
GeneratedSplits generate_synthetic(const SyntheticSpec& spec);

// Zero-fills the modalities flagged missing and records the pattern.
// Idempotent; throws DomainError for the all-missing pattern.
Sample apply_missing_pattern(Sample sample, const MissingPattern& pattern);

// JSONL schema (one object per line):
//   {"id": str, "label": number, "audio": [[...]], "video": [[...]], "text": [[...]]}
Dataset load_jsonl(const std::string& path,
                   const std::optional<std::array<int, kNumModalities>>& expected_dims = {});
void write_jsonl(const Dataset& dataset, const std::string& path);

// Dataset manifest: generator spec, its hash, and the split file paths.
struct DatasetManifest {
    SyntheticSpec spec;
    std::string spec_hash;
    std::string pretrain_path;
    std::array<std::string, kNumTasks> train_paths;
    std::array<std::string, kNumTasks> test_paths;
};

std::string synthetic_spec_hash(const SyntheticSpec& spec);
void write_manifest(const DatasetManifest& manifest, const std::string& path);
DatasetManifest load_manifest(const std::string& path);

}  // namespace promptstream
