#include "promptstream/data.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "promptstream/errors.hpp"

namespace promptstream {

using nlohmann::json;

namespace {

constexpr const char* kModalityNames[kNumModalities] = {"audio", "video", "text"};

json spec_to_json(const SyntheticSpec& s) {
    return json{{"num_classes", s.num_classes},
                {"pretrain_samples", s.pretrain_samples},
                {"train_per_task", s.train_per_task},
                {"test_per_task", s.test_per_task},
                {"seq_lens", s.seq_lens},
                {"input_dims", s.input_dims},
                {"center_scale", s.center_scale},
                {"noise_scale", s.noise_scale},
                {"modality_weights", s.modality_weights},
                {"seed", s.seed}};
}

SyntheticSpec spec_from_json(const json& j) {
    SyntheticSpec s;
    s.num_classes = j.at("num_classes").get<int>();
    s.pretrain_samples = j.at("pretrain_samples").get<int>();
    s.train_per_task = j.at("train_per_task").get<int>();
    s.test_per_task = j.at("test_per_task").get<int>();
    s.seq_lens = j.at("seq_lens").get<std::array<int, kNumModalities>>();
    s.input_dims = j.at("input_dims").get<std::array<int, kNumModalities>>();
    s.center_scale = j.at("center_scale").get<double>();
    s.noise_scale = j.at("noise_scale").get<double>();
    s.modality_weights = j.at("modality_weights").get<std::array<double, kNumModalities>>();
    s.seed = j.at("seed").get<uint64_t>();
    return s;
}

json matrix_to_json(const FeatureMatrix& m) {
    json rows = json::array();
    for (int r = 0; r < m.rows; ++r) {
        json row = json::array();
        for (int c = 0; c < m.cols; ++c) row.push_back(m.at(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

FeatureMatrix matrix_from_json(const json& j, const char* field, int line) {
    if (!j.is_array() || j.empty()) {
        throw IoError("jsonl line " + std::to_string(line) + ": field '" + field +
                      "' must be a non-empty array of rows");
    }
    FeatureMatrix m;
    m.rows = static_cast<int>(j.size());
    m.cols = static_cast<int>(j.at(0).size());
    m.values.reserve(static_cast<size_t>(m.rows) * m.cols);
    for (const auto& row : j) {
        if (!row.is_array() || static_cast<int>(row.size()) != m.cols) {
            throw IoError("jsonl line " + std::to_string(line) + ": field '" + field +
                          "' has ragged rows");
        }
        for (const auto& v : row) {
            if (!v.is_number()) {
                throw IoError("jsonl line " + std::to_string(line) + ": field '" + field +
                              "' has a non-numeric entry");
            }
            m.values.push_back(v.get<double>());
        }
    }
    return m;
}

MissingPattern infer_pattern(const Sample& s) {
    MissingPattern p;
    p.audio_missing = s.features[0].all_zero();
    p.video_missing = s.features[1].all_zero();
    p.text_missing = s.features[2].all_zero();
    if (p.audio_missing && p.video_missing && p.text_missing) return MissingPattern{};
    return p;
}

}  // namespace

bool FeatureMatrix::all_zero() const {
    return std::all_of(values.begin(), values.end(), [](double v) { return v == 0.0; });
}

GeneratedSplits generate_synthetic(const SyntheticSpec& spec) {
    if (spec.num_classes < 2) throw ConfigError("generate_synthetic: num_classes must be >= 2");
    if (spec.noise_scale < 0) throw ConfigError("generate_synthetic: noise_scale must be >= 0");
    for (double w : spec.modality_weights) {
        if (w <= 0) throw ConfigError("generate_synthetic: modality weights must be positive");
    }

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> unit(0.0, 1.0);

    // One center matrix per (class, modality).
    std::vector<std::array<FeatureMatrix, kNumModalities>> centers(spec.num_classes);
    for (int c = 0; c < spec.num_classes; ++c) {
        for (int m = 0; m < kNumModalities; ++m) {
            FeatureMatrix& fm = centers[c][m];
            fm.rows = spec.seq_lens[m];
            fm.cols = spec.input_dims[m];
            fm.values.resize(static_cast<size_t>(fm.rows) * fm.cols);
            const double s = spec.center_scale * spec.modality_weights[m];
            for (double& v : fm.values) v = s * unit(rng);
        }
    }

    auto draw_sample = [&](const std::string& id, int cls) {
        Sample s;
        s.id = id;
        s.label = static_cast<double>(cls);
        for (int m = 0; m < kNumModalities; ++m) {
            const FeatureMatrix& center = centers[cls][m];
            FeatureMatrix& fm = s.features[m];
            fm.rows = center.rows;
            fm.cols = center.cols;
            fm.values.resize(center.values.size());
            for (size_t i = 0; i < fm.values.size(); ++i) {
                fm.values[i] = center.values[i] + spec.noise_scale * unit(rng);
            }
        }
        return s;
    };

    GeneratedSplits out;
    for (int i = 0; i < spec.pretrain_samples; ++i) {
        out.pretrain.samples.push_back(
            draw_sample("pretrain-" + std::to_string(i), i % spec.num_classes));
    }
    for (int t = 1; t <= kNumTasks; ++t) {
        const MissingPattern pattern = pattern_from_task_id(t);
        Dataset& train = out.task_train[t - 1];
        Dataset& test = out.task_test[t - 1];
        for (int i = 0; i < spec.train_per_task; ++i) {
            Sample s = draw_sample("task" + std::to_string(t) + "-train-" + std::to_string(i),
                                   i % spec.num_classes);
            train.samples.push_back(apply_missing_pattern(std::move(s), pattern));
        }
        for (int i = 0; i < spec.test_per_task; ++i) {
            Sample s = draw_sample("task" + std::to_string(t) + "-test-" + std::to_string(i),
                                   i % spec.num_classes);
            test.samples.push_back(apply_missing_pattern(std::move(s), pattern));
        }
    }
    return out;
}

Sample apply_missing_pattern(Sample sample, const MissingPattern& pattern) {
    if (pattern.audio_missing && pattern.video_missing && pattern.text_missing) {
        throw DomainError("apply_missing_pattern: all modalities missing");
    }
    for (int m = 0; m < kNumModalities; ++m) {
        if (pattern.missing(m)) {
            std::fill(sample.features[m].values.begin(), sample.features[m].values.end(), 0.0);
        }
    }
    sample.pattern = pattern;
    return sample;
}

Dataset load_jsonl(const std::string& path,
                   const std::optional<std::array<int, kNumModalities>>& expected_dims) {
    std::ifstream in(path);
    if (!in) throw IoError("load_jsonl: cannot open: " + path);
    Dataset out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw IoError("load_jsonl: " + path + " line " + std::to_string(line_no) + ": " + e.what());
        }
        Sample s;
        try {
            s.id = j.at("id").get<std::string>();
            s.label = j.at("label").get<double>();
        } catch (const json::exception& e) {
            throw IoError("load_jsonl: " + path + " line " + std::to_string(line_no) + ": " + e.what());
        }
        for (int m = 0; m < kNumModalities; ++m) {
            if (!j.contains(kModalityNames[m])) {
                throw IoError("jsonl line " + std::to_string(line_no) + ": missing field '" +
                              kModalityNames[m] + "'");
            }
            s.features[m] = matrix_from_json(j.at(kModalityNames[m]), kModalityNames[m], line_no);
            if (expected_dims && s.features[m].cols != (*expected_dims)[m]) {
                throw IoError("jsonl line " + std::to_string(line_no) + ": field '" +
                              kModalityNames[m] + "' has width " + std::to_string(s.features[m].cols) +
                              ", expected " + std::to_string((*expected_dims)[m]));
            }
        }
        s.pattern = infer_pattern(s);
        out.samples.push_back(std::move(s));
    }
    return out;
}

void write_jsonl(const Dataset& dataset, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("write_jsonl: cannot open for writing: " + path);
    for (const Sample& s : dataset.samples) {
        json j{{"id", s.id}, {"label", s.label}};
        for (int m = 0; m < kNumModalities; ++m) j[kModalityNames[m]] = matrix_to_json(s.features[m]);
        out << j.dump() << "\n";
    }
    if (!out) throw IoError("write_jsonl: write failed: " + path);
}

std::string synthetic_spec_hash(const SyntheticSpec& spec) {
    const std::string payload = spec_to_json(spec).dump();
    uint64_t h = 1469598103934665603ull;  // FNV-1a
    for (unsigned char c : payload) {
        h ^= c;
        h *= 1099511628211ull;
    }
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

void write_manifest(const DatasetManifest& manifest, const std::string& path) {
    json j{{"schema", "DSM1"},
           {"spec", spec_to_json(manifest.spec)},
           {"spec_hash", manifest.spec_hash},
           {"pretrain", manifest.pretrain_path},
           {"train", manifest.train_paths},
           {"test", manifest.test_paths}};
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("write_manifest: cannot open for writing: " + path);
    out << j.dump(2) << "\n";
}

DatasetManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("load_manifest: cannot open: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw IoError("load_manifest: " + path + ": " + e.what());
    }
    if (j.value("schema", "") != "DSM1") throw IoError("load_manifest: unknown schema in " + path);
    DatasetManifest m;
    m.spec = spec_from_json(j.at("spec"));
    m.spec_hash = j.at("spec_hash").get<std::string>();
    m.pretrain_path = j.at("pretrain").get<std::string>();
    m.train_paths = j.at("train").get<std::array<std::string, kNumTasks>>();
    m.test_paths = j.at("test").get<std::array<std::string, kNumTasks>>();
    return m;
}

}  // namespace promptstream
