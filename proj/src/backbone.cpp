#include "promptstream/backbone.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "promptstream/errors.hpp"
#include "promptstream/losses.hpp"

namespace promptstream {

namespace {

constexpr const char* kStreamNames[kNumModalities] = {"a", "v", "t"};

Tensor xavier(int fan_in, int fan_out, Rng& rng) {
    Tensor t = Tensor::zeros({fan_in, fan_out});
    fill_normal(t, rng, std::sqrt(2.0 / (fan_in + fan_out)));
    return t;
}

Tensor affine_norm(const Tensor& h, const Tensor& gain, const Tensor& bias) {
    return ops::add(ops::broadcast_mul_vector(gain, ops::layer_norm(h)), bias);
}

}  // namespace

void BackboneConfig::validate() const {
    if (hidden_dim < 1 || num_layers < 1 || num_heads < 1) {
        throw ConfigError("backbone config: dimensions must be positive");
    }
    if (hidden_dim % num_heads != 0) {
        throw ConfigError("backbone config: num_heads " + std::to_string(num_heads) +
                          " must divide hidden_dim " + std::to_string(hidden_dim));
    }
    if (!regression && num_classes < 2) {
        throw ConfigError("backbone config: num_classes must be >= 2 for classification");
    }
    for (int d : input_dims) {
        if (d < 1) throw ConfigError("backbone config: input dims must be positive");
    }
}

Tensor MsaBlock::forward(const Tensor& h) const {
    const int d = ln1_gain.shape()[0];
    if (h.rank() != 2 || h.shape()[1] != d) {
        throw DimensionError("msa block: expected [seq," + std::to_string(d) + "], got " +
                             shape_to_string(h.shape()));
    }
    Tensor x = affine_norm(h, ln1_gain, ln1_bias);
    Tensor q = ops::add(ops::matmul(x, wq), bq);
    Tensor k = ops::add(ops::matmul(x, wk), bk);
    Tensor v = ops::add(ops::matmul(x, wv), bv);

    const int head_dim = d / num_heads;
    const double att_scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
    std::vector<Tensor> heads;
    heads.reserve(num_heads);
    for (int hd = 0; hd < num_heads; ++hd) {
        const int c0 = hd * head_dim, c1 = c0 + head_dim;
        Tensor qh = ops::slice(q, 1, c0, c1);
        Tensor kh = ops::slice(k, 1, c0, c1);
        Tensor vh = ops::slice(v, 1, c0, c1);
        Tensor weights = ops::softmax(ops::scale(ops::matmul(qh, ops::transpose(kh)), att_scale));
        heads.push_back(ops::matmul(weights, vh));
    }
    Tensor attn = ops::add(ops::matmul(ops::concat(heads, 1), wo), bo);
    Tensor h1 = ops::add(h, attn);

    Tensor y = affine_norm(h1, ln2_gain, ln2_bias);
    Tensor f = ops::gelu(ops::add(ops::matmul(y, ffn_w1), ffn_b1));
    f = ops::add(ops::matmul(f, ffn_w2), ffn_b2);
    return ops::add(h1, f);
}

MsaBlock Backbone::make_block(const std::string& prefix, Rng& rng) {
    const int d = config_.hidden_dim;
    const int ff = config_.ffn_multiple * d;
    MsaBlock b;
    b.num_heads = config_.num_heads;
    b.ln1_gain = params_.add(prefix + "/ln1/g", Tensor::full({d}, 1.0)).tensor;
    b.ln1_bias = params_.add(prefix + "/ln1/b", Tensor::zeros({d})).tensor;
    b.wq = params_.add(prefix + "/attn/wq", xavier(d, d, rng)).tensor;
    b.bq = params_.add(prefix + "/attn/bq", Tensor::zeros({d})).tensor;
    b.wk = params_.add(prefix + "/attn/wk", xavier(d, d, rng)).tensor;
    b.bk = params_.add(prefix + "/attn/bk", Tensor::zeros({d})).tensor;
    b.wv = params_.add(prefix + "/attn/wv", xavier(d, d, rng)).tensor;
    b.bv = params_.add(prefix + "/attn/bv", Tensor::zeros({d})).tensor;
    b.wo = params_.add(prefix + "/attn/wo", xavier(d, d, rng)).tensor;
    b.bo = params_.add(prefix + "/attn/bo", Tensor::zeros({d})).tensor;
    b.ln2_gain = params_.add(prefix + "/ln2/g", Tensor::full({d}, 1.0)).tensor;
    b.ln2_bias = params_.add(prefix + "/ln2/b", Tensor::zeros({d})).tensor;
    b.ffn_w1 = params_.add(prefix + "/ffn/w1", xavier(d, ff, rng)).tensor;
    b.ffn_b1 = params_.add(prefix + "/ffn/b1", Tensor::zeros({ff})).tensor;
    b.ffn_w2 = params_.add(prefix + "/ffn/w2", xavier(ff, d, rng)).tensor;
    b.ffn_b2 = params_.add(prefix + "/ffn/b2", Tensor::zeros({d})).tensor;
    return b;
}

Backbone::Backbone(const BackboneConfig& config, Rng& rng) : config_(config) {
    config_.validate();
    const int d = config_.hidden_dim;
    for (int m = 0; m < kNumModalities; ++m) {
        const std::string base = std::string("backbone/") + kStreamNames[m];
        Stream& s = streams_[m];
        s.proj_w = params_.add(base + "/proj/w", xavier(config_.input_dims[m], d, rng)).tensor;
        s.proj_b = params_.add(base + "/proj/b", Tensor::zeros({d})).tensor;
        for (int l = 0; l < config_.num_layers; ++l) {
            s.blocks.push_back(make_block(base + "/layer" + std::to_string(l), rng));
        }
    }
    fusion_w = params_.add("fusion/w", xavier(kNumModalities * d, config_.output_dim(), rng)).tensor;
    fusion_b = params_.add("fusion/b", Tensor::zeros({config_.output_dim()})).tensor;
}

Tensor Backbone::forward(const Sample& sample, const PromptContext* prompts,
                         ActivationCapture* capture) const {
    std::vector<Tensor> pooled;
    pooled.reserve(kNumModalities);
    for (int m = 0; m < kNumModalities; ++m) {
        const FeatureMatrix& fm = sample.features[m];
        if (fm.rows < 1 || fm.cols != config_.input_dims[m]) {
            throw DimensionError(std::string("backbone forward: modality ") + kStreamNames[m] +
                                 " has shape [" + std::to_string(fm.rows) + "," +
                                 std::to_string(fm.cols) + "], expected width " +
                                 std::to_string(config_.input_dims[m]));
        }
        const Stream& s = streams_[m];
        Tensor h = ops::add(ops::matmul(Tensor::from_data({fm.rows, fm.cols}, fm.values), s.proj_w),
                            s.proj_b);
        for (int l = 0; l < config_.num_layers; ++l) {
            Tensor prompt;
            if (prompts) {
                if (static_cast<int>(prompts->per_layer[m].size()) != config_.num_layers) {
                    throw ConfigError("backbone forward: prompt context covers " +
                                      std::to_string(prompts->per_layer[m].size()) + " layers, backbone has " +
                                      std::to_string(config_.num_layers));
                }
                prompt = prompts->per_layer[m][l];
            }
            if (prompt.defined()) {
                const int rows = h.shape()[0];
                const int prompt_rows = prompt.shape()[0];
                Tensor out = s.blocks[l].forward(ops::concat({prompt, h}, 0));
                h = config_.propagate_prompts ? out : ops::slice(out, 0, prompt_rows, prompt_rows + rows);
            } else {
                h = s.blocks[l].forward(h);
            }
            if (capture) capture->layers[m].push_back(h.data());
        }
        pooled.push_back(ops::mean(h, 0));
    }
    Tensor joint = ops::reshape(ops::concat(pooled, 0), {1, kNumModalities * config_.hidden_dim});
    Tensor logits = ops::add(ops::matmul(joint, fusion_w), fusion_b);
    return ops::reshape(logits, {config_.output_dim()});
}

std::vector<Parameter*> Backbone::all_params() {
    std::vector<Parameter*> out;
    out.reserve(params_.size());
    for (Parameter& p : params_.items()) out.push_back(&p);
    return out;
}

PretrainResult pretrain(Backbone& backbone, const Dataset& dataset, int epochs, double lr,
                        int batch_size, TaskLossKind loss_kind, Rng& rng) {
    if (dataset.empty()) throw ContractError("pretrain: empty dataset");
    if (batch_size < 1) throw ConfigError("pretrain: batch_size must be positive");
    for (const Sample& s : dataset.samples) {
        if (!s.pattern.complete()) {
            throw ContractError("pretrain: sample " + s.id +
                                " has missing modalities; pretraining expects complete data");
        }
    }
    backbone.params().set_all_trainable(true);
    Adam opt(backbone.all_params(), AdamConfig{lr, 0.9, 0.999, 1e-8});

    PretrainResult result;
    std::vector<size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), 0);
    for (int epoch = 0; epoch < epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        for (size_t start = 0; start < order.size(); start += batch_size) {
            const size_t stop = std::min(order.size(), start + batch_size);
            const double inv = 1.0 / static_cast<double>(stop - start);
            for (size_t k = start; k < stop; ++k) {
                const Sample& s = dataset.samples[order[k]];
                Tensor loss = task_loss(backbone.forward(s), s.label, loss_kind);
                epoch_loss += loss.value();
                ops::scale(loss, inv).backward();
            }
            opt.step();
        }
        result.epoch_losses.push_back(epoch_loss / static_cast<double>(dataset.size()));
    }
    return result;
}

}  // namespace promptstream
