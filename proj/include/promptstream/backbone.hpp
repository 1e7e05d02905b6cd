#pragma once

#include <array>
#include <string>
#include <vector>

#include "promptstream/data.hpp"
#include "promptstream/optim.hpp"
#include "promptstream/prompts.hpp"
#include "promptstream/tensor.hpp"

namespace promptstream {

struct BackboneConfig {
    std::array<int, kNumModalities> input_dims = {20, 35, 50};
    int hidden_dim = 30;
    int num_layers = 10;
    int num_heads = 3;  // must divide hidden_dim
    int ffn_multiple = 4;
    int num_classes = 4;
    bool regression = false;   // single-output head trained with L1
    bool propagate_prompts = false;  // keep prompt rows in block outputs

    int output_dim() const { return regression ? 1 : num_classes; }
    void validate() const;
};

// One pre-norm transformer block: h + MHSA(LN(h)), then + FFN(LN(.)).
// No positional encodings anywhere, so blocks are permutation-equivariant
// over rows.
struct MsaBlock {
    Tensor ln1_gain, ln1_bias;
    Tensor wq, bq, wk, bk, wv, bv, wo, bo;
    Tensor ln2_gain, ln2_bias;
    Tensor ffn_w1, ffn_b1, ffn_w2, ffn_b2;
    int num_heads = 1;

    Tensor forward(const Tensor& h) const;
};

// Copies of every layer output per modality, for locality checks.
struct ActivationCapture {
    std::array<std::vector<std::vector<double>>, kNumModalities> layers;
};

// Frozen-capable multimodal transformer: per-modality projection, L blocks
// per modality with prompt injection points, mean-pool + concat + linear
// fusion head. All weights live in the ParameterSet; the trainable flag is
// flipped per phase (pretraining trains everything, the continual phase
// freezes the lot).
class Backbone {
  public:
    Backbone(const BackboneConfig& config, Rng& rng);

    const BackboneConfig& config() const { return config_; }
    ParameterSet& params() { return params_; }
    const ParameterSet& params() const { return params_; }

    // Missing modalities must already be zero-filled. Prompt rows are
    // prepended before each scheduled block and dropped from its output
    // unless propagate_prompts is set. Returns [output_dim] logits.
    Tensor forward(const Sample& sample, const PromptContext* prompts = nullptr,
                   ActivationCapture* capture = nullptr) const;

    std::vector<Parameter*> all_params();

  private:
    struct Stream {
        Tensor proj_w, proj_b;
        std::vector<MsaBlock> blocks;
    };

    BackboneConfig config_;
    ParameterSet params_;
    std::array<Stream, kNumModalities> streams_;
    Tensor fusion_w, fusion_b;

    MsaBlock make_block(const std::string& prefix, Rng& rng);
};

enum class TaskLossKind { kCrossEntropy, kL1Regression };

// Full-parameter training on complete-modality data, task loss only, no
// prompts. The product is what the continual phase later freezes.
struct PretrainResult {
    std::vector<double> epoch_losses;
};

PretrainResult pretrain(Backbone& backbone, const Dataset& dataset, int epochs, double lr,
                        int batch_size, TaskLossKind loss_kind, Rng& rng);

}  // namespace promptstream
