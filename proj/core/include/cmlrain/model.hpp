#pragma once

#include <map>
#include <string>
#include <vector>

#include "cmlrain/autodiff.hpp"
#include "cmlrain/rng.hpp"

namespace cmlrain {

enum class ModelKind { TabGRU, RNN, GRU, BiGRU, Transformer, TransGRU };

std::string kind_name(ModelKind k);
ModelKind kind_from_name(const std::string& s);
const std::vector<ModelKind>& all_model_kinds();

struct ModelSpec {
  ModelKind kind = ModelKind::TabGRU;
  int d_model = 64;
  int n_heads = 4;
  int n_encoder_layers = 3;
  int gru_hidden = 64;
  int gru_layers = 1;
  double dropout = 0.3;
  int window_len = 30;
  int n_features = 0;  // filled in from the dataset

  bool has_encoder() const {
    return kind == ModelKind::TabGRU || kind == ModelKind::Transformer ||
           kind == ModelKind::TransGRU;
  }
  void validate() const;  // d_model % n_heads == 0, ranges
};

std::string model_spec_to_json(const ModelSpec& spec);
ModelSpec model_spec_from_json(const std::string& json);

// Canonical parameter list; shapes are a pure function of the spec.
std::vector<std::pair<std::string, std::vector<int>>> param_shapes(
    const ModelSpec& spec);
int64_t param_count(const ModelSpec& spec);

struct ModelParams {
  ModelSpec spec;
  std::map<std::string, ad::NodePtr> tensors;

  const ad::NodePtr& at(const std::string& name) const;
  std::vector<std::pair<std::string, ad::NodePtr>> ordered() const;
  ModelParams clone() const;  // deep copy of values, fresh leaves
  void zero_grad() const;
};

// Uniform +-sqrt(1/fan_in) for matrices, zeros for biases and the
// positional matrix, ones for layer-norm gains.
ModelParams init_params(const ModelSpec& spec, uint64_t seed);

// --- layers (exposed for layer-wise gradient checks) -----------------------

// Affine map shared across time steps: [BxLxF] -> [BxLxd_model].
ad::NodePtr input_project(const ModelParams& p, const ad::NodePtr& x);
// X + P with P in R^{1 x L x d_model} broadcast over the batch.
ad::NodePtr add_positional(const ModelParams& p, const ad::NodePtr& x);
// Scaled dot-product attention per head over the full window (no causal
// mask), heads concatenated and projected. Per-row attention weights are
// appended to *attn when requested.
ad::NodePtr multi_head_attention(const ModelParams& p, int layer,
                                 const ad::NodePtr& x,
                                 std::vector<ad::NodePtr>* attn = nullptr);
// Post-norm block: LN(x + MHA(x)) then LN(. + FFN(.)), dropout on each
// sublayer output.
ad::NodePtr encoder_layer(const ModelParams& p, int layer, const ad::NodePtr& x,
                          bool train_mode, Rng* rng);
// [BxLxin] -> [BxLx2H]; forward and reverse passes concatenated per step.
ad::NodePtr bigru(const ModelParams& p, int layer, const ad::NodePtr& x);
// Unidirectional GRU, [BxLxin] -> [BxLxH].
ad::NodePtr gru_forward(const ModelParams& p, int layer, const ad::NodePtr& x);
// Softmax-weighted aggregation over time: [BxLxD] -> [BxD]. The weights
// (alpha, [BxLx1]) are written to *alpha when requested.
ad::NodePtr attention_pool(const ModelParams& p, const ad::NodePtr& x,
                           ad::NodePtr* alpha = nullptr);

// Full forward pass: [B x window_len x n_features] -> [B] mm/h (softplus
// keeps predictions non-negative). rng is only consulted when train_mode
// enables dropout.
ad::NodePtr model_forward(const ModelParams& p, const ad::NodePtr& x,
                          bool train_mode, Rng* rng = nullptr);

// Checkpoint = every named tensor in the bundle format + the spec as JSON.
// Loading validates all shapes against the spec.
void save_checkpoint(const std::string& path, const ModelParams& p);
ModelParams load_checkpoint(const std::string& path);

}  // namespace cmlrain
