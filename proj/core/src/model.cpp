#include "cmlrain/model.hpp"

#include <cmath>

#include "cmlrain/errors.hpp"
#include "cmlrain/tensor_io.hpp"
#include "json.hpp"

namespace cmlrain {

using ad::NodePtr;

std::string kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::TabGRU: return "TabGRU";
    case ModelKind::RNN: return "RNN";
    case ModelKind::GRU: return "GRU";
    case ModelKind::BiGRU: return "BiGRU";
    case ModelKind::Transformer: return "Transformer";
    case ModelKind::TransGRU: return "TransGRU";
  }
  return "TabGRU";
}

ModelKind kind_from_name(const std::string& s) {
  for (ModelKind k : all_model_kinds()) {
    if (kind_name(k) == s) return k;
  }
  if (s == "Trans-GRU") return ModelKind::TransGRU;
  throw ConfigInvalid("unknown model kind: " + s);
}

const std::vector<ModelKind>& all_model_kinds() {
  static const std::vector<ModelKind> kinds = {
      ModelKind::TabGRU,      ModelKind::RNN,   ModelKind::GRU,
      ModelKind::BiGRU,       ModelKind::Transformer, ModelKind::TransGRU};
  return kinds;
}

void ModelSpec::validate() const {
  if (d_model < 1) throw ConfigInvalid("d_model must be >= 1");
  if (has_encoder()) {
    if (n_heads < 1) throw ConfigInvalid("n_heads must be >= 1");
    if (d_model % n_heads != 0) {
      throw ConfigInvalid("d_model (" + std::to_string(d_model) +
                          ") must be divisible by n_heads (" +
                          std::to_string(n_heads) + ") so d_k = d_model / h");
    }
    if (n_encoder_layers < 1) throw ConfigInvalid("n_encoder_layers must be >= 1");
  }
  if (gru_hidden < 1) throw ConfigInvalid("gru_hidden must be >= 1");
  if (gru_layers < 1) throw ConfigInvalid("gru_layers must be >= 1");
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigInvalid("dropout must be in [0,1)");
  if (window_len < 1) throw ConfigInvalid("window_len must be >= 1");
  if (n_features < 1) throw ConfigInvalid("n_features must be >= 1");
}

std::string model_spec_to_json(const ModelSpec& spec) {
  nlohmann::json j{{"kind", kind_name(spec.kind)},
                   {"d_model", spec.d_model},
                   {"n_heads", spec.n_heads},
                   {"n_encoder_layers", spec.n_encoder_layers},
                   {"gru_hidden", spec.gru_hidden},
                   {"gru_layers", spec.gru_layers},
                   {"dropout", spec.dropout},
                   {"window_len", spec.window_len},
                   {"n_features", spec.n_features}};
  return j.dump();
}

ModelSpec model_spec_from_json(const std::string& json) {
  nlohmann::json j = nlohmann::json::parse(json);
  ModelSpec s;
  if (j.count("kind")) s.kind = kind_from_name(j.at("kind").get<std::string>());
  auto get_int = [&](const char* key, int& out) {
    if (j.count(key)) out = j.at(key).get<int>();
  };
  get_int("d_model", s.d_model);
  get_int("n_heads", s.n_heads);
  get_int("n_encoder_layers", s.n_encoder_layers);
  get_int("gru_hidden", s.gru_hidden);
  get_int("gru_layers", s.gru_layers);
  get_int("window_len", s.window_len);
  get_int("n_features", s.n_features);
  if (j.count("dropout")) s.dropout = j.at("dropout").get<double>();
  return s;
}

namespace {

bool is_recurrent(ModelKind k) {
  return k != ModelKind::Transformer;
}

bool is_bidirectional(ModelKind k) {
  return k == ModelKind::TabGRU || k == ModelKind::BiGRU;
}

// Width of the vector entering the output head.
int head_input_dim(const ModelSpec& s) {
  switch (s.kind) {
    case ModelKind::TabGRU: return 2 * s.gru_hidden;
    case ModelKind::BiGRU: return 2 * s.gru_hidden;
    case ModelKind::GRU:
    case ModelKind::RNN:
    case ModelKind::TransGRU: return s.gru_hidden;
    case ModelKind::Transformer: return s.d_model;
  }
  return s.gru_hidden;
}

int recurrent_input_dim(const ModelSpec& s, int layer) {
  if (layer == 0) return s.d_model;
  return is_bidirectional(s.kind) ? 2 * s.gru_hidden : s.gru_hidden;
}

}  // namespace

std::vector<std::pair<std::string, std::vector<int>>> param_shapes(
    const ModelSpec& spec) {
  spec.validate();
  std::vector<std::pair<std::string, std::vector<int>>> out;
  const int d = spec.d_model;
  const int h = spec.gru_hidden;

  out.push_back({"in_proj.W", {spec.n_features, d}});
  out.push_back({"in_proj.b", {d}});

  if (spec.has_encoder()) {
    out.push_back({"pos.P", {1, spec.window_len, d}});
    for (int l = 0; l < spec.n_encoder_layers; ++l) {
      std::string p = "enc" + std::to_string(l) + ".";
      out.push_back({p + "attn.Wq", {d, d}});
      out.push_back({p + "attn.Wk", {d, d}});
      out.push_back({p + "attn.Wv", {d, d}});
      out.push_back({p + "attn.Wo", {d, d}});
      out.push_back({p + "ffn.W1", {d, 4 * d}});
      out.push_back({p + "ffn.b1", {4 * d}});
      out.push_back({p + "ffn.W2", {4 * d, d}});
      out.push_back({p + "ffn.b2", {d}});
      out.push_back({p + "ln1.g", {d}});
      out.push_back({p + "ln1.b", {d}});
      out.push_back({p + "ln2.g", {d}});
      out.push_back({p + "ln2.b", {d}});
    }
  }

  if (is_recurrent(spec.kind)) {
    std::vector<std::string> dirs = {"fwd"};
    if (is_bidirectional(spec.kind)) dirs.push_back("bwd");
    for (int l = 0; l < spec.gru_layers; ++l) {
      int in = recurrent_input_dim(spec, l);
      for (const auto& dir : dirs) {
        std::string p =
            (spec.kind == ModelKind::RNN ? "rnn" : "gru") + std::to_string(l) + "." + dir + ".";
        if (spec.kind == ModelKind::RNN) {
          out.push_back({p + "W", {in, h}});
          out.push_back({p + "U", {h, h}});
          out.push_back({p + "b", {h}});
        } else {
          for (const char* gate : {"z", "r", "n"}) {
            out.push_back({p + "W" + gate, {in, h}});
            out.push_back({p + "U" + gate, {h, h}});
            out.push_back({p + "b" + gate, {h}});
          }
        }
      }
    }
  }

  if (spec.kind == ModelKind::TabGRU) {
    out.push_back({"pool.w", {2 * h, 1}});
    out.push_back({"pool.b", {1}});
  }

  out.push_back({"head.W", {head_input_dim(spec), 1}});
  out.push_back({"head.b", {1}});
  return out;
}

int64_t param_count(const ModelSpec& spec) {
  int64_t n = 0;
  for (const auto& [name, shape] : param_shapes(spec)) {
    (void)name;
    n += Tensor::shape_size(shape);
  }
  return n;
}

const NodePtr& ModelParams::at(const std::string& name) const {
  auto it = tensors.find(name);
  if (it == tensors.end()) throw SpecMismatch("missing parameter: " + name);
  return it->second;
}

std::vector<std::pair<std::string, NodePtr>> ModelParams::ordered() const {
  std::vector<std::pair<std::string, NodePtr>> out;
  out.reserve(tensors.size());
  for (const auto& [name, node] : tensors) out.push_back({name, node});
  return out;
}

ModelParams ModelParams::clone() const {
  ModelParams out;
  out.spec = spec;
  for (const auto& [name, node] : tensors) {
    out.tensors.emplace(name, ad::param(node->value));
  }
  return out;
}

void ModelParams::zero_grad() const {
  for (const auto& [name, node] : tensors) {
    (void)name;
    node->zero_grad();
  }
}

ModelParams init_params(const ModelSpec& spec, uint64_t seed) {
  ModelParams p;
  p.spec = spec;
  Rng rng = Rng(seed).split("init");
  for (const auto& [name, shape] : param_shapes(spec)) {
    Tensor t(shape);
    bool is_bias = name.ends_with(".b") || name.ends_with(".b1") ||
                   name.ends_with(".b2") || name.ends_with(".bz") ||
                   name.ends_with(".br") || name.ends_with(".bn");
    if (name.ends_with("ln1.g") || name.ends_with("ln2.g")) {
      for (int64_t i = 0; i < t.size(); ++i) t[i] = 1.0;
    } else if (name == "pos.P" || is_bias || name.ends_with("ln1.b") ||
               name.ends_with("ln2.b")) {
      // zeros
    } else {
      double bound = std::sqrt(1.0 / static_cast<double>(shape.front()));
      for (int64_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-bound, bound);
    }
    p.tensors.emplace(name, ad::param(std::move(t)));
  }
  return p;
}

// --- layers -----------------------------------------------------------------

namespace {

NodePtr affine_3d(const NodePtr& x, const NodePtr& W, const NodePtr& b) {
  return ad::add(ad::matmul(x, W), b);
}

// Stacks per-step [BxH] nodes into [BxLxH].
NodePtr stack_steps(const std::vector<NodePtr>& steps) {
  std::vector<NodePtr> rows;
  rows.reserve(steps.size());
  int b = steps[0]->value.dim(0);
  int h = steps[0]->value.dim(1);
  for (const auto& s : steps) rows.push_back(ad::reshape(s, {b, 1, h}));
  return ad::concat(rows, 1);
}

struct GruWeights {
  NodePtr Wz, Uz, bz, Wr, Ur, br, Wn, Un, bn;
};

GruWeights gru_weights(const ModelParams& p, int layer, const char* dir) {
  std::string pre = "gru" + std::to_string(layer) + "." + dir + ".";
  return {p.at(pre + "Wz"), p.at(pre + "Uz"), p.at(pre + "bz"),
          p.at(pre + "Wr"), p.at(pre + "Ur"), p.at(pre + "br"),
          p.at(pre + "Wn"), p.at(pre + "Un"), p.at(pre + "bn")};
}

// Gating: z = sig(xWz + hUz + bz), r = sig(xWr + hUr + br),
// n = tanh(xWn + (r.h)Un + bn), h' = (1-z).n + z.h.
NodePtr gru_cell(const GruWeights& w, const NodePtr& x, const NodePtr& h) {
  NodePtr z = ad::sigmoid(ad::add(ad::add(ad::matmul(x, w.Wz), ad::matmul(h, w.Uz)), w.bz));
  NodePtr r = ad::sigmoid(ad::add(ad::add(ad::matmul(x, w.Wr), ad::matmul(h, w.Ur)), w.br));
  NodePtr n = ad::tanh(ad::add(
      ad::add(ad::matmul(x, w.Wn), ad::matmul(ad::mul(r, h), w.Un)), w.bn));
  NodePtr one_minus_z = ad::add_scalar(ad::scale(z, -1.0), 1.0);
  return ad::add(ad::mul(one_minus_z, n), ad::mul(z, h));
}

// One directional sweep; `reverse` walks the sequence right-to-left but
// returns outputs in natural time order.
std::vector<NodePtr> gru_sweep(const GruWeights& w, const NodePtr& x,
                               int hidden, bool reverse) {
  int b = x->value.dim(0);
  int len = x->value.dim(1);
  int in = x->value.dim(2);
  NodePtr h = ad::constant(Tensor({b, hidden}));
  std::vector<NodePtr> out(static_cast<size_t>(len));
  for (int i = 0; i < len; ++i) {
    int t = reverse ? len - 1 - i : i;
    NodePtr xt = ad::reshape(ad::slice(x, 1, t, 1), {b, in});
    h = gru_cell(w, xt, h);
    out[static_cast<size_t>(t)] = h;
  }
  return out;
}

NodePtr bigru_layer(const ModelParams& p, int layer, const NodePtr& x, int hidden) {
  auto fwd = gru_sweep(gru_weights(p, layer, "fwd"), x, hidden, false);
  auto bwd = gru_sweep(gru_weights(p, layer, "bwd"), x, hidden, true);
  return ad::concat({stack_steps(fwd), stack_steps(bwd)}, 2);
}

std::vector<NodePtr> rnn_sweep(const ModelParams& p, int layer, const NodePtr& x,
                               int hidden) {
  std::string pre = "rnn" + std::to_string(layer) + ".fwd.";
  const NodePtr& W = p.at(pre + "W");
  const NodePtr& U = p.at(pre + "U");
  const NodePtr& b = p.at(pre + "b");
  int bs = x->value.dim(0);
  int len = x->value.dim(1);
  int in = x->value.dim(2);
  NodePtr h = ad::constant(Tensor({bs, hidden}));
  std::vector<NodePtr> out;
  out.reserve(static_cast<size_t>(len));
  for (int t = 0; t < len; ++t) {
    NodePtr xt = ad::reshape(ad::slice(x, 1, t, 1), {bs, in});
    h = ad::tanh(ad::add(ad::add(ad::matmul(xt, W), ad::matmul(h, U)), b));
    out.push_back(h);
  }
  return out;
}

NodePtr last_step(const NodePtr& x) {
  int b = x->value.dim(0);
  int len = x->value.dim(1);
  int d = x->value.dim(2);
  return ad::reshape(ad::slice(x, 1, len - 1, 1), {b, d});
}

NodePtr head(const ModelParams& p, const NodePtr& z) {
  NodePtr y = ad::add(ad::matmul(z, p.at("head.W")), p.at("head.b"));
  return ad::softplus(ad::reshape(y, {z->value.dim(0)}));
}

}  // namespace

NodePtr input_project(const ModelParams& p, const NodePtr& x) {
  if (x->value.ndim() != 3 || x->value.dim(2) != p.spec.n_features) {
    throw ShapeMismatch("input_project expects [Bx L x " +
                        std::to_string(p.spec.n_features) + "], got " +
                        x->value.shape_str());
  }
  return affine_3d(x, p.at("in_proj.W"), p.at("in_proj.b"));
}

NodePtr add_positional(const ModelParams& p, const NodePtr& x) {
  const NodePtr& pos = p.at("pos.P");
  if (x->value.dim(1) != pos->value.dim(1)) {
    throw LengthMismatch("positional length " + std::to_string(pos->value.dim(1)) +
                         " vs sequence " + std::to_string(x->value.dim(1)));
  }
  return ad::add(x, pos);
}

NodePtr multi_head_attention(const ModelParams& p, int layer, const NodePtr& x,
                             std::vector<NodePtr>* attn) {
  const int d = p.spec.d_model;
  const int heads = p.spec.n_heads;
  const int dk = d / heads;
  std::string pre = "enc" + std::to_string(layer) + ".attn.";
  NodePtr q = ad::matmul(x, p.at(pre + "Wq"));
  NodePtr k = ad::matmul(x, p.at(pre + "Wk"));
  NodePtr v = ad::matmul(x, p.at(pre + "Wv"));
  std::vector<NodePtr> ctx;
  ctx.reserve(static_cast<size_t>(heads));
  double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(dk));
  for (int hh = 0; hh < heads; ++hh) {
    NodePtr qh = ad::slice(q, 2, hh * dk, dk);
    NodePtr kh = ad::slice(k, 2, hh * dk, dk);
    NodePtr vh = ad::slice(v, 2, hh * dk, dk);
    NodePtr scores = ad::scale(ad::matmul(qh, ad::transpose(kh, 1, 2)), inv_sqrt_dk);
    NodePtr weights = ad::softmax(scores, 2);
    if (attn) attn->push_back(weights);
    ctx.push_back(ad::matmul(weights, vh));
  }
  return ad::matmul(ad::concat(ctx, 2), p.at(pre + "Wo"));
}

NodePtr encoder_layer(const ModelParams& p, int layer, const NodePtr& x,
                      bool train_mode, Rng* rng) {
  std::string pre = "enc" + std::to_string(layer) + ".";
  double drop = p.spec.dropout;
  auto maybe_drop = [&](NodePtr n) {
    return (train_mode && drop > 0.0 && rng) ? ad::dropout(n, drop, true, *rng) : n;
  };
  NodePtr attn = maybe_drop(multi_head_attention(p, layer, x));
  NodePtr h1 = ad::layer_norm(ad::add(x, attn), 1e-5);
  h1 = ad::add(ad::mul(h1, p.at(pre + "ln1.g")), p.at(pre + "ln1.b"));
  NodePtr ffn = ad::matmul(
      ad::relu(affine_3d(h1, p.at(pre + "ffn.W1"), p.at(pre + "ffn.b1"))),
      p.at(pre + "ffn.W2"));
  ffn = maybe_drop(ad::add(ffn, p.at(pre + "ffn.b2")));
  NodePtr h2 = ad::layer_norm(ad::add(h1, ffn), 1e-5);
  return ad::add(ad::mul(h2, p.at(pre + "ln2.g")), p.at(pre + "ln2.b"));
}

NodePtr bigru(const ModelParams& p, int layer, const NodePtr& x) {
  return bigru_layer(p, layer, x, p.spec.gru_hidden);
}

NodePtr gru_forward(const ModelParams& p, int layer, const NodePtr& x) {
  return stack_steps(gru_sweep(gru_weights(p, layer, "fwd"), x, p.spec.gru_hidden, false));
}

NodePtr attention_pool(const ModelParams& p, const NodePtr& x, NodePtr* alpha) {
  NodePtr scores = ad::add(ad::matmul(x, p.at("pool.w")), p.at("pool.b"));
  NodePtr a = ad::softmax(scores, 1);  // [BxLx1]
  if (alpha) *alpha = a;
  return ad::sum(ad::mul(x, a), 1);
}

NodePtr model_forward(const ModelParams& p, const NodePtr& x, bool train_mode,
                      Rng* rng) {
  const ModelSpec& s = p.spec;
  if (x->value.ndim() != 3 || x->value.dim(1) != s.window_len ||
      x->value.dim(2) != s.n_features) {
    throw SpecMismatch("forward expects [B x " + std::to_string(s.window_len) +
                       " x " + std::to_string(s.n_features) + "], got " +
                       x->value.shape_str());
  }
  NodePtr h = input_project(p, x);
  if (s.has_encoder()) {
    h = add_positional(p, h);
    for (int l = 0; l < s.n_encoder_layers; ++l) {
      h = encoder_layer(p, l, h, train_mode, rng);
    }
  }

  switch (s.kind) {
    case ModelKind::Transformer:
      return head(p, last_step(h));
    case ModelKind::TransGRU: {
      for (int l = 0; l < s.gru_layers; ++l) h = gru_forward(p, l, h);
      return head(p, last_step(h));
    }
    case ModelKind::TabGRU: {
      for (int l = 0; l < s.gru_layers; ++l) h = bigru(p, l, h);
      return head(p, attention_pool(p, h));
    }
    case ModelKind::GRU: {
      for (int l = 0; l < s.gru_layers; ++l) h = gru_forward(p, l, h);
      return head(p, last_step(h));
    }
    case ModelKind::RNN: {
      for (int l = 0; l < s.gru_layers; ++l) h = stack_steps(rnn_sweep(p, l, h, s.gru_hidden));
      return head(p, last_step(h));
    }
    case ModelKind::BiGRU: {
      for (int l = 0; l < s.gru_layers; ++l) h = bigru(p, l, h);
      // Final forward state is at the last step's first half; the final
      // backward state is the second half of step 0.
      int b = h->value.dim(0);
      int len = h->value.dim(1);
      int hid = s.gru_hidden;
      NodePtr last_fwd = ad::slice(ad::reshape(ad::slice(h, 1, len - 1, 1), {b, 2 * hid}), 1, 0, hid);
      NodePtr first_bwd = ad::slice(ad::reshape(ad::slice(h, 1, 0, 1), {b, 2 * hid}), 1, hid, hid);
      return head(p, ad::concat({last_fwd, first_bwd}, 1));
    }
  }
  throw SpecMismatch("unhandled model kind");
}

void save_checkpoint(const std::string& path, const ModelParams& p) {
  std::map<std::string, Tensor> tensors;
  for (const auto& [name, node] : p.tensors) tensors.emplace(name, node->value);
  save_bundle(path, tensors, model_spec_to_json(p.spec));
}

ModelParams load_checkpoint(const std::string& path) {
  std::string meta;
  auto tensors = load_bundle(path, &meta);
  if (meta.empty()) throw SpecMismatch("checkpoint has no model spec");
  ModelParams p;
  p.spec = model_spec_from_json(meta);
  auto expected = param_shapes(p.spec);
  if (expected.size() != tensors.size()) {
    throw SpecMismatch("checkpoint has " + std::to_string(tensors.size()) +
                       " tensors, spec expects " + std::to_string(expected.size()));
  }
  for (const auto& [name, shape] : expected) {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw SpecMismatch("checkpoint missing " + name);
    if (it->second.shape() != shape) {
      throw SpecMismatch("checkpoint tensor " + name + " has shape " +
                         it->second.shape_str() + ", spec expects " +
                         Tensor::shape_str(shape));
    }
    p.tensors.emplace(name, ad::param(std::move(it->second)));
  }
  return p;
}

}  // namespace cmlrain
