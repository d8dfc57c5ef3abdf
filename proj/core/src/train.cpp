#include "cmlrain/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

#include "cmlrain/errors.hpp"

namespace cmlrain {

void TrainConfig::validate() const {
  if (lr < 0.0) throw ConfigInvalid("lr must be >= 0");
  if (epochs < 1) throw ConfigInvalid("epochs must be >= 1");
  if (batch_size < 1) throw ConfigInvalid("batch_size must be >= 1");
  if (grad_clip_norm && *grad_clip_norm <= 0.0) {
    throw ConfigInvalid("grad_clip_norm must be > 0");
  }
}

void adam_step(const std::vector<std::pair<std::string, ad::NodePtr>>& params,
               AdamState& state, const TrainConfig& cfg) {
  state.t += 1;
  double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(state.t));
  double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(state.t));
  for (const auto& [name, node] : params) {
    auto [it, inserted] = state.moments.try_emplace(
        name, Tensor(node->value.shape()), Tensor(node->value.shape()));
    Tensor& m = it->second.first;
    Tensor& v = it->second.second;
    if (!inserted && !m.same_shape(node->value)) {
      throw ShapeMismatch("adam state shape drift for " + name);
    }
    const Tensor& g = node->grad_or_zeros();
    for (int64_t i = 0; i < g.size(); ++i) {
      m[i] = cfg.adam_beta1 * m[i] + (1.0 - cfg.adam_beta1) * g[i];
      v[i] = cfg.adam_beta2 * v[i] + (1.0 - cfg.adam_beta2) * g[i] * g[i];
      double m_hat = m[i] / bc1;
      double v_hat = v[i] / bc2;
      node->value[i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.adam_eps);
    }
  }
}

namespace {

ad::NodePtr batch_inputs(const SplitData& split, const std::vector<int64_t>& idx,
                         int window_len, int n_features) {
  Tensor x({static_cast<int>(idx.size()), window_len, n_features});
  int64_t row = static_cast<int64_t>(window_len) * n_features;
  for (size_t i = 0; i < idx.size(); ++i) {
    const double* src = split.inputs.data() + idx[i] * row;
    std::copy(src, src + row, x.data() + static_cast<int64_t>(i) * row);
  }
  return ad::constant(std::move(x));
}

ad::NodePtr batch_targets(const SplitData& split, const std::vector<int64_t>& idx) {
  Tensor y({static_cast<int>(idx.size())});
  for (size_t i = 0; i < idx.size(); ++i) {
    y[static_cast<int64_t>(i)] = split.targets[static_cast<size_t>(idx[i])];
  }
  return ad::constant(std::move(y));
}

void clip_gradients(const std::vector<std::pair<std::string, ad::NodePtr>>& params,
                    double max_norm) {
  double sq = 0.0;
  for (const auto& [name, node] : params) {
    (void)name;
    const Tensor& g = node->grad_or_zeros();
    for (int64_t i = 0; i < g.size(); ++i) sq += g[i] * g[i];
  }
  double norm = std::sqrt(sq);
  if (norm <= max_norm || norm == 0.0) return;
  double f = max_norm / norm;
  for (const auto& [name, node] : params) {
    (void)name;
    Tensor& g = node->ensure_grad();
    for (int64_t i = 0; i < g.size(); ++i) g[i] *= f;
  }
}

}  // namespace

std::vector<double> predict(const ModelParams& params, const SplitData& split,
                            int batch_size) {
  std::vector<double> out;
  out.reserve(static_cast<size_t>(split.count()));
  const int w = params.spec.window_len;
  const int f = params.spec.n_features;
  for (int64_t at = 0; at < split.count(); at += batch_size) {
    int64_t n = std::min<int64_t>(batch_size, split.count() - at);
    std::vector<int64_t> idx(static_cast<size_t>(n));
    std::iota(idx.begin(), idx.end(), at);
    ad::NodePtr pred = model_forward(params, batch_inputs(split, idx, w, f), false);
    for (int64_t i = 0; i < pred->value.size(); ++i) out.push_back(pred->value[i]);
  }
  return out;
}

double mse_loss(const ModelParams& params, const SplitData& split,
                int batch_size) {
  std::vector<double> pred = predict(params, split, batch_size);
  double s = 0.0;
  for (size_t i = 0; i < pred.size(); ++i) {
    double d = pred[i] - split.targets[i];
    s += d * d;
  }
  return s / static_cast<double>(pred.size());
}

TrainResult train_model(const ModelSpec& spec_in, const WindowedDataset& ds,
                        const TrainConfig& cfg) {
  cfg.validate();
  if (ds.train.count() == 0) throw EmptySplit("train split is empty");
  if (ds.val.count() == 0) throw EmptySplit("val split is empty");

  ModelSpec spec = spec_in;
  if (spec.n_features == 0) spec.n_features = ds.n_features();
  if (spec.window_len != ds.window_len) {
    throw SpecMismatch("spec window_len " + std::to_string(spec.window_len) +
                       " vs dataset " + std::to_string(ds.window_len));
  }
  if (spec.n_features != ds.n_features()) {
    throw SpecMismatch("spec n_features " + std::to_string(spec.n_features) +
                       " vs dataset " + std::to_string(ds.n_features()));
  }
  spec.validate();

  ModelParams params = init_params(spec, cfg.seed);
  auto ordered = params.ordered();
  AdamState adam;
  Rng shuffle_rng = Rng(cfg.seed).split("shuffle");
  Rng dropout_rng = Rng(cfg.seed).split("dropout");

  std::vector<int64_t> indices(static_cast<size_t>(ds.train.count()));
  std::iota(indices.begin(), indices.end(), 0);

  TrainResult result;
  result.best_val_loss = std::numeric_limits<double>::infinity();

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(indices);
    double loss_sum = 0.0;
    int64_t seen = 0;
    for (size_t at = 0; at < indices.size(); at += static_cast<size_t>(cfg.batch_size)) {
      size_t hi = std::min(indices.size(), at + static_cast<size_t>(cfg.batch_size));
      std::vector<int64_t> idx(indices.begin() + static_cast<int64_t>(at),
                               indices.begin() + static_cast<int64_t>(hi));
      ad::NodePtr x = batch_inputs(ds.train, idx, spec.window_len, spec.n_features);
      ad::NodePtr y = batch_targets(ds.train, idx);
      ad::NodePtr pred = model_forward(params, x, true, &dropout_rng);
      ad::NodePtr diff = ad::sub(pred, y);
      ad::NodePtr loss = ad::mean_all(ad::mul(diff, diff));
      double loss_v = loss->value[0];
      if (!std::isfinite(loss_v)) {
        throw DivergedLoss("train loss became non-finite at epoch " +
                           std::to_string(epoch));
      }
      loss_sum += loss_v * static_cast<double>(idx.size());
      seen += static_cast<int64_t>(idx.size());
      params.zero_grad();
      ad::backward(loss);
      if (cfg.grad_clip_norm) clip_gradients(ordered, *cfg.grad_clip_norm);
      adam_step(ordered, adam, cfg);
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = loss_sum / static_cast<double>(seen);
    stats.val_loss = mse_loss(params, ds.val, std::max(cfg.batch_size, 64));
    if (!std::isfinite(stats.val_loss)) {
      throw DivergedLoss("val loss became non-finite at epoch " + std::to_string(epoch));
    }
    result.history.push_back(stats);
    if (stats.val_loss < result.best_val_loss) {
      result.best_val_loss = stats.val_loss;
      result.best_epoch = epoch;
      result.params = params.clone();
    }
  }
  return result;
}

void write_history_csv(const std::string& path,
                       const std::vector<EpochStats>& history) {
  std::ofstream f(path);
  if (!f) throw IoFailure("cannot write " + path);
  f << "epoch,train_loss,val_loss\n";
  char buf[80];
  for (const auto& h : history) {
    std::snprintf(buf, sizeof(buf), "%d,%.12g,%.12g\n", h.epoch, h.train_loss,
                  h.val_loss);
    f << buf;
  }
}

}  // namespace cmlrain
