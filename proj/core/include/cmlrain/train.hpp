#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cmlrain/model.hpp"
#include "cmlrain/preprocess.hpp"

namespace cmlrain {

struct TrainConfig {
  double lr = 5e-4;
  int epochs = 150;
  int batch_size = 64;
  uint64_t seed = 0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::optional<double> grad_clip_norm;  // off by default

  void validate() const;
};

struct AdamState {
  std::map<std::string, std::pair<Tensor, Tensor>> moments;  // m, v
  int64_t t = 0;
};

// Bias-corrected Adam over the named leaves' accumulated gradients.
void adam_step(const std::vector<std::pair<std::string, ad::NodePtr>>& params,
               AdamState& state, const TrainConfig& cfg);

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainResult {
  ModelParams params;  // checkpoint-best: the epoch with minimum val loss
  std::vector<EpochStats> history;
  int best_epoch = 0;
  double best_val_loss = 0.0;
};

// Seeded shuffling, minibatch MSE in mm/h, Adam updates, per-epoch
// validation with dropout disabled. Loss going non-finite raises
// DivergedLoss.
TrainResult train_model(const ModelSpec& spec, const WindowedDataset& ds,
                        const TrainConfig& cfg);

// Forward pass over a split in batches, train_mode off.
std::vector<double> predict(const ModelParams& params, const SplitData& split,
                            int batch_size = 256);
double mse_loss(const ModelParams& params, const SplitData& split,
                int batch_size = 256);

void write_history_csv(const std::string& path,
                       const std::vector<EpochStats>& history);

}  // namespace cmlrain
