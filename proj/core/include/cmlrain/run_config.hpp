#pragma once

#include <string>
#include <vector>

#include "cmlrain/model.hpp"
#include "cmlrain/pl_model.hpp"
#include "cmlrain/preprocess.hpp"
#include "cmlrain/synth.hpp"
#include "cmlrain/train.hpp"

namespace cmlrain {

// One JSON document drives a run; flags override keys and the resolved
// config is echoed to run.json so any run can be replayed from it alone.
struct RunConfig {
  int schema_version = 1;
  uint64_t seed = 0;
  std::string data_dir;
  std::string out_dir = "out";
  PreprocessConfig preprocess;
  ModelSpec model;
  TrainConfig train;
  PLConfig pl;
  SynthConfig synth;
  std::vector<std::string> models;  // reproduce subset; empty = all kinds
};

std::string run_config_to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const std::string& text);
RunConfig load_run_config(const std::string& path);
void save_run_config(const std::string& path, const RunConfig& cfg);

}  // namespace cmlrain
