#include "cmlrain/dataset.hpp"

#include <filesystem>
#include <fstream>

#include "cmlrain/errors.hpp"
#include "cmlrain/tensor_io.hpp"
#include "json.hpp"

namespace cmlrain {

namespace {

const char* kSplitNames[3] = {"train", "val", "test"};

void save_split(const std::string& dir, const char* name, const SplitData& s) {
  // Empty splits are stored as zero-count metadata with no tensor files.
  if (s.count() == 0) return;
  save_tensor(dir + "/" + name + "_inputs.bin", s.inputs);
  save_tensor(dir + "/" + name + "_targets.bin",
              Tensor({static_cast<int>(s.count())}, s.targets));
  std::vector<double> times(s.target_times.begin(), s.target_times.end());
  save_tensor(dir + "/" + name + "_times.bin",
              Tensor({static_cast<int>(s.count())}, times));
}

SplitData load_split(const std::string& dir, const char* name, int64_t count) {
  SplitData s;
  if (count == 0) return s;
  s.inputs = load_tensor(dir + "/" + name + "_inputs.bin");
  Tensor targets = load_tensor(dir + "/" + name + "_targets.bin");
  s.targets = targets.vec();
  Tensor times = load_tensor(dir + "/" + name + "_times.bin");
  s.target_times.reserve(times.vec().size());
  for (double t : times.vec()) s.target_times.push_back(static_cast<int64_t>(t));
  return s;
}

}  // namespace

void save_dataset(const std::string& dir, const WindowedDataset& ds) {
  std::filesystem::create_directories(dir);
  nlohmann::json scalers = nlohmann::json::array();
  for (size_t i = 0; i < ds.scalers.size(); ++i) {
    scalers.push_back({{"median", ds.scalers[i].median},
                       {"iqr", ds.scalers[i].iqr},
                       {"degenerate", ds.scalers[i].degenerate},
                       {"scaled", static_cast<bool>(ds.scaled[i])}});
  }
  nlohmann::json manifest{
      {"schema_version", 1},
      {"window_len", ds.window_len},
      {"feature_names", ds.feature_names},
      {"scalers", scalers},
      {"splits",
       {{"train", ds.train.count()}, {"val", ds.val.count()}, {"test", ds.test.count()}}},
  };
  std::ofstream f(dir + "/manifest.json");
  if (!f) throw IoFailure("cannot write manifest in " + dir);
  f << manifest.dump(2) << "\n";

  const SplitData* splits[3] = {&ds.train, &ds.val, &ds.test};
  for (int i = 0; i < 3; ++i) {
    save_split(dir, kSplitNames[i], *splits[i]);
  }
}

WindowedDataset load_dataset(const std::string& dir) {
  std::ifstream f(dir + "/manifest.json");
  if (!f) throw MissingInput("no manifest.json in " + dir);
  nlohmann::json manifest = nlohmann::json::parse(f);
  WindowedDataset ds;
  ds.window_len = manifest.at("window_len").get<int>();
  ds.feature_names = manifest.at("feature_names").get<std::vector<std::string>>();
  for (const auto& s : manifest.at("scalers")) {
    ds.scalers.push_back({s.at("median").get<double>(), s.at("iqr").get<double>(),
                          s.at("degenerate").get<bool>()});
    ds.scaled.push_back(s.at("scaled").get<bool>());
  }
  SplitData* splits[3] = {&ds.train, &ds.val, &ds.test};
  for (int i = 0; i < 3; ++i) {
    int64_t count = manifest.at("splits").at(kSplitNames[i]).get<int64_t>();
    *splits[i] = load_split(dir, kSplitNames[i], count);
  }
  return ds;
}

}  // namespace cmlrain
