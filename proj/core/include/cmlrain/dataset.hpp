#pragma once

#include <string>

#include "cmlrain/preprocess.hpp"

namespace cmlrain {

// Directory layout: manifest.json (shapes, feature names, scaler state,
// split counts) plus one binary tensor file per split for inputs, targets
// and target times (times stored as doubles; epoch seconds are exact).
void save_dataset(const std::string& dir, const WindowedDataset& ds);
WindowedDataset load_dataset(const std::string& dir);

}  // namespace cmlrain
