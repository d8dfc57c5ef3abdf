#pragma once

#include <map>
#include <string>

#include "cmlrain/tensor.hpp"

namespace cmlrain {

// On-disk tensor format: 8-byte magic "CMLTENS1", a uint64 little-endian
// header length, a JSON header {"dtype":"f64","shape":[...]}, then the
// payload as little-endian IEEE-754 doubles in row-major order.
void save_tensor(const std::string& path, const Tensor& t);
Tensor load_tensor(const std::string& path);

// Bundle of named tensors in one file (used by checkpoints): magic
// "CMLBUND1", uint64 header length, JSON header
// {"tensors":[{"name","shape","offset"}...], "meta": <free-form JSON>},
// then concatenated payloads.
void save_bundle(const std::string& path,
                 const std::map<std::string, Tensor>& tensors,
                 const std::string& meta_json);
std::map<std::string, Tensor> load_bundle(const std::string& path,
                                          std::string* meta_json);

}  // namespace cmlrain
