#include "cmlrain/tensor_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "cmlrain/errors.hpp"
#include "json.hpp"

static_assert(std::endian::native == std::endian::little,
              "tensor files are little-endian; big-endian hosts unsupported");

namespace cmlrain {

namespace {

constexpr char kTensorMagic[8] = {'C', 'M', 'L', 'T', 'E', 'N', 'S', '1'};
constexpr char kBundleMagic[8] = {'C', 'M', 'L', 'B', 'U', 'N', 'D', '1'};

void write_header(std::ofstream& f, const char magic[8], const std::string& header) {
  f.write(magic, 8);
  uint64_t len = header.size();
  f.write(reinterpret_cast<const char*>(&len), 8);
  f.write(header.data(), static_cast<std::streamsize>(header.size()));
}

std::string read_header(std::ifstream& f, const char magic[8], const std::string& path) {
  char m[8];
  f.read(m, 8);
  if (!f || std::memcmp(m, magic, 8) != 0) {
    throw IoFailure("bad magic in " + path);
  }
  uint64_t len = 0;
  f.read(reinterpret_cast<char*>(&len), 8);
  std::string header(len, '\0');
  f.read(header.data(), static_cast<std::streamsize>(len));
  if (!f) throw IoFailure("truncated header in " + path);
  return header;
}

}  // namespace

void save_tensor(const std::string& path, const Tensor& t) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoFailure("cannot open for write: " + path);
  nlohmann::json h{{"dtype", "f64"}, {"shape", t.shape()}};
  write_header(f, kTensorMagic, h.dump());
  f.write(reinterpret_cast<const char*>(t.data()),
          static_cast<std::streamsize>(t.size() * 8));
  if (!f) throw IoFailure("write failed: " + path);
}

Tensor load_tensor(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoFailure("cannot open: " + path);
  auto h = nlohmann::json::parse(read_header(f, kTensorMagic, path));
  if (h.at("dtype") != "f64") throw IoFailure("unsupported dtype in " + path);
  std::vector<int> shape = h.at("shape").get<std::vector<int>>();
  Tensor t(shape);
  f.read(reinterpret_cast<char*>(t.data()),
         static_cast<std::streamsize>(t.size() * 8));
  if (!f) throw IoFailure("truncated payload in " + path);
  return t;
}

void save_bundle(const std::string& path,
                 const std::map<std::string, Tensor>& tensors,
                 const std::string& meta_json) {
  nlohmann::json index = nlohmann::json::array();
  uint64_t offset = 0;
  for (const auto& [name, t] : tensors) {
    index.push_back({{"name", name}, {"shape", t.shape()}, {"offset", offset}});
    offset += static_cast<uint64_t>(t.size()) * 8;
  }
  nlohmann::json h{{"tensors", index}};
  h["meta"] = meta_json.empty() ? nlohmann::json(nullptr)
                                : nlohmann::json::parse(meta_json);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoFailure("cannot open for write: " + path);
  write_header(f, kBundleMagic, h.dump());
  for (const auto& [name, t] : tensors) {
    (void)name;
    f.write(reinterpret_cast<const char*>(t.data()),
            static_cast<std::streamsize>(t.size() * 8));
  }
  if (!f) throw IoFailure("write failed: " + path);
}

std::map<std::string, Tensor> load_bundle(const std::string& path,
                                          std::string* meta_json) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoFailure("cannot open: " + path);
  auto h = nlohmann::json::parse(read_header(f, kBundleMagic, path));
  if (meta_json) {
    *meta_json = h.at("meta").is_null() ? "" : h.at("meta").dump();
  }
  std::map<std::string, Tensor> out;
  for (const auto& entry : h.at("tensors")) {
    std::vector<int> shape = entry.at("shape").get<std::vector<int>>();
    Tensor t(shape);
    f.read(reinterpret_cast<char*>(t.data()),
           static_cast<std::streamsize>(t.size() * 8));
    if (!f) throw IoFailure("truncated payload in " + path);
    out.emplace(entry.at("name").get<std::string>(), std::move(t));
  }
  return out;
}

}  // namespace cmlrain
