// Copyright 2026 The sattn Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "sattn/weights_io.h"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "sattn/errors.h"

namespace sattn {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TensorRef {
  std::string name;
  std::vector<std::size_t> shape;
  std::span<const float> data;
};

std::vector<TensorRef> tensor_list(const Weights& w) {
  std::vector<TensorRef> out;
  const auto mat = [&](std::string name, const Matrix& m) {
    out.push_back({std::move(name), {m.rows(), m.cols()}, m.data()});
  };
  const auto vec = [&](std::string name, const std::vector<float>& v) {
    out.push_back({std::move(name), {v.size()}, v});
  };
  mat("embed", w.embed);
  for (std::size_t l = 0; l < w.layers.size(); ++l) {
    const auto& L = w.layers[l];
    const std::string p = "layers." + std::to_string(l) + ".";
    mat(p + "wq", L.wq);
    mat(p + "wk", L.wk);
    mat(p + "wv", L.wv);
    mat(p + "wo", L.wo);
    mat(p + "w1", L.w1);
    mat(p + "w2", L.w2);
    mat(p + "w3", L.w3);
    vec(p + "norm1", L.norm1);
    vec(p + "norm2", L.norm2);
  }
  vec("final_norm", w.final_norm);
  mat("lm_head", w.lm_head);
  return out;
}

std::size_t align_up(std::size_t n) { return (n + kTensorAlignment - 1) / kTensorAlignment * kTensorAlignment; }

void put_le(std::string& blob, std::size_t offset, std::span<const float> data) {
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto bits = std::bit_cast<std::uint32_t>(data[i]);
    for (int b = 0; b < 4; ++b) blob[offset + 4 * i + b] = static_cast<char>((bits >> (8 * b)) & 0xffu);
  }
}

std::vector<float> get_le(const std::string& blob, std::size_t offset, std::size_t count) {
  std::vector<float> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) {
      bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(blob[offset + 4 * i + b])) << (8 * b);
    }
    out[i] = std::bit_cast<float>(bits);
  }
  return out;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("failed reading " + path.string());
  return ss.str();
}

void write_file(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

template <typename T>
T field(const json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("config field \"") + key + "\" missing");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config field \"") + key + "\" has the wrong type");
  }
}

}  // namespace

fs::path blob_path_for(const fs::path& manifest) {
  fs::path p = manifest;
  p.replace_extension(".bin");
  if (p == manifest) p += ".bin";
  return p;
}

json config_to_json(const ModelConfig& c) {
  json spans = json::array();
  for (const auto& s : c.sharing_plan.spans()) spans.push_back({s.start, s.end});
  json cla = json::array();
  for (const auto& [child, parent] : c.cla_map) cla.push_back({child, parent});
  return json{{"n_layers", c.n_layers},     {"n_heads", c.n_heads},
              {"n_kv_heads", c.n_kv_heads}, {"d_model", c.d_model},
              {"d_head", c.d_head()},       {"d_ff", c.d_ff},
              {"vocab_size", c.vocab_size}, {"max_seq", c.max_seq},
              {"rope_theta", c.rope_theta}, {"norm_eps", c.norm_eps},
              {"sharing_plan", spans},      {"cla_map", cla}};
}

ModelConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ModelConfig c;
  c.n_layers = field<std::size_t>(j, "n_layers");
  c.n_heads = field<std::size_t>(j, "n_heads");
  c.n_kv_heads = field<std::size_t>(j, "n_kv_heads");
  c.d_model = field<std::size_t>(j, "d_model");
  c.d_ff = field<std::size_t>(j, "d_ff");
  c.vocab_size = field<std::size_t>(j, "vocab_size");
  c.max_seq = field<std::size_t>(j, "max_seq");
  c.rope_theta = field<float>(j, "rope_theta");
  c.norm_eps = field<float>(j, "norm_eps");
  if (j.contains("d_head") && field<std::size_t>(j, "d_head") != c.d_head()) {
    throw ConfigError("d_head does not equal d_model / n_heads");
  }
  if (j.contains("sharing_plan")) {
    std::vector<LayerSpan> spans;
    for (const auto& s : field<std::vector<std::array<std::size_t, 2>>>(j, "sharing_plan")) {
      spans.push_back({s[0], s[1]});
    }
    c.sharing_plan = SharingPlan(std::move(spans));
  }
  if (j.contains("cla_map")) {
    for (const auto& e : field<std::vector<std::array<std::size_t, 2>>>(j, "cla_map")) {
      c.cla_map[e[0]] = e[1];
    }
  }
  c.validate();
  return c;
}

void save_model(const fs::path& manifest, const ModelConfig& config, const Weights& weights) {
  config.validate();
  weights.validate(config);
  json tensors = json::array();
  std::size_t offset = 0;
  const auto list = tensor_list(weights);
  for (const auto& t : list) {
    offset = align_up(offset);
    tensors.push_back({{"name", t.name},
                       {"shape", t.shape},
                       {"dtype", "f32"},
                       {"offset", offset},
                       {"nbytes", t.data.size() * sizeof(float)}});
    offset += t.data.size() * sizeof(float);
  }
  std::string blob(offset, '\0');
  for (std::size_t i = 0; i < list.size(); ++i) {
    put_le(blob, tensors[i]["offset"].get<std::size_t>(), list[i].data);
  }
  const json doc{{"version", kManifestVersion}, {"config", config_to_json(config)}, {"tensors", tensors}};
  write_file(blob_path_for(manifest), blob);
  write_file(manifest, doc.dump(2) + "\n");
}

LoadedModel load_model(const fs::path& manifest) {
  json doc;
  try {
    doc = json::parse(read_file(manifest));
  } catch (const json::parse_error& e) {
    throw InputError("manifest " + manifest.string() + " is not valid JSON: " + e.what());
  }
  if (!doc.is_object() || !doc.contains("version") || doc["version"] != kManifestVersion) {
    throw InputError("manifest " + manifest.string() + " is not a version 1 model manifest");
  }
  if (!doc.contains("config") || !doc.contains("tensors") || !doc["tensors"].is_array()) {
    throw InputError("manifest " + manifest.string() + " lacks config or tensors");
  }
  LoadedModel m{config_from_json(doc["config"]), {}};
  const std::string blob = read_file(blob_path_for(manifest));

  std::map<std::string, json> by_name;
  for (const auto& t : doc["tensors"]) {
    if (!t.is_object() || !t.contains("name")) throw InputError("tensor entry without a name");
    by_name[t["name"].get<std::string>()] = t;
  }
  const auto fetch = [&](const std::string& name, std::vector<std::size_t> shape) {
    const auto it = by_name.find(name);
    if (it == by_name.end()) throw InputError("manifest lacks tensor " + name);
    const json& t = it->second;
    std::vector<std::size_t> declared;
    std::size_t offset = 0;
    std::size_t nbytes = 0;
    try {
      if (t.at("dtype").get<std::string>() != "f32") throw InputError("tensor " + name + " is not f32");
      declared = t.at("shape").get<std::vector<std::size_t>>();
      offset = t.at("offset").get<std::size_t>();
      nbytes = t.at("nbytes").get<std::size_t>();
    } catch (const json::exception&) {
      throw InputError("tensor " + name + " has malformed metadata");
    }
    if (declared != shape) throw ShapeError("tensor " + name + " shape disagrees with config");
    std::size_t count = 1;
    for (auto s : shape) count *= s;
    if (nbytes != count * sizeof(float) || offset % kTensorAlignment != 0 ||
        offset + nbytes > blob.size()) {
      throw InputError("tensor " + name + " has bad offset or size");
    }
    return get_le(blob, offset, count);
  };
  const ModelConfig& c = m.config;
  const std::size_t qw = c.n_heads * c.d_head();
  const std::size_t kvw = c.n_kv_heads * c.d_head();
  const auto mat = [&](const std::string& name, std::size_t r, std::size_t cols) {
    return Matrix(r, cols, fetch(name, {r, cols}));
  };
  Weights& w = m.weights;
  w.embed = mat("embed", c.vocab_size, c.d_model);
  w.layers.resize(c.n_layers);
  for (std::size_t l = 0; l < c.n_layers; ++l) {
    auto& L = w.layers[l];
    const std::string p = "layers." + std::to_string(l) + ".";
    L.wq = mat(p + "wq", c.d_model, qw);
    L.wk = mat(p + "wk", c.d_model, kvw);
    L.wv = mat(p + "wv", c.d_model, kvw);
    L.wo = mat(p + "wo", qw, c.d_model);
    L.w1 = mat(p + "w1", c.d_model, c.d_ff);
    L.w2 = mat(p + "w2", c.d_ff, c.d_model);
    L.w3 = mat(p + "w3", c.d_model, c.d_ff);
    L.norm1 = fetch(p + "norm1", {c.d_model});
    L.norm2 = fetch(p + "norm2", {c.d_model});
  }
  w.final_norm = fetch("final_norm", {c.d_model});
  w.lm_head = mat("lm_head", c.d_model, c.vocab_size);
  w.validate(c);
  return m;
}

std::vector<TokenId> read_token_ids(const fs::path& path) {
  std::istringstream in(read_file(path));
  std::vector<TokenId> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    auto last = line.find_last_not_of(" \t\r");
    const std::string_view tok(line.data() + first, last - first + 1);
    TokenId id = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), id);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) {
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": not a token id: \"" +
                       std::string(tok) + "\"");
    }
    ids.push_back(id);
  }
  return ids;
}

void write_token_ids(const fs::path& path, std::span<const TokenId> ids) {
  std::string out;
  for (TokenId id : ids) out += std::to_string(id) + "\n";
  write_file(path, out);
}

std::vector<fs::path> list_corpus(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw IoError("corpus directory " + dir.string() + " not found");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  if (ec) throw IoError("cannot list " + dir.string());
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace sattn
