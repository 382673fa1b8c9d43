// Copyright 2026 The xling Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "xling/errors.hpp"
#include "xling/hashing.hpp"
#include "xling/heads.hpp"

namespace xling {

// Checkpoint container: an 8-byte magic, a length-prefixed JSON header
// (encoder config, vocabulary reference hash and path, tensor manifest,
// optional trainer state), then the raw tensor data as little-endian
// doubles in manifest order. Round trips are bit-exact.
inline constexpr char kCheckpointMagic[9] = "XLCKPT01";

inline nlohmann::json encoder_config_to_json(const EncoderConfig& c) {
  return nlohmann::json{{"word_dim", c.word_dim},     {"char_dim", c.char_dim},
                        {"model_dim", c.model_dim},   {"num_layers", c.num_layers},
                        {"num_heads", c.num_heads},   {"filter_dim", c.filter_dim},
                        {"max_len", c.max_len}};
}

inline EncoderConfig encoder_config_from_json(const nlohmann::json& j) {
  EncoderConfig c;
  c.word_dim = j.at("word_dim").get<int>();
  c.char_dim = j.at("char_dim").get<int>();
  c.model_dim = j.at("model_dim").get<int>();
  c.num_layers = j.at("num_layers").get<int>();
  c.num_heads = j.at("num_heads").get<int>();
  c.filter_dim = j.at("filter_dim").get<int>();
  c.max_len = j.at("max_len").get<int>();
  c.validate();
  return c;
}

inline void save_checkpoint(Model& model, const std::string& path,
                            const std::string& vocab_path,
                            const nlohmann::json& trainer_state = nullptr) {
  nlohmann::json manifest = nlohmann::json::array();
  std::vector<NamedParam> params = model.named();
  for (const NamedParam& p : params)
    manifest.push_back({{"name", p.name}, {"shape", p.tensor->shape}});
  nlohmann::json header{{"format_version", 1},
                        {"encoder_config", encoder_config_to_json(model.encoder.config)},
                        {"vocab_hash", to_hex(model.vocab.content_hash())},
                        {"vocab_path", vocab_path},
                        {"tensors", manifest},
                        {"trainer_state", trainer_state}};
  std::string header_str = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("checkpoint: cannot write " + path);
  out.write(kCheckpointMagic, 8);
  std::uint64_t len = header_str.size();
  char len_bytes[8];
  for (int i = 0; i < 8; ++i) len_bytes[i] = static_cast<char>((len >> (8 * i)) & 0xFF);
  out.write(len_bytes, 8);
  out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
  for (const NamedParam& p : params)
    out.write(reinterpret_cast<const char*>(p.tensor->values.data()),
              static_cast<std::streamsize>(p.tensor->values.size() * sizeof(double)));
  if (!out) throw IoError("checkpoint: write failed for " + path);
}

struct Checkpoint {
  EncoderConfig config;
  std::string vocab_hash;
  std::string vocab_path;
  nlohmann::json trainer_state;
  std::vector<std::pair<std::string, Tensor>> tensors;
};

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("checkpoint: cannot read " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kCheckpointMagic, 8) != 0)
    throw ParseError("checkpoint: bad magic in " + path);
  char len_bytes[8];
  in.read(len_bytes, 8);
  std::uint64_t len = 0;
  for (int i = 0; i < 8; ++i)
    len |= static_cast<std::uint64_t>(static_cast<unsigned char>(len_bytes[i])) << (8 * i);
  std::string header_str(len, '\0');
  in.read(header_str.data(), static_cast<std::streamsize>(len));
  if (!in) throw ParseError("checkpoint: truncated header in " + path);

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_str);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint: bad header JSON: ") + e.what());
  }
  if (header.at("format_version").get<int>() != 1)
    throw ParseError("checkpoint: unsupported format version");

  Checkpoint ckpt;
  ckpt.config = encoder_config_from_json(header.at("encoder_config"));
  ckpt.vocab_hash = header.at("vocab_hash").get<std::string>();
  ckpt.vocab_path = header.at("vocab_path").get<std::string>();
  ckpt.trainer_state = header.at("trainer_state");
  for (const auto& entry : header.at("tensors")) {
    Tensor t(entry.at("shape").get<std::vector<int>>());
    in.read(reinterpret_cast<char*>(t.values.data()),
            static_cast<std::streamsize>(t.values.size() * sizeof(double)));
    if (!in) throw ParseError("checkpoint: truncated tensor data in " + path);
    ckpt.tensors.emplace_back(entry.at("name").get<std::string>(), std::move(t));
  }
  return ckpt;
}

// Rebuilds a Model from a checkpoint. The vocabulary comes from the path
// stored at save time unless overridden, and is validated against the
// stored content hash either way.
inline Model restore_model(const Checkpoint& ckpt,
                           const std::string& vocab_override = "") {
  std::string vocab_path = vocab_override.empty() ? ckpt.vocab_path : vocab_override;
  Vocabulary vocab = Vocabulary::load(vocab_path);
  if (to_hex(vocab.content_hash()) != ckpt.vocab_hash)
    throw ConsistencyError("checkpoint: vocabulary at " + vocab_path +
                           " does not match the checkpoint's vocab hash");
  Model m = init_model(ckpt.config, std::move(vocab), 0);
  std::vector<NamedParam> params = m.named();
  if (params.size() != ckpt.tensors.size())
    throw ParseError("checkpoint: tensor count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& [name, tensor] = ckpt.tensors[i];
    if (params[i].name != name)
      throw ParseError("checkpoint: tensor order mismatch at " + name);
    if (params[i].tensor->shape != tensor.shape)
      throw ParseError("checkpoint: shape mismatch for " + name);
    params[i].tensor->values = tensor.values;
  }
  return m;
}

inline Model load_model(const std::string& path, const std::string& vocab_override = "") {
  return restore_model(load_checkpoint(path), vocab_override);
}

inline std::string file_hash_hex(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::uint64_t h = kFnvOffset;
  char buf[65536];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    h = fnv1a64(std::string_view(buf, static_cast<std::size_t>(in.gcount())), h);
    if (!in) break;
  }
  return to_hex(h);
}

// hash of the parameter values only; the freeze contract in transfer
// training asserts this before/after
inline std::string params_hash_hex(Model& model) {
  std::uint64_t h = kFnvOffset;
  for (const NamedParam& p : model.named()) {
    h = fnv1a64(p.name, h);
    h = fnv1a64(std::string_view(reinterpret_cast<const char*>(p.tensor->values.data()),
                                 p.tensor->values.size() * sizeof(double)),
                h);
  }
  return to_hex(h);
}

}  // namespace xling
