/* Copyright 2026 The pplab Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>
#include <vector>

#include <boost/crc.hpp>

#include "json.hpp"
#include "pplab/error.hpp"
#include "pplab/lm/parameters.hpp"

namespace pplab::lm {

// Checkpoint layout (all integers little-endian):
//
//   "PPLM"          4 bytes magic
//   version         u32
//   header_size     u64
//   payload_crc     u32, CRC-32 of everything after the preamble
//   header          header_size bytes of JSON:
//                   {"config": {...}, "vocab": [...],
//                    "tensors": [{"name", "rows", "cols"}, ...]}
//   blobs           f32 values of each tensor in manifest order,
//                   column-major

inline constexpr char kCheckpointMagic[4] = {'P', 'P', 'L', 'M'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public Error {
 public:
  enum class Code { not_a_checkpoint, version_mismatch, truncated, corrupt, io };

  CheckpointError(Code code, const std::string& what) : Error(what), code_(code) {}
  Code code() const noexcept { return code_; }

 private:
  Code code_;
};

namespace detail {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
inline void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
inline std::uint64_t get_le(const std::uint8_t* p, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

// Tensor manifest implied by a config and vocabulary size.
inline std::uint32_t crc32(const std::uint8_t* begin, const std::uint8_t* end) {
  boost::crc_32_type crc;
  crc.process_block(begin, end);
  return crc.checksum();
}

inline constexpr std::size_t kPreambleSize = 20;

inline std::vector<std::tuple<std::string, std::uint64_t, std::uint64_t>> expected_tensors(const LMConfig& c,
                                                                                         std::uint64_t V) {
  std::vector<std::tuple<std::string, std::uint64_t, std::uint64_t>> t;
  t.emplace_back("embedding", V, c.embedding_dim);
  std::uint64_t in = static_cast<std::uint64_t>(c.embedding_dim);
  for (std::size_t l = 0; l < c.layer_dims.size(); ++l) {
    const auto h = static_cast<std::uint64_t>(c.layer_dims[l]);
    const std::string p = "lstm" + std::to_string(l) + ".";
    t.emplace_back(p + "input_weight", 4 * h, in);
    t.emplace_back(p + "recurrent_weight", 4 * h, h);
    t.emplace_back(p + "bias", 4 * h, 1);
    in = h;
  }
  if (!c.tie_embeddings) t.emplace_back("output.weight", V, in);
  t.emplace_back("output.bias", V, 1);
  return t;
}

}  // namespace detail

/// Serializes parameters; values are stored as 32-bit floats.
template <typename T>
std::vector<std::uint8_t> save_checkpoint(const BasicLMParameters<T>& p) {
  nlohmann::ordered_json header;
  header["config"] = p.config;
  header["vocab"] = p.vocab.tokens();
  auto& manifest = header["tensors"] = nlohmann::ordered_json::array();
  p.for_each_tensor([&](const std::string& name, const Matrix<T>& m) {
    manifest.push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}});
  });
  const std::string text = header.dump();

  std::vector<std::uint8_t> out(std::begin(kCheckpointMagic), std::end(kCheckpointMagic));
  detail::put_u32(out, kCheckpointVersion);
  detail::put_u64(out, text.size());
  detail::put_u32(out, 0);
  out.insert(out.end(), text.begin(), text.end());
  p.for_each_tensor([&](const std::string&, const Matrix<T>& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) detail::put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(m.data()[i])));
  });
  const std::uint32_t crc = detail::crc32(out.data() + detail::kPreambleSize, out.data() + out.size());
  for (int i = 0; i < 4; ++i) out[16 + static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(crc >> (8 * i));
  return out;
}

inline LMParameters load_checkpoint(const std::vector<std::uint8_t>& bytes) {
  using Code = CheckpointError::Code;
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0)
    throw CheckpointError(Code::not_a_checkpoint, "not a checkpoint: bad magic");
  constexpr std::size_t pre = detail::kPreambleSize;
  if (bytes.size() < pre) throw CheckpointError(Code::truncated, "checkpoint truncated in preamble");
  const auto version = static_cast<std::uint32_t>(detail::get_le(bytes.data() + 4, 4));
  if (version != kCheckpointVersion)
    throw CheckpointError(Code::version_mismatch, "checkpoint version " + std::to_string(version) +
                                                      ", expected " + std::to_string(kCheckpointVersion));
  const std::uint64_t header_size = detail::get_le(bytes.data() + 8, 8);
  if (header_size > bytes.size() - pre) throw CheckpointError(Code::truncated, "checkpoint truncated in header");

  LMParameters p;
  std::vector<std::tuple<std::string, std::uint64_t, std::uint64_t>> manifest;
  try {
    auto header = nlohmann::ordered_json::parse(bytes.begin() + pre, bytes.begin() + pre + static_cast<std::ptrdiff_t>(header_size));
    p.config = header.at("config").get<LMConfig>();
    p.config.validate();
    p.vocab = corpus::Vocabulary(header.at("vocab").get<std::vector<std::string>>());
    for (const auto& t : header.at("tensors"))
      manifest.emplace_back(t.at("name").get<std::string>(), t.at("rows").get<std::uint64_t>(),
                            t.at("cols").get<std::uint64_t>());
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(Code::corrupt, std::string("corrupt checkpoint header: ") + e.what());
  } catch (const Error& e) {
    throw CheckpointError(Code::corrupt, std::string("corrupt checkpoint header: ") + e.what());
  }

  const auto expected = detail::expected_tensors(p.config, p.vocab.size());
  if (manifest != expected) {
    for (std::size_t i = 0; i < std::max(manifest.size(), expected.size()); ++i) {
      if (i >= manifest.size() || i >= expected.size() || manifest[i] != expected[i]) {
        const std::string name = i < expected.size() ? std::get<0>(expected[i]) : std::get<0>(manifest[i]);
        throw CheckpointError(Code::corrupt, "checkpoint tensor '" + name + "' inconsistent with header");
      }
    }
  }

  std::uint64_t values = 0;
  for (auto& [name, rows, cols] : manifest) {
    if (cols != 0 && rows > std::numeric_limits<std::uint64_t>::max() / 4 / cols)
      throw CheckpointError(Code::corrupt, "checkpoint tensor '" + name + "' too large");
    if (rows * cols > std::numeric_limits<std::uint64_t>::max() / 4 - values)
      throw CheckpointError(Code::corrupt, "checkpoint tensors too large");
    values += rows * cols;
  }
  const std::uint64_t available = bytes.size() - pre - header_size;
  if (values > available / 4) throw CheckpointError(Code::truncated, "checkpoint truncated in tensor data");
  if (values * 4 != available) throw CheckpointError(Code::corrupt, "trailing bytes after checkpoint tensor data");

  if (detail::crc32(bytes.data() + pre, bytes.data() + bytes.size()) != detail::get_le(bytes.data() + 16, 4))
    throw CheckpointError(Code::corrupt, "checkpoint checksum mismatch");

  const std::uint8_t* cursor = bytes.data() + pre + header_size;
  auto read = [&](Matrix<float>& m, std::uint64_t rows, std::uint64_t cols) {
    m.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < m.size(); ++i, cursor += 4)
      m.data()[i] = std::bit_cast<float>(static_cast<std::uint32_t>(detail::get_le(cursor, 4)));
  };
  std::size_t k = 0;
  auto next = [&](Matrix<float>& m) {
    read(m, std::get<1>(manifest[k]), std::get<2>(manifest[k]));
    ++k;
  };
  next(p.embedding);
  p.layers.resize(p.config.layer_dims.size());
  for (auto& l : p.layers) {
    next(l.input_weight);
    next(l.recurrent_weight);
    next(l.bias);
  }
  if (!p.config.tie_embeddings) next(p.output_weight);
  next(p.output_bias);
  if (!p.all_finite()) throw CheckpointError(Code::corrupt, "checkpoint holds non-finite values");
  return p;
}

template <typename T>
void save_checkpoint_file(const BasicLMParameters<T>& p, const std::string& path) {
  const auto bytes = save_checkpoint(p);
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError(CheckpointError::Code::io, "cannot write checkpoint " + path);
}

inline LMParameters load_checkpoint_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError(CheckpointError::Code::io, "cannot open checkpoint " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return load_checkpoint(bytes);
}

}  // namespace pplab::lm
