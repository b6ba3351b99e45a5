/*
 * Copyright 2026 The fairscl Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "fairscl/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "fairscl/error.hpp"

namespace fairscl {
namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[8] = {'F', 'S', 'C', 'L', 'C', 'K', 'P', 'T'};
constexpr uint64_t kMaxDim = uint64_t{1} << 32;

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  template <typename T>
  void Put(T v) {
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }

  void Put(const DenseLayer& layer) {
    Put<uint64_t>(static_cast<uint64_t>(layer.weight.rows()));
    Put<uint64_t>(static_cast<uint64_t>(layer.weight.cols()));
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
        Put<double>(layer.weight(r, c));
      }
    }
    Put<uint64_t>(static_cast<uint64_t>(layer.bias.size()));
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) Put<double>(layer.bias(r));
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  Reader(std::istream& in, std::string source)
      : in_(in), source_(std::move(source)) {}

  template <typename T>
  T Get() {
    T v;
    in_.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in_) Fail("truncated checkpoint");
    return v;
  }

  uint64_t Dim() {
    const auto v = Get<uint64_t>();
    if (v > kMaxDim) Fail("implausible dimension");
    return v;
  }

  DenseLayer Layer() {
    DenseLayer layer;
    const auto rows = static_cast<Eigen::Index>(Dim());
    const auto cols = static_cast<Eigen::Index>(Dim());
    layer.weight.resize(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) layer.weight(r, c) = Get<double>();
    }
    layer.bias.resize(static_cast<Eigen::Index>(Dim()));
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) layer.bias(r) = Get<double>();
    return layer;
  }

  [[noreturn]] void Fail(const std::string& msg) const {
    throw Error(ErrorKind::kParse, source_ + ": " + msg);
  }

 private:
  std::istream& in_;
  std::string source_;
};

bool SameShape(const DenseLayer& a, const DenseLayer& b) {
  return a.weight.rows() == b.weight.rows() && a.weight.cols() == b.weight.cols() &&
         a.bias.size() == b.bias.size();
}

}  // namespace

void SaveCheckpoint(const ModelState& state, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write '" + path.string() + "'");
  Writer w(out);
  out.write(kMagic, sizeof(kMagic));
  w.Put<uint32_t>(kCheckpointVersion);
  w.Put<uint64_t>(state.shape.feature_dim);
  w.Put<uint64_t>(state.shape.embed_dim);
  w.Put<uint64_t>(state.shape.group_classes);
  w.Put<uint32_t>(static_cast<uint32_t>(state.shape.encoder_widths.size()));
  for (size_t width : state.shape.encoder_widths) w.Put<uint64_t>(width);
  w.Put<int64_t>(state.step);
  for (const Params* p : {&state.params, &state.first_moment, &state.second_moment}) {
    for (const DenseLayer* layer : p->Layers()) w.Put(*layer);
  }
  out.flush();
  if (!out) throw Error(ErrorKind::kIo, "write failed for '" + path.string() + "'");
}

ModelState LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open '" + path.string() + "'");
  Reader r(in, path.string());
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    r.Fail("not a checkpoint (bad magic)");
  }
  const auto version = r.Get<uint32_t>();
  if (version != kCheckpointVersion) {
    r.Fail("unsupported checkpoint version " + std::to_string(version));
  }
  ModelState state;
  state.shape.feature_dim = r.Dim();
  state.shape.embed_dim = r.Dim();
  state.shape.group_classes = r.Dim();
  const auto depth = r.Get<uint32_t>();
  if (depth > 1024) r.Fail("implausible encoder depth");
  state.shape.encoder_widths.clear();
  for (uint32_t l = 0; l < depth; ++l) state.shape.encoder_widths.push_back(r.Dim());
  state.step = r.Get<int64_t>();
  for (Params* p : {&state.params, &state.first_moment, &state.second_moment}) {
    p->encoder.resize(depth);
    for (DenseLayer* layer : p->Layers()) *layer = r.Layer();
  }
  if (in.peek() != std::char_traits<char>::eof()) r.Fail("trailing bytes");

  // The layers must chain from feature_dim through the encoder to the heads.
  const ModelState expected = ModelState::Initialize(state.shape, 0);
  const auto want = expected.params.Layers();
  for (const Params* p : {&state.params, &state.first_moment, &state.second_moment}) {
    const auto got = p->Layers();
    for (size_t k = 0; k < want.size(); ++k) {
      if (!SameShape(*want[k], *got[k])) {
        r.Fail("layer " + Params::LayerNames(depth)[k] +
               " does not match the declared dimensions");
      }
    }
  }
  return state;
}

}  // namespace fairscl
