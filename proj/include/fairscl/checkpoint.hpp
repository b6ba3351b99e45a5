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

// Binary model checkpoints, little-endian:
//
//   magic     8 bytes  "FSCLCKPT"
//   version   u32      kCheckpointVersion
//   feature_dim, embed_dim, group_classes   u64 each
//   depth     u32, then depth encoder widths as u64
//   step      i64
//   for each of params, first moment, second moment:
//     for each layer in Params::Layers() order:
//       rows u64, cols u64, rows*cols f64 (row-major), bias_len u64, f64s

#ifndef FAIRSCL_CHECKPOINT_HPP_
#define FAIRSCL_CHECKPOINT_HPP_

#include <cstdint>
#include <filesystem>

#include "fairscl/model.hpp"

namespace fairscl {

inline constexpr uint32_t kCheckpointVersion = 1;

// Throws kIo on write failure.
void SaveCheckpoint(const ModelState& state, const std::filesystem::path& path);

// Throws kIo on read failure and kParse on a bad magic, version or layout.
ModelState LoadCheckpoint(const std::filesystem::path& path);

}  // namespace fairscl

#endif  // FAIRSCL_CHECKPOINT_HPP_
