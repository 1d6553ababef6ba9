// Copyright (c) 2026, SVFAP contributors
// SPDX-License-Identifier: Apache-2.0
//
// Binary checkpoint container; the byte layout is described in
// docs/checkpoint-format.md. Readers accept any file with the same major
// version and reject everything else.

#pragma once

#include "svfap/trainer.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>

namespace svfap {

inline constexpr std::uint32_t kCheckpointMajor = 1;
inline constexpr std::uint32_t kCheckpointMinor = 0;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void save_checkpoint(const std::filesystem::path& path, const TrainState& state);
TrainState load_checkpoint(const std::filesystem::path& path);

}  // namespace svfap
