// Copyright (c) 2026, SVFAP contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "svfap/autograd.hpp"
#include "svfap/data.hpp"
#include "svfap/tensor.hpp"

#include <array>

namespace svfap {

using Grid = std::array<int, 3>;   // (t, h, w) token lattice
using Patch = std::array<int, 3>;  // (pt, ph, pw)

/// Token embeddings on an explicit lattice. Row n = (t·h + y)·w + x.
struct TokenGrid {
  Matrix tokens;
  Grid grid{0, 0, 0};

  Index size() const { return tokens.rows(); }
};

Grid grid_for(int frames, int height, int width, const Patch& patch);

/// Non-overlapping spatiotemporal patches, one row per lattice cell.
/// Entries inside a row run over (t, y, x, channel), row-major.
Matrix patchify(const VideoClip& clip, const Patch& patch);

/// Exact inverse of patchify.
VideoClip unpatchify(const Matrix& patches, const Grid& grid, const Patch& patch);

/// Fixed 1-D sinusoidal table over the flattened token index:
/// (2j, 2j+1) -> (sin(n / 10000^{2j/C}), cos(n / 10000^{2j/C})).
Matrix positions(Index count, Index width);

/// patches · weight + bias, plus the positional table when requested.
TokenGrid embed(const Matrix& patches, const Matrix& weight, const RowVector& bias, const Grid& grid,
                bool add_positions = true);

/// Tape version used inside the model.
Var embed(Var patches, Var weight, Var bias, bool add_positions = true);

}  // namespace svfap
