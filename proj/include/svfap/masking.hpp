// Copyright (c) 2026, SVFAP contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "svfap/tensor.hpp"
#include "svfap/tokenizer.hpp"

#include <vector>

namespace svfap {

/// Space-only mask shared by every temporal slice.
struct TubeMask {
  std::vector<Index> visible_spatial;  // sorted, unique, in [0, h·w)
  double ratio = 0.0;
  Grid grid{0, 0, 0};

  Index spatial() const { return static_cast<Index>(grid[1]) * grid[2]; }
  Index total() const { return grid[0] * spatial(); }
  Index visible_per_slice() const { return static_cast<Index>(visible_spatial.size()); }
  Index visible_count() const { return grid[0] * visible_per_slice(); }

  /// Flat lattice indices of visible tokens: time-major, ascending spatial index.
  std::vector<Index> visible_tokens() const;
  /// Flat lattice indices of masked tokens, ascending.
  std::vector<Index> masked_tokens() const;
};

/// Number of visible spatial positions: round(h·w·(1 − ρ)).
Index visible_spatial_count(const Grid& grid, double ratio);

/// Draws the visible pattern uniformly without replacement. Throws
/// std::invalid_argument when ρ leaves no visible token.
TubeMask make_tube_mask(const Grid& grid, double ratio, Rng& rng);

/// Mask with every position visible (fine-tuning, ρ = 0).
TubeMask full_mask(const Grid& grid);

Matrix gather_visible(const TokenGrid& tokens, const TubeMask& mask);

/// Visible rows back at their lattice positions, `mask_token` everywhere else.
Matrix scatter_full(const Matrix& visible, const TubeMask& mask, const RowVector& mask_token);

/// Tape versions.
Var gather_visible(Var tokens, const TubeMask& mask);
Var scatter_full(Var visible, const TubeMask& mask, Var mask_token);

}  // namespace svfap
