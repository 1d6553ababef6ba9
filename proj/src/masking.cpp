// Copyright (c) 2026, SVFAP contributors
// SPDX-License-Identifier: Apache-2.0

#include "svfap/masking.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace svfap {

std::vector<Index> TubeMask::visible_tokens() const {
  std::vector<Index> out;
  out.reserve(static_cast<std::size_t>(visible_count()));
  for (Index t = 0; t < grid[0]; ++t) {
    for (Index s : visible_spatial) {
      out.push_back(t * spatial() + s);
    }
  }
  return out;
}

std::vector<Index> TubeMask::masked_tokens() const {
  std::vector<char> vis(static_cast<std::size_t>(spatial()), 0);
  for (Index s : visible_spatial) {
    vis[static_cast<std::size_t>(s)] = 1;
  }
  std::vector<Index> out;
  for (Index t = 0; t < grid[0]; ++t) {
    for (Index s = 0; s < spatial(); ++s) {
      if (!vis[static_cast<std::size_t>(s)]) {
        out.push_back(t * spatial() + s);
      }
    }
  }
  return out;
}

Index visible_spatial_count(const Grid& grid, double ratio) {
  return static_cast<Index>(std::lround(static_cast<double>(grid[1]) * grid[2] * (1.0 - ratio)));
}

TubeMask make_tube_mask(const Grid& grid, double ratio, Rng& rng) {
  if (!(ratio >= 0.0 && ratio < 1.0)) {
    throw std::invalid_argument("masking ratio must lie in [0, 1)");
  }
  const Index keep = visible_spatial_count(grid, ratio);
  if (keep < 1) {
    throw std::invalid_argument("masking ratio " + std::to_string(ratio) + " leaves no visible token on a " +
                                std::to_string(grid[1]) + "x" + std::to_string(grid[2]) + " grid");
  }
  const auto spatial = static_cast<std::size_t>(grid[1]) * grid[2];
  std::vector<Index> pool(spatial);
  std::iota(pool.begin(), pool.end(), Index{0});
  // Partial Fisher-Yates: the first `keep` slots are a uniform sample.
  for (std::size_t i = 0; i < static_cast<std::size_t>(keep); ++i) {
    const auto j = i + rng.index(spatial - i);
    std::swap(pool[i], pool[j]);
  }
  TubeMask m;
  m.grid = grid;
  m.ratio = ratio;
  m.visible_spatial.assign(pool.begin(), pool.begin() + keep);
  std::sort(m.visible_spatial.begin(), m.visible_spatial.end());
  return m;
}

TubeMask full_mask(const Grid& grid) {
  TubeMask m;
  m.grid = grid;
  m.ratio = 0.0;
  m.visible_spatial.resize(static_cast<std::size_t>(grid[1]) * grid[2]);
  std::iota(m.visible_spatial.begin(), m.visible_spatial.end(), Index{0});
  return m;
}

Matrix gather_visible(const TokenGrid& tokens, const TubeMask& mask) {
  if (tokens.grid != mask.grid || tokens.size() != mask.total()) {
    throw ShapeError("gather_visible: token lattice does not match the mask");
  }
  const auto idx = mask.visible_tokens();
  Matrix out(static_cast<Index>(idx.size()), tokens.tokens.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out.row(static_cast<Index>(i)) = tokens.tokens.row(idx[i]);
  }
  return out;
}

Matrix scatter_full(const Matrix& visible, const TubeMask& mask, const RowVector& mask_token) {
  if (visible.rows() != mask.visible_count() || mask_token.cols() != visible.cols()) {
    throw ShapeError("scatter_full: " + std::to_string(visible.rows()) + " visible rows for a mask expecting " +
                     std::to_string(mask.visible_count()));
  }
  Matrix out = mask_token.replicate(mask.total(), 1);
  const auto idx = mask.visible_tokens();
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out.row(idx[i]) = visible.row(static_cast<Index>(i));
  }
  return out;
}

Var gather_visible(Var tokens, const TubeMask& mask) {
  if (tokens.rows() != mask.total()) {
    throw ShapeError("gather_visible: token count does not match the mask");
  }
  return gather_rows(tokens, mask.visible_tokens());
}

Var scatter_full(Var visible, const TubeMask& mask, Var mask_token) {
  if (visible.rows() != mask.visible_count()) {
    throw ShapeError("scatter_full: visible row count does not match the mask");
  }
  return scatter_rows(visible, mask.visible_tokens(), mask_token, mask.total());
}

}  // namespace svfap
