// Copyright (c) 2026, SVFAP contributors
// SPDX-License-Identifier: Apache-2.0

#include "svfap/tokenizer.hpp"

#include <cmath>
#include <string>

namespace svfap {

Grid grid_for(int frames, int height, int width, const Patch& patch) {
  if (patch[0] <= 0 || patch[1] <= 0 || patch[2] <= 0) {
    throw ShapeError("patch sizes must be positive");
  }
  if (frames % patch[0] != 0 || height % patch[1] != 0 || width % patch[2] != 0) {
    throw ShapeError("clip " + std::to_string(frames) + "x" + std::to_string(height) + "x" + std::to_string(width) +
                     " is not divisible by patch " + std::to_string(patch[0]) + "x" + std::to_string(patch[1]) + "x" +
                     std::to_string(patch[2]));
  }
  return {frames / patch[0], height / patch[1], width / patch[2]};
}

Matrix patchify(const VideoClip& clip, const Patch& patch) {
  const Grid g = grid_for(clip.frames, clip.height, clip.width, patch);
  const int pt = patch[0];
  const int ph = patch[1];
  const int pw = patch[2];
  Matrix out(static_cast<Index>(g[0]) * g[1] * g[2], static_cast<Index>(pt) * ph * pw * 3);
  Index row = 0;
  for (int gt = 0; gt < g[0]; ++gt) {
    for (int gy = 0; gy < g[1]; ++gy) {
      for (int gx = 0; gx < g[2]; ++gx, ++row) {
        Index col = 0;
        for (int t = 0; t < pt; ++t) {
          for (int y = 0; y < ph; ++y) {
            for (int x = 0; x < pw; ++x) {
              for (int c = 0; c < 3; ++c) {
                out(row, col++) = clip.at(gt * pt + t, gy * ph + y, gx * pw + x, c);
              }
            }
          }
        }
      }
    }
  }
  return out;
}

VideoClip unpatchify(const Matrix& patches, const Grid& grid, const Patch& patch) {
  const int pt = patch[0];
  const int ph = patch[1];
  const int pw = patch[2];
  const Index n = static_cast<Index>(grid[0]) * grid[1] * grid[2];
  if (patches.rows() != n || patches.cols() != static_cast<Index>(pt) * ph * pw * 3) {
    throw ShapeError("unpatchify: " + std::to_string(patches.rows()) + "x" + std::to_string(patches.cols()) +
                     " patches do not match the lattice");
  }
  VideoClip clip(grid[0] * pt, grid[1] * ph, grid[2] * pw);
  Index row = 0;
  for (int gt = 0; gt < grid[0]; ++gt) {
    for (int gy = 0; gy < grid[1]; ++gy) {
      for (int gx = 0; gx < grid[2]; ++gx, ++row) {
        Index col = 0;
        for (int t = 0; t < pt; ++t) {
          for (int y = 0; y < ph; ++y) {
            for (int x = 0; x < pw; ++x) {
              for (int c = 0; c < 3; ++c) {
                clip.at(gt * pt + t, gy * ph + y, gx * pw + x, c) = patches(row, col++);
              }
            }
          }
        }
      }
    }
  }
  return clip;
}

Matrix positions(Index count, Index width) {
  if (width % 2 != 0) {
    throw ShapeError("positions: width must be even, got " + std::to_string(width));
  }
  Matrix table(count, width);
  for (Index n = 0; n < count; ++n) {
    for (Index j = 0; j < width / 2; ++j) {
      const double freq = std::pow(10000.0, 2.0 * static_cast<double>(j) / static_cast<double>(width));
      const double angle = static_cast<double>(n) / freq;
      table(n, 2 * j) = std::sin(angle);
      table(n, 2 * j + 1) = std::cos(angle);
    }
  }
  return table;
}

TokenGrid embed(const Matrix& patches, const Matrix& weight, const RowVector& bias, const Grid& grid,
                bool add_positions) {
  if (patches.cols() != weight.rows() || bias.cols() != weight.cols()) {
    throw ShapeError("embed: patches, weight and bias disagree");
  }
  if (patches.rows() != static_cast<Index>(grid[0]) * grid[1] * grid[2]) {
    throw ShapeError("embed: patch count does not match the lattice");
  }
  TokenGrid out;
  out.grid = grid;
  out.tokens = (patches * weight).rowwise() + bias;
  if (add_positions) {
    out.tokens += positions(out.tokens.rows(), out.tokens.cols());
  }
  return out;
}

Var embed(Var patches, Var weight, Var bias, bool add_positions) {
  Var tokens = add_row(matmul(patches, weight), bias);
  if (!add_positions) {
    return tokens;
  }
  Tape& t = patches.tape();
  if (t.dry_run()) {
    return add(tokens, t.input_shape(tokens.rows(), tokens.cols()));
  }
  return add(tokens, t.input(positions(tokens.rows(), tokens.cols())));
}

}  // namespace svfap
