// Copyright (c) 2026, SVFAP contributors
// SPDX-License-Identifier: Apache-2.0

#include "support/fixtures.hpp"

#include "svfap/masking.hpp"
#include "svfap/tokenizer.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <set>

using namespace svfap;
using namespace svfap::testing;

namespace {

VideoClip random_clip(int t, int h, int w, Rng& rng) {
  VideoClip clip(t, h, w);
  for (double& v : clip.pixels) {
    v = rng.uniform();
  }
  return clip;
}

}  // namespace

TEST_CASE("patchify geometry") {
  Rng rng(1);
  SECTION("full clip") {
    const Matrix p = patchify(VideoClip(16, 160, 160), {2, 16, 16});
    CHECK(p.rows() == 800);
    CHECK(p.cols() == 1536);
    CHECK(grid_for(16, 160, 160, {2, 16, 16}) == Grid{8, 10, 10});
  }
  SECTION("one patch") {
    CHECK(patchify(VideoClip(2, 16, 16), {2, 16, 16}).rows() == 1);
    CHECK(grid_for(2, 16, 16, {2, 16, 16}) == Grid{1, 1, 1});
  }
  SECTION("small clip") {
    CHECK(patchify(VideoClip(4, 32, 32), {2, 16, 16}).rows() == 8);
    CHECK(grid_for(4, 32, 32, {2, 16, 16}) == Grid{2, 2, 2});
  }
  SECTION("indivisible") { CHECK_THROWS(patchify(VideoClip(3, 32, 32), {2, 16, 16})); }
  SECTION("in-patch order is (t, y, x, channel)") {
    VideoClip clip = random_clip(4, 4, 6, rng);
    const Matrix p = patchify(clip, {2, 2, 3});
    // Patch (1, 1, 1): frames 2-3, rows 2-3, cols 3-5. Row index (1·2 + 1)·2 + 1 = 7.
    Index col = 0;
    for (int t = 0; t < 2; ++t) {
      for (int y = 0; y < 2; ++y) {
        for (int x = 0; x < 3; ++x) {
          for (int c = 0; c < 3; ++c) {
            REQUIRE(p(7, col++) == clip.at(2 + t, 2 + y, 3 + x, c));
          }
        }
      }
    }
  }
}

TEST_CASE("unpatchify inverts patchify exactly") {
  Rng rng(2);
  const VideoClip big = random_clip(16, 160, 160, rng);
  const VideoClip back = unpatchify(patchify(big, {2, 16, 16}), {8, 10, 10}, {2, 16, 16});
  CHECK(back.pixels == big.pixels);
  for (int trial = 0; trial < 20; ++trial) {
    const Patch patch{1 + static_cast<int>(rng.index(3)), 1 + static_cast<int>(rng.index(4)),
                      1 + static_cast<int>(rng.index(4))};
    const Grid grid{1 + static_cast<int>(rng.index(3)), 1 + static_cast<int>(rng.index(3)),
                    1 + static_cast<int>(rng.index(3))};
    const VideoClip clip = random_clip(grid[0] * patch[0], grid[1] * patch[1], grid[2] * patch[2], rng);
    REQUIRE(unpatchify(patchify(clip, patch), grid, patch).pixels == clip.pixels);
  }
  CHECK_THROWS(unpatchify(Matrix::Zero(7, 24), {2, 2, 2}, {2, 2, 2}));
}

TEST_CASE("sinusoidal positions") {
  const Matrix pos = positions(200, 16);
  for (Index j = 0; j < 16; ++j) {
    CHECK(pos(0, j) == (j % 2 == 0 ? 0.0 : 1.0));
  }
  CHECK(pos.cwiseAbs().maxCoeff() <= 1.0);
  // Independent evaluation of one entry: n = 37, pair j = 3, C = 16.
  CHECK(pos(37, 6) == Catch::Approx(std::sin(37.0 / std::pow(10000.0, 6.0 / 16.0))).epsilon(1e-14));
  CHECK(pos(37, 7) == Catch::Approx(std::cos(37.0 / std::pow(10000.0, 6.0 / 16.0))).epsilon(1e-14));
  for (Index a = 0; a < pos.rows(); ++a) {
    for (Index b = a + 1; b < pos.rows(); ++b) {
      REQUIRE((pos.row(a) - pos.row(b)).cwiseAbs().maxCoeff() > 1e-9);
    }
  }
  CHECK_THROWS(positions(4, 7));
}

TEST_CASE("patch embedding") {
  Rng rng(3);
  const Grid grid{2, 2, 2};
  const Matrix patches = random_matrix(8, 24, rng);
  SECTION("zero weights without positions") {
    CHECK(embed(patches, Matrix::Zero(24, 6), RowVector::Zero(6), grid, false).tokens.isZero());
  }
  SECTION("column selector picks pixels") {
    Matrix w = Matrix::Zero(24, 2);
    w(5, 0) = 1.0;
    w(17, 1) = 1.0;
    const TokenGrid t = embed(patches.topRows(1), w, RowVector::Zero(2), {1, 1, 1}, false);
    CHECK(t.tokens(0, 0) == patches(0, 5));
    CHECK(t.tokens(0, 1) == patches(0, 17));
  }
  SECTION("full geometry") {
    const TokenGrid t = embed(Matrix::Zero(800, 1536), Matrix::Zero(1536, 512), RowVector::Zero(512), {8, 10, 10});
    CHECK(t.tokens.rows() == 800);
    CHECK(t.tokens.cols() == 512);
    CHECK(t.tokens == positions(800, 512));
  }
  SECTION("linear apart from the positional table") {
    const Matrix w = random_matrix(24, 6, rng);
    const RowVector bias = RowVector::Zero(6);
    const Matrix p2 = random_matrix(8, 24, rng);
    const Matrix pos = positions(8, 6);
    const Matrix lhs = embed(2.5 * patches - 0.5 * p2, w, bias, grid).tokens - pos;
    const Matrix rhs =
        2.5 * (embed(patches, w, bias, grid).tokens - pos) - 0.5 * (embed(p2, w, bias, grid).tokens - pos);
    CHECK(lhs.isApprox(rhs, 1e-12));
  }
}

TEST_CASE("tube masks") {
  Rng rng(4);
  SECTION("full geometry at rho = 0.9") {
    const TubeMask m = make_tube_mask({8, 10, 10}, 0.9, rng);
    CHECK(m.visible_per_slice() == 10);
    CHECK(m.visible_count() == 80);
  }
  SECTION("rho = 0 keeps everything") {
    const TubeMask m = make_tube_mask({2, 3, 3}, 0.0, rng);
    CHECK(m.visible_per_slice() == 9);
  }
  SECTION("small grid keeps the same pattern in both slices") {
    const TubeMask m = make_tube_mask({2, 2, 2}, 0.5, rng);
    REQUIRE(m.visible_per_slice() == 2);
    const auto v = m.visible_tokens();
    REQUIRE(v.size() == 4);
    CHECK(v[2] - 4 == v[0]);
    CHECK(v[3] - 4 == v[1]);
  }
  SECTION("no visible token") { CHECK_THROWS_AS(make_tube_mask({2, 2, 2}, 0.9, rng), std::invalid_argument); }
  SECTION("deterministic given the seed") {
    Rng a(77);
    Rng b(77);
    CHECK(make_tube_mask({8, 10, 10}, 0.9, a).visible_spatial == make_tube_mask({8, 10, 10}, 0.9, b).visible_spatial);
  }
}

TEST_CASE("tube property and masked counts over many masks") {
  Rng rng(5);
  const Grid grid{8, 10, 10};
  std::vector<int> hits(100, 0);
  for (int trial = 0; trial < 1000; ++trial) {
    const TubeMask m = make_tube_mask(grid, 0.9, rng);
    const auto vis = m.visible_tokens();
    std::vector<std::set<Index>> per_slice(8);
    for (Index n : vis) {
      per_slice[static_cast<std::size_t>(n / 100)].insert(n % 100);
    }
    for (const auto& s : per_slice) {
      REQUIRE(s == per_slice[0]);
    }
    REQUIRE(std::is_sorted(m.visible_spatial.begin(), m.visible_spatial.end()));
    REQUIRE(std::adjacent_find(m.visible_spatial.begin(), m.visible_spatial.end()) == m.visible_spatial.end());
    REQUIRE(m.masked_tokens().size() + vis.size() == 800);
    for (Index s : m.visible_spatial) {
      hits[static_cast<std::size_t>(s)]++;
    }
  }
  // Uniform sampling: each position is visible in ~100 of 1000 masks.
  for (int h : hits) {
    CHECK(h > 50);
    CHECK(h < 160);
  }
  for (double rho : {0.75, 0.85, 0.90, 0.95}) {
    const TubeMask m = make_tube_mask(grid, rho, rng);
    CHECK(static_cast<double>(m.masked_tokens().size()) == Catch::Approx(800 * rho).margin(1e-9));
  }
}

TEST_CASE("gather and scatter") {
  Rng rng(6);
  const Grid grid{8, 10, 10};
  TokenGrid tokens{Matrix::Identity(800, 800), grid};
  SECTION("one-hot rows select exactly the visible lattice sites") {
    const TubeMask m = make_tube_mask(grid, 0.9, rng);
    const Matrix vis = gather_visible(tokens, m);
    REQUIRE(vis.rows() == 80);
    const auto idx = m.visible_tokens();
    for (Index r = 0; r < 80; ++r) {
      Index col = 0;
      vis.row(r).maxCoeff(&col);
      REQUIRE(col == idx[static_cast<std::size_t>(r)]);
    }
  }
  SECTION("rho = 0 is the identity") {
    tokens.tokens = random_matrix(800, 4, rng);
    const TubeMask m = full_mask(grid);
    const Matrix vis = gather_visible(tokens, m);
    CHECK(vis == tokens.tokens);
    CHECK(scatter_full(vis, m, RowVector::Zero(4)) == tokens.tokens);
  }
  SECTION("scatter fills every masked site with the mask token") {
    const TubeMask m = make_tube_mask(grid, 0.9, rng);
    const RowVector token = RowVector::Constant(3, 7.5);
    const Matrix vis = random_matrix(80, 3, rng);
    const Matrix full = scatter_full(vis, m, token);
    REQUIRE(full.rows() == 800);
    int filled = 0;
    for (Index r = 0; r < 800; ++r) {
      filled += full.row(r) == token ? 1 : 0;
    }
    CHECK(filled == 720);
    CHECK(gather_visible(TokenGrid{full, grid}, m) == vis);
    CHECK_THROWS(scatter_full(random_matrix(79, 3, rng), m, token));
  }
  SECTION("two masks differ exactly on the symmetric difference") {
    const TubeMask a = make_tube_mask(grid, 0.5, rng);
    const TubeMask b = make_tube_mask(grid, 0.5, rng);
    tokens.tokens = random_matrix(800, 2, rng);
    const RowVector token = RowVector::Constant(2, 100.0);
    const Matrix fa = scatter_full(gather_visible(tokens, a), a, token);
    const Matrix fb = scatter_full(gather_visible(tokens, b), b, token);
    const auto ma = a.masked_tokens();
    const auto mb = b.masked_tokens();
    const std::set<Index> sa(ma.begin(), ma.end());
    const std::set<Index> sb(mb.begin(), mb.end());
    for (Index r = 0; r < 800; ++r) {
      const bool differs = sa.count(r) != sb.count(r);
      REQUIRE((fa.row(r) != fb.row(r)) == differs);
    }
  }
  SECTION("grid mismatch") {
    const TubeMask m = make_tube_mask({2, 10, 10}, 0.9, rng);
    CHECK_THROWS(gather_visible(tokens, m));
  }
}
