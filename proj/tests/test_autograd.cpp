// Copyright (c) 2026, SVFAP contributors
// SPDX-License-Identifier: Apache-2.0

#include "support/fixtures.hpp"
#include "support/gradcheck.hpp"

#include "svfap/autograd.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

using namespace svfap;
using namespace svfap::testing;
using Catch::Approx;

namespace {

// Scalar read-out with fixed random weights, so every output entry matters.
Var readout(Var out, std::uint64_t seed = 99) {
  Rng rng(seed);
  return dot(out, random_normal(out.rows(), out.cols(), 1.0, rng));
}

void require_grad(const InputLoss& f, const std::vector<Matrix>& inputs) {
  const GradReport r = check_input_gradients(f, inputs);
  INFO("worst " << r.worst << " at " << r.where);
  REQUIRE(r.worst < 1e-5);
}

}  // namespace

TEST_CASE("matrix products match Eigen and count multiply-adds") {
  Rng rng(1);
  const Matrix a = random_matrix(3, 4, rng);
  const Matrix b = random_matrix(4, 5, rng);
  const Matrix c = random_matrix(5, 4, rng);
  const Matrix d = random_matrix(3, 5, rng);
  Tape t;
  const Var va = t.input(a);
  REQUIRE(matmul(va, t.input(b)).value().isApprox(a * b));
  REQUIRE(t.flops() == 3 * 4 * 5);
  REQUIRE(matmul_nt(va, t.input(c)).value().isApprox(a * c.transpose()));
  REQUIRE(matmul_tn(va, t.input(d)).value().isApprox(a.transpose() * d));
  REQUIRE(t.flops() == 60 + 60 + 60);
}

TEST_CASE("shape mismatches throw ShapeError") {
  Tape t;
  const Var a = t.input(Matrix::Zero(2, 3));
  REQUIRE_THROWS_AS(matmul(a, a), ShapeError);
  REQUIRE_THROWS_AS(add(a, t.input(Matrix::Zero(3, 2))), ShapeError);
  REQUIRE_THROWS_AS(add_row(a, t.input(Matrix::Zero(1, 2))), ShapeError);
  REQUIRE_THROWS_AS(slice_rows(a, 1, 2), ShapeError);
}

TEST_CASE("dry-run tapes track shapes and FLOPs without values") {
  Tape t(/*dry_run=*/true);
  const Var x = t.input_shape(10, 8);
  const Var w = t.input_shape(8, 6);
  const Var y = gelu(matmul(x, w));
  REQUIRE(y.rows() == 10);
  REQUIRE(y.cols() == 6);
  REQUIRE(y.value().size() == 0);
  REQUIRE(t.flops() == 10 * 8 * 6);
  REQUIRE_THROWS(t.backward(mean_rows(slice_cols(y, 0, 1))));
}

TEST_CASE("gelu is the exact Gaussian-CDF form") {
  // 1·Φ(1) with Φ(1) = (1 + erf(1/√2)) / 2 = 0.8413447460685429.
  REQUIRE(gelu_scalar(1.0) == Approx(0.8413447460685429).epsilon(1e-12));
  REQUIRE(gelu_scalar(0.0) == 0.0);
  REQUIRE(gelu_scalar(-1.0) == Approx(-0.15865525393145707).epsilon(1e-12));
  Tape t;
  REQUIRE(gelu(t.input(Matrix::Constant(1, 1, 1.0))).value()(0, 0) == Approx(0.841345).margin(1e-5));
}

TEST_CASE("layer_norm forward contract") {
  Tape t;
  const Var ones = t.input(Matrix::Ones(1, 2));
  const Var zeros = t.input(Matrix::Zero(1, 2));
  Matrix row(1, 2);
  row << 1.0, 3.0;
  const Matrix y = layer_norm(t.input(row), ones, zeros, 0.0).value();
  REQUIRE(y(0, 0) == Approx(-1.0).margin(1e-15));
  REQUIRE(y(0, 1) == Approx(1.0).margin(1e-15));

  REQUIRE(layer_norm(t.input(Matrix::Constant(1, 2, 4.0)), ones, zeros, 1e-6).value().isZero());

  Rng rng(3);
  const Matrix x = random_matrix(6, 32, rng, 3.0);
  const Matrix z = layer_norm(t.input(x), t.input(Matrix::Ones(1, 32)), t.input(Matrix::Zero(1, 32)), 1e-6).value();
  for (Index r = 0; r < z.rows(); ++r) {
    const double mean = z.row(r).mean();
    const double var = (z.row(r).array() - mean).square().mean();
    REQUIRE(std::abs(mean) < 1e-6);
    REQUIRE(var == Approx(1.0).margin(1e-4));
  }
}

TEST_CASE("softmax rows sum to one and are shift invariant") {
  Rng rng(4);
  const Matrix x = random_matrix(5, 7, rng, 4.0);
  Tape t;
  const Matrix p = softmax_rows(t.input(x)).value();
  for (Index r = 0; r < p.rows(); ++r) {
    REQUIRE(p.row(r).sum() == Approx(1.0).margin(1e-12));
  }
  const Matrix q = softmax_rows(t.input((x.array() + 100.0).matrix())).value();
  REQUIRE((p - q).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("scatter_rows places visible rows and fills the rest") {
  Tape t;
  Matrix vis(2, 3);
  vis << 1, 2, 3, 4, 5, 6;
  Matrix fill(1, 3);
  fill << 9, 9, 9;
  const Matrix out = scatter_rows(t.input(vis), {3, 0}, t.input(fill), 4).value();
  REQUIRE(out.row(3) == vis.row(0));
  REQUIRE(out.row(0) == vis.row(1));
  REQUIRE(out.row(1) == fill.row(0));
  REQUIRE(out.row(2) == fill.row(0));
}

TEST_CASE("losses") {
  Tape t;
  SECTION("cross entropy of uniform logits is ln K") {
    REQUIRE(cross_entropy(t.input(Matrix::Zero(1, 7)), 3).value()(0, 0) ==
            Approx(1.945910149055313).epsilon(1e-12));
    REQUIRE_THROWS_AS(cross_entropy(t.input(Matrix::Zero(1, 7)), 7), std::out_of_range);
  }
  SECTION("cross entropy with a large margin tends to zero") {
    Matrix l = Matrix::Zero(1, 4);
    l(0, 2) = 60.0;
    REQUIRE(cross_entropy(t.input(l), 2).value()(0, 0) < 1e-20);
  }
  SECTION("mse") {
    Matrix pred = Matrix::Zero(1, 2);
    REQUIRE(mse(t.input(pred), Matrix::Ones(1, 2)).value()(0, 0) == 1.0);
  }
  SECTION("masked mse averages per pixel over the listed rows") {
    Matrix pred = Matrix::Zero(4, 3);
    Matrix target = Matrix::Zero(4, 3);
    target.row(1).setConstant(2.0);
    target.row(2).setConstant(5.0);  // unlisted row: ignored
    REQUIRE(masked_mse(t.input(pred), target, {0, 1}).value()(0, 0) == Approx(2.0));
  }
}

TEST_CASE("every primitive passes the finite-difference check") {
  Rng rng(7);
  const Matrix a = random_matrix(3, 8, rng);
  const Matrix b = random_matrix(8, 4, rng);
  const Matrix c = random_matrix(5, 8, rng);
  const Matrix r = random_matrix(1, 8, rng);
  const Matrix sq = random_matrix(3, 8, rng);

  SECTION("matmul") {
    require_grad([](Tape&, const std::vector<Var>& v) { return readout(matmul(v[0], v[1])); }, {a, b});
  }
  SECTION("matmul_nt") {
    require_grad([](Tape&, const std::vector<Var>& v) { return readout(matmul_nt(v[0], v[1])); }, {a, c});
  }
  SECTION("matmul_tn") {
    const Matrix d = random_matrix(3, 5, rng);
    require_grad([](Tape&, const std::vector<Var>& v) { return readout(matmul_tn(v[0], v[1])); }, {a, d});
  }
  SECTION("add, add_row, scale") {
    require_grad(
        [](Tape&, const std::vector<Var>& v) { return readout(scale(add_row(add(v[0], v[1]), v[2]), -1.7)); },
        {a, sq, r});
  }
  SECTION("maximum") {
    require_grad([](Tape&, const std::vector<Var>& v) { return readout(maximum(v[0], v[1])); }, {a, sq});
  }
  SECTION("transpose") {
    require_grad([](Tape&, const std::vector<Var>& v) { return readout(transpose(v[0])); }, {a});
  }
  SECTION("gelu") {
    require_grad([](Tape&, const std::vector<Var>& v) { return readout(gelu(v[0])); }, {a});
  }
  SECTION("softmax_rows") {
    require_grad([](Tape&, const std::vector<Var>& v) { return readout(softmax_rows(v[0])); }, {a});
  }
  SECTION("layer_norm") {
    const Matrix gain = random_matrix(1, 8, rng);
    require_grad(
        [](Tape&, const std::vector<Var>& v) { return readout(layer_norm(v[0], v[1], v[2], 1e-6)); },
        {a, gain, r});
  }
  SECTION("slices and concatenations") {
    require_grad(
        [](Tape&, const std::vector<Var>& v) {
          const std::vector<Var> rows{slice_rows(v[0], 1, 2), v[1]};
          const std::vector<Var> cols{slice_cols(v[0], 2, 3), slice_cols(v[0], 0, 1)};
          return add(readout(concat_rows(rows), 1), readout(concat_cols(cols), 2));
        },
        {a, c});
  }
  SECTION("gather, scatter, mean") {
    require_grad(
        [](Tape&, const std::vector<Var>& v) {
          const Var g = gather_rows(v[0], {2, 0, 2, 1});
          const Var s = scatter_rows(v[0], {4, 1, 2}, v[1], 6);
          return add(add(readout(g, 1), readout(s, 2)), readout(mean_rows(v[0]), 3));
        },
        {a, r});
  }
  SECTION("losses") {
    const Matrix logits = random_matrix(1, 5, rng);
    const Matrix target = random_matrix(3, 8, rng);
    require_grad(
        [target](Tape&, const std::vector<Var>& v) {
          return add(add(cross_entropy(v[0], 3), mse(slice_rows(v[1], 0, 1), target.topRows(1))),
                     masked_mse(v[1], target, {0, 2}));
        },
        {logits, a});
  }
}
