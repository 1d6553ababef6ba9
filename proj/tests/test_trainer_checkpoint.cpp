// Copyright (c) 2026, SVFAP contributors
// SPDX-License-Identifier: Apache-2.0

#include "support/fixtures.hpp"

#include "svfap/checkpoint.hpp"
#include "svfap/trainer.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <fstream>
#include <limits>

using namespace svfap;
using namespace svfap::testing;
using Catch::Approx;
namespace fs = std::filesystem;

namespace {

RunConfig tiny_run(int epochs = 4) {
  RunConfig cfg;
  cfg.arch = tiny_config();
  cfg.train = TrainConfig::pretrain_defaults();
  cfg.train.base_lr = 0.2;
  cfg.train.batch_size = 4;
  cfg.train.epochs = epochs;
  cfg.train.warmup_epochs = 1;
  cfg.train.frame_stride = 2;
  cfg.train.seed = 5;
  return cfg;
}

void require_same_params(const ParamStore& a, const ParamStore& b) {
  REQUIRE(a.entries().size() == b.entries().size());
  for (const auto& [name, p] : a.entries()) {
    INFO(name);
    REQUIRE(p.value == b.at(name).value);
  }
}

ParamStore scalar_store(double w, bool decay) {
  ParamStore store;
  Rng rng(0);
  Param& p = store.create(decay ? "w" : "b", decay ? 2 : 1, 1, Init::kZeros, rng);
  p.value.setConstant(w);
  p.decay = decay;
  return store;
}

}  // namespace

TEST_CASE("learning-rate scaling and schedule") {
  CHECK(scaled_lr(3e-4, 256) == Approx(3e-4).epsilon(1e-15));
  CHECK(scaled_lr(3e-4, 128) == Approx(1.5e-4).epsilon(1e-15));
  CHECK(scaled_lr(3e-4, 512) == Approx(6e-4).epsilon(1e-15));

  CHECK(lr_at(0, 110, 10, 1.0) == 0.0);
  CHECK(lr_at(5, 110, 10, 1.0) == Approx(0.5));
  CHECK(lr_at(10, 110, 10, 1.0) == Approx(1.0).epsilon(1e-15));
  CHECK(std::abs(lr_at(60, 110, 10, 2.0) - 1.0) < 1e-12);
  CHECK(lr_at(109, 110, 10, 1.0) > 0.0);
  CHECK(lr_at(109, 110, 10, 1.0) < 1e-3);
  CHECK(lr_at(0, 10, 0, 0.7) == Approx(0.7));
  CHECK_THROWS_AS(lr_at(110, 110, 10, 1.0), std::out_of_range);
  CHECK_THROWS_AS(lr_at(-1, 110, 10, 1.0), std::out_of_range);
  double prev = 2.0;
  for (long s = 10; s < 110; ++s) {
    const double lr = lr_at(s, 110, 10, 1.0);
    REQUIRE(lr <= prev);
    prev = lr;
  }
}

TEST_CASE("AdamW closed forms") {
  AdamHyper h;
  h.lr = 0.01;
  h.beta1 = 0.9;
  h.beta2 = 0.95;
  SECTION("zero gradient and no decay leave weights unchanged") {
    ParamStore store = scalar_store(1.5, true);
    store.at("w").grad = Matrix::Zero(2, 1);
    AdamState st;
    optimize_step(store, st, h);
    CHECK((store.at("w").value.array() == 1.5).all());
    CHECK(st.step == 1);
  }
  SECTION("constant gradient moves by lr·g/(|g|+eps) per step") {
    ParamStore store = scalar_store(1.0, true);
    AdamState st;
    const double g = 0.37;
    double expected = 1.0;
    for (int step = 0; step < 5; ++step) {
      store.at("w").grad = Matrix::Constant(2, 1, g);
      optimize_step(store, st, h);
      expected -= h.lr * g / (std::abs(g) + h.eps);
      REQUIRE(std::abs(store.at("w").value(0, 0) - expected) < 1e-9);
    }
  }
  SECTION("decay only") {
    h.weight_decay = 0.05;
    ParamStore store = scalar_store(2.0, true);
    store.at("w").grad = Matrix::Zero(2, 1);
    AdamState st;
    optimize_step(store, st, h);
    CHECK(store.at("w").value(0, 0) == Approx(2.0 * (1.0 - 0.01 * 0.05)).epsilon(1e-15));
  }
  SECTION("single-row tensors are not decayed") {
    h.weight_decay = 0.05;
    ParamStore store;
    Rng rng(0);
    store.create("encoder.stage1.blocks.0.norm1.bias", 1, 3, Init::kOnes, rng);
    store.create("decoder.mask_token", 1, 3, Init::kOnes, rng);
    AdamState st;
    optimize_step(store, st, h);
    for (const auto& [name, p] : store.entries()) {
      CHECK(!p.decay);
      CHECK((p.value.array() == 1.0).all());
    }
  }
  SECTION("non-finite gradients abort before any update") {
    ParamStore store;
    Rng rng(0);
    store.create("a", 2, 2, Init::kOnes, rng).grad = Matrix::Constant(2, 2, 0.5);
    Param& bad = store.create("b", 2, 2, Init::kOnes, rng);
    bad.grad = Matrix::Constant(2, 2, 0.5);
    bad.grad(1, 0) = std::numeric_limits<double>::quiet_NaN();
    AdamState st;
    try {
      optimize_step(store, st, h);
      FAIL("expected NonFiniteGradient");
    } catch (const NonFiniteGradient& e) {
      CHECK(std::string(e.what()).find("b") != std::string::npos);
    }
    CHECK(st.step == 0);
    CHECK(st.m.empty());
    CHECK((store.at("a").value.array() == 1.0).all());
  }
}

TEST_CASE("task names") {
  for (Task t : {Task::kPretrain, Task::kClassify, Task::kRegress}) {
    CHECK(parse_task(to_string(t)) == t);
  }
  CHECK_THROWS(parse_task("segment"));
}

TEST_CASE("seeded training is deterministic and resumable") {
  const Dataset data = synth_dataset("trainer-det", 2, 4, {16, 16, 16}, 0.05, 3);
  SECTION("pretraining") {
    const RunConfig cfg = tiny_run();
    TrainState a = make_state(cfg, Task::kPretrain, 0);
    TrainState b = make_state(cfg, Task::kPretrain, 0);
    train(a, data, cfg.train.epochs);
    train(b, data, cfg.train.epochs);
    REQUIRE(a.losses.size() == 8);
    CHECK(a.losses == b.losses);
    require_same_params(a.params, b.params);

    const fs::path dir = scratch_dir("trainer-resume");
    TrainState c = make_state(cfg, Task::kPretrain, 0);
    train(c, data, 2);
    save_checkpoint(dir / "mid.ckpt", c);
    TrainState d = load_checkpoint(dir / "mid.ckpt");
    CHECK(d.epoch == 2);
    CHECK(d.adam.step == 4);
    CHECK(d.cfg == cfg);
    CHECK(d.norm == data.norm);
    train(d, data, cfg.train.epochs);
    CHECK(d.losses == a.losses);
    require_same_params(d.params, a.params);
  }
  SECTION("classification") {
    RunConfig cfg = tiny_run();
    cfg.train = TrainConfig::finetune_defaults();
    cfg.train.epochs = 3;
    cfg.train.warmup_epochs = 1;
    cfg.train.batch_size = 3;
    cfg.train.frame_stride = 2;
    TrainState a = make_state(cfg, Task::kClassify, 2);
    train(a, data, 3);
    const fs::path dir = scratch_dir("trainer-resume-cls");
    TrainState c = make_state(cfg, Task::kClassify, 2);
    train(c, data, 1);
    save_checkpoint(dir / "c.ckpt", c);
    TrainState d = load_checkpoint(dir / "c.ckpt");
    train(d, data, 3);
    CHECK(d.losses == a.losses);
    require_same_params(d.params, a.params);
    const Evaluation ea = evaluate(a, data);
    const Evaluation ed = evaluate(d, data);
    CHECK(ea.predicted == ed.predicted);
    CHECK(ea.labels.size() == 8);
  }
}

TEST_CASE("checkpoint container") {
  const Dataset data = synth_dataset("ckpt-data", 2, 2, {16, 16, 16}, 0.0, 1);
  const RunConfig cfg = tiny_run(2);
  TrainState s = make_state(cfg, Task::kPretrain, 0);
  train(s, data, 1);
  const fs::path dir = scratch_dir("ckpt");
  const fs::path path = dir / "s.ckpt";
  save_checkpoint(path, s);

  SECTION("round trip keeps every field") {
    const TrainState r = load_checkpoint(path);
    CHECK(r.task == s.task);
    CHECK(r.outputs == 0);
    CHECK(r.rng == s.rng);
    CHECK(r.losses == s.losses);
    CHECK(r.adam.step == s.adam.step);
    require_same_params(r.params, s.params);
    for (const auto& [name, m] : s.adam.m) {
      REQUIRE(r.adam.m.at(name) == m);
      REQUIRE(r.adam.v.at(name) == s.adam.v.at(name));
    }
  }
  auto patch_byte = [&](std::size_t offset, char value) {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(static_cast<std::streamoff>(offset));
    f.put(value);
  };
  SECTION("other major versions are rejected") {
    patch_byte(8, 2);  // major version follows the 8-byte magic
    CHECK_THROWS_AS(load_checkpoint(path), CheckpointError);
  }
  SECTION("newer minor versions are accepted") {
    patch_byte(12, 7);
    CHECK_NOTHROW(load_checkpoint(path));
  }
  SECTION("bad magic") {
    patch_byte(0, 'X');
    CHECK_THROWS_AS(load_checkpoint(path), CheckpointError);
  }
  SECTION("truncated file") {
    fs::resize_file(path, fs::file_size(path) / 2);
    CHECK_THROWS_AS(load_checkpoint(path), CheckpointError);
  }
  SECTION("missing file") { CHECK_THROWS_AS(load_checkpoint(dir / "none.ckpt"), CheckpointError); }
}

TEST_CASE("encoder transfer copies matching encoder tensors only") {
  const RunConfig cfg = tiny_run();
  const TrainState pre = make_state(cfg, Task::kPretrain, 0);
  RunConfig ft = cfg;
  ft.train.seed = 99;
  TrainState down = make_state(ft, Task::kClassify, 3);
  const std::size_t copied = load_encoder(down.params, pre.params);
  std::size_t encoder_tensors = 0;
  for (const auto& [name, p] : down.params.entries()) {
    if (name.rfind("encoder.", 0) == 0) {
      ++encoder_tensors;
      REQUIRE(p.value == pre.params.at(name).value);
    } else {
      CHECK(!pre.params.contains(name));
    }
  }
  CHECK(copied == encoder_tensors);
  CHECK(down.params.entries().size() == copied + 2);
}

TEST_CASE("short pretraining run lowers the reconstruction loss") {
  const Dataset data = synth_dataset("trainer-smoke", 4, 16, {16, 16, 16}, 0.0, 2);
  RunConfig cfg = tiny_run(30);
  cfg.train.batch_size = 8;
  cfg.train.warmup_epochs = 2;
  TrainState s = make_state(cfg, Task::kPretrain, 0);
  std::vector<double> epoch_means;
  train(s, data, 30, [&](const EpochReport& r) { epoch_means.push_back(r.mean_loss); });
  REQUIRE(epoch_means.size() == 30);
  CHECK(epoch_means.back() < epoch_means.front());
}

TEST_CASE("the decoder overfits four clips") {
  const Dataset data = synth_dataset("trainer-overfit", 2, 2, {16, 16, 16}, 0.0, 4);
  RunConfig cfg = tiny_run(500);
  cfg.train.batch_size = 1;  // 4 steps per epoch, 2000 optimizer steps
  cfg.train.base_lr = 1.6;  // peak 6.25e-3 after batch scaling
  cfg.train.warmup_epochs = 10;
  TrainState s = make_state(cfg, Task::kPretrain, 0);
  std::vector<double> epoch_means;
  train(s, data, 500, [&](const EpochReport& r) { epoch_means.push_back(r.mean_loss); });
  REQUIRE(s.adam.step == 2000);
  INFO("first " << epoch_means.front() << " last " << epoch_means.back());
  CHECK(epoch_means.back() < 0.1 * epoch_means.front());
}
