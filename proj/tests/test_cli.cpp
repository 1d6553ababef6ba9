// Copyright (c) 2026, SVFAP contributors
// SPDX-License-Identifier: Apache-2.0

#include "support/fixtures.hpp"

#include "cli.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <sstream>

using namespace svfap;
using namespace svfap::testing;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool contains(const std::string& haystack, const std::string& needle) {
  return haystack.find(needle) != std::string::npos;
}

}  // namespace

TEST_CASE("count prints the cost table") {
  const Result r = run_cli({"count", "--preset", "TPSBT-B"});
  INFO(r.err);
  CHECK(r.code == 0);
  CHECK(contains(r.out, "params"));
  CHECK(contains(r.out, "TPSBT-B"));

  const Result grid = run_cli({"count", "--table4"});
  CHECK(grid.code == 0);
  for (const char* v : {"vit_baseline", "tp_only", "sbt_only", "full"}) {
    CHECK(contains(grid.out, v));
  }

  const fs::path dir = scratch_dir("cli-count");
  CHECK(run_cli({"count", "--preset", "TPSBT-S", "--regime", "pretrain", "--out", dir.string()}).code == 0);
  CHECK(fs::exists(dir / "count.csv"));
  CHECK(fs::exists(dir / "run.json"));
}

TEST_CASE("usage and input errors exit nonzero with a diagnostic") {
  SECTION("missing config names the path") {
    const Result r = run_cli({"pretrain", "--config", "missing.cfg", "--data", "x.csv", "--out", "/tmp/none"});
    CHECK(r.code != 0);
    CHECK(contains(r.err, "missing.cfg"));
  }
  SECTION("unknown flag") { CHECK(run_cli({"count", "--bogus"}).code != 0); }
  SECTION("no subcommand") { CHECK(run_cli({}).code != 0); }
  SECTION("invalid override") {
    const Result r = run_cli({"count", "--preset", "TPSBT-X"});
    CHECK(r.code != 0);
    CHECK(contains(r.err, "TPSBT-X"));
  }
}

TEST_CASE("synth is deterministic") {
  const fs::path a = scratch_dir("cli-synth-a");
  const fs::path b = scratch_dir("cli-synth-b");
  for (const fs::path& d : {a, b}) {
    const Result r = run_cli({"synth", "--classes", "3", "--per-class", "4", "--seed", "7", "--frames", "8",
                              "--height", "16", "--width", "16", "--out", d.string()});
    INFO(r.err);
    REQUIRE(r.code == 0);
  }
  CHECK(slurp(a / "manifest.csv") == slurp(b / "manifest.csv"));
  CHECK(slurp(a / "manifest_scores.csv") == slurp(b / "manifest_scores.csv"));
  CHECK(slurp(a / "clip_00005" / "f00003.ppm") == slurp(b / "clip_00005" / "f00003.ppm"));
  const std::string run = slurp(a / "run.json");
  CHECK(contains(run, "\"seed\""));
  CHECK(contains(run, "git_describe"));
}

TEST_CASE("pretrain, fine-tune from it, evaluate and reconstruct") {
  const fs::path root = scratch_dir("cli-pipeline");
  REQUIRE(run_cli({"synth", "--classes", "2", "--per-class", "3", "--seed", "1", "--frames", "16", "--height", "16",
                   "--width", "16", "--out", (root / "data").string()})
              .code == 0);
  RunConfig cfg;
  cfg.arch = tiny_config();
  cfg.train.base_lr = 0.2;
  cfg.train.batch_size = 3;
  cfg.train.epochs = 2;
  cfg.train.warmup_epochs = 1;
  cfg.train.frame_stride = 2;
  save_config((root / "tiny.cfg").string(), cfg);
  const std::string manifest = (root / "data" / "manifest.csv").string();

  const Result pre = run_cli({"pretrain", "--config", (root / "tiny.cfg").string(), "--data", manifest, "--out",
                              (root / "pre").string()});
  INFO(pre.err);
  REQUIRE(pre.code == 0);
  REQUIRE(fs::exists(root / "pre" / "checkpoint.bin"));
  CHECK(contains(slurp(root / "pre" / "run.json"), "final_loss"));

  const Result ft = run_cli({"finetune", "--config", (root / "tiny.cfg").string(), "--set", "base_lr=0.05", "--data",
                             manifest, "--init", (root / "pre" / "checkpoint.bin").string(), "--out",
                             (root / "ft").string()});
  INFO(ft.err);
  REQUIRE(ft.code == 0);
  // Everything except head.weight and head.bias comes from the encoder.
  CHECK(contains(ft.out, "tensors loaded, 2 freshly initialized"));

  const Result ev = run_cli({"eval", "--checkpoint", (root / "ft" / "checkpoint.bin").string(), "--data", manifest,
                             "--out", (root / "eval").string()});
  INFO(ev.err);
  REQUIRE(ev.code == 0);
  const std::string metrics = slurp(root / "eval" / "metrics.csv");
  CHECK(contains(metrics, "metric,value"));
  CHECK(contains(metrics, "war,"));
  CHECK(contains(metrics, "uar,"));

  const Result rec = run_cli({"reconstruct", "--checkpoint", (root / "pre" / "checkpoint.bin").string(), "--data",
                              manifest, "--out", (root / "rec").string()});
  INFO(rec.err);
  REQUIRE(rec.code == 0);
  const Image strip = read_ppm(root / "rec" / "reconstruction.ppm");
  CHECK(strip.height == 3 * 16);
  CHECK(strip.width == 8 * 16);

  const Result both = run_cli({"finetune", "--data", manifest, "--init", (root / "pre" / "checkpoint.bin").string(),
                               "--resume", (root / "ft" / "checkpoint.bin").string(), "--out",
                               (root / "x").string()});
  CHECK(both.code != 0);

  // Nothing outside the --out directories was written.
  std::vector<std::string> entries;
  for (const auto& e : fs::directory_iterator(root)) {
    entries.push_back(e.path().filename().string());
  }
  std::sort(entries.begin(), entries.end());
  CHECK(entries == std::vector<std::string>{"data", "eval", "ft", "pre", "rec", "tiny.cfg"});
}
