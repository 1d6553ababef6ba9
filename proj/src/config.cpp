// Copyright (c) 2026, SVFAP contributors
// SPDX-License-Identifier: Apache-2.0

#include "svfap/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace svfap {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) {
    return {};
  }
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string fmt_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  const std::string s = trim(text);
  T v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConfigError("config key '" + std::string(key) + "': cannot parse '" + s + "'");
  }
  return v;
}

bool parse_bool(std::string_view key, std::string_view text) {
  const std::string s = trim(text);
  if (s == "true" || s == "1") {
    return true;
  }
  if (s == "false" || s == "0") {
    return false;
  }
  throw ConfigError("config key '" + std::string(key) + "': expected true/false, got '" + s + "'");
}

std::array<int, 3> parse_triple(std::string_view key, std::string_view text) {
  std::array<int, 3> out{};
  std::string s = trim(text);
  std::size_t pos = 0;
  for (int i = 0; i < 3; ++i) {
    const auto comma = s.find(',', pos);
    if ((i < 2) == (comma == std::string::npos)) {
      throw ConfigError("config key '" + std::string(key) + "': expected three comma-separated integers");
    }
    const auto end = i < 2 ? comma : s.size();
    out[static_cast<std::size_t>(i)] = parse_number<int>(key, std::string_view(s).substr(pos, end - pos));
    pos = end + 1;
  }
  return out;
}

std::string fmt_triple(const std::array<int, 3>& v) {
  return std::to_string(v[0]) + "," + std::to_string(v[1]) + "," + std::to_string(v[2]);
}

std::string fmt_bool(bool b) { return b ? "true" : "false"; }

}  // namespace

std::string to_string(Downsample d) {
  switch (d) {
    case Downsample::kConv:
      return "conv";
    case Downsample::kAvg:
      return "avg";
    case Downsample::kMax:
      return "max";
  }
  return "conv";
}

Downsample parse_downsample(std::string_view s) {
  if (s == "conv") {
    return Downsample::kConv;
  }
  if (s == "avg") {
    return Downsample::kAvg;
  }
  if (s == "max") {
    return Downsample::kMax;
  }
  throw ConfigError("downsample must be conv, avg or max, got '" + std::string(s) + "'");
}

int ArchConfig::visible_spatial() const {
  return static_cast<int>(std::lround(static_cast<double>(spatial_tokens()) * (1.0 - masking_ratio)));
}

int ArchConfig::stage_length(int stage) const {
  int t = grid()[0];
  if (temporal_pyramid) {
    for (int i = 1; i < stage; ++i) {
      t /= temporal_stride;
    }
  }
  return t;
}

int ArchConfig::replacement_depth(int stage) const {
  // An SBT block holds two C x C attention layers plus the FFN (16C² weights)
  // against 12C² for a standard block.
  const int m = stage_depths[static_cast<std::size_t>(stage - 1)];
  return static_cast<int>(std::lround(4.0 * m / 3.0));
}

TrainConfig TrainConfig::pretrain_defaults() { return TrainConfig{}; }

TrainConfig TrainConfig::finetune_defaults() {
  TrainConfig t;
  t.base_lr = 1e-3;
  t.batch_size = 96;
  t.beta2 = 0.999;
  return t;
}

Preset parse_preset(std::string_view name) {
  if (name == "TPSBT-S") {
    return Preset::kSmall;
  }
  if (name == "TPSBT-B") {
    return Preset::kBase;
  }
  throw ConfigError("unknown preset '" + std::string(name) + "' (expected TPSBT-S or TPSBT-B)");
}

std::string to_string(Preset p) { return p == Preset::kSmall ? "TPSBT-S" : "TPSBT-B"; }

ArchConfig preset(Preset p) {
  ArchConfig c;
  if (p == Preset::kSmall) {
    c.embed_dim = 384;
    c.stage_depths = {8, 4, 2};
  } else {
    c.embed_dim = 512;
    c.stage_depths = {12, 6, 3};
  }
  c.heads = c.embed_dim / 64;
  c.spatial_hidden = c.embed_dim / 4;
  c.bottleneck_tokens = 8;
  c.temporal_stride = 2;
  c.masking_ratio = 0.9;
  c.patch = {2, 16, 16};
  c.input = {16, 160, 160};
  c.decoder_dim = 384;
  c.decoder_depth = 4;
  c.decoder_heads = 6;
  return c;
}

std::vector<std::string> check(const ArchConfig& c) {
  std::vector<std::string> errs;
  auto positive = [&](int v, const char* name) {
    if (v <= 0) {
      errs.push_back(std::string(name) + " must be positive");
    }
  };
  positive(c.embed_dim, "embed_dim");
  for (int i = 0; i < 3; ++i) {
    positive(c.stage_depths[static_cast<std::size_t>(i)], "stage_depths");
    positive(c.patch[static_cast<std::size_t>(i)], "patch");
    positive(c.input[static_cast<std::size_t>(i)], "input");
  }
  positive(c.bottleneck_tokens, "bottleneck_tokens");
  positive(c.temporal_stride, "temporal_stride");
  positive(c.heads, "heads");
  positive(c.decoder_dim, "decoder_dim");
  positive(c.decoder_depth, "decoder_depth");
  positive(c.decoder_heads, "decoder_heads");
  positive(c.spatial_hidden, "spatial_hidden");
  if (!errs.empty()) {
    return errs;
  }
  if (!(c.masking_ratio >= 0.0 && c.masking_ratio < 1.0)) {
    errs.push_back("masking_ratio must lie in [0, 1)");
  }
  if (c.input[0] % c.patch[0] != 0) {
    errs.push_back("input: T not divisible by pt");
  }
  if (c.input[1] % c.patch[1] != 0) {
    errs.push_back("input: H not divisible by ph");
  }
  if (c.input[2] % c.patch[2] != 0) {
    errs.push_back("input: W not divisible by pw");
  }
  if (c.embed_dim % c.heads != 0) {
    errs.push_back("embed_dim: C not divisible by heads");
  }
  if (c.decoder_dim % c.decoder_heads != 0) {
    errs.push_back("decoder_dim: not divisible by decoder_heads");
  }
  if (c.embed_dim < 2 || c.decoder_dim < 2) {
    errs.push_back("embed_dim/decoder_dim: layer normalization needs at least two features");
  }
  if (c.embed_dim % 2 != 0 || c.decoder_dim % 2 != 0) {
    errs.push_back("embed_dim/decoder_dim: sinusoidal positions need an even width");
  }
  if (c.temporal_pyramid && c.input[0] % c.patch[0] == 0) {
    const double t1 = static_cast<double>(c.input[0]) / c.patch[0];
    const double k = c.temporal_stride;
    if (t1 / (k * k) < 1.0) {
      errs.push_back("temporal_stride: stage-3 temporal length < 1");
    } else {
      const int t = c.input[0] / c.patch[0];
      if (t % c.temporal_stride != 0 || (t / c.temporal_stride) % c.temporal_stride != 0) {
        errs.push_back("temporal_stride: stage temporal lengths not divisible by k");
      }
    }
  }
  if (c.input[1] % c.patch[1] == 0 && c.input[2] % c.patch[2] == 0 && c.masking_ratio >= 0.0 &&
      c.masking_ratio < 1.0 && c.visible_spatial() < 1) {
    errs.push_back("masking_ratio: leaves no visible spatial token");
  }
  return errs;
}

std::vector<std::string> check(const TrainConfig& t) {
  std::vector<std::string> errs;
  if (!(t.base_lr > 0.0)) {
    errs.push_back("base_lr must be positive");
  }
  if (t.batch_size <= 0) {
    errs.push_back("batch_size must be positive");
  }
  if (!(t.beta1 > 0.0 && t.beta1 < 1.0)) {
    errs.push_back("beta1 must lie in (0, 1)");
  }
  if (!(t.beta2 > 0.0 && t.beta2 < 1.0)) {
    errs.push_back("beta2 must lie in (0, 1)");
  }
  if (t.epochs <= 0) {
    errs.push_back("epochs must be positive");
  }
  if (t.warmup_epochs < 0 || t.warmup_epochs >= t.epochs) {
    errs.push_back("warmup_epochs must be in [0, epochs)");
  }
  if (!(t.weight_decay >= 0.0)) {
    errs.push_back("weight_decay must be non-negative");
  }
  if (t.frame_stride <= 0) {
    errs.push_back("frame_stride must be positive");
  }
  return errs;
}

namespace {

std::string join(const std::vector<std::string>& errs) {
  std::string msg = "invalid configuration:";
  for (const auto& e : errs) {
    msg += "\n  " + e;
  }
  return msg;
}

}  // namespace

void validate(const ArchConfig& cfg) {
  const auto errs = check(cfg);
  if (!errs.empty()) {
    throw ConfigError(join(errs));
  }
}

void validate(const RunConfig& cfg) {
  auto errs = check(cfg.arch);
  const auto terrs = check(cfg.train);
  errs.insert(errs.end(), terrs.begin(), terrs.end());
  if (!errs.empty()) {
    throw ConfigError(join(errs));
  }
}

std::string serialize(const RunConfig& cfg) {
  const ArchConfig& a = cfg.arch;
  const TrainConfig& t = cfg.train;
  std::ostringstream os;
  os << "embed_dim = " << a.embed_dim << "\n"
     << "stage_depths = " << fmt_triple(a.stage_depths) << "\n"
     << "bottleneck_tokens = " << a.bottleneck_tokens << "\n"
     << "temporal_stride = " << a.temporal_stride << "\n"
     << "masking_ratio = " << fmt_double(a.masking_ratio) << "\n"
     << "patch = " << fmt_triple(a.patch) << "\n"
     << "input = " << fmt_triple(a.input) << "\n"
     << "heads = " << a.heads << "\n"
     << "head_dim = " << a.head_dim() << "\n"
     << "decoder_dim = " << a.decoder_dim << "\n"
     << "decoder_depth = " << a.decoder_depth << "\n"
     << "decoder_heads = " << a.decoder_heads << "\n"
     << "spatial_hidden = " << a.spatial_hidden << "\n"
     << "spatial_softmax = " << fmt_bool(a.spatial_softmax) << "\n"
     << "downsample = " << to_string(a.downsample) << "\n"
     << "temporal_pyramid = " << fmt_bool(a.temporal_pyramid) << "\n"
     << "spatial_bottleneck = " << fmt_bool(a.spatial_bottleneck) << "\n"
     << "fusion_pretrain = " << fmt_bool(a.fusion_pretrain) << "\n"
     << "fusion_finetune = " << fmt_bool(a.fusion_finetune) << "\n"
     << "base_lr = " << fmt_double(t.base_lr) << "\n"
     << "batch_size = " << t.batch_size << "\n"
     << "weight_decay = " << fmt_double(t.weight_decay) << "\n"
     << "beta1 = " << fmt_double(t.beta1) << "\n"
     << "beta2 = " << fmt_double(t.beta2) << "\n"
     << "epochs = " << t.epochs << "\n"
     << "warmup_epochs = " << t.warmup_epochs << "\n"
     << "seed = " << t.seed << "\n"
     << "frame_stride = " << t.frame_stride << "\n";
  return os.str();
}

void set_field(RunConfig& cfg, std::string_view key, std::string_view value) {
  ArchConfig& a = cfg.arch;
  TrainConfig& t = cfg.train;
  const std::string v = trim(value);
  if (key == "embed_dim") {
    a.embed_dim = parse_number<int>(key, v);
  } else if (key == "stage_depths") {
    a.stage_depths = parse_triple(key, v);
  } else if (key == "bottleneck_tokens") {
    a.bottleneck_tokens = parse_number<int>(key, v);
  } else if (key == "temporal_stride") {
    a.temporal_stride = parse_number<int>(key, v);
  } else if (key == "masking_ratio") {
    a.masking_ratio = parse_number<double>(key, v);
  } else if (key == "patch") {
    a.patch = parse_triple(key, v);
  } else if (key == "input") {
    a.input = parse_triple(key, v);
  } else if (key == "heads") {
    a.heads = parse_number<int>(key, v);
  } else if (key == "head_dim") {
    // Derived (embed_dim / heads); checked after the whole file is read.
  } else if (key == "decoder_dim") {
    a.decoder_dim = parse_number<int>(key, v);
  } else if (key == "decoder_depth") {
    a.decoder_depth = parse_number<int>(key, v);
  } else if (key == "decoder_heads") {
    a.decoder_heads = parse_number<int>(key, v);
  } else if (key == "spatial_hidden") {
    a.spatial_hidden = parse_number<int>(key, v);
  } else if (key == "spatial_softmax") {
    a.spatial_softmax = parse_bool(key, v);
  } else if (key == "downsample") {
    a.downsample = parse_downsample(v);
  } else if (key == "temporal_pyramid") {
    a.temporal_pyramid = parse_bool(key, v);
  } else if (key == "spatial_bottleneck") {
    a.spatial_bottleneck = parse_bool(key, v);
  } else if (key == "fusion_pretrain") {
    a.fusion_pretrain = parse_bool(key, v);
  } else if (key == "fusion_finetune") {
    a.fusion_finetune = parse_bool(key, v);
  } else if (key == "base_lr") {
    t.base_lr = parse_number<double>(key, v);
  } else if (key == "batch_size") {
    t.batch_size = parse_number<int>(key, v);
  } else if (key == "weight_decay") {
    t.weight_decay = parse_number<double>(key, v);
  } else if (key == "beta1") {
    t.beta1 = parse_number<double>(key, v);
  } else if (key == "beta2") {
    t.beta2 = parse_number<double>(key, v);
  } else if (key == "epochs") {
    t.epochs = parse_number<int>(key, v);
  } else if (key == "warmup_epochs") {
    t.warmup_epochs = parse_number<int>(key, v);
  } else if (key == "seed") {
    t.seed = parse_number<std::uint64_t>(key, v);
  } else if (key == "frame_stride") {
    t.frame_stride = parse_number<int>(key, v);
  } else {
    throw ConfigError("unknown config key '" + std::string(key) + "'");
  }
}

void apply_override(RunConfig& cfg, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError("expected key=value, got '" + std::string(assignment) + "'");
  }
  set_field(cfg, trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

RunConfig deserialize(std::string_view text, RunConfig base) {
  std::istringstream is{std::string(text)};
  std::string line;
  int declared_head_dim = -1;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string s = trim(line);
    if (s.empty() || s[0] == '#') {
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(std::string_view(s).substr(0, eq));
    if (key == "head_dim") {
      declared_head_dim = parse_number<int>(key, std::string_view(s).substr(eq + 1));
    }
    set_field(base, key, std::string_view(s).substr(eq + 1));
  }
  if (declared_head_dim >= 0 && declared_head_dim != base.arch.head_dim()) {
    throw ConfigError("head_dim " + std::to_string(declared_head_dim) + " disagrees with embed_dim/heads = " +
                      std::to_string(base.arch.head_dim()));
  }
  return base;
}

RunConfig load_config(const std::string& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file '" + path + "'");
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize(ss.str(), std::move(base));
}

void save_config(const std::string& path, const RunConfig& cfg) {
  std::ofstream out(path);
  if (!out) {
    throw ConfigError("cannot write config file '" + path + "'");
  }
  out << serialize(cfg);
}

}  // namespace svfap
