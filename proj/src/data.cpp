// Copyright (c) 2026, SVFAP contributors
// SPDX-License-Identifier: Apache-2.0

#include "svfap/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <numbers>
#include <sstream>

namespace fs = std::filesystem;

namespace svfap {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) {
    return {};
  }
  return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const auto next = s.find(sep, pos);
    out.push_back(s.substr(pos, next == std::string::npos ? std::string::npos : next - pos));
    if (next == std::string::npos) {
      break;
    }
    pos = next + 1;
  }
  return out;
}

double parse_real(const std::string& s) {
  const std::string t = trim(s);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size()) {
    throw DataError("cannot parse number '" + s + "'");
  }
  return v;
}

std::string fmt_real(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

// Reads one whitespace-delimited header token, skipping '#' comments.
std::string ppm_token(std::istream& in) {
  std::string tok;
  char c = 0;
  while (in.get(c)) {
    if (c == '#') {
      std::string rest;
      std::getline(in, rest);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c)) != 0) {
      if (!tok.empty()) {
        break;
      }
      continue;
    }
    tok.push_back(c);
  }
  return tok;
}

}  // namespace

Image read_ppm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot open frame '" + path.string() + "'");
  }
  if (ppm_token(in) != "P6") {
    throw DataError("'" + path.string() + "' is not a binary PPM (P6)");
  }
  int w = 0;
  int h = 0;
  int maxval = 0;
  try {
    w = std::stoi(ppm_token(in));
    h = std::stoi(ppm_token(in));
    maxval = std::stoi(ppm_token(in));
  } catch (const std::exception&) {
    throw DataError("malformed PPM header in '" + path.string() + "'");
  }
  if (w <= 0 || h <= 0 || maxval != 255) {
    throw DataError("unsupported PPM geometry or depth in '" + path.string() + "'");
  }
  std::vector<unsigned char> bytes(static_cast<std::size_t>(w) * h * 3);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
    throw DataError("truncated PPM '" + path.string() + "'");
  }
  Image img(h, w);
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    img.rgb[i] = bytes[i] / 255.0;
  }
  return img;
}

void write_ppm(const fs::path& path, const Image& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw DataError("cannot write frame '" + path.string() + "'");
  }
  out << "P6\n" << img.width << " " << img.height << "\n255\n";
  std::vector<unsigned char> bytes(img.rgb.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    const double v = std::clamp(img.rgb[i], 0.0, 1.0);
    bytes[i] = static_cast<unsigned char>(std::lround(v * 255.0));
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw DataError("failed writing frame '" + path.string() + "'");
  }
}

Image crop_face_region(const Image& frame, int out_h, int out_w) {
  if (out_h <= 0 || out_w <= 0 || out_h > frame.height || out_w > frame.width) {
    throw ShapeError("crop_face_region: window " + std::to_string(out_h) + "x" + std::to_string(out_w) +
                     " does not fit frame " + std::to_string(frame.height) + "x" + std::to_string(frame.width));
  }
  const int left = (frame.width - out_w) / 2;
  Image out(out_h, out_w);
  for (int y = 0; y < out_h; ++y) {
    for (int x = 0; x < out_w; ++x) {
      for (int c = 0; c < 3; ++c) {
        out.at(y, x, c) = frame.at(y, left + x, c);
      }
    }
  }
  return out;
}

std::vector<int> sample_indices(int frame_count, int frames, int stride, int start) {
  if (frame_count <= 0) {
    throw DataError("sample_clip: empty frame list");
  }
  if (frames <= 0 || stride <= 0 || start < 0) {
    throw std::invalid_argument("sample_clip: frames and stride must be positive, start non-negative");
  }
  std::vector<int> idx(static_cast<std::size_t>(frames));
  for (int i = 0; i < frames; ++i) {
    idx[static_cast<std::size_t>(i)] = (start + i * stride) % frame_count;
  }
  return idx;
}

VideoClip sample_clip(std::span<const Image> frames, int t, int stride, int start) {
  const auto idx = sample_indices(static_cast<int>(frames.size()), t, stride, start);
  const Image& first = frames.front();
  VideoClip clip(t, first.height, first.width);
  for (int i = 0; i < t; ++i) {
    const Image& f = frames[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
    if (f.height != first.height || f.width != first.width) {
      throw ShapeError("sample_clip: frames differ in size");
    }
    std::copy(f.rgb.begin(), f.rgb.end(), clip.pixels.begin() + static_cast<std::ptrdiff_t>(clip.offset(i, 0, 0, 0)));
  }
  return clip;
}

int random_start(int frame_count, int frames, int stride, Rng& rng) {
  const int span = (frames - 1) * stride + 1;
  const int slack = std::max(0, frame_count - span);
  return static_cast<int>(rng.index(static_cast<std::uint64_t>(slack) + 1));
}

namespace {

const char* kind_name(LabelKind k) {
  switch (k) {
    case LabelKind::kClass:
      return "class";
    case LabelKind::kScores:
      return "scores";
    case LabelKind::kNone:
      return "none";
  }
  return "none";
}

LabelKind parse_kind(const std::string& s) {
  if (s == "class") {
    return LabelKind::kClass;
  }
  if (s == "scores") {
    return LabelKind::kScores;
  }
  if (s == "none") {
    return LabelKind::kNone;
  }
  throw DataError("unknown label_kind '" + s + "'");
}

std::string fmt_triple(const std::array<double, 3>& v) {
  return fmt_real(v[0]) + "," + fmt_real(v[1]) + "," + fmt_real(v[2]);
}

std::array<double, 3> parse_triple(const std::string& s) {
  const auto parts = split(s, ',');
  if (parts.size() != 3) {
    throw DataError("expected three comma-separated values, got '" + s + "'");
  }
  return {parse_real(parts[0]), parse_real(parts[1]), parse_real(parts[2])};
}

}  // namespace

void write_manifest(const fs::path& path, const Manifest& m) {
  std::ofstream out(path);
  if (!out) {
    throw DataError("cannot write manifest '" + path.string() + "'");
  }
  out << "# normalization mean=" << fmt_triple(m.norm.mean) << " std=" << fmt_triple(m.norm.std) << "\n";
  out << "path,label_kind,payload\n";
  for (const auto& r : m.rows) {
    out << r.path << "," << kind_name(r.kind) << "," << r.payload << "\n";
  }
}

Manifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open manifest '" + path.string() + "'");
  }
  Manifest m;
  std::string line;
  bool header = false;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty()) {
      continue;
    }
    if (line[0] == '#') {
      const auto mp = line.find("mean=");
      const auto sp = line.find("std=");
      if (mp != std::string::npos && sp != std::string::npos) {
        m.norm.mean = parse_triple(trim(line.substr(mp + 5, sp - mp - 5)));
        m.norm.std = parse_triple(trim(line.substr(sp + 4)));
      }
      continue;
    }
    if (!header) {
      if (line != "path,label_kind,payload") {
        throw DataError("manifest '" + path.string() + "': missing header 'path,label_kind,payload'");
      }
      header = true;
      continue;
    }
    const auto parts = split(line, ',');
    if (parts.size() != 3) {
      throw DataError("manifest '" + path.string() + "' line " + std::to_string(lineno) + ": expected 3 fields");
    }
    m.rows.push_back({parts[0], parse_kind(parts[1]), parts[2]});
  }
  if (!header) {
    throw DataError("manifest '" + path.string() + "' is empty");
  }
  return m;
}

Label parse_label(const ManifestRow& row) {
  switch (row.kind) {
    case LabelKind::kClass: {
      const std::string t = trim(row.payload);
      int v = 0;
      auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
      if (ec != std::errc() || ptr != t.data() + t.size()) {
        throw DataError("class payload '" + row.payload + "' is not an integer");
      }
      return v;
    }
    case LabelKind::kScores: {
      std::vector<double> s;
      for (const auto& p : split(row.payload, ';')) {
        s.push_back(parse_real(p));
      }
      return s;
    }
    case LabelKind::kNone:
      return std::monostate{};
  }
  return std::monostate{};
}

void validate_manifest(const Manifest& m, const fs::path& root, int num_classes, int score_dims) {
  for (const auto& r : m.rows) {
    if (!fs::exists(root / r.path)) {
      throw DataError("manifest path does not exist: " + (root / r.path).string());
    }
    const Label l = parse_label(r);
    if (const int* c = std::get_if<int>(&l)) {
      if (*c < 0 || *c >= num_classes) {
        throw DataError("class label " + std::to_string(*c) + " outside [0, " + std::to_string(num_classes) + ")");
      }
    } else if (const auto* s = std::get_if<std::vector<double>>(&l)) {
      if (static_cast<int>(s->size()) != score_dims) {
        throw DataError("score vector of length " + std::to_string(s->size()) + ", expected " +
                        std::to_string(score_dims));
      }
    }
  }
}

std::vector<Image> load_frames(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw DataError("clip directory does not exist: " + dir.string());
  }
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (e.is_regular_file() && name.size() > 5 && name[0] == 'f' && e.path().extension() == ".ppm") {
      files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    throw DataError("no frames in " + dir.string());
  }
  std::vector<Image> frames;
  frames.reserve(files.size());
  for (const auto& f : files) {
    frames.push_back(read_ppm(f));
  }
  return frames;
}

SynthMotion synth_motion(int cls, int num_classes) {
  SynthMotion m;
  m.mouth_amplitude = static_cast<double>(cls + 1) / num_classes;
  m.mouth_cycles = 1 + cls % 2;
  m.blink_frames = 1 + cls % 3;
  return m;
}

Image render_synth_frame(const SynthMotion& motion, int phase, int frame_count, int height, int width) {
  const double h = height;
  const double w = width;
  const double cy = 0.45 * h;
  const double cx = 0.5 * w;
  const double sy = 0.28 * h;
  const double sx = 0.22 * w;
  const bool blink = (phase % frame_count) < motion.blink_frames;
  const double eye_open = blink ? 0.15 : 1.0;
  const double eye_y = 0.38 * h;
  const double eye_dx = 0.13 * w;
  const double eye_s = 0.045 * w;
  const double swing = 0.5 + 0.5 * std::sin(2.0 * std::numbers::pi * motion.mouth_cycles * phase / frame_count);
  const double mouth_r = h * (0.03 + 0.09 * motion.mouth_amplitude * swing);
  const double mouth_y = 0.64 * h;
  const double mouth_s = 0.1 * w;
  const std::array<double, 3> skin{0.85, 0.65, 0.5};
  const std::array<double, 3> tint{0.9, 1.0, 1.1};

  Image img(height, width);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double fy = y + 0.5;
      const double fx = x + 0.5;
      const double face = std::exp(-0.5 * ((fy - cy) * (fy - cy) / (sy * sy) + (fx - cx) * (fx - cx) / (sx * sx)));
      double eyes = 0.0;
      for (double ex : {cx - eye_dx, cx + eye_dx}) {
        const double vy = (fy - eye_y) / (eye_s * eye_open);
        const double vx = (fx - ex) / eye_s;
        eyes = std::max(eyes, std::exp(-0.5 * (vy * vy + vx * vx)));
      }
      const double my = (fy - mouth_y) / mouth_r;
      const double mx = (fx - cx) / mouth_s;
      const double mouth = std::exp(-0.5 * (my * my + mx * mx));
      for (int c = 0; c < 3; ++c) {
        const double bg = (0.15 + 0.1 * fy / h) * tint[static_cast<std::size_t>(c)];
        double v = bg * (1.0 - face) + skin[static_cast<std::size_t>(c)] * face;
        v *= (1.0 - 0.85 * eyes) * (1.0 - 0.8 * mouth);
        img.at(y, x, c) = v;
      }
    }
  }
  return img;
}

namespace {

Image quantize(const Image& img) {
  Image q = img;
  for (double& v : q.rgb) {
    v = static_cast<double>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)) / 255.0;
  }
  return q;
}

}  // namespace

Manifest synth_generate(const SynthSpec& spec, const fs::path& out_dir) {
  if (spec.num_classes < 2) {
    throw std::invalid_argument("synth: need at least two classes");
  }
  if (spec.clips_per_class <= 0 || spec.geometry[0] <= 0 || spec.geometry[1] <= 0 || spec.geometry[2] <= 0) {
    throw std::invalid_argument("synth: clip counts and geometry must be positive");
  }
  if (!std::isfinite(spec.noise_std) || spec.noise_std < 0.0) {
    throw std::invalid_argument("synth: noise_std must be finite and non-negative");
  }
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) {
    throw DataError("cannot create output directory '" + out_dir.string() + "': " + ec.message());
  }
  const int frame_count = spec.geometry[0];
  const int height = spec.geometry[1];
  const int width = spec.geometry[2];
  Rng rng(spec.seed);

  Manifest classes;
  Manifest scores;
  std::array<double, 3> sum{};
  std::array<double, 3> sum_sq{};
  double count = 0.0;
  int clip_id = 0;
  for (int i = 0; i < spec.clips_per_class; ++i) {
    for (int cls = 0; cls < spec.num_classes; ++cls) {
      const SynthMotion motion = synth_motion(cls, spec.num_classes);
      const int shift = static_cast<int>(rng.index(static_cast<std::uint64_t>(frame_count)));
      char name[32];
      std::snprintf(name, sizeof(name), "clip_%05d", clip_id++);
      const fs::path dir = out_dir / name;
      fs::create_directories(dir, ec);
      if (ec) {
        throw DataError("cannot create clip directory '" + dir.string() + "': " + ec.message());
      }
      for (int f = 0; f < frame_count; ++f) {
        Image img = render_synth_frame(motion, (f + shift) % frame_count, frame_count, height, width);
        if (spec.noise_std > 0.0) {
          for (double& v : img.rgb) {
            v += spec.noise_std * rng.normal();
          }
        }
        img = quantize(img);
        for (std::size_t p = 0; p < img.rgb.size(); ++p) {
          sum[p % 3] += img.rgb[p];
          sum_sq[p % 3] += img.rgb[p] * img.rgb[p];
        }
        count += static_cast<double>(img.rgb.size()) / 3.0;
        char fname[32];
        std::snprintf(fname, sizeof(fname), "f%05d.ppm", f);
        write_ppm(dir / fname, img);
      }
      classes.rows.push_back({name, LabelKind::kClass, std::to_string(cls)});
      const double duty = static_cast<double>(motion.blink_frames) / frame_count;
      scores.rows.push_back({name, LabelKind::kScores, fmt_real(motion.mouth_amplitude) + ";" + fmt_real(duty)});
    }
  }
  Normalization norm;
  for (std::size_t c = 0; c < 3; ++c) {
    norm.mean[c] = sum[c] / count;
    norm.std[c] = std::sqrt(std::max(sum_sq[c] / count - norm.mean[c] * norm.mean[c], 1e-12));
  }
  classes.norm = norm;
  scores.norm = norm;
  write_manifest(out_dir / "manifest.csv", classes);
  write_manifest(out_dir / "manifest_scores.csv", scores);
  return classes;
}

Dataset load_dataset(const fs::path& manifest_path, int crop_h, int crop_w) {
  const Manifest m = read_manifest(manifest_path);
  const fs::path root = manifest_path.parent_path();
  Dataset ds;
  ds.norm = m.norm;
  std::vector<std::future<Sample>> jobs;
  jobs.reserve(m.rows.size());
  for (const auto& row : m.rows) {
    jobs.push_back(std::async(std::launch::async, [&root, row, crop_h, crop_w]() {
      Sample s;
      s.source_id = row.path;
      s.frames = load_frames(root / row.path);
      if (crop_h > 0 && crop_w > 0 && (s.frames.front().height != crop_h || s.frames.front().width != crop_w)) {
        for (auto& f : s.frames) {
          f = crop_face_region(f, crop_h, crop_w);
        }
      }
      s.label = parse_label(row);
      return s;
    }));
  }
  // Futures are drained in manifest order, so the result order never depends on scheduling.
  for (auto& j : jobs) {
    ds.samples.push_back(j.get());
  }
  int max_class = -1;
  for (const auto& s : ds.samples) {
    if (const int* c = std::get_if<int>(&s.label)) {
      if (*c < 0) {
        throw DataError("negative class label in " + manifest_path.string());
      }
      max_class = std::max(max_class, *c);
    } else if (const auto* v = std::get_if<std::vector<double>>(&s.label)) {
      if (ds.score_dims != 0 && ds.score_dims != static_cast<int>(v->size())) {
        throw DataError("score vectors of different lengths in " + manifest_path.string());
      }
      ds.score_dims = static_cast<int>(v->size());
    }
  }
  ds.num_classes = max_class + 1;
  return ds;
}

Normalization compute_normalization(std::span<const Sample> samples) {
  std::array<double, 3> sum{};
  std::array<double, 3> sum_sq{};
  double count = 0.0;
  for (const auto& s : samples) {
    for (const auto& f : s.frames) {
      for (std::size_t p = 0; p < f.rgb.size(); ++p) {
        sum[p % 3] += f.rgb[p];
        sum_sq[p % 3] += f.rgb[p] * f.rgb[p];
      }
      count += static_cast<double>(f.rgb.size()) / 3.0;
    }
  }
  Normalization n;
  if (count == 0.0) {
    return n;
  }
  for (std::size_t c = 0; c < 3; ++c) {
    n.mean[c] = sum[c] / count;
    n.std[c] = std::sqrt(std::max(sum_sq[c] / count - n.mean[c] * n.mean[c], 1e-12));
  }
  return n;
}

void normalize(VideoClip& clip, const Normalization& norm) {
  for (std::size_t p = 0; p < clip.pixels.size(); ++p) {
    clip.pixels[p] = (clip.pixels[p] - norm.mean[p % 3]) / norm.std[p % 3];
  }
}

void denormalize(VideoClip& clip, const Normalization& norm) {
  for (std::size_t p = 0; p < clip.pixels.size(); ++p) {
    clip.pixels[p] = clip.pixels[p] * norm.std[p % 3] + norm.mean[p % 3];
  }
}

}  // namespace svfap
