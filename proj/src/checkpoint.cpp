// Copyright (c) 2026, SVFAP contributors
// SPDX-License-Identifier: Apache-2.0

#include "svfap/checkpoint.hpp"

#include "svfap/model.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

namespace svfap {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

constexpr std::array<char, 8> kMagic{'S', 'V', 'F', 'A', 'P', 'C', 'K', 'P'};

class Writer {
 public:
  explicit Writer(std::ofstream& out) : out_(out) {}

  template <typename T>
  void pod(T v) {
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void str(const std::string& s) {
    pod<std::uint64_t>(s.size());
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void doubles(const double* p, std::size_t n) {
    out_.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
  }

 private:
  std::ofstream& out_;
};

class Reader {
 public:
  Reader(std::ifstream& in, std::string path) : in_(in), path_(std::move(path)) {}

  template <typename T>
  T pod() {
    T v{};
    read(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
  }
  std::string str() {
    const auto n = pod<std::uint64_t>();
    if (n > (std::uint64_t{1} << 32)) {
      fail("string length " + std::to_string(n) + " is implausible");
    }
    std::string s(n, '\0');
    read(s.data(), n);
    return s;
  }
  void doubles(double* p, std::size_t n) { read(reinterpret_cast<char*>(p), n * sizeof(double)); }

  [[noreturn]] void fail(const std::string& why) const { throw CheckpointError(path_ + ": " + why); }

 private:
  void read(char* p, std::size_t n) {
    in_.read(p, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      fail("truncated file");
    }
  }

  std::ifstream& in_;
  std::string path_;
};

Matrix read_matrix(Reader& r, Index rows, Index cols) {
  Matrix m(rows, cols);
  r.doubles(m.data(), static_cast<std::size_t>(m.size()));
  return m;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const TrainState& state) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw CheckpointError("cannot open " + path.string() + " for writing");
  }
  Writer w(out);
  out.write(kMagic.data(), kMagic.size());
  w.pod(kCheckpointMajor);
  w.pod(kCheckpointMinor);
  w.str(serialize(state.cfg));
  w.str(to_string(state.task));
  w.pod<std::int32_t>(state.outputs);
  w.pod<std::int32_t>(state.epoch);
  w.pod<std::int64_t>(state.adam.step);
  w.str(state.rng.state());
  w.doubles(state.norm.mean.data(), 3);
  w.doubles(state.norm.std.data(), 3);
  w.pod<std::uint64_t>(state.losses.size());
  w.doubles(state.losses.data(), state.losses.size());
  w.pod<std::uint64_t>(state.params.entries().size());
  for (const auto& [name, p] : state.params.entries()) {
    w.str(name);
    w.pod<std::int64_t>(p.rows);
    w.pod<std::int64_t>(p.cols);
    w.pod<std::uint8_t>(p.decay ? 1 : 0);
    w.doubles(p.value.data(), p.size());
    const auto m = state.adam.m.find(name);
    const bool moments = m != state.adam.m.end() && m->second.size() != 0;
    w.pod<std::uint8_t>(moments ? 1 : 0);
    if (moments) {
      w.doubles(m->second.data(), p.size());
      w.doubles(state.adam.v.at(name).data(), p.size());
    }
  }
  if (!out) {
    throw CheckpointError("write failed for " + path.string());
  }
}

TrainState load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw CheckpointError("cannot open " + path.string());
  }
  Reader r(in, path.string());
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) {
    r.fail("not a checkpoint file");
  }
  const auto major = r.pod<std::uint32_t>();
  r.pod<std::uint32_t>();  // minor: additive changes only
  if (major != kCheckpointMajor) {
    r.fail("format version " + std::to_string(major) + " is not supported (expected " +
           std::to_string(kCheckpointMajor) + ")");
  }
  TrainState s;
  s.cfg = deserialize(r.str());
  s.task = parse_task(r.str());
  s.outputs = r.pod<std::int32_t>();
  s.epoch = r.pod<std::int32_t>();
  s.adam.step = r.pod<std::int64_t>();
  s.rng.restore(r.str());
  r.doubles(s.norm.mean.data(), 3);
  r.doubles(s.norm.std.data(), 3);
  s.losses.resize(r.pod<std::uint64_t>());
  r.doubles(s.losses.data(), s.losses.size());

  // The tensor set must be exactly what this config builds.
  ParamStore expected(/*shape_only=*/true);
  Rng scratch;
  init_model(expected, s.cfg.arch, scratch, s.task == Task::kPretrain, s.outputs);
  const auto count = r.pod<std::uint64_t>();
  if (count != expected.entries().size()) {
    r.fail("holds " + std::to_string(count) + " tensors, the config defines " +
           std::to_string(expected.entries().size()));
  }
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::string name = r.str();
    if (!expected.contains(name)) {
      r.fail("unexpected tensor " + name);
    }
    Param p;
    p.rows = r.pod<std::int64_t>();
    p.cols = r.pod<std::int64_t>();
    const Param& want = expected.at(name);
    if (p.rows != want.rows || p.cols != want.cols) {
      r.fail("tensor " + name + " has shape " + std::to_string(p.rows) + "x" + std::to_string(p.cols));
    }
    p.decay = r.pod<std::uint8_t>() != 0;
    p.value = read_matrix(r, p.rows, p.cols);
    if (r.pod<std::uint8_t>() != 0) {
      s.adam.m[name] = read_matrix(r, p.rows, p.cols);
      s.adam.v[name] = read_matrix(r, p.rows, p.cols);
    }
    s.params.entries().emplace(name, std::move(p));
  }
  return s;
}

}  // namespace svfap
