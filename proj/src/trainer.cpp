// Copyright (c) 2026, SVFAP contributors
// SPDX-License-Identifier: Apache-2.0

#include "svfap/trainer.hpp"

#include "svfap/model.hpp"
#include "svfap/tokenizer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace svfap {

double scaled_lr(double base_lr, int batch_size) {
  if (batch_size < 1) {
    throw std::invalid_argument("scaled_lr: batch_size must be positive");
  }
  return base_lr * batch_size / 256.0;
}

double lr_at(long step, long total_steps, long warmup_steps, double peak_lr) {
  if (step < 0 || step >= total_steps) {
    throw std::out_of_range("lr_at: step " + std::to_string(step) + " outside [0, " + std::to_string(total_steps) +
                            ")");
  }
  if (step < warmup_steps) {
    return peak_lr * static_cast<double>(step) / static_cast<double>(warmup_steps);
  }
  const long decay = total_steps - warmup_steps;
  const double progress = static_cast<double>(step - warmup_steps) / static_cast<double>(decay);
  return peak_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

void optimize_step(ParamStore& params, AdamState& state, const AdamHyper& h) {
  for (const auto& [name, p] : params.entries()) {
    if (p.grad.size() != 0 && !all_finite(p.grad)) {
      throw NonFiniteGradient("non-finite gradient in " + name + " at optimizer step " +
                              std::to_string(state.step + 1));
    }
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(h.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(h.beta2, static_cast<double>(state.step));
  for (auto& [name, p] : params.entries()) {
    Matrix& m = state.m[name];
    Matrix& v = state.v[name];
    if (m.size() == 0) {
      m = Matrix::Zero(p.rows, p.cols);
      v = Matrix::Zero(p.rows, p.cols);
    }
    if (p.grad.size() != 0) {
      m = h.beta1 * m + (1.0 - h.beta1) * p.grad;
      v = h.beta2 * v + (1.0 - h.beta2) * p.grad.cwiseProduct(p.grad);
    } else {
      m *= h.beta1;
      v *= h.beta2;
    }
    if (p.decay) {
      p.value *= 1.0 - h.lr * h.weight_decay;
    }
    p.value.array() -= h.lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + h.eps);
  }
}

std::string to_string(Task t) {
  switch (t) {
    case Task::kPretrain:
      return "pretrain";
    case Task::kClassify:
      return "classify";
    case Task::kRegress:
      return "regress";
  }
  return "?";
}

Task parse_task(std::string_view s) {
  for (Task t : {Task::kPretrain, Task::kClassify, Task::kRegress}) {
    if (s == to_string(t)) {
      return t;
    }
  }
  throw std::invalid_argument("unknown task '" + std::string(s) + "'");
}

TrainState make_state(const RunConfig& cfg, Task task, int outputs) {
  validate(cfg);
  if ((task == Task::kPretrain) != (outputs == 0)) {
    throw std::invalid_argument("make_state: a head is required for fine-tuning and absent for pretraining");
  }
  TrainState s;
  s.cfg = cfg;
  s.task = task;
  s.outputs = outputs;
  s.rng = Rng(cfg.train.seed);
  init_model(s.params, cfg.arch, s.rng, task == Task::kPretrain, outputs);
  return s;
}

std::size_t load_encoder(ParamStore& dst, const ParamStore& src) {
  std::size_t loaded = 0;
  for (auto& [name, p] : dst.entries()) {
    if (name.rfind("encoder.", 0) != 0 || !src.contains(name)) {
      continue;
    }
    const Param& q = src.at(name);
    if (q.rows == p.rows && q.cols == p.cols) {
      p.value = q.value;
      ++loaded;
    }
  }
  return loaded;
}

double clip_loss(TrainState& state, const VideoClip& clip, const Label& label, Rng& rng, bool backward) {
  const ArchConfig& arch = state.cfg.arch;
  if (clip.frames != arch.input[0] || clip.height != arch.input[1] || clip.width != arch.input[2]) {
    throw ShapeError("clip " + clip.source_id + " is " + std::to_string(clip.frames) + "x" +
                     std::to_string(clip.height) + "x" + std::to_string(clip.width) +
                     ", the configured input differs");
  }
  Tape tape;
  Bindings b(tape, state.params);
  Var loss;
  if (state.task == Task::kPretrain) {
    Matrix target = patchify(clip, arch.patch);
    const Var patches = tape.input(target);
    const TubeMask mask = make_tube_mask(arch.grid(), arch.masking_ratio, rng);
    loss = reconstruction_loss(pretrain_forward(b, arch, patches, mask).pred, target, mask);
  } else {
    const Var logits = finetune_forward(b, arch, patch_input(tape, arch, &clip)).logits;
    if (state.task == Task::kClassify) {
      const int* c = std::get_if<int>(&label);
      if (c == nullptr) {
        throw DataError("clip " + clip.source_id + " has no class label");
      }
      loss = ce_loss(logits, *c);
    } else {
      const auto* y = std::get_if<std::vector<double>>(&label);
      if (y == nullptr) {
        throw DataError("clip " + clip.source_id + " has no score label");
      }
      loss = mse_loss(logits, Eigen::Map<const RowVector>(y->data(), static_cast<Index>(y->size())));
    }
  }
  if (backward) {
    tape.backward(loss);
  }
  return loss.value()(0, 0);
}

namespace {

VideoClip training_clip(const TrainState& state, const Sample& sample, const Normalization& norm, Rng& rng) {
  const int t = state.cfg.arch.input[0];
  const int stride = state.cfg.train.frame_stride;
  const int start = random_start(static_cast<int>(sample.frames.size()), t, stride, rng);
  VideoClip clip = sample_clip(sample.frames, t, stride, start);
  clip.source_id = sample.source_id;
  normalize(clip, norm);
  return clip;
}

}  // namespace

void train(TrainState& state, const Dataset& data, int until_epoch, const EpochCallback& on_epoch) {
  const TrainConfig& tc = state.cfg.train;
  if (data.samples.empty()) {
    throw DataError("train: empty dataset");
  }
  until_epoch = std::min(until_epoch, tc.epochs);
  const auto n = static_cast<long>(data.samples.size());
  const long batch = std::min<long>(tc.batch_size, n);
  const long steps_per_epoch = (n + batch - 1) / batch;
  const long total = steps_per_epoch * tc.epochs;
  const long warmup = steps_per_epoch * tc.warmup_epochs;
  const double peak = scaled_lr(tc.base_lr, tc.batch_size);
  state.norm = data.norm;
  const AdamHyper base{0.0, tc.beta1, tc.beta2, 1e-8, tc.weight_decay};

  while (state.epoch < until_epoch) {
    std::vector<std::size_t> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), std::size_t{0});
    state.rng.shuffle(order);
    double epoch_loss = 0.0;
    double lr = 0.0;
    for (long first = 0; first < n; first += batch) {
      const long count = std::min(batch, n - first);
      state.params.zero_grad();
      double batch_loss = 0.0;
      for (long i = first; i < first + count; ++i) {
        const Sample& s = data.samples[order[static_cast<std::size_t>(i)]];
        const VideoClip clip = training_clip(state, s, data.norm, state.rng);
        batch_loss += clip_loss(state, clip, s.label, state.rng, true);
      }
      for (auto& [name, p] : state.params.entries()) {
        if (p.grad.size() != 0) {
          p.grad /= static_cast<double>(count);
        }
      }
      AdamHyper h = base;
      h.lr = lr = lr_at(state.adam.step, total, warmup, peak);
      optimize_step(state.params, state.adam, h);
      batch_loss /= static_cast<double>(count);
      state.losses.push_back(batch_loss);
      epoch_loss += batch_loss;
    }
    ++state.epoch;
    if (on_epoch) {
      on_epoch({state.epoch, epoch_loss / static_cast<double>(steps_per_epoch), lr});
    }
  }
}

Evaluation evaluate(TrainState& state, const Dataset& data) {
  if (state.task == Task::kPretrain) {
    throw std::invalid_argument("evaluate: a pretraining state has no prediction head");
  }
  const ArchConfig& arch = state.cfg.arch;
  const bool classify = state.task == Task::kClassify;
  const ClipScorer scorer = [&](const VideoClip& raw) {
    VideoClip clip = raw;
    normalize(clip, data.norm);
    return predict(state.params, arch, clip);
  };
  Evaluation ev;
  for (const Sample& s : data.samples) {
    const RowVector out = two_clip_inference(s.frames, arch.input[0], state.cfg.train.frame_stride, scorer, classify);
    if (classify) {
      Index best = 0;
      out.maxCoeff(&best);
      ev.predicted.push_back(static_cast<int>(best));
      ev.labels.push_back(std::get<int>(s.label));
    } else {
      ev.scores.emplace_back(out.data(), out.data() + out.size());
      ev.targets.push_back(std::get<std::vector<double>>(s.label));
    }
  }
  return ev;
}

}  // namespace svfap
