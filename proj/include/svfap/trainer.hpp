// Copyright (c) 2026, SVFAP contributors
// SPDX-License-Identifier: Apache-2.0
//
// Optimization loop shared by pretraining and fine-tuning.
//
// Every clip of a batch runs on its own tape, in batch order, and
// gradients accumulate into the parameter store in that same order. The
// loop is therefore deterministic for a fixed seed whether or not
// SVFAP_DETERMINISTIC is set.

#pragma once

#include "svfap/config.hpp"
#include "svfap/data.hpp"
#include "svfap/params.hpp"

#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace svfap {

/// base_lr · batch_size / 256.
double scaled_lr(double base_lr, int batch_size);

/// Linear warmup from 0, then half-cosine decay to 0 over the remaining steps.
double lr_at(long step, long total_steps, long warmup_steps, double peak_lr);

struct AdamHyper {
  double lr = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

struct AdamState {
  std::map<std::string, Matrix> m;
  std::map<std::string, Matrix> v;
  long step = 0;
};

class NonFiniteGradient : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// AdamW update with decoupled decay on tensors flagged `decay`. Checks every
/// gradient first and throws NonFiniteGradient without touching any weight.
/// Parameters whose grad is empty count as zero-gradient.
void optimize_step(ParamStore& params, AdamState& state, const AdamHyper& hyper);

enum class Task { kPretrain, kClassify, kRegress };

std::string to_string(Task t);
Task parse_task(std::string_view s);

struct TrainState {
  RunConfig cfg;
  Task task = Task::kPretrain;
  int outputs = 0;  // head width; 0 when pretraining
  ParamStore params;
  AdamState adam;
  Rng rng;
  int epoch = 0;               // completed epochs
  std::vector<double> losses;  // mean batch loss per optimizer step
  Normalization norm;          // statistics of the data last trained on
};

/// Fresh weights drawn from cfg.train.seed.
TrainState make_state(const RunConfig& cfg, Task task, int outputs);

/// Copies tensors named encoder.* from `src` whose shapes match. Returns the
/// number of tensors copied.
std::size_t load_encoder(ParamStore& dst, const ParamStore& src);

struct EpochReport {
  int epoch = 0;
  double mean_loss = 0.0;
  double lr = 0.0;
};

using EpochCallback = std::function<void(const EpochReport&)>;

/// Runs epochs until state.epoch == until_epoch (at most cfg.train.epochs).
/// Records data.norm in the state.
void train(TrainState& state, const Dataset& data, int until_epoch, const EpochCallback& on_epoch = {});

/// Loss of one clip under the state's task; draws the mask from `rng` when pretraining.
double clip_loss(TrainState& state, const VideoClip& clip, const Label& label, Rng& rng, bool backward);

struct Evaluation {
  std::vector<int> predicted;
  std::vector<int> labels;
  std::vector<std::vector<double>> scores;   // regression outputs
  std::vector<std::vector<double>> targets;  // regression labels
};

/// Two-clip inference over every sample.
Evaluation evaluate(TrainState& state, const Dataset& data);

}  // namespace svfap
