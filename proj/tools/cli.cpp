// Copyright (c) 2026, SVFAP contributors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include "svfap/checkpoint.hpp"
#include "svfap/complexity.hpp"
#include "svfap/metrics.hpp"
#include "svfap/model.hpp"
#include "svfap/tokenizer.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#ifndef SVFAP_GIT_DESCRIBE
#define SVFAP_GIT_DESCRIBE "unknown"
#endif

namespace svfap::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct ConfigFlags {
  std::string config;
  std::vector<std::string> overrides;
};

void add_config_flags(CLI::App* cmd, ConfigFlags& f) {
  cmd->add_option("--config", f.config, "key = value config file");
  cmd->add_option("--set", f.overrides, "key=value override, applied after --config (repeatable)");
}

RunConfig resolve_config(const ConfigFlags& f, RunConfig base) {
  if (!f.config.empty()) {
    base = load_config(f.config, base);
  }
  for (const auto& o : f.overrides) {
    apply_override(base, o);
  }
  validate(base);
  return base;
}

void write_run_json(const fs::path& out_dir, const std::string& command, const std::vector<std::string>& args,
                    const RunConfig* cfg, const json& outputs) {
  json j;
  j["command"] = command;
  j["argv"] = args;
  j["git_describe"] = SVFAP_GIT_DESCRIBE;
  if (cfg != nullptr) {
    j["seed"] = cfg->train.seed;
    j["config"] = serialize(*cfg);
  }
  j["outputs"] = outputs;
  std::ofstream(out_dir / "run.json") << j.dump(2) << '\n';
}

Dataset load_for(const RunConfig& cfg, const std::string& manifest) {
  return load_dataset(manifest, cfg.arch.input[1], cfg.arch.input[2]);
}

void write_losses(const fs::path& path, const std::vector<double>& losses) {
  std::ofstream f(path);
  f << "step,loss\n" << std::setprecision(17);
  for (std::size_t i = 0; i < losses.size(); ++i) {
    f << i << ',' << losses[i] << '\n';
  }
}

std::string fixed(double v, int digits) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

// ---------------------------------------------------------------- synth

struct SynthFlags {
  SynthSpec spec;
  std::string out;
};

int do_synth(const SynthFlags& f, const std::vector<std::string>& args, std::ostream& out) {
  const Manifest m = synth_generate(f.spec, f.out);
  out << "wrote " << m.rows.size() << " clips to " << f.out << '\n';
  write_run_json(f.out, "synth", args, nullptr,
                 {{"clips", m.rows.size()}, {"classes", f.spec.num_classes}, {"seed", f.spec.seed}});
  return 0;
}

// ---------------------------------------------------------------- pretrain / finetune

struct TrainFlags {
  ConfigFlags cfg;
  std::string data;
  std::string out;
  std::string resume;
  std::string init;
  std::string task = "classify";
  int until = 0;
};

int finish_training(TrainState& state, const Dataset& data, const TrainFlags& f, const std::string& command,
                    const std::vector<std::string>& args, std::ostream& out, json outputs) {
  const int until = f.until > 0 ? f.until : state.cfg.train.epochs;
  train(state, data, until, [&](const EpochReport& r) {
    out << "epoch " << r.epoch << "  loss " << fixed(r.mean_loss, 6) << "  lr " << r.lr << '\n';
  });
  const fs::path dir(f.out);
  save_checkpoint(dir / "checkpoint.bin", state);
  write_losses(dir / "losses.csv", state.losses);
  outputs["epochs_completed"] = state.epoch;
  outputs["steps"] = state.losses.size();
  if (!state.losses.empty()) {
    outputs["initial_loss"] = state.losses.front();
    outputs["final_loss"] = state.losses.back();
  }
  write_run_json(dir, command, args, &state.cfg, outputs);
  return 0;
}

int do_pretrain(const TrainFlags& f, const std::vector<std::string>& args, std::ostream& out) {
  TrainState state;
  if (!f.resume.empty()) {
    state = load_checkpoint(f.resume);
    if (state.task != Task::kPretrain) {
      throw std::invalid_argument(f.resume + " is not a pretraining checkpoint");
    }
    state.cfg = resolve_config(f.cfg, state.cfg);
  } else {
    RunConfig base;
    base.train = TrainConfig::pretrain_defaults();
    state = make_state(resolve_config(f.cfg, base), Task::kPretrain, 0);
  }
  fs::create_directories(f.out);
  const Dataset data = load_for(state.cfg, f.data);
  return finish_training(state, data, f, "pretrain", args, out, {{"clips", data.samples.size()}});
}

int do_finetune(const TrainFlags& f, const std::vector<std::string>& args, std::ostream& out) {
  const Task task = parse_task(f.task);
  if (task == Task::kPretrain) {
    throw std::invalid_argument("finetune --task must be classify or regress");
  }
  json outputs;
  TrainState state;
  if (!f.resume.empty()) {
    state = load_checkpoint(f.resume);
    state.cfg = resolve_config(f.cfg, state.cfg);
  } else {
    RunConfig base;
    base.train = TrainConfig::finetune_defaults();
    std::optional<TrainState> init;
    if (!f.init.empty()) {
      init = load_checkpoint(f.init);
      base.arch = init->cfg.arch;
    }
    const RunConfig cfg = resolve_config(f.cfg, base);
    const Dataset probe = load_for(cfg, f.data);
    const int outputs_k = task == Task::kClassify ? probe.num_classes : probe.score_dims;
    if (outputs_k < 1) {
      throw DataError(f.data + " carries no " + (task == Task::kClassify ? "class" : "score") + " labels");
    }
    state = make_state(cfg, task, outputs_k);
    if (init) {
      const std::size_t loaded = load_encoder(state.params, init->params);
      const std::size_t fresh = state.params.entries().size() - loaded;
      out << "initialized from " << f.init << ": " << loaded << " tensors loaded, " << fresh
          << " freshly initialized\n";
      outputs["tensors_loaded"] = loaded;
      outputs["tensors_fresh"] = fresh;
    }
  }
  fs::create_directories(f.out);
  const Dataset data = load_for(state.cfg, f.data);
  outputs["clips"] = data.samples.size();
  return finish_training(state, data, f, "finetune", args, out, outputs);
}

// ---------------------------------------------------------------- eval

struct EvalFlags {
  std::string checkpoint;
  std::string data;
  std::string out;
};

int do_eval(const EvalFlags& f, const std::vector<std::string>& args, std::ostream& out) {
  TrainState state = load_checkpoint(f.checkpoint);
  Dataset data = load_for(state.cfg, f.data);
  data.norm = state.norm;
  const Evaluation ev = evaluate(state, data);
  std::vector<std::pair<std::string, double>> rows;
  if (state.task == Task::kClassify) {
    rows = {{"war", war(ev.predicted, ev.labels)},
            {"uar", uar(ev.predicted, ev.labels, state.outputs)},
            {"weighted_f1", weighted_f1(ev.predicted, ev.labels, state.outputs)}};
  } else {
    // Per-dimension PCC/CCC, then their mean; ACC over every entry.
    const auto dims = static_cast<std::size_t>(state.outputs);
    double pcc_sum = 0.0;
    double ccc_sum = 0.0;
    std::vector<double> all_p;
    std::vector<double> all_t;
    for (std::size_t d = 0; d < dims; ++d) {
      std::vector<double> p;
      std::vector<double> t;
      for (std::size_t i = 0; i < ev.scores.size(); ++i) {
        p.push_back(ev.scores[i][d]);
        t.push_back(ev.targets[i][d]);
      }
      const double pd = pcc(p, t);
      const double cd = ccc(p, t);
      rows.emplace_back("pcc_" + std::to_string(d), pd);
      rows.emplace_back("ccc_" + std::to_string(d), cd);
      pcc_sum += pd;
      ccc_sum += cd;
      all_p.insert(all_p.end(), p.begin(), p.end());
      all_t.insert(all_t.end(), t.begin(), t.end());
    }
    rows.emplace_back("pcc", pcc_sum / static_cast<double>(dims));
    rows.emplace_back("ccc", ccc_sum / static_cast<double>(dims));
    rows.emplace_back("acc", acc_personality(all_p, all_t));
  }
  fs::create_directories(f.out);
  std::ofstream csv(fs::path(f.out) / "metrics.csv");
  csv << "metric,value\n" << std::setprecision(17);
  json outputs;
  out << std::left << std::setw(14) << "metric" << "value\n";
  for (const auto& [name, value] : rows) {
    out << std::left << std::setw(14) << name << fixed(value, 6) << '\n';
    csv << name << ',' << value << '\n';
    outputs[name] = value;
  }
  outputs["clips"] = data.samples.size();
  write_run_json(f.out, "eval", args, &state.cfg, outputs);
  return 0;
}

// ---------------------------------------------------------------- count

struct CountFlags {
  ConfigFlags cfg;
  std::string preset = "TPSBT-B";
  std::string variant = "full";
  std::string regime = "finetune";
  bool table4 = false;
  int classes = 0;
  std::string out;
};

void print_report(const CostReport& r, Regime regime, std::ostream& out, std::ostream& csv) {
  const auto& parts = regime == Regime::kFinetune ? r.finetune : r.pretrain;
  out << "variant " << to_string(r.variant) << ", regime " << to_string(regime) << ", masking ratio "
      << r.arch.masking_ratio << '\n';
  out << std::left << std::setw(14) << "part" << std::right << std::setw(14) << "params" << std::setw(18)
      << "flops" << '\n';
  csv << "variant,regime,part,params,flops\n";
  std::uint64_t params = 0;
  std::uint64_t flops = 0;
  for (const auto& p : parts) {
    out << std::left << std::setw(14) << p.name << std::right << std::setw(14) << p.params << std::setw(18)
        << p.flops << '\n';
    csv << to_string(r.variant) << ',' << to_string(regime) << ',' << p.name << ',' << p.params << ',' << p.flops
        << '\n';
    params += p.params;
    flops += p.flops;
  }
  out << std::left << std::setw(14) << "total" << std::right << std::setw(14) << params << std::setw(18) << flops
      << '\n';
  out << "  = " << fixed(static_cast<double>(params) / 1e6, 2) << "M params, "
      << fixed(static_cast<double>(flops) / 1e9, 2) << "G FLOPs\n";
  csv << to_string(r.variant) << ',' << to_string(regime) << ",total," << params << ',' << flops << '\n';
}

void print_table4(const ArchConfig& arch, int classes, std::ostream& out, std::ostream& csv) {
  const CostReport base = count(arch, Variant::kVitBaseline, classes);
  out << std::left << std::setw(14) << "variant" << std::right << std::setw(12) << "params(M)" << std::setw(12)
      << "FLOPs(G)" << std::setw(12) << "FLOPs-P(G)" << '\n';
  csv << "variant,params,flops_finetune,flops_pretrain\n";
  for (Variant v : {Variant::kVitBaseline, Variant::kTpOnly, Variant::kSbtOnly, Variant::kFull}) {
    const CostReport r = count(arch, v, classes);
    out << std::left << std::setw(14) << to_string(v) << std::right << std::setw(12)
        << fixed(static_cast<double>(r.params_finetune()) / 1e6, 2) << std::setw(12)
        << fixed(static_cast<double>(r.flops_finetune()) / 1e9, 2) << std::setw(12)
        << fixed(static_cast<double>(r.flops_pretrain()) / 1e9, 2) << '\n';
    csv << to_string(v) << ',' << r.params_finetune() << ',' << r.flops_finetune() << ',' << r.flops_pretrain()
        << '\n';
  }
  const Reduction red = reduction(count(arch, Variant::kFull, classes), base);
  out << "reduction vs vit_baseline: fine-tune FLOPs " << fixed(100.0 * red.flops_finetune, 1)
      << "%, pretrain FLOPs " << fixed(100.0 * red.flops_pretrain, 1) << "%\n";
}

int do_count(const CountFlags& f, const std::vector<std::string>& args, std::ostream& out) {
  RunConfig base;
  base.arch = preset(parse_preset(f.preset));
  const RunConfig cfg = resolve_config(f.cfg, base);
  std::ostringstream text;
  std::ostringstream csv;
  const auto& in = cfg.arch.input;
  const auto& pt = cfg.arch.patch;
  text << "preset " << f.preset << ", input " << in[0] << 'x' << in[1] << 'x' << in[2] << ", patch " << pt[0] << 'x'
       << pt[1] << 'x' << pt[2] << '\n';
  if (f.table4) {
    print_table4(cfg.arch, f.classes, text, csv);
  } else {
    print_report(count(cfg.arch, parse_variant(f.variant), f.classes), parse_regime(f.regime), text, csv);
  }
  out << text.str() << '\n' << csv.str();
  if (!f.out.empty()) {
    fs::create_directories(f.out);
    std::ofstream(fs::path(f.out) / "count.csv") << csv.str();
    write_run_json(f.out, "count", args, &cfg, {{"table", text.str()}});
  }
  return 0;
}

// ---------------------------------------------------------------- reconstruct

struct ReconFlags {
  std::string checkpoint;
  std::string data;
  std::string out;
  int index = 0;
  std::uint64_t seed = 0;
};

// Paints clip frames left to right into row `band` of the canvas.
void paint_row(Image& canvas, const VideoClip& clip, int band) {
  for (int t = 0; t < clip.frames; ++t) {
    for (int y = 0; y < clip.height; ++y) {
      for (int x = 0; x < clip.width; ++x) {
        for (int c = 0; c < 3; ++c) {
          canvas.rgb[(static_cast<std::size_t>(band * clip.height + y) * canvas.width + t * clip.width + x) * 3 +
                     c] = clip.at(t, y, x, c);
        }
      }
    }
  }
}

int do_reconstruct(const ReconFlags& f, const std::vector<std::string>& args, std::ostream& out) {
  TrainState state = load_checkpoint(f.checkpoint);
  if (state.task != Task::kPretrain) {
    throw std::invalid_argument(f.checkpoint + " is not a pretraining checkpoint");
  }
  const ArchConfig& arch = state.cfg.arch;
  const Dataset data = load_for(state.cfg, f.data);
  if (f.index < 0 || static_cast<std::size_t>(f.index) >= data.samples.size()) {
    throw std::out_of_range("--index " + std::to_string(f.index) + " outside the dataset");
  }
  const Sample& s = data.samples[static_cast<std::size_t>(f.index)];
  VideoClip clip = sample_clip(s.frames, arch.input[0], state.cfg.train.frame_stride, 0);
  normalize(clip, state.norm);
  Rng rng(f.seed);
  const TubeMask mask = make_tube_mask(arch.grid(), arch.masking_ratio, rng);
  const Matrix target = patchify(clip, arch.patch);
  Tape tape;
  Bindings b(tape, state.params);
  const PretrainPass pass = pretrain_forward(b, arch, tape.input(target), mask);
  const double loss = reconstruction_loss(pass.pred, target, mask).value()(0, 0);

  // Masked row: hidden patches at the normalized value of mid-grey.
  Matrix masked = target;
  Matrix recon = target;
  for (Index m : mask.masked_tokens()) {
    recon.row(m) = pass.pred.value().row(m);
    for (Index j = 0; j < masked.cols(); ++j) {
      const auto c = static_cast<std::size_t>(j % 3);
      masked(m, j) = (0.5 - state.norm.mean[c]) / state.norm.std[c];
    }
  }
  Image canvas(3 * clip.height, clip.frames * clip.width);
  int band = 0;
  for (const Matrix* rows : std::initializer_list<const Matrix*>{&target, &masked, &recon}) {
    VideoClip v = unpatchify(*rows, arch.grid(), arch.patch);
    denormalize(v, state.norm);
    paint_row(canvas, v, band++);
  }
  fs::create_directories(f.out);
  const fs::path img = fs::path(f.out) / "reconstruction.ppm";
  write_ppm(img, canvas);
  out << "wrote " << img.string() << " (masked-patch loss " << fixed(loss, 6) << ")\n";
  write_run_json(f.out, "reconstruct", args, &state.cfg,
                 {{"loss", loss}, {"clip", s.source_id}, {"mask_seed", f.seed}});
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Masked facial-video autoencoding with a temporal-pyramid bottleneck encoder", "svfap"};
  app.require_subcommand(1);

  SynthFlags synth;
  auto* c_synth = app.add_subcommand("synth", "Generate a synthetic facial-motion dataset");
  c_synth->add_option("--classes", synth.spec.num_classes)->check(CLI::Range(2, 1000));
  c_synth->add_option("--per-class", synth.spec.clips_per_class)->check(CLI::PositiveNumber);
  c_synth->add_option("--frames", synth.spec.geometry[0])->check(CLI::PositiveNumber);
  c_synth->add_option("--height", synth.spec.geometry[1])->check(CLI::PositiveNumber);
  c_synth->add_option("--width", synth.spec.geometry[2])->check(CLI::PositiveNumber);
  c_synth->add_option("--noise", synth.spec.noise_std)->check(CLI::NonNegativeNumber);
  c_synth->add_option("--seed", synth.spec.seed);
  c_synth->add_option("--out", synth.out)->required();

  TrainFlags pre;
  auto* c_pre = app.add_subcommand("pretrain", "Masked-autoencoder pretraining");
  add_config_flags(c_pre, pre.cfg);
  c_pre->add_option("--data", pre.data, "manifest.csv")->required();
  c_pre->add_option("--out", pre.out)->required();
  c_pre->add_option("--resume", pre.resume, "continue from a pretraining checkpoint");
  c_pre->add_option("--until", pre.until, "stop after this many completed epochs");

  TrainFlags ft;
  auto* c_ft = app.add_subcommand("finetune", "Supervised fine-tuning");
  add_config_flags(c_ft, ft.cfg);
  c_ft->add_option("--data", ft.data, "manifest.csv")->required();
  c_ft->add_option("--out", ft.out)->required();
  c_ft->add_option("--task", ft.task, "classify or regress");
  c_ft->add_option("--init", ft.init, "pretraining checkpoint to take encoder weights from");
  c_ft->add_option("--resume", ft.resume, "continue from a fine-tuning checkpoint");
  c_ft->add_option("--until", ft.until, "stop after this many completed epochs");

  EvalFlags ev;
  auto* c_eval = app.add_subcommand("eval", "Two-clip evaluation of a fine-tuned checkpoint");
  c_eval->add_option("--checkpoint", ev.checkpoint)->required();
  c_eval->add_option("--data", ev.data)->required();
  c_eval->add_option("--out", ev.out)->required();

  CountFlags cnt;
  auto* c_count = app.add_subcommand("count", "Analytic parameter and FLOP counts");
  add_config_flags(c_count, cnt.cfg);
  c_count->add_option("--preset", cnt.preset, "TPSBT-S or TPSBT-B");
  c_count->add_option("--variant", cnt.variant, "full, vit_baseline, tp_only, sbt_only");
  c_count->add_option("--regime", cnt.regime, "finetune or pretrain");
  c_count->add_flag("--table4", cnt.table4, "print the full variant grid");
  c_count->add_option("--classes", cnt.classes, "include a head with this many outputs");
  c_count->add_option("--out", cnt.out, "also write count.csv and run.json here");

  ReconFlags rec;
  auto* c_rec = app.add_subcommand("reconstruct", "Original / masked / reconstructed frame strip");
  c_rec->add_option("--checkpoint", rec.checkpoint)->required();
  c_rec->add_option("--data", rec.data)->required();
  c_rec->add_option("--out", rec.out)->required();
  c_rec->add_option("--index", rec.index, "clip index in the manifest");
  c_rec->add_option("--seed", rec.seed, "mask seed");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (c_synth->parsed()) {
      return do_synth(synth, args, out);
    }
    if (c_pre->parsed()) {
      return do_pretrain(pre, args, out);
    }
    if (c_ft->parsed()) {
      if (!ft.init.empty() && !ft.resume.empty()) {
        throw std::invalid_argument("--init and --resume are mutually exclusive");
      }
      return do_finetune(ft, args, out);
    }
    if (c_eval->parsed()) {
      return do_eval(ev, args, out);
    }
    if (c_count->parsed()) {
      return do_count(cnt, args, out);
    }
    if (c_rec->parsed()) {
      return do_reconstruct(rec, args, out);
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace svfap::cli
