/* Copyright (c) 2026 The mapseg Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License. */

#include "mapseg/cli.hpp"

#include <omp.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <optional>

#include "mapseg/checkpoint.hpp"
#include "mapseg/error.hpp"
#include "mapseg/inference.hpp"
#include "mapseg/manifest.hpp"
#include "mapseg/metrics.hpp"
#include "mapseg/palette.hpp"
#include "mapseg/patches.hpp"
#include "mapseg/postprocess.hpp"
#include "mapseg/run_config.hpp"
#include "mapseg/synthmap.hpp"
#include "mapseg/trainer.hpp"

namespace mapseg::cli {

namespace {

namespace fs = std::filesystem;

struct CommonOptions {
  std::string config;
  std::string palette;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> threads;
  std::vector<std::string> overrides;
  std::optional<std::string> postprocess;
};

void add_common(CLI::App& cmd, CommonOptions& o) {
  cmd.add_option("--config", o.config, "key=value run configuration file");
  cmd.add_option("--seed", o.seed, "master seed (overrides the config)");
  cmd.add_option("--palette", o.palette, "class palette file (default: built-in 11 classes)");
  cmd.add_option("--threads", o.threads, "worker threads; 1 gives the reference schedule")
      ->check(CLI::NonNegativeNumber);
  cmd.add_option("--set", o.overrides, "config override key=value (repeatable)");
}

// Config file, then --set overrides, then dedicated flags: flags win.
RunConfig resolve_config(const CommonOptions& o) {
  RunConfig c = o.config.empty() ? RunConfig{} : RunConfig::load(o.config);
  for (const auto& s : o.overrides) c.apply_override(s);
  if (o.seed) c.seed = *o.seed;
  if (o.threads) c.threads = *o.threads;
  if (o.postprocess) c.postprocess = *o.postprocess;
  c.validate();
  if (c.threads > 0) omp_set_num_threads(static_cast<int>(c.threads));
  return c;
}

Palette resolve_palette(const CommonOptions& o) {
  return o.palette.empty() ? Palette::default_palette() : Palette::load(o.palette);
}

void make_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
}

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

std::string stem_of(const std::string& path) { return fs::path(path).stem().string(); }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string summary_line(const EvalResult& r) {
  return "pixels=" + std::to_string(r.confusion.total()) +
         " mean_jaccard=" + fmt(r.summary.mean_jaccard) +
         " micro_jaccard=" + fmt(r.summary.micro_jaccard) +
         " overall_accuracy=" + fmt(r.summary.overall_accuracy);
}

void write_text(const std::string& path, const std::string& text) {
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

// ------------------------------------------------------------------ commands

DatasetManifest gen_data(const RunConfig& c, const Palette& palette, const std::string& out_dir,
                         std::ostream& out) {
  make_dir(out_dir);
  const auto manifest = generate_corpus(c.synth, c.synth_count, SplitFractions::parse(c.split),
                                        c.seed, palette, out_dir);
  out << "gen-data: wrote " << manifest.entries.size() << " samples (train "
      << manifest.count(Partition::Train) << ", cv " << manifest.count(Partition::CrossValidation)
      << ", test " << manifest.count(Partition::Test) << ") to " << out_dir << "\n";
  return manifest;
}

std::string train_cmd(const RunConfig& c, const Palette& palette, const std::string& manifest_path,
                      const std::string& out_dir, std::string checkpoint, std::ostream& out,
                      std::ostream& err) {
  const auto manifest = DatasetManifest::load(manifest_path);
  const auto train_set = load_partition(manifest, Partition::Train, palette, c.tolerance);
  const auto cv_set = load_partition(manifest, Partition::CrossValidation, palette, c.tolerance);

  UNetConfig mc = c.model;
  mc.num_classes = static_cast<std::int64_t>(palette.size());
  Rng rng(c.model_seed());
  UNet model = UNet::build(mc, rng);
  EpochSpec es = c.epoch;
  es.patch_size = mc.patch_size;
  const TrainConfig tc = c.train_config();

  const auto result = train(
      std::move(model), train_set, cv_set, es, tc, c.resolved_overlap(), [&](const EpochLog& log) {
        err << "epoch " << log.epoch << "/" << tc.epochs << " loss=" << fmt(log.loss);
        if (log.cv)
          err << " cv_mjacc=" << fmt(log.cv->mean_jaccard)
              << " cv_oa=" << fmt(log.cv->overall_accuracy);
        err << "\n";
      });

  make_dir(out_dir);
  if (checkpoint.empty()) checkpoint = join(out_dir, "model.ckpt");
  save_checkpoint(result.model, checkpoint);
  write_text(join(out_dir, "train_report.csv"), result.report.csv());
  const auto best = static_cast<std::size_t>(
      std::find(result.report.eval_epochs.begin(), result.report.eval_epochs.end(),
                result.report.best_epoch) -
      result.report.eval_epochs.begin());
  out << "train: best epoch " << result.report.best_epoch
      << " cv_mjacc=" << fmt(result.report.cv_mean_jaccard[best])
      << " cv_oa=" << fmt(result.report.cv_accuracy[best]) << " checkpoint=" << checkpoint
      << "\n";
  return checkpoint;
}

struct PredictOptions {
  bool write_raw = false;
  bool write_probs = false;
};

void predict_cmd(const RunConfig& c, const Palette& palette, const std::string& checkpoint,
                 const std::vector<std::string>& inputs, const std::string& out_dir,
                 const PredictOptions& po, std::ostream& out) {
  const UNet model = load_checkpoint(checkpoint);
  if (model.config().num_classes != static_cast<std::int64_t>(palette.size()))
    throw DataError("predict: checkpoint has " + std::to_string(model.config().num_classes) +
                    " classes but the palette has " + std::to_string(palette.size()));
  const PostPolicy policy = PostPolicy::parse(c.postprocess);
  const std::int64_t tile = model.config().patch_size;
  const std::int64_t overlap = c.overlap < 0 ? tile / 4 : c.overlap;
  if (overlap >= tile)
    throw ConfigError("predict: infer.overlap " + std::to_string(overlap) +
                      " must be below the model patch size " + std::to_string(tile));
  make_dir(out_dir);
  for (const auto& path : inputs) {
    const RasterImage image = load_png(path);
    const auto plan = plan_tiles(image.width, image.height, tile, overlap);
    const ProbabilityMap probs = predict_map(model, image, plan, c.infer_batch);
    const LabelMap raw = argmax_labels(probs);
    const std::string stem = stem_of(path);
    const std::string labels_path = join(out_dir, stem + "_labels.png");
    save_png(render_labels(denoise_labels(raw, policy), palette), labels_path);
    if (po.write_raw) save_png(render_labels(raw, palette), join(out_dir, stem + "_raw.png"));
    if (po.write_probs) {
      std::vector<std::uint8_t> plane(static_cast<std::size_t>(image.width * image.height));
      for (std::int64_t k = 0; k < probs.classes; ++k) {
        for (std::int64_t y = 0; y < image.height; ++y)
          for (std::int64_t x = 0; x < image.width; ++x)
            plane[static_cast<std::size_t>(y * image.width + x)] =
                static_cast<std::uint8_t>(std::lround(255.0f * probs.at(k, x, y)));
        save_png_gray(image.width, image.height, plane,
                      join(out_dir, stem + "_prob_" + palette[static_cast<std::size_t>(k)].name +
                                        ".png"));
      }
    }
    out << "predict: " << path << " -> " << labels_path << "\n";
  }
}

EvalResult eval_pairs(const RunConfig& c, const Palette& palette,
                      const std::vector<std::string>& preds, const std::vector<std::string>& gts) {
  if (preds.size() != gts.size())
    throw UsageError("eval: " + std::to_string(preds.size()) + " predictions for " +
                     std::to_string(gts.size()) + " ground-truth files");
  if (preds.empty()) throw UsageError("eval: nothing to evaluate");
  EvalResult r{ConfusionMatrix(static_cast<std::int64_t>(palette.size())), {}};
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const LabelMap pred = decode_labels(load_png(preds[i]), palette, c.tolerance);
    const LabelMap gt = decode_labels(load_png(gts[i]), palette, c.tolerance);
    if (pred.width != gt.width || pred.height != gt.height)
      throw DataError("eval: " + preds[i] + " and " + gts[i] + " differ in size");
    r.confusion.add(pred, gt);
  }
  r.summary = summarize(r.confusion);
  return r;
}

struct ManifestPairs {
  std::vector<std::string> images;
  std::vector<std::string> labels;
};

ManifestPairs partition_files(const std::string& manifest_path, const std::string& partition) {
  const auto manifest = DatasetManifest::load(manifest_path);
  ManifestPairs p;
  for (const auto& e : manifest.select(parse_partition(partition))) {
    p.images.push_back(e.image_path);
    p.labels.push_back(e.label_path);
  }
  if (p.images.empty())
    throw DataError("manifest " + manifest_path + " has no '" + partition + "' entries");
  return p;
}

std::vector<std::string> predictions_for(const std::vector<std::string>& images,
                                         const std::string& pred_dir, const std::string& suffix) {
  std::vector<std::string> out;
  for (const auto& img : images) out.push_back(join(pred_dir, stem_of(img) + suffix + ".png"));
  return out;
}

void report_eval(const EvalResult& r, const Palette& palette, const std::string& csv_path,
                 const std::string& label, std::ostream& out) {
  if (!csv_path.empty()) write_text(csv_path, metrics_csv(r.summary, &palette));
  out << label << ": " << summary_line(r) << "\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"mapseg: U-Net semantic segmentation of planning maps", "mapseg"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Expand all help");

  CommonOptions gen_o, train_o, predict_o, eval_o, pipe_o;

  std::string gen_out;
  auto* gen = app.add_subcommand("gen-data", "Write a synthetic map corpus with a manifest");
  add_common(*gen, gen_o);
  gen->add_option("--out", gen_out, "output directory")->required();

  std::string train_manifest, train_out, train_ckpt;
  auto* trn = app.add_subcommand("train", "Train a model and write a checkpoint and report");
  add_common(*trn, train_o);
  trn->add_option("--manifest", train_manifest, "dataset manifest")->required();
  trn->add_option("--out", train_out, "output directory")->required();
  trn->add_option("--checkpoint", train_ckpt, "checkpoint path (default OUT/model.ckpt)");

  std::string pred_ckpt, pred_out, pred_manifest, pred_partition = "test";
  std::vector<std::string> pred_inputs;
  PredictOptions pred_opts;
  auto* prd = app.add_subcommand("predict", "Segment map images with a trained checkpoint");
  add_common(*prd, predict_o);
  prd->add_option("--checkpoint", pred_ckpt, "model checkpoint")->required();
  prd->add_option("--out", pred_out, "output directory")->required();
  prd->add_option("--manifest", pred_manifest, "predict a manifest partition");
  prd->add_option("--partition", pred_partition, "train, cv or test (with --manifest)");
  prd->add_option("--postprocess", predict_o.postprocess, "policy, e.g. mode:3,open:3,close:3 or none");
  prd->add_flag("--raw", pred_opts.write_raw, "also write the raw argmax labels");
  prd->add_flag("--probs", pred_opts.write_probs, "also write per-class probability images");
  prd->add_option("inputs", pred_inputs, "map images (PNG)");

  std::string eval_out, eval_manifest, eval_pred_dir, eval_partition = "test",
                                                      eval_suffix = "_labels";
  std::vector<std::string> eval_preds, eval_gts;
  auto* evl = app.add_subcommand("eval", "Score predicted label images against ground truth");
  add_common(*evl, eval_o);
  evl->add_option("--pred", eval_preds, "predicted label image (repeatable)");
  evl->add_option("--gt", eval_gts, "ground-truth label image (repeatable)");
  evl->add_option("--manifest", eval_manifest, "take ground truth from a manifest partition");
  evl->add_option("--pred-dir", eval_pred_dir, "predictions named <image stem><suffix>.png");
  evl->add_option("--partition", eval_partition, "train, cv or test (with --manifest)");
  evl->add_option("--suffix", eval_suffix, "prediction file suffix (with --pred-dir)");
  evl->add_option("--out", eval_out, "directory for metrics.csv");

  std::string pipe_out;
  auto* pipe = app.add_subcommand("pipeline", "gen-data, train, predict and eval in sequence");
  add_common(*pipe, pipe_o);
  pipe->add_option("--out", pipe_out, "output directory")->required();
  pipe->add_option("--postprocess", pipe_o.postprocess, "post-processing policy");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "mapseg: error[usage]: " << e.what() << "\n";
    return 1;
  }

  try {
    if (gen->parsed()) {
      gen_data(resolve_config(gen_o), resolve_palette(gen_o), gen_out, out);
    } else if (trn->parsed()) {
      train_cmd(resolve_config(train_o), resolve_palette(train_o), train_manifest, train_out,
                train_ckpt, out, err);
    } else if (prd->parsed()) {
      const RunConfig c = resolve_config(predict_o);
      std::vector<std::string> inputs = pred_inputs;
      if (!pred_manifest.empty()) {
        const auto files = partition_files(pred_manifest, pred_partition);
        inputs.insert(inputs.end(), files.images.begin(), files.images.end());
      }
      if (inputs.empty()) throw UsageError("predict: no input images (give files or --manifest)");
      predict_cmd(c, resolve_palette(predict_o), pred_ckpt, inputs, pred_out, pred_opts, out);
    } else if (evl->parsed()) {
      const RunConfig c = resolve_config(eval_o);
      const Palette palette = resolve_palette(eval_o);
      std::vector<std::string> preds = eval_preds, gts = eval_gts;
      if (!eval_manifest.empty()) {
        if (eval_pred_dir.empty()) throw UsageError("eval: --manifest needs --pred-dir");
        const auto files = partition_files(eval_manifest, eval_partition);
        const auto p = predictions_for(files.images, eval_pred_dir, eval_suffix);
        preds.insert(preds.end(), p.begin(), p.end());
        gts.insert(gts.end(), files.labels.begin(), files.labels.end());
      }
      const auto r = eval_pairs(c, palette, preds, gts);
      if (!eval_out.empty()) make_dir(eval_out);
      report_eval(r, palette, eval_out.empty() ? "" : join(eval_out, "metrics.csv"), "eval", out);
    } else if (pipe->parsed()) {
      const RunConfig c = resolve_config(pipe_o);
      const Palette palette = resolve_palette(pipe_o);
      const std::string data_dir = join(pipe_out, "data");
      const std::string pred_dir = join(pipe_out, "pred");
      make_dir(pipe_out);
      write_text(join(pipe_out, "run_config.txt"), c.to_text());
      gen_data(c, palette, data_dir, out);
      const std::string manifest = join(data_dir, "manifest.txt");
      const std::string ckpt = train_cmd(c, palette, manifest, pipe_out, "", out, err);
      const auto files = partition_files(manifest, "test");
      predict_cmd(c, palette, ckpt, files.images, pred_dir, PredictOptions{true, false}, out);
      const auto raw = eval_pairs(c, palette, predictions_for(files.images, pred_dir, "_raw"),
                                  files.labels);
      const auto post = eval_pairs(
          c, palette, predictions_for(files.images, pred_dir, "_labels"), files.labels);
      report_eval(raw, palette, join(pipe_out, "metrics_raw.csv"), "pipeline raw", out);
      report_eval(post, palette, join(pipe_out, "metrics.csv"), "pipeline postprocessed", out);
    }
  } catch (const Error& e) {
    err << "mapseg: error[" << to_string(e.kind()) << "]: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    // Anything outside the library's taxonomy (e.g. allocation failure).
    err << "mapseg: error[internal]: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace mapseg::cli
