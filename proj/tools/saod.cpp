// saod: split generation, evaluation, mining simulation and augmentation
// for sparsely annotated detection datasets.

#include <chrono>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "saod/saod.hpp"

namespace fs = std::filesystem;
using namespace saod;

namespace {

enum ExitCode { kOk = 0, kInvalid = 1, kIo = 2 };

struct Globals {
  std::uint64_t seed = 0;
  std::string out;
  std::size_t workers = 1;
  int verbose = 0;
};

class Log {
 public:
  explicit Log(const Globals& g) : level_(g.verbose), start_(std::chrono::steady_clock::now()) {}

  template <typename... Args>
  void info(const Args&... args) const {
    if (level_ < 1) return;
    const auto ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start_).count();
    std::cerr << "[" << ms << " ms] ";
    (std::cerr << ... << args) << "\n";
  }

 private:
  int level_;
  std::chrono::steady_clock::time_point start_;
};

fs::path output_dir(const Globals& g) {
  if (g.out.empty()) throw CLI::RequiredError("--out");
  const fs::path dir(g.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_text_file(path, j.dump(1) + "\n"); }

Interval parse_interval(const std::vector<double>& v, const char* name) {
  if (v.size() == 1) return {v[0], v[0]};
  if (v.size() == 2) return {v[0], v[1]};
  throw DomainError(std::string(name) + " expects one value or lo,hi");
}

// ---------------------------------------------------------------------------
// split-gen

struct SplitArgs {
  std::string in;
  std::string kind = "split1";
  double p = 0.0;
  std::string level;
};

void add_split_options(CLI::App* cmd, SplitArgs& a) {
  cmd->add_option("--kind", a.kind, "split1, split2, split3, split4, split5 or siod")->capture_default_str();
  cmd->add_option("--p", a.p, "removal fraction in [0, 1]")->capture_default_str();
  cmd->add_option("--level", a.level, "split4 level: easy, hard or extreme");
}

SplitSpec make_split_spec(const SplitArgs& a, std::uint64_t seed) {
  SplitSpec s;
  s.kind = parse_split_kind(a.kind);
  s.p = a.p;
  if (!a.level.empty()) s.level = parse_split_level(a.level);
  s.seed = seed;
  validate_split_spec(s);
  return s;
}

int run_split_gen(const SplitArgs& a, const Globals& g) {
  const Log log(g);
  const SplitSpec spec = make_split_spec(a, g.seed);
  const fs::path dir = output_dir(g);
  const Dataset d = load_dataset(a.in);
  log.info("loaded ", d.images.size(), " images, ", d.annotations.size(), " annotations");
  const SplitResult r = generate_split(d, spec, g.workers);
  save_dataset(r.dataset, dir / "split.json");
  write_text_file(dir / "manifest.json", dump_manifest(r.manifest));
  const SparsityReport stats = split_stats(d, r.dataset);
  write_json(dir / "stats.json", sparsity_report_to_json(stats));
  log.info("wrote ", (dir / "split.json").string(), " and manifest");
  std::cout << format_sparsity_report(stats);
  return kOk;
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateArgs {
  std::string gt;
  std::string results;
  std::string interpolation = "coco101";
  std::vector<double> thresholds;
};

int run_evaluate(const EvaluateArgs& a, const Globals& g) {
  Interpolation mode;
  if (a.interpolation == "coco101") mode = Interpolation::coco101;
  else if (a.interpolation == "voc11") mode = Interpolation::voc11;
  else throw DomainError("unknown interpolation '" + a.interpolation + "' (coco101 or voc11)");
  const Dataset gt = load_dataset(a.gt);
  const auto dets = parse_detections(read_text_file(a.results));
  const APReport report = evaluate_ap(gt, dets, a.thresholds.empty() ? coco_iou_thresholds() : a.thresholds, mode);
  if (!g.out.empty()) write_json(output_dir(g) / "ap_report.json", ap_report_to_json(report));
  std::cout << format_ap_report(report);
  return kOk;
}

// ---------------------------------------------------------------------------
// ppm-sim

struct PpmArgs {
  SceneSpec scene;
  SplitArgs split{"", "split3", 0.5, ""};
  DetectorNoise noise;
  Thresholds thresholds;
  MergeConfig merge;
  ExperimentOptions options;
  std::vector<double> sweep;
  std::size_t overlays = 0;
};

void write_overlays(const fs::path& dir, const SceneSet& scenes, const PreparedExperiment& prep,
                    const ExperimentResult& result, std::size_t count) {
  const fs::path sub = dir / "overlays";
  fs::create_directories(sub);
  for (std::size_t i = 0; i < std::min(count, result.images.size()); ++i) {
    const ImageOutcome& o = result.images[i];
    std::vector<Box> mined;
    for (std::size_t m : o.mined) mined.push_back(prep.detector.proposals.at(o.image_id)[m].box);
    save_ppm(render_overlay(scenes.images[i], o.kept_gt, mined), sub / ("scene_" + std::to_string(o.image_id) + ".ppm"));
  }
}

int run_ppm_sim(PpmArgs a, const Globals& g) {
  const Log log(g);
  a.scene.seed = g.seed;
  a.noise.seed = g.seed;
  a.options.workers = g.workers;
  const SplitSpec split = make_split_spec(a.split, g.seed);
  validate_scene_spec(a.scene);
  validate_detector_noise(a.noise);
  validate_thresholds(a.thresholds);
  validate_merge_config(a.merge);
  for (double tau : a.sweep) {
    Thresholds t = a.thresholds;
    t.tau_ppm = tau;
    validate_thresholds(t);
  }
  const fs::path dir = output_dir(g);

  SceneSet scenes = generate_scene_set(a.scene, a.overlays > 0, g.workers);
  log.info("generated ", scenes.dataset.images.size(), " scenes with ", scenes.dataset.annotations.size(), " objects");
  const PreparedExperiment prep = prepare_experiment(scenes.dataset, split, a.noise, g.workers);
  log.info("split removed ", prep.split.manifest.removed_annotation_ids.size(), " annotations");

  if (a.sweep.empty()) {
    ExperimentResult result = evaluate_mining(prep, a.thresholds, a.merge, a.options);
    result.report.config = experiment_config_json(a.scene, split, a.noise, a.thresholds, a.merge, a.options);
    write_json(dir / "recovery_report.json", recovery_report_to_json(result.report));
    write_text_file(dir / "recovery_report.txt", format_recovery_report(result.report));
    if (a.overlays > 0) write_overlays(dir, scenes, prep, result, a.overlays);
    std::cout << format_recovery_report(result.report);
    return kOk;
  }

  nlohmann::json rows = nlohmann::json::array();
  std::ostringstream table;
  table.setf(std::ios::fixed);
  table.precision(4);
  table << "tau_ppm    mined  matched  precision  recall\n";
  for (double tau : a.sweep) {
    Thresholds t = a.thresholds;
    t.tau_ppm = tau;
    ExperimentResult result = evaluate_mining(prep, t, a.merge, a.options);
    result.report.config = experiment_config_json(a.scene, split, a.noise, t, a.merge, a.options);
    const RecoveryReport& r = result.report;
    table << std::left << std::setw(8) << tau << std::right << std::setw(8) << r.mined_total << std::setw(9)
          << r.mined_matched << std::setw(11) << r.mined_precision << std::setw(8) << r.mined_recall << "\n";
    rows.push_back({{"tau_ppm", tau}, {"report", recovery_report_to_json(r)}});
    log.info("tau_ppm ", tau, ": ", r.mined_total, " mined");
  }
  write_json(dir / "sweep.json", rows);
  write_text_file(dir / "sweep.txt", table.str());
  std::cout << table.str();
  return kOk;
}

// ---------------------------------------------------------------------------
// augment

struct AugmentArgs {
  std::string in;
  std::string boxes;
  std::string replay;
  bool neutral = false;
  std::vector<double> contrast{0.5, 1.5};
  std::vector<double> brightness{0.5, 1.5};
  std::vector<double> saturation{0.5, 1.5};
  double lighting_scale = 1.2;
  std::vector<double> erase_area{0.4, 0.7};
  std::vector<double> erase_aspect{0.3, 3.3};
  double erase_probability = 0.5;
};

std::vector<Box> load_boxes(const std::string& path) {
  if (path.empty()) return {};
  const std::string text = read_text_file(path);
  try {
    std::vector<Box> boxes;
    for (const auto& b : nlohmann::json::parse(text)) {
      const auto v = b.get<std::array<double, 4>>();
      boxes.push_back(Box::from_xywh(v[0], v[1], v[2], v[3]));
    }
    return boxes;
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": " + e.what(), e.byte);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": expected an array of [x, y, w, h] boxes", 0);
  }
}

int run_augment(const AugmentArgs& a, const Globals& g) {
  const Raster img = load_ppm(a.in);
  if (!a.replay.empty()) {
    const AppliedParams params = parse_applied_params(read_text_file(a.replay));
    const fs::path dir = output_dir(g);
    save_ppm(replay_augment(img, params), dir / "augmented.ppm");
    return kOk;
  }
  AugmentSpec spec;
  if (a.neutral) {
    spec = AugmentSpec::neutral(g.seed);
  } else {
    spec.contrast = parse_interval(a.contrast, "--contrast");
    spec.brightness = parse_interval(a.brightness, "--brightness");
    spec.saturation = parse_interval(a.saturation, "--saturation");
    spec.lighting_scale = a.lighting_scale;
    spec.erase_area = parse_interval(a.erase_area, "--erase-area");
    spec.erase_aspect = parse_interval(a.erase_aspect, "--erase-aspect");
    spec.erase_probability = a.erase_probability;
    spec.seed = g.seed;
  }
  validate_augment_spec(spec);
  const std::vector<Box> boxes = load_boxes(a.boxes);
  const fs::path dir = output_dir(g);
  const AugmentResult r = augment_image(img, boxes, spec);
  save_ppm(r.image, dir / "augmented.ppm");
  write_json(dir / "params.json", applied_params_to_json(r.params));
  return kOk;
}

// ---------------------------------------------------------------------------
// stats

struct StatsArgs {
  std::string original;
  std::string sparse;
};

int run_stats(const StatsArgs& a, const Globals& g) {
  const SparsityReport r = split_stats(load_dataset(a.original), load_dataset(a.sparse));
  if (!g.out.empty()) write_json(output_dir(g) / "stats.json", sparsity_report_to_json(r));
  std::cout << format_sparsity_report(r);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Split generation, evaluation and pseudo-positive mining for sparsely annotated detection"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value configuration file; flags on the command line take precedence");

  Globals g;
  app.add_option("--seed", g.seed, "random seed")->capture_default_str();
  app.add_option("--out", g.out, "output directory (created if absent)");
  app.add_option("--workers", g.workers, "worker threads; results do not depend on it")
      ->check(CLI::Range(std::size_t{1}, std::size_t{1024}))
      ->capture_default_str();
  app.add_flag("-v,--verbose", g.verbose, "log progress to standard error");

  SplitArgs split_args;
  auto* split_cmd = app.add_subcommand("split-gen", "write a sparsified dataset and its removal manifest");
  split_cmd->configurable();
  split_cmd->add_option("--in", split_args.in, "exhaustively annotated dataset")->required();
  add_split_options(split_cmd, split_args);

  EvaluateArgs eval_args;
  auto* eval_cmd = app.add_subcommand("evaluate", "COCO-style AP of a results file");
  eval_cmd->configurable();
  eval_cmd->add_option("--gt", eval_args.gt, "ground truth dataset")->required();
  eval_cmd->add_option("--results", eval_args.results, "detections: [{image_id, category_id, bbox, score}]")
      ->required();
  eval_cmd->add_option("--interpolation", eval_args.interpolation, "coco101 or voc11")->capture_default_str();
  eval_cmd->add_option("--iou-thresholds", eval_args.thresholds, "comma separated; default 0.50:0.05:0.95")
      ->delimiter(',');

  PpmArgs ppm;
  auto* ppm_cmd = app.add_subcommand("ppm-sim", "simulate pseudo-positive mining on synthetic scenes");
  ppm_cmd->configurable();
  ppm_cmd->add_option("--images", ppm.scene.image_count)->capture_default_str();
  ppm_cmd->add_option("--width", ppm.scene.width)->capture_default_str();
  ppm_cmd->add_option("--height", ppm.scene.height)->capture_default_str();
  ppm_cmd->add_option("--categories", ppm.scene.categories)->capture_default_str();
  ppm_cmd->add_option("--objects-min", ppm.scene.objects_min)->capture_default_str();
  ppm_cmd->add_option("--objects-max", ppm.scene.objects_max)->capture_default_str();
  ppm_cmd->add_option("--size-min", ppm.scene.size_min)->capture_default_str();
  ppm_cmd->add_option("--size-max", ppm.scene.size_max)->capture_default_str();
  ppm_cmd->add_option("--max-overlap", ppm.scene.max_overlap, "IoU cap between placed objects")
      ->capture_default_str();
  add_split_options(ppm_cmd, ppm.split);
  ppm_cmd->add_option("--loc-sigma", ppm.noise.localization_sigma)->capture_default_str();
  ppm_cmd->add_option("--fg-objectness", ppm.noise.fg_objectness_mean)->capture_default_str();
  ppm_cmd->add_option("--bg-objectness", ppm.noise.bg_objectness_mean)->capture_default_str();
  ppm_cmd->add_option("--objectness-sigma", ppm.noise.objectness_sigma)->capture_default_str();
  ppm_cmd->add_option("--fp-rate", ppm.noise.false_positive_rate, "spurious proposals per image")
      ->capture_default_str();
  ppm_cmd->add_option("--dropout", ppm.noise.dropout_rate)->capture_default_str();
  ppm_cmd->add_option("--tau-fg", ppm.thresholds.tau_fg)->capture_default_str();
  ppm_cmd->add_option("--tau-bg", ppm.thresholds.tau_bg)->capture_default_str();
  ppm_cmd->add_option("--tau-obj", ppm.thresholds.tau_obj)->capture_default_str();
  ppm_cmd->add_option("--tau-ppm", ppm.thresholds.tau_ppm)->capture_default_str();
  ppm_cmd->add_option("--tau-m", ppm.merge.tau_m, "pseudo label score threshold")->capture_default_str();
  ppm_cmd->add_option("--merge-nms", ppm.merge.nms_iou)->capture_default_str();
  ppm_cmd->add_option("--unlabeled-nms", ppm.options.unlabeled_nms_iou)->capture_default_str();
  ppm_cmd->add_option("--match-iou", ppm.options.match_iou)->capture_default_str();
  ppm_cmd->add_option("--sweep-tau-ppm", ppm.sweep, "comma separated tau_ppm values")->delimiter(',');
  ppm_cmd->add_option("--overlays", ppm.overlays, "write overlay images for the first N scenes");

  AugmentArgs aug;
  auto* aug_cmd = app.add_subcommand("augment", "apply the photometric cascade and box erase to a PPM image");
  aug_cmd->configurable();
  aug_cmd->add_option("--in", aug.in, "binary PPM (P6) image")->required();
  aug_cmd->add_option("--boxes", aug.boxes, "JSON array of [x, y, w, h] boxes");
  aug_cmd->add_option("--replay", aug.replay, "params.json from an earlier run");
  aug_cmd->add_flag("--neutral", aug.neutral, "identity parameters");
  aug_cmd->add_option("--contrast", aug.contrast, "factor or lo,hi")->delimiter(',');
  aug_cmd->add_option("--brightness", aug.brightness, "factor or lo,hi")->delimiter(',');
  aug_cmd->add_option("--saturation", aug.saturation, "factor or lo,hi")->delimiter(',');
  aug_cmd->add_option("--lighting-scale", aug.lighting_scale)->capture_default_str();
  aug_cmd->add_option("--erase-area", aug.erase_area, "fraction of the box, lo,hi")->delimiter(',');
  aug_cmd->add_option("--erase-aspect", aug.erase_aspect, "height / width, lo,hi")->delimiter(',');
  aug_cmd->add_option("--erase-prob", aug.erase_probability, "per box")->capture_default_str();

  StatsArgs stats;
  auto* stats_cmd = app.add_subcommand("stats", "sparsity of a split relative to its source");
  stats_cmd->configurable();
  stats_cmd->add_option("--original", stats.original)->required();
  stats_cmd->add_option("--sparse", stats.sparse)->required();

  try {
    app.parse(argc, argv);
    if (split_cmd->parsed()) return run_split_gen(split_args, g);
    if (eval_cmd->parsed()) return run_evaluate(eval_args, g);
    if (ppm_cmd->parsed()) return run_ppm_sim(ppm, g);
    if (aug_cmd->parsed()) return run_augment(aug, g);
    if (stats_cmd->parsed()) return run_stats(stats, g);
    return kInvalid;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::FileError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << "\n" << "run with --help for usage\n";
    return kInvalid;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << " (byte " << e.byte_offset() << ")\n";
    return kInvalid;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  }
}
