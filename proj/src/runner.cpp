#include "tactsim/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "tactsim/calibration.hpp"
#include "tactsim/camera.hpp"
#include "tactsim/config.hpp"
#include "tactsim/flow.hpp"
#include "tactsim/io_util.hpp"
#include "tactsim/metrics.hpp"
#include "tactsim/nn.hpp"
#include "tactsim/svg.hpp"

namespace tactsim {

namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void put(std::string& out, const char* fmt, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, fmt);
  std::vsnprintf(buf, sizeof buf, fmt, ap);
  va_end(ap);
  out += buf;
}

Config resolve_config(const std::string& path) {
  if (path.empty()) {
    Config cfg;
    validate(cfg);
    return cfg;
  }
  return load_config(path);
}

void ensure_parent_dir(const std::string& path) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + p.parent_path().string());
  }
}

// <dir>/<stem><suffix>: "runs/model.tsm" + "_loss.csv" -> "runs/model_loss.csv"
std::string sibling_path(const std::string& out_path, const std::string& suffix) {
  std::filesystem::path p(out_path);
  return (p.parent_path() / (p.stem().string() + suffix)).string();
}

// Every run drops a manifest next to its primary output. The manifest is the
// only artifact that embeds wall time, so the outputs themselves stay
// byte-stable across reruns.
void write_manifest(const std::string& out_path, const std::string& subcommand,
                    const Config& cfg, std::uint64_t seed,
                    const std::vector<std::string>& inputs,
                    const std::vector<std::string>& outputs, double wall_time_s,
                    json extra = json::object()) {
  json man;
  man["subcommand"] = subcommand;
  man["tool_version"] = kToolVersion;
  man["seed"] = seed;
  man["config_text"] = serialize_config(cfg);
  man["config_hash"] = config_hash(cfg);
  man["inputs"] = inputs;
  man["outputs"] = outputs;
  man["wall_time_s"] = wall_time_s;
  man["extra"] = std::move(extra);
  write_file(out_path + ".manifest.json", man.dump(2) + "\n");
}

std::string report_csv(const EvalReport& r) {
  std::string out = "armse_n,d_loc_mm,rmse_mc_n,srmse_n,sample_count,srmse_skipped\n";
  put(out, "%.17g,%.17g,%.17g,%.17g,%lld,%lld\n", r.armse_n, r.d_loc_mm, r.rmse_mc_n,
      r.srmse_n, static_cast<long long>(r.sample_count),
      static_cast<long long>(r.srmse_skipped));
  return out;
}

std::string report_text(const EvalReport& r) {
  std::string out;
  put(out, "samples        %lld\n", static_cast<long long>(r.sample_count));
  put(out, "aRMSE    [N]   %.6f\n", r.armse_n);
  put(out, "d_loc    [mm]  %.6f\n", r.d_loc_mm);
  put(out, "RMSE_mc  [N]   %.6f\n", r.rmse_mc_n);
  put(out, "SRMSE    [N]   %.6f  (%lld all-zero samples skipped)\n", r.srmse_n,
      static_cast<long long>(r.srmse_skipped));
  return out;
}

std::string loss_csv(const std::vector<double>& train_log, const std::vector<double>& val_log) {
  std::string out = "epoch,train_armse,val_armse\n";
  for (std::size_t i = 0; i < train_log.size(); ++i)
    put(out, "%zu,%.17g,%.17g\n", i, train_log[i], val_log[i]);
  return out;
}

std::string loss_svg(const std::vector<double>& train_log, const std::vector<double>& val_log,
                     const std::string& title) {
  Series train{"train", {}, train_log};
  Series val{"validation", {}, val_log};
  for (std::size_t i = 0; i < train_log.size(); ++i)
    train.xs.push_back(static_cast<double>(i));
  for (std::size_t i = 0; i < val_log.size(); ++i) val.xs.push_back(static_cast<double>(i));
  return line_chart_svg({train, val}, title, "epoch", "aRMSE [N]");
}

// Row gather helpers: split indices select dataset rows in X/Y matrices.
std::vector<int> to_int_rows(const std::vector<std::uint32_t>& idx) {
  return {idx.begin(), idx.end()};
}

TrainOptions apply_overrides(TrainOptions opt, double lr, double dropout, int batch,
                             int patience, int max_epochs) {
  if (lr >= 0) opt.learning_rate = lr;
  if (dropout >= 0) opt.dropout_rate = dropout;
  if (batch > 0) opt.batch_size = batch;
  if (patience > 0) opt.patience = patience;
  if (max_epochs > 0) opt.max_epochs = max_epochs;
  return opt;
}

}  // namespace

int run_generate(const GenerateArgs& args) {
  const auto t0 = Clock::now();
  if (args.common.out_path.empty()) throw UsageError("generate: --out is required");
  Config cfg = resolve_config(args.common.config_path);
  SensorConfig sensor = cfg.sensor;
  if (args.common.seed_given) sensor.rng_seed = args.common.seed;
  GelMaterial mat;
  if (args.perturbed) {
    sensor = perturbed_sensor(sensor);
    mat = perturbed_material(mat);
  }

  GenerateOptions opt;
  opt.backend = parse_backend(args.backend);
  opt.grid_spacing_mm = args.spacing_mm;
  opt.edge_margin_mm = args.margin_mm;
  opt.gel_id = args.gel_id;

  Dataset ds = generate(sensor, cfg.pipeline, mat, opt);
  ensure_parent_dir(args.common.out_path);
  save_dataset(args.common.out_path, ds);

  json extra;
  extra["samples"] = ds.samples.size();
  extra["backend"] = backend_name(ds.backend);
  extra["grid_spacing_mm"] = args.spacing_mm;
  extra["edge_margin_mm"] = args.margin_mm;
  extra["perturbed"] = args.perturbed;
  write_manifest(args.common.out_path, "generate", cfg, sensor.rng_seed,
                 args.common.config_path.empty()
                     ? std::vector<std::string>{}
                     : std::vector<std::string>{args.common.config_path},
                 {args.common.out_path, args.common.out_path + ".jsonl"}, seconds_since(t0),
                 extra);
  std::printf("generated %zu samples (%s backend) -> %s\n", ds.samples.size(),
              backend_name(ds.backend), args.common.out_path.c_str());
  return 0;
}

int run_train(const TrainArgs& args) {
  const auto t0 = Clock::now();
  if (args.common.out_path.empty()) throw UsageError("train: --out is required");
  if (args.data_path.empty()) throw UsageError("train: --data is required");
  Config cfg = resolve_config(args.common.config_path);

  Dataset ds = load_dataset(args.data_path);
  Eigen::MatrixXd x, y;
  dataset_matrices(ds, x, y);
  condition_features(x, ds.m);

  Split split = split_indices(ds.samples.size(), cfg.pipeline.test_fraction,
                              cfg.pipeline.validation_fraction, args.common.seed);
  if (split.train.empty() || split.val.empty())
    throw InvariantError("train: dataset too small for the configured split");
  Eigen::MatrixXd x_train = x(to_int_rows(split.train), Eigen::all);
  Eigen::MatrixXd y_train = y(to_int_rows(split.train), Eigen::all);
  Eigen::MatrixXd x_val = x(to_int_rows(split.val), Eigen::all);
  Eigen::MatrixXd y_val = y(to_int_rows(split.val), Eigen::all);

  Rng root(args.common.seed);
  Rng init_rng = root.fork(1);
  Rng train_rng = root.fork(2);
  std::vector<int> hidden(cfg.pipeline.hidden_sizes.begin(), cfg.pipeline.hidden_sizes.end());
  MlpModel model = make_mlp(2 * ds.m, hidden, ds.n, init_rng);

  TrainOptions opt =
      apply_overrides(train_options(cfg.pipeline), args.learning_rate, args.dropout_rate,
                      args.batch_size, args.patience, args.max_epochs);
  TrainReport report = train(model, x_train, y_train, x_val, y_val, opt, train_rng);

  ensure_parent_dir(args.common.out_path);
  save_model(args.common.out_path, model);
  const std::string curve_csv = sibling_path(args.common.out_path, "_loss.csv");
  const std::string curve_svg = sibling_path(args.common.out_path, "_loss.svg");
  write_file(curve_csv, loss_csv(model.train_loss_log, model.val_loss_log));
  write_file(curve_svg, loss_svg(model.train_loss_log, model.val_loss_log, "training loss"));

  json extra;
  extra["epochs_run"] = report.epochs_run;
  extra["best_val_loss"] = report.best_val_loss;
  extra["stopped_early"] = report.stopped_early;
  extra["train_samples"] = split.train.size();
  extra["val_samples"] = split.val.size();
  write_manifest(args.common.out_path, "train", cfg, args.common.seed, {args.data_path},
                 {args.common.out_path, curve_csv, curve_svg}, seconds_since(t0), extra);
  std::printf("trained %d epochs (best val aRMSE %.6f%s) in %.1f s -> %s\n",
              report.epochs_run, report.best_val_loss,
              report.stopped_early ? ", early stop" : "", report.wall_time_s,
              args.common.out_path.c_str());
  return 0;
}

int run_eval(const EvalArgs& args) {
  const auto t0 = Clock::now();
  if (args.model_path.empty()) throw UsageError("eval: --model is required");
  if (args.data_path.empty()) throw UsageError("eval: --data is required");
  Config cfg = resolve_config(args.common.config_path);

  MlpModel model = load_model(args.model_path);
  Dataset ds = load_dataset(args.data_path);
  if (model.input_width() != 2 * ds.m || model.output_width() != ds.n)
    throw InvariantError("eval: model and dataset shapes do not match");
  Eigen::MatrixXd x, y;
  dataset_matrices(ds, x, y);
  condition_features(x, ds.m);

  std::vector<std::uint32_t> sel;
  if (args.split == "all") {
    sel.resize(ds.samples.size());
    for (std::size_t i = 0; i < sel.size(); ++i) sel[i] = static_cast<std::uint32_t>(i);
  } else {
    Split split = split_indices(ds.samples.size(), cfg.pipeline.test_fraction,
                                cfg.pipeline.validation_fraction, args.common.seed);
    if (args.split == "train") sel = split.train;
    else if (args.split == "val") sel = split.val;
    else if (args.split == "test") sel = split.test;
    else throw UsageError("eval: --split must be all|train|val|test");
  }
  if (sel.empty()) throw InvariantError("eval: selected split is empty");

  Eigen::MatrixXd x_sel = x(to_int_rows(sel), Eigen::all);
  Eigen::MatrixXd y_sel = y(to_int_rows(sel), Eigen::all);
  Eigen::MatrixXd pred = forward_batch(model, x_sel);
  EvalReport report =
      evaluate_predictions(pred, y_sel, ds.n, cfg.sensor.surface_side_mm);

  std::fputs(report_text(report).c_str(), stdout);
  std::fputs(report_csv(report).c_str(), stdout);

  std::vector<std::string> outputs;
  if (!args.common.out_path.empty()) {
    ensure_parent_dir(args.common.out_path);
    write_file(args.common.out_path, report_csv(report));
    outputs.push_back(args.common.out_path);
  }
  if (!args.per_sample_path.empty()) {
    std::string csv = "index,x_mm,y_mm,depth_mm,force_n";
    for (int k = 0; k < ds.n; ++k) put(csv, ",true_%d", k);
    for (int k = 0; k < ds.n; ++k) put(csv, ",pred_%d", k);
    csv += "\n";
    for (std::size_t i = 0; i < sel.size(); ++i) {
      const Sample& s = ds.samples[sel[i]];
      put(csv, "%u,%.9g,%.9g,%.9g,%.9g", sel[i], s.x_mm, s.y_mm, s.depth_mm, s.force_n);
      for (int k = 0; k < ds.n; ++k) put(csv, ",%.17g", y_sel(static_cast<int>(i), k));
      for (int k = 0; k < ds.n; ++k) put(csv, ",%.17g", pred(static_cast<int>(i), k));
      csv += "\n";
    }
    ensure_parent_dir(args.per_sample_path);
    write_file(args.per_sample_path, csv);
    outputs.push_back(args.per_sample_path);
  }
  if (args.heatmap_index >= 0) {
    if (args.common.out_path.empty())
      throw UsageError("eval: --heatmap requires --out to anchor the SVG path");
    if (args.heatmap_index >= static_cast<int>(sel.size()))
      throw UsageError("eval: --heatmap index is outside the selected split");
    int g = static_cast<int>(std::lround(std::sqrt(static_cast<double>(ds.n))));
    std::vector<double> truth(ds.n), predicted(ds.n);
    for (int k = 0; k < ds.n; ++k) {
      truth[k] = y_sel(args.heatmap_index, k);
      predicted[k] = pred(args.heatmap_index, k);
    }
    const std::string heat_path = sibling_path(args.common.out_path, "_heatmap.svg");
    write_file(heat_path, heatmap_pair_svg(truth, predicted, g, "true force [N]",
                                           "predicted force [N]"));
    outputs.push_back(heat_path);
  }

  if (!outputs.empty()) {
    json extra;
    extra["split"] = args.split;
    extra["armse_n"] = report.armse_n;
    extra["d_loc_mm"] = report.d_loc_mm;
    extra["rmse_mc_n"] = report.rmse_mc_n;
    extra["srmse_n"] = report.srmse_n;
    write_manifest(outputs.front(), "eval", cfg, args.common.seed,
                   {args.model_path, args.data_path}, outputs, seconds_since(t0), extra);
  }
  return 0;
}

int run_calibrate(const CalibrateArgs& args) {
  const auto t0 = Clock::now();
  if (args.common.out_path.empty()) throw UsageError("calibrate: --out is required");
  if (args.model_path.empty()) throw UsageError("calibrate: --model is required");
  if (args.data_path.empty()) throw UsageError("calibrate: --data is required");
  Config cfg = resolve_config(args.common.config_path);

  MlpModel backbone = load_model(args.model_path);
  Dataset ds = load_dataset(args.data_path);
  if (backbone.input_width() != 2 * ds.m || backbone.output_width() != ds.n)
    throw InvariantError("calibrate: model and dataset shapes do not match");
  TrainOptions opt =
      apply_overrides(train_options(cfg.calibration), args.learning_rate, args.dropout_rate,
                      args.batch_size, args.patience, args.max_epochs);
  Rng rng(args.common.seed);

  if (!args.sweep_sizes.empty()) {
    std::vector<SweepRow> rows = efficiency_sweep(backbone, ds, args.sweep_sizes, opt,
                                                  cfg.sensor.surface_side_mm, rng);
    std::string csv =
        "train_size,epochs_run,best_val_loss,armse_n,d_loc_mm,rmse_mc_n,srmse_n,"
        "sample_count,srmse_skipped\n";
    Series armse_s{"aRMSE [N]", {}, {}}, rmc_s{"RMSE_mc [N]", {}, {}},
        dloc_s{"d_loc [mm]", {}, {}};
    for (const SweepRow& row : rows) {
      put(csv, "%d,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%lld,%lld\n", row.train_size,
          row.report.epochs_run, row.report.best_val_loss, row.eval.armse_n,
          row.eval.d_loc_mm, row.eval.rmse_mc_n, row.eval.srmse_n,
          static_cast<long long>(row.eval.sample_count),
          static_cast<long long>(row.eval.srmse_skipped));
      armse_s.xs.push_back(row.train_size);
      armse_s.ys.push_back(row.eval.armse_n);
      rmc_s.xs.push_back(row.train_size);
      rmc_s.ys.push_back(row.eval.rmse_mc_n);
      dloc_s.xs.push_back(row.train_size);
      dloc_s.ys.push_back(row.eval.d_loc_mm);
    }
    ensure_parent_dir(args.common.out_path);
    write_file(args.common.out_path, csv);
    const std::string err_svg = sibling_path(args.common.out_path, "_error.svg");
    const std::string dloc_svg = sibling_path(args.common.out_path, "_d_loc.svg");
    write_file(err_svg, line_chart_svg({armse_s, rmc_s}, "calibration data efficiency",
                                       "calibration samples", "error [N]"));
    write_file(dloc_svg, line_chart_svg({dloc_s}, "calibration data efficiency",
                                        "calibration samples", "d_loc [mm]"));
    std::fputs(csv.c_str(), stdout);
    json extra;
    extra["sweep_sizes"] = args.sweep_sizes;
    write_manifest(args.common.out_path, "calibrate", cfg, args.common.seed,
                   {args.model_path, args.data_path},
                   {args.common.out_path, err_svg, dloc_svg}, seconds_since(t0), extra);
    return 0;
  }

  Eigen::MatrixXd x, y;
  dataset_matrices(ds, x, y);  // raw features; the calibration layer owns conditioning
  Split split = split_indices(ds.samples.size(), cfg.pipeline.test_fraction,
                              cfg.pipeline.validation_fraction, args.common.seed);
  if (split.train.empty() || split.val.empty())
    throw InvariantError("calibrate: dataset too small for the configured split");
  Eigen::MatrixXd x_train = x(to_int_rows(split.train), Eigen::all);
  Eigen::MatrixXd y_train = y(to_int_rows(split.train), Eigen::all);
  Eigen::MatrixXd x_val = x(to_int_rows(split.val), Eigen::all);
  Eigen::MatrixXd y_val = y(to_int_rows(split.val), Eigen::all);

  AugmentedModel aug = augment(backbone, ds.m);
  TrainReport report = calibrate(aug, x_train, y_train, x_val, y_val, opt, rng);

  EvalReport calibrated_eval, uncalibrated_eval;
  if (!split.test.empty()) {
    Eigen::MatrixXd x_test = x(to_int_rows(split.test), Eigen::all);
    Eigen::MatrixXd y_test = y(to_int_rows(split.test), Eigen::all);
    calibrated_eval = evaluate_predictions(aug_forward(aug, x_test), y_test, ds.n,
                                           cfg.sensor.surface_side_mm);
    Eigen::MatrixXd x_cond = x_test;
    condition_features(x_cond, ds.m);
    uncalibrated_eval = evaluate_predictions(forward_batch(backbone, x_cond), y_test, ds.n,
                                             cfg.sensor.surface_side_mm);
    std::printf("uncalibrated on held-out test:\n%s", report_text(uncalibrated_eval).c_str());
    std::printf("calibrated on held-out test:\n%s", report_text(calibrated_eval).c_str());
  }

  MlpModel folded = fold_augmented(aug);
  ensure_parent_dir(args.common.out_path);
  save_model(args.common.out_path, folded);
  const std::string curve_csv = sibling_path(args.common.out_path, "_loss.csv");
  const std::string curve_svg = sibling_path(args.common.out_path, "_loss.svg");
  write_file(curve_csv, loss_csv(aug.train_loss_log, aug.val_loss_log));
  write_file(curve_svg, loss_svg(aug.train_loss_log, aug.val_loss_log, "calibration loss"));

  json extra;
  extra["epochs_run"] = report.epochs_run;
  extra["best_val_loss"] = report.best_val_loss;
  extra["stopped_early"] = report.stopped_early;
  extra["calibrated_armse_n"] = calibrated_eval.armse_n;
  extra["uncalibrated_armse_n"] = uncalibrated_eval.armse_n;
  write_manifest(args.common.out_path, "calibrate", cfg, args.common.seed,
                 {args.model_path, args.data_path},
                 {args.common.out_path, curve_csv, curve_svg}, seconds_since(t0), extra);
  std::printf("calibrated %d epochs (best val aRMSE %.6f) in %.1f s -> %s\n",
              report.epochs_run, report.best_val_loss, report.wall_time_s,
              args.common.out_path.c_str());
  return 0;
}

int run_flow_check(const FlowCheckArgs& args) {
  const auto t0 = Clock::now();
  if (args.cases < 1) throw UsageError("flow-check: --cases must be positive");
  if (args.max_shift_px <= 0) throw UsageError("flow-check: --max-shift must be positive");
  Config cfg = resolve_config(args.common.config_path);
  SensorConfig sensor = cfg.sensor;
  if (args.common.seed_given) sensor.rng_seed = args.common.seed;
  if (args.image_size_px > 0) sensor.image_size_px = args.image_size_px;
  validate(sensor);

  MarkerField markers = make_markers(sensor);
  CameraModel cam = make_camera(sensor);
  Image rest = render(markers, cam, sensor);

  // Shifting the principal point moves every projection by exactly the same
  // offset, so the true flow is spatially constant and known in closed form.
  Rng rng(args.common.seed ^ 0x5bd1e995u);
  std::string csv = "case,dx_px,dy_px,mean_epe_px\n";
  double total_epe = 0.0;
  for (int c = 0; c < args.cases; ++c) {
    const double dx = rng.uniform(-args.max_shift_px, args.max_shift_px);
    const double dy = rng.uniform(-args.max_shift_px, args.max_shift_px);
    CameraModel shifted = cam;
    shifted.principal_point.x += dx;
    shifted.principal_point.y += dy;
    Image pressed = render(markers, shifted, sensor);
    FlowField flow = compute_flow(rest, pressed, args.levels, args.patch_px);
    double sum = 0.0;
    const std::size_t count = flow.magnitude_px.size();
    for (std::size_t i = 0; i < count; ++i) {
      const double vx = static_cast<double>(flow.magnitude_px[i]) *
                        std::cos(static_cast<double>(flow.angle_rad[i]));
      const double vy = static_cast<double>(flow.magnitude_px[i]) *
                        std::sin(static_cast<double>(flow.angle_rad[i]));
      sum += std::hypot(vx - dx, vy - dy);
    }
    const double epe = sum / static_cast<double>(count);
    total_epe += epe;
    put(csv, "%d,%.17g,%.17g,%.17g\n", c, dx, dy, epe);
  }
  put(csv, "summary,,,%.17g\n", total_epe / args.cases);
  std::fputs(csv.c_str(), stdout);

  if (!args.common.out_path.empty()) {
    ensure_parent_dir(args.common.out_path);
    write_file(args.common.out_path, csv);
    json extra;
    extra["cases"] = args.cases;
    extra["max_shift_px"] = args.max_shift_px;
    extra["mean_epe_px"] = total_epe / args.cases;
    write_manifest(args.common.out_path, "flow-check", cfg, args.common.seed, {},
                   {args.common.out_path}, seconds_since(t0), extra);
  }
  return 0;
}

}  // namespace tactsim
