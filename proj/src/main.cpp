#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"
#include "tactsim/common.hpp"
#include "tactsim/runner.hpp"

namespace {

// Exit codes: 0 success, 2 usage/flag errors, 3 file I/O errors, 4 invariant
// violations. One machine-parsable line per failure on stderr.
constexpr int kUsageExit = 2;
constexpr int kIoExit = 3;
constexpr int kInvariantExit = 4;

void add_common(CLI::App* cmd, tactsim::CommonArgs& common, bool out_required) {
  cmd->add_option("--config", common.config_path, "config file (key = value lines)");
  auto* seed = cmd->add_option("--seed", common.seed, "run seed");
  cmd->add_option("--out", common.out_path, "output path")->required(out_required);
  cmd->parse_complete_callback([&common, seed] { common.seed_given = seed->count() > 0; });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"synthetic vision-based tactile sensing pipeline"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "full help for every subcommand");

  tactsim::GenerateArgs gen;
  CLI::App* cmd_gen = app.add_subcommand("generate", "simulate a press sweep dataset");
  add_common(cmd_gen, gen.common, true);
  cmd_gen->add_option("--backend", gen.backend, "flow backend: oracle|rendered")
      ->check(CLI::IsMember({"oracle", "rendered"}));
  cmd_gen->add_option("--spacing", gen.spacing_mm, "grid spacing [mm]");
  cmd_gen->add_option("--margin", gen.margin_mm, "edge margin [mm]");
  cmd_gen->add_option("--gel-id", gen.gel_id, "gel id recorded per sample");
  cmd_gen->add_flag("--perturbed", gen.perturbed,
                    "use the perturbed sensor (stiffer gel, +1 mm camera)");

  tactsim::TrainArgs tr;
  CLI::App* cmd_train = app.add_subcommand("train", "train the force regression network");
  add_common(cmd_train, tr.common, true);
  cmd_train->add_option("--data", tr.data_path, "training dataset (.tsim)")->required();
  cmd_train->add_option("--lr", tr.learning_rate, "learning-rate override");
  cmd_train->add_option("--dropout", tr.dropout_rate, "dropout-rate override");
  cmd_train->add_option("--batch", tr.batch_size, "batch-size override");
  cmd_train->add_option("--patience", tr.patience, "early-stop patience override");
  cmd_train->add_option("--max-epochs", tr.max_epochs, "epoch-budget override");

  tactsim::EvalArgs ev;
  CLI::App* cmd_eval = app.add_subcommand("eval", "evaluate a model on a dataset");
  add_common(cmd_eval, ev.common, false);
  cmd_eval->add_option("--model", ev.model_path, "model file (.tsm)")->required();
  cmd_eval->add_option("--data", ev.data_path, "dataset (.tsim)")->required();
  cmd_eval->add_option("--split", ev.split, "evaluate all|train|val|test rows")
      ->check(CLI::IsMember({"all", "train", "val", "test"}));
  cmd_eval->add_option("--per-sample", ev.per_sample_path,
                       "dump per-sample true/predicted label rows to this CSV");
  cmd_eval->add_option("--heatmap", ev.heatmap_index,
                       "emit a true/predicted heatmap SVG for this sample index");

  tactsim::CalibrateArgs cal;
  CLI::App* cmd_cal =
      app.add_subcommand("calibrate", "fit the cross-sensor calibration layer");
  add_common(cmd_cal, cal.common, true);
  cmd_cal->add_option("--model", cal.model_path, "frozen backbone model (.tsm)")->required();
  cmd_cal->add_option("--data", cal.data_path, "perturbed-sensor dataset (.tsim)")->required();
  cmd_cal->add_option("--sweep", cal.sweep_sizes,
                      "comma-separated training sizes; outputs a data-efficiency CSV")
      ->delimiter(',');
  cmd_cal->add_option("--lr", cal.learning_rate, "learning-rate override");
  cmd_cal->add_option("--dropout", cal.dropout_rate, "dropout-rate override");
  cmd_cal->add_option("--batch", cal.batch_size, "batch-size override");
  cmd_cal->add_option("--patience", cal.patience, "early-stop patience override");
  cmd_cal->add_option("--max-epochs", cal.max_epochs, "epoch-budget override");

  tactsim::FlowCheckArgs fc;
  CLI::App* cmd_fc =
      app.add_subcommand("flow-check", "translation-recovery benchmark for the flow stage");
  add_common(cmd_fc, fc.common, false);
  cmd_fc->add_option("--cases", fc.cases, "number of random translations");
  cmd_fc->add_option("--max-shift", fc.max_shift_px, "largest |shift| per axis [px]");
  cmd_fc->add_option("--image-size", fc.image_size_px, "image size override [px]");
  cmd_fc->add_option("--levels", fc.levels, "pyramid levels");
  cmd_fc->add_option("--patch", fc.patch_px, "patch size [px]");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kUsageExit;  // help/version exit 0, any parse error 2
  }

  try {
    if (*cmd_gen) return tactsim::run_generate(gen);
    if (*cmd_train) return tactsim::run_train(tr);
    if (*cmd_eval) return tactsim::run_eval(ev);
    if (*cmd_cal) return tactsim::run_calibrate(cal);
    if (*cmd_fc) return tactsim::run_flow_check(fc);
  } catch (const tactsim::UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kUsageExit;
  } catch (const tactsim::IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return kIoExit;
  } catch (const tactsim::InvariantError& e) {
    std::fprintf(stderr, "invariant error: %s\n", e.what());
    return kInvariantExit;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "invariant error: %s\n", e.what());
    return kInvariantExit;
  }
  return 0;
}
