#include <cmath>

#include "doctest.h"
#include "tactsim/calibration.hpp"
#include "tactsim/rng.hpp"
#include "test_support.hpp"

using namespace tactsim;

namespace {

// Raw feature rows: magnitudes in [0, 5), angles in (-pi, pi].
Eigen::MatrixXd raw_features(Eigen::Index rows, int m, Rng& rng) {
  Eigen::MatrixXd x(rows, 2 * m);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (int j = 0; j < m; ++j) x(i, j) = rng.uniform(0.0, 5.0);
    for (int j = m; j < 2 * m; ++j) x(i, j) = rng.uniform(-kPi, kPi);
  }
  return x;
}

Eigen::MatrixXd one_hot_labels(Eigen::Index rows, int n, Rng& rng) {
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(rows, n);
  for (Eigen::Index i = 0; i < rows; ++i) {
    y(i, static_cast<int>(rng.uniform(0.0, static_cast<double>(n)))) =
        rng.uniform(0.1, 1.0);
  }
  return y;
}

bool all_close(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double tol) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      const double scale = std::max({1.0, std::abs(a(i, j)), std::abs(b(i, j))});
      if (std::abs(a(i, j) - b(i, j)) > tol * scale) return false;
    }
  }
  return true;
}

}  // namespace

TEST_SUITE("calibration") {
  TEST_CASE("augment starts as the exact identity around the backbone") {
    Rng init(19);
    const int m = 4;
    const MlpModel backbone = make_mlp(2 * m, {6}, 4, init);
    const AugmentedModel aug = augment(backbone, m);

    CHECK(aug.calib_w == Eigen::MatrixXd::Identity(8, 8));
    CHECK(aug.calib_b.isZero(0.0));
    CHECK(aug.opt.step == 0);
    CHECK(model_param_bytes(aug.backbone) == model_param_bytes(backbone));

    // Bitwise equal to the conditioned baseline, not merely close.
    Rng data_rng(4);
    const Eigen::MatrixXd x_raw = raw_features(9, m, data_rng);
    Eigen::MatrixXd x_cond = x_raw;
    condition_features(x_cond, m);
    CHECK(aug_forward(aug, x_raw) == forward_batch(backbone, x_cond));

    CHECK_THROWS_AS(augment(backbone, 3), InvariantError);
    CHECK_THROWS_AS(augment(backbone, 0), InvariantError);
    CHECK_THROWS_AS(aug_forward(aug, Eigen::MatrixXd(2, 6)), InvariantError);
  }

  TEST_CASE("train_options mirrors the calibration hyperparameters") {
    CalibrationConfig cfg;
    cfg.batch_size = 12;
    cfg.learning_rate = 0.5;
    cfg.n_es = 7;
    cfg.dropout_rate = 0.25;
    const TrainOptions opt = train_options(cfg);
    CHECK(opt.batch_size == 12);
    CHECK(opt.learning_rate == 0.5);
    CHECK(opt.patience == 7);
    CHECK(opt.dropout_rate == 0.25);
  }

  TEST_CASE("calibrate trains only the front layer and never ends worse") {
    Rng init(23);
    const int m = 4;
    const MlpModel backbone = make_mlp(2 * m, {10, 6}, 4, init);

    Rng data_rng(71);
    const Eigen::MatrixXd x_train = raw_features(40, m, data_rng);
    const Eigen::MatrixXd y_train = one_hot_labels(40, 4, data_rng);
    const Eigen::MatrixXd x_val = raw_features(12, m, data_rng);
    const Eigen::MatrixXd y_val = one_hot_labels(12, 4, data_rng);

    TrainOptions opt;
    opt.batch_size = 8;
    opt.learning_rate = 1e-3;
    opt.patience = 50;
    opt.dropout_rate = 0.0;
    opt.max_epochs = 40;

    AugmentedModel aug = augment(backbone, m);
    const double uncalibrated_val = armse(aug_forward(aug, x_val), y_val);
    const std::string backbone_bytes = model_param_bytes(backbone);

    Rng rng(31);
    const TrainReport report = calibrate(aug, x_train, y_train, x_val, y_val, opt, rng);
    CHECK(report.epochs_run == 40);
    REQUIRE(aug.val_loss_log.size() == 41);
    CHECK(aug.val_loss_log[0] == uncalibrated_val);
    CHECK(report.best_val_loss <= uncalibrated_val);  // identity start participates
    CHECK(report.best_val_loss ==
          *std::min_element(aug.val_loss_log.begin(), aug.val_loss_log.end()));
    // Restored best parameters reproduce the reported loss.
    CHECK(armse(aug_forward(aug, x_val), y_val) == report.best_val_loss);
    // The backbone is frozen; the calibration layer is what moved.
    CHECK(model_param_bytes(aug.backbone) == backbone_bytes);
    CHECK(aug.calib_w != Eigen::MatrixXd::Identity(8, 8));
    CHECK(aug.opt.step == 40 * 5);

    // Bitwise-deterministic re-run.
    AugmentedModel aug2 = augment(backbone, m);
    Rng rng2(31);
    const TrainReport report2 = calibrate(aug2, x_train, y_train, x_val, y_val, opt, rng2);
    CHECK(report2.best_val_loss == report.best_val_loss);
    CHECK(aug2.val_loss_log == aug.val_loss_log);
    CHECK(aug2.calib_w == aug.calib_w);
    CHECK(aug2.calib_b == aug.calib_b);
  }

  TEST_CASE("calibrate recovers a feature rescale that the backbone cannot") {
    // Teach a backbone a task, then feed it inputs whose magnitudes are
    // scaled 1.6x. The frozen backbone degrades; the front layer can undo the
    // scale and must beat the uncalibrated validation loss.
    Rng init(29);
    const int m = 4;
    MlpModel backbone = make_mlp(2 * m, {12}, 4, init);

    Rng data_rng(5);
    const Eigen::MatrixXd x_clean = raw_features(120, m, data_rng);
    Eigen::MatrixXd y(120, 4);  // smooth target driven by the magnitudes
    for (Eigen::Index i = 0; i < 120; ++i) {
      for (int j = 0; j < 4; ++j) y(i, j) = 0.1 * x_clean(i, j);
    }
    Eigen::MatrixXd x_cond = x_clean;
    condition_features(x_cond, m);
    TrainOptions fit;
    fit.batch_size = 20;
    fit.learning_rate = 0.005;
    fit.patience = 400;
    fit.dropout_rate = 0.0;
    fit.max_epochs = 400;
    Rng fit_rng(1);
    train(backbone, x_cond.topRows(100), y.topRows(100), x_cond.bottomRows(20),
          y.bottomRows(20), fit, fit_rng);

    Eigen::MatrixXd x_scaled = x_clean;
    x_scaled.leftCols(m) *= 1.6;

    AugmentedModel aug = augment(backbone, m);
    TrainOptions opt = fit;
    opt.learning_rate = 0.02;
    opt.max_epochs = 300;
    Rng rng(9);
    const TrainReport report =
        calibrate(aug, x_scaled.topRows(100), y.topRows(100), x_scaled.bottomRows(20),
                  y.bottomRows(20), opt, rng);
    CHECK(report.best_val_loss < 0.7 * aug.val_loss_log[0]);
  }

  TEST_CASE("calibrate validates its input") {
    Rng init(2);
    const MlpModel backbone = make_mlp(8, {5}, 4, init);
    AugmentedModel aug = augment(backbone, 4);
    Rng data_rng(3);
    const Eigen::MatrixXd x = raw_features(6, 4, data_rng);
    const Eigen::MatrixXd y = one_hot_labels(6, 4, data_rng);
    TrainOptions opt;
    opt.max_epochs = 1;
    Rng rng(1);
    CHECK_THROWS_WITH_AS(
        calibrate(aug, Eigen::MatrixXd(0, 8), Eigen::MatrixXd(0, 4), x, y, opt, rng),
        doctest::Contains("empty calibration set"), InvariantError);
    CHECK_THROWS_AS(
        calibrate(aug, x, y, Eigen::MatrixXd(0, 8), Eigen::MatrixXd(0, 4), opt, rng),
        InvariantError);
    TrainOptions bad = opt;
    bad.batch_size = 0;
    CHECK_THROWS_AS(calibrate(aug, x, y, x, y, bad, rng), InvariantError);
    bad = opt;
    bad.learning_rate = -1.0;
    CHECK_THROWS_AS(calibrate(aug, x, y, x, y, bad, rng), InvariantError);
  }

  TEST_CASE("fold_augmented is forward-equivalent and consumer-loadable") {
    Rng init(37);
    const int m = 4;
    const MlpModel backbone = make_mlp(2 * m, {7}, 4, init);
    AugmentedModel aug = augment(backbone, m);
    // Perturb the calibration layer so the fold is nontrivial.
    Rng perturb(41);
    for (Eigen::Index j = 0; j < aug.calib_w.cols(); ++j) {
      for (Eigen::Index i = 0; i < aug.calib_w.rows(); ++i) {
        aug.calib_w(i, j) += perturb.uniform(-0.05, 0.05);
      }
      aug.calib_b[j] = perturb.uniform(-0.1, 0.1);
    }
    aug.train_loss_log = {0.5, 0.4};
    aug.val_loss_log = {0.6, 0.45};

    const MlpModel folded = fold_augmented(aug);
    REQUIRE(folded.layers.size() == backbone.layers.size() + 1);
    CHECK(folded.layers[0].act == Activation::kRelu);
    CHECK(folded.layers[0].w == aug.calib_w);
    CHECK(folded.opt.step == 0);
    CHECK(folded.train_loss_log == aug.train_loss_log);
    CHECK(folded.val_loss_log == aug.val_loss_log);

    Rng data_rng(8);
    const Eigen::MatrixXd x_raw = raw_features(15, m, data_rng);
    CHECK(all_close(forward_batch(folded, x_raw), aug_forward(aug, x_raw), 1e-12));

    // The fold round-trips through the model container.
    testing::ScopedTempDir dir("fold");
    save_model(dir.file("folded.tsmd"), folded);
    const MlpModel back = load_model(dir.file("folded.tsmd"));
    CHECK(forward_batch(back, x_raw) == forward_batch(folded, x_raw));

    CHECK_THROWS_AS(fold_augmented(AugmentedModel{}), InvariantError);
  }

  TEST_CASE("perturbed sensor and material change exactly the advertised knobs") {
    const SensorConfig base;
    const SensorConfig p = perturbed_sensor(base);
    CHECK(p.camera_distance_mm == base.camera_distance_mm + 1.0);
    CHECK(p.rng_seed != base.rng_seed);
    CHECK(p.surface_side_mm == base.surface_side_mm);
    CHECK(p.image_size_px == base.image_size_px);
    CHECK(p.marker_count == base.marker_count);
    const SensorConfig p2 = perturbed_sensor(base);
    CHECK(p2.rng_seed == p.rng_seed);  // deterministic derivation

    const GelMaterial mat;
    const GelMaterial pm = perturbed_material(mat);
    CHECK(pm.youngs_modulus_kpa == doctest::Approx(1.3 * mat.youngs_modulus_kpa));
    CHECK(pm.poisson_ratio == mat.poisson_ratio);
  }

  TEST_CASE("efficiency_sweep holds out one test set and nests the portions") {
    Rng init(13);
    const MlpModel backbone = make_mlp(8, {6}, 4, init);
    const Dataset pool = testing::random_dataset(60, 4, 4, 77);

    TrainOptions opt;
    opt.batch_size = 4;
    opt.learning_rate = 1e-3;
    opt.patience = 10;
    opt.dropout_rate = 0.0;
    opt.max_epochs = 4;

    Rng rng(55);
    const std::vector<SweepRow> rows =
        efficiency_sweep(backbone, pool, {10, 20}, opt, 32.0, rng);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].train_size == 10);
    CHECK(rows[1].train_size == 20);
    CHECK(rows[0].eval.sample_count == 40);  // pool minus the largest portion
    CHECK(rows[1].eval.sample_count == 40);
    CHECK(rows[0].report.epochs_run >= 1);

    Rng rng2(55);
    const std::vector<SweepRow> again =
        efficiency_sweep(backbone, pool, {10, 20}, opt, 32.0, rng2);
    CHECK(again[0].eval.armse_n == rows[0].eval.armse_n);
    CHECK(again[1].eval.d_loc_mm == rows[1].eval.d_loc_mm);

    Rng rng3(1);
    CHECK_THROWS_AS(efficiency_sweep(backbone, pool, {}, opt, 32.0, rng3), InvariantError);
    CHECK_THROWS_AS(efficiency_sweep(backbone, pool, {1}, opt, 32.0, rng3), InvariantError);
    CHECK_THROWS_AS(efficiency_sweep(backbone, pool, {60}, opt, 32.0, rng3),
                    InvariantError);
  }
}
