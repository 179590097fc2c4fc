#pragma once

#include "tactsim/metrics.hpp"
#include "tactsim/nn.hpp"

namespace tactsim {

// Backbone with a square, identity-initialized, ReLU-activated preprocessing
// layer in front. Only the preprocessing layer trains; the backbone stays
// frozen. Angle inputs are shifted by +pi before the layer and -pi after, so
// every input to the ReLU is non-negative and the identity-initialized layer
// reproduces the conditioned baseline bitwise.
struct AugmentedModel {
    int m = 0;
    Eigen::MatrixXd calib_w;  // 2m x 2m
    Eigen::VectorXd calib_b;  // 2m
    MlpModel backbone;
    OptimizerState opt;  // moments for the calibration layer only
    std::vector<double> train_loss_log;
    std::vector<double> val_loss_log;
};

// Identity-initialized augmentation; the model input width must equal 2m.
AugmentedModel augment(const MlpModel& model, int m);

// Forward pass on raw (unconditioned) features, one sample per row.
Eigen::MatrixXd aug_forward(const AugmentedModel& aug, const Eigen::MatrixXd& x_raw);

TrainOptions train_options(const CalibrationConfig& cfg);

// Nadam on the calibration layer only, aRMSE loss, dropout on the backbone
// hidden activations, early stopping with best-weight restore (the identity
// start participates, so calibration can never end worse on validation than
// the uncalibrated model). Throws on an empty calibration set.
TrainReport calibrate(AugmentedModel& aug, const Eigen::MatrixXd& x_train_raw,
                      const Eigen::MatrixXd& y_train, const Eigen::MatrixXd& x_val_raw,
                      const Eigen::MatrixXd& y_val, const TrainOptions& opt, Rng& rng);

// Fold the calibration layer and the +pi/-pi angle shifts into a plain model:
// layer 0 becomes {Wc, Wc*shift + bc, relu} and the first backbone bias
// absorbs -W1*shift. Forward-equivalent to aug_forward on raw features, and
// loadable by every model consumer. Optimizer moments reset to zero.
MlpModel fold_augmented(const AugmentedModel& aug);

// The perturbed "different gel" sensor: +1 mm camera distance and a fresh
// marker seed; pair with perturbed_material for the stiffness change.
SensorConfig perturbed_sensor(const SensorConfig& base);
GelMaterial perturbed_material(const GelMaterial& base);  // E x 1.3

struct SweepRow {
    int train_size = 0;
    TrainReport report;
    EvalReport eval;
};

// Calibration-data efficiency sweep: a fixed held-out test set (the pool
// minus the largest size) and nested training portions of the given sizes,
// 10% of each portion reserved for validation. One row per size.
std::vector<SweepRow> efficiency_sweep(const MlpModel& backbone, const Dataset& pool,
                                       const std::vector<int>& sizes,
                                       const TrainOptions& opt, double side_mm,
                                       Rng& rng);

}  // namespace tactsim
