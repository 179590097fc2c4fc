#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "tactsim/config.hpp"
#include "tactsim/dataset.hpp"
#include "tactsim/rng.hpp"

namespace tactsim {

enum class Activation : std::uint8_t { kLogistic = 0, kRelu = 1, kIdentity = 2 };

struct Layer {
    Eigen::MatrixXd w;  // out x in
    Eigen::VectorXd b;  // out
    Activation act = Activation::kLogistic;
};

// Nadam first/second moment buffers, one pair per parameter tensor.
struct OptimizerState {
    std::vector<Eigen::MatrixXd> mw, vw;
    std::vector<Eigen::VectorXd> mb, vb;
    std::int64_t step = 0;
};

struct MlpModel {
    std::vector<Layer> layers;
    OptimizerState opt;
    // Per-epoch logs; entry 0 is the pre-training state, so the minimum of
    // val_loss_log always matches the restored best weights.
    std::vector<double> train_loss_log;
    std::vector<double> val_loss_log;

    int input_width() const {
        return layers.empty() ? 0 : static_cast<int>(layers.front().w.cols());
    }
    int output_width() const {
        return layers.empty() ? 0 : static_cast<int>(layers.back().w.rows());
    }
};

// Glorot-uniform initialized MLP: logistic hidden layers, identity output.
MlpModel make_mlp(int input_width, const std::vector<int>& hidden,
                  int output_width, Rng& rng);

// Per-component RMSE averaged over components:
// (1/n) sum_i sqrt( (1/N) sum_l (pred_li - true_li)^2 ), batches stored one
// sample per row.
double armse(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth);

// Deterministic eval-mode forward pass; rows of x are samples.
Eigen::MatrixXd forward_batch(const MlpModel& model, const Eigen::MatrixXd& x);

// Training-mode forward with inverted dropout after each hidden activation.
// The cache holds everything backprop() needs.
struct ForwardCache {
    std::vector<Eigen::MatrixXd> inputs;  // activation input to each layer
    std::vector<Eigen::MatrixXd> zs;      // pre-activation values
    std::vector<Eigen::MatrixXd> masks;   // dropout masks ({} where unused)
    Eigen::MatrixXd output;
};

void forward_train(const MlpModel& model, const Eigen::MatrixXd& x,
                   double dropout_rate, Rng& rng, ForwardCache& cache);

struct ParamGradients {
    std::vector<Eigen::MatrixXd> gw;
    std::vector<Eigen::VectorXd> gb;
};

// Gradients of batch aRMSE at the cached forward pass; loss_out receives the
// batch loss. The square root's subgradient at zero error is taken as 0.
ParamGradients backprop(const MlpModel& model, const ForwardCache& cache,
                        const Eigen::MatrixXd& truth, double& loss_out);

// Eval-mode (no dropout) aRMSE gradients, for verification against finite
// differences.
ParamGradients gradients(const MlpModel& model, const Eigen::MatrixXd& x,
                         const Eigen::MatrixXd& truth);

// One Nadam update of a parameter tensor and its moment buffers
// (beta1 0.9, beta2 0.999, eps 1e-8); step is the 1-based global step count.
void nadam_update(Eigen::MatrixXd& param, Eigen::MatrixXd& m, Eigen::MatrixXd& v,
                  const Eigen::MatrixXd& grad, double lr, std::int64_t step);
void nadam_update(Eigen::VectorXd& param, Eigen::VectorXd& m, Eigen::VectorXd& v,
                  const Eigen::VectorXd& grad, double lr, std::int64_t step);

struct TrainOptions {
    int batch_size = 200;
    double learning_rate = 0.001;
    int patience = 50;  // early-stop after this many stagnant epochs
    double dropout_rate = 0.15;
    int max_epochs = 4000;
};

TrainOptions train_options(const PipelineConfig& pipe);

struct TrainReport {
    int epochs_run = 0;
    double best_val_loss = 0.0;
    bool stopped_early = false;
    double wall_time_s = 0.0;
};

// Nadam (beta1 0.9, beta2 0.999, eps 1e-8) minimizing aRMSE with per-epoch
// seeded shuffling, early stopping, and best-validation weight restore.
// Throws InvariantError if the loss or any parameter goes non-finite.
TrainReport train(MlpModel& model, const Eigen::MatrixXd& x_train,
                  const Eigen::MatrixXd& y_train, const Eigen::MatrixXd& x_val,
                  const Eigen::MatrixXd& y_val, const TrainOptions& opt, Rng& rng);

// Dataset rows as double matrices: X is count x 2m, Y is count x n.
void dataset_matrices(const Dataset& ds, Eigen::MatrixXd& x, Eigen::MatrixXd& y);

// Baseline feature conditioning: angle columns are shifted by +pi and back,
// making them non-negative before the (lossy) round trip. The calibration
// layer reproduces exactly this sequence, so an identity-initialized layer is
// bitwise-equivalent to the conditioned baseline.
void condition_features(Eigen::MatrixXd& x, int m);

// All weights and biases as little-endian bytes, for bitwise comparisons.
std::string model_param_bytes(const MlpModel& model);

// Versioned binary model container (weights, optimizer state, loss logs; CRC
// trailer). Forward outputs are bit-identical after a round trip.
void save_model(const std::string& path, const MlpModel& model);
MlpModel load_model(const std::string& path);

}  // namespace tactsim
