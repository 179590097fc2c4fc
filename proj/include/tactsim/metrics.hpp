#pragma once

#include <Eigen/Dense>

#include "tactsim/nn.hpp"

namespace tactsim {

struct EvalReport {
    double armse_n = 0.0;
    double d_loc_mm = 0.0;
    double rmse_mc_n = 0.0;
    double srmse_n = 0.0;
    std::int64_t sample_count = 0;
    // Samples whose true label is all-zero are excluded from srmse_n.
    std::int64_t srmse_skipped = 0;
};

// Argmax of |values| with ties broken toward the lowest index; shared by all
// max-component metrics.
Eigen::Index argmax_component(const Eigen::VectorXd& values);

// Mean distance between the bin centers of the true and predicted
// maximum-magnitude components. Batches are one sample per row.
double d_loc(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& pred, int n,
             double side_mm);

// RMSE between the values of the true and predicted maximum-magnitude
// components.
double rmse_mc(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& pred);

// Pooled RMSE over the components that are nonzero in the true label.
// All-zero samples are skipped (reported via skipped_out); an all-zero batch
// is an error.
double srmse(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& pred,
             std::int64_t* skipped_out = nullptr);

// All four metrics for already-computed predictions.
EvalReport evaluate_predictions(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& y,
                                int n, double side_mm);

// Eval-mode forward over the whole set, then all four metrics.
EvalReport evaluate(const MlpModel& model, const Eigen::MatrixXd& x,
                    const Eigen::MatrixXd& y, int n, double side_mm);

}  // namespace tactsim
