#include "tactsim/metrics.hpp"

#include <cmath>

#include "tactsim/labels.hpp"

namespace tactsim {

Eigen::Index argmax_component(const Eigen::VectorXd& values) {
    if (values.size() == 0) throw InvariantError("argmax of an empty vector");
    Eigen::Index best = 0;
    double best_abs = std::abs(values[0]);
    for (Eigen::Index i = 1; i < values.size(); ++i) {
        const double a = std::abs(values[i]);
        if (a > best_abs) {
            best_abs = a;
            best = i;
        }
    }
    return best;
}

double d_loc(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& pred, int n,
             double side_mm) {
    if (truth.rows() != pred.rows() || truth.cols() != pred.cols()) {
        throw InvariantError("d_loc: shape mismatch");
    }
    if (truth.rows() == 0) throw InvariantError("d_loc: empty batch");
    if (truth.cols() != n) throw InvariantError("d_loc: label width is not n");
    double sum = 0.0;
    for (Eigen::Index l = 0; l < truth.rows(); ++l) {
        const Eigen::Index kt = argmax_component(truth.row(l));
        const Eigen::Index kp = argmax_component(pred.row(l));
        const Vec2 ct = bin_center(static_cast<int>(kt), n, side_mm);
        const Vec2 cp = bin_center(static_cast<int>(kp), n, side_mm);
        sum += std::hypot(ct.x - cp.x, ct.y - cp.y);
    }
    return sum / static_cast<double>(truth.rows());
}

double rmse_mc(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& pred) {
    if (truth.rows() != pred.rows() || truth.cols() != pred.cols()) {
        throw InvariantError("rmse_mc: shape mismatch");
    }
    if (truth.rows() == 0) throw InvariantError("rmse_mc: empty batch");
    double sum = 0.0;
    for (Eigen::Index l = 0; l < truth.rows(); ++l) {
        const double yt = truth(l, argmax_component(truth.row(l)));
        const double yp = pred(l, argmax_component(pred.row(l)));
        sum += (yt - yp) * (yt - yp);
    }
    return std::sqrt(sum / static_cast<double>(truth.rows()));
}

double srmse(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& pred,
             std::int64_t* skipped_out) {
    if (truth.rows() != pred.rows() || truth.cols() != pred.cols()) {
        throw InvariantError("srmse: shape mismatch");
    }
    if (truth.rows() == 0) throw InvariantError("srmse: empty batch");
    double sum = 0.0;
    std::int64_t terms = 0;
    std::int64_t skipped = 0;
    for (Eigen::Index l = 0; l < truth.rows(); ++l) {
        bool any = false;
        for (Eigen::Index i = 0; i < truth.cols(); ++i) {
            if (truth(l, i) != 0.0) {
                const double e = truth(l, i) - pred(l, i);
                sum += e * e;
                ++terms;
                any = true;
            }
        }
        if (!any) ++skipped;
    }
    if (skipped_out != nullptr) *skipped_out = skipped;
    if (terms == 0) throw InvariantError("srmse: no nonzero components");
    return std::sqrt(sum / static_cast<double>(terms));
}

EvalReport evaluate_predictions(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& y,
                                int n, double side_mm) {
    EvalReport rep;
    rep.armse_n = armse(pred, y);
    rep.d_loc_mm = d_loc(y, pred, n, side_mm);
    rep.rmse_mc_n = rmse_mc(y, pred);
    rep.srmse_n = srmse(y, pred, &rep.srmse_skipped);
    rep.sample_count = static_cast<std::int64_t>(pred.rows());
    return rep;
}

EvalReport evaluate(const MlpModel& model, const Eigen::MatrixXd& x,
                    const Eigen::MatrixXd& y, int n, double side_mm) {
    if (x.rows() == 0) throw InvariantError("evaluate: empty set");
    return evaluate_predictions(forward_batch(model, x), y, n, side_mm);
}

}  // namespace tactsim
