#include "tactsim/calibration.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace tactsim {

namespace {

// +pi on angle slots, 0 on magnitude slots.
Eigen::RowVectorXd angle_shift(int m) {
    Eigen::RowVectorXd s = Eigen::RowVectorXd::Zero(2 * m);
    for (int j = m; j < 2 * m; ++j) s[j] = kPi;
    return s;
}

struct CalibCache {
    Eigen::MatrixXd shifted;    // x + s
    Eigen::MatrixXd zc;         // calib pre-activation
    Eigen::MatrixXd bb_output;  // backbone output
    std::vector<Eigen::MatrixXd> bb_zs;
    std::vector<Eigen::MatrixXd> bb_masks;
};

void calib_forward(const AugmentedModel& aug, const Eigen::MatrixXd& x_raw,
                   double dropout_rate, Rng* rng, CalibCache* cache) {
    if (x_raw.cols() != 2 * static_cast<Eigen::Index>(aug.m)) {
        throw InvariantError("augmented forward: input width is not 2m");
    }
    const Eigen::RowVectorXd s = angle_shift(aug.m);
    Eigen::MatrixXd shifted = x_raw.rowwise() + s;
    Eigen::MatrixXd zc = (shifted * aug.calib_w.transpose()).rowwise() +
                         aug.calib_b.transpose();
    Eigen::MatrixXd bb_in = (zc.cwiseMax(0.0).rowwise() - s).eval();

    ForwardCache bb;
    if (rng != nullptr) {
        forward_train(aug.backbone, bb_in, dropout_rate, *rng, bb);
    } else {
        Rng unused(0);
        forward_train(aug.backbone, bb_in, 0.0, unused, bb);
    }
    if (cache != nullptr) {
        cache->shifted = std::move(shifted);
        cache->zc = std::move(zc);
        cache->bb_output = std::move(bb.output);
        cache->bb_zs = std::move(bb.zs);
        cache->bb_masks = std::move(bb.masks);
    }
}

// Gradient of the batch aRMSE with respect to the calibration parameters,
// propagated through the frozen backbone.
void calib_backprop(const AugmentedModel& aug, const CalibCache& cache,
                    const Eigen::MatrixXd& truth, Eigen::MatrixXd& gw,
                    Eigen::VectorXd& gb, double& loss_out) {
    const Eigen::MatrixXd& pred = cache.bb_output;
    const Eigen::Index n_set = pred.rows();
    const Eigen::Index n_out = pred.cols();
    const Eigen::MatrixXd err = pred - truth;
    Eigen::MatrixXd delta(n_set, n_out);
    double loss = 0.0;
    for (Eigen::Index j = 0; j < n_out; ++j) {
        const double r = std::sqrt(err.col(j).squaredNorm() / n_set);
        loss += r;
        if (r > 0.0) {
            delta.col(j) = err.col(j) /
                           (static_cast<double>(n_out) * static_cast<double>(n_set) * r);
        } else {
            delta.col(j).setZero();
        }
    }
    loss_out = loss / static_cast<double>(n_out);

    for (int k = static_cast<int>(aug.backbone.layers.size()) - 1; k >= 0; --k) {
        const Layer& l = aug.backbone.layers[k];
        if (cache.bb_masks[k].size() != 0) delta = delta.cwiseProduct(cache.bb_masks[k]);
        if (l.act == Activation::kLogistic) {
            const Eigen::ArrayXXd sig = 1.0 / (1.0 + (-cache.bb_zs[k].array()).exp());
            delta = (delta.array() * sig * (1.0 - sig)).matrix();
        } else if (l.act == Activation::kRelu) {
            delta = (delta.array() * (cache.bb_zs[k].array() > 0.0).cast<double>()).matrix();
        }
        delta = delta * l.w;  // now dL/d(input of backbone layer k)
    }
    // Through the -s shift (identity derivative) and the ReLU.
    const Eigen::MatrixXd dzc =
        (delta.array() * (cache.zc.array() > 0.0).cast<double>()).matrix();
    gw = dzc.transpose() * cache.shifted;
    gb = dzc.colwise().sum();
}

}  // namespace

AugmentedModel augment(const MlpModel& model, int m) {
    if (m < 1) throw InvariantError("augment: m must be positive");
    if (model.input_width() != 2 * m) {
        throw InvariantError("augment: model input width is not 2m");
    }
    AugmentedModel aug;
    aug.m = m;
    aug.calib_w = Eigen::MatrixXd::Identity(2 * m, 2 * m);
    aug.calib_b = Eigen::VectorXd::Zero(2 * m);
    aug.backbone = model;
    aug.opt.step = 0;
    aug.opt.mw.push_back(Eigen::MatrixXd::Zero(2 * m, 2 * m));
    aug.opt.vw.push_back(Eigen::MatrixXd::Zero(2 * m, 2 * m));
    aug.opt.mb.push_back(Eigen::VectorXd::Zero(2 * m));
    aug.opt.vb.push_back(Eigen::VectorXd::Zero(2 * m));
    return aug;
}

Eigen::MatrixXd aug_forward(const AugmentedModel& aug, const Eigen::MatrixXd& x_raw) {
    CalibCache cache;
    calib_forward(aug, x_raw, 0.0, nullptr, &cache);
    return cache.bb_output;
}

TrainOptions train_options(const CalibrationConfig& cfg) {
    TrainOptions opt;
    opt.batch_size = cfg.batch_size;
    opt.learning_rate = cfg.learning_rate;
    opt.patience = cfg.n_es;
    opt.dropout_rate = cfg.dropout_rate;
    return opt;
}

TrainReport calibrate(AugmentedModel& aug, const Eigen::MatrixXd& x_train_raw,
                      const Eigen::MatrixXd& y_train, const Eigen::MatrixXd& x_val_raw,
                      const Eigen::MatrixXd& y_val, const TrainOptions& opt, Rng& rng) {
    const auto t_start = std::chrono::steady_clock::now();
    if (x_train_raw.rows() == 0) throw InvariantError("empty calibration set");
    if (x_val_raw.rows() == 0) throw InvariantError("empty calibration validation set");
    if (opt.batch_size < 1 || opt.learning_rate <= 0.0 || opt.patience < 1 ||
        opt.max_epochs < 1) {
        throw InvariantError("calibrate: bad training options");
    }

    const std::string backbone_before = model_param_bytes(aug.backbone);
    const Eigen::Index n_train = x_train_raw.rows();
    aug.train_loss_log.clear();
    aug.val_loss_log.clear();

    double best_val = armse(aug_forward(aug, x_val_raw), y_val);
    aug.train_loss_log.push_back(armse(aug_forward(aug, x_train_raw), y_train));
    aug.val_loss_log.push_back(best_val);
    Eigen::MatrixXd best_w = aug.calib_w;
    Eigen::VectorXd best_b = aug.calib_b;

    TrainReport report;
    report.best_val_loss = best_val;
    int stall = 0;

    CalibCache cache;
    std::vector<int> batch_rows;
    Eigen::MatrixXd gw;
    Eigen::VectorXd gb;
    for (int epoch = 1; epoch <= opt.max_epochs; ++epoch) {
        const std::vector<std::uint32_t> order =
            rng.permutation(static_cast<std::uint32_t>(n_train));
        double epoch_loss = 0.0;
        for (Eigen::Index start = 0; start < n_train; start += opt.batch_size) {
            const Eigen::Index count =
                std::min<Eigen::Index>(opt.batch_size, n_train - start);
            batch_rows.assign(order.begin() + start, order.begin() + start + count);
            const Eigen::MatrixXd xb = x_train_raw(batch_rows, Eigen::all);
            const Eigen::MatrixXd yb = y_train(batch_rows, Eigen::all);

            calib_forward(aug, xb, opt.dropout_rate, &rng, &cache);
            double batch_loss = 0.0;
            calib_backprop(aug, cache, yb, gw, gb, batch_loss);
            if (!std::isfinite(batch_loss)) {
                throw InvariantError("calibration diverged: non-finite loss");
            }
            epoch_loss += batch_loss * static_cast<double>(count);

            ++aug.opt.step;
            nadam_update(aug.calib_w, aug.opt.mw[0], aug.opt.vw[0], gw,
                         opt.learning_rate, aug.opt.step);
            nadam_update(aug.calib_b, aug.opt.mb[0], aug.opt.vb[0], gb,
                         opt.learning_rate, aug.opt.step);
            if (!aug.calib_w.allFinite() || !aug.calib_b.allFinite()) {
                throw InvariantError("calibration diverged: non-finite parameter");
            }
        }

        const double val_loss = armse(aug_forward(aug, x_val_raw), y_val);
        aug.train_loss_log.push_back(epoch_loss / static_cast<double>(n_train));
        aug.val_loss_log.push_back(val_loss);
        report.epochs_run = epoch;

        if (val_loss < best_val) {
            best_val = val_loss;
            best_w = aug.calib_w;
            best_b = aug.calib_b;
            stall = 0;
        } else {
            ++stall;
        }
        if (stall >= opt.patience) {
            report.stopped_early = true;
            break;
        }
    }

    aug.calib_w = std::move(best_w);
    aug.calib_b = std::move(best_b);
    report.best_val_loss = best_val;
    if (model_param_bytes(aug.backbone) != backbone_before) {
        throw InvariantError("calibration touched the frozen backbone");
    }
    report.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return report;
}

MlpModel fold_augmented(const AugmentedModel& aug) {
    if (aug.backbone.layers.empty()) throw InvariantError("fold_augmented: empty backbone");
    const Eigen::VectorXd s = angle_shift(aug.m).transpose();
    MlpModel out;
    Layer front;
    front.w = aug.calib_w;
    front.b = aug.calib_w * s + aug.calib_b;
    front.act = Activation::kRelu;
    out.layers.push_back(std::move(front));
    for (const Layer& l : aug.backbone.layers) out.layers.push_back(l);
    out.layers[1].b -= out.layers[1].w * s;
    for (const Layer& l : out.layers) {
        out.opt.mw.push_back(Eigen::MatrixXd::Zero(l.w.rows(), l.w.cols()));
        out.opt.vw.push_back(Eigen::MatrixXd::Zero(l.w.rows(), l.w.cols()));
        out.opt.mb.push_back(Eigen::VectorXd::Zero(l.b.size()));
        out.opt.vb.push_back(Eigen::VectorXd::Zero(l.b.size()));
    }
    out.train_loss_log = aug.train_loss_log;
    out.val_loss_log = aug.val_loss_log;
    return out;
}

SensorConfig perturbed_sensor(const SensorConfig& base) {
    SensorConfig p = base;
    p.camera_distance_mm += 1.0;
    p.rng_seed = splitmix64(base.rng_seed ^ 0x9e3779b97f4a7c15ull);
    return p;
}

GelMaterial perturbed_material(const GelMaterial& base) {
    GelMaterial p = base;
    p.youngs_modulus_kpa *= 1.3;
    return p;
}

std::vector<SweepRow> efficiency_sweep(const MlpModel& backbone, const Dataset& pool,
                                       const std::vector<int>& sizes,
                                       const TrainOptions& opt, double side_mm,
                                       Rng& rng) {
    if (sizes.empty()) throw InvariantError("efficiency sweep needs at least one size");
    int max_size = 0;
    for (int s : sizes) {
        if (s < 2) throw InvariantError("sweep sizes must be at least 2");
        max_size = std::max(max_size, s);
    }
    if (static_cast<std::size_t>(max_size) >= pool.samples.size()) {
        throw InvariantError("sweep sizes must be below the pool size");
    }

    Eigen::MatrixXd x_pool, y_pool;
    dataset_matrices(pool, x_pool, y_pool);

    const std::vector<std::uint32_t> perm =
        rng.permutation(static_cast<std::uint32_t>(pool.samples.size()));
    std::vector<int> test_rows(perm.begin() + max_size, perm.end());
    const Eigen::MatrixXd x_test = x_pool(test_rows, Eigen::all);
    const Eigen::MatrixXd y_test = y_pool(test_rows, Eigen::all);

    std::vector<SweepRow> rows;
    for (int size : sizes) {
        const int n_val = std::max(1, static_cast<int>(std::lround(0.1 * size)));
        std::vector<int> val_rows(perm.begin(), perm.begin() + n_val);
        std::vector<int> train_rows(perm.begin() + n_val, perm.begin() + size);
        if (train_rows.empty()) throw InvariantError("sweep size leaves no train rows");

        AugmentedModel aug = augment(backbone, pool.m);
        Rng row_rng = rng.fork(static_cast<std::uint64_t>(size));
        SweepRow row;
        row.train_size = size;
        row.report = calibrate(aug, x_pool(train_rows, Eigen::all),
                               y_pool(train_rows, Eigen::all), x_pool(val_rows, Eigen::all),
                               y_pool(val_rows, Eigen::all), opt, row_rng);
        row.eval = evaluate_predictions(aug_forward(aug, x_test), y_test, pool.n, side_mm);
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace tactsim
