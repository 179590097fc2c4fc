#include "tactsim/nn.hpp"

#include <chrono>
#include <cmath>

#include "tactsim/io_util.hpp"

namespace tactsim {

namespace {

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kEps = 1e-8;
constexpr std::string_view kMagic = "TSMD";
constexpr std::uint32_t kVersion = 1;

Eigen::MatrixXd apply_activation(const Eigen::MatrixXd& z, Activation act) {
    switch (act) {
        case Activation::kLogistic:
            return (1.0 / (1.0 + (-z.array()).exp())).matrix();
        case Activation::kRelu:
            return z.cwiseMax(0.0);
        case Activation::kIdentity:
            return z;
    }
    throw InvariantError("unknown activation tag");
}

// Derivative of the activation at z, expressed through z (h = act(z) is
// recomputable cheaply for logistic only via z; recompute keeps the cache
// small).
Eigen::ArrayXXd activation_derivative(const Eigen::MatrixXd& z, Activation act) {
    switch (act) {
        case Activation::kLogistic: {
            const Eigen::ArrayXXd s = 1.0 / (1.0 + (-z.array()).exp());
            return s * (1.0 - s);
        }
        case Activation::kRelu:
            return (z.array() > 0.0).cast<double>();
        case Activation::kIdentity:
            return Eigen::ArrayXXd::Ones(z.rows(), z.cols());
    }
    throw InvariantError("unknown activation tag");
}

template <typename P, typename G>
void nadam_step(P& param, P& m, P& v, const G& grad, double lr, std::int64_t t) {
    m = kBeta1 * m + (1.0 - kBeta1) * grad;
    v = (kBeta2 * v.array() + (1.0 - kBeta2) * grad.array().square()).matrix();
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t));
    param.array() -= lr *
                     (kBeta1 * m.array() + (1.0 - kBeta1) * grad.array()) / c1 /
                     ((v.array() / c2).sqrt() + kEps);
}

void check_finite(const MlpModel& model) {
    for (const Layer& l : model.layers) {
        if (!l.w.allFinite() || !l.b.allFinite()) {
            throw InvariantError("training diverged: non-finite parameter");
        }
    }
}

struct WeightSnapshot {
    std::vector<Eigen::MatrixXd> w;
    std::vector<Eigen::VectorXd> b;
};

WeightSnapshot snapshot_weights(const MlpModel& model) {
    WeightSnapshot s;
    for (const Layer& l : model.layers) {
        s.w.push_back(l.w);
        s.b.push_back(l.b);
    }
    return s;
}

void restore_weights(MlpModel& model, const WeightSnapshot& s) {
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        model.layers[i].w = s.w[i];
        model.layers[i].b = s.b[i];
    }
}

void write_matrix(ByteWriter& w, const Eigen::MatrixXd& mat) {
    const double* p = mat.data();
    for (Eigen::Index i = 0; i < mat.size(); ++i) w.put_f64(p[i]);
}

void read_matrix(ByteReader& r, Eigen::MatrixXd& mat) {
    double* p = mat.data();
    for (Eigen::Index i = 0; i < mat.size(); ++i) p[i] = r.get_f64();
}

void write_vector(ByteWriter& w, const Eigen::VectorXd& vec) {
    for (Eigen::Index i = 0; i < vec.size(); ++i) w.put_f64(vec[i]);
}

void read_vector(ByteReader& r, Eigen::VectorXd& vec) {
    for (Eigen::Index i = 0; i < vec.size(); ++i) vec[i] = r.get_f64();
}

}  // namespace

MlpModel make_mlp(int input_width, const std::vector<int>& hidden, int output_width,
                  Rng& rng) {
    if (input_width < 1 || output_width < 1) {
        throw InvariantError("make_mlp: bad layer widths");
    }
    std::vector<int> widths;
    widths.push_back(input_width);
    for (int h : hidden) {
        if (h < 1) throw InvariantError("make_mlp: bad hidden width");
        widths.push_back(h);
    }
    widths.push_back(output_width);

    MlpModel model;
    for (std::size_t k = 0; k + 1 < widths.size(); ++k) {
        Layer layer;
        const int fan_in = widths[k];
        const int fan_out = widths[k + 1];
        layer.w.resize(fan_out, fan_in);
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        for (Eigen::Index j = 0; j < layer.w.cols(); ++j) {
            for (Eigen::Index i = 0; i < layer.w.rows(); ++i) {
                layer.w(i, j) = rng.uniform(-limit, limit);
            }
        }
        layer.b = Eigen::VectorXd::Zero(fan_out);
        layer.act = (k + 2 < widths.size()) ? Activation::kLogistic : Activation::kIdentity;
        model.layers.push_back(std::move(layer));
    }

    model.opt.step = 0;
    for (const Layer& l : model.layers) {
        model.opt.mw.push_back(Eigen::MatrixXd::Zero(l.w.rows(), l.w.cols()));
        model.opt.vw.push_back(Eigen::MatrixXd::Zero(l.w.rows(), l.w.cols()));
        model.opt.mb.push_back(Eigen::VectorXd::Zero(l.b.size()));
        model.opt.vb.push_back(Eigen::VectorXd::Zero(l.b.size()));
    }
    return model;
}

double armse(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth) {
    if (pred.rows() != truth.rows() || pred.cols() != truth.cols()) {
        throw InvariantError("armse: shape mismatch");
    }
    if (pred.rows() == 0 || pred.cols() == 0) throw InvariantError("armse: empty batch");
    const double n_set = static_cast<double>(pred.rows());
    double sum = 0.0;
    for (Eigen::Index j = 0; j < pred.cols(); ++j) {
        sum += std::sqrt((pred.col(j) - truth.col(j)).squaredNorm() / n_set);
    }
    return sum / static_cast<double>(pred.cols());
}

Eigen::MatrixXd forward_batch(const MlpModel& model, const Eigen::MatrixXd& x) {
    if (model.layers.empty()) throw InvariantError("forward: empty model");
    if (x.cols() != model.input_width()) {
        throw InvariantError("forward: input width mismatch");
    }
    Eigen::MatrixXd a = x;
    for (const Layer& l : model.layers) {
        const Eigen::MatrixXd z =
            (a * l.w.transpose()).rowwise() + l.b.transpose();
        a = apply_activation(z, l.act);
    }
    return a;
}

void forward_train(const MlpModel& model, const Eigen::MatrixXd& x,
                   double dropout_rate, Rng& rng, ForwardCache& cache) {
    if (model.layers.empty()) throw InvariantError("forward: empty model");
    if (x.cols() != model.input_width()) {
        throw InvariantError("forward: input width mismatch");
    }
    if (dropout_rate < 0.0 || dropout_rate >= 1.0) {
        throw InvariantError("dropout rate must be in [0, 1)");
    }
    const std::size_t n_layers = model.layers.size();
    cache.inputs.assign(n_layers, {});
    cache.zs.assign(n_layers, {});
    cache.masks.assign(n_layers, {});

    Eigen::MatrixXd a = x;
    for (std::size_t k = 0; k < n_layers; ++k) {
        const Layer& l = model.layers[k];
        cache.inputs[k] = a;
        Eigen::MatrixXd z = (a * l.w.transpose()).rowwise() + l.b.transpose();
        a = apply_activation(z, l.act);
        cache.zs[k] = std::move(z);
        const bool hidden = k + 1 < n_layers;
        if (hidden && dropout_rate > 0.0) {
            Eigen::MatrixXd mask(a.rows(), a.cols());
            const double keep_scale = 1.0 / (1.0 - dropout_rate);
            for (Eigen::Index j = 0; j < mask.cols(); ++j) {
                for (Eigen::Index i = 0; i < mask.rows(); ++i) {
                    mask(i, j) = rng.uniform() >= dropout_rate ? keep_scale : 0.0;
                }
            }
            a = a.cwiseProduct(mask);
            cache.masks[k] = std::move(mask);
        }
    }
    cache.output = std::move(a);
}

ParamGradients backprop(const MlpModel& model, const ForwardCache& cache,
                        const Eigen::MatrixXd& truth, double& loss_out) {
    const Eigen::MatrixXd& pred = cache.output;
    if (pred.rows() != truth.rows() || pred.cols() != truth.cols()) {
        throw InvariantError("backprop: shape mismatch");
    }
    const Eigen::Index n_set = pred.rows();
    const Eigen::Index n_out = pred.cols();
    const Eigen::MatrixXd err = pred - truth;

    // d(aRMSE)/d(pred): per component e / (n * N * rmse_component), with the
    // subgradient at zero error taken as 0.
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

    ParamGradients g;
    g.gw.resize(model.layers.size());
    g.gb.resize(model.layers.size());
    for (int k = static_cast<int>(model.layers.size()) - 1; k >= 0; --k) {
        const Layer& l = model.layers[k];
        if (cache.masks[k].size() != 0) {
            delta = delta.cwiseProduct(cache.masks[k]);
        }
        const Eigen::MatrixXd dz =
            (delta.array() * activation_derivative(cache.zs[k], l.act)).matrix();
        g.gw[k] = dz.transpose() * cache.inputs[k];
        g.gb[k] = dz.colwise().sum();
        if (k > 0) delta = dz * l.w;
    }
    return g;
}

ParamGradients gradients(const MlpModel& model, const Eigen::MatrixXd& x,
                         const Eigen::MatrixXd& truth) {
    Rng unused(0);
    ForwardCache cache;
    forward_train(model, x, 0.0, unused, cache);
    double loss = 0.0;
    return backprop(model, cache, truth, loss);
}

void nadam_update(Eigen::MatrixXd& param, Eigen::MatrixXd& m, Eigen::MatrixXd& v,
                  const Eigen::MatrixXd& grad, double lr, std::int64_t step) {
    nadam_step(param, m, v, grad, lr, step);
}

void nadam_update(Eigen::VectorXd& param, Eigen::VectorXd& m, Eigen::VectorXd& v,
                  const Eigen::VectorXd& grad, double lr, std::int64_t step) {
    nadam_step(param, m, v, grad, lr, step);
}

TrainOptions train_options(const PipelineConfig& pipe) {
    TrainOptions opt;
    opt.batch_size = pipe.batch_size;
    opt.learning_rate = pipe.learning_rate;
    opt.patience = pipe.n_es;
    opt.dropout_rate = pipe.dropout_rate;
    return opt;
}

TrainReport train(MlpModel& model, const Eigen::MatrixXd& x_train,
                  const Eigen::MatrixXd& y_train, const Eigen::MatrixXd& x_val,
                  const Eigen::MatrixXd& y_val, const TrainOptions& opt, Rng& rng) {
    const auto t_start = std::chrono::steady_clock::now();
    if (x_train.rows() == 0 || x_val.rows() == 0) {
        throw InvariantError("train: empty training or validation set");
    }
    if (x_train.cols() != model.input_width() ||
        y_train.cols() != model.output_width() || x_train.rows() != y_train.rows() ||
        x_val.cols() != x_train.cols() || y_val.cols() != y_train.cols() ||
        x_val.rows() != y_val.rows()) {
        throw InvariantError("train: set shapes do not match the model");
    }
    if (opt.batch_size < 1 || opt.learning_rate <= 0.0 || opt.patience < 1 ||
        opt.max_epochs < 1) {
        throw InvariantError("train: bad training options");
    }

    const Eigen::Index n_train = x_train.rows();
    model.train_loss_log.clear();
    model.val_loss_log.clear();

    // Epoch 0: the untrained model participates in best-weight selection so
    // the restored model can never be worse than the starting point.
    double best_val = armse(forward_batch(model, x_val), y_val);
    model.train_loss_log.push_back(armse(forward_batch(model, x_train), y_train));
    model.val_loss_log.push_back(best_val);
    WeightSnapshot best = snapshot_weights(model);

    TrainReport report;
    report.best_val_loss = best_val;
    int stall = 0;

    ForwardCache cache;
    std::vector<int> batch_rows;
    for (int epoch = 1; epoch <= opt.max_epochs; ++epoch) {
        const std::vector<std::uint32_t> order =
            rng.permutation(static_cast<std::uint32_t>(n_train));
        double epoch_loss = 0.0;
        for (Eigen::Index start = 0; start < n_train; start += opt.batch_size) {
            const Eigen::Index count = std::min<Eigen::Index>(opt.batch_size, n_train - start);
            batch_rows.assign(order.begin() + start, order.begin() + start + count);
            const Eigen::MatrixXd xb = x_train(batch_rows, Eigen::all);
            const Eigen::MatrixXd yb = y_train(batch_rows, Eigen::all);

            forward_train(model, xb, opt.dropout_rate, rng, cache);
            double batch_loss = 0.0;
            const ParamGradients g = backprop(model, cache, yb, batch_loss);
            if (!std::isfinite(batch_loss)) {
                throw InvariantError("training diverged: non-finite loss");
            }
            epoch_loss += batch_loss * static_cast<double>(count);

            ++model.opt.step;
            for (std::size_t k = 0; k < model.layers.size(); ++k) {
                nadam_update(model.layers[k].w, model.opt.mw[k], model.opt.vw[k], g.gw[k],
                             opt.learning_rate, model.opt.step);
                nadam_update(model.layers[k].b, model.opt.mb[k], model.opt.vb[k], g.gb[k],
                             opt.learning_rate, model.opt.step);
            }
            check_finite(model);
        }

        const double val_loss = armse(forward_batch(model, x_val), y_val);
        model.train_loss_log.push_back(epoch_loss / static_cast<double>(n_train));
        model.val_loss_log.push_back(val_loss);
        report.epochs_run = epoch;

        if (val_loss < best_val) {
            best_val = val_loss;
            best = snapshot_weights(model);
            stall = 0;
        } else {
            ++stall;
        }
        if (stall >= opt.patience) {
            report.stopped_early = true;
            break;
        }
    }

    restore_weights(model, best);
    report.best_val_loss = best_val;
    report.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return report;
}

void dataset_matrices(const Dataset& ds, Eigen::MatrixXd& x, Eigen::MatrixXd& y) {
    const Eigen::Index count = static_cast<Eigen::Index>(ds.samples.size());
    x.resize(count, 2 * static_cast<Eigen::Index>(ds.m));
    y.resize(count, static_cast<Eigen::Index>(ds.n));
    for (Eigen::Index i = 0; i < count; ++i) {
        const Sample& s = ds.samples[static_cast<std::size_t>(i)];
        if (s.features.size() != static_cast<std::size_t>(x.cols()) ||
            s.label.size() != static_cast<std::size_t>(y.cols())) {
            throw InvariantError("dataset sample shape mismatch");
        }
        for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = s.features[j];
        for (Eigen::Index j = 0; j < y.cols(); ++j) y(i, j) = s.label[j];
    }
}

void condition_features(Eigen::MatrixXd& x, int m) {
    if (x.cols() != 2 * static_cast<Eigen::Index>(m)) {
        throw InvariantError("condition_features: width is not 2m");
    }
    // Magnitude columns are untouched (a zero shift is exact); angle columns
    // take the +pi/-pi round trip that the calibration layer also performs.
    for (Eigen::Index j = m; j < x.cols(); ++j) {
        x.col(j) = ((x.col(j).array() + kPi) - kPi).matrix();
    }
}

std::string model_param_bytes(const MlpModel& model) {
    ByteWriter w;
    for (const Layer& l : model.layers) {
        write_matrix(w, l.w);
        write_vector(w, l.b);
    }
    return w.bytes();
}

void save_model(const std::string& path, const MlpModel& model) {
    ByteWriter w;
    w.put_magic(kMagic);
    w.put_u32(kVersion);
    w.put_u32(static_cast<std::uint32_t>(model.layers.size()));
    for (const Layer& l : model.layers) {
        w.put_u8(static_cast<std::uint8_t>(l.act));
        w.put_u32(static_cast<std::uint32_t>(l.w.rows()));
        w.put_u32(static_cast<std::uint32_t>(l.w.cols()));
        write_matrix(w, l.w);
        write_vector(w, l.b);
    }
    w.put_i64(model.opt.step);
    for (std::size_t k = 0; k < model.layers.size(); ++k) {
        write_matrix(w, model.opt.mw[k]);
        write_matrix(w, model.opt.vw[k]);
        write_vector(w, model.opt.mb[k]);
        write_vector(w, model.opt.vb[k]);
    }
    w.put_u64(model.train_loss_log.size());
    for (double v : model.train_loss_log) w.put_f64(v);
    w.put_u64(model.val_loss_log.size());
    for (double v : model.val_loss_log) w.put_f64(v);
    w.put_u32(crc32(w.bytes().data(), w.size()));
    write_file(path, w.bytes());
}

MlpModel load_model(const std::string& path) {
    const std::string bytes = read_file(path);
    if (bytes.size() < 12) throw IoError(path + ": file too short");
    const std::uint32_t stored_crc =
        static_cast<std::uint32_t>(static_cast<std::uint8_t>(bytes[bytes.size() - 4])) |
        static_cast<std::uint32_t>(static_cast<std::uint8_t>(bytes[bytes.size() - 3])) << 8 |
        static_cast<std::uint32_t>(static_cast<std::uint8_t>(bytes[bytes.size() - 2])) << 16 |
        static_cast<std::uint32_t>(static_cast<std::uint8_t>(bytes[bytes.size() - 1])) << 24;
    if (stored_crc != crc32(bytes.data(), bytes.size() - 4)) {
        throw IoError(path + ": checksum mismatch");
    }
    ByteReader r(std::string_view(bytes.data(), bytes.size() - 4));
    if (r.get_magic(4) != kMagic) throw IoError(path + ": not a model file");
    const std::uint32_t version = r.get_u32();
    if (version != kVersion) {
        throw IoError(path + ": unsupported model version " + std::to_string(version));
    }

    MlpModel model;
    const std::uint32_t n_layers = r.get_u32();
    if (n_layers == 0 || n_layers > 64) throw IoError(path + ": corrupt layer count");
    for (std::uint32_t k = 0; k < n_layers; ++k) {
        Layer l;
        const std::uint8_t act = r.get_u8();
        if (act > 2) throw IoError(path + ": corrupt activation tag");
        l.act = static_cast<Activation>(act);
        const std::uint32_t rows = r.get_u32();
        const std::uint32_t cols = r.get_u32();
        if (rows == 0 || cols == 0 || rows > 100000 || cols > 100000) {
            throw IoError(path + ": corrupt layer shape");
        }
        if (!model.layers.empty() &&
            static_cast<Eigen::Index>(cols) != model.layers.back().w.rows()) {
            throw IoError(path + ": layer shapes do not chain");
        }
        l.w.resize(rows, cols);
        read_matrix(r, l.w);
        l.b.resize(rows);
        read_vector(r, l.b);
        model.layers.push_back(std::move(l));
    }
    model.opt.step = r.get_i64();
    for (const Layer& l : model.layers) {
        Eigen::MatrixXd mw(l.w.rows(), l.w.cols()), vw(l.w.rows(), l.w.cols());
        Eigen::VectorXd mb(l.b.size()), vb(l.b.size());
        read_matrix(r, mw);
        read_matrix(r, vw);
        read_vector(r, mb);
        read_vector(r, vb);
        model.opt.mw.push_back(std::move(mw));
        model.opt.vw.push_back(std::move(vw));
        model.opt.mb.push_back(std::move(mb));
        model.opt.vb.push_back(std::move(vb));
    }
    const std::uint64_t n_train_log = r.get_u64();
    if (n_train_log > bytes.size()) throw IoError(path + ": corrupt log length");
    model.train_loss_log.resize(n_train_log);
    for (double& v : model.train_loss_log) v = r.get_f64();
    const std::uint64_t n_val_log = r.get_u64();
    if (n_val_log > bytes.size()) throw IoError(path + ": corrupt log length");
    model.val_loss_log.resize(n_val_log);
    for (double& v : model.val_loss_log) v = r.get_f64();
    if (r.remaining() != 0) throw IoError(path + ": trailing bytes");
    return model;
}

}  // namespace tactsim
