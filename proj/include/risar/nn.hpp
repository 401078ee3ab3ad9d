#ifndef RISAR_NN_HPP
#define RISAR_NN_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "risar/rng.hpp"

namespace risar {

using Eigen::MatrixXd;

inline MatrixXd sigmoid(const MatrixXd& x) {
    return x.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

/// Architecture knobs.  Defaults: two 3x9 same-padded conv layers (8 then 16
/// filters, tanh) each followed by 2x2 max pooling, then dense layers of
/// 512 and 256 sigmoid units and a sigmoid output per class.  The kernels
/// are wide along the time axis because neighboring Doppler classes differ
/// in their correlation over many lags, and short along the antenna axis
/// because antenna rows are independent draws of the same fading process.
struct ConvNetSpec {
    int input_h = 24;
    int input_w = 20;
    int conv1_filters = 8;
    int conv2_filters = 16;
    int kernel_h = 3;
    int kernel_w = 9;
    int fc1_units = 512;
    int fc2_units = 256;
    int classes = 10;

    void validate() const {
        if (input_h % 4 || input_w % 4)
            throw std::invalid_argument("ConvNetSpec: input dims must survive two 2x2 pools");
        if (kernel_h % 2 == 0 || kernel_w % 2 == 0)
            throw std::invalid_argument("ConvNetSpec: kernels must be odd");
        if (classes < 1) throw std::invalid_argument("ConvNetSpec: need >= 1 class");
    }
};

namespace detail {

/// Zero-padded im2col for same-size convolution: (cin*k*k) x (h*w).
/// Iterates position-major so writes walk each (column-major) output column
/// contiguously while reads stay in the small input matrix.
inline void im2col(const MatrixXd& x, int cin, int h, int w, int kh, int kw, MatrixXd& cols) {
    const int ph = kh / 2, pw = kw / 2;
    cols.resize(cin * kh * kw, h * w);
    for (int y = 0; y < h; ++y)
        for (int xo = 0; xo < w; ++xo) {
            double* dst = cols.col(y * w + xo).data();
            for (int c = 0; c < cin; ++c)
                for (int ki = 0; ki < kh; ++ki) {
                    const int sy = y + ki - ph;
                    if (sy < 0 || sy >= h) {
                        for (int kj = 0; kj < kw; ++kj) *dst++ = 0.0;
                        continue;
                    }
                    for (int kj = 0; kj < kw; ++kj) {
                        const int sx = xo + kj - pw;
                        *dst++ = (sx < 0 || sx >= w) ? 0.0 : x(c, sy * w + sx);
                    }
                }
        }
}

inline void col2im_add(const MatrixXd& dcols, int cin, int h, int w, int kh, int kw, MatrixXd& dx) {
    const int ph = kh / 2, pw = kw / 2;
    dx.setZero(cin, h * w);
    for (int y = 0; y < h; ++y)
        for (int xo = 0; xo < w; ++xo) {
            const double* src = dcols.col(y * w + xo).data();
            for (int c = 0; c < cin; ++c)
                for (int ki = 0; ki < kh; ++ki) {
                    const int sy = y + ki - ph;
                    if (sy < 0 || sy >= h) {
                        src += kw;
                        continue;
                    }
                    for (int kj = 0; kj < kw; ++kj) {
                        const int sx = xo + kj - pw;
                        if (sx >= 0 && sx < w) dx(c, sy * w + sx) += *src;
                        ++src;
                    }
                }
        }
}

inline MatrixXd max_pool2(const MatrixXd& x, int c, int h, int w) {
    MatrixXd out(c, (h / 2) * (w / 2));
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < h / 2; ++y)
            for (int xo = 0; xo < w / 2; ++xo) {
                double m = x(ch, (2 * y) * w + 2 * xo);
                m = std::max(m, x(ch, (2 * y) * w + 2 * xo + 1));
                m = std::max(m, x(ch, (2 * y + 1) * w + 2 * xo));
                m = std::max(m, x(ch, (2 * y + 1) * w + 2 * xo + 1));
                out(ch, y * (w / 2) + xo) = m;
            }
    return out;
}

/// Routes each pooled gradient back to the (first) input that attained the
/// max, so ties break deterministically.
inline MatrixXd max_unpool2(const MatrixXd& dy, const MatrixXd& x, const MatrixXd& pooled, int c,
                            int h, int w) {
    MatrixXd dx = MatrixXd::Zero(c, h * w);
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < h / 2; ++y)
            for (int xo = 0; xo < w / 2; ++xo) {
                const double m = pooled(ch, y * (w / 2) + xo);
                const int cand[4] = {(2 * y) * w + 2 * xo, (2 * y) * w + 2 * xo + 1,
                                     (2 * y + 1) * w + 2 * xo, (2 * y + 1) * w + 2 * xo + 1};
                for (int i = 0; i < 4; ++i)
                    if (x(ch, cand[i]) == m) {
                        dx(ch, cand[i]) += dy(ch, y * (w / 2) + xo);
                        break;
                    }
            }
    return dx;
}

} // namespace detail

/// Named parameter tensor with its gradient and Adam moments.
struct ParamTensor {
    std::string name;
    MatrixXd value, grad, m1, m2;

    void init(const std::string& n, int rows, int cols, double limit, std::mt19937_64& eng) {
        name = n;
        value.resize(rows, cols);
        std::uniform_real_distribution<double> u(-limit, limit);
        for (int j = 0; j < cols; ++j)
            for (int i = 0; i < rows; ++i) value(i, j) = u(eng);
        grad.setZero(rows, cols);
        m1.setZero(rows, cols);
        m2.setZero(rows, cols);
    }
};

/// The aging-pattern classifier network.  Forward is deterministic given the
/// weights; all state mutation happens in train_batch/adam_step.
class ConvNet {
public:
    ConvNetSpec spec;
    ParamTensor conv1_w, conv1_b, conv2_w, conv2_b;
    ParamTensor fc1_w, fc1_b, fc2_w, fc2_b, out_w, out_b;
    std::int64_t adam_step_count = 0;

    ConvNet() = default;

    ConvNet(const ConvNetSpec& s, std::uint64_t seed) : spec(s) {
        spec.validate();
        std::mt19937_64 eng(seed);
        const int k2 = spec.kernel_h * spec.kernel_w;
        auto glorot = [](int fan_in, int fan_out) {
            return std::sqrt(6.0 / (fan_in + fan_out));
        };
        conv1_w.init("conv1_w", spec.conv1_filters, k2, glorot(k2, spec.conv1_filters * k2), eng);
        conv1_b.init("conv1_b", spec.conv1_filters, 1, 0.0, eng);
        conv2_w.init("conv2_w", spec.conv2_filters, spec.conv1_filters * k2,
                     glorot(spec.conv1_filters * k2, spec.conv2_filters * k2), eng);
        conv2_b.init("conv2_b", spec.conv2_filters, 1, 0.0, eng);
        const int flat = flat_size();
        fc1_w.init("fc1_w", spec.fc1_units, flat, glorot(flat, spec.fc1_units), eng);
        fc1_b.init("fc1_b", spec.fc1_units, 1, 0.0, eng);
        fc2_w.init("fc2_w", spec.fc2_units, spec.fc1_units, glorot(spec.fc1_units, spec.fc2_units), eng);
        fc2_b.init("fc2_b", spec.fc2_units, 1, 0.0, eng);
        out_w.init("out_w", spec.classes, spec.fc2_units, glorot(spec.fc2_units, spec.classes), eng);
        out_b.init("out_b", spec.classes, 1, 0.0, eng);
    }

    int flat_size() const {
        return spec.conv2_filters * (spec.input_h / 4) * (spec.input_w / 4);
    }

    std::vector<ParamTensor*> parameters() {
        return {&conv1_w, &conv1_b, &conv2_w, &conv2_b, &fc1_w,
                &fc1_b,   &fc2_w,   &fc2_b,   &out_w,   &out_b};
    }

    /// Scores in (0,1)^C for one 2N x V window.
    Eigen::VectorXd forward(const MatrixXd& window) const {
        check_shape(window);
        MatrixXd flat(flat_size(), 1);
        conv_forward(window, flat.col(0), nullptr);
        const MatrixXd a1 = sigmoid((fc1_w.value * flat).colwise() + fc1_b.value.col(0));
        const MatrixXd a2 = sigmoid((fc2_w.value * a1).colwise() + fc2_b.value.col(0));
        const MatrixXd s = sigmoid((out_w.value * a2).colwise() + out_b.value.col(0));
        return s.col(0);
    }

    /// Mean-squared-error loss of a batch against one-hot targets (C x B).
    double loss_batch(const std::vector<MatrixXd>& windows, const MatrixXd& targets) const {
        const int b = static_cast<int>(windows.size());
        MatrixXd flat(flat_size(), b);
        for (int i = 0; i < b; ++i) {
            check_shape(windows[i]);
            conv_forward(windows[i], flat.col(i), nullptr);
        }
        const MatrixXd a1 = sigmoid((fc1_w.value * flat).colwise() + fc1_b.value.col(0));
        const MatrixXd a2 = sigmoid((fc2_w.value * a1).colwise() + fc2_b.value.col(0));
        const MatrixXd s = sigmoid((out_w.value * a2).colwise() + out_b.value.col(0));
        return (s - targets).squaredNorm() / (spec.classes * b);
    }

    /// Forward + backward over one mini-batch; gradients are written into the
    /// parameter tensors.  Returns the batch loss.
    double train_batch(const std::vector<MatrixXd>& windows, const MatrixXd& targets) {
        const int b = static_cast<int>(windows.size());
        if (targets.cols() != b || targets.rows() != spec.classes)
            throw std::invalid_argument("train_batch: target shape mismatch");
        ConvCache cache(b);
        MatrixXd flat(flat_size(), b);
        for (int i = 0; i < b; ++i) {
            check_shape(windows[i]);
            conv_forward(windows[i], flat.col(i), &cache.per_sample[i]);
        }
        const MatrixXd a1 = sigmoid((fc1_w.value * flat).colwise() + fc1_b.value.col(0));
        const MatrixXd a2 = sigmoid((fc2_w.value * a1).colwise() + fc2_b.value.col(0));
        const MatrixXd s = sigmoid((out_w.value * a2).colwise() + out_b.value.col(0));
        const double loss = (s - targets).squaredNorm() / (spec.classes * b);

        const MatrixXd ds = 2.0 * (s - targets) / (spec.classes * b);
        const MatrixXd dz3 = ds.cwiseProduct(s.cwiseProduct(MatrixXd::Ones(s.rows(), b) - s));
        out_w.grad = dz3 * a2.transpose();
        out_b.grad = dz3.rowwise().sum();
        const MatrixXd da2 = out_w.value.transpose() * dz3;
        const MatrixXd dz2 = da2.cwiseProduct(a2.cwiseProduct(MatrixXd::Ones(a2.rows(), b) - a2));
        fc2_w.grad = dz2 * a1.transpose();
        fc2_b.grad = dz2.rowwise().sum();
        const MatrixXd da1 = fc2_w.value.transpose() * dz2;
        const MatrixXd dz1 = da1.cwiseProduct(a1.cwiseProduct(MatrixXd::Ones(a1.rows(), b) - a1));
        fc1_w.grad = dz1 * flat.transpose();
        fc1_b.grad = dz1.rowwise().sum();
        const MatrixXd dflat = fc1_w.value.transpose() * dz1;

        conv1_w.grad.setZero();
        conv1_b.grad.setZero();
        conv2_w.grad.setZero();
        conv2_b.grad.setZero();
        for (int i = 0; i < b; ++i) conv_backward(dflat.col(i), cache.per_sample[i]);
        return loss;
    }

    void adam_step(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8) {
        ++adam_step_count;
        const double c1 = 1.0 - std::pow(beta1, static_cast<double>(adam_step_count));
        const double c2 = 1.0 - std::pow(beta2, static_cast<double>(adam_step_count));
        for (ParamTensor* p : parameters()) {
            p->m1 = beta1 * p->m1 + (1.0 - beta1) * p->grad;
            p->m2 = beta2 * p->m2 + (1.0 - beta2) * p->grad.cwiseProduct(p->grad);
            p->value -= (lr * (p->m1 / c1).array() / ((p->m2 / c2).array().sqrt() + eps)).matrix();
        }
    }

private:
    struct SampleCache {
        MatrixXd cols1, out1, pool1, cols2, out2, pool2;
    };
    struct ConvCache {
        explicit ConvCache(int b) : per_sample(b) {}
        std::vector<SampleCache> per_sample;
    };

    void check_shape(const MatrixXd& window) const {
        if (window.rows() != spec.input_h || window.cols() != spec.input_w)
            throw std::invalid_argument("ConvNet: window shape mismatch");
        if (!window.allFinite())
            throw std::invalid_argument("ConvNet: non-finite window entries");
    }

    void conv_forward(const MatrixXd& window, Eigen::Ref<Eigen::VectorXd> flat,
                      SampleCache* cache) const {
        const int h = spec.input_h, w = spec.input_w, kh = spec.kernel_h, kw = spec.kernel_w;
        MatrixXd x0(1, h * w);
        for (int y = 0; y < h; ++y)
            for (int xo = 0; xo < w; ++xo) x0(0, y * w + xo) = window(y, xo);
        MatrixXd cols1;
        detail::im2col(x0, 1, h, w, kh, kw, cols1);
        MatrixXd out1 =
            ((conv1_w.value * cols1).colwise() + conv1_b.value.col(0)).array().tanh().matrix();
        MatrixXd pool1 = detail::max_pool2(out1, spec.conv1_filters, h, w);
        const int h2 = h / 2, w2 = w / 2;
        MatrixXd cols2;
        detail::im2col(pool1, spec.conv1_filters, h2, w2, kh, kw, cols2);
        MatrixXd out2 =
            ((conv2_w.value * cols2).colwise() + conv2_b.value.col(0)).array().tanh().matrix();
        MatrixXd pool2 = detail::max_pool2(out2, spec.conv2_filters, h2, w2);
        for (int c = 0, idx = 0; c < spec.conv2_filters; ++c)
            for (int p = 0; p < pool2.cols(); ++p) flat(idx++) = pool2(c, p);
        if (cache) {
            cache->cols1 = std::move(cols1);
            cache->out1 = std::move(out1);
            cache->pool1 = std::move(pool1);
            cache->cols2 = std::move(cols2);
            cache->out2 = std::move(out2);
            cache->pool2 = std::move(pool2);
        }
    }

    void conv_backward(const Eigen::VectorXd& dflat, const SampleCache& cache) {
        const int h = spec.input_h, w = spec.input_w, kh = spec.kernel_h, kw = spec.kernel_w;
        const int h2 = h / 2, w2 = w / 2;
        MatrixXd dpool2(spec.conv2_filters, (h2 / 2) * (w2 / 2));
        for (int c = 0, idx = 0; c < spec.conv2_filters; ++c)
            for (int p = 0; p < dpool2.cols(); ++p) dpool2(c, p) = dflat(idx++);
        const MatrixXd dout2 =
            detail::max_unpool2(dpool2, cache.out2, cache.pool2, spec.conv2_filters, h2, w2);
        const MatrixXd dpre2 = dout2.cwiseProduct(
            (MatrixXd::Ones(cache.out2.rows(), cache.out2.cols()) -
             cache.out2.cwiseProduct(cache.out2)));
        conv2_w.grad += dpre2 * cache.cols2.transpose();
        conv2_b.grad += dpre2.rowwise().sum();
        const MatrixXd dcols2 = conv2_w.value.transpose() * dpre2;
        MatrixXd dpool1;
        detail::col2im_add(dcols2, spec.conv1_filters, h2, w2, kh, kw, dpool1);
        const MatrixXd dout1 =
            detail::max_unpool2(dpool1, cache.out1, cache.pool1, spec.conv1_filters, h, w);
        const MatrixXd dpre1 = dout1.cwiseProduct(
            (MatrixXd::Ones(cache.out1.rows(), cache.out1.cols()) -
             cache.out1.cwiseProduct(cache.out1)));
        conv1_w.grad += dpre1 * cache.cols1.transpose();
        conv1_b.grad += dpre1.rowwise().sum();
    }
};

/// Training hyperparameters plus the recorded run history.
struct TrainingRun {
    int epochs = 300;
    int batch_size = 50;
    double learning_rate = 1e-3;
    int patience = 40;
    std::uint64_t seed = 1;
    /// Re-randomize each training window every epoch with transforms that
    /// leave the temporal correlation profile (and hence the label) intact.
    bool augment = false;

    std::vector<double> loss_history;
    std::vector<double> val_loss_history;
    std::vector<double> val_acc_history;
    int best_epoch = -1;
};

struct LabeledWindow {
    MatrixXd window;
    int label = 0;
};

inline MatrixXd one_hot_targets(const std::vector<LabeledWindow>& batch, int classes,
                                const std::vector<int>& idx) {
    MatrixXd t = MatrixXd::Zero(classes, static_cast<int>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) t(batch[idx[i]].label, i) = 1.0;
    return t;
}

inline int argmax_class(const Eigen::VectorXd& scores) {
    int best = 0;
    for (int c = 1; c < scores.size(); ++c)
        if (scores(c) > scores(best)) best = c; // ties break toward lower index
    return best;
}

inline double validation_loss(const ConvNet& net, const std::vector<LabeledWindow>& set) {
    double acc = 0.0;
    for (const auto& s : set) {
        Eigen::VectorXd y = net.forward(s.window);
        Eigen::VectorXd t = Eigen::VectorXd::Zero(net.spec.classes);
        t(s.label) = 1.0;
        acc += (y - t).squaredNorm() / net.spec.classes;
    }
    return acc / static_cast<double>(set.size());
}

inline double validation_accuracy(const ConvNet& net, const std::vector<LabeledWindow>& set) {
    int hits = 0;
    for (const auto& s : set)
        if (argmax_class(net.forward(s.window)) == s.label) ++hits;
    return static_cast<double>(hits) / static_cast<double>(set.size());
}

/// Draws a random label-preserving variant of a stacked real/imaginary CSI
/// window (top half Re, bottom half Im).  Antenna rows are exchangeable, the
/// channel distribution is invariant to a global phase rotation, conjugation,
/// and time reversal, so permuting rows, rotating the phase, conjugating, and
/// reversing the columns all leave the aging class unchanged while producing
/// a distinct input to the network.
inline MatrixXd augment_window(const MatrixXd& w, std::mt19937_64& eng) {
    if (w.rows() % 2 != 0)
        throw std::invalid_argument("augment_window: needs stacked Re/Im rows");
    const int n = static_cast<int>(w.rows()) / 2;
    const int v = static_cast<int>(w.cols());
    Eigen::MatrixXcd x(n, v);
    x.real() = w.topRows(n);
    x.imag() = w.bottomRows(n);
    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), eng);
    Eigen::MatrixXcd y(n, v);
    for (int i = 0; i < n; ++i) y.row(i) = x.row(perm[i]);
    std::uniform_real_distribution<double> u(0.0, 6.283185307179586);
    y *= std::polar(1.0, u(eng));
    if (eng() & 1) y = y.conjugate();
    if (eng() & 1) y = y.rowwise().reverse();
    MatrixXd out(2 * n, v);
    out.topRows(n) = y.real();
    out.bottomRows(n) = y.imag();
    return out;
}

/// Minimizes MSE against one-hot labels with Adam; stops early when the
/// validation loss has not improved for `patience` epochs and restores the
/// best-validation weights.
inline ConvNet train(ConvNet net, const std::vector<LabeledWindow>& train_set,
                     const std::vector<LabeledWindow>& val_set, TrainingRun& run) {
    if (train_set.empty() || val_set.empty())
        throw std::invalid_argument("train: empty dataset");
    {
        const int first = train_set.front().label;
        bool multi = false;
        for (const auto& s : train_set) multi = multi || s.label != first;
        if (!multi) throw std::invalid_argument("train: single-class dataset");
    }
    std::mt19937_64 shuffle_eng(run.seed);
    std::vector<int> order(train_set.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

    ConvNet best = net;
    double best_val = std::numeric_limits<double>::infinity();
    int since_best = 0;
    run.loss_history.clear();
    run.val_loss_history.clear();
    run.val_acc_history.clear();

    for (int epoch = 0; epoch < run.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_eng);
        double epoch_loss = 0.0;
        int batches = 0;
        for (std::size_t start = 0; start < order.size(); start += run.batch_size) {
            const std::size_t end = std::min(order.size(), start + run.batch_size);
            std::vector<MatrixXd> windows;
            windows.reserve(end - start);
            std::vector<int> idx(order.begin() + start, order.begin() + end);
            for (int i : idx)
                windows.push_back(run.augment ? augment_window(train_set[i].window, shuffle_eng)
                                              : train_set[i].window);
            const MatrixXd targets = one_hot_targets(train_set, net.spec.classes, idx);
            epoch_loss += net.train_batch(windows, targets);
            net.adam_step(run.learning_rate);
            ++batches;
        }
        run.loss_history.push_back(epoch_loss / batches);
        const double vl = validation_loss(net, val_set);
        run.val_loss_history.push_back(vl);
        run.val_acc_history.push_back(validation_accuracy(net, val_set));
        if (vl < best_val) {
            best_val = vl;
            best = net;
            run.best_epoch = epoch;
            since_best = 0;
        } else if (++since_best >= run.patience) {
            break;
        }
    }
    return best;
}

} // namespace risar

#endif // RISAR_NN_HPP
