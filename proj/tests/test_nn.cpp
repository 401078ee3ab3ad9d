#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "risar/nn.hpp"
#include "risar/rng.hpp"

using namespace risar;

namespace {

ConvNetSpec tiny_spec() {
    ConvNetSpec s;
    s.input_h = 8;
    s.input_w = 8;
    s.conv1_filters = 3;
    s.conv2_filters = 5;
    s.kernel_h = 3;
    s.kernel_w = 3;
    s.fc1_units = 16;
    s.fc2_units = 12;
    s.classes = 3;
    return s;
}

MatrixXd random_window(int h, int w, Rng& rng) {
    MatrixXd m(h, w);
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) m(i, j) = rng.normal();
    return m;
}

std::vector<LabeledWindow> constant_classes(int h, int w, int per_class) {
    std::vector<LabeledWindow> set;
    for (int c = 0; c < 2; ++c)
        for (int s = 0; s < per_class; ++s)
            set.push_back({MatrixXd::Constant(h, w, c == 0 ? 1.0 : -1.0), c});
    return set;
}

bool weights_equal(ConvNet& a, ConvNet& b) {
    const auto pa = a.parameters();
    const auto pb = b.parameters();
    for (std::size_t i = 0; i < pa.size(); ++i)
        if ((pa[i]->value - pb[i]->value).cwiseAbs().maxCoeff() != 0.0) return false;
    return true;
}

} // namespace

TEST(ConvNetSpec, ValidationRules) {
    ConvNetSpec s = tiny_spec();
    EXPECT_NO_THROW(s.validate());
    s.input_w = 10; // survives one pool but not two
    EXPECT_THROW(s.validate(), std::invalid_argument);
    s = tiny_spec();
    s.kernel_h = 4;
    EXPECT_THROW(s.validate(), std::invalid_argument);
    s = tiny_spec();
    s.classes = 0;
    EXPECT_THROW(s.validate(), std::invalid_argument);
}

TEST(ConvNet, ZeroWeightsGiveHalfScores) {
    ConvNet net(tiny_spec(), 1);
    for (ParamTensor* p : net.parameters()) p->value.setZero();
    Rng rng(2);
    const Eigen::VectorXd s = net.forward(random_window(8, 8, rng));
    ASSERT_EQ(s.size(), 3);
    for (int c = 0; c < 3; ++c) EXPECT_DOUBLE_EQ(s(c), 0.5);
}

TEST(ConvNet, ScoresInOpenUnitInterval) {
    ConvNet net(tiny_spec(), 3);
    Rng rng(4);
    for (int t = 0; t < 5; ++t) {
        const Eigen::VectorXd s = net.forward(random_window(8, 8, rng));
        for (int c = 0; c < s.size(); ++c) {
            EXPECT_GT(s(c), 0.0);
            EXPECT_LT(s(c), 1.0);
        }
    }
}

TEST(ConvNet, DeterministicInitAndForward) {
    ConvNet a(tiny_spec(), 7), b(tiny_spec(), 7), c(tiny_spec(), 8);
    EXPECT_TRUE(weights_equal(a, b));
    EXPECT_FALSE(weights_equal(a, c));
    Rng rng(5);
    const MatrixXd w = random_window(8, 8, rng);
    const Eigen::VectorXd s1 = a.forward(w);
    const Eigen::VectorXd s2 = a.forward(w);
    EXPECT_EQ((s1 - s2).cwiseAbs().maxCoeff(), 0.0);
}

TEST(ConvNet, ShapeMismatchThrows) {
    ConvNet net(tiny_spec(), 1);
    EXPECT_THROW(net.forward(MatrixXd::Zero(8, 12)), std::invalid_argument);
    MatrixXd bad = MatrixXd::Zero(8, 8);
    bad(0, 0) = std::nan("");
    EXPECT_THROW(net.forward(bad), std::invalid_argument);
}

TEST(ConvNet, GradientsMatchFiniteDifferences) {
    ConvNet net(tiny_spec(), 11);
    Rng rng(12);
    std::vector<MatrixXd> windows;
    MatrixXd targets = MatrixXd::Zero(3, 4);
    for (int i = 0; i < 4; ++i) {
        windows.push_back(random_window(8, 8, rng));
        targets(i % 3, i) = 1.0;
    }
    net.train_batch(windows, targets);
    const double h = 1e-5;
    for (ParamTensor* p : net.parameters()) {
        const int entries = static_cast<int>(p->value.size());
        for (int probe = 0; probe < std::min(entries, 5); ++probe) {
            const int idx = static_cast<int>(rng.integer(entries));
            double* v = p->value.data() + idx;
            const double saved = *v;
            *v = saved + h;
            const double lp = net.loss_batch(windows, targets);
            *v = saved - h;
            const double lm = net.loss_batch(windows, targets);
            *v = saved;
            const double numeric = (lp - lm) / (2.0 * h);
            const double analytic = p->grad.data()[idx];
            const double scale = std::max({std::abs(numeric), std::abs(analytic), 1e-8});
            EXPECT_LT(std::abs(numeric - analytic) / scale, 1e-4)
                << p->name << "[" << idx << "]";
        }
    }
}

TEST(ConvNet, TrainBatchRejectsBadTargets) {
    ConvNet net(tiny_spec(), 1);
    Rng rng(13);
    std::vector<MatrixXd> windows{random_window(8, 8, rng)};
    EXPECT_THROW(net.train_batch(windows, MatrixXd::Zero(3, 2)), std::invalid_argument);
    EXPECT_THROW(net.train_batch(windows, MatrixXd::Zero(4, 1)), std::invalid_argument);
}

TEST(Training, SeparableClassesReachPerfectAccuracy) {
    ConvNet net(tiny_spec(), 21);
    const auto train_set = constant_classes(8, 8, 20);
    const auto val_set = constant_classes(8, 8, 5);
    TrainingRun run;
    run.epochs = 40;
    run.batch_size = 10;
    run.seed = 21;
    const ConvNet best = train(net, train_set, val_set, run);
    EXPECT_DOUBLE_EQ(validation_accuracy(best, val_set), 1.0);
}

TEST(Training, LossDoesNotDivergeAtDefaultRate) {
    ConvNet net(tiny_spec(), 22);
    const auto train_set = constant_classes(8, 8, 20);
    const auto val_set = constant_classes(8, 8, 5);
    TrainingRun run;
    run.epochs = 6;
    run.batch_size = 10;
    run.seed = 22;
    train(net, train_set, val_set, run);
    ASSERT_GE(run.loss_history.size(), 6u);
    EXPECT_LE(run.loss_history[5], run.loss_history[0]);
}

TEST(Training, DeterministicPerSeed) {
    const auto train_set = constant_classes(8, 8, 10);
    const auto val_set = constant_classes(8, 8, 4);
    TrainingRun r1, r2;
    r1.epochs = r2.epochs = 5;
    r1.batch_size = r2.batch_size = 8;
    r1.seed = r2.seed = 31;
    ConvNet a = train(ConvNet(tiny_spec(), 31), train_set, val_set, r1);
    ConvNet b = train(ConvNet(tiny_spec(), 31), train_set, val_set, r2);
    EXPECT_TRUE(weights_equal(a, b));
    EXPECT_EQ(r1.loss_history, r2.loss_history);
}

TEST(Training, EarlyStoppingOnlyTruncates) {
    // a short-patience run's history must be a prefix of the long-patience run
    const auto train_set = constant_classes(8, 8, 10);
    const auto val_set = constant_classes(8, 8, 4);
    TrainingRun full, trimmed;
    full.epochs = trimmed.epochs = 12;
    full.batch_size = trimmed.batch_size = 8;
    full.seed = trimmed.seed = 41;
    full.patience = 1000;
    trimmed.patience = 2;
    train(ConvNet(tiny_spec(), 41), train_set, val_set, full);
    train(ConvNet(tiny_spec(), 41), train_set, val_set, trimmed);
    ASSERT_LE(trimmed.loss_history.size(), full.loss_history.size());
    for (std::size_t e = 0; e < trimmed.loss_history.size(); ++e) {
        EXPECT_EQ(trimmed.loss_history[e], full.loss_history[e]);
        EXPECT_EQ(trimmed.val_loss_history[e], full.val_loss_history[e]);
    }
    EXPECT_GE(full.best_epoch, 0);
    EXPECT_LT(full.best_epoch, static_cast<int>(full.loss_history.size()));
}

TEST(AugmentWindow, IsometricDeterministicAndShapeChecked) {
    Rng rng(7);
    const MatrixXd w = random_window(8, 8, rng);
    std::mt19937_64 e1(5), e2(5);
    const MatrixXd a = augment_window(w, e1);
    const MatrixXd b = augment_window(w, e2);
    EXPECT_EQ(a, b); // same engine state gives the same transform
    EXPECT_EQ(a.rows(), w.rows());
    EXPECT_EQ(a.cols(), w.cols());
    // row permutation, phase rotation, conjugation and column reversal are
    // all isometries of the stacked Re/Im representation
    EXPECT_NEAR(a.norm(), w.norm(), 1e-12);
    std::mt19937_64 e3(5);
    EXPECT_THROW(augment_window(MatrixXd::Zero(7, 8), e3), std::invalid_argument);
}

TEST(Training, AugmentedRunIsDeterministicPerSeed) {
    const auto train_set = constant_classes(8, 8, 10);
    const auto val_set = constant_classes(8, 8, 4);
    TrainingRun r1, r2;
    r1.epochs = r2.epochs = 4;
    r1.batch_size = r2.batch_size = 8;
    r1.seed = r2.seed = 51;
    r1.augment = r2.augment = true;
    ConvNet a = train(ConvNet(tiny_spec(), 51), train_set, val_set, r1);
    ConvNet b = train(ConvNet(tiny_spec(), 51), train_set, val_set, r2);
    EXPECT_TRUE(weights_equal(a, b));
    EXPECT_EQ(r1.loss_history, r2.loss_history);
}

TEST(Training, RejectsDegenerateDatasets) {
    ConvNet net(tiny_spec(), 1);
    TrainingRun run;
    const std::vector<LabeledWindow> empty;
    const std::vector<LabeledWindow> ok = constant_classes(8, 8, 2);
    EXPECT_THROW(train(net, empty, ok, run), std::invalid_argument);
    EXPECT_THROW(train(net, ok, empty, run), std::invalid_argument);
    std::vector<LabeledWindow> single(4, {MatrixXd::Zero(8, 8), 1});
    EXPECT_THROW(train(net, single, ok, run), std::invalid_argument);
}

TEST(ArgmaxClass, SelectionAndTies) {
    Eigen::VectorXd s(2);
    s << 0.1, 0.9;
    EXPECT_EQ(argmax_class(s), 1);
    s << 0.5, 0.5;
    EXPECT_EQ(argmax_class(s), 0); // ties break toward the lower index
    Eigen::VectorXd t(4);
    t << 0.2, 0.7, 0.7, 0.1;
    EXPECT_EQ(argmax_class(t), 1);
}

TEST(ArgmaxClass, InvariantUnderMonotoneTransform) {
    Rng rng(51);
    for (int t = 0; t < 20; ++t) {
        Eigen::VectorXd s(5);
        for (int i = 0; i < 5; ++i) s(i) = rng.uniform(0.0, 1.0);
        Eigen::VectorXd warped = s.unaryExpr([](double v) { return std::exp(3.0 * v); });
        EXPECT_EQ(argmax_class(s), argmax_class(warped));
    }
}

TEST(OneHot, TargetsLayout) {
    std::vector<LabeledWindow> batch{{MatrixXd::Zero(4, 4), 2}, {MatrixXd::Zero(4, 4), 0}};
    const MatrixXd t = one_hot_targets(batch, 3, {0, 1});
    EXPECT_DOUBLE_EQ(t(2, 0), 1.0);
    EXPECT_DOUBLE_EQ(t(0, 1), 1.0);
    EXPECT_DOUBLE_EQ(t.sum(), 2.0);
}
