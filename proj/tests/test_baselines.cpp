#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "localhealth/baselines.hpp"

using namespace localhealth;
using namespace localhealth::learn;

namespace {

FeatureRows lstsq_design(std::vector<double>& y) {
  FeatureRows rows;
  y.clear();
  for (int i = 0; i < 50; ++i) {
    const double x1 = std::sin(i), x2 = std::cos(3.0 * i);
    rows.push_back({x1, x2});
    y.push_back(0.3 + 1.7 * x1 - 0.4 * x2 + 0.01 * std::sin(7.0 * i));
  }
  return rows;
}

// Two Gaussian blobs separated along the first axis.
void blobs(FeatureRows& rows, std::vector<int>& labels, int n, int dim, double gap, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 0.3);
  for (int i = 0; i < n; ++i) {
    const int y = i % 2;
    std::vector<double> x(static_cast<std::size_t>(dim));
    for (auto& v : x) v = nd(rng);
    x[0] += y ? gap : -gap;
    rows.push_back(x);
    labels.push_back(y);
  }
}

TrainConfig classifier_config() {
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.batch_size = 32;
  cfg.peak_lr = 0.05;
  cfg.weight_decay = 0.01;
  return cfg;
}

}  // namespace

TEST_CASE("count LR recovers an exact line") {
  FeatureRows rows;
  std::vector<double> y;
  for (int i = 0; i < 10; ++i) {
    rows.push_back({0.1 * i});
    y.push_back(3.0 * 0.1 * i + 1.0);
  }
  const auto m = fit_count_lr(rows, y, {"x"});
  CHECK(m.weights[0] == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(m.intercept == doctest::Approx(1.0).epsilon(1e-9));
  CHECK_FALSE(m.rank_deficient);
  CHECK(m.predict(std::vector<double>{2.0}) == doctest::Approx(7.0).epsilon(1e-9));
  CHECK(m.feature_names == std::vector<std::string>{"x"});
}

TEST_CASE("count LR matches the lstsq fixture and Eigen") {
  std::vector<double> y;
  const auto rows = lstsq_design(y);
  const auto m = fit_count_lr(rows, y);
  // tests/oracles/lstsq_fixture.py (numpy.linalg.lstsq)
  CHECK(std::abs(m.weights[0] - 1.7007203078737012) < 1e-9);
  CHECK(std::abs(m.weights[1] - -0.39995148429617511) < 1e-9);
  CHECK(std::abs(m.intercept - 0.30043610098859769) < 1e-9);

  Eigen::MatrixXd X(50, 3);
  Eigen::VectorXd Y(50);
  for (int i = 0; i < 50; ++i) {
    X(i, 0) = rows[i][0];
    X(i, 1) = rows[i][1];
    X(i, 2) = 1.0;
    Y(i) = y[i];
  }
  const Eigen::VectorXd w = X.colPivHouseholderQr().solve(Y);
  CHECK(std::abs(m.weights[0] - w(0)) < 1e-9);
  CHECK(std::abs(m.weights[1] - w(1)) < 1e-9);
  CHECK(std::abs(m.intercept - w(2)) < 1e-9);
}

TEST_CASE("count LR flags collinear designs") {
  FeatureRows rows;
  std::vector<double> y;
  for (int i = 0; i < 20; ++i) {
    const double x = 0.05 * i;
    rows.push_back({x, 2.0 * x});
    y.push_back(0.5 * x + 0.1);
  }
  const auto m = fit_count_lr(rows, y);
  CHECK(m.rank_deficient);
  for (std::size_t i = 0; i < rows.size(); ++i) CHECK(m.predict(rows[i]) == doctest::Approx(y[i]).epsilon(1e-6));
  CHECK_THROWS_AS(fit_count_lr({}, std::vector<double>{}), ValidationError);
  CHECK_THROWS_AS(fit_count_lr(rows, std::vector<double>{1.0}), ValidationError);
}

TEST_CASE("logreg loss and gradient") {
  FeatureRows rows{{1.0, 0.0}, {0.0, 1.0}, {1.0, 1.0}};
  const std::vector<int> labels{1, 0, 1};
  const std::vector<double> zero{0.0, 0.0};
  const auto l0 = logreg_loss_and_grad(zero, 0.0, rows, labels);
  CHECK(l0.loss == doctest::Approx(std::log(2.0)).epsilon(1e-14));

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> w{u(rng), u(rng)};
    const double b = u(rng);
    const auto an = logreg_loss_and_grad(w, b, rows, labels);
    const double h = 1e-6;
    for (std::size_t i = 0; i < 2; ++i) {
      auto wp = w, wm = w;
      wp[i] += h;
      wm[i] -= h;
      const double fd = (logreg_loss_and_grad(wp, b, rows, labels).loss -
                         logreg_loss_and_grad(wm, b, rows, labels).loss) / (2 * h);
      CHECK(std::abs(fd - an.grad_w[i]) < 1e-7);
    }
    const double fdb = (logreg_loss_and_grad(w, b + h, rows, labels).loss -
                        logreg_loss_and_grad(w, b - h, rows, labels).loss) / (2 * h);
    CHECK(std::abs(fdb - an.grad_b) < 1e-7);
  }

  // Hinge: all margins >= 1 gives zero loss and zero subgradient.
  const std::vector<double> big{5.0, -2.0};
  const auto hz = hinge_loss_and_grad(big, 0.0, rows, std::vector<int>{1, 0, 1});
  CHECK(hz.loss == 0.0);
  CHECK(hz.grad_w == std::vector<double>{0.0, 0.0});
  const auto h0 = hinge_loss_and_grad(zero, 0.0, rows, labels);
  CHECK(h0.loss == 1.0);
}

TEST_CASE("classifiers separate a separable toy") {
  FeatureRows rows;
  std::vector<int> labels;
  blobs(rows, labels, 200, 4, 1.5, 3);
  for (auto kind : {ClassifierKind::LogReg, ClassifierKind::SVM}) {
    const auto clf = fit_classifier(kind, rows, labels, classifier_config(), 0.5);
    CHECK(clf.kind == kind);
    CHECK(clf.threshold == 0.5);
    int correct = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) correct += clf.predict(rows[i]) == labels[i] ? 1 : 0;
    CHECK(correct >= 196);
    CHECK(clf.weights[0] > 0.0);
    const double p = clf.probability(rows[1]);
    CHECK(p > 0.0);
    CHECK(p < 1.0);
  }
  const auto a = fit_classifier(ClassifierKind::LogReg, rows, labels, classifier_config());
  const auto b = fit_classifier(ClassifierKind::LogReg, rows, labels, classifier_config());
  CHECK(a.weights == b.weights);
  CHECK(a.threshold == kClassifierThreshold);
}

TEST_CASE("the default 0.15 threshold predicts positive above it") {
  LinearClassifier clf;
  clf.weights = {1.0};
  clf.bias = 0.0;
  // sigmoid(z) = 0.15 at z = log(0.15 / 0.85)
  const double z = std::log(0.15 / 0.85);
  CHECK(clf.predict(std::vector<double>{z + 1e-9}) == 1);
  CHECK(clf.predict(std::vector<double>{z - 1e-6}) == 0);
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(-800.0) >= 0.0);
  CHECK(sigmoid(800.0) == 1.0);
}

TEST_CASE("classifier errors") {
  FeatureRows rows{{1.0}, {2.0}, {3.0}};
  CHECK_THROWS_AS(fit_classifier(ClassifierKind::LogReg, rows, std::vector<int>{1, 1, 1}, classifier_config()),
                  ValidationError);
  CHECK_THROWS_AS(fit_classifier(ClassifierKind::SVM, rows, std::vector<int>{0, 1}, classifier_config()),
                  ValidationError);
}

TEST_CASE("Platt scaling") {
  // Margins whose true log-odds are 2 * m - 0.5.
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-3, 3), c(0, 1);
  std::vector<double> margins;
  std::vector<int> labels;
  for (int i = 0; i < 20000; ++i) {
    const double m = u(rng);
    margins.push_back(m);
    labels.push_back(c(rng) < sigmoid(2.0 * m - 0.5) ? 1 : 0);
  }
  const auto [a, b] = fit_platt(margins, labels);
  CHECK(a == doctest::Approx(2.0).epsilon(0.1));
  CHECK(b == doctest::Approx(-0.5).epsilon(0.2));
}
