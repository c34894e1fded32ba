#include <doctest.h>

#include <limits>

#include <cmath>
#include <random>

#include "biotrom/mlp.hpp"

using namespace biotrom;

namespace {

Matrix uniform_matrix(int r, int c, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix a(r, c);
  for (int j = 0; j < c; ++j)
    for (int i = 0; i < r; ++i) a(i, j) = u(g);
  return a;
}

// Central differences of the loss over every parameter; returns max relative discrepancy.
double gradient_check(MlpParams net, const Matrix& x, const Matrix& y) {
  Gradients g;
  mse_loss_and_gradient(net, x, y, g);
  const double h = 1e-6;
  double worst = 0.0;
  auto check = [&](double& param, double analytic) {
    const double keep = param;
    param = keep + h;
    const double lp = mse_loss(net, x, y);
    param = keep - h;
    const double lm = mse_loss(net, x, y);
    param = keep;
    const double fd = (lp - lm) / (2 * h);
    const double scale = std::max({std::abs(fd), std::abs(analytic), 1e-6});
    worst = std::max(worst, std::abs(fd - analytic) / scale);
  };
  for (int l = 0; l < net.num_layers(); ++l) {
    for (Eigen::Index i = 0; i < net.weights[l].size(); ++i) check(net.weights[l].data()[i], g.weights[l].data()[i]);
    for (Eigen::Index i = 0; i < net.biases[l].size(); ++i) check(net.biases[l][i], g.biases[l][i]);
  }
  return worst;
}

}  // namespace

TEST_CASE("initialization shapes and determinism") {
  const MlpParams a = init_mlp(3, 7, 3, 10, 1);
  CHECK(a.sizes == std::vector<int>{3, 7, 7, 7, 10});
  REQUIRE(a.num_layers() == 4);
  CHECK(a.weights[0].rows() == 7);
  CHECK(a.weights[0].cols() == 3);
  CHECK(a.weights[3].rows() == 10);
  const MlpParams b = init_mlp(3, 7, 3, 10, 1);
  for (int l = 0; l < 4; ++l) {
    CHECK(a.weights[l] == b.weights[l]);
    CHECK(a.biases[l].isZero());
    const double lim = std::sqrt(6.0 / (a.sizes[l] + a.sizes[l + 1]));
    CHECK(a.weights[l].cwiseAbs().maxCoeff() <= lim);
  }
  CHECK(init_mlp(3, 7, 3, 10, 2).weights[0] != a.weights[0]);
  CHECK_THROWS(init_mlp(1, 0, 3, 2, 1));
}

TEST_CASE("forward pass special cases") {
  MlpParams net = init_mlp(2, 4, 3, 2, 5);
  for (auto& w : net.weights) w.setZero();
  net.biases.back() << 0.3, -0.7;
  Vector x(3);
  x << 0.1, 0.5, 0.9;
  const Vector y = forward(net, x);
  CHECK(y[0] == doctest::Approx(0.3));
  CHECK(y[1] == doctest::Approx(-0.7));

  MlpParams lin = init_mlp(0, 1, 3, 3, 1);
  REQUIRE(lin.num_layers() == 1);
  lin.weights[0].setIdentity();
  CHECK((forward(lin, x) - x).norm() == 0.0);

  x[1] = std::nan("");
  CHECK_THROWS(forward(net, x));

  const MlpParams r = init_mlp(3, 7, 3, 2, 4);
  const Matrix xs = uniform_matrix(3, 5, 3);
  const Matrix ys = forward_batch(r, xs);
  for (int j = 0; j < 5; ++j) CHECK((ys.col(j) - forward(r, xs.col(j))).norm() < 1e-15);
}

TEST_CASE("backprop matches finite differences") {
  for (int n_hl : {1, 3, 5}) {
    for (Activation act : {Activation::Tanh, Activation::Relu}) {
      MlpParams net = init_mlp(n_hl, 7, 3, 2, 10 + n_hl, act);
      for (auto& b : net.biases) b = uniform_matrix(static_cast<int>(b.size()), 1, 77).col(0) * 0.2;
      const double d = gradient_check(net, uniform_matrix(3, 9, 2), uniform_matrix(2, 9, 3));
      INFO("n_hl = " << n_hl);
      CHECK(d < 1e-5);
    }
  }
}

// Convex only for the affine network; with tanh layers Adam's long second-moment
// memory slows the last decades (1e-7 to 1e-5 after 2000 epochs, seed dependent).
TEST_CASE("constant target is learned") {
  const Matrix x = uniform_matrix(200, 3, 1);
  const Matrix y = Matrix::Constant(200, 2, 0.37);
  TrainOptions o;
  o.epochs = 2000;
  o.seed = 3;
  const TrainResult affine = train_mlp(init_mlp(0, 7, 3, 2, 3), x, y, o);
  CHECK(affine.report.train_loss.back() < 1e-8);
  CHECK(std::abs(forward(affine.best, x.row(0).transpose())[0] - 0.37) < 1e-6);

  const TrainResult r = train_mlp(init_mlp(3, 7, 3, 2, 3), x, y, o);
  CHECK(r.report.train_loss.back() < 1e-5);
  CHECK(r.report.train_loss.back() < 1e-4 * r.report.train_loss.front());
  CHECK(std::abs(forward(r.best, x.row(0).transpose())[0] - 0.37) < 3e-3);
}

TEST_CASE("linear target is learned with one hidden layer") {
  const Matrix x = uniform_matrix(300, 2, 4);
  Matrix a(2, 2);
  a << 0.3, 0.5, -0.2, 0.6;
  const Matrix y = x * a.transpose();
  TrainOptions o;
  o.epochs = 2000;
  o.seed = 8;
  const TrainResult r = train_mlp(init_mlp(1, 7, 2, 2, 8), x, y, o);
  CHECK(r.report.best_validation_loss < 1e-5);
}

TEST_CASE("training report invariants and reproducibility") {
  const Matrix x = uniform_matrix(120, 3, 6);
  Matrix y(120, 2);
  for (int i = 0; i < 120; ++i) {
    y(i, 0) = std::sin(3 * x(i, 0)) * x(i, 1);
    y(i, 1) = x(i, 2) * x(i, 2);
  }
  TrainOptions o;
  o.epochs = 300;
  o.seed = 11;
  const TrainResult a = train_mlp(init_mlp(3, 7, 3, 2, 11), x, y, o);
  const TrainResult b = train_mlp(init_mlp(3, 7, 3, 2, 11), x, y, o);
  CHECK(a.report.num_train + a.report.num_validation == 120);
  CHECK(a.report.num_validation == 24);
  CHECK(a.report.train_loss.size() == 300);
  for (double v : a.report.validation_loss) CHECK(a.report.best_validation_loss <= v);
  CHECK(a.report.best_validation_loss <= a.report.validation_loss.back());
  CHECK(a.report.validation_loss[a.report.best_epoch] == a.report.best_validation_loss);
  for (int l = 0; l < a.best.num_layers(); ++l) CHECK(a.best.weights[l] == b.best.weights[l]);
  CHECK(a.best.all_finite());
  // 100-epoch moving average of training loss does not increase across windows
  auto window = [&](int start) {
    double s = 0.0;
    for (int e = start; e < start + 100; ++e) s += a.report.train_loss[e];
    return s / 100;
  };
  CHECK(window(100) <= window(0));
  CHECK(window(200) <= window(100));
}

TEST_CASE("training rejects bad input") {
  TrainOptions o;
  o.epochs = 5;
  CHECK_THROWS(train_mlp(init_mlp(1, 3, 2, 1, 1), Matrix(0, 2), Matrix(0, 1), o));
  CHECK_THROWS(train_mlp(init_mlp(1, 3, 2, 1, 1), Matrix::Zero(10, 3), Matrix::Zero(10, 1), o));
  o.validation_fraction = 1.0;
  CHECK_THROWS(train_mlp(init_mlp(1, 3, 2, 1, 1), Matrix::Zero(10, 2), Matrix::Zero(10, 1), o));
  o.validation_fraction = 0.2;
  Matrix x = uniform_matrix(50, 2, 1), y = uniform_matrix(50, 1, 2);
  y(7, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS(train_mlp(init_mlp(2, 5, 2, 1, 1), x, y, o));
}

TEST_CASE("activation parsing") {
  CHECK(parse_activation("tanh") == Activation::Tanh);
  CHECK(parse_activation("relu") == Activation::Relu);
  CHECK_THROWS(parse_activation("sigmoid"));
}
