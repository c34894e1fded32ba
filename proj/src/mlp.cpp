#include "biotrom/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include <spdlog/spdlog.h>

namespace biotrom {

Activation parse_activation(const std::string& s) {
  if (s == "tanh") return Activation::Tanh;
  if (s == "relu") return Activation::Relu;
  throw std::invalid_argument("unknown activation '" + s + "' (expected tanh or relu)");
}

bool MlpParams::all_finite() const {
  for (const auto& w : weights)
    if (!w.allFinite()) return false;
  for (const auto& b : biases)
    if (!b.allFinite()) return false;
  return true;
}

MlpParams init_mlp(int n_hidden_layers, int n_neurons, int in_dim, int out_dim, std::uint64_t seed, Activation act) {
  if (n_hidden_layers < 0 || in_dim < 1 || out_dim < 1 || (n_hidden_layers > 0 && n_neurons < 1)) {
    throw std::invalid_argument("init_mlp: layer dimensions must be >= 1");
  }
  MlpParams net;
  net.activation = act;
  net.seed = seed;
  net.sizes.push_back(in_dim);
  for (int i = 0; i < n_hidden_layers; ++i) net.sizes.push_back(n_neurons);
  net.sizes.push_back(out_dim);
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l + 1 < net.sizes.size(); ++l) {
    const int fan_in = net.sizes[l], fan_out = net.sizes[l + 1];
    const double a = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-a, a);
    Matrix w(fan_out, fan_in);
    for (int j = 0; j < fan_in; ++j)
      for (int i = 0; i < fan_out; ++i) w(i, j) = dist(rng);
    net.weights.push_back(std::move(w));
    net.biases.push_back(Vector::Zero(fan_out));
  }
  return net;
}

namespace {

void activate(Activation act, Matrix& z) {
  if (act == Activation::Tanh) z = z.array().tanh().matrix();
  else z = z.cwiseMax(0.0);
}

/// Derivative expressed through the activated value a.
Matrix activation_derivative(Activation act, const Matrix& a) {
  if (act == Activation::Tanh) return (1.0 - a.array().square()).matrix();
  return (a.array() > 0.0).cast<double>().matrix();
}

}  // namespace

Matrix forward_batch(const MlpParams& net, const Matrix& x) {
  if (x.rows() != net.input_size()) throw std::invalid_argument("forward: input width mismatch");
  if (!x.allFinite()) throw std::invalid_argument("forward: non-finite input");
  Matrix a = x;
  for (int l = 0; l < net.num_layers(); ++l) {
    Matrix z = net.weights[l] * a;
    z.colwise() += net.biases[l];
    if (l + 1 < net.num_layers()) activate(net.activation, z);
    a = std::move(z);
  }
  return a;
}

Vector forward(const MlpParams& net, const Vector& x) { return forward_batch(net, x); }

double mse_loss(const MlpParams& net, const Matrix& x, const Matrix& y) {
  const Matrix r = forward_batch(net, x) - y;
  return r.squaredNorm() / static_cast<double>(r.size());
}

double mse_loss_and_gradient(const MlpParams& net, const Matrix& x, const Matrix& y, Gradients& grad) {
  const int nl = net.num_layers();
  std::vector<Matrix> acts;
  acts.reserve(nl + 1);
  acts.push_back(x);
  for (int l = 0; l < nl; ++l) {
    Matrix z = net.weights[l] * acts.back();
    z.colwise() += net.biases[l];
    if (l + 1 < nl) activate(net.activation, z);
    acts.push_back(std::move(z));
  }
  Matrix delta = acts.back() - y;
  const double count = static_cast<double>(delta.size());
  const double loss = delta.squaredNorm() / count;
  delta *= 2.0 / count;
  grad.weights.resize(nl);
  grad.biases.resize(nl);
  for (int l = nl - 1; l >= 0; --l) {
    grad.weights[l].noalias() = delta * acts[l].transpose();
    grad.biases[l] = delta.rowwise().sum();
    if (l > 0) {
      Matrix back = net.weights[l].transpose() * delta;
      delta = back.cwiseProduct(activation_derivative(net.activation, acts[l]));
    }
  }
  return loss;
}

TrainResult train_mlp(MlpParams net, const Matrix& inputs, const Matrix& targets, const TrainOptions& opts) {
  const int rows = static_cast<int>(inputs.rows());
  if (rows == 0) throw std::invalid_argument("train: empty table");
  if (targets.rows() != rows) throw std::invalid_argument("train: input/target row mismatch");
  if (inputs.cols() != net.input_size() || targets.cols() != net.output_size()) {
    throw std::invalid_argument("train: table width does not match the network");
  }
  if (!(opts.validation_fraction > 0.0 && opts.validation_fraction < 1.0)) {
    throw std::invalid_argument("train: validation fraction must lie in (0, 1)");
  }
  if (opts.epochs < 1 || opts.batch_size < 1 || !(opts.learning_rate > 0.0)) {
    throw std::invalid_argument("train: epochs, batch size and learning rate must be positive");
  }

  std::mt19937_64 rng(opts.seed);
  std::vector<int> order(rows);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  int n_val = static_cast<int>(std::lround(opts.validation_fraction * rows));
  n_val = std::clamp(n_val, 1, std::max(1, rows - 1));
  if (rows == 1) n_val = 0;
  std::vector<int> val_idx(order.begin(), order.begin() + n_val);
  std::vector<int> train_idx(order.begin() + n_val, order.end());

  auto gather = [](const Matrix& m, const std::vector<int>& idx) {
    Matrix out(m.cols(), idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) out.col(k) = m.row(idx[k]).transpose();
    return out;
  };
  const Matrix x_train = gather(inputs, train_idx), y_train = gather(targets, train_idx);
  const Matrix x_val = n_val > 0 ? gather(inputs, val_idx) : x_train;
  const Matrix y_val = n_val > 0 ? gather(targets, val_idx) : y_train;

  const int nl = net.num_layers();
  std::vector<Matrix> mw(nl), vw(nl);
  std::vector<Vector> mb(nl), vb(nl);
  for (int l = 0; l < nl; ++l) {
    mw[l] = Matrix::Zero(net.weights[l].rows(), net.weights[l].cols());
    vw[l] = mw[l];
    mb[l] = Vector::Zero(net.biases[l].size());
    vb[l] = mb[l];
  }

  TrainResult result;
  result.best = net;
  auto& rep = result.report;
  rep.num_train = static_cast<int>(train_idx.size());
  rep.num_validation = n_val;
  rep.best_validation_loss = std::numeric_limits<double>::infinity();
  rep.train_loss.reserve(opts.epochs);
  rep.validation_loss.reserve(opts.epochs);

  std::vector<int> perm(train_idx.size());
  std::iota(perm.begin(), perm.end(), 0);
  Gradients grad;
  long step = 0;
  const int nb = static_cast<int>(x_train.rows()), nout = static_cast<int>(y_train.rows());
  Matrix xb, yb;
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    std::shuffle(perm.begin(), perm.end(), rng);
    double epoch_loss = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < perm.size(); start += opts.batch_size) {
      const int bs = static_cast<int>(std::min<std::size_t>(opts.batch_size, perm.size() - start));
      xb.resize(nb, bs);
      yb.resize(nout, bs);
      for (int k = 0; k < bs; ++k) {
        xb.col(k) = x_train.col(perm[start + k]);
        yb.col(k) = y_train.col(perm[start + k]);
      }
      const double loss = mse_loss_and_gradient(net, xb, yb, grad);
      if (!std::isfinite(loss)) {
        throw std::runtime_error("training diverged (loss is not finite) at epoch " + std::to_string(epoch) +
                                 "; lower the learning rate");
      }
      ++step;
      const double c1 = 1.0 - std::pow(opts.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(opts.beta2, static_cast<double>(step));
      const double lr = opts.learning_rate;
      for (int l = 0; l < nl; ++l) {
        mw[l] = opts.beta1 * mw[l] + (1.0 - opts.beta1) * grad.weights[l];
        vw[l] = opts.beta2 * vw[l] + (1.0 - opts.beta2) * grad.weights[l].cwiseAbs2();
        net.weights[l].array() -= lr * (mw[l].array() / c1) / ((vw[l].array() / c2).sqrt() + opts.epsilon);
        mb[l] = opts.beta1 * mb[l] + (1.0 - opts.beta1) * grad.biases[l];
        vb[l] = opts.beta2 * vb[l] + (1.0 - opts.beta2) * grad.biases[l].cwiseAbs2();
        net.biases[l].array() -= lr * (mb[l].array() / c1) / ((vb[l].array() / c2).sqrt() + opts.epsilon);
      }
      epoch_loss += loss;
      ++batches;
    }
    if (!net.all_finite()) throw std::runtime_error("training produced non-finite weights at epoch " + std::to_string(epoch));
    const double val = mse_loss(net, x_val, y_val);
    if (!std::isfinite(val)) throw std::runtime_error("validation loss is not finite at epoch " + std::to_string(epoch));
    rep.train_loss.push_back(epoch_loss / batches);
    rep.validation_loss.push_back(val);
    if (val < rep.best_validation_loss) {
      rep.best_validation_loss = val;
      rep.best_epoch = epoch;
      result.best = net;
    }
  }
  spdlog::debug("training finished: best validation loss {:.3e} at epoch {}", rep.best_validation_loss, rep.best_epoch);
  return result;
}

}  // namespace biotrom
