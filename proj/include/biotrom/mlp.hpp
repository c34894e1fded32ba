#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "biotrom/fe_space.hpp"

namespace biotrom {

enum class Activation : std::uint32_t { Tanh = 0, Relu = 1 };
Activation parse_activation(const std::string& s);

/// Fully connected network: hidden layers use the activation, the output layer is affine.
struct MlpParams {
  std::vector<int> sizes;        // [in, hidden..., out]
  Activation activation = Activation::Tanh;
  std::uint64_t seed = 0;
  std::vector<Matrix> weights;   // weights[l] is sizes[l+1] x sizes[l]
  std::vector<Vector> biases;

  int num_layers() const { return static_cast<int>(weights.size()); }
  int input_size() const { return sizes.front(); }
  int output_size() const { return sizes.back(); }
  bool all_finite() const;
};

/// Xavier-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
MlpParams init_mlp(int n_hidden_layers, int n_neurons, int in_dim, int out_dim, std::uint64_t seed,
                   Activation act = Activation::Tanh);

Vector forward(const MlpParams& net, const Vector& x);
/// Columns are samples.
Matrix forward_batch(const MlpParams& net, const Matrix& x);

struct Gradients {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
};

/// Mean over all output elements of the squared error; columns are samples.
double mse_loss(const MlpParams& net, const Matrix& x, const Matrix& y);
double mse_loss_and_gradient(const MlpParams& net, const Matrix& x, const Matrix& y, Gradients& grad);

struct TrainOptions {
  int epochs = 2000;
  int batch_size = 32;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double validation_fraction = 0.2;
  std::uint64_t seed = 0;
};

struct TrainReport {
  std::vector<double> train_loss;       // mean mini-batch loss per epoch
  std::vector<double> validation_loss;  // per epoch
  int best_epoch = -1;
  double best_validation_loss = 0.0;
  int num_train = 0;
  int num_validation = 0;
};

struct TrainResult {
  MlpParams best;
  TrainReport report;
};

/// Rows of `inputs` / `targets` are samples (already normalized). Runs all
/// epochs and returns the checkpoint with the lowest validation loss.
TrainResult train_mlp(MlpParams net, const Matrix& inputs, const Matrix& targets, const TrainOptions& opts);

}  // namespace biotrom
