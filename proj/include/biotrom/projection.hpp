#pragma once

#include <vector>

#include <Eigen/Cholesky>

#include "biotrom/pod.hpp"

namespace biotrom {

/// G_jk = (w_j, w_k). Throws when G is not SPD.
Matrix gram_matrix(const Matrix& modes, const InnerProduct& ip);

/// L2 projection onto span(W): solves G theta = [(f, w_k)]_k.
class Projector {
 public:
  Projector(Matrix modes, const InnerProduct& ip);
  Vector project(const Vector& field) const;
  Matrix project_columns(const Matrix& fields) const;
  Vector reconstruct(const Vector& theta) const { return modes_ * theta; }
  const Matrix& modes() const { return modes_; }
  const Matrix& gram() const { return gram_; }

 private:
  Matrix modes_;
  const InnerProduct* ip_;
  Matrix gram_;
  Eigen::LLT<Matrix> llt_;
};

/// Affine map of each column onto [0, 1] from training min/max; log columns are
/// mapped in log10 space. A constant column maps to 0.5.
struct Normalizer {
  Vector lo;
  Vector hi;
  std::vector<char> log_scale;

  static Normalizer fit(const Matrix& rows, const std::vector<char>& log_scale = {});
  int size() const { return static_cast<int>(lo.size()); }
  bool is_constant(int j) const { return !(hi[j] > lo[j]); }
  /// Out-of-range entries are clamped to [0, 1] (with a warning if `warn`).
  Vector forward(const Vector& x, bool clamp = true, bool warn = true) const;
  Vector inverse(const Vector& y) const;
  Matrix forward_rows(const Matrix& rows) const;
  Matrix inverse_rows(const Matrix& rows) const;
};

/// Rows ordered i-major (parameter), n-minor (time): (t, mu..., theta...).
struct CoefficientTable {
  FieldId field = FieldId::Displacement;
  int n = 0;          // basis size
  int m = 0;          // number of parameters in the training set
  int n_steps = 0;    // N^t
  int p = 0;          // parameter dimension
  Matrix inputs;      // rows x (1 + p), raw
  Matrix outputs;     // rows x n, raw coefficients
  Normalizer input_norm;
  Normalizer output_norm;

  int rows() const { return static_cast<int>(inputs.rows()); }
};

/// `param_log` flags which parameter components are log-normalized.
CoefficientTable build_table(const std::vector<Matrix>& trajectories, const std::vector<std::vector<double>>& mus,
                             const std::vector<double>& times, const Projector& projector, FieldId field,
                             const std::vector<char>& param_log);

}  // namespace biotrom
