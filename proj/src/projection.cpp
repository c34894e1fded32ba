#include "biotrom/projection.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <spdlog/spdlog.h>

namespace biotrom {

Matrix gram_matrix(const Matrix& modes, const InnerProduct& ip) {
  Matrix g = ip.gram(modes);
  g = 0.5 * (g + g.transpose());
  Eigen::LLT<Matrix> llt(g);
  if (llt.info() != Eigen::Success) throw std::runtime_error("Gram matrix is not SPD (degenerate basis)");
  return g;
}

Projector::Projector(Matrix modes, const InnerProduct& ip) : modes_(std::move(modes)), ip_(&ip) {
  if (modes_.rows() != ip.size()) throw std::invalid_argument("Projector: basis and inner product sizes differ");
  gram_ = gram_matrix(modes_, ip);
  llt_.compute(gram_);
}

Vector Projector::project(const Vector& field) const {
  if (field.size() != modes_.rows()) throw std::invalid_argument("Projector: field length mismatch");
  return llt_.solve(modes_.transpose() * ip_->apply(field));
}

Matrix Projector::project_columns(const Matrix& fields) const {
  if (fields.rows() != modes_.rows()) throw std::invalid_argument("Projector: field length mismatch");
  return llt_.solve(modes_.transpose() * ip_->apply(fields));
}

Normalizer Normalizer::fit(const Matrix& rows, const std::vector<char>& log_scale) {
  if (rows.rows() == 0) throw std::invalid_argument("Normalizer: empty data");
  Normalizer n;
  const Eigen::Index cols = rows.cols();
  n.log_scale = log_scale.empty() ? std::vector<char>(cols, 0) : log_scale;
  if (static_cast<Eigen::Index>(n.log_scale.size()) != cols) throw std::invalid_argument("Normalizer: flag count mismatch");
  n.lo.resize(cols);
  n.hi.resize(cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    Vector c = rows.col(j);
    if (n.log_scale[j]) {
      if ((c.array() <= 0.0).any()) throw std::invalid_argument("Normalizer: log column has non-positive values");
      c = c.array().log10().matrix();
    }
    n.lo[j] = c.minCoeff();
    n.hi[j] = c.maxCoeff();
    if (!(n.hi[j] > n.lo[j])) spdlog::warn("normalization: column {} is constant; it maps to 0.5", j);
  }
  return n;
}

Vector Normalizer::forward(const Vector& x, bool clamp, bool warn) const {
  if (x.size() != lo.size()) throw std::invalid_argument("Normalizer: input width mismatch");
  Vector y(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    if (!std::isfinite(x[j])) throw std::invalid_argument("Normalizer: non-finite input");
    if (is_constant(static_cast<int>(j))) {
      y[j] = 0.5;
      continue;
    }
    double v = x[j];
    if (log_scale[j]) {
      if (!(v > 0.0)) throw std::invalid_argument("Normalizer: log-scaled input must be positive");
      v = std::log10(v);
    }
    y[j] = (v - lo[j]) / (hi[j] - lo[j]);
    if (clamp && (y[j] < -1e-12 || y[j] > 1.0 + 1e-12)) {
      if (warn) spdlog::warn("input component {} = {} lies outside the training range; clamping", j, x[j]);
      y[j] = std::clamp(y[j], 0.0, 1.0);
    }
  }
  return y;
}

Vector Normalizer::inverse(const Vector& y) const {
  if (y.size() != lo.size()) throw std::invalid_argument("Normalizer: output width mismatch");
  Vector x(y.size());
  for (Eigen::Index j = 0; j < y.size(); ++j) {
    const double v = is_constant(static_cast<int>(j)) ? lo[j] : lo[j] + y[j] * (hi[j] - lo[j]);
    x[j] = log_scale[j] ? std::pow(10.0, v) : v;
  }
  return x;
}

Matrix Normalizer::forward_rows(const Matrix& rows) const {
  Matrix out(rows.rows(), rows.cols());
  for (Eigen::Index i = 0; i < rows.rows(); ++i) out.row(i) = forward(rows.row(i).transpose(), false).transpose();
  return out;
}

Matrix Normalizer::inverse_rows(const Matrix& rows) const {
  Matrix out(rows.rows(), rows.cols());
  for (Eigen::Index i = 0; i < rows.rows(); ++i) out.row(i) = inverse(rows.row(i).transpose()).transpose();
  return out;
}

CoefficientTable build_table(const std::vector<Matrix>& trajectories, const std::vector<std::vector<double>>& mus,
                             const std::vector<double>& times, const Projector& projector, FieldId field,
                             const std::vector<char>& param_log) {
  if (trajectories.empty() || trajectories.size() != mus.size()) {
    throw std::invalid_argument("build_table: trajectories and parameters differ in count");
  }
  const int nt1 = static_cast<int>(times.size());
  const int p = static_cast<int>(mus.front().size());
  const int n = static_cast<int>(projector.modes().cols());
  CoefficientTable t;
  t.field = field;
  t.n = n;
  t.m = static_cast<int>(trajectories.size());
  t.n_steps = nt1 - 1;
  t.p = p;
  t.inputs.resize(static_cast<Eigen::Index>(t.m) * nt1, 1 + p);
  t.outputs.resize(static_cast<Eigen::Index>(t.m) * nt1, n);
  for (int i = 0; i < t.m; ++i) {
    if (trajectories[i].cols() != nt1) throw std::invalid_argument("build_table: trajectory length differs from time grid");
    if (static_cast<int>(mus[i].size()) != p) throw std::invalid_argument("build_table: parameter width differs");
    const Matrix theta = projector.project_columns(trajectories[i]);
    for (int k = 0; k < nt1; ++k) {
      const Eigen::Index r = static_cast<Eigen::Index>(i) * nt1 + k;
      t.inputs(r, 0) = times[k];
      for (int j = 0; j < p; ++j) t.inputs(r, 1 + j) = mus[i][j];
      t.outputs.row(r) = theta.col(k).transpose();
    }
  }
  std::vector<char> in_log(1 + p, 0);
  for (int j = 0; j < p && j < static_cast<int>(param_log.size()); ++j) in_log[1 + j] = param_log[j];
  t.input_norm = Normalizer::fit(t.inputs, in_log);
  t.output_norm = Normalizer::fit(t.outputs);
  return t;
}

}  // namespace biotrom
