#include "biotrom/pod.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

#include <Eigen/QR>
#include <Eigen/SVD>
#include <spdlog/spdlog.h>

namespace biotrom {

namespace {

Matrix stack(const std::vector<Matrix>& blocks) {
  if (blocks.empty()) throw std::invalid_argument("POD: empty snapshot set");
  const Eigen::Index rows = blocks.front().rows();
  Eigen::Index cols = 0;
  for (const auto& b : blocks) {
    if (b.rows() != rows) throw std::invalid_argument("POD: trajectories differ in N_h");
    if (!b.allFinite()) throw std::invalid_argument("POD: snapshot contains non-finite values");
    cols += b.cols();
  }
  Matrix s(rows, cols);
  Eigen::Index c = 0;
  for (const auto& b : blocks) {
    s.middleCols(c, b.cols()) = b;
    c += b.cols();
  }
  return s;
}

/// POD of an already weighted matrix; modes are returned in weighted coordinates.
ThinSvd weighted_pod(const Matrix& weighted, int n, int& n_used) {
  ThinSvd full = thin_svd(weighted, std::min<Eigen::Index>(n, std::min(weighted.rows(), weighted.cols())));
  const int rank = numerical_rank(full.s, weighted.rows(), weighted.cols());
  n_used = n;
  if (n > rank) {
    spdlog::warn("POD: requested N = {} exceeds numerical rank {}; truncating", n, rank);
    n_used = rank;
  }
  full.u.conservativeResize(Eigen::NoChange, n_used);
  return full;
}

}  // namespace

ThinSvd thin_svd(const Matrix& a, int keep) {
  const Eigen::Index m = a.rows(), n = a.cols();
  const Eigen::Index k = std::min(m, n);
  keep = static_cast<int>(std::clamp<Eigen::Index>(keep, 0, k));
  ThinSvd out;
  if (m >= n) {
    Eigen::HouseholderQR<Matrix> qr(a);
    const Matrix r = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
    Eigen::BDCSVD<Matrix> svd(r, Eigen::ComputeFullU);
    out.s = svd.singularValues();
    Matrix padded = Matrix::Zero(m, keep);
    padded.topRows(n) = svd.matrixU().leftCols(keep);
    out.u = qr.householderQ() * padded;
  } else {
    // Wide: A^T = Q R, so the left singular vectors of A are those of R^T.
    Eigen::HouseholderQR<Matrix> qr(a.transpose());
    const Matrix rt = qr.matrixQR().topRows(m).triangularView<Eigen::Upper>().transpose();
    Eigen::BDCSVD<Matrix> svd(rt, Eigen::ComputeFullU);
    out.s = svd.singularValues();
    out.u = svd.matrixU().leftCols(keep);
  }
  return out;
}

int numerical_rank(const Vector& s, Eigen::Index rows, Eigen::Index cols) {
  if (s.size() == 0 || !(s[0] > 0.0)) return 0;
  const double tol = static_cast<double>(std::max(rows, cols)) * std::numeric_limits<double>::epsilon() * s[0];
  int r = 0;
  while (r < s.size() && s[r] > tol) ++r;
  return r;
}

ReducedBasis standard_pod(const std::vector<Matrix>& trajectories, int n, const InnerProduct& ip, FieldId field) {
  if (n < 1) throw std::invalid_argument("POD: N must be >= 1");
  const Matrix s = stack(trajectories);
  if (s.rows() != ip.size()) throw std::invalid_argument("POD: inner product size mismatch");
  int used = 0;
  ThinSvd svd = weighted_pod(ip.weight(s), n, used);
  ReducedBasis b;
  b.field = field;
  b.inner_product = ip.kind();
  b.singular_values = svd.s;
  b.modes = ip.unweight(svd.u);
  b.n_int = 0;
  return b;
}

ReducedBasis nested_pod(const std::vector<Matrix>& trajectories, int n_int, int n, const InnerProduct& ip,
                        FieldId field) {
  if (trajectories.empty()) throw std::invalid_argument("POD: empty snapshot set");
  const Eigen::Index nt = trajectories.front().cols();
  if (n_int < 1 || n_int > nt) {
    throw std::invalid_argument("nested POD: N_int must lie in [1, N^t+1] = [1, " + std::to_string(nt) + "]");
  }
  if (n < 1 || static_cast<long>(n) > static_cast<long>(n_int) * static_cast<long>(trajectories.size())) {
    throw std::invalid_argument("nested POD: N must lie in [1, N_int * M]");
  }
  std::vector<Matrix> compressed;
  compressed.reserve(trajectories.size());
  for (const auto& t : trajectories) {
    if (t.rows() != ip.size()) throw std::invalid_argument("POD: inner product size mismatch");
    if (t.cols() != nt) throw std::invalid_argument("nested POD: trajectories differ in N^t");
    const Matrix w = ip.weight(t);
    const ThinSvd svd = thin_svd(w, n_int);
    compressed.push_back(svd.u * svd.s.head(svd.u.cols()).asDiagonal());
  }
  int used = 0;
  ThinSvd svd = weighted_pod(stack(compressed), n, used);
  ReducedBasis b;
  b.field = field;
  b.inner_product = ip.kind();
  b.singular_values = svd.s;
  b.modes = ip.unweight(svd.u);
  b.n_int = n_int;
  return b;
}

Vector normalized_eigenvalues(const ReducedBasis& basis) {
  const Vector& s = basis.singular_values;
  if (s.size() == 0 || !(s[0] > 0.0)) return Vector::Zero(s.size());
  return (s.array() / s[0]).square().matrix();
}

double projection_error_squared(const std::vector<Matrix>& trajectories, const Matrix& modes, const InnerProduct& ip) {
  double err = 0.0;
  for (const auto& s : trajectories) {
    const Matrix coeff = modes.transpose() * ip.apply(s);
    const Matrix r = s - modes * coeff;
    err += (r.transpose() * ip.apply(r)).trace();
  }
  return err;
}

}  // namespace biotrom
