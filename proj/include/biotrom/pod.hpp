#pragma once

#include <vector>

#include "biotrom/inner_product.hpp"

namespace biotrom {

struct ReducedBasis {
  FieldId field = FieldId::Displacement;
  InnerProductKind inner_product = InnerProductKind::Mass;
  Matrix modes;              // N_h x N, orthonormal in the inner product
  Vector singular_values;    // all computed values, nonincreasing
  int n_int = 0;             // 0 means standard POD (N_int = infinity)

  int size() const { return static_cast<int>(modes.cols()); }
  int num_dofs() const { return static_cast<int>(modes.rows()); }
};

/// Left singular vectors and values of a tall matrix via Householder QR and an
/// SVD of the small triangular factor. Only the first `keep` vectors are formed.
struct ThinSvd {
  Matrix u;
  Vector s;
};
ThinSvd thin_svd(const Matrix& a, int keep);

/// Count of singular values above max(rows, cols) * eps * s_1.
int numerical_rank(const Vector& s, Eigen::Index rows, Eigen::Index cols);

/// POD of [S_1 ... S_M]. N above the numerical rank is truncated with a warning.
ReducedBasis standard_pod(const std::vector<Matrix>& trajectories, int n, const InnerProduct& ip, FieldId field);

/// Per trajectory keep the first n_int temporal modes scaled by their singular
/// values, then run standard POD on the stacked result.
ReducedBasis nested_pod(const std::vector<Matrix>& trajectories, int n_int, int n, const InnerProduct& ip,
                        FieldId field);

/// sigma_k^2 / sigma_1^2.
Vector normalized_eigenvalues(const ReducedBasis& basis);

/// sum_k ||s_k - W W^T M s_k||^2 over all snapshot columns.
double projection_error_squared(const std::vector<Matrix>& trajectories, const Matrix& modes, const InnerProduct& ip);

}  // namespace biotrom
