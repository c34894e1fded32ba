#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include <Eigen/SparseCholesky>

#include "biotrom/fe_space.hpp"

namespace biotrom {

enum class FieldId : std::uint32_t { Displacement = 0, Pressure = 1 };
const char* to_string(FieldId f);
FieldId parse_field(const std::string& s);  // "u" | "p"

enum class InnerProductKind : std::uint32_t { Euclidean = 0, Mass = 1 };
const char* to_string(InnerProductKind k);
InnerProductKind parse_inner_product(const std::string& s);  // "euclidean" | "mass"

/// (a, b) = a^T M b with M either the identity or a finite-element mass matrix.
/// The mass variant keeps a sparse Cholesky factor M = P^T L L^T P so that
/// weighted POD reduces to an ordinary SVD of L^T P S.
class InnerProduct {
 public:
  static InnerProduct euclidean(int n);
  static InnerProduct mass(SparseMatrix m);

  InnerProductKind kind() const { return kind_; }
  int size() const { return n_; }
  const SparseMatrix& matrix() const { return m_; }  // empty for Euclidean

  double dot(const Vector& a, const Vector& b) const;
  double norm_squared(const Vector& a) const { return dot(a, a); }
  Matrix apply(const Matrix& x) const;   // M x
  Matrix gram(const Matrix& w) const;    // W^T M W
  Matrix weight(const Matrix& s) const;  // L^T P s
  Matrix unweight(const Matrix& u) const;  // P^T L^{-T} u

 private:
  InnerProductKind kind_ = InnerProductKind::Euclidean;
  int n_ = 0;
  SparseMatrix m_;
  std::shared_ptr<Eigen::SimplicialLLT<SparseMatrix>> llt_;
};

/// Field inner product on the CG2 displacement or DG1 pressure space.
InnerProduct field_inner_product(const Mesh& mesh, FieldId field, InnerProductKind kind);

}  // namespace biotrom
