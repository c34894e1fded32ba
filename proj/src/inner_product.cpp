#include "biotrom/inner_product.hpp"

#include <stdexcept>

namespace biotrom {

const char* to_string(FieldId f) { return f == FieldId::Displacement ? "u" : "p"; }

FieldId parse_field(const std::string& s) {
  if (s == "u") return FieldId::Displacement;
  if (s == "p") return FieldId::Pressure;
  throw std::invalid_argument("unknown field '" + s + "' (expected u or p)");
}

const char* to_string(InnerProductKind k) { return k == InnerProductKind::Mass ? "mass" : "euclidean"; }

InnerProductKind parse_inner_product(const std::string& s) {
  if (s == "mass") return InnerProductKind::Mass;
  if (s == "euclidean") return InnerProductKind::Euclidean;
  throw std::invalid_argument("unknown inner product '" + s + "' (expected mass or euclidean)");
}

InnerProduct InnerProduct::euclidean(int n) {
  InnerProduct ip;
  ip.kind_ = InnerProductKind::Euclidean;
  ip.n_ = n;
  return ip;
}

InnerProduct InnerProduct::mass(SparseMatrix m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("InnerProduct: mass matrix must be square");
  InnerProduct ip;
  ip.kind_ = InnerProductKind::Mass;
  ip.n_ = static_cast<int>(m.rows());
  ip.m_ = std::move(m);
  ip.llt_ = std::make_shared<Eigen::SimplicialLLT<SparseMatrix>>(ip.m_);
  if (ip.llt_->info() != Eigen::Success) throw std::runtime_error("InnerProduct: mass matrix is not SPD");
  return ip;
}

double InnerProduct::dot(const Vector& a, const Vector& b) const {
  if (a.size() != n_ || b.size() != n_) throw std::invalid_argument("InnerProduct: length mismatch");
  if (kind_ == InnerProductKind::Euclidean) return a.dot(b);
  return a.dot(m_ * b);
}

Matrix InnerProduct::apply(const Matrix& x) const {
  if (x.rows() != n_) throw std::invalid_argument("InnerProduct: row mismatch");
  if (kind_ == InnerProductKind::Euclidean) return x;
  return m_ * x;
}

Matrix InnerProduct::gram(const Matrix& w) const { return w.transpose() * apply(w); }

Matrix InnerProduct::weight(const Matrix& s) const {
  if (s.rows() != n_) throw std::invalid_argument("InnerProduct: row mismatch");
  if (kind_ == InnerProductKind::Euclidean) return s;
  Matrix ps = llt_->permutationP() * s;
  return llt_->matrixU() * ps;
}

Matrix InnerProduct::unweight(const Matrix& u) const {
  if (u.rows() != n_) throw std::invalid_argument("InnerProduct: row mismatch");
  if (kind_ == InnerProductKind::Euclidean) return u;
  Matrix x = llt_->matrixU().solve(u);
  return llt_->permutationPinv() * x;
}

InnerProduct field_inner_product(const Mesh& mesh, FieldId field, InnerProductKind kind) {
  if (field == FieldId::Displacement) {
    const DofMap dofs = DofMap::vector_cg2(mesh);
    if (kind == InnerProductKind::Euclidean) return InnerProduct::euclidean(dofs.num_dofs());
    return InnerProduct::mass(assemble_cg2_vector_mass(mesh, dofs));
  }
  if (kind == InnerProductKind::Euclidean) return InnerProduct::euclidean(3 * mesh.num_cells());
  return InnerProduct::mass(assemble_dg1_mass(mesh));
}

}  // namespace biotrom
