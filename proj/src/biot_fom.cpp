#include "biotrom/biot_fom.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <spdlog/spdlog.h>

namespace biotrom {

namespace {

using Mat3 = Eigen::Matrix3d;
using Mat6 = Eigen::Matrix<double, 6, 6>;

int local_index(const std::array<int, 3>& tri, int v) {
  for (int i = 0; i < 3; ++i)
    if (tri[i] == v) return i;
  throw std::logic_error("vertex not in cell");
}

/// Barycentric coordinates in cell `c` of the point at parameter s along edge e.
Barycentric edge_point(const Mesh& mesh, int c, int e, double s) {
  const auto& tri = mesh.cell(c);
  const auto& ed = mesh.edge(e);
  Barycentric b{0.0, 0.0, 0.0};
  b[local_index(tri, ed[0])] = 1.0 - s;
  b[local_index(tri, ed[1])] = s;
  return b;
}

std::array<double, 2> kappa_times(const Tensor2& k, const std::array<double, 2>& g) {
  return {k.xx * g[0] + k.xy * g[1], k.xy * g[0] + k.yy * g[1]};
}

double dot(const std::array<double, 2>& a, const Point& n) { return a[0] * n.x + a[1] * n.y; }

/// Outward-normal flux of kappa grad L_i for each P1 basis function of the cell.
std::array<double, 3> normal_fluxes(const CellGeometry& g, const Tensor2& kappa, const Point& n) {
  return {dot(kappa_times(kappa, g.grad_bary[0]), n), dot(kappa_times(kappa, g.grad_bary[1]), n),
          dot(kappa_times(kappa, g.grad_bary[2]), n)};
}

Mat3 volume_diffusion(const CellGeometry& g, const Tensor2& kappa) {
  Mat3 m;
  for (int i = 0; i < 3; ++i) {
    const auto ki = kappa_times(kappa, g.grad_bary[i]);
    for (int j = 0; j < 3; ++j) m(i, j) = g.area * (ki[0] * g.grad_bary[j][0] + ki[1] * g.grad_bary[j][1]);
  }
  return m;
}

struct InteriorFacetData {
  double delta, kappa_e, h_e, length;
  std::array<double, 3> flux_plus, flux_minus;
};

InteriorFacetData interior_data(const Mesh& mesh, const InteriorFacet& f, const std::vector<Tensor2>& kappa) {
  const Tensor2& kp = kappa[f.plus_cell];
  const Tensor2& km = kappa[f.minus_cell];
  const double kpe = kp.normal_component(f.normal);
  const double kme = km.normal_component(f.normal);
  InteriorFacetData d;
  d.delta = weighted_average_weight(kpe, kme);
  d.kappa_e = harmonic_permeability(kpe, kme);
  d.h_e = facet_length_scale(mesh, f);
  d.length = mesh.edge_length(f.edge);
  d.flux_plus = normal_fluxes(cell_geometry(mesh, f.plus_cell), kp, f.normal);
  d.flux_minus = normal_fluxes(cell_geometry(mesh, f.minus_cell), km, f.normal);
  return d;
}

/// SIPG facet block over (plus dofs, minus dofs), rows = test.
Mat6 interior_block(const Mesh& mesh, const InteriorFacet& f, const InteriorFacetData& d, double beta) {
  const auto& lq = line_quadrature_gauss3();
  Mat6 m = Mat6::Zero();
  for (std::size_t q = 0; q < lq.points.size(); ++q) {
    const auto bp = edge_point(mesh, f.plus_cell, f.edge, lq.points[q]);
    const auto bm = edge_point(mesh, f.minus_cell, f.edge, lq.points[q]);
    std::array<double, 6> jump{}, avg{};
    for (int i = 0; i < 3; ++i) {
      jump[i] = bp[i];
      jump[3 + i] = -bm[i];
      avg[i] = d.delta * d.flux_plus[i];
      avg[3 + i] = (1.0 - d.delta) * d.flux_minus[i];
    }
    const double w = lq.weights[q] * d.length;
    const double pen = beta / d.h_e * d.kappa_e;
    for (int a = 0; a < 6; ++a)
      for (int b = 0; b < 6; ++b) m(a, b) += w * (-avg[b] * jump[a] - avg[a] * jump[b] + pen * jump[a] * jump[b]);
  }
  return m;
}

std::vector<Tensor2> conductivities(const MaterialConfig& mat) {
  std::vector<Tensor2> out;
  out.reserve(mat.permeability.cells.size());
  for (const auto& k : mat.permeability.cells) out.push_back(conductivity(k, mat.fluid_viscosity));
  return out;
}

}  // namespace

CoercivityReport check_penalty_coercivity(const Mesh& mesh, const MaterialConfig& mat, double beta) {
  if (!(beta > 0.0)) throw std::invalid_argument("penalty beta must be positive");
  const auto kappa = conductivities(mat);
  CoercivityReport rep{std::numeric_limits<double>::infinity(), -1};
  for (std::size_t i = 0; i < mesh.interior_facets().size(); ++i) {
    const auto& f = mesh.interior_facets()[i];
    const auto d = interior_data(mesh, f, kappa);
    Mat6 m = interior_block(mesh, f, d, beta);
    m.topLeftCorner<3, 3>() += volume_diffusion(cell_geometry(mesh, f.plus_cell), kappa[f.plus_cell]) / 3.0;
    m.bottomRightCorner<3, 3>() += volume_diffusion(cell_geometry(mesh, f.minus_cell), kappa[f.minus_cell]) / 3.0;
    // Scale-free test: normalize by the block's largest entry.
    const double scale = m.cwiseAbs().maxCoeff();
    Eigen::SelfAdjointEigenSolver<Mat6> es(m / scale);
    const double second = es.eigenvalues()[1];
    if (second < rep.min_second_eigenvalue) {
      rep.min_second_eigenvalue = second;
      rep.worst_facet = static_cast<int>(i);
    }
  }
  return rep;
}

FullOrderModel::FullOrderModel(const Mesh& mesh, MaterialConfig material, BoundaryConditions bcs, FomOptions options)
    : mesh_(mesh),
      mat_(std::move(material)),
      bcs_(bcs),
      opts_(options),
      u_dofs_(DofMap::vector_cg2(mesh)),
      p_dofs_(DofMap::scalar_dg1(mesh)) {
  mat_.validate();
  if (static_cast<int>(mat_.permeability.cells.size()) != mesh.num_cells()) {
    throw std::invalid_argument("FullOrderModel: permeability field does not match the mesh");
  }
  if (!(opts_.beta > 0.0)) throw std::invalid_argument("FullOrderModel: beta <= 0 loses coercivity");
  if (!(opts_.tol_fs > 0.0) || opts_.max_iter < 1) throw std::invalid_argument("FullOrderModel: bad fixed-stress options");
  alpha_ = mat_.alpha();
  inv_m_ = mat_.inverse_biot_modulus();
  lame_ = mat_.lame();
  assemble();
}

void FullOrderModel::assemble() {
  assemble_momentum();
  assemble_pressure_operators();
}

void FullOrderModel::assemble_momentum() {
  const auto& q = triangle_quadrature_degree4();
  const int nu = u_dofs_.num_dofs();
  const int np = p_dofs_.num_dofs();
  const double lam = lame_.lambda, mu = lame_.mu;
  Eigen::Matrix3d dmat;
  dmat << lam + 2 * mu, lam, 0, lam, lam + 2 * mu, 0, 0, 0, mu;

  Triplets k_trip, c_trip, d_trip;
  k_trip.reserve(static_cast<std::size_t>(mesh_.num_cells()) * 144);
  c_trip.reserve(static_cast<std::size_t>(mesh_.num_cells()) * 36);
  d_trip.reserve(static_cast<std::size_t>(mesh_.num_cells()) * 36);
  Vector load = Vector::Zero(nu);

  for (int c = 0; c < mesh_.num_cells(); ++c) {
    const auto g = cell_geometry(mesh_, c);
    const auto cd = u_dofs_.cell_dofs(c);
    Eigen::Matrix<double, 12, 12> ke = Eigen::Matrix<double, 12, 12>::Zero();
    Eigen::Matrix<double, 3, 12> ce = Eigen::Matrix<double, 3, 12>::Zero();
    for (std::size_t k = 0; k < q.points.size(); ++k) {
      const auto grads = p2_gradients(q.points[k], g);
      Eigen::Matrix<double, 3, 12> b = Eigen::Matrix<double, 3, 12>::Zero();
      for (int a = 0; a < 6; ++a) {
        b(0, 2 * a) = grads[a][0];
        b(2, 2 * a) = grads[a][1];
        b(1, 2 * a + 1) = grads[a][1];
        b(2, 2 * a + 1) = grads[a][0];
      }
      const double w = q.weights[k] * g.area;
      ke.noalias() += w * b.transpose() * dmat * b;
      for (int i = 0; i < 3; ++i)
        for (int a = 0; a < 6; ++a)
          for (int comp = 0; comp < 2; ++comp) ce(i, 2 * a + comp) += w * q.points[k][i] * grads[a][comp];
    }
    for (int a = 0; a < 12; ++a)
      for (int b = 0; b < 12; ++b) k_trip.emplace_back(cd[a], cd[b], ke(a, b));
    for (int i = 0; i < 3; ++i) {
      Barycentric vtx{0.0, 0.0, 0.0};
      vtx[i] = 1.0;
      const auto grads = p2_gradients(vtx, g);
      for (int a = 0; a < 6; ++a)
        for (int comp = 0; comp < 2; ++comp) {
          c_trip.emplace_back(3 * c + i, cd[2 * a + comp], ce(i, 2 * a + comp));
          d_trip.emplace_back(3 * c + i, cd[2 * a + comp], grads[a][comp]);
        }
    }
    // Body force: P2 vertex functions integrate to zero, edge functions to area/3.
    for (int a = 3; a < 6; ++a)
      for (int comp = 0; comp < 2; ++comp) load[cd[2 * a + comp]] += bcs_.body_force[comp] * g.area / 3.0;
  }

  SparseMatrix k_full(nu, nu);
  k_full.setFromTriplets(k_trip.begin(), k_trip.end());
  ops_.coupling.resize(np, nu);
  ops_.coupling.setFromTriplets(c_trip.begin(), c_trip.end());
  // Each vertex appears in several cells with the same value; keep the last.
  ops_.nodal_divergence.resize(np, nu);
  ops_.nodal_divergence.setFromTriplets(d_trip.begin(), d_trip.end(), [](double, double b) { return b; });

  // Traction on Neumann facets and Dirichlet constraints.
  const auto& lq = line_quadrature_gauss3();
  std::vector<char> is_constrained(nu, 0);
  ops_.constrained_values = Vector::Zero(nu);
  auto constrain = [&](int dof, double value) {
    if (is_constrained[dof] && std::abs(ops_.constrained_values[dof] - value) > 1e-14 * (1.0 + std::abs(value))) {
      throw std::invalid_argument("conflicting displacement constraints at a boundary corner");
    }
    is_constrained[dof] = 1;
    ops_.constrained_values[dof] = value;
  };
  for (const auto& f : mesh_.boundary_facets()) {
    const auto& bc = bcs_.momentum_on(f.label);
    const auto cd = u_dofs_.cell_dofs(f.cell);
    const auto& edges = mesh_.cell_edges(f.cell);
    int li = 0;
    while (edges[li] != f.edge) ++li;
    const int nodes[3] = {(li + 1) % 3, (li + 2) % 3, 3 + li};
    switch (bc.kind) {
      case MomentumBC::Kind::Traction: {
        const double len = mesh_.edge_length(f.edge);
        for (std::size_t k = 0; k < lq.points.size(); ++k) {
          const auto phi = p2_values(edge_point(mesh_, f.cell, f.edge, lq.points[k]));
          for (int a = 0; a < 6; ++a)
            for (int comp = 0; comp < 2; ++comp)
              load[cd[2 * a + comp]] += lq.weights[k] * len * bc.value[comp] * phi[a];
        }
        break;
      }
      case MomentumBC::Kind::Roller: {
        const bool x_normal = std::abs(f.normal.x) > std::abs(f.normal.y);
        const int comp = x_normal ? 0 : 1;
        const double sign = x_normal ? (f.normal.x > 0 ? 1.0 : -1.0) : (f.normal.y > 0 ? 1.0 : -1.0);
        for (int a : nodes) constrain(cd[2 * a + comp], sign * bc.value[0]);
        break;
      }
      case MomentumBC::Kind::Fixed:
        for (int a : nodes)
          for (int comp = 0; comp < 2; ++comp) constrain(cd[2 * a + comp], bc.value[comp]);
        break;
    }
  }

  ops_.constrained.clear();
  for (int i = 0; i < nu; ++i)
    if (is_constrained[i]) ops_.constrained.push_back(i);
  if (ops_.constrained.empty()) {
    throw std::invalid_argument("momentum problem has no displacement constraints (rigid-body modes)");
  }

  // Symmetric elimination: lift known values into the load, identity on constrained rows.
  load -= k_full * ops_.constrained_values;
  Triplets reduced;
  reduced.reserve(k_full.nonZeros());
  for (int col = 0; col < k_full.outerSize(); ++col)
    for (SparseMatrix::InnerIterator it(k_full, col); it; ++it)
      if (!is_constrained[it.row()] && !is_constrained[it.col()]) reduced.emplace_back(it.row(), it.col(), it.value());
  for (int i : ops_.constrained) {
    reduced.emplace_back(i, i, 1.0);
    load[i] = ops_.constrained_values[i];
  }
  ops_.stiffness.resize(nu, nu);
  ops_.stiffness.setFromTriplets(reduced.begin(), reduced.end());
  ops_.load_u = load;

  momentum_solver_.compute(ops_.stiffness);
  if (momentum_solver_.info() != Eigen::Success || (momentum_solver_.vectorD().array() <= 0.0).any()) {
    throw std::runtime_error("momentum matrix is singular: constraints do not remove rigid-body modes");
  }
}

void FullOrderModel::assemble_pressure_operators() {
  const int np = p_dofs_.num_dofs();
  const auto kappa = conductivities(mat_);
  const double beta = opts_.beta;
  const auto& lq = line_quadrature_gauss3();

  ops_.mass_p = assemble_dg1_mass(mesh_);
  Triplets trip;
  trip.reserve(static_cast<std::size_t>(mesh_.num_cells()) * 9 + mesh_.interior_facets().size() * 36);
  Vector rhs = Vector::Zero(np);

  for (int c = 0; c < mesh_.num_cells(); ++c) {
    const auto g = cell_geometry(mesh_, c);
    const Mat3 m = volume_diffusion(g, kappa[c]);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) trip.emplace_back(3 * c + i, 3 * c + j, m(i, j));
      rhs[3 * c + i] += bcs_.source * g.area / 3.0;
    }
  }

  for (const auto& f : mesh_.interior_facets()) {
    const auto d = interior_data(mesh_, f, kappa);
    const Mat6 m = interior_block(mesh_, f, d, beta);
    const int base[2] = {3 * f.plus_cell, 3 * f.minus_cell};
    for (int a = 0; a < 6; ++a)
      for (int b = 0; b < 6; ++b) trip.emplace_back(base[a / 3] + a % 3, base[b / 3] + b % 3, m(a, b));
  }

  for (const auto& f : mesh_.boundary_facets()) {
    const auto& bc = bcs_.mass_on(f.label);
    const int c = f.cell;
    const double len = mesh_.edge_length(f.edge);
    if (bc.kind == MassBC::Kind::Flux) {
      for (std::size_t q = 0; q < lq.points.size(); ++q) {
        const auto b = edge_point(mesh_, c, f.edge, lq.points[q]);
        for (int i = 0; i < 3; ++i) rhs[3 * c + i] += lq.weights[q] * len * bc.value * b[i];
      }
      continue;
    }
    const auto flux = normal_fluxes(cell_geometry(mesh_, c), kappa[c], f.normal);
    const double pen = beta / facet_length_scale(mesh_, f) * kappa[c].normal_component(f.normal);
    Mat3 m = Mat3::Zero();
    for (std::size_t q = 0; q < lq.points.size(); ++q) {
      const auto b = edge_point(mesh_, c, f.edge, lq.points[q]);
      const double w = lq.weights[q] * len;
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) m(i, j) += w * (-flux[j] * b[i] - flux[i] * b[j] + pen * b[i] * b[j]);
        rhs[3 * c + i] += w * (-flux[i] + pen * b[i]) * bc.value;
      }
    }
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) trip.emplace_back(3 * c + i, 3 * c + j, m(i, j));
  }

  ops_.diffusion.resize(np, np);
  ops_.diffusion.setFromTriplets(trip.begin(), trip.end());
  ops_.load_p = rhs;
}

Vector FullOrderModel::volumetric_stress(const Vector& u, const Vector& p) const {
  return mat_.bulk_modulus * (ops_.nodal_divergence * u) - alpha_ * p;
}

Vector FullOrderModel::solve_momentum(const Vector& p) {
  Vector rhs = ops_.load_u + alpha_ * (ops_.coupling.transpose() * p);
  for (int i : ops_.constrained) rhs[i] = ops_.constrained_values[i];
  return momentum_solver_.solve(rhs);
}

const Eigen::SimplicialLDLT<SparseMatrix>& FullOrderModel::pressure_solver(double dt, bool drained) {
  const auto key = std::make_pair(drained ? dt : 1.0, drained);
  auto it = pressure_solvers_.find(key);
  if (it != pressure_solvers_.end()) return *it->second;
  // Variable schedules produce many distinct steps; keep the cache small.
  if (pressure_solvers_.size() >= 4) pressure_solvers_.clear();
  SparseMatrix a = (storage_coefficient() / key.first) * ops_.mass_p;
  if (drained) a += ops_.diffusion;
  auto solver = std::make_unique<Eigen::SimplicialLDLT<SparseMatrix>>(a);
  if (solver->info() != Eigen::Success) throw std::runtime_error("pressure matrix factorization failed");
  return *pressure_solvers_.emplace(key, std::move(solver)).first->second;
}

Vector FullOrderModel::solve_pressure(const FomState& prev, const Vector& sigma_iter, double dt, bool drained) {
  if (!(dt > 0.0)) throw std::invalid_argument("solve_pressure: dt must be positive");
  const double h = drained ? dt : 1.0;
  Vector rhs = ops_.mass_p * ((storage_coefficient() / h) * prev.p - (alpha_ / mat_.bulk_modulus / h) * (sigma_iter - prev.sigma_v));
  if (drained) rhs += ops_.load_p;
  return pressure_solver(dt, drained).solve(rhs);
}

namespace {

double relative_increment(const Vector& next, const Vector& current, double scale = 0.0) {
  const double n = std::max(next.norm(), scale);
  const double d = (next - current).norm();
  return n > 0.0 ? d / n : d;
}

StepResult fixed_stress_loop(FullOrderModel& fom, const FomState& prev, double dt, bool drained) {
  const auto& opts = fom.options();
  FomState it = prev;
  double du = 0.0, dp = 0.0;
  for (int k = 1; k <= opts.max_iter; ++k) {
    Vector sigma_flow = it.sigma_v;
    Vector p = fom.solve_pressure(prev, sigma_flow, dt, drained);
    Vector u = fom.solve_momentum(p);
    // Pressure is measured against the stress level: once p has drained to ~0 its
    // own norm is far below the round-off of the coupled stress balance.
    dp = relative_increment(p, it.p, it.sigma_v.norm());
    du = relative_increment(u, it.u);
    it.u = std::move(u);
    it.p = std::move(p);
    it.sigma_v = fom.volumetric_stress(it.u, it.p);
    spdlog::trace("fixed-stress it {}: du {:.3e} dp {:.3e}", k, du, dp);
    if (dp < opts.tol_fs && du < opts.tol_fs) {
      it.t = prev.t + (drained ? dt : 0.0);
      return {std::move(it), k, std::move(sigma_flow)};
    }
  }
  std::ostringstream msg;
  msg << "fixed-stress iteration did not converge in " << opts.max_iter << " iterations (dt = " << dt
      << " s): relative increments u " << du << ", p " << dp;
  throw std::runtime_error(msg.str());
}

}  // namespace

StepResult FullOrderModel::fixed_stress_step(const FomState& prev, double dt) {
  return fixed_stress_loop(*this, prev, dt, true);
}

FomState FullOrderModel::undrained_initialize() {
  FomState zero{Vector::Zero(u_dofs_.num_dofs()), Vector::Zero(p_dofs_.num_dofs()),
                Vector::Zero(p_dofs_.num_dofs()), 0.0};
  auto r = fixed_stress_loop(*this, zero, 1.0, false);
  r.state.t = 0.0;
  return r.state;
}

std::vector<FomState> FullOrderModel::run(const TimeSchedule& schedule) {
  std::vector<FomState> out;
  out.reserve(schedule.times.size());
  out.push_back(undrained_initialize());
  for (int n = 1; n <= schedule.num_steps(); ++n) {
    try {
      auto r = fixed_stress_step(out.back(), schedule.dt(n));
      r.state.t = schedule.times[n];
      out.push_back(std::move(r.state));
    } catch (const std::exception& e) {
      throw std::runtime_error("time step " + std::to_string(n) + " (t = " + std::to_string(schedule.times[n]) +
                               " s) failed: " + e.what());
    }
  }
  return out;
}

Vector FullOrderModel::cell_mass_residuals(const FomState& prev, const StepResult& step, double dt) const {
  const int nc = mesh_.num_cells();
  const auto kappa = conductivities(mat_);
  const auto& lq = line_quadrature_gauss3();
  const double cs = storage_coefficient();
  const double beta = opts_.beta;
  const Vector& p = step.state.p;
  Vector r = Vector::Zero(nc);
  Vector mag = Vector::Zero(nc);
  auto add = [&](int c, double v) {
    r[c] += v;
    mag[c] += std::abs(v);
  };

  for (int c = 0; c < nc; ++c) {
    const double a3 = mesh_.cell_area(c) / 3.0;
    double storage = 0.0, stress = 0.0;
    for (int i = 0; i < 3; ++i) {
      storage += a3 * (p[3 * c + i] - prev.p[3 * c + i]);
      stress += a3 * (step.sigma_v_flow[3 * c + i] - prev.sigma_v[3 * c + i]);
    }
    add(c, cs * storage / dt);
    add(c, alpha_ / mat_.bulk_modulus * stress / dt);
    add(c, -bcs_.source * mesh_.cell_area(c));
  }

  auto trace = [&](int c, int e, double s) {
    const auto b = edge_point(mesh_, c, e, s);
    return b[0] * p[3 * c] + b[1] * p[3 * c + 1] + b[2] * p[3 * c + 2];
  };
  auto grad = [&](int c) {
    const auto g = cell_geometry(mesh_, c);
    std::array<double, 2> out{0.0, 0.0};
    for (int i = 0; i < 3; ++i)
      for (int d = 0; d < 2; ++d) out[d] += p[3 * c + i] * g.grad_bary[i][d];
    return out;
  };

  for (const auto& f : mesh_.interior_facets()) {
    const int cp = f.plus_cell, cm = f.minus_cell;
    const double kpe = kappa[cp].normal_component(f.normal);
    const double kme = kappa[cm].normal_component(f.normal);
    const double delta = weighted_average_weight(kpe, kme);
    const double pen = beta / facet_length_scale(mesh_, f) * harmonic_permeability(kpe, kme);
    const double avg_flux =
        delta * dot(kappa_times(kappa[cp], grad(cp)), f.normal) + (1.0 - delta) * dot(kappa_times(kappa[cm], grad(cm)), f.normal);
    const double len = mesh_.edge_length(f.edge);
    double flux = 0.0;
    for (std::size_t q = 0; q < lq.points.size(); ++q) {
      const double jump = trace(cp, f.edge, lq.points[q]) - trace(cm, f.edge, lq.points[q]);
      flux += lq.weights[q] * len * (-avg_flux + pen * jump);
    }
    add(cp, flux);
    add(cm, -flux);
  }

  for (const auto& f : mesh_.boundary_facets()) {
    const auto& bc = bcs_.mass_on(f.label);
    const int c = f.cell;
    const double len = mesh_.edge_length(f.edge);
    if (bc.kind == MassBC::Kind::Flux) {
      add(c, -bc.value * len);
      continue;
    }
    const double pen = beta / facet_length_scale(mesh_, f) * kappa[c].normal_component(f.normal);
    const double nflux = dot(kappa_times(kappa[c], grad(c)), f.normal);
    double flux = 0.0;
    for (std::size_t q = 0; q < lq.points.size(); ++q) {
      flux += lq.weights[q] * len * (-nflux + pen * (trace(c, f.edge, lq.points[q]) - bc.value));
    }
    add(c, flux);
  }

  const double scale = mag.maxCoeff();
  return scale > 0.0 ? Vector(r.cwiseAbs() / scale) : Vector(r.cwiseAbs());
}

}  // namespace biotrom
