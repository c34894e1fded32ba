#pragma once

#include <array>
#include <map>
#include <memory>
#include <vector>

#include <Eigen/SparseCholesky>

#include "biotrom/fe_space.hpp"
#include "biotrom/materials.hpp"
#include "biotrom/mesh.hpp"

namespace biotrom {

struct TimeSchedule {
  double dt0 = 20.0;
  double dt_mult = 1.0;
  double dt_max = 20.0;
  double final_time = 4000.0;
  std::vector<double> times;  // t^0 = 0, ..., t^{N^t} = T

  int num_steps() const { return static_cast<int>(times.size()) - 1; }
  double dt(int n) const { return times[n] - times[n - 1]; }
};

/// dt^1 = dt0, dt^n = min(mult * dt^{n-1}, dt_max); the last step is clipped to land on T.
TimeSchedule build_time_schedule(double dt0, double dt_mult, double dt_max, double final_time);

Vector bdf1(const Vector& current, const Vector& previous, double dt);

/// delta_e = k-/(k+ + k-), the weight of the plus side in the weighted average.
double weighted_average_weight(double k_plus, double k_minus);
double harmonic_permeability(double k_plus, double k_minus);

struct MomentumBC {
  enum class Kind { Traction, Roller, Fixed };
  Kind kind = Kind::Traction;
  // Traction: t_D. Roller: value[0] = u.n. Fixed: u.
  std::array<double, 2> value{0.0, 0.0};
};

struct MassBC {
  enum class Kind { Dirichlet, Flux };
  Kind kind = Kind::Flux;
  double value = 0.0;  // p_D or q_D
};

/// Indexed by BoundaryLabel.
struct BoundaryConditions {
  std::array<MomentumBC, 4> momentum{};
  std::array<MassBC, 4> mass{};
  std::array<double, 2> body_force{0.0, 0.0};
  double source = 0.0;

  const MomentumBC& momentum_on(BoundaryLabel l) const { return momentum[static_cast<int>(l)]; }
  const MassBC& mass_on(BoundaryLabel l) const { return mass[static_cast<int>(l)]; }
};

struct FomOptions {
  double beta = 10.0;
  double tol_fs = 1e-8;
  int max_iter = 50;
};

struct FomState {
  Vector u;
  Vector p;
  Vector sigma_v;
  double t = 0.0;
};

struct StepResult {
  FomState state;
  int iterations = 0;
  /// sigma_v frozen in the final pressure solve; the converged pressure
  /// satisfies the discrete mass balance exactly with this value.
  Vector sigma_v_flow;
};

/// Smallest and second-smallest eigenvalues over all interior facets of the
/// local block (one third of each neighbour's volume term plus the facet
/// terms). The constant is always in the kernel, so the second one must be > 0.
struct CoercivityReport {
  double min_second_eigenvalue = 0.0;
  int worst_facet = -1;
  bool ok() const { return min_second_eigenvalue > 0.0; }
};
CoercivityReport check_penalty_coercivity(const Mesh& mesh, const MaterialConfig& mat, double beta);

class FullOrderModel {
 public:
  struct Operators {
    SparseMatrix stiffness;          // constrained rows/cols replaced by identity
    SparseMatrix coupling;           // C_ij = int psi_i div phi_j  (pressure x displacement)
    SparseMatrix nodal_divergence;   // DG1 nodal values of div u
    SparseMatrix mass_p;
    SparseMatrix diffusion;          // SIPG form incl. Dirichlet facet terms
    Vector load_u;                   // traction + body force, lifted, constrained entries set
    Vector load_p;                   // source + flux + Dirichlet data
    std::vector<int> constrained;    // displacement dofs with Dirichlet values
    Vector constrained_values;       // full length, zero on free dofs
  };

  FullOrderModel(const Mesh& mesh, MaterialConfig material, BoundaryConditions bcs, FomOptions options = {});

  const Mesh& mesh() const { return mesh_; }
  const DofMap& u_dofs() const { return u_dofs_; }
  const DofMap& p_dofs() const { return p_dofs_; }
  const MaterialConfig& material() const { return mat_; }
  const BoundaryConditions& bcs() const { return bcs_; }
  const FomOptions& options() const { return opts_; }
  const Operators& operators() const { return ops_; }
  double storage_coefficient() const { return inv_m_ + alpha_ * alpha_ / mat_.bulk_modulus; }

  /// sigma_v = K div u - alpha p as DG1 nodal values.
  Vector volumetric_stress(const Vector& u, const Vector& p) const;

  Vector solve_momentum(const Vector& p);
  /// drained = false drops all conductivity terms (undrained limit).
  Vector solve_pressure(const FomState& prev, const Vector& sigma_iter, double dt, bool drained = true);

  StepResult fixed_stress_step(const FomState& prev, double dt);
  FomState undrained_initialize();
  std::vector<FomState> run(const TimeSchedule& schedule);

  /// Per-cell mass balance residual, tested with the cell indicator and
  /// computed from facet fluxes, relative to the largest per-cell term sum.
  Vector cell_mass_residuals(const FomState& prev, const StepResult& step, double dt) const;

 private:
  void assemble();
  void assemble_momentum();
  void assemble_pressure_operators();
  const Eigen::SimplicialLDLT<SparseMatrix>& pressure_solver(double dt, bool drained);

  const Mesh& mesh_;
  MaterialConfig mat_;
  BoundaryConditions bcs_;
  FomOptions opts_;
  DofMap u_dofs_;
  DofMap p_dofs_;
  double alpha_ = 1.0;
  double inv_m_ = 0.0;
  LameParameters lame_;
  Operators ops_;
  Eigen::SimplicialLDLT<SparseMatrix> momentum_solver_;
  std::map<std::pair<double, bool>, std::unique_ptr<Eigen::SimplicialLDLT<SparseMatrix>>> pressure_solvers_;
};

}  // namespace biotrom
