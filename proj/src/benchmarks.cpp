#include "biotrom/benchmarks.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace biotrom {

void BenchmarkCase::check_parameters(std::span<const double> mu) const {
  if (static_cast<int>(mu.size()) != num_parameters()) {
    throw std::invalid_argument("case " + std::to_string(id) + " expects " + std::to_string(num_parameters()) +
                                " parameters, got " + std::to_string(mu.size()));
  }
  for (int i = 0; i < num_parameters(); ++i) {
    const auto& a = axes[i];
    const double slack = 1e-12 * std::max(std::abs(a.lo), std::abs(a.hi));
    if (!(mu[i] >= a.lo - slack && mu[i] <= a.hi + slack)) {
      std::ostringstream msg;
      msg << "case " << id << ": " << a.name << " = " << mu[i] << " outside [" << a.lo << ", " << a.hi << "]";
      throw std::invalid_argument(msg.str());
    }
  }
}

MaterialConfig BenchmarkCase::material(const Mesh& mesh, std::span<const double> mu,
                                       const std::vector<double>* field) const {
  check_parameters(mu);
  MaterialConfig m;
  m.poisson_ratio = mu[0];
  if (permeability == PermeabilityKind::Cellwise) {
    if (field == nullptr) throw std::invalid_argument("case 4 needs a heterogeneous permeability field");
    m.alpha_override = mu[1];
    m.permeability = build_permeability(permeability, mesh, 0.0, field);
  } else {
    m.permeability = build_permeability(permeability, mesh, mu[1]);
  }
  m.validate();
  return m;
}

const BenchmarkCase& benchmark_case(int id) {
  static const std::vector<BenchmarkCase> cases = {
      {1, "isotropic", {{"nu", 0.1, 0.4, false}, {"k_xx", 1e-15, 1e-11, true}}, PermeabilityKind::IsotropicUniform},
      {2, "anisotropic", {{"nu", 0.1, 0.4, false}, {"k_xx", 1e-15, 1e-11, true}}, PermeabilityKind::AnisotropicUniform},
      {3, "two-layer", {{"nu", 0.1, 0.4, false}, {"k_xx", 1e-16, 1e-15, false}}, PermeabilityKind::TwoLayer},
      {4, "heterogeneous", {{"nu", 0.1, 0.4, false}, {"alpha", 0.4, 1.0, false}}, PermeabilityKind::Cellwise},
  };
  if (id < 1 || id > 4) throw std::invalid_argument("unknown case " + std::to_string(id) + " (expected 1-4)");
  return cases[id - 1];
}

BoundaryConditions benchmark_boundary_conditions() {
  BoundaryConditions bc;
  using MK = MomentumBC::Kind;
  bc.momentum[static_cast<int>(BoundaryLabel::Left)] = {MK::Roller, {0.0, 0.0}};
  bc.momentum[static_cast<int>(BoundaryLabel::Right)] = {MK::Roller, {0.0, 0.0}};
  bc.momentum[static_cast<int>(BoundaryLabel::Bottom)] = {MK::Roller, {0.0, 0.0}};
  bc.momentum[static_cast<int>(BoundaryLabel::Top)] = {MK::Traction, {0.0, -1000.0}};
  for (auto& m : bc.mass) m = {MassBC::Kind::Flux, 0.0};
  bc.mass[static_cast<int>(BoundaryLabel::Top)] = {MassBC::Kind::Dirichlet, 0.0};
  return bc;
}

std::vector<FomState> run_fom(const BenchmarkCase& bc, std::span<const double> mu, const TimeSchedule& schedule,
                              const Mesh& mesh, const FomOptions& opts, const std::vector<double>* field) {
  FullOrderModel fom(mesh, bc.material(mesh, mu, field), benchmark_boundary_conditions(), opts);
  return fom.run(schedule);
}

}  // namespace biotrom
