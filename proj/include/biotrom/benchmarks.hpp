#pragma once

#include <span>
#include <string>
#include <vector>

#include "biotrom/biot_fom.hpp"

namespace biotrom {

struct ParameterAxis {
  std::string name;
  double lo = 0.0;
  double hi = 1.0;
  bool log_spaced = false;
};

struct BenchmarkCase {
  int id = 1;
  std::string name;
  std::vector<ParameterAxis> axes;
  PermeabilityKind permeability = PermeabilityKind::IsotropicUniform;

  int num_parameters() const { return static_cast<int>(axes.size()); }
  /// Throws when mu is outside the box (relative slack 1e-12).
  void check_parameters(std::span<const double> mu) const;
  /// `field` holds cellwise k_xx and is required for the heterogeneous case.
  MaterialConfig material(const Mesh& mesh, std::span<const double> mu,
                          const std::vector<double>* field = nullptr) const;
};

/// Cases 1-4: isotropic, anisotropic, two-layer, heterogeneous.
const BenchmarkCase& benchmark_case(int id);

/// Rollers on Left/Right/Bottom, t_D = [0, -1000] Pa on Top; p_D = 0 on Top, no flux elsewhere.
BoundaryConditions benchmark_boundary_conditions();

std::vector<FomState> run_fom(const BenchmarkCase& bc, std::span<const double> mu, const TimeSchedule& schedule,
                              const Mesh& mesh, const FomOptions& opts = {},
                              const std::vector<double>* field = nullptr);

}  // namespace biotrom
