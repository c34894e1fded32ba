#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <vector>

#include "biotrom/mesh.hpp"

namespace biotrom {

inline constexpr double kInfiniteModulus = std::numeric_limits<double>::infinity();

/// Symmetric 2x2 tensor.
struct Tensor2 {
  double xx = 0.0;
  double xy = 0.0;
  double yy = 0.0;

  double normal_component(const Point& n) const {
    return n.x * (xx * n.x + xy * n.y) + n.y * (xy * n.x + yy * n.y);
  }
  bool is_spd() const { return xx > 0.0 && xx * yy - xy * xy > 0.0; }
  std::array<double, 2> eigenvalues() const;
};

struct LameParameters {
  double lambda = 0.0;
  double mu = 0.0;
};

LameParameters lame_from_bulk_poisson(double bulk_modulus, double poisson_ratio);

/// 1 - K/Ks; Ks may be kInfiniteModulus.
double biot_coefficient(double bulk_modulus, double grain_modulus);

/// phi * cf + (alpha - phi) / Ks, the second term dropped exactly for Ks = inf.
double biot_modulus_inverse(double porosity, double fluid_compressibility, double alpha,
                            double grain_modulus);

Tensor2 conductivity(const Tensor2& permeability, double fluid_viscosity);

enum class PermeabilityKind : std::uint8_t { IsotropicUniform, AnisotropicUniform, TwoLayer, Cellwise };

/// Cellwise permeability tensors (m^2).
struct PermeabilityField {
  PermeabilityKind kind = PermeabilityKind::IsotropicUniform;
  std::vector<Tensor2> cells;
};

/// Upper layer of the two-layer medium.
inline constexpr double kTwoLayerUpperPermeability = 1.0e-12;

/// `cell_kxx` is required for the cellwise kind and ignored otherwise.
PermeabilityField build_permeability(PermeabilityKind kind, const Mesh& mesh, double k_xx,
                                     const std::vector<double>* cell_kxx = nullptr);

/// "cell_index k_xx" per line.
std::vector<double> read_permeability_file(const std::filesystem::path& path, int num_cells);
void write_permeability_file(const std::filesystem::path& path, const std::vector<double>& kxx);

struct LogNormalFieldOptions {
  double mean = 1.77e-12;
  double variance = 5.53e-24;
  double correlation_length = 0.1;
  int num_modes = 256;
  bool zinn_harvey_high = true;
  std::uint64_t seed = 2020;
};

/// Spatially correlated log-normal k_xx per cell (random Fourier modes of a
/// Gaussian covariance), optionally passed through a Zinn-Harvey transform that
/// connects high values, then rescaled to the target mean and variance.
std::vector<double> generate_lognormal_field(const Mesh& mesh, const LogNormalFieldOptions& opts);

struct MaterialConfig {
  double bulk_modulus = 1.0e6;              // K, Pa
  double grain_modulus = kInfiniteModulus;  // Ks, Pa
  double poisson_ratio = 0.25;
  double porosity = 0.3;
  double fluid_compressibility = 1.0e-9;    // Pa^-1
  double fluid_viscosity = 1.0e-3;          // Pa s
  std::optional<double> alpha_override;
  PermeabilityField permeability;

  void validate() const;
  LameParameters lame() const { return lame_from_bulk_poisson(bulk_modulus, poisson_ratio); }
  double alpha() const;
  double inverse_biot_modulus() const;
};

}  // namespace biotrom
