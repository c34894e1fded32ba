#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "biotrom/benchmarks.hpp"
#include "biotrom/config.hpp"
#include "biotrom/mlp.hpp"
#include "biotrom/pod.hpp"
#include "biotrom/projection.hpp"

namespace biotrom {

struct FieldModel {
  ReducedBasis basis;
  MlpParams net;
  Normalizer input_norm;
  Normalizer output_norm;
};

/// Everything the online phase needs. On disk: a directory holding
/// artifact.json plus basis_{u,p}.bin and mlp_{u,p}.bin.
struct RomArtifact {
  int case_id = 1;
  MeshSpec mesh;
  std::vector<double> times;
  std::vector<ParameterAxis> box;
  InnerProductKind inner_product = InnerProductKind::Mass;
  std::uint64_t fom_hash = 0;
  std::uint64_t config_hash = 0;
  FieldModel u;
  FieldModel p;

  const FieldModel& field(FieldId f) const { return f == FieldId::Displacement ? u : p; }
  /// Basis width must match network output, input width must be 1 + P.
  void validate() const;
};

void save_artifact(const std::filesystem::path& dir, const RomArtifact& a);
RomArtifact load_artifact(const std::filesystem::path& dir);

/// Normalize (t, mu) with clamping, evaluate the net, denormalize.
Vector predict_coefficients(const FieldModel& m, double t, std::span<const double> mu, bool warn = true);
Vector reconstruct(const ReducedBasis& basis, const Vector& theta);
/// (u, p) dof vectors at (t, mu).
std::pair<Vector, Vector> reconstruct(const RomArtifact& a, double t, std::span<const double> mu, bool warn = true);

/// Squared field norm of the difference.
double mse_metric(const Vector& fom, const Vector& rom, const InnerProduct& ip);
/// Max over dofs of the absolute difference.
double me_metric(const Vector& fom, const Vector& rom);

struct ErrorSeries {
  std::vector<double> times;
  std::vector<double> mse_u, me_u, mse_p, me_p;

  double mean_mse_u() const;
  double mean_mse_p() const;
  double max_me_u() const;
  double max_me_p() const;
};

/// Columns are time steps.
ErrorSeries error_series(const std::vector<double>& times, const Matrix& fom_u, const Matrix& rom_u,
                         const Matrix& fom_p, const Matrix& rom_p, const InnerProduct& ip_u,
                         const InnerProduct& ip_p);

/// Quartiles with 1.5 IQR whiskers.
struct BoxStats {
  double q1 = 0.0, median = 0.0, q3 = 0.0;
  double whisker_lo = 0.0, whisker_hi = 0.0;
  int outliers = 0;
  int count = 0;
};
BoxStats box_stats(std::vector<double> values);

}  // namespace biotrom
