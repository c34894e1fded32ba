#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "biotrom/benchmarks.hpp"
#include "biotrom/config.hpp"
#include "biotrom/rom_runtime.hpp"

namespace biotrom {

using ParameterSet = std::vector<std::vector<double>>;

/// Tensor grid with sqrt(M) points per axis (log spacing on log axes), axis 0 major.
ParameterSet sample_training_set(const std::vector<ParameterAxis>& axes, int m);
/// Uniform draws in the box (log-uniform on log axes).
ParameterSet random_parameters(const std::vector<ParameterAxis>& axes, int count, std::uint64_t seed);
std::vector<double> parse_parameter_list(const std::string& csv);

Mesh make_mesh(const MeshSpec& spec);

/// Mesh, permeability field and time grid shared by every trajectory of a run.
struct CaseContext {
  PipelineConfig config;
  const BenchmarkCase* bench = nullptr;
  std::unique_ptr<Mesh> mesh;
  std::vector<double> field;  // case 4 only
  TimeSchedule schedule;

  const std::vector<double>* field_ptr() const { return field.empty() ? nullptr : &field; }
};
CaseContext make_context(const PipelineConfig& cfg);

struct Trajectory {
  Matrix u;  // N_h^u x (N^t+1)
  Matrix p;
};
Trajectory run_trajectory(const CaseContext& ctx, std::span<const double> mu);

struct SnapshotBatch {
  ParameterSet mus;
  std::vector<Matrix> u;
  std::vector<Matrix> p;
  int reused = 0;
  double fom_seconds = 0.0;        // wall time of this batch (excluding reused files)
  double fom_seconds_per_run = 0.0;
};

/// Reuses snapshot files in `dir` whose hash, parameters and size match; runs
/// the rest on the configured number of workers and writes them.
SnapshotBatch load_or_run_snapshots(const CaseContext& ctx, const ParameterSet& mus, const std::filesystem::path& dir);
std::filesystem::path snapshot_path(const std::filesystem::path& dir, int index, FieldId f);

ReducedBasis compute_basis(const PipelineConfig& cfg, const std::vector<Matrix>& snaps, const InnerProduct& ip,
                           FieldId f);

struct OfflineTimings {
  double fom = 0.0;
  double pod = 0.0;
  double ann = 0.0;  // projection + training
  double total = 0.0;
};

struct OfflineResult {
  RomArtifact artifact;
  OfflineTimings timings;
  TrainReport report_u;
  TrainReport report_p;
  int reused_snapshots = 0;
};

/// POD -> project -> train on an existing batch. With `persist` the bases,
/// tables and training reports are written under cfg.out_dir.
OfflineResult train_rom(const PipelineConfig& cfg, const CaseContext& ctx, const SnapshotBatch& batch, bool persist);

/// sample -> FOM batch -> POD -> project -> train, persisting every stage under cfg.out_dir.
OfflineResult run_offline(const PipelineConfig& cfg);

/// Train one field network from a coefficient table.
TrainResult train_field(const PipelineConfig& cfg, const CoefficientTable& table);

/// ROM trajectory over the artifact's time grid.
Trajectory predict_trajectory(const RomArtifact& a, std::span<const double> mu, bool warn = true);

struct SweepResult {
  std::vector<double> times;
  std::vector<BoxStats> mse_u;
  std::vector<BoxStats> mse_p;
  double rom_seconds_per_query = 0.0;
  double fom_seconds_per_query = 0.0;
  int queries = 0;
};
/// ROM over `mus`; with `with_reference` also runs the FOM for error statistics.
SweepResult sensitivity_sweep(const RomArtifact& a, const CaseContext& ctx, const ParameterSet& mus,
                              bool with_reference);

struct OnlineResult {
  std::vector<Trajectory> predictions;
  std::vector<ErrorSeries> errors;  // empty unless references were requested
  double rom_seconds = 0.0;
};
/// Reconstructs every query over the time grid; `ctx` is only needed for references.
/// Errors when the context belongs to another case than the artifact.
OnlineResult run_online(const RomArtifact& a, const ParameterSet& queries, const CaseContext* ctx = nullptr,
                        bool with_reference = false);

/// Error regimes: (a) projection coefficients on training mu, (b) network on
/// training mu, (c) network on unseen mu.
struct ErrorDecomposition {
  std::vector<ErrorSeries> projection_train;
  std::vector<ErrorSeries> ann_train;
  std::vector<ErrorSeries> ann_test;
};
/// `mu_train` must be members of `train.mus`; unseen references are computed
/// unless passed in `test_refs`.
ErrorDecomposition error_decomposition_study(const RomArtifact& a, const CaseContext& ctx, const SnapshotBatch& train,
                                             const ParameterSet& mu_train, const ParameterSet& mu_test,
                                             const std::vector<Trajectory>* test_refs = nullptr);

/// Queries needed before offline cost is amortized; infinity when the ROM is not faster.
double break_even_queries(double offline_seconds, double fom_per_query, double rom_per_query);

/// FNV-1a over the artifact's binary files, for determinism checks.
std::uint64_t artifact_digest(const std::filesystem::path& dir);

void write_error_csv(const std::filesystem::path& path, const ErrorSeries& e);
void write_sweep_csv(const std::filesystem::path& path, const SweepResult& s);
void write_parameter_csv(const std::filesystem::path& path, const std::vector<ParameterAxis>& axes,
                         const ParameterSet& mus);

}  // namespace biotrom
