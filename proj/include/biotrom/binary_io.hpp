#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "biotrom/mlp.hpp"
#include "biotrom/pod.hpp"
#include "biotrom/projection.hpp"

namespace biotrom {

// All files are little-endian. Every header ends with the 64-bit hash of the
// configuration that produced the data.

/// "BRSNAP01" | u32 field | u64 N_h | u64 N^t+1 | u64 P | f64 mu[P] | f64 t[N^t+1] | u64 hash | f64 data (column-major)
struct SnapshotFile {
  FieldId field = FieldId::Displacement;
  std::vector<double> mu;
  std::vector<double> times;
  std::uint64_t hash = 0;
  Matrix data;  // N_h x (N^t+1)
};
void write_snapshot(const std::filesystem::path& path, const SnapshotFile& s);
SnapshotFile read_snapshot(const std::filesystem::path& path);
/// Header only (no data), used to decide whether a file can be reused.
SnapshotFile read_snapshot_header(const std::filesystem::path& path);

/// "BRBASIS1" | u32 field | u64 N_h | u64 N | u64 n_sv | u32 inner product | u64 N_int (0 = inf) | u64 hash
/// | f64 sv[n_sv] | f64 modes (column-major)
void write_basis(const std::filesystem::path& path, const ReducedBasis& b, std::uint64_t hash);
ReducedBasis read_basis(const std::filesystem::path& path, std::uint64_t* hash = nullptr);

/// "BRTABLE1" | u32 field | u64 N | u64 M | u64 N^t | u64 P | input norm | output norm | u64 hash
/// | f64 rows (t, mu..., theta...), row-major
/// A norm block is u64 width then per column (f64 lo, f64 hi, u8 log).
void write_table(const std::filesystem::path& path, const CoefficientTable& t, std::uint64_t hash);
CoefficientTable read_table(const std::filesystem::path& path, std::uint64_t* hash = nullptr);

/// "BRMLP001" | u64 L+1 | u64 sizes[L+1] | u32 activation | input norm | output norm | u64 seed | u64 hash
/// | per layer: f64 W (row-major, out x in), f64 b
struct MlpFile {
  MlpParams net;
  Normalizer input_norm;
  Normalizer output_norm;
  std::uint64_t hash = 0;
};
void write_mlp(const std::filesystem::path& path, const MlpFile& m);
MlpFile read_mlp(const std::filesystem::path& path);

}  // namespace biotrom
