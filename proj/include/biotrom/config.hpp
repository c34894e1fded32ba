#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "biotrom/biot_fom.hpp"
#include "biotrom/inner_product.hpp"
#include "biotrom/mlp.hpp"

namespace biotrom {

struct MeshSpec {
  int n_x = 20;
  int crossed_squares = 0;
};

/// Everything the offline/online pipeline needs. Loaded from a YAML file with
/// flat dotted keys (nested maps are flattened the same way) and overridable
/// per key from the command line.
struct PipelineConfig {
  int case_id = 1;
  std::string profile = "desk";
  MeshSpec mesh;
  double dt0 = 20.0;
  double dt_mult = 1.0;
  double dt_max = 20.0;
  double final_time = 1000.0;
  FomOptions fom;
  int num_train = 25;              // M
  std::string pod_variant = "nested";
  int n_int = 5;                   // 0 means infinity
  int n_modes = 5;                 // N
  InnerProductKind inner_product = InnerProductKind::Mass;
  int n_hidden_layers = 3;
  int n_neurons = 7;
  TrainOptions train;
  Activation activation = Activation::Tanh;
  std::uint64_t seed = 1;
  std::string field_file;          // case 4; empty means generate
  std::uint64_t field_seed = 2020;
  std::filesystem::path out_dir = "biotrom_out";
  bool serial = false;
  int workers = 0;                 // 0: BIOTROM_WORKERS or 1

  static PipelineConfig profile_defaults(const std::string& profile);

  /// Applies "key=value" settings; unknown keys throw.
  void set(const std::string& key, const std::string& value);
  void load_yaml(const std::filesystem::path& path);

  /// Canonical sorted "key=value" listing.
  std::map<std::string, std::string> to_map() const;
  /// FNV-1a over the keys that determine FOM snapshots.
  std::uint64_t fom_hash() const;
  /// FNV-1a over every key that affects results (excludes output paths and threading).
  std::uint64_t config_hash() const;

  TimeSchedule schedule() const { return build_time_schedule(dt0, dt_mult, dt_max, final_time); }
  int resolved_workers() const;
};

std::uint64_t fnv1a64(const std::string& data, std::uint64_t h = 0xcbf29ce484222325ULL);
std::string hex_hash(std::uint64_t h);

}  // namespace biotrom
