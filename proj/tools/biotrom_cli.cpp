// biotrom: offline/online reduced-order pipeline for parametric Biot problems.
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "biotrom/binary_io.hpp"
#include "biotrom/pipeline.hpp"

namespace fs = std::filesystem;
using namespace biotrom;

namespace {

struct Common {
  std::string config_file;
  std::string profile;
  std::optional<int> case_id;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::vector<std::string> sets;
  bool serial = false;
  int verbose = 0;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config_file, "YAML config with flat dotted keys")->check(CLI::ExistingFile);
  app->add_option("--profile", c.profile, "desk | paper");
  app->add_option("--case", c.case_id, "benchmark case 1-4")->check(CLI::Range(1, 4));
  app->add_option("--seed", c.seed, "RNG seed for sampling and training");
  app->add_option("--out", c.out, "output directory");
  app->add_option("--set", c.sets, "override a config key, key=value (repeatable)");
  app->add_flag_function("--serial", [&c](std::int64_t) { c.serial = true; }, "single worker for every phase");
  app->add_flag_function("-v,--verbose", [&c](std::int64_t n) { c.verbose = static_cast<int>(n); }, "debug logging; twice for per-iteration trace");
}

// Precedence: profile defaults < config file < --set < dedicated flags.
PipelineConfig resolve(const Common& c) {
  PipelineConfig cfg = PipelineConfig::profile_defaults(c.profile.empty() ? "desk" : c.profile);
  if (!c.config_file.empty()) cfg.load_yaml(c.config_file);
  if (!c.profile.empty() && cfg.profile != c.profile) {
    // the file selected another profile; the flag wins, keep the file's other keys
    PipelineConfig again = PipelineConfig::profile_defaults(c.profile);
    if (!c.config_file.empty()) {
      again.load_yaml(c.config_file);
      again.set("profile", c.profile);
    }
    cfg = again;
  }
  for (const auto& kv : c.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (c.case_id) cfg.case_id = *c.case_id;
  if (c.seed) cfg.seed = *c.seed;
  if (!c.out.empty()) cfg.out_dir = c.out;
  if (c.serial) cfg.serial = true;
  return cfg;
}

std::vector<char> log_flags(const BenchmarkCase& b) {
  std::vector<char> f;
  for (const auto& a : b.axes) f.push_back(a.log_spaced ? 1 : 0);
  return f;
}

std::vector<Matrix> read_batch(const fs::path& dir, int m, FieldId f, std::uint64_t hash, ParameterSet* mus) {
  std::vector<Matrix> out;
  for (int i = 0; i < m; ++i) {
    SnapshotFile s = read_snapshot(snapshot_path(dir, i, f));
    if (s.hash != hash) {
      throw std::runtime_error(snapshot_path(dir, i, f).string() +
                               " was produced with a different FOM configuration (hash mismatch)");
    }
    if (mus && f == FieldId::Displacement) mus->push_back(s.mu);
    out.push_back(std::move(s.data));
  }
  return out;
}

// Package an artifact once both fields have a basis and a trained network.
bool try_package(const PipelineConfig& cfg, const CaseContext& ctx) {
  const fs::path& o = cfg.out_dir;
  for (const char* n : {"basis_u.bin", "basis_p.bin", "mlp_u.bin", "mlp_p.bin"})
    if (!fs::exists(o / n)) return false;
  RomArtifact a;
  a.case_id = cfg.case_id;
  a.mesh = cfg.mesh;
  a.times = ctx.schedule.times;
  a.box = ctx.bench->axes;
  a.inner_product = cfg.inner_product;
  a.fom_hash = cfg.fom_hash();
  a.config_hash = cfg.config_hash();
  for (FieldId f : {FieldId::Displacement, FieldId::Pressure}) {
    const std::string tag = to_string(f);
    std::uint64_t h = 0;
    FieldModel& m = f == FieldId::Displacement ? a.u : a.p;
    m.basis = read_basis(o / ("basis_" + tag + ".bin"), &h);
    MlpFile mf = read_mlp(o / ("mlp_" + tag + ".bin"));
    if (h != a.fom_hash || mf.hash != a.fom_hash) return false;
    m.net = std::move(mf.net);
    m.input_norm = std::move(mf.input_norm);
    m.output_norm = std::move(mf.output_norm);
  }
  a.inner_product = a.u.basis.inner_product;
  save_artifact(o / "artifact", a);
  spdlog::info("packaged artifact in {}", (o / "artifact").string());
  return true;
}

// Context for online commands: the artifact fixes case, mesh and time grid; the FOM settings must agree.
CaseContext online_context(PipelineConfig cfg, const RomArtifact& a) {
  cfg.case_id = a.case_id;
  cfg.mesh = a.mesh;
  CaseContext ctx = make_context(cfg);
  ctx.schedule.times = a.times;
  ctx.schedule.final_time = a.times.back();
  return ctx;
}

void require_matching_hash(const PipelineConfig& cfg, const CaseContext& ctx, const RomArtifact& a) {
  if (ctx.schedule.times != a.times) throw std::runtime_error("time grid differs from the artifact");
  if (cfg.fom_hash() != a.fom_hash) {
    throw std::runtime_error("FOM configuration hash " + hex_hash(cfg.fom_hash()) + " does not match artifact hash " +
                             hex_hash(a.fom_hash) + "; pass the same case/mesh/time/fom settings used offline");
  }
}

PipelineConfig artifact_config(PipelineConfig cfg, const RomArtifact& a) {
  cfg.case_id = a.case_id;
  cfg.mesh = a.mesh;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"biotrom: POD + neural-network reduced-order models for parametric poroelasticity"};
  app.require_subcommand(1);
  Common common;

  auto* sample = app.add_subcommand("sample", "write the training parameter grid as CSV");
  add_common(sample, common);

  auto* fom = app.add_subcommand("fom", "run the full-order model (one --mu, or the whole training set)");
  add_common(fom, common);
  std::string mu_text;
  fom->add_option("--mu", mu_text, "comma-separated parameter values");

  auto* pod = app.add_subcommand("pod", "compress training snapshots into reduced bases");
  add_common(pod, common);
  std::string variant, nint_text;
  std::optional<int> n_modes;
  pod->add_option("--variant", variant, "standard | nested");
  pod->add_option("--nint", nint_text, "intermediate modes per trajectory (integer or inf)");
  pod->add_option("--n", n_modes, "number of reduced modes");

  auto* project = app.add_subcommand("project", "project snapshots onto the bases to build coefficient tables");
  add_common(project, common);

  auto* train = app.add_subcommand("train", "train the coefficient regressor for one field");
  add_common(train, common);
  std::string train_field_name = "u";
  std::optional<int> nhl, nnn, epochs;
  train->add_option("--field", train_field_name, "u | p")->check(CLI::IsMember({"u", "p"}));
  train->add_option("--nhl", nhl, "hidden layers");
  train->add_option("--nnn", nnn, "neurons per hidden layer");
  train->add_option("--epochs", epochs, "training epochs");

  auto* predict = app.add_subcommand("predict", "reconstruct ROM fields at a parameter point");
  add_common(predict, common);
  std::string artifact_dir;
  std::optional<double> t_query;
  bool all_steps = false;
  predict->add_option("--artifact", artifact_dir, "artifact directory")->required();
  predict->add_option("--mu", mu_text, "comma-separated parameter values")->required();
  auto* t_opt = predict->add_option("--t", t_query, "single query time");
  predict->add_flag("--all-steps", all_steps, "every step of the training time grid")->excludes(t_opt);

  auto* evaluate = app.add_subcommand("evaluate", "compare ROM against the FOM at a parameter point (CSV)");
  add_common(evaluate, common);
  std::string reference_dir;
  evaluate->add_option("--artifact", artifact_dir, "artifact directory")->required();
  evaluate->add_option("--mu", mu_text, "comma-separated parameter values")->required();
  evaluate->add_option("--reference", reference_dir, "directory with u.bin/p.bin from `fom --mu` (else the FOM is run)");

  auto* sweep = app.add_subcommand("sweep", "sensitivity analysis over random test parameters");
  add_common(sweep, common);
  int queries = 100;
  std::optional<double> offline_seconds;
  bool no_reference = false;
  sweep->add_option("--artifact", artifact_dir, "artifact directory")->required();
  sweep->add_option("--count", queries, "number of random test parameters")->check(CLI::PositiveNumber);
  sweep->add_option("--offline-seconds", offline_seconds, "offline cost for break-even (default: timings.csv)");
  sweep->add_flag("--no-reference", no_reference, "ROM timing only, skip FOM error statistics");

  auto* offline = app.add_subcommand("offline", "sample, fom, pod, project and train in one go");
  add_common(offline, common);

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(common.verbose >= 2 ? spdlog::level::trace : common.verbose == 1 ? spdlog::level::debug : spdlog::level::info);

  try {
    PipelineConfig cfg = resolve(common);
    const fs::path out = cfg.out_dir;

    if (*sample) {
      const auto& b = benchmark_case(cfg.case_id);
      fs::create_directories(out);
      const auto mus = sample_training_set(b.axes, cfg.num_train);
      write_parameter_csv(out / "training_set.csv", b.axes, mus);
      std::cout << (out / "training_set.csv").string() << "\n";
    } else if (*fom) {
      CaseContext ctx = make_context(cfg);
      if (!mu_text.empty()) {
        const auto mu = parse_parameter_list(mu_text);
        ctx.bench->check_parameters(mu);
        const Trajectory t = run_trajectory(ctx, mu);
        const auto h = cfg.fom_hash();
        write_snapshot(out / "u.bin", {FieldId::Displacement, mu, ctx.schedule.times, h, t.u});
        write_snapshot(out / "p.bin", {FieldId::Pressure, mu, ctx.schedule.times, h, t.p});
        std::cout << "wrote " << (out / "u.bin").string() << " and p.bin (" << t.u.cols() << " steps)\n";
      } else {
        const auto mus = sample_training_set(ctx.bench->axes, cfg.num_train);
        fs::create_directories(out);
        write_parameter_csv(out / "training_set.csv", ctx.bench->axes, mus);
        const auto batch = load_or_run_snapshots(ctx, mus, out / "snapshots");
        std::printf("%zu trajectories (%d reused), %.3f s\n", mus.size(), batch.reused, batch.fom_seconds);
      }
    } else if (*pod) {
      if (!variant.empty()) cfg.set("pod.variant", variant);
      if (!nint_text.empty()) cfg.set("pod.n_int", nint_text);
      if (n_modes) cfg.n_modes = *n_modes;
      CaseContext ctx = make_context(cfg);
      for (FieldId f : {FieldId::Displacement, FieldId::Pressure}) {
        const auto snaps = read_batch(out / "snapshots", cfg.num_train, f, cfg.fom_hash(), nullptr);
        const InnerProduct ip = field_inner_product(*ctx.mesh, f, cfg.inner_product);
        const ReducedBasis b = compute_basis(cfg, snaps, ip, f);
        write_basis(out / (std::string("basis_") + to_string(f) + ".bin"), b, cfg.fom_hash());
        std::ofstream ev(out / (std::string("eigenvalues_") + to_string(f) + ".csv"));
        ev << "index,normalized_eigenvalue\n";
        const Vector lam = normalized_eigenvalues(b);
        for (Eigen::Index i = 0; i < lam.size(); ++i) ev << i + 1 << "," << lam[i] << "\n";
        std::printf("%s: %d modes\n", to_string(f), b.size());
      }
    } else if (*project) {
      CaseContext ctx = make_context(cfg);
      for (FieldId f : {FieldId::Displacement, FieldId::Pressure}) {
        ParameterSet mus;
        const auto snaps = read_batch(out / "snapshots", cfg.num_train, f, cfg.fom_hash(), &mus);
        if (f == FieldId::Pressure) mus = sample_training_set(ctx.bench->axes, cfg.num_train);
        std::uint64_t h = 0;
        const ReducedBasis b = read_basis(out / (std::string("basis_") + to_string(f) + ".bin"), &h);
        if (h != cfg.fom_hash()) throw std::runtime_error("basis hash does not match the configuration");
        const InnerProduct ip = field_inner_product(*ctx.mesh, f, b.inner_product);
        const Projector proj(b.modes, ip);
        const CoefficientTable tab = build_table(snaps, mus, ctx.schedule.times, proj, f, log_flags(*ctx.bench));
        write_table(out / (std::string("table_") + to_string(f) + ".bin"), tab, h);
        std::printf("%s: %d rows x %d coefficients\n", to_string(f), tab.rows(), tab.n);
      }
    } else if (*train) {
      if (nhl) cfg.n_hidden_layers = *nhl;
      if (nnn) cfg.n_neurons = *nnn;
      if (epochs) cfg.train.epochs = *epochs;
      const FieldId f = parse_field(train_field_name);
      std::uint64_t h = 0;
      const CoefficientTable tab = read_table(out / (std::string("table_") + to_string(f) + ".bin"), &h);
      if (h != cfg.fom_hash()) throw std::runtime_error("table hash does not match the configuration");
      const TrainResult r = train_field(cfg, tab);
      write_mlp(out / (std::string("mlp_") + to_string(f) + ".bin"), {r.best, tab.input_norm, tab.output_norm, h});
      std::printf("%s: best validation loss %.4e at epoch %d\n", to_string(f), r.report.best_validation_loss,
                  r.report.best_epoch);
      try_package(cfg, make_context(cfg));
    } else if (*predict) {
      const RomArtifact a = load_artifact(artifact_dir);
      const auto mu = parse_parameter_list(mu_text);
      fs::create_directories(out);
      if (t_query) {
        const auto [u, p] = reconstruct(a, *t_query, mu);
        write_snapshot(out / "u.bin", {FieldId::Displacement, mu, {*t_query}, a.fom_hash, Matrix(u)});
        write_snapshot(out / "p.bin", {FieldId::Pressure, mu, {*t_query}, a.fom_hash, Matrix(p)});
      } else {
        const Trajectory t = predict_trajectory(a, mu);
        write_snapshot(out / "u.bin", {FieldId::Displacement, mu, a.times, a.fom_hash, t.u});
        write_snapshot(out / "p.bin", {FieldId::Pressure, mu, a.times, a.fom_hash, t.p});
      }
      std::cout << "wrote " << (out / "u.bin").string() << " and p.bin\n";
    } else if (*evaluate) {
      const RomArtifact a = load_artifact(artifact_dir);
      cfg = artifact_config(cfg, a);
      const CaseContext ctx = online_context(cfg, a);
      require_matching_hash(cfg, ctx, a);
      const auto mu = parse_parameter_list(mu_text);
      Trajectory ref;
      if (!reference_dir.empty()) {
        SnapshotFile su = read_snapshot(fs::path(reference_dir) / "u.bin");
        SnapshotFile sp = read_snapshot(fs::path(reference_dir) / "p.bin");
        if (su.hash != a.fom_hash || sp.hash != a.fom_hash)
          throw std::runtime_error("reference snapshots were produced with a different FOM configuration");
        if (su.mu != mu) throw std::runtime_error("reference snapshots were computed for different parameters");
        ref = {std::move(su.data), std::move(sp.data)};
      } else {
        ref = run_trajectory(ctx, mu);
      }
      const Trajectory rom = predict_trajectory(a, mu);
      const InnerProduct ip_u = field_inner_product(*ctx.mesh, FieldId::Displacement, a.inner_product);
      const InnerProduct ip_p = field_inner_product(*ctx.mesh, FieldId::Pressure, a.inner_product);
      const ErrorSeries e = error_series(a.times, ref.u, rom.u, ref.p, rom.p, ip_u, ip_p);
      fs::create_directories(out);
      write_error_csv(out / "errors.csv", e);
      std::printf("mean MSE u %.4e, p %.4e; max ME u %.4e, p %.4e -> %s\n", e.mean_mse_u(), e.mean_mse_p(),
                  e.max_me_u(), e.max_me_p(), (out / "errors.csv").c_str());
    } else if (*sweep) {
      const RomArtifact a = load_artifact(artifact_dir);
      cfg = artifact_config(cfg, a);
      const CaseContext ctx = online_context(cfg, a);
      require_matching_hash(cfg, ctx, a);
      const auto mus = random_parameters(a.box, queries, cfg.seed);
      const SweepResult s = sensitivity_sweep(a, ctx, mus, !no_reference);
      fs::create_directories(out);
      write_parameter_csv(out / "sweep_parameters.csv", a.box, mus);
      if (!no_reference) write_sweep_csv(out / "sweep_quartiles.csv", s);
      double off = offline_seconds.value_or(std::nan(""));
      if (!offline_seconds) {
        std::ifstream tin(fs::path(artifact_dir).parent_path() / "timings.csv");
        std::string line;
        while (std::getline(tin, line))
          if (line.rfind("total,", 0) == 0) off = std::stod(line.substr(6));
      }
      const double be = std::isnan(off) ? off : break_even_queries(off, s.fom_seconds_per_query, s.rom_seconds_per_query);
      std::ofstream ts(out / "sweep_timing.csv");
      ts << "queries,fom_seconds_per_query,rom_seconds_per_query,speedup,offline_seconds,break_even_queries\n"
         << s.queries << "," << s.fom_seconds_per_query << "," << s.rom_seconds_per_query << ","
         << s.fom_seconds_per_query / s.rom_seconds_per_query << "," << off << "," << be << "\n";
      std::printf("FOM %.4e s/query, ROM %.4e s/query, break-even after %g queries\n", s.fom_seconds_per_query,
                  s.rom_seconds_per_query, be);
    } else if (*offline) {
      const OfflineResult r = run_offline(cfg);
      std::printf("offline done: fom %.2f s, pod %.2f s, ann %.2f s, total %.2f s; artifact in %s\n", r.timings.fom,
                  r.timings.pod, r.timings.ann, r.timings.total, (out / "artifact").c_str());
    }
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
