#include "biotrom/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <spdlog/spdlog.h>

#include "biotrom/binary_io.hpp"

namespace biotrom {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double axis_value(const ParameterAxis& a, double s) {
  if (a.log_spaced) return std::pow(10.0, std::log10(a.lo) + s * (std::log10(a.hi) - std::log10(a.lo)));
  return a.lo + s * (a.hi - a.lo);
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

ParameterSet sample_training_set(const std::vector<ParameterAxis>& axes, int m) {
  if (axes.empty()) throw std::invalid_argument("sample: no parameter axes");
  if (m < 1) throw std::invalid_argument("sample: M must be >= 1");
  const int p = static_cast<int>(axes.size());
  const int k = static_cast<int>(std::lround(std::pow(static_cast<double>(m), 1.0 / p)));
  long kp = 1;
  for (int i = 0; i < p; ++i) kp *= k;
  if (kp != m) {
    long below = 1, above = 1;
    for (int i = 0; i < p; ++i) below *= std::max(1, k - (kp > m ? 1 : 0));
    for (int i = 0; i < p; ++i) above *= k + (kp < m ? 1 : 0);
    throw std::invalid_argument("sample: M = " + std::to_string(m) + " is not a perfect power for a " +
                                std::to_string(p) + "-parameter tensor grid; try M = " + std::to_string(below) +
                                " or " + std::to_string(above));
  }
  ParameterSet out;
  out.reserve(m);
  std::vector<int> idx(p, 0);
  for (int n = 0; n < m; ++n) {
    int rem = n;
    for (int a = p - 1; a >= 0; --a) {
      idx[a] = rem % k;
      rem /= k;
    }
    std::vector<double> mu(p);
    for (int a = 0; a < p; ++a) mu[a] = k == 1 ? axis_value(axes[a], 0.5) : axis_value(axes[a], double(idx[a]) / (k - 1));
    out.push_back(std::move(mu));
  }
  return out;
}

ParameterSet random_parameters(const std::vector<ParameterAxis>& axes, int count, std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("random_parameters: count must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ParameterSet out(count);
  for (auto& mu : out)
    for (const auto& a : axes) mu.push_back(axis_value(a, u(rng)));
  return out;
}

std::vector<double> parse_parameter_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      out.push_back(std::stod(item, &pos));
      if (pos != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw std::invalid_argument("cannot parse parameter value '" + item + "'");
    }
  }
  if (out.empty()) throw std::invalid_argument("empty parameter list");
  return out;
}

Mesh make_mesh(const MeshSpec& spec) { return build_unit_square_mesh(spec.n_x, true, spec.crossed_squares); }

CaseContext make_context(const PipelineConfig& cfg) {
  CaseContext ctx;
  ctx.config = cfg;
  ctx.bench = &benchmark_case(cfg.case_id);
  ctx.mesh = std::make_unique<Mesh>(make_mesh(cfg.mesh));
  ctx.schedule = cfg.schedule();
  if (ctx.bench->permeability == PermeabilityKind::Cellwise) {
    if (!cfg.field_file.empty()) {
      ctx.field = read_permeability_file(cfg.field_file, ctx.mesh->num_cells());
    } else {
      LogNormalFieldOptions o;
      o.seed = cfg.field_seed;
      ctx.field = generate_lognormal_field(*ctx.mesh, o);
    }
  }
  return ctx;
}

Trajectory run_trajectory(const CaseContext& ctx, std::span<const double> mu) {
  const auto states = run_fom(*ctx.bench, mu, ctx.schedule, *ctx.mesh, ctx.config.fom, ctx.field_ptr());
  Trajectory t;
  t.u.resize(states.front().u.size(), static_cast<Eigen::Index>(states.size()));
  t.p.resize(states.front().p.size(), static_cast<Eigen::Index>(states.size()));
  for (std::size_t k = 0; k < states.size(); ++k) {
    t.u.col(k) = states[k].u;
    t.p.col(k) = states[k].p;
  }
  return t;
}

std::filesystem::path snapshot_path(const std::filesystem::path& dir, int index, FieldId f) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "traj_%05d_%s.bin", index, to_string(f));
  return dir / buf;
}

SnapshotBatch load_or_run_snapshots(const CaseContext& ctx, const ParameterSet& mus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const std::uint64_t hash = ctx.config.fom_hash();
  const int m = static_cast<int>(mus.size());
  SnapshotBatch batch;
  batch.mus = mus;
  batch.u.resize(m);
  batch.p.resize(m);

  auto reusable = [&](int i, FieldId f) {
    const auto path = snapshot_path(dir, i, f);
    if (!std::filesystem::exists(path)) return false;
    try {
      const auto h = read_snapshot_header(path);
      return h.hash == hash && h.field == f && h.mu == mus[i] && h.times == ctx.schedule.times;
    } catch (const std::exception&) {
      return false;
    }
  };

  std::vector<int> todo;
  for (int i = 0; i < m; ++i) {
    if (reusable(i, FieldId::Displacement) && reusable(i, FieldId::Pressure)) {
      batch.u[i] = read_snapshot(snapshot_path(dir, i, FieldId::Displacement)).data;
      batch.p[i] = read_snapshot(snapshot_path(dir, i, FieldId::Pressure)).data;
      ++batch.reused;
    } else {
      todo.push_back(i);
    }
  }
  if (batch.reused > 0) spdlog::info("reusing {} of {} snapshot trajectories", batch.reused, m);

  const auto t0 = Clock::now();
  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  std::exception_ptr first_error;
  auto worker = [&] {
    while (true) {
      const std::size_t k = next.fetch_add(1);
      if (k >= todo.size()) return;
      const int i = todo[k];
      try {
        Trajectory t = run_trajectory(ctx, mus[i]);
        write_snapshot(snapshot_path(dir, i, FieldId::Displacement),
                       {FieldId::Displacement, mus[i], ctx.schedule.times, hash, t.u});
        write_snapshot(snapshot_path(dir, i, FieldId::Pressure), {FieldId::Pressure, mus[i], ctx.schedule.times, hash, t.p});
        batch.u[i] = std::move(t.u);
        batch.p[i] = std::move(t.p);
        spdlog::debug("trajectory {} done", i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
        next = todo.size();
      }
    }
  };
  const int workers = std::max(1, std::min<int>(ctx.config.resolved_workers(), static_cast<int>(todo.size())));
  if (!todo.empty()) {
    std::vector<std::thread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);
  batch.fom_seconds = seconds_since(t0);
  batch.fom_seconds_per_run = todo.empty() ? 0.0 : batch.fom_seconds * workers / static_cast<double>(todo.size());
  return batch;
}

ReducedBasis compute_basis(const PipelineConfig& cfg, const std::vector<Matrix>& snaps, const InnerProduct& ip,
                           FieldId f) {
  if (cfg.pod_variant == "standard" || cfg.n_int == 0) return standard_pod(snaps, cfg.n_modes, ip, f);
  return nested_pod(snaps, cfg.n_int, cfg.n_modes, ip, f);
}

TrainResult train_field(const PipelineConfig& cfg, const CoefficientTable& table) {
  MlpParams net = init_mlp(cfg.n_hidden_layers, cfg.n_neurons, 1 + table.p, table.n, cfg.seed, cfg.activation);
  TrainOptions opts = cfg.train;
  opts.seed = cfg.seed;
  return train_mlp(std::move(net), table.input_norm.forward_rows(table.inputs), table.output_norm.forward_rows(table.outputs),
                   opts);
}

namespace {

void write_report_csv(const std::filesystem::path& path, const TrainReport& r) {
  std::ofstream out(path);
  out << "epoch,train_loss,validation_loss\n";
  out.precision(10);
  for (std::size_t e = 0; e < r.train_loss.size(); ++e) out << e << "," << r.train_loss[e] << "," << r.validation_loss[e] << "\n";
}

}  // namespace

OfflineResult train_rom(const PipelineConfig& cfg, const CaseContext& ctx, const SnapshotBatch& batch, bool persist) {
  OfflineResult res;
  const auto& out = cfg.out_dir;
  const std::uint64_t hash = cfg.fom_hash();
  const InnerProduct ip_u = field_inner_product(*ctx.mesh, FieldId::Displacement, cfg.inner_product);
  const InnerProduct ip_p = field_inner_product(*ctx.mesh, FieldId::Pressure, cfg.inner_product);
  auto t0 = Clock::now();
  ReducedBasis bu = compute_basis(cfg, batch.u, ip_u, FieldId::Displacement);
  ReducedBasis bp = compute_basis(cfg, batch.p, ip_p, FieldId::Pressure);
  res.timings.pod = seconds_since(t0);
  if (persist) {
    write_basis(out / "basis_u.bin", bu, hash);
    write_basis(out / "basis_p.bin", bp, hash);
  }

  t0 = Clock::now();
  std::vector<char> log_flags;
  for (const auto& a : ctx.bench->axes) log_flags.push_back(a.log_spaced ? 1 : 0);
  const Projector proj_u(bu.modes, ip_u), proj_p(bp.modes, ip_p);
  const CoefficientTable tab_u =
      build_table(batch.u, batch.mus, ctx.schedule.times, proj_u, FieldId::Displacement, log_flags);
  const CoefficientTable tab_p = build_table(batch.p, batch.mus, ctx.schedule.times, proj_p, FieldId::Pressure, log_flags);
  if (persist) {
    write_table(out / "table_u.bin", tab_u, hash);
    write_table(out / "table_p.bin", tab_p, hash);
  }
  TrainResult tu = train_field(cfg, tab_u);
  TrainResult tp = train_field(cfg, tab_p);
  res.timings.ann = seconds_since(t0);
  if (persist) {
    write_report_csv(out / "train_report_u.csv", tu.report);
    write_report_csv(out / "train_report_p.csv", tp.report);
  }

  RomArtifact& a = res.artifact;
  a.case_id = cfg.case_id;
  a.mesh = cfg.mesh;
  a.times = ctx.schedule.times;
  a.box = ctx.bench->axes;
  a.inner_product = cfg.inner_product;
  a.fom_hash = hash;
  a.config_hash = cfg.config_hash();
  a.u = {std::move(bu), std::move(tu.best), tab_u.input_norm, tab_u.output_norm};
  a.p = {std::move(bp), std::move(tp.best), tab_p.input_norm, tab_p.output_norm};
  res.report_u = std::move(tu.report);
  res.report_p = std::move(tp.report);
  res.timings.fom = batch.fom_seconds;
  res.reused_snapshots = batch.reused;
  return res;
}

OfflineResult run_offline(const PipelineConfig& cfg) {
  const auto t_total = Clock::now();
  CaseContext ctx = make_context(cfg);
  const auto& out = cfg.out_dir;
  std::filesystem::create_directories(out);

  const ParameterSet mus = sample_training_set(ctx.bench->axes, cfg.num_train);
  write_parameter_csv(out / "training_set.csv", ctx.bench->axes, mus);

  spdlog::info("offline: {} FOM trajectories, {} cells, {} steps", mus.size(), ctx.mesh->num_cells(),
               ctx.schedule.num_steps());
  const SnapshotBatch batch = load_or_run_snapshots(ctx, mus, out / "snapshots");
  OfflineResult res = train_rom(cfg, ctx, batch, true);
  save_artifact(out / "artifact", res.artifact);

  res.timings.total = seconds_since(t_total);
  std::ofstream tcsv(out / "timings.csv");
  tcsv << "phase,seconds\n"
       << "train_fom_snapshots," << res.timings.fom << "\n"
       << "perform_pod," << res.timings.pod << "\n"
       << "train_ann," << res.timings.ann << "\n"
       << "total," << res.timings.total << "\n";
  return res;
}

Trajectory predict_trajectory(const RomArtifact& a, std::span<const double> mu, bool warn) {
  if (mu.size() != a.box.size()) throw std::invalid_argument("predict: parameter count mismatch");
  const auto nt = static_cast<Eigen::Index>(a.times.size());
  Trajectory t;
  for (FieldId f : {FieldId::Displacement, FieldId::Pressure}) {
    const FieldModel& m = a.field(f);
    Matrix x(1 + static_cast<Eigen::Index>(mu.size()), nt);
    for (Eigen::Index k = 0; k < nt; ++k) {
      Vector raw(x.rows());
      raw[0] = a.times[k];
      for (std::size_t j = 0; j < mu.size(); ++j) raw[1 + j] = mu[j];
      x.col(k) = m.input_norm.forward(raw, true, warn && k == 0);
    }
    const Matrix y = forward_batch(m.net, x);
    Matrix theta(y.rows(), nt);
    for (Eigen::Index k = 0; k < nt; ++k) theta.col(k) = m.output_norm.inverse(y.col(k));
    (f == FieldId::Displacement ? t.u : t.p) = m.basis.modes * theta;
  }
  return t;
}

SweepResult sensitivity_sweep(const RomArtifact& a, const CaseContext& ctx, const ParameterSet& mus, bool with_reference) {
  if (mus.empty()) throw std::invalid_argument("sweep: empty test set");
  SweepResult s;
  s.times = a.times;
  s.queries = static_cast<int>(mus.size());
  const auto nt = a.times.size();
  std::vector<std::vector<double>> eu(nt), ep(nt);
  const InnerProduct ip_u = field_inner_product(*ctx.mesh, FieldId::Displacement, a.inner_product);
  const InnerProduct ip_p = field_inner_product(*ctx.mesh, FieldId::Pressure, a.inner_product);
  double rom_time = 0.0, fom_time = 0.0;
  int fom_runs = 0;
  for (std::size_t q = 0; q < mus.size(); ++q) {
    auto t0 = Clock::now();
    const Trajectory rom = predict_trajectory(a, mus[q], false);
    rom_time += seconds_since(t0);
    if (with_reference || q == 0) {
      t0 = Clock::now();
      const Trajectory fom = run_trajectory(ctx, mus[q]);
      fom_time += seconds_since(t0);
      ++fom_runs;
      if (with_reference) {
        const ErrorSeries e = error_series(a.times, fom.u, rom.u, fom.p, rom.p, ip_u, ip_p);
        for (std::size_t k = 0; k < nt; ++k) {
          eu[k].push_back(e.mse_u[k]);
          ep[k].push_back(e.mse_p[k]);
        }
      }
    }
  }
  s.rom_seconds_per_query = rom_time / static_cast<double>(mus.size());
  s.fom_seconds_per_query = fom_time / static_cast<double>(fom_runs);
  if (with_reference) {
    for (std::size_t k = 0; k < nt; ++k) {
      s.mse_u.push_back(box_stats(eu[k]));
      s.mse_p.push_back(box_stats(ep[k]));
    }
  }
  return s;
}

OnlineResult run_online(const RomArtifact& a, const ParameterSet& queries, const CaseContext* ctx, bool with_reference) {
  if (ctx && ctx->config.case_id != a.case_id) {
    throw std::invalid_argument("online: artifact is for case " + std::to_string(a.case_id) + ", queries for case " +
                                std::to_string(ctx->config.case_id));
  }
  if (with_reference && !ctx) throw std::invalid_argument("online: references need a case context");
  OnlineResult r;
  const auto t0 = Clock::now();
  for (const auto& mu : queries) r.predictions.push_back(predict_trajectory(a, mu, true));
  r.rom_seconds = seconds_since(t0);
  if (with_reference) {
    const InnerProduct ip_u = field_inner_product(*ctx->mesh, FieldId::Displacement, a.inner_product);
    const InnerProduct ip_p = field_inner_product(*ctx->mesh, FieldId::Pressure, a.inner_product);
    for (std::size_t q = 0; q < queries.size(); ++q) {
      const Trajectory ref = run_trajectory(*ctx, queries[q]);
      const Trajectory& rom = r.predictions[q];
      r.errors.push_back(error_series(a.times, ref.u, rom.u, ref.p, rom.p, ip_u, ip_p));
    }
  }
  return r;
}

ErrorDecomposition error_decomposition_study(const RomArtifact& a, const CaseContext& ctx, const SnapshotBatch& train,
                                             const ParameterSet& mu_train, const ParameterSet& mu_test,
                                             const std::vector<Trajectory>* test_refs) {
  if (test_refs && test_refs->size() != mu_test.size()) throw std::invalid_argument("decomposition: reference count mismatch");
  const InnerProduct ip_u = field_inner_product(*ctx.mesh, FieldId::Displacement, a.inner_product);
  const InnerProduct ip_p = field_inner_product(*ctx.mesh, FieldId::Pressure, a.inner_product);
  const Projector proj_u(a.u.basis.modes, ip_u), proj_p(a.p.basis.modes, ip_p);
  ErrorDecomposition d;
  for (const auto& mu : mu_train) {
    std::size_t i = 0;
    while (i < train.mus.size() && train.mus[i] != mu) ++i;
    if (i == train.mus.size()) throw std::invalid_argument("decomposition: training parameter not in the stored set");
    const Matrix& fu = train.u[i];
    const Matrix& fp = train.p[i];
    const Matrix pu = a.u.basis.modes * proj_u.project_columns(fu);
    const Matrix pp = a.p.basis.modes * proj_p.project_columns(fp);
    d.projection_train.push_back(error_series(a.times, fu, pu, fp, pp, ip_u, ip_p));
    const Trajectory rom = predict_trajectory(a, mu, false);
    d.ann_train.push_back(error_series(a.times, fu, rom.u, fp, rom.p, ip_u, ip_p));
  }
  for (std::size_t q = 0; q < mu_test.size(); ++q) {
    const Trajectory ref = test_refs ? (*test_refs)[q] : run_trajectory(ctx, mu_test[q]);
    const Trajectory rom = predict_trajectory(a, mu_test[q], false);
    d.ann_test.push_back(error_series(a.times, ref.u, rom.u, ref.p, rom.p, ip_u, ip_p));
  }
  return d;
}

double break_even_queries(double offline_seconds, double fom_per_query, double rom_per_query) {
  const double gain = fom_per_query - rom_per_query;
  if (!(gain > 0.0)) return std::numeric_limits<double>::infinity();
  return std::ceil(offline_seconds / gain);
}

std::uint64_t artifact_digest(const std::filesystem::path& dir) {
  std::uint64_t h = fnv1a64("");
  for (const char* name : {"artifact.json", "basis_u.bin", "basis_p.bin", "mlp_u.bin", "mlp_p.bin"}) {
    std::ifstream in(dir / name, std::ios::binary);
    if (!in) throw std::runtime_error("artifact file missing: " + (dir / name).string());
    std::stringstream ss;
    ss << in.rdbuf();
    h = fnv1a64(ss.str(), h);
  }
  return h;
}

void write_error_csv(const std::filesystem::path& path, const ErrorSeries& e) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.precision(12);
  out << "t,mse_u,me_u,mse_p,me_p\n";
  for (std::size_t k = 0; k < e.times.size(); ++k) {
    out << e.times[k] << "," << e.mse_u[k] << "," << e.me_u[k] << "," << e.mse_p[k] << "," << e.me_p[k] << "\n";
  }
}

void write_sweep_csv(const std::filesystem::path& path, const SweepResult& s) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.precision(10);
  out << "t,field,q1,median,q3,whisker_lo,whisker_hi,outliers,count\n";
  for (std::size_t k = 0; k < s.mse_u.size(); ++k) {
    for (const auto& [name, b] : {std::pair{"u", s.mse_u[k]}, std::pair{"p", s.mse_p[k]}}) {
      out << s.times[k] << "," << name << "," << b.q1 << "," << b.median << "," << b.q3 << "," << b.whisker_lo << ","
          << b.whisker_hi << "," << b.outliers << "," << b.count << "\n";
    }
  }
}

void write_parameter_csv(const std::filesystem::path& path, const std::vector<ParameterAxis>& axes,
                         const ParameterSet& mus) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "index";
  for (const auto& a : axes) out << "," << a.name;
  out << "\n";
  for (std::size_t i = 0; i < mus.size(); ++i) {
    out << i;
    for (double v : mus[i]) out << "," << fmt(v);
    out << "\n";
  }
}

}  // namespace biotrom
