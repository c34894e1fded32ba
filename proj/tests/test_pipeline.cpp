#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "biotrom/binary_io.hpp"
#include "biotrom/pipeline.hpp"

using namespace biotrom;
namespace fs = std::filesystem;

namespace {

PipelineConfig tiny_config(const fs::path& out) {
  PipelineConfig c = PipelineConfig::profile_defaults("desk");
  c.case_id = 1;
  c.mesh = {4, 0};
  c.dt0 = c.dt_max = 20.0;
  c.final_time = 100.0;  // N^t = 5
  c.num_train = 4;
  c.n_int = 3;
  c.n_modes = 2;
  c.train.epochs = 50;
  c.fom.max_iter = 300;  // n_x = 4 contracts slowly at low permeability
  c.out_dir = out;
  c.serial = true;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("tensor grid sampling") {
  const std::vector<ParameterAxis> unit{{"a", 0, 1, false}, {"b", 0, 1, false}};
  CHECK(sample_training_set(unit, 4) == ParameterSet{{0, 0}, {0, 1}, {1, 0}, {1, 1}});

  const ParameterSet s = sample_training_set({{"nu", 0.1, 0.4, false}, {"alpha", 0.4, 1.0, false}}, 9);
  REQUIRE(s.size() == 9);
  const double nus[] = {0.1, 0.25, 0.4}, alphas[] = {0.4, 0.7, 1.0};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      CHECK(s[3 * i + j][0] == doctest::Approx(nus[i]));
      CHECK(s[3 * i + j][1] == doctest::Approx(alphas[j]));
    }

  const ParameterSet l = sample_training_set({{"k", 1e-15, 1e-11, true}}, 5);
  for (int i = 0; i < 5; ++i) CHECK(std::log10(l[i][0]) == doctest::Approx(-15.0 + i));

  CHECK_THROWS_WITH(sample_training_set(unit, 24), doctest::Contains("16 or 25"));
  CHECK_THROWS(sample_training_set(unit, 0));
}

TEST_CASE("random parameters stay in the box and are seeded") {
  const auto& b = benchmark_case(1);
  const ParameterSet a = random_parameters(b.axes, 50, 3);
  CHECK(a == random_parameters(b.axes, 50, 3));
  CHECK(a != random_parameters(b.axes, 50, 4));
  for (const auto& mu : a) CHECK_NOTHROW(b.check_parameters(mu));
}

TEST_CASE("parameter list parsing") {
  CHECK(parse_parameter_list("0.25,1e-12") == std::vector<double>{0.25, 1e-12});
  CHECK_THROWS(parse_parameter_list("0.25,abc"));
  CHECK_THROWS(parse_parameter_list(""));
}

TEST_CASE("benchmark registry") {
  CHECK(benchmark_case(1).axes[1].lo == 1e-15);
  CHECK(benchmark_case(1).axes[1].hi == 1e-11);
  CHECK(benchmark_case(2).permeability == PermeabilityKind::AnisotropicUniform);
  CHECK(benchmark_case(3).axes[1].lo == 1e-16);
  CHECK(benchmark_case(3).axes[1].hi == 1e-15);
  CHECK(benchmark_case(4).axes[1].name == "alpha");
  CHECK_THROWS(benchmark_case(5));
  CHECK_THROWS(benchmark_case(1).check_parameters(std::vector<double>{0.45, 1e-12}));
  const BoundaryConditions bc = benchmark_boundary_conditions();
  CHECK(bc.momentum_on(BoundaryLabel::Top).kind == MomentumBC::Kind::Traction);
  CHECK(bc.momentum_on(BoundaryLabel::Top).value[1] == -1000.0);
  CHECK(bc.mass_on(BoundaryLabel::Top).kind == MassBC::Kind::Dirichlet);
  CHECK(bc.mass_on(BoundaryLabel::Left).kind == MassBC::Kind::Flux);
}

TEST_CASE("config: profiles, overrides and hashes") {
  PipelineConfig d = PipelineConfig::profile_defaults("desk");
  CHECK(d.mesh.n_x == 20);
  CHECK(d.num_train == 25);
  CHECK(d.schedule().num_steps() == 50);
  CHECK(d.train.epochs == 2000);
  PipelineConfig p = PipelineConfig::profile_defaults("paper");
  CHECK(make_mesh(p.mesh).num_cells() == 2370);
  CHECK(p.num_train == 100);
  CHECK(p.train.epochs == 20000);
  CHECK_THROWS(PipelineConfig::profile_defaults("laptop"));

  PipelineConfig c = d;
  c.set("pod.n_int", "inf");
  CHECK(c.n_int == 0);
  c.set("net.activation", "relu");
  CHECK(c.activation == Activation::Relu);
  CHECK_THROWS(c.set("net.bogus", "1"));
  CHECK_THROWS(c.set("mesh.n_x", "ten"));

  const auto h = d.fom_hash();
  PipelineConfig e = d;
  e.train.epochs = 10;
  e.seed = 99;
  CHECK(e.fom_hash() == h);
  CHECK(e.config_hash() != d.config_hash());
  e.mesh.n_x = 22;
  CHECK(e.fom_hash() != h);
  e = d;
  e.out_dir = "/elsewhere";
  e.workers = 7;
  CHECK(e.config_hash() == d.config_hash());

  // FNV-1a reference values
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(hex_hash(0xabcULL) == "0000000000000abc");
}

TEST_CASE("config: YAML with nested and dotted keys") {
  const fs::path f = fs::temp_directory_path() / "biotrom_test_cfg.yaml";
  std::ofstream(f) << "profile: desk\ncase: 3\nmesh:\n  n_x: 12\npod.n: 7\nnet:\n  epochs: 33\n";
  PipelineConfig c = PipelineConfig::profile_defaults("paper");
  c.load_yaml(f);
  CHECK(c.profile == "desk");
  CHECK(c.case_id == 3);
  CHECK(c.mesh.n_x == 12);
  CHECK(c.n_modes == 7);
  CHECK(c.train.epochs == 33);
  CHECK(c.num_train == 25);
  std::ofstream(f) << "net:\n  nonsense: 1\n";
  CHECK_THROWS(c.load_yaml(f));
  fs::remove(f);
}

TEST_CASE("worker count comes from the environment") {
  PipelineConfig c;
  setenv("BIOTROM_WORKERS", "3", 1);
  CHECK(c.resolved_workers() == 3);
  c.serial = true;
  CHECK(c.resolved_workers() == 1);
  unsetenv("BIOTROM_WORKERS");
}

TEST_CASE("binary formats round trip and reject garbage") {
  const fs::path dir = fs::temp_directory_path() / "biotrom_test_io";
  fs::create_directories(dir);
  Matrix d(3, 2);
  d << 1, 2, 3, 4, 5, 6;
  write_snapshot(dir / "s.bin", {FieldId::Pressure, {0.25, 1e-12}, {0.0, 20.0}, 77, d});
  const SnapshotFile s = read_snapshot(dir / "s.bin");
  CHECK(s.field == FieldId::Pressure);
  CHECK(s.mu == std::vector<double>{0.25, 1e-12});
  CHECK(s.times == std::vector<double>{0.0, 20.0});
  CHECK(s.hash == 77);
  CHECK(s.data == d);
  CHECK(read_snapshot_header(dir / "s.bin").data.cols() == 0);
  CHECK_THROWS(write_snapshot(dir / "x.bin", {FieldId::Pressure, {}, {0.0}, 0, d}));

  // column-major payload right after the header
  const auto size = fs::file_size(dir / "s.bin");
  CHECK(size == 8 + 4 + 3 * 8 + 2 * 8 + 2 * 8 + 8 + 6 * 8);

  // truncation and wrong magic
  fs::resize_file(dir / "s.bin", size - 5);
  CHECK_THROWS(read_snapshot(dir / "s.bin"));
  std::ofstream(dir / "junk.bin") << "NOTABASISFILE";
  CHECK_THROWS(read_basis(dir / "junk.bin"));
  CHECK_THROWS(read_mlp(dir / "junk.bin"));
  CHECK_THROWS(read_table(dir / "junk.bin"));

  ReducedBasis b;
  b.field = FieldId::Displacement;
  b.inner_product = InnerProductKind::Euclidean;
  b.modes = d;
  b.singular_values = Vector::LinSpaced(4, 4, 1);
  b.n_int = 5;
  write_basis(dir / "b.bin", b, 42);
  std::uint64_t h = 0;
  const ReducedBasis rb = read_basis(dir / "b.bin", &h);
  CHECK(h == 42);
  CHECK(rb.modes == b.modes);
  CHECK(rb.singular_values == b.singular_values);
  CHECK(rb.n_int == 5);
  CHECK(rb.inner_product == InnerProductKind::Euclidean);

  const MlpParams net = init_mlp(2, 3, 3, 2, 5, Activation::Relu);
  Matrix rows(2, 3);
  rows << 0, 0.1, 1e-15, 1, 0.4, 1e-11;
  MlpFile mf{net, Normalizer::fit(rows, {0, 0, 1}), Normalizer::fit(Matrix(rows.leftCols(2))), 9};
  write_mlp(dir / "m.bin", mf);
  const MlpFile rm = read_mlp(dir / "m.bin");
  CHECK(rm.net.sizes == net.sizes);
  CHECK(rm.net.activation == Activation::Relu);
  CHECK(rm.net.seed == 5);
  CHECK(rm.hash == 9);
  for (int l = 0; l < net.num_layers(); ++l) CHECK(rm.net.weights[l] == net.weights[l]);
  CHECK(rm.input_norm.log_scale == mf.input_norm.log_scale);
  CHECK(rm.input_norm.hi == mf.input_norm.hi);
  fs::remove_all(dir);
}

TEST_CASE("offline chain on a tiny config, determinism and resume") {
  const fs::path out = fs::temp_directory_path() / "biotrom_test_offline";
  fs::remove_all(out);
  const PipelineConfig cfg = tiny_config(out);
  const OfflineResult r = run_offline(cfg);
  CHECK(r.reused_snapshots == 0);
  const RomArtifact a = load_artifact(out / "artifact");
  CHECK(a.u.basis.size() == 2);
  CHECK(a.p.basis.size() == 2);
  CHECK(a.times.size() == 6);
  CHECK(a.fom_hash == cfg.fom_hash());
  const auto digest = artifact_digest(out / "artifact");

  // timing report: three offline categories plus total
  const std::string t = slurp(out / "timings.csv");
  CHECK(t.rfind("phase,seconds\n", 0) == 0);
  for (const char* row : {"train_fom_snapshots,", "perform_pod,", "train_ann,", "total,"})
    CHECK(t.find(row) != std::string::npos);
  CHECK(std::count(t.begin(), t.end(), '\n') == 5);

  // rerun reuses everything and reproduces the artifact bit for bit
  const OfflineResult r2 = run_offline(cfg);
  CHECK(r2.reused_snapshots == 4);
  CHECK(artifact_digest(out / "artifact") == digest);

  // an interrupted batch resumes to the same artifact
  fs::remove(snapshot_path(out / "snapshots", 2, FieldId::Pressure));
  fs::remove(snapshot_path(out / "snapshots", 3, FieldId::Displacement));
  const OfflineResult r3 = run_offline(cfg);
  CHECK(r3.reused_snapshots == 2);
  CHECK(artifact_digest(out / "artifact") == digest);

  // snapshots from another FOM configuration are not reused
  PipelineConfig other = cfg;
  other.fom.beta = 12.0;
  const CaseContext ctx = make_context(other);
  const SnapshotBatch batch = load_or_run_snapshots(ctx, sample_training_set(ctx.bench->axes, 4), out / "snapshots");
  CHECK(batch.reused == 0);
  fs::remove_all(out);
}

TEST_CASE("online queries, error regimes and break-even") {
  const fs::path out = fs::temp_directory_path() / "biotrom_test_online";
  fs::remove_all(out);
  PipelineConfig cfg = tiny_config(out);
  cfg.train.epochs = 200;
  run_offline(cfg);
  const RomArtifact a = load_artifact(out / "artifact");
  const CaseContext ctx = make_context(cfg);
  const ParameterSet mus = sample_training_set(ctx.bench->axes, 4);
  const SnapshotBatch train = load_or_run_snapshots(ctx, mus, out / "snapshots");

  const ParameterSet queries{{0.2, 1e-13}, {0.3, 5e-12}};
  const OnlineResult o = run_online(a, queries, &ctx, true);
  REQUIRE(o.predictions.size() == 2);
  REQUIRE(o.errors.size() == 2);
  CHECK(o.predictions[0].u.cols() == 6);

  // outside the box: clamped, completes
  const OnlineResult clamped = run_online(a, {{0.5, 1e-10}});
  CHECK(clamped.predictions.size() == 1);
  CHECK(clamped.predictions[0].p == run_online(a, {{0.4, 1e-11}}).predictions[0].p);

  PipelineConfig other = cfg;
  other.case_id = 2;
  const CaseContext ctx2 = make_context(other);
  CHECK_THROWS(run_online(a, queries, &ctx2, false));

  const ErrorDecomposition d = error_decomposition_study(a, ctx, train, {mus[0], mus[3]}, queries);
  REQUIRE(d.projection_train.size() == 2);
  REQUIRE(d.ann_test.size() == 2);
  // projection is optimal in span(W): the network path can only be worse on training data
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t k = 0; k < a.times.size(); ++k) {
      CHECK(d.ann_train[i].mse_u[k] >= d.projection_train[i].mse_u[k] - 1e-12);
      CHECK(d.ann_train[i].mse_p[k] >= d.projection_train[i].mse_p[k] - 1e-12);
    }
  // regime (c) equals the online error series for the same queries
  for (std::size_t k = 0; k < a.times.size(); ++k) CHECK(d.ann_test[1].mse_p[k] == o.errors[1].mse_p[k]);
  CHECK_THROWS(error_decomposition_study(a, ctx, train, {{0.33, 1e-12}}, {}));

  const SweepResult s = sensitivity_sweep(a, ctx, random_parameters(a.box, 3, 1), true);
  CHECK(s.queries == 3);
  CHECK(s.mse_u.size() == a.times.size());
  CHECK(s.mse_u[2].count == 3);
  CHECK_THROWS(sensitivity_sweep(a, ctx, {}, true));

  CHECK(break_even_queries(100.0, 2.0, 0.5) == 67.0);
  CHECK(std::isinf(break_even_queries(100.0, 0.5, 0.5)));

  write_sweep_csv(out / "q.csv", s);
  CHECK(slurp(out / "q.csv").rfind("t,field,q1,median,q3", 0) == 0);
  write_error_csv(out / "e.csv", o.errors[0]);
  CHECK(slurp(out / "e.csv").rfind("t,mse_u,me_u,mse_p,me_p\n", 0) == 0);
  fs::remove_all(out);
}
