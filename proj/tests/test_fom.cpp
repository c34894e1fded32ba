#include <doctest.h>

#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>

#include "biotrom/benchmarks.hpp"
#include "biotrom/biot_fom.hpp"
#include "oracles.hpp"

using namespace biotrom;

namespace {

MaterialConfig case1_material(const Mesh& m, double nu, double k) {
  const std::vector<double> mu{nu, k};
  return benchmark_case(1).material(m, mu);
}

oracle::Terzaghi terzaghi_for(const MaterialConfig& mc) {
  const auto l = mc.lame();
  return {mc.alpha(), l.lambda + 2.0 * l.mu, mc.inverse_biot_modulus(),
          mc.permeability.cells.front().xx / mc.fluid_viscosity, 1000.0};
}

double rel_l2_vs_terzaghi(const Mesh& mesh, const Vector& p, const oracle::Terzaghi& tz, double t) {
  const Vector exact = interpolate_dg1(mesh, [&](Point q) { return tz.pressure(1.0 - q.y, t); });
  const SparseMatrix mp = assemble_dg1_mass(mesh);
  const Vector d = p - exact;
  return std::sqrt(d.dot(mp * d) / exact.dot(mp * exact));
}

}  // namespace

TEST_CASE("bdf1") {
  Vector a(1), b(1);
  a << 2.0;
  b << 1.0;
  CHECK(bdf1(a, b, 1.0)[0] == 1.0);
  CHECK(bdf1(a, a, 3.0)[0] == 0.0);
  a << 5.0;
  CHECK(bdf1(a, b, 20.0)[0] == doctest::Approx(0.2));
  CHECK_THROWS(bdf1(a, Vector(2), 1.0));
  CHECK_THROWS(bdf1(a, b, 0.0));
}

TEST_CASE("time schedule") {
  auto s = build_time_schedule(20, 1.0, 20, 100);
  CHECK(s.times == std::vector<double>{0, 20, 40, 60, 80, 100});
  s = build_time_schedule(10, 2.0, 40, 150);
  CHECK(s.times == std::vector<double>{0, 10, 30, 70, 110, 150});
  s = build_time_schedule(7, 1.0, 7, 70);
  CHECK(s.num_steps() == 10);
  for (int n = 1; n <= s.num_steps(); ++n) CHECK(s.dt(n) == doctest::Approx(7.0));
  // clipped last step
  s = build_time_schedule(30, 1.0, 30, 100);
  CHECK(s.times.back() == 100.0);
  CHECK(s.dt(s.num_steps()) == doctest::Approx(10.0));
  CHECK_THROWS(build_time_schedule(10, 0.5, 10, 1000));
  CHECK_THROWS(build_time_schedule(-1, 1.0, 10, 100));
}

TEST_CASE("weighted average and harmonic permeability") {
  CHECK(weighted_average_weight(2e-12, 2e-12) == 0.5);
  CHECK(weighted_average_weight(1e-12, 3e-12) == doctest::Approx(0.75));
  CHECK_THROWS(weighted_average_weight(0.0, 0.0));
  CHECK(harmonic_permeability(3e-13, 3e-13) == doctest::Approx(3e-13));
  CHECK(harmonic_permeability(1e-12, 1e-16) == doctest::Approx(1.99998e-16).epsilon(1e-5));
  for (auto [a, b] : {std::pair{1.0, 2.0}, std::pair{1e-16, 1e-12}, std::pair{5.0, 0.1}}) {
    const double h = harmonic_permeability(a, b);
    CHECK(h >= std::min(a, b));
    CHECK(h <= 2.0 * std::min(a, b));
  }
}

TEST_CASE("momentum: unloaded body stays at rest") {
  const Mesh m = build_unit_square_mesh(4, true, 0);
  BoundaryConditions bc = benchmark_boundary_conditions();
  bc.momentum[static_cast<int>(BoundaryLabel::Top)].value = {0.0, 0.0};
  FullOrderModel fom(m, case1_material(m, 0.25, 1e-12), bc);
  const Vector u = fom.solve_momentum(Vector::Zero(fom.p_dofs().num_dofs()));
  CHECK(u.cwiseAbs().maxCoeff() == 0.0);
  const FomState s0 = fom.undrained_initialize();
  CHECK(s0.u.cwiseAbs().maxCoeff() == 0.0);
  CHECK(s0.p.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("momentum: uniaxial compression patch test") {
  const Mesh m = build_unit_square_mesh(6, true, 4);
  const MaterialConfig mc = case1_material(m, 0.3, 1e-12);
  FullOrderModel fom(m, mc, benchmark_boundary_conditions());
  const Vector u = fom.solve_momentum(Vector::Zero(fom.p_dofs().num_dofs()));
  const auto l = mc.lame();
  const double eps = -1000.0 / (l.lambda + 2.0 * l.mu);
  const auto nodes = cg2_node_points(m);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    CHECK(u[2 * i] == doctest::Approx(0.0).epsilon(1e-12).scale(1e-3));
    CHECK(std::abs(u[2 * i + 1] - eps * nodes[i].y) < 1e-10 * std::abs(eps));
  }
  // stiffness is symmetric positive definite after constraints
  const SparseMatrix& a = fom.operators().stiffness;
  CHECK((SparseMatrix(a.transpose()) - a).norm() <= 1e-12 * a.norm());
  Eigen::SimplicialLLT<SparseMatrix> llt(a);
  CHECK(llt.info() == Eigen::Success);
}

TEST_CASE("momentum without constraints reports rigid-body modes") {
  const Mesh m = build_unit_square_mesh(2, true, 0);
  BoundaryConditions bc = benchmark_boundary_conditions();
  for (auto& mb : bc.momentum) mb = {MomentumBC::Kind::Traction, {0.0, 0.0}};
  CHECK_THROWS_WITH(FullOrderModel(m, case1_material(m, 0.25, 1e-12), bc), doctest::Contains("rigid-body"));
}

TEST_CASE("penalty must be positive and coercive") {
  const Mesh m = build_unit_square_mesh(4, true, 2);
  const MaterialConfig mc = case1_material(m, 0.25, 1e-12);
  CHECK_THROWS(FullOrderModel(m, mc, benchmark_boundary_conditions(), FomOptions{0.0, 1e-8, 50}));
  CHECK(check_penalty_coercivity(m, mc, 10.0).ok());
  CHECK_FALSE(check_penalty_coercivity(m, mc, 0.05).ok());
}

TEST_CASE("undrained initial state matches the 1D undrained closed form") {
  const Mesh m = build_unit_square_mesh(6, true, 0);
  const MaterialConfig mc = case1_material(m, 0.25, 1e-12);
  FullOrderModel fom(m, mc, benchmark_boundary_conditions());
  const FomState s0 = fom.undrained_initialize();
  const double p0 = terzaghi_for(mc).p0();
  CHECK(p0 > 100.0);
  for (Eigen::Index i = 0; i < s0.p.size(); ++i) CHECK(s0.p[i] == doctest::Approx(p0).epsilon(1e-9));
  CHECK(s0.t == 0.0);

  // doubling the load doubles the response
  BoundaryConditions bc2 = benchmark_boundary_conditions();
  bc2.momentum[static_cast<int>(BoundaryLabel::Top)].value = {0.0, -2000.0};
  FullOrderModel fom2(m, mc, bc2);
  const FomState s2 = fom2.undrained_initialize();
  CHECK((s2.p - 2.0 * s0.p).norm() <= 1e-10 * s2.p.norm());
  CHECK((s2.u - 2.0 * s0.u).norm() <= 1e-10 * s2.u.norm());
}

TEST_CASE("pressure stays zero without forcing") {
  const Mesh m = build_unit_square_mesh(4, true, 0);
  BoundaryConditions bc = benchmark_boundary_conditions();
  bc.momentum[static_cast<int>(BoundaryLabel::Top)].value = {0.0, 0.0};
  for (auto& mb : bc.mass) mb = {MassBC::Kind::Dirichlet, 0.0};
  FullOrderModel fom(m, case1_material(m, 0.25, 1e-12), bc);
  FomState prev{Vector::Zero(fom.u_dofs().num_dofs()), Vector::Zero(fom.p_dofs().num_dofs()),
                Vector::Constant(fom.p_dofs().num_dofs(), -5.0), 0.0};
  const Vector p = fom.solve_pressure(prev, prev.sigma_v, 10.0);
  CHECK(p.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("SIPG form is consistent for a globally linear pressure") {
  // With no Dirichlet facets, D p for a linear p equals the boundary flux
  // integral of k grad p . n against each basis function.
  const Mesh m = build_unit_square_mesh(4, true, 3);
  BoundaryConditions bc = benchmark_boundary_conditions();
  for (auto& mb : bc.mass) mb = {MassBC::Kind::Flux, 0.0};
  const MaterialConfig mc = case1_material(m, 0.25, 1e-12);
  FullOrderModel fom(m, mc, bc);
  const double kappa = 1e-12 / mc.fluid_viscosity;
  const Vector p = interpolate_dg1(m, [](Point q) { return 2.0 * q.x - 3.0 * q.y; });
  const Vector dp = fom.operators().diffusion * p;
  Vector expect = Vector::Zero(p.size());
  for (const auto& f : m.boundary_facets()) {
    const double flux = kappa * (2.0 * f.normal.x - 3.0 * f.normal.y);
    const auto& e = m.edge(f.edge);
    const auto& cell = m.cell(f.cell);
    for (int i = 0; i < 3; ++i)
      if (cell[i] == e[0] || cell[i] == e[1]) expect[3 * f.cell + i] += flux * m.edge_length(f.edge) / 2.0;
  }
  CHECK((dp - expect).cwiseAbs().maxCoeff() <= 1e-10 * expect.cwiseAbs().maxCoeff());
  // constants are in the kernel
  CHECK((fom.operators().diffusion * Vector::Ones(p.size())).cwiseAbs().maxCoeff() <= 1e-12 * kappa * 100);
}

TEST_CASE("fixed-stress step at a steady state converges immediately") {
  const Mesh m = build_unit_square_mesh(4, true, 0);
  const std::vector<double> mu{0.25, 1e-11};
  const auto states = run_fom(benchmark_case(1), mu, build_time_schedule(200, 1.0, 200, 20000), m);
  FullOrderModel fom(m, benchmark_case(1).material(m, mu), benchmark_boundary_conditions());
  const StepResult r = fom.fixed_stress_step(states.back(), 20.0);
  CHECK(r.iterations == 1);
  CHECK((r.state.p - states.back().p).norm() <= 1e-6 * states.back().sigma_v.norm());
  CHECK((r.state.u - states.back().u).norm() <= 1e-8 * states.back().u.norm());
}

TEST_CASE("fixed-stress solution equals the monolithic solve") {
  const Mesh m = build_unit_square_mesh(4, true, 2);
  const MaterialConfig mc = case1_material(m, 0.3, 1e-12);
  FullOrderModel fom(m, mc, benchmark_boundary_conditions());
  const FomState s0 = fom.undrained_initialize();
  const auto& ops = fom.operators();
  const double alpha = mc.alpha(), K = mc.bulk_modulus, invm = mc.inverse_biot_modulus();
  const double dt = 20.0;
  const int nu = fom.u_dofs().num_dofs(), np = fom.p_dofs().num_dofs();

  // [A   -a C^T] [u]   [load_u                                         ]
  // [a/dt M Div  (1/M)/dt M + D] [p] = [c_s/dt M p_old + a/(K dt) M s_old + L_p]
  std::vector<char> constrained(nu, 0);
  for (int d : ops.constrained) constrained[d] = 1;
  Triplets t;
  auto add = [&](const SparseMatrix& a, int r0, int c0, double s, bool skip_constrained_rows) {
    for (int k = 0; k < a.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(a, k); it; ++it) {
        if (skip_constrained_rows && constrained[it.row()]) continue;
        t.emplace_back(r0 + it.row(), c0 + it.col(), s * it.value());
      }
  };
  add(ops.stiffness, 0, 0, 1.0, false);
  add(SparseMatrix(ops.coupling.transpose()), 0, nu, -alpha, true);
  add(SparseMatrix(ops.mass_p * ops.nodal_divergence), nu, 0, alpha / dt, false);
  add(ops.mass_p, nu, nu, invm / dt, false);
  add(ops.diffusion, nu, nu, 1.0, false);
  SparseMatrix big(nu + np, nu + np);
  big.setFromTriplets(t.begin(), t.end());
  Vector rhs(nu + np);
  rhs.head(nu) = ops.load_u;
  rhs.tail(np) = (invm + alpha * alpha / K) / dt * (ops.mass_p * s0.p) + alpha / (K * dt) * (ops.mass_p * s0.sigma_v) +
                 ops.load_p;
  Eigen::SparseLU<SparseMatrix> lu(big);
  REQUIRE(lu.info() == Eigen::Success);
  const Vector x = lu.solve(rhs);

  const StepResult r = fom.fixed_stress_step(s0, dt);
  const double tol = fom.options().tol_fs;
  CHECK((r.state.p - x.tail(np)).norm() <= 10 * tol * r.state.sigma_v.norm());
  CHECK((r.state.u - x.head(nu)).norm() <= 10 * tol * r.state.u.norm());
  CHECK(r.iterations > 1);
}

TEST_CASE("fixed-stress iteration count does not grow as dt shrinks") {
  const Mesh m = build_unit_square_mesh(6, true, 0);
  FullOrderModel fom(m, case1_material(m, 0.25, 1e-12), benchmark_boundary_conditions());
  const FomState s0 = fom.undrained_initialize();
  // The count is flat here; one iteration of slack absorbs where the increment
  // happens to cross the tolerance.
  std::vector<int> its;
  for (double dt : {40.0, 10.0, 2.0, 0.5}) {
    its.push_back(fom.fixed_stress_step(s0, dt).iterations);
    MESSAGE("dt " << dt << " iterations " << its.back());
    if (its.size() > 1) CHECK(its.back() <= its[its.size() - 2] + 1);
  }
  CHECK(its.back() <= its.front());
}

TEST_CASE("run is deterministic, dissipative and locally conservative") {
  const Mesh m = build_unit_square_mesh(6, true, 3);
  const std::vector<double> mu{0.2, 3e-12};
  const auto sched = build_time_schedule(20, 1.0, 20, 400);
  const auto a = run_fom(benchmark_case(1), mu, sched, m);
  const auto b = run_fom(benchmark_case(1), mu, sched, m);
  REQUIRE(a.size() == sched.times.size());
  for (std::size_t n = 0; n < a.size(); ++n) {
    CHECK(a[n].u == b[n].u);
    CHECK(a[n].p == b[n].p);
    CHECK(a[n].t == sched.times[n]);
  }
  for (std::size_t n = 1; n < a.size(); ++n)
    CHECK(a[n].p.cwiseAbs().maxCoeff() <= a[n - 1].p.cwiseAbs().maxCoeff() * (1 + 1e-12));

  FullOrderModel fom(m, benchmark_case(1).material(m, mu), benchmark_boundary_conditions());
  FomState s = fom.undrained_initialize();
  for (int n = 1; n <= 5; ++n) {
    const StepResult r = fom.fixed_stress_step(s, 20.0);
    CHECK(fom.cell_mass_residuals(s, r, 20.0).cwiseAbs().maxCoeff() < 1e-10);
    s = r.state;
  }
}

TEST_CASE("volumetric stress is consistent with the state") {
  const Mesh m = build_unit_square_mesh(4, true, 0);
  const MaterialConfig mc = case1_material(m, 0.25, 1e-12);
  FullOrderModel fom(m, mc, benchmark_boundary_conditions());
  const FomState s0 = fom.undrained_initialize();
  const Vector div = fom.operators().nodal_divergence * s0.u;
  const Vector sv = mc.bulk_modulus * div - mc.alpha() * s0.p;
  CHECK((s0.sigma_v - sv).norm() <= 1e-12 * sv.norm());
}

// At this resolution the backward-Euler error dominates the spatial one, so the
// observable order is the temporal one.
TEST_CASE("pressure approaches the consolidation series at first order in dt") {
  const Mesh m = build_unit_square_mesh(8, true, 0);
  const MaterialConfig mc = case1_material(m, 0.25, 1e-11);
  std::vector<double> errs;
  for (double dt : {0.5, 0.25, 0.125}) {
    const auto sched = build_time_schedule(dt, 1.0, dt, 30.0);
    const auto states = run_fom(benchmark_case(1), std::vector<double>{0.25, 1e-11}, sched, m);
    errs.push_back(rel_l2_vs_terzaghi(m, states.back().p, terzaghi_for(mc), 30.0));
    MESSAGE("dt = " << dt << " relative L2 error " << errs.back());
  }
  for (std::size_t i = 1; i < errs.size(); ++i) {
    CHECK(errs[i - 1] / errs[i] > 1.7);
    CHECK(errs[i - 1] / errs[i] < 2.5);
  }
  CHECK(errs.back() < 5e-3);
}
