#include <catch_amalgamated.hpp>

#include <cmath>

#include "smartpg/ipm.hpp"
#include "test_util.hpp"

using namespace smartpg;
using namespace testutil;

namespace {

// Single bus, single generator, no network: minimize cost subject to box
// bounds only.  The generator's pg bound [1, 10] p.u. with load 100 MW
// forces pg to the interior stationary point of the quadratic cost.
GridCase one_bus_case() {
  GridCase c;
  Bus b;
  b.id = 1;
  b.kind = BusKind::REF;
  b.pd = 0;
  b.qd = 0;
  b.vm_min = 0.9;
  b.vm_max = 1.1;
  c.buses = {b};
  Generator g;
  g.bus = 1;
  g.pmin = -500;
  g.pmax = 500;
  g.qmin = -500;
  g.qmax = 500;
  g.cost = {0.01, 2.0, 0.0};
  c.gens = {g};
  c.validate();
  return c;
}

}  // namespace

TEST_CASE("cold start matches stated rules") {
  auto c = load_case("case9");
  PfModel model(c);
  auto s = cold_start(model);

  const auto& d = model.dim();
  const double ref_va = c.buses[model.ref_bus()].va0;
  for (int i = 0; i < d.n_bus; ++i) CHECK(s.x.va[i] == ref_va);
  for (int i = 0; i < d.n_bus; ++i)
    CHECK(s.x.vm[i] == Catch::Approx(0.5 * (c.buses[i].vm_min + c.buses[i].vm_max)));
  CHECK(s.lambda.isZero());
  CHECK(s.gamma == 1.0);

  const VectorXd h0 = model.full_h(s.x);
  for (int m = 0; m < d.n_ineq; ++m) {
    if (h0[m] < -1.0)
      CHECK(s.z[m] == Catch::Approx(-h0[m]));
    else
      CHECK(s.z[m] == 1.0);
    CHECK(s.mu[m] == Catch::Approx(1.0 / s.z[m]));
  }

  auto s2 = cold_start(model);
  CHECK(s.x.flat() == s2.x.flat());
  CHECK(s.z == s2.z);
}

TEST_CASE("warm start overrides and clamps") {
  auto c = load_case("case9");
  PfModel model(c);
  auto cold = cold_start(model);

  SECTION("empty warm start is identity") {
    auto s = apply_warm_start(model, cold, WarmStart{});
    CHECK(s.x.flat() == cold.x.flat());
    CHECK(s.lambda == cold.lambda);
    CHECK(s.mu == cold.mu);
    CHECK(s.z == cold.z);
  }
  SECTION("x-only warm start keeps dual defaults") {
    WarmStart ws;
    ws.x = VectorXd::Constant(model.dim().n_x, 0.5).eval();
    auto s = apply_warm_start(model, cold, ws);
    CHECK(s.x.flat() == *ws.x);
    CHECK(s.lambda == cold.lambda);
    CHECK(s.mu == cold.mu);
    CHECK(s.z == cold.z);
  }
  SECTION("zero z entries clamped, zero mu restored") {
    WarmStart ws;
    VectorXd z = VectorXd::Constant(model.dim().n_ineq, 2.0);
    z[0] = 0.0;
    VectorXd mu = VectorXd::Zero(model.dim().n_ineq);
    ws.z = z;
    ws.mu = mu;
    auto s = apply_warm_start(model, cold, ws);
    CHECK(s.z[0] == 1e-8);
    CHECK(s.mu[0] == Catch::Approx(1.0 / 1e-8));
    CHECK(s.mu[1] == Catch::Approx(0.5));
  }
  SECTION("length mismatch rejected") {
    WarmStart ws;
    ws.x = VectorXd::Zero(3).eval();
    CHECK_THROWS_AS(apply_warm_start(model, cold, ws), CaseError);
  }
}

TEST_CASE("step lengths follow the fraction-to-boundary rule") {
  PrimalDualState s;
  s.z = VectorXd::Ones(2);
  s.mu = VectorXd::Ones(2);

  SECTION("no negative directions gives full step") {
    VectorXd dz = VectorXd::Ones(2), dmu = VectorXd::Ones(2);
    auto [ap, ad] = step_lengths(s, dz, dmu, 0.99995);
    CHECK(ap == 1.0);
    CHECK(ad == 1.0);
  }
  SECTION("binding ratio scales the step") {
    s.z = VectorXd(2);
    s.z << 1.0, 4.0;
    VectorXd dz(2);
    dz << -2.0, -1.0;
    VectorXd dmu = VectorXd::Ones(2);
    auto [ap, ad] = step_lengths(s, dz, dmu, 0.99995);
    CHECK(ap == Catch::Approx(0.499975).epsilon(1e-12));
    CHECK(ad == 1.0);
  }
}

TEST_CASE("interior solve of a quadratic single-bus economic dispatch") {
  // With zero load the balance equations force pg = qg = 0 and the optimum
  // cost is the constant term; the analytic optimum is pg = 0, f = 0.
  auto c = one_bus_case();
  auto [s, rep] = solve(c);
  REQUIRE(rep.converged);
  CHECK(std::abs(s.x.pg[0]) < 1e-6);
  CHECK(std::abs(rep.objective) < 1e-4);
  CHECK(static_cast<int>(rep.history.size()) == rep.iterations);
}

TEST_CASE("loaded single-bus dispatch hits the balance equality") {
  auto c = one_bus_case();
  c.buses[0].pd = 100;  // MW
  c.buses[0].qd = 20;
  auto [s, rep] = solve(c);
  REQUIRE(rep.converged);
  CHECK(s.x.pg[0] == Catch::Approx(1.0).margin(1e-6));   // p.u.
  CHECK(s.x.qg[0] == Catch::Approx(0.2).margin(1e-6));
  // cost(100 MW) = 0.01*100^2 + 2*100 = 300
  CHECK(rep.objective == Catch::Approx(300.0).epsilon(1e-6));
}

TEST_CASE("newton step vanishes at a KKT point with zero barrier") {
  auto c = one_bus_case();
  c.buses[0].pd = 100;
  c.buses[0].qd = 20;
  PfModel model(c);
  auto [s, rep] = solve(model);
  REQUIRE(rep.converged);

  PrimalDualState at = s;
  at.gamma = 0.0;
  auto st = newton_step(model, at);
  REQUIRE(st.ok);
  CHECK(st.dx.lpNorm<Eigen::Infinity>() < 1e-6);
  CHECK(st.dlambda.lpNorm<Eigen::Infinity>() < 1e-6);
}

TEST_CASE("convergence conditions at clearly infeasible point") {
  auto c = one_bus_case();
  c.buses[0].pd = 100;
  PfModel model(c);
  PrimalDualState s = cold_start(model);
  s.x.pg[0] = 0.0;  // violates balance by exactly 1 p.u.
  s.x.vm[0] = 1.0;
  auto cd = check_convergence(model, s, std::nan(""));
  CHECK(cd.feascond == Catch::Approx(1.0 / (1.0 + std::max(
      s.x.flat().lpNorm<Eigen::Infinity>(), s.z.lpNorm<Eigen::Infinity>()))));
  CHECK_FALSE(cd.converged);
}

TEST_CASE("case9 converges from cold start") {
  auto c = load_case("case9");
  auto [s, rep] = solve(c);
  REQUIRE(rep.converged);
  CHECK(rep.iterations <= 50);
  const auto& last = rep.history.back();
  CHECK(last.feascond < 1e-6);
  CHECK(last.gradcond < 1e-6);
  CHECK(last.compcond < 1e-6);
  CHECK(last.costcond < 1e-6);

  // First iteration from cold start reduces infeasibility.
  PfModel model(c);
  auto s0 = cold_start(model);
  auto cd0 = check_convergence(model, s0, std::nan(""));
  CHECK(rep.history.front().feascond < cd0.feascond);
}

TEST_CASE("deterministic histories across repeated solves") {
  auto c = load_case("case14");
  auto [s1, r1] = solve(c);
  auto [s2, r2] = solve(c);
  REQUIRE(r1.history.size() == r2.history.size());
  for (std::size_t i = 0; i < r1.history.size(); ++i) {
    CHECK(r1.history[i].feascond == r2.history[i].feascond);
    CHECK(r1.history[i].gradcond == r2.history[i].gradcond);
    CHECK(r1.history[i].step_norm == r2.history[i].step_norm);
  }
  CHECK(s1.x.flat() == s2.x.flat());
}

TEST_CASE("warm start at the exact solution is a fixed point") {
  for (const char* name : {"case9", "case14"}) {
    auto c = load_case(name);
    PfModel model(c);
    auto [s, rep] = solve(model);
    REQUIRE(rep.converged);

    WarmStart ws;
    ws.x = s.x.flat();
    ws.lambda = s.lambda;
    ws.mu = s.mu;
    ws.z = s.z;
    auto [s2, rep2] = solve(model, ws);
    CHECK(rep2.converged);
    CHECK(rep2.iterations <= 3);
    CHECK(rep2.objective == Catch::Approx(rep.objective).epsilon(1e-8));
  }
}

TEST_CASE("infeasible load is reported, not thrown") {
  auto c = one_bus_case();
  c.gens[0].pmax = 50;
  c.buses[0].pd = 5000;  // far beyond total capacity
  auto [s, rep] = solve(c);
  CHECK_FALSE(rep.converged);
  CHECK(rep.iterations <= IpmOptions{}.max_iterations);
}

TEST_CASE("fallback reruns cold on warm-start failure") {
  auto c = load_case("case9");
  PfModel model(c);

  auto [sc, repc] = solve(model);
  REQUIRE(repc.converged);

  SECTION("good warm start skips the fallback") {
    WarmStart ws;
    ws.x = sc.x.flat();
    ws.lambda = sc.lambda;
    ws.mu = sc.mu;
    ws.z = sc.z;
    auto [s, rep] = solve_with_fallback(model, ws);
    CHECK(rep.converged);
    CHECK_FALSE(rep.fallback_used);
  }
  SECTION("corrupted duals trigger the fallback") {
    WarmStart ws;
    // Hostile z: huge magnitudes destroy the barrier scaling.
    VectorXd z(model.dim().n_ineq);
    for (int i = 0; i < z.size(); ++i) z[i] = (i % 2) ? 1e12 : 1e-8;
    ws.z = z;
    IpmOptions opts;
    opts.max_iterations = 20;
    auto [s, rep] = solve_with_fallback(model, ws, opts);
    if (rep.fallback_used) {
      CHECK(rep.converged);
      CHECK(rep.objective == Catch::Approx(repc.objective).epsilon(1e-6));
    }
  }
}

TEST_CASE("report serialization") {
  auto c = load_case("case9");
  auto [s, rep] = solve(c);
  auto j = rep.to_json();
  CHECK(j["converged"] == true);
  CHECK(j["history"].size() == rep.history.size());

  auto csv = rep.history_csv();
  CHECK(csv.rfind("iter,feascond,gradcond,compcond,costcond,step_norm,gamma\n",
                  0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') ==
        static_cast<long>(rep.history.size()) + 1);
}
