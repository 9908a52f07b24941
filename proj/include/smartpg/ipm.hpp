#pragma once

// Primal-dual interior-point solver for the AC-OPF problem assembled by
// PfModel.  The iteration follows the classic MIPS scheme: a reduced KKT
// system in (dx, dlambda), slack/dual steps recovered in closed form, a
// fraction-to-boundary rule, and four termination conditions (feasibility,
// gradient, complementarity, cost decrease).

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <vector>

#include <Eigen/SparseLU>
#include <nlohmann/json.hpp>

#include "smartpg/pf.hpp"

namespace smartpg {

struct IpmOptions {
  double feastol = 1e-6;
  double gradtol = 1e-6;
  double comptol = 1e-6;
  double costtol = 1e-6;
  int max_iterations = 150;
  double sigma = 0.1;      // centering parameter
  double xi = 0.99995;     // fraction-to-boundary
  double gamma0 = 1.0;     // initial barrier weight
  bool backtracking = false;  // halve the step when the KKT residual grows
};

struct PrimalDualState {
  OpfVector x;
  VectorXd lambda;
  VectorXd mu;
  VectorXd z;
  double gamma = 1.0;
};

// Any subset of the solver state may be injected as a starting point.
struct WarmStart {
  std::optional<VectorXd> x;
  std::optional<VectorXd> lambda;
  std::optional<VectorXd> mu;
  std::optional<VectorXd> z;

  bool empty() const { return !x && !lambda && !mu && !z; }
};

struct IterRecord {
  double feascond = 0;
  double gradcond = 0;
  double compcond = 0;
  double costcond = 0;
  double step_norm = 0;
  double gamma = 0;
};

struct SolveReport {
  bool converged = false;
  int iterations = 0;
  double objective = 0;
  std::vector<IterRecord> history;
  double wall_time = 0;  // seconds
  bool fallback_used = false;

  nlohmann::json to_json() const {
    nlohmann::json h = nlohmann::json::array();
    for (const auto& r : history) {
      h.push_back({{"feascond", r.feascond},
                   {"gradcond", r.gradcond},
                   {"compcond", r.compcond},
                   {"costcond", r.costcond},
                   {"step_norm", r.step_norm},
                   {"gamma", r.gamma}});
    }
    return {{"converged", converged}, {"iterations", iterations},
            {"objective", objective}, {"wall_time", wall_time},
            {"fallback_used", fallback_used}, {"history", h}};
  }

  std::string history_csv() const {
    std::ostringstream os;
    os.precision(17);
    os << "iter,feascond,gradcond,compcond,costcond,step_norm,gamma\n";
    for (std::size_t i = 0; i < history.size(); ++i) {
      const auto& r = history[i];
      os << (i + 1) << ',' << r.feascond << ',' << r.gradcond << ','
         << r.compcond << ',' << r.costcond << ',' << r.step_norm << ','
         << r.gamma << '\n';
    }
    return os.str();
  }
};

struct Conditions {
  double feascond = 0;
  double gradcond = 0;
  double compcond = 0;
  double costcond = 0;
  bool converged = false;
};

struct NewtonStep {
  VectorXd dx, dlambda, dmu, dz;
  bool ok = false;
};

inline PrimalDualState cold_start(const PfModel& model,
                                  const IpmOptions& opts = {}) {
  const auto& d = model.dim();
  const auto& b = model.bounds();
  const double ref_va = model.grid().buses[model.ref_bus()].va0;
  const double cap = 10.0;  // surrogate for an infinite generator bound

  VectorXd x0(d.n_x);
  for (int i = 0; i < d.n_bus; ++i) x0[i] = ref_va;
  for (int i = d.n_bus; i < d.n_x; ++i) {
    const double lo = std::max(b.x_min[i], -cap);
    const double hi = std::min(b.x_max[i], cap);
    x0[i] = 0.5 * (lo + hi);
  }

  PrimalDualState s;
  s.x = OpfVector::from_flat(x0, d);
  s.lambda = VectorXd::Zero(d.n_eq);
  s.gamma = opts.gamma0;

  const VectorXd h0 = model.full_h(s.x);
  s.z = VectorXd::Ones(d.n_ineq);
  for (int m = 0; m < d.n_ineq; ++m)
    if (h0[m] < -1.0) s.z[m] = -h0[m];
  s.mu = opts.gamma0 * s.z.cwiseInverse();
  return s;
}

inline PrimalDualState apply_warm_start(const PfModel& model,
                                        PrimalDualState s, const WarmStart& ws,
                                        const IpmOptions& opts = {}) {
  const auto& d = model.dim();
  auto check = [](const VectorXd& v, int n, const char* what) {
    if (static_cast<int>(v.size()) != n)
      throw CaseError(std::string("warm start length mismatch for ") + what);
  };
  if (ws.x) {
    check(*ws.x, d.n_x, "x");
    s.x = OpfVector::from_flat(*ws.x, d);
  }
  if (ws.lambda) {
    check(*ws.lambda, d.n_eq, "lambda");
    s.lambda = *ws.lambda;
  }
  if (ws.z) {
    check(*ws.z, d.n_ineq, "z");
    s.z = ws.z->cwiseMax(1e-8);
  }
  if (ws.mu) {
    check(*ws.mu, d.n_ineq, "mu");
    s.mu = ws.mu->cwiseMax(0.0);
  }
  if (ws.z) {
    // Restore strict interiority of any dual that landed exactly on zero.
    for (int m = 0; m < d.n_ineq; ++m)
      if (s.mu[m] == 0.0) s.mu[m] = opts.gamma0 / s.z[m];
  }
  // Match the barrier weight to the complementarity level of the supplied
  // point (capped at the cold-start value): a warm start near the optimum
  // must not be dragged back toward the barrier center by gamma0.
  if (d.n_ineq)
    s.gamma = std::min(opts.gamma0, opts.sigma * s.z.dot(s.mu) / d.n_ineq);
  return s;
}

inline Conditions check_convergence(const PfModel& model,
                                    const PrimalDualState& s, double f_prev,
                                    const IpmOptions& opts = {}) {
  const VectorXd g = model.residual_g(s.x);
  const VectorXd h = model.full_h(s.x);
  const VectorXd xf = s.x.flat();
  const SparseD jg = model.jac_g(s.x);
  const SparseD jh = model.jac_full_h(s.x);
  const VectorXd lag_grad = model.grad_f(s.x) + jg.transpose() * s.lambda +
                            jh.transpose() * s.mu;

  Conditions c;
  const double hmax = h.size() ? h.maxCoeff() : 0.0;
  const double znorm = s.z.size() ? s.z.lpNorm<Eigen::Infinity>() : 0.0;
  const double munorm = s.mu.size() ? s.mu.lpNorm<Eigen::Infinity>() : 0.0;
  c.feascond = std::max(g.lpNorm<Eigen::Infinity>(), hmax) /
               (1.0 + std::max(xf.lpNorm<Eigen::Infinity>(), znorm));
  c.gradcond = lag_grad.lpNorm<Eigen::Infinity>() /
               (1.0 + std::max(s.lambda.lpNorm<Eigen::Infinity>(), munorm));
  c.compcond = s.z.dot(s.mu) / (1.0 + xf.lpNorm<Eigen::Infinity>());
  const double f = model.cost_f(s.x);
  c.costcond = std::isnan(f_prev)
                   ? 0.0
                   : std::abs(f - f_prev) / (1.0 + std::abs(f_prev));
  c.converged = c.feascond < opts.feastol && c.gradcond < opts.gradtol &&
                c.compcond < opts.comptol && c.costcond < opts.costtol;
  return c;
}

inline NewtonStep newton_step(const PfModel& model, const PrimalDualState& s) {
  const auto& d = model.dim();
  const VectorXd g = model.residual_g(s.x);
  const VectorXd h = model.full_h(s.x);
  const SparseD jg = model.jac_g(s.x);
  const SparseD jh = model.jac_full_h(s.x);

  const VectorXd zinv = s.z.cwiseInverse();
  const SparseD jh_scaled =
      SparseD((s.mu.cwiseProduct(zinv)).asDiagonal()) * jh;
  SparseD m = model.hess_lagrangian(s.x, s.lambda, s.mu.head(model.n_flow())) +
              SparseD(jh.transpose() * jh_scaled);

  const VectorXd lag_grad = model.grad_f(s.x) + jg.transpose() * s.lambda +
                            jh.transpose() * s.mu;
  const VectorXd n_vec =
      lag_grad + jh.transpose() * (zinv.cwiseProduct(
                     VectorXd::Constant(d.n_ineq, s.gamma) +
                     s.mu.cwiseProduct(h)));

  // Reduced KKT system over (dx, dlambda).
  const int dim = d.n_x + d.n_eq;
  std::vector<Eigen::Triplet<double>> tr;
  tr.reserve(m.nonZeros() + 2 * jg.nonZeros());
  for (int k = 0; k < m.outerSize(); ++k)
    for (SparseD::InnerIterator it(m, k); it; ++it)
      tr.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()),
                      it.value());
  for (int k = 0; k < jg.outerSize(); ++k)
    for (SparseD::InnerIterator it(jg, k); it; ++it) {
      const int r = static_cast<int>(it.row());
      const int c = static_cast<int>(it.col());
      tr.emplace_back(d.n_x + r, c, it.value());
      tr.emplace_back(c, d.n_x + r, it.value());
    }
  SparseD kkt(dim, dim);
  kkt.setFromTriplets(tr.begin(), tr.end());

  VectorXd rhs(dim);
  rhs.head(d.n_x) = -n_vec;
  rhs.tail(d.n_eq) = -g;

  Eigen::SparseLU<SparseD> lu;
  lu.compute(kkt);
  NewtonStep st;
  if (lu.info() != Eigen::Success) return st;
  const VectorXd sol = lu.solve(rhs);
  if (lu.info() != Eigen::Success || !sol.allFinite()) return st;

  st.dx = sol.head(d.n_x);
  st.dlambda = sol.tail(d.n_eq);
  st.dz = -h - s.z - jh * st.dx;
  st.dmu = VectorXd(d.n_ineq);
  for (int i = 0; i < d.n_ineq; ++i)
    st.dmu[i] = -s.mu[i] + (s.gamma - s.mu[i] * st.dz[i]) / s.z[i];
  st.ok = true;
  return st;
}

inline std::pair<double, double> step_lengths(const PrimalDualState& s,
                                              const VectorXd& dz,
                                              const VectorXd& dmu, double xi) {
  double ap = 1.0, ad = 1.0;
  for (int i = 0; i < dz.size(); ++i)
    if (dz[i] < 0.0) ap = std::min(ap, xi * (-s.z[i] / dz[i]));
  for (int i = 0; i < dmu.size(); ++i)
    if (dmu[i] < 0.0) ad = std::min(ad, xi * (-s.mu[i] / dmu[i]));
  return {ap, ad};
}

namespace detail {

inline double kkt_residual_norm(const PfModel& model,
                                const PrimalDualState& s) {
  const SparseD jg = model.jac_g(s.x);
  const SparseD jh = model.jac_full_h(s.x);
  const VectorXd lag = model.grad_f(s.x) + jg.transpose() * s.lambda +
                       jh.transpose() * s.mu;
  const VectorXd g = model.residual_g(s.x);
  return std::sqrt(lag.squaredNorm() + g.squaredNorm());
}

}  // namespace detail

inline std::pair<PrimalDualState, SolveReport> solve(
    const PfModel& model, const std::optional<WarmStart>& ws = std::nullopt,
    const IpmOptions& opts = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto& d = model.dim();

  PrimalDualState s = cold_start(model, opts);
  if (ws) s = apply_warm_start(model, s, *ws, opts);

  SolveReport rep;
  double f_prev = std::numeric_limits<double>::quiet_NaN();

  Conditions c0 = check_convergence(model, s, f_prev, opts);
  bool converged = c0.converged;

  for (int iter = 1; iter <= opts.max_iterations && !converged; ++iter) {
    NewtonStep st = newton_step(model, s);
    if (!st.ok) break;  // singular KKT system: numerical failure

    auto [ap, ad] = step_lengths(s, st.dz, st.dmu, opts.xi);

    if (opts.backtracking) {
      const double r0 = detail::kkt_residual_norm(model, s);
      for (int t = 0; t < 5; ++t) {
        PrimalDualState trial = s;
        trial.x = OpfVector::from_flat(s.x.flat() + ap * st.dx, d);
        trial.lambda = s.lambda + ad * st.dlambda;
        trial.z = s.z + ap * st.dz;
        trial.mu = s.mu + ad * st.dmu;
        if (detail::kkt_residual_norm(model, trial) <= r0) break;
        ap *= 0.5;
        ad *= 0.5;
      }
    }

    // X and lambda first, then Z, then mu.
    s.x = OpfVector::from_flat(s.x.flat() + ap * st.dx, d);
    s.lambda += ad * st.dlambda;
    s.z += ap * st.dz;
    s.mu += ad * st.dmu;
    s.gamma = d.n_ineq ? opts.sigma * s.z.dot(s.mu) / d.n_ineq : 0.0;

    const double f = model.cost_f(s.x);
    Conditions c = check_convergence(model, s, f_prev, opts);
    f_prev = f;

    IterRecord r;
    r.feascond = c.feascond;
    r.gradcond = c.gradcond;
    r.compcond = c.compcond;
    r.costcond = c.costcond;
    r.step_norm = std::sqrt(ap * ap * st.dx.squaredNorm() +
                            ad * ad * st.dlambda.squaredNorm() +
                            ap * ap * st.dz.squaredNorm() +
                            ad * ad * st.dmu.squaredNorm());
    r.gamma = s.gamma;
    rep.history.push_back(r);
    rep.iterations = iter;
    converged = c.converged;
  }

  rep.converged = converged;
  rep.objective = model.cost_f(s.x);
  rep.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return {s, rep};
}

inline std::pair<PrimalDualState, SolveReport> solve(
    const GridCase& c, const std::optional<WarmStart>& ws = std::nullopt,
    const IpmOptions& opts = {}) {
  PfModel model(c);
  return solve(model, ws, opts);
}

inline std::pair<PrimalDualState, SolveReport> solve_with_fallback(
    const PfModel& model, const std::optional<WarmStart>& ws,
    const IpmOptions& opts = {}) {
  auto [s, rep] = solve(model, ws, opts);
  if (rep.converged || !ws) return {s, rep};
  auto [s2, rep2] = solve(model, std::nullopt, opts);
  rep2.fallback_used = true;
  rep2.wall_time += rep.wall_time;
  return {s2, rep2};
}

}  // namespace smartpg
