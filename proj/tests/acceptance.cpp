// Acceptance harness: exercises the full toolkit end to end and prints one
// PASS/FAIL line per criterion.  Exit code is the number of failed criteria.
//
// Criteria:
//   1. cold-start solver correctness against frozen oracle objectives
//   2. derivative correctness (analytic vs finite differences)
//   3. warm-start fixed point in <= 3 iterations
//   4. warm-start ablation orderings over 200 scenarios x 3 cases
//   5. learned warm start end to end on case9 (1,000 scenarios)
//   6. physics losses improve validation residual and success rate
//   7. multitask model vs seven separate networks
//   8. metric formulas, 16-row ablation table, exact 80/20 split
//   9. byte-identical CLI reruns under --deterministic

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "smartpg/case.hpp"
#include "smartpg/experiment.hpp"
#include "smartpg/ipm.hpp"
#include "smartpg/mtl.hpp"
#include "smartpg/pf.hpp"
#include "test_util.hpp"

using namespace smartpg;

namespace {

int g_failures = 0;

void report(int criterion, bool ok, const std::string& detail) {
  std::cout << (ok ? "PASS" : "FAIL") << ": criterion " << criterion << " — "
            << detail << std::endl;
  if (!ok) ++g_failures;
}

void run(int criterion, const std::function<std::pair<bool, std::string>()>& f) {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = false;
  std::string detail;
  try {
    std::tie(ok, detail) = f();
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  const double dt =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  std::ostringstream os;
  os << detail << " [" << static_cast<int>(dt) << " s]";
  report(criterion, ok, os.str());
}

// Reference objectives ($/hr) from an independent nonlinear-programming
// solver run offline on the bundled case files.
struct Oracle {
  const char* name;
  double objective;
};
const Oracle kOracles[] = {
    {"case9", 5296.686204},   {"case14", 8081.524743}, {"case30", 982.418247},
    {"case57", 41737.786898}, {"case118", 48083.240236},
};

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1p-53;
}

// Random interior point: midpoint of the finite box plus a small jitter.
OpfVector interior_point(const PfModel& m, std::mt19937_64& rng,
                         double jitter = 0.05) {
  const auto& b = m.bounds();
  VectorXd x(m.dim().n_x);
  for (int i = 0; i < x.size(); ++i) {
    const double lo = std::isfinite(b.x_min[i]) ? b.x_min[i] : -1.0;
    const double hi = std::isfinite(b.x_max[i]) ? b.x_max[i] : 1.0;
    x[i] = 0.5 * (lo + hi) + jitter * (2.0 * uniform01(rng) - 1.0);
  }
  return OpfVector::from_flat(x, m.dim());
}

double rel_err(const VectorXd& got, const VectorXd& want) {
  const double scale = std::max(1.0, want.norm());
  return (got - want).norm() / scale;
}

// ---------------------------------------------------------------------------

std::pair<bool, std::string> criterion1() {
  std::ostringstream os;
  bool ok = true;
  for (const auto& o : kOracles) {
    GridCase c = testutil::load_case(o.name);
    PfModel model(c);
    auto [st, rep] = solve(model);
    const double rel =
        std::abs(rep.objective - o.objective) / std::abs(o.objective);
    const bool this_ok = rep.converged && rep.iterations <= 50 && rel < 1e-4;
    ok = ok && this_ok;
    os << o.name << (this_ok ? " ok" : " BAD") << "(" << rep.iterations
       << " it, rel " << rel << ") ";
  }
  return {ok, "cold-start solves vs oracle objectives: " + os.str()};
}

std::pair<bool, std::string> criterion2() {
  std::mt19937_64 rng(2024);
  double worst_jac = 0, worst_hess = 0;

  for (const auto& o : kOracles) {
    GridCase c = testutil::load_case(o.name);
    PfModel m(c);
    const int n = m.dim().n_x;
    for (int pt = 0; pt < 20; ++pt) {
      OpfVector x = interior_point(m, rng);
      VectorXd v(n);
      for (int i = 0; i < n; ++i) v[i] = 2.0 * uniform01(rng) - 1.0;
      v /= v.norm();
      const double h = 1e-6;
      auto at = [&](double s) {
        return OpfVector::from_flat(x.flat() + s * v, m.dim());
      };

      // Directional FD of g and h against J*v.
      const VectorXd jg_v = m.jac_g(x) * v;
      const VectorXd fd_g = (m.residual_g(at(h)) - m.residual_g(at(-h))) / (2 * h);
      worst_jac = std::max(worst_jac, rel_err(jg_v, fd_g));
      const VectorXd jh_v = m.jac_full_h(x) * v;
      const VectorXd fd_h = (m.full_h(at(h)) - m.full_h(at(-h))) / (2 * h);
      worst_jac = std::max(worst_jac, rel_err(jh_v, fd_h));

      // Lagrangian Hessian against directional FD of its gradient.
      VectorXd lam(m.dim().n_eq), mu(m.dim().n_ineq);
      for (int i = 0; i < lam.size(); ++i) lam[i] = 2.0 * uniform01(rng) - 1.0;
      for (int i = 0; i < mu.size(); ++i) mu[i] = uniform01(rng);
      const VectorXd mu_flow = mu.head(2 * m.n_flow());
      auto grad_lag = [&](const OpfVector& p) {
        VectorXd g = m.grad_f(p);
        g += m.jac_g(p).transpose() * lam;
        g += m.jac_full_h(p).transpose() * mu;
        return g;
      };
      const VectorXd hv = m.hess_lagrangian(x, lam, mu_flow) * v;
      const VectorXd fd_hv = (grad_lag(at(h)) - grad_lag(at(-h))) / (2 * h);
      worst_hess = std::max(worst_hess, rel_err(hv, fd_hv));
    }
  }

  // Autodiff loss gradients on a tiny net: perturb one trunk weight and one
  // head weight, compare reverse-mode adjoints against central differences
  // for each of the five loss terms separately.
  GridCase c = testutil::load_case("case9");
  PfModel model(c);
  auto topo = mtl::build_topology(c);
  mtl::MtlNet base = mtl::init_net(topo, 71);

  // One synthetic supervised sample from a converged solve.
  auto [st, rep] = solve(model);
  mtl::Sample s;
  s.pd = model.pd_pu();
  s.qd = model.qd_pu();
  s.x = st.x.flat();
  s.lambda = st.lambda;
  s.mu = st.mu;
  s.z = st.z;
  s.f0 = rep.objective;
  std::vector<mtl::Sample> train = {s, s, s};
  // Perturb copies so the normalizers have nonzero spread.
  std::mt19937_64 prng(5);
  for (auto& t : train) {
    for (int i = 0; i < t.x.size(); ++i)
      t.x[i] += 0.01 * (2.0 * uniform01(prng) - 1.0);
    for (int i = 0; i < t.z.size(); ++i) t.z[i] += 0.01 * uniform01(prng);
  }

  double worst_ad = 0;
  for (int term = 0; term < 5; ++term) {
    mtl::LossWeights w;
    w.use_ac = term == 1;
    w.use_ieq = term == 2;
    w.use_lag = term == 3;
    w.use_cost = term == 4;
    if (term != 0)
      w.w_va = w.w_vm = w.w_pg = w.w_qg = w.w_lambda = w.w_mu = w.w_z = 0.0;

    auto term_value = [&](mtl::MtlNet& net) {
      mtl::TrainConfig cfg;
      cfg.epochs = 0;
      mtl::Trainer tr(net, model, w, cfg);
      tr.fit_normalizers(train);
      auto terms = tr.evaluate(train);
      return terms[0] + terms[1] + terms[2] + terms[3] + terms[4];
    };

    // Adjoint via one zero-lr "training" step is unavailable; recompute the
    // tape directly through Trainer internals is private, so use FD on two
    // weights against an FD-of-FD sanity plus reverse mode via run of
    // evaluate on shifted nets and the tape assembled here.
    for (auto pick : {std::pair<int, int>{0, 3}, std::pair<int, int>{-1, 2}}) {
      mtl::MtlNet net = base;
      mtl::Tensor* wt = pick.first >= 0 ? &net.shared[0].w
                                        : &net.heads.at("vm").w;
      const int idx = pick.second;

      // Reverse-mode adjoint from a hand-assembled tape mirroring evaluate.
      mtl::TrainConfig cfg;
      cfg.epochs = 0;
      mtl::Trainer tr(net, model, w, cfg);
      tr.fit_normalizers(train);
      mtl::Tape t;
      mtl::TapedNet tn = mtl::push_params(t, net);
      const int bs = static_cast<int>(train.size());
      mtl::Tensor in({bs, topo.input_dim});
      std::map<std::string, mtl::Tensor> truth_t;
      for (auto task : mtl::kTasks)
        truth_t[mtl::task_name(task)] =
            mtl::Tensor({bs, topo.head_out.at(mtl::task_name(task))});
      const int nb = topo.n_bus, ng = topo.n_gen;
      for (int r = 0; r < bs; ++r) {
        const mtl::Sample& smp = train[r];
        VectorXd load(2 * nb);
        load << smp.pd, smp.qd;
        VectorXd ln = net.in_norm.normalize(load);
        std::copy(ln.data(), ln.data() + ln.size(),
                  in.data.begin() + static_cast<long>(r) * topo.input_dim);
        auto put = [&](const char* k, const VectorXd& vv) {
          VectorXd nn = net.target_norm.at(k).normalize(vv);
          std::copy(nn.data(), nn.data() + nn.size(),
                    truth_t[k].data.begin() + static_cast<long>(r) * nn.size());
        };
        put("va", smp.x.head(nb));
        put("vm", smp.x.segment(nb, nb));
        put("pg", smp.x.segment(2 * nb, ng));
        put("qg", smp.x.tail(ng));
        put("lambda", smp.lambda);
        put("mu", smp.mu);
        put("z", smp.z);
      }
      auto pred = mtl::forward(t, topo, tn, t.constant(std::move(in)));
      std::map<std::string, mtl::Var> truth;
      for (auto& [k, v] : truth_t) truth[k] = t.constant(std::move(v));
      ad::PhysicsKernels kern(model);
      mtl::Var total = mtl::loss_supervised(t, pred, truth, w);
      if (term != 0) {
        mtl::Var acc = t.constant(mtl::Tensor::scalar(0.0));
        for (int r = 0; r < bs; ++r) {
          const mtl::Sample& smp = train[r];
          mtl::DenormSample ds;
          auto dn = [&](const char* k) {
            return net.target_norm.at(k).denorm_var(
                t, ad::row(t, pred.out.at(k), r));
          };
          ds.va = dn("va");
          ds.vm = dn("vm");
          ds.pg = dn("pg");
          ds.qg = dn("qg");
          ds.lambda = dn("lambda");
          ds.mu = dn("mu");
          ds.z = dn("z");
          mtl::Var pd = t.constant(mtl::Tensor::from_vec(smp.pd));
          mtl::Var qd = t.constant(mtl::Tensor::from_vec(smp.qd));
          mtl::Var v = term == 1 ? mtl::loss_ac(t, kern, ds, pd, qd, w.epsilon)
                       : term == 2
                           ? mtl::loss_ieq(t, kern, model, ds)
                           : term == 3
                                 ? mtl::loss_lag(t, kern, model, ds, pd, qd,
                                                 w.epsilon)
                                 : mtl::loss_cost(t, kern, ds, s.f0, w.epsilon);
          acc = ad::add(t, acc, v);
        }
        total = ad::add(t, total, ad::scale(t, acc, 1.0 / bs));
      }
      t.backward(total);
      const mtl::Var node = pick.first >= 0 ? tn.shared[0].first
                                            : tn.heads.at("vm").first;
      const double got = t.adj(node).data[idx];

      const double fd_h = 1e-6;
      mtl::MtlNet np = base, nm = base;
      (pick.first >= 0 ? np.shared[0].w : np.heads.at("vm").w).data[idx] += fd_h;
      (pick.first >= 0 ? nm.shared[0].w : nm.heads.at("vm").w).data[idx] -= fd_h;
      const double fd = (term_value(np) - term_value(nm)) / (2 * fd_h);
      worst_ad = std::max(worst_ad,
                          std::abs(got - fd) / std::max(1.0, std::abs(fd)));
    }
  }

  std::ostringstream os;
  os << "directional FD: jac " << worst_jac << ", hess " << worst_hess
     << ", loss-term autodiff " << worst_ad << " (all < 1e-5 required)";
  return {worst_jac < 1e-5 && worst_hess < 1e-5 && worst_ad < 1e-5, os.str()};
}

std::pair<bool, std::string> criterion3() {
  std::ostringstream os;
  bool ok = true;
  for (const auto& o : kOracles) {
    GridCase c = testutil::load_case(o.name);
    PfModel model(c);
    auto [st, rep] = solve(model);
    WarmStart ws;
    ws.x = st.x.flat();
    ws.lambda = st.lambda;
    ws.mu = st.mu;
    ws.z = st.z;
    auto [st2, rep2] = solve(model, ws);
    const double rel =
        std::abs(rep2.objective - rep.objective) / std::abs(rep.objective);
    const bool this_ok = rep2.converged && rep2.iterations <= 3 && rel < 1e-8;
    ok = ok && this_ok;
    os << o.name << (this_ok ? " ok" : " BAD") << "(" << rep2.iterations
       << " it) ";
  }
  return {ok, "self warm start refixes in <= 3 iterations: " + os.str()};
}

std::pair<bool, std::string> criterion4() {
  std::ostringstream os;
  bool sr_x_all = true, min_1111_all = true, ratio_all = true;
  bool z_hurts_somewhere = false;
  for (const char* name : {"case9", "case14", "case30"}) {
    GridCase c = testutil::load_case(name);
    auto scen = exp::sample_loads(c, 200, 0.1, 1234);
    auto g = exp::generate_dataset(c, scen, {}, true);
    std::vector<exp::Record> all = g.train;
    all.insert(all.end(), g.val.begin(), g.val.end());
    auto table = exp::ablation_run(c, all, {}, true);

    const auto& base = table.rows[0];
    const auto& x_only = table.rows[8];
    const auto& full = table.rows[15];
    const bool sr_x = x_only.sr == 1.0;
    double min_iters = 1e30;
    for (const auto& r : table.rows)
      if (r.converged) min_iters = std::min(min_iters, r.mean_iters);
    const bool is_min = full.mean_iters <= min_iters + 1e-12;
    const bool ratio = base.mean_iters > 0 &&
                       full.mean_iters / base.mean_iters <= 0.5;
    if (table.rows[1].sr < base.sr) z_hurts_somewhere = true;
    sr_x_all = sr_x_all && sr_x;
    min_1111_all = min_1111_all && is_min;
    ratio_all = ratio_all && ratio;
    os << name << "[SR(1000)=" << x_only.sr << ", iters 1111/0000 "
       << full.mean_iters << "/" << base.mean_iters << ", SR(0001)="
       << table.rows[1].sr << " vs SR(0000)=" << base.sr << "] ";
  }
  const bool ok = sr_x_all && min_1111_all && ratio_all && z_hurts_somewhere;
  if (!z_hurts_somewhere) os << "(no system showed SR(0001) < SR(0000)) ";
  return {ok, "ablation orderings, 200 scenarios each: " + os.str()};
}

// Shared artifacts between criteria 5-7.
struct TrainedBundle {
  GridCase c;
  exp::GenResult data;
  mtl::MtlNet net;       // physics-trained model
  exp::MetricsReport rep;
  bool ready = false;
};
TrainedBundle g_bundle;

std::pair<bool, std::string> criterion5() {
  GridCase c = testutil::load_case("case9");
  auto scen = exp::sample_loads(c, 1000, 0.1, 7777);
  auto g = exp::generate_dataset(c, scen, {}, true);
  auto data = exp::to_mtl_dataset(g, c.base_mva);

  PfModel model(c);
  auto topo = mtl::build_topology(c);
  mtl::MtlNet net = mtl::init_net(topo, 1);
  mtl::TrainConfig cfg;
  cfg.epochs = 40;
  cfg.seed = 1;
  mtl::Trainer trainer(net, model, mtl::LossWeights{}, cfg);
  trainer.train(data);

  auto rep = exp::bench(c, net, g.val, {}, true);
  double worst_median = 0;
  for (const char* k : {"va", "vm", "pg", "qg"})
    worst_median = std::max(worst_median, rep.mape_median.at(k));

  g_bundle = {c, std::move(g), std::move(net), rep, true};

  std::ostringstream os;
  os << "case9, 1000 scenarios: SR " << rep.sr << " (>= 0.9), iter ratio "
     << rep.iter_ratio << " (<= 0.6), worst median X MAPE " << worst_median
     << "% (<= 5%)";
  return {rep.sr >= 0.9 && rep.iter_ratio <= 0.6 && worst_median <= 5.0,
          os.str()};
}

std::pair<bool, std::string> criterion6() {
  if (!g_bundle.ready) return {false, "skipped: criterion 5 artifacts missing"};
  GridCase& c = g_bundle.c;
  PfModel model(c);
  auto topo = mtl::build_topology(c);

  // Smaller matched setup: identical seed, dataset and epochs; only the
  // physics terms differ.
  exp::GenResult sub;
  sub.train.assign(g_bundle.data.train.begin(),
                   g_bundle.data.train.begin() +
                       std::min<std::size_t>(240, g_bundle.data.train.size()));
  sub.val.assign(g_bundle.data.val.begin(),
                 g_bundle.data.val.begin() +
                     std::min<std::size_t>(60, g_bundle.data.val.size()));
  auto data = exp::to_mtl_dataset(sub, c.base_mva);

  mtl::TrainConfig cfg;
  cfg.epochs = 15;
  cfg.seed = 3;

  mtl::MtlNet with = mtl::init_net(topo, 3);
  mtl::Trainer t1(with, model, mtl::LossWeights{}, cfg);
  t1.train(data);

  mtl::LossWeights off;
  off.use_ac = off.use_ieq = off.use_lag = off.use_cost = false;
  mtl::MtlNet without = mtl::init_net(topo, 3);
  mtl::Trainer t2(without, model, off, cfg);
  t2.train(data);

  // Validation power-balance residual, measured identically for both.
  mtl::LossWeights eval_w;
  mtl::TrainConfig eval_cfg;
  eval_cfg.epochs = 0;
  mtl::Trainer e1(with, model, eval_w, eval_cfg);
  mtl::Trainer e2(without, model, eval_w, eval_cfg);
  const double ac_with = e1.evaluate(data.val)[1];
  const double ac_without = e2.evaluate(data.val)[1];

  auto r1 = exp::bench(c, with, sub.val, {}, true);
  auto r2 = exp::bench(c, without, sub.val, {}, true);

  std::ostringstream os;
  os << "val f_AC " << ac_with << " (physics) vs " << ac_without
     << " (supervised only); SR " << r1.sr << " vs " << r2.sr;
  return {ac_with < ac_without && r1.sr >= r2.sr, os.str()};
}

std::pair<bool, std::string> criterion7() {
  if (!g_bundle.ready) return {false, "skipped: criterion 5 artifacts missing"};
  GridCase& c = g_bundle.c;
  PfModel model(c);
  auto topo = mtl::build_topology(c);

  exp::GenResult sub;
  sub.train.assign(g_bundle.data.train.begin(),
                   g_bundle.data.train.begin() +
                       std::min<std::size_t>(240, g_bundle.data.train.size()));
  sub.val.assign(g_bundle.data.val.begin(),
                 g_bundle.data.val.begin() +
                     std::min<std::size_t>(60, g_bundle.data.val.size()));
  auto data = exp::to_mtl_dataset(sub, c.base_mva);

  mtl::TrainConfig cfg;
  cfg.epochs = 10;
  cfg.seed = 4;

  mtl::MtlNet joint = mtl::init_net(topo, 4);
  mtl::Trainer tr(joint, model, mtl::LossWeights{}, cfg);
  tr.train(data);
  auto rj = exp::bench(c, joint, sub.val, {}, true);

  auto sep = mtl::train_separate(topo, model, data, cfg);
  int converged = 0;
  for (const auto& rec : sub.val) {
    GridCase sc = exp::with_loads(c, rec.scenario);
    PfModel m2(sc);
    WarmStart ws = mtl::predict_warm_start(sep, rec.scenario.pd / c.base_mva,
                                           rec.scenario.qd / c.base_mva);
    auto [st, rep] = solve(m2, ws);
    if (rep.converged) ++converged;
  }
  const double sr_sep =
      static_cast<double>(converged) / static_cast<double>(sub.val.size());

  std::ostringstream os;
  os << "SR multitask " << rj.sr << " vs seven separate nets " << sr_sep;
  return {rj.sr >= sr_sep, os.str()};
}

std::pair<bool, std::string> criterion8() {
  bool ok = true;
  std::ostringstream os;

  ok &= std::abs(exp::metric_su(10, 0.1, 3, 1.0) - 10.0 / 3.1) < 1e-15;
  ok &= std::abs(exp::metric_su(10, 0.1, 3, 0.9) - 10.0 / 4.1) < 1e-15;
  ok &= exp::metric_su(7, 0, 7, 1.0) == 1.0;
  ok &= exp::metric_su(10, 0.1, 3, 0.0) < 1.0;

  VectorXd a(2), b(2);
  a << 1.1, 2.2;
  b << 1.0, 2.0;
  ok &= std::abs(exp::metric_mape(a, b) - 10.0) < 1e-6;
  a << 1.0, 2.0;
  ok &= exp::metric_mape(a, b) < 1e-6;

  ok &= exp::metric_sf(0.050, 0.001) == 50.0;
  ok &= exp::metric_lcost({100.0, 200.0}, {100.0, 200.0}) == 0.0;
  ok &= std::abs(exp::metric_lcost({101.0}, {100.0}) - 1.0) < 1e-12;

  GridCase c = testutil::load_case("case9");
  auto scen = exp::sample_loads(c, 10, 0.05, 99);
  auto g = exp::generate_dataset(c, scen, {}, true);
  const bool split_ok = g.train.size() == 8 && g.val.size() == 2;
  ok &= split_ok;
  std::vector<exp::Record> all = g.train;
  all.insert(all.end(), g.val.begin(), g.val.end());
  auto table = exp::ablation_run(c, all, {}, true);
  ok &= table.rows.size() == 16;

  os << "metric formulas exact, split 8/2 " << (split_ok ? "ok" : "BAD")
     << ", ablation rows " << table.rows.size();
  return {ok, os.str()};
}

std::pair<bool, std::string> criterion9() {
  const std::string cli = "./build/smartpg";
  if (!std::ifstream(cli).good())
    return {false, "CLI binary not found at " + cli};

  auto sh = [&](const std::string& cmd) {
    return std::system((cmd + " > /dev/null 2>&1").c_str()) == 0;
  };
  auto same = [&](const std::string& a, const std::string& b) {
    std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
    if (!fa || !fb) return false;
    std::ostringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    return sa.str() == sb.str() && !sa.str().empty();
  };

  const std::string dir = "build/acceptance_tmp";
  std::system(("rm -rf " + dir + " && mkdir -p " + dir).c_str());
  const std::string cs = "tests/data/case9.json";
  bool ok = true;
  std::ostringstream os;

  for (const char* tag : {"a", "b"}) {
    const std::string p = dir + "/" + tag;
    ok &= sh(cli + " --deterministic dataset gen " + cs +
             " -n 30 -t 0.1 --seed 3 -o " + p + "_data.jsonl");
    ok &= sh(cli + " --deterministic train " + cs + " " + p +
             "_data.jsonl --epochs 2 --seed 5 -o " + p + "_model.json --log " +
             p + "_train.csv");
    ok &= sh(cli + " --deterministic ablate " + cs + " " + p +
             "_data.jsonl -o " + p + "_ablation.csv");
    ok &= sh(cli + " --deterministic bench " + cs + " " + p + "_model.json " +
             p + "_data.jsonl -o " + p + "_metrics.json");
  }
  if (!ok) return {false, "a CLI invocation failed"};

  for (const char* f :
       {"data.jsonl", "model.json", "train.csv", "ablation.csv",
        "metrics.json"}) {
    const bool eq = same(dir + "/a_" + f, dir + "/b_" + f);
    ok &= eq;
    os << f << (eq ? " ok " : " DIFFERS ");
  }
  return {ok, "deterministic CLI reruns byte-identical: " + os.str()};
}

}  // namespace

int main() {
  run(1, criterion1);
  run(2, criterion2);
  run(3, criterion3);
  run(4, criterion4);
  run(5, criterion5);
  run(6, criterion6);
  run(7, criterion7);
  run(8, criterion8);
  run(9, criterion9);
  std::cout << (g_failures == 0 ? "ALL CRITERIA PASSED"
                                : std::to_string(g_failures) +
                                      " CRITERIA FAILED")
            << std::endl;
  return g_failures;
}
