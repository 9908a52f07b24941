#pragma once

// Multitask warm-start predictor: a shared fully-connected trunk feeding
// seven task heads (Va, Vm, Pg, Qg, lambda, Z, mu).  The Z head additionally
// sees the predicted X, and the mu head sees both predicted X and Z.  Trained
// with a Charbonnier supervised loss plus four physics losses (power balance,
// bound penalty, cost match, Lagrangian consistency).

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "smartpg/ad.hpp"
#include "smartpg/ipm.hpp"

namespace smartpg::mtl {

using ad::Tape;
using ad::Tensor;
using ad::Var;

constexpr int kFormatVersion = 1;

struct MtlError : std::runtime_error {
  explicit MtlError(const std::string& w) : std::runtime_error(w) {}
};

// ---------------------------------------------------------------------------

enum class Task { Va, Vm, Pg, Qg, Lambda, Mu, Z };
inline const char* task_name(Task t) {
  switch (t) {
    case Task::Va: return "va";
    case Task::Vm: return "vm";
    case Task::Pg: return "pg";
    case Task::Qg: return "qg";
    case Task::Lambda: return "lambda";
    case Task::Mu: return "mu";
    case Task::Z: return "z";
  }
  return "?";
}
inline constexpr Task kTasks[] = {Task::Va, Task::Vm,     Task::Pg, Task::Qg,
                                  Task::Lambda, Task::Mu, Task::Z};

struct MtlTopology {
  int input_dim = 0;
  std::vector<int> shared_dims;
  std::map<std::string, int> head_out;  // task name -> output dim
  int n_bus = 0, n_gen = 0, n_eq = 0, n_ineq = 0;

  int n_x() const { return 2 * n_bus + 2 * n_gen; }
  bool sigmoid_head(Task t) const { return t == Task::Mu || t == Task::Z; }
  int head_in(Task t) const {
    const int trunk = shared_dims.back();
    if (t == Task::Z) return trunk + n_x();
    if (t == Task::Mu) return trunk + n_x() + n_ineq;
    return trunk;
  }
};

inline MtlTopology build_topology(const GridCase& c) {
  const Dimensions d = dimensions(c);
  MtlTopology t;
  t.n_bus = d.n_bus;
  t.n_gen = d.n_gen;
  t.n_eq = d.n_eq;
  t.n_ineq = d.n_ineq;
  t.input_dim = 2 * d.n_bus;
  for (int i = 0; i < 5; ++i)
    t.shared_dims.push_back(
        static_cast<int>(std::lround(t.input_dim * (1.0 + 0.2 * i))));
  t.head_out["va"] = d.n_bus;
  t.head_out["vm"] = d.n_bus;
  t.head_out["pg"] = d.n_gen;
  t.head_out["qg"] = d.n_gen;
  t.head_out["lambda"] = d.n_eq;
  t.head_out["mu"] = d.n_ineq;
  t.head_out["z"] = d.n_ineq;
  return t;
}

// ---------------------------------------------------------------------------

struct Normalizer {
  enum class Mode { Standardize, MinMax };
  Mode mode = Mode::Standardize;
  VectorXd a;  // mean or min
  VectorXd b;  // std (floored) or max-min (floored)

  static Normalizer fit(Mode m, const std::vector<VectorXd>& rows) {
    Normalizer n;
    n.mode = m;
    const int d = static_cast<int>(rows.front().size());
    if (m == Mode::Standardize) {
      VectorXd mean = VectorXd::Zero(d), var = VectorXd::Zero(d);
      for (const auto& r : rows) mean += r;
      mean /= static_cast<double>(rows.size());
      for (const auto& r : rows) var += (r - mean).cwiseAbs2();
      var /= static_cast<double>(rows.size());
      n.a = mean;
      n.b = var.cwiseSqrt().cwiseMax(1e-12);
    } else {
      VectorXd lo = rows.front(), hi = rows.front();
      for (const auto& r : rows) {
        lo = lo.cwiseMin(r);
        hi = hi.cwiseMax(r);
      }
      n.a = lo;
      n.b = (hi - lo).cwiseMax(1e-12);
    }
    return n;
  }
  VectorXd normalize(const VectorXd& x) const {
    return (x - a).cwiseQuotient(b);
  }
  VectorXd denormalize(const VectorXd& y) const {
    return y.cwiseProduct(b) + a;
  }
  // On-tape affine inverse transform: y*b + a.
  Var denorm_var(Tape& t, Var y) const {
    Var bb = t.constant(Tensor::from_vec(b));
    Var aa = t.constant(Tensor::from_vec(a));
    return ad::add(t, ad::mul(t, y, bb), aa);
  }
};

struct LossWeights {
  double w_va = 1.0, w_vm = 1.0, w_pg = 1.0, w_qg = 1.0, w_lambda = 1.0,
         w_mu = 1.0, w_z = 1.0;
  bool use_ac = true, use_ieq = true, use_lag = true, use_cost = true;
  double w_ac = 1.0, w_ieq = 1.0, w_lag = 1.0, w_cost = 1.0;
  double epsilon = 1e-9;

  double task_weight(Task t) const {
    switch (t) {
      case Task::Va: return w_va;
      case Task::Vm: return w_vm;
      case Task::Pg: return w_pg;
      case Task::Qg: return w_qg;
      case Task::Lambda: return w_lambda;
      case Task::Mu: return w_mu;
      case Task::Z: return w_z;
    }
    return 1.0;
  }
};

struct TrainConfig {
  int epochs = 100;
  int batch_size = 64;
  double lr = 1e-3;
  double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
  int detach_period = 2;  // every k-th epoch trains the main task only
  std::uint64_t seed = 1;
};

// ---------------------------------------------------------------------------

struct Sample {
  VectorXd pd, qd;          // p.u. loads (model input)
  VectorXd x;               // flattened primal solution
  VectorXd lambda, mu, z;   // duals and slacks
  double f0 = 0;            // objective at the solution
};

struct Dataset {
  std::vector<Sample> train, val;
};

// ---------------------------------------------------------------------------

// Deterministic normal deviates independent of the standard library's
// distribution implementations.
inline double next_gaussian(std::mt19937_64& rng) {
  while (true) {
    const double u = 2.0 * (static_cast<double>(rng() >> 11) * 0x1p-53) - 1.0;
    const double v = 2.0 * (static_cast<double>(rng() >> 11) * 0x1p-53) - 1.0;
    const double s = u * u + v * v;
    if (s > 0.0 && s < 1.0) return u * std::sqrt(-2.0 * std::log(s) / s);
  }
}

struct Layer {
  Tensor w, b;  // w: {in, out}, b: {out}
};

struct MtlNet {
  MtlTopology topo;
  std::vector<Layer> shared;
  std::map<std::string, Layer> heads;
  Normalizer in_norm;
  std::map<std::string, Normalizer> target_norm;

  std::vector<Tensor*> parameters() {
    std::vector<Tensor*> p;
    for (auto& l : shared) {
      p.push_back(&l.w);
      p.push_back(&l.b);
    }
    for (auto t : kTasks) {
      auto& l = heads.at(task_name(t));
      p.push_back(&l.w);
      p.push_back(&l.b);
    }
    return p;
  }
};

inline MtlNet init_net(const MtlTopology& topo, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto make_layer = [&](int in, int out) {
    Layer l;
    l.w = Tensor({in, out});
    const double s = std::sqrt(2.0 / in);
    for (auto& v : l.w.data) v = s * next_gaussian(rng);
    l.b = Tensor({out});
    return l;
  };
  MtlNet net;
  net.topo = topo;
  int prev = topo.input_dim;
  for (int d : topo.shared_dims) {
    net.shared.push_back(make_layer(prev, d));
    prev = d;
  }
  for (auto t : kTasks)
    net.heads[task_name(t)] =
        make_layer(topo.head_in(t), topo.head_out.at(task_name(t)));
  return net;
}

// Forward pass over a batch.  Outputs live in normalized space.  When
// `detach_aux` is set, every input feeding an auxiliary head (trunk features
// and upstream predictions) is detached, so only the four X heads propagate
// gradients into the trunk.
struct Prediction {
  std::map<std::string, Var> out;  // normalized-space head outputs
  Var trunk = -1;
};

struct TapedNet {
  std::vector<std::pair<Var, Var>> shared;          // (w, b) nodes
  std::map<std::string, std::pair<Var, Var>> heads;
};

inline TapedNet push_params(Tape& t, MtlNet& net) {
  TapedNet tn;
  for (auto& l : net.shared)
    tn.shared.push_back({t.push(l.w), t.push(l.b)});
  for (auto task : kTasks) {
    auto& l = net.heads.at(task_name(task));
    tn.heads[task_name(task)] = {t.push(l.w), t.push(l.b)};
  }
  return tn;
}

inline Prediction forward(Tape& t, const MtlTopology& topo, const TapedNet& tn,
                          Var input, bool detach_aux = false) {
  Var h = input;
  for (const auto& [w, b] : tn.shared)
    h = ad::relu(t, ad::add(t, ad::matmul(t, h, w), b));

  auto head = [&](Task task, Var in) {
    const auto& [w, b] = tn.heads.at(task_name(task));
    Var o = ad::add(t, ad::matmul(t, in, w), b);
    return topo.sigmoid_head(task) ? ad::sigmoid(t, o) : o;
  };

  Prediction p;
  p.trunk = h;
  for (auto task : {Task::Va, Task::Vm, Task::Pg, Task::Qg})
    p.out[task_name(task)] = head(task, h);
  Var aux_h = detach_aux ? ad::detach(t, h) : h;
  p.out["lambda"] = head(Task::Lambda, aux_h);

  Var pred_x = ad::concat(t, ad::concat(t, p.out["va"], p.out["vm"]),
                          ad::concat(t, p.out["pg"], p.out["qg"]));
  Var x_for_aux = detach_aux ? ad::detach(t, pred_x) : pred_x;
  p.out["z"] = head(Task::Z, ad::concat(t, aux_h, x_for_aux));
  Var z_for_mu = detach_aux ? ad::detach(t, p.out["z"]) : p.out["z"];
  p.out["mu"] =
      head(Task::Mu, ad::concat(t, ad::concat(t, aux_h, x_for_aux), z_for_mu));
  return p;
}

// ---------------------------------------------------------------------------
// Losses.  Supervised terms act on normalized tensors; physics terms act on
// denormalized per-sample slices.

inline Var charbonnier(Tape& t, Var pred, Var truth, double eps) {
  return ad::mean(t, ad::smooth_abs(t, ad::sub(t, pred, truth), eps));
}

inline Var loss_supervised(Tape& t, const Prediction& p,
                           const std::map<std::string, Var>& truth,
                           const LossWeights& w) {
  Var total = t.constant(Tensor::scalar(0.0));
  for (auto task : kTasks) {
    Var term = charbonnier(t, p.out.at(task_name(task)),
                           truth.at(task_name(task)), w.epsilon);
    total = ad::add(t, total, ad::scale(t, term, w.task_weight(task)));
  }
  return ad::scale(t, total, 1.0 / 7.0);
}

// Per-sample denormalized prediction slices on the tape.
struct DenormSample {
  Var va, vm, pg, qg, lambda, mu, z;
};

inline Var loss_ac(Tape& t, const ad::PhysicsKernels& kern,
                   const DenormSample& s, Var pd, Var qd, double eps) {
  auto r = kern.ac_residual(t, pd, qd, s.va, s.vm, s.pg, s.qg);
  return ad::add(t, ad::mean(t, ad::smooth_abs(t, r.p, eps)),
                 ad::mean(t, ad::smooth_abs(t, r.q, eps)));
}

inline Var loss_ieq(Tape& t, const ad::PhysicsKernels& kern, const PfModel& m,
                    const DenormSample& s) {
  std::vector<Var> terms;
  if (!m.flow_branches().empty()) {
    // Feasible flow means h <= 0, i.e. H = -h >= 0; penalty is e^{-H} = e^{h}.
    Var h = kern.flow_h(t, s.va, s.vm);
    terms.push_back(ad::exp_clip(t, h));
  }
  // Bound terms for finite, non-pinned bounds only.
  const auto& rows = m.bound_rows();
  if (!rows.empty()) {
    Var x = ad::concat(t, ad::concat(t, s.va, s.vm),
                       ad::concat(t, s.pg, s.qg));
    std::vector<int> idx;
    Tensor sign({static_cast<int>(rows.size())});
    Tensor off({static_cast<int>(rows.size())});
    for (std::size_t i = 0; i < rows.size(); ++i) {
      idx.push_back(rows[i].var);
      sign.data[i] = rows[i].upper ? 1.0 : -1.0;
      off.data[i] = rows[i].upper ? -rows[i].bound : rows[i].bound;
    }
    Var gx = ad::gather(t, x, idx);
    Var arg = ad::add(t, ad::mul(t, gx, t.constant(std::move(sign))),
                      t.constant(std::move(off)));
    terms.push_back(ad::exp_clip(t, arg));
  }
  int count = 0;
  Var total = t.constant(Tensor::scalar(0.0));
  for (Var v : terms) {
    count += t.val(v).numel();
    total = ad::add(t, total, ad::sum(t, v));
  }
  return count ? ad::scale(t, total, 1.0 / count) : total;
}

inline Var loss_cost(Tape& t, const ad::PhysicsKernels& kern,
                     const DenormSample& s, double f0, double eps) {
  Var f = kern.cost_poly(t, s.pg);
  Var diff = ad::add(t, f, t.constant(Tensor::scalar(-f0)));
  return ad::scale(t, ad::smooth_abs(t, diff, eps), 1.0 / (1.0 + std::abs(f0)));
}

inline Var loss_lag(Tape& t, const ad::PhysicsKernels& kern, const PfModel& m,
                    const DenormSample& s, Var pd, Var qd, double eps) {
  auto r = kern.ac_residual(t, pd, qd, s.va, s.vm, s.pg, s.qg);
  // g includes the reference-angle row appended after the balance rows.
  Var ref_row = ad::add(
      t, ad::gather(t, s.va, {m.ref_bus()}),
      t.constant(Tensor::scalar(-m.grid().buses[m.ref_bus()].va0)));
  Var g = ad::concat(t, ad::concat(t, r.p, r.q), ref_row);
  Var term1 = ad::smooth_abs(t, ad::sum(t, ad::mul(t, s.lambda, g)), eps);

  // H(X) = -h(X) over flow rows, then bound margins, matching mu's layout.
  std::vector<Var> hps;
  if (!m.flow_branches().empty())
    hps.push_back(ad::scale(t, kern.flow_h(t, s.va, s.vm), -1.0));
  const auto& rows = m.bound_rows();
  if (!rows.empty()) {
    Var x = ad::concat(t, ad::concat(t, s.va, s.vm),
                       ad::concat(t, s.pg, s.qg));
    std::vector<int> idx;
    Tensor sign({static_cast<int>(rows.size())});
    Tensor off({static_cast<int>(rows.size())});
    for (std::size_t i = 0; i < rows.size(); ++i) {
      idx.push_back(rows[i].var);
      sign.data[i] = rows[i].upper ? -1.0 : 1.0;
      off.data[i] = rows[i].upper ? rows[i].bound : -rows[i].bound;
    }
    hps.push_back(ad::add(t,
                          ad::mul(t, ad::gather(t, x, idx),
                                  t.constant(std::move(sign))),
                          t.constant(std::move(off))));
  }
  Var bigh = hps.size() == 2 ? ad::concat(t, hps[0], hps[1]) : hps[0];
  Var term2 = ad::smooth_abs(
      t, ad::sum(t, ad::mul(t, s.mu, ad::add(t, bigh, s.z))), eps);
  return ad::scale(t, ad::add(t, term1, term2), 0.5);
}

// ---------------------------------------------------------------------------

struct EpochLog {
  double l_sup = 0, l_ac = 0, l_ieq = 0, l_lag = 0, l_cost = 0;
  double val_sup = 0, val_ac = 0, val_ieq = 0, val_lag = 0, val_cost = 0;
};

struct TrainLog {
  std::vector<EpochLog> epochs;

  std::string csv() const {
    std::ostringstream os;
    os.precision(17);
    os << "epoch,L,L_eqn,L_ieq,L_lag,L_fX,val_L,val_L_eqn,val_L_ieq,"
          "val_L_lag,val_L_fX\n";
    for (std::size_t i = 0; i < epochs.size(); ++i) {
      const auto& e = epochs[i];
      os << (i + 1) << ',' << e.l_sup << ',' << e.l_ac << ',' << e.l_ieq << ','
         << e.l_lag << ',' << e.l_cost << ',' << e.val_sup << ',' << e.val_ac
         << ',' << e.val_ieq << ',' << e.val_lag << ',' << e.val_cost << '\n';
    }
    return os.str();
  }
};

class Trainer {
 public:
  Trainer(MtlNet& net, const PfModel& model, const LossWeights& w,
          const TrainConfig& cfg)
      : net_(&net), model_(&model), kern_(model), w_(w), cfg_(cfg) {}

  void fit_normalizers(const std::vector<Sample>& train) {
    auto col = [&](auto get) {
      std::vector<VectorXd> rows;
      rows.reserve(train.size());
      for (const auto& s : train) rows.push_back(get(s));
      return rows;
    };
    const auto& topo = net_->topo;
    net_->in_norm = Normalizer::fit(Normalizer::Mode::Standardize,
        col([](const Sample& s) {
          VectorXd v(s.pd.size() + s.qd.size());
          v << s.pd, s.qd;
          return v;
        }));
    const int nb = topo.n_bus, ng = topo.n_gen;
    net_->target_norm["va"] = Normalizer::fit(Normalizer::Mode::Standardize,
        col([&](const Sample& s) { return s.x.head(nb).eval(); }));
    net_->target_norm["vm"] = Normalizer::fit(Normalizer::Mode::Standardize,
        col([&](const Sample& s) { return s.x.segment(nb, nb).eval(); }));
    net_->target_norm["pg"] = Normalizer::fit(Normalizer::Mode::Standardize,
        col([&](const Sample& s) { return s.x.segment(2 * nb, ng).eval(); }));
    net_->target_norm["qg"] = Normalizer::fit(Normalizer::Mode::Standardize,
        col([&](const Sample& s) { return s.x.tail(ng).eval(); }));
    net_->target_norm["lambda"] = Normalizer::fit(
        Normalizer::Mode::Standardize,
        col([](const Sample& s) { return s.lambda; }));
    net_->target_norm["mu"] = Normalizer::fit(
        Normalizer::Mode::MinMax, col([](const Sample& s) { return s.mu; }));
    net_->target_norm["z"] = Normalizer::fit(
        Normalizer::Mode::MinMax, col([](const Sample& s) { return s.z; }));
  }

  TrainLog train(const Dataset& data) {
    if (data.train.empty()) throw MtlError("empty training set");
    fit_normalizers(data.train);
    init_adam();
    std::mt19937_64 rng(cfg_.seed);

    TrainLog log;
    std::vector<int> order(data.train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

    for (int epoch = 1; epoch <= cfg_.epochs; ++epoch) {
      const bool detach_epoch =
          cfg_.detach_period > 1 && epoch % cfg_.detach_period == 0;
      // Fisher-Yates with our own deterministic index draws.
      for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[rng() % i]);

      EpochLog el;
      int batches = 0;
      for (std::size_t at = 0; at < order.size();
           at += static_cast<std::size_t>(cfg_.batch_size)) {
        std::vector<int> batch(
            order.begin() + static_cast<long>(at),
            order.begin() +
                static_cast<long>(std::min(
                    at + static_cast<std::size_t>(cfg_.batch_size),
                    order.size())));
        auto terms = run_batch(data.train, batch, detach_epoch, true);
        el.l_sup += terms[0];
        el.l_ac += terms[1];
        el.l_ieq += terms[2];
        el.l_lag += terms[3];
        el.l_cost += terms[4];
        ++batches;
      }
      el.l_sup /= batches;
      el.l_ac /= batches;
      el.l_ieq /= batches;
      el.l_lag /= batches;
      el.l_cost /= batches;

      if (!data.val.empty()) {
        std::vector<int> all(data.val.size());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
        auto vt = run_batch(data.val, all, false, false);
        el.val_sup = vt[0];
        el.val_ac = vt[1];
        el.val_ieq = vt[2];
        el.val_lag = vt[3];
        el.val_cost = vt[4];
      }
      log.epochs.push_back(el);
    }
    return log;
  }

  // Evaluate the five loss terms on a sample set without updating weights.
  std::array<double, 5> evaluate(const std::vector<Sample>& samples) {
    std::vector<int> all(samples.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
    return run_batch(samples, all, false, false);
  }

 private:
  void init_adam() {
    auto params = net_->parameters();
    m_.clear();
    v_.clear();
    for (Tensor* p : params) {
      m_.emplace_back(p->shape);
      v_.emplace_back(p->shape);
    }
    step_ = 0;
  }

  std::array<double, 5> run_batch(const std::vector<Sample>& pool,
                                  const std::vector<int>& batch,
                                  bool detach_epoch, bool update) {
    const auto& topo = net_->topo;
    const int bs = static_cast<int>(batch.size());

    Tape t;
    TapedNet tn = push_params(t, *net_);

    Tensor in({bs, topo.input_dim});
    std::map<std::string, Tensor> truth_t;
    for (auto task : kTasks)
      truth_t[task_name(task)] =
          Tensor({bs, topo.head_out.at(task_name(task))});
    const int nb = topo.n_bus, ng = topo.n_gen;
    for (int r = 0; r < bs; ++r) {
      const Sample& s = pool[batch[r]];
      VectorXd load(2 * nb);
      load << s.pd, s.qd;
      const VectorXd ln = net_->in_norm.normalize(load);
      std::copy(ln.data(), ln.data() + ln.size(),
                in.data.begin() + static_cast<long>(r) * topo.input_dim);
      auto put = [&](const char* k, const VectorXd& v) {
        const VectorXd n = net_->target_norm.at(k).normalize(v);
        auto& tt = truth_t[k];
        std::copy(n.data(), n.data() + n.size(),
                  tt.data.begin() + static_cast<long>(r) * n.size());
      };
      put("va", s.x.head(nb));
      put("vm", s.x.segment(nb, nb));
      put("pg", s.x.segment(2 * nb, ng));
      put("qg", s.x.tail(ng));
      put("lambda", s.lambda);
      put("mu", s.mu);
      put("z", s.z);
    }

    Var input = t.constant(std::move(in));
    Prediction pred = forward(t, topo, tn, input, detach_epoch);
    std::map<std::string, Var> truth;
    for (auto& [k, v] : truth_t) truth[k] = t.constant(std::move(v));

    Var l_sup = loss_supervised(t, pred, truth, w_);

    Var l_ac = t.constant(Tensor::scalar(0.0));
    Var l_ieq = t.constant(Tensor::scalar(0.0));
    Var l_lag = t.constant(Tensor::scalar(0.0));
    Var l_cost = t.constant(Tensor::scalar(0.0));
    const bool physics = w_.use_ac || w_.use_ieq || w_.use_lag || w_.use_cost;
    if (physics) {
      for (int r = 0; r < bs; ++r) {
        const Sample& s = pool[batch[r]];
        DenormSample ds = denorm_row(t, pred, r);
        Var pd = t.constant(Tensor::from_vec(s.pd));
        Var qd = t.constant(Tensor::from_vec(s.qd));
        if (w_.use_ac)
          l_ac = ad::add(t, l_ac, loss_ac(t, kern_, ds, pd, qd, w_.epsilon));
        if (w_.use_ieq)
          l_ieq = ad::add(t, l_ieq, loss_ieq(t, kern_, *model_, ds));
        if (w_.use_lag)
          l_lag = ad::add(t, l_lag,
                          loss_lag(t, kern_, *model_, ds, pd, qd, w_.epsilon));
        if (w_.use_cost)
          l_cost = ad::add(t, l_cost, loss_cost(t, kern_, ds, s.f0, w_.epsilon));
      }
      l_ac = ad::scale(t, l_ac, 1.0 / bs);
      l_ieq = ad::scale(t, l_ieq, 1.0 / bs);
      l_lag = ad::scale(t, l_lag, 1.0 / bs);
      l_cost = ad::scale(t, l_cost, 1.0 / bs);
    }

    Var total = l_sup;
    if (w_.use_ac) total = ad::add(t, total, ad::scale(t, l_ac, w_.w_ac));
    if (w_.use_ieq) total = ad::add(t, total, ad::scale(t, l_ieq, w_.w_ieq));
    if (w_.use_lag) total = ad::add(t, total, ad::scale(t, l_lag, w_.w_lag));
    if (w_.use_cost) total = ad::add(t, total, ad::scale(t, l_cost, w_.w_cost));

    std::array<double, 5> out = {t.val(l_sup).data[0], t.val(l_ac).data[0],
                                 t.val(l_ieq).data[0], t.val(l_lag).data[0],
                                 t.val(l_cost).data[0]};
    const char* names[5] = {"L", "L_eqn", "L_ieq", "L_lag", "L_fX"};
    for (int i = 0; i < 5; ++i)
      if (!std::isfinite(out[i]))
        throw MtlError(std::string("non-finite loss term ") + names[i]);

    if (update) {
      t.backward(total);
      apply_adam(t, tn);
    }
    return out;
  }

  DenormSample denorm_row(Tape& t, const Prediction& pred, int r) {
    DenormSample d;
    auto dn = [&](const char* k) {
      return net_->target_norm.at(k).denorm_var(
          t, ad::row(t, pred.out.at(k), r));
    };
    d.va = dn("va");
    d.vm = dn("vm");
    d.pg = dn("pg");
    d.qg = dn("qg");
    d.lambda = dn("lambda");
    d.mu = dn("mu");
    d.z = dn("z");
    return d;
  }

  void apply_adam(Tape& t, const TapedNet& tn) {
    ++step_;
    auto params = net_->parameters();
    std::vector<Var> nodes;
    for (const auto& [w, b] : tn.shared) {
      nodes.push_back(w);
      nodes.push_back(b);
    }
    for (auto task : kTasks) {
      const auto& [w, b] = tn.heads.at(task_name(task));
      nodes.push_back(w);
      nodes.push_back(b);
    }
    const double bc1 = 1.0 - std::pow(cfg_.beta1, step_);
    const double bc2 = 1.0 - std::pow(cfg_.beta2, step_);
    for (std::size_t i = 0; i < params.size(); ++i) {
      const auto& g = t.adj(nodes[i]).data;
      auto& m = m_[i].data;
      auto& v = v_[i].data;
      auto& p = params[i]->data;
      for (std::size_t j = 0; j < p.size(); ++j) {
        m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * g[j];
        v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * g[j] * g[j];
        p[j] -= cfg_.lr * (m[j] / bc1) /
                (std::sqrt(v[j] / bc2) + cfg_.adam_eps);
      }
    }
  }

  MtlNet* net_;
  const PfModel* model_;
  ad::PhysicsKernels kern_;
  LossWeights w_;
  TrainConfig cfg_;
  std::vector<Tensor> m_, v_;
  long step_ = 0;
};

// ---------------------------------------------------------------------------
// Baseline for the multitask-vs-separate comparison: seven independent
// networks of matched size, each trained on a single task (physics terms off,
// all other task weights zero).

struct SeparateNets {
  std::vector<MtlNet> nets;  // one per entry of kTasks
};

inline SeparateNets train_separate(const MtlTopology& topo,
                                   const PfModel& model, const Dataset& data,
                                   const TrainConfig& cfg) {
  SeparateNets sn;
  for (std::size_t k = 0; k < std::size(kTasks); ++k) {
    LossWeights w;
    w.use_ac = w.use_ieq = w.use_lag = w.use_cost = false;
    w.w_va = w.w_vm = w.w_pg = w.w_qg = w.w_lambda = w.w_mu = w.w_z = 0.0;
    switch (kTasks[k]) {
      case Task::Va: w.w_va = 1.0; break;
      case Task::Vm: w.w_vm = 1.0; break;
      case Task::Pg: w.w_pg = 1.0; break;
      case Task::Qg: w.w_qg = 1.0; break;
      case Task::Lambda: w.w_lambda = 1.0; break;
      case Task::Mu: w.w_mu = 1.0; break;
      case Task::Z: w.w_z = 1.0; break;
    }
    MtlNet net = init_net(topo, cfg.seed + k);
    TrainConfig c2 = cfg;
    c2.seed = cfg.seed + 101 * k;
    Trainer trainer(net, model, w, c2);
    trainer.train(data);
    sn.nets.push_back(std::move(net));
  }
  return sn;
}

// ---------------------------------------------------------------------------

inline WarmStart predict_warm_start(MtlNet& net, const VectorXd& pd,
                                    const VectorXd& qd) {
  const auto& topo = net.topo;
  VectorXd load(2 * topo.n_bus);
  load << pd, qd;
  Tape t;
  TapedNet tn = push_params(t, net);
  Tensor in({1, topo.input_dim});
  const VectorXd ln = net.in_norm.normalize(load);
  std::copy(ln.data(), ln.data() + ln.size(), in.data.begin());
  Prediction p = forward(t, topo, tn, t.constant(std::move(in)));

  auto dn = [&](const char* k) {
    return net.target_norm.at(k).denormalize(t.val(p.out.at(k)).to_vec());
  };
  WarmStart ws;
  VectorXd x(topo.n_x());
  x << dn("va"), dn("vm"), dn("pg"), dn("qg");
  ws.x = x;
  ws.lambda = dn("lambda");
  ws.mu = dn("mu");
  ws.z = dn("z");
  return ws;
}

// Assemble a warm start taking each component from the network trained on it.
inline WarmStart predict_warm_start(SeparateNets& sn, const VectorXd& pd,
                                    const VectorXd& qd) {
  const auto& topo = sn.nets.front().topo;
  std::map<std::string, VectorXd> parts;
  for (std::size_t k = 0; k < std::size(kTasks); ++k) {
    WarmStart w = predict_warm_start(sn.nets[k], pd, qd);
    switch (kTasks[k]) {
      case Task::Va: parts["va"] = w.x->head(topo.n_bus); break;
      case Task::Vm: parts["vm"] = w.x->segment(topo.n_bus, topo.n_bus); break;
      case Task::Pg: parts["pg"] = w.x->segment(2 * topo.n_bus, topo.n_gen); break;
      case Task::Qg: parts["qg"] = w.x->tail(topo.n_gen); break;
      case Task::Lambda: parts["lambda"] = *w.lambda; break;
      case Task::Mu: parts["mu"] = *w.mu; break;
      case Task::Z: parts["z"] = *w.z; break;
    }
  }
  WarmStart ws;
  VectorXd x(topo.n_x());
  x << parts.at("va"), parts.at("vm"), parts.at("pg"), parts.at("qg");
  ws.x = x;
  ws.lambda = parts.at("lambda");
  ws.mu = parts.at("mu");
  ws.z = parts.at("z");
  return ws;
}

// ---------------------------------------------------------------------------

inline nlohmann::json tensor_json(const Tensor& t) {
  return {{"shape", t.shape}, {"data", t.data}};
}
inline Tensor tensor_from_json(const nlohmann::json& j) {
  return Tensor(j.at("shape").get<std::vector<int>>(),
                j.at("data").get<std::vector<double>>());
}
inline nlohmann::json norm_json(const Normalizer& n) {
  return {{"mode", n.mode == Normalizer::Mode::Standardize ? "standardize"
                                                           : "minmax"},
          {"a", std::vector<double>(n.a.data(), n.a.data() + n.a.size())},
          {"b", std::vector<double>(n.b.data(), n.b.data() + n.b.size())}};
}
inline Normalizer norm_from_json(const nlohmann::json& j) {
  Normalizer n;
  n.mode = j.at("mode").get<std::string>() == "minmax"
               ? Normalizer::Mode::MinMax
               : Normalizer::Mode::Standardize;
  auto a = j.at("a").get<std::vector<double>>();
  auto b = j.at("b").get<std::vector<double>>();
  n.a = Eigen::Map<const VectorXd>(a.data(), static_cast<long>(a.size()));
  n.b = Eigen::Map<const VectorXd>(b.data(), static_cast<long>(b.size()));
  return n;
}

inline void save_model(const MtlNet& net, const std::string& path) {
  nlohmann::json j;
  j["format_version"] = kFormatVersion;
  j["topology"] = {{"input_dim", net.topo.input_dim},
                   {"shared_dims", net.topo.shared_dims},
                   {"n_bus", net.topo.n_bus},
                   {"n_gen", net.topo.n_gen},
                   {"n_eq", net.topo.n_eq},
                   {"n_ineq", net.topo.n_ineq}};
  nlohmann::json shared = nlohmann::json::array();
  for (const auto& l : net.shared)
    shared.push_back({{"w", tensor_json(l.w)}, {"b", tensor_json(l.b)}});
  j["shared"] = shared;
  for (auto task : kTasks) {
    const auto& l = net.heads.at(task_name(task));
    j["heads"][task_name(task)] = {{"w", tensor_json(l.w)},
                                   {"b", tensor_json(l.b)}};
  }
  j["in_norm"] = norm_json(net.in_norm);
  for (const auto& [k, n] : net.target_norm) j["target_norm"][k] = norm_json(n);

  std::ofstream f(path);
  if (!f) throw MtlError("cannot write model file " + path);
  f << j.dump();
}

inline MtlNet load_model(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw MtlError("cannot read model file " + path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw MtlError(std::string("model parse error: ") + e.what());
  }
  if (j.at("format_version").get<int>() != kFormatVersion)
    throw MtlError("unsupported model format version");

  MtlNet net;
  const auto& tj = j.at("topology");
  net.topo.input_dim = tj.at("input_dim").get<int>();
  net.topo.shared_dims = tj.at("shared_dims").get<std::vector<int>>();
  net.topo.n_bus = tj.at("n_bus").get<int>();
  net.topo.n_gen = tj.at("n_gen").get<int>();
  net.topo.n_eq = tj.at("n_eq").get<int>();
  net.topo.n_ineq = tj.at("n_ineq").get<int>();
  net.topo.head_out["va"] = net.topo.n_bus;
  net.topo.head_out["vm"] = net.topo.n_bus;
  net.topo.head_out["pg"] = net.topo.n_gen;
  net.topo.head_out["qg"] = net.topo.n_gen;
  net.topo.head_out["lambda"] = net.topo.n_eq;
  net.topo.head_out["mu"] = net.topo.n_ineq;
  net.topo.head_out["z"] = net.topo.n_ineq;
  for (const auto& lj : j.at("shared"))
    net.shared.push_back(
        {tensor_from_json(lj.at("w")), tensor_from_json(lj.at("b"))});
  for (auto task : kTasks) {
    const auto& lj = j.at("heads").at(task_name(task));
    net.heads[task_name(task)] = {tensor_from_json(lj.at("w")),
                                  tensor_from_json(lj.at("b"))};
  }
  if (j.contains("in_norm")) net.in_norm = norm_from_json(j.at("in_norm"));
  if (j.contains("target_norm"))
    for (const auto& [k, nj] : j.at("target_norm").items())
      net.target_norm[k] = norm_from_json(nj);
  return net;
}

}  // namespace smartpg::mtl
