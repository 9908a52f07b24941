#pragma once

// Scenario sampling, ground-truth dataset generation, the 16-mask warm-start
// ablation, quality-prior model morphing (deep/wide), benchmarking of a
// trained predictor, and the associated metrics (SU, SR, SF, L_cost, MAPE).

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "smartpg/ipm.hpp"
#include "smartpg/mtl.hpp"

namespace smartpg::exp {

struct ExperimentError : std::runtime_error {
  explicit ExperimentError(const std::string& w) : std::runtime_error(w) {}
};

// ---------------------------------------------------------------------------

struct Scenario {
  std::uint64_t id = 0;
  VectorXd pd, qd;  // MW / MVAr
};

inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1p-53;
}

// Splitmix-style scramble used both for scenario ids and for the 80/20
// train/validation ordering.
inline std::uint64_t scramble(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::vector<Scenario> sample_loads(const GridCase& c, int n, double t,
                                          std::uint64_t seed) {
  if (t < 0 || t >= 1) throw ExperimentError("variation must be in [0, 1)");
  std::mt19937_64 rng(seed);
  const int nb = static_cast<int>(c.buses.size());
  std::vector<Scenario> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    Scenario s;
    s.id = scramble(seed ^ static_cast<std::uint64_t>(i) * 0x100000001b3ULL);
    s.pd = VectorXd(nb);
    s.qd = VectorXd(nb);
    for (int b = 0; b < nb; ++b) {
      const double dp = c.buses[b].pd, dq = c.buses[b].qd;
      s.pd[b] = dp == 0 ? 0.0 : dp * (1.0 - t + 2.0 * t * uniform01(rng));
      s.qd[b] = dq == 0 ? 0.0 : dq * (1.0 - t + 2.0 * t * uniform01(rng));
    }
    out.push_back(std::move(s));
  }
  return out;
}

inline GridCase with_loads(GridCase c, const Scenario& s) {
  for (std::size_t b = 0; b < c.buses.size(); ++b) {
    c.buses[b].pd = s.pd[static_cast<int>(b)];
    c.buses[b].qd = s.qd[static_cast<int>(b)];
  }
  return c;
}

// ---------------------------------------------------------------------------

struct GroundTruth {
  VectorXd x, lambda, mu, z;
  double f0 = 0;
  double solve_time = 0;
  int iterations = 0;
};

struct Record {
  Scenario scenario;
  GroundTruth truth;
};

struct GenResult {
  std::vector<Record> train, val;
  std::vector<std::uint64_t> rejects;  // scenario ids that failed to converge
};

inline GenResult generate_dataset(const GridCase& c,
                                  const std::vector<Scenario>& scenarios,
                                  const IpmOptions& opts = {},
                                  bool deterministic = false) {
  std::set<std::uint64_t> seen;
  for (const auto& s : scenarios)
    if (!seen.insert(s.id).second)
      throw ExperimentError("duplicate scenario id");

  std::vector<Record> accepted;
  GenResult out;
  for (const auto& s : scenarios) {
    GridCase sc = with_loads(c, s);
    PfModel model(sc);
    auto [st, rep] = solve(model, std::nullopt, opts);
    if (!rep.converged) {
      out.rejects.push_back(s.id);
      continue;
    }
    GroundTruth gt;
    gt.x = st.x.flat();
    gt.lambda = st.lambda;
    gt.mu = st.mu;
    gt.z = st.z;
    gt.f0 = rep.objective;
    gt.solve_time = deterministic ? 0.0 : rep.wall_time;
    gt.iterations = rep.iterations;
    accepted.push_back({s, std::move(gt)});
  }

  // Deterministic 80/20 split: order by scrambled id, first 80% train.
  std::vector<std::size_t> idx(accepted.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    const auto ha = scramble(accepted[a].scenario.id);
    const auto hb = scramble(accepted[b].scenario.id);
    return ha != hb ? ha < hb : accepted[a].scenario.id < accepted[b].scenario.id;
  });
  const std::size_t n_train = accepted.size() * 8 / 10;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    auto& dst = i < n_train ? out.train : out.val;
    dst.push_back(std::move(accepted[idx[i]]));
  }
  return out;
}

inline mtl::Sample to_sample(const Record& r, double base_mva) {
  mtl::Sample s;
  s.pd = r.scenario.pd / base_mva;
  s.qd = r.scenario.qd / base_mva;
  s.x = r.truth.x;
  s.lambda = r.truth.lambda;
  s.mu = r.truth.mu;
  s.z = r.truth.z;
  s.f0 = r.truth.f0;
  return s;
}

inline mtl::Dataset to_mtl_dataset(const GenResult& g, double base_mva) {
  mtl::Dataset d;
  for (const auto& r : g.train) d.train.push_back(to_sample(r, base_mva));
  for (const auto& r : g.val) d.val.push_back(to_sample(r, base_mva));
  return d;
}

// ---------------------------------------------------------------------------
// JSON-lines persistence: one record per line.

inline nlohmann::json vec_json(const VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}
inline VectorXd vec_from_json(const nlohmann::json& j) {
  auto v = j.get<std::vector<double>>();
  return Eigen::Map<const VectorXd>(v.data(), static_cast<long>(v.size()));
}

inline void save_dataset(const GenResult& g, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw ExperimentError("cannot write dataset file " + path);
  auto dump = [&](const Record& r, const char* split) {
    nlohmann::json j{{"id", r.scenario.id},
                     {"split", split},
                     {"pd", vec_json(r.scenario.pd)},
                     {"qd", vec_json(r.scenario.qd)},
                     {"x", vec_json(r.truth.x)},
                     {"lambda", vec_json(r.truth.lambda)},
                     {"mu", vec_json(r.truth.mu)},
                     {"z", vec_json(r.truth.z)},
                     {"f0", r.truth.f0},
                     {"solve_time", r.truth.solve_time},
                     {"iterations", r.truth.iterations}};
    f << j.dump() << '\n';
  };
  for (const auto& r : g.train) dump(r, "train");
  for (const auto& r : g.val) dump(r, "val");
}

inline GenResult load_dataset(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ExperimentError("cannot read dataset file " + path);
  GenResult g;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ExperimentError(std::string("dataset parse error: ") + e.what());
    }
    Record r;
    r.scenario.id = j.at("id").get<std::uint64_t>();
    r.scenario.pd = vec_from_json(j.at("pd"));
    r.scenario.qd = vec_from_json(j.at("qd"));
    r.truth.x = vec_from_json(j.at("x"));
    r.truth.lambda = vec_from_json(j.at("lambda"));
    r.truth.mu = vec_from_json(j.at("mu"));
    r.truth.z = vec_from_json(j.at("z"));
    r.truth.f0 = j.at("f0").get<double>();
    r.truth.solve_time = j.at("solve_time").get<double>();
    r.truth.iterations = j.at("iterations").get<int>();
    (j.at("split").get<std::string>() == "train" ? g.train : g.val)
        .push_back(std::move(r));
  }
  return g;
}

// ---------------------------------------------------------------------------
// Metrics.

inline double metric_su(double t_mips, double t_mtl, double t_mips_warm,
                        double sr) {
  return t_mips / (t_mtl + t_mips_warm + t_mips * (1.0 - sr));
}

// Inference-only speedup factor: full-solve time over inference time.
inline double metric_sf(double t_solve, double t_infer) {
  return t_solve / t_infer;
}

// Percent cost gap: (100/n) sum |1 - predicted/true|.
inline double metric_lcost(const std::vector<double>& pred,
                           const std::vector<double>& truth) {
  if (pred.size() != truth.size())
    throw ExperimentError("lcost: length mismatch");
  double s = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (truth[i] == 0) continue;  // division guard
    s += std::abs(1.0 - pred[i] / truth[i]);
    ++n;
  }
  return n ? 100.0 * s / static_cast<double>(n) : 0.0;
}

inline double metric_mape(const VectorXd& x, const VectorXd& gt,
                          double eps = 1e-9) {
  if (x.size() != gt.size()) throw ExperimentError("mape: length mismatch");
  double s = 0;
  for (int i = 0; i < x.size(); ++i) s += std::abs(x[i] - gt[i]) / (gt[i] + eps);
  return 100.0 * s / static_cast<double>(x.size());
}

// ---------------------------------------------------------------------------
// Warm-start ablation over all 16 precise/imprecise combinations.

struct AblationMask {
  bool x = false, lambda = false, mu = false, z = false;

  static AblationMask from_index(int i) {
    // Bit order: X, lambda, mu, Z (mask "1000" = precise X only).
    return {(i & 8) != 0, (i & 4) != 0, (i & 2) != 0, (i & 1) != 0};
  }
  int index() const {
    return (x ? 8 : 0) | (lambda ? 4 : 0) | (mu ? 2 : 0) | (z ? 1 : 0);
  }
  std::string str() const {
    return {x ? '1' : '0', lambda ? '1' : '0', mu ? '1' : '0', z ? '1' : '0'};
  }
};

inline WarmStart masked_warm_start(const GroundTruth& gt,
                                   const AblationMask& m) {
  WarmStart ws;
  if (m.x) ws.x = gt.x;
  if (m.lambda) ws.lambda = gt.lambda;
  if (m.mu) ws.mu = gt.mu;
  if (m.z) ws.z = gt.z;
  return ws;
}

struct AblationRow {
  AblationMask mask;
  double sr = 0;        // fraction of scenarios converged without fallback
  double su_time = 0;   // mean cold-time / warm-time over converged pairs
  double su_iters = 0;  // mean cold-iterations / warm-iterations
  double mean_iters = 0;
  int converged = 0, total = 0;
};

struct AblationTable {
  std::vector<AblationRow> rows;  // 16 rows, mask index order

  std::string csv() const {
    std::ostringstream os;
    os.precision(17);
    os << "mask,sr,su_time,su_iters,mean_iters,converged,total\n";
    for (const auto& r : rows)
      os << r.mask.str() << ',' << r.sr << ',' << r.su_time << ','
         << r.su_iters << ',' << r.mean_iters << ',' << r.converged << ','
         << r.total << '\n';
    return os.str();
  }
  nlohmann::json to_json() const {
    nlohmann::json rows_j = nlohmann::json::array();
    for (const auto& r : rows)
      rows_j.push_back({{"mask", r.mask.str()}, {"sr", r.sr},
                        {"su_time", r.su_time}, {"su_iters", r.su_iters},
                        {"mean_iters", r.mean_iters},
                        {"converged", r.converged}, {"total", r.total}});
    return {{"rows", rows_j}};
  }
};

inline AblationTable ablation_run(const GridCase& c,
                                  const std::vector<Record>& records,
                                  const IpmOptions& opts = {},
                                  bool deterministic = false) {
  AblationTable table;
  for (int mi = 0; mi < 16; ++mi) {
    const AblationMask mask = AblationMask::from_index(mi);
    AblationRow row;
    row.mask = mask;
    row.total = static_cast<int>(records.size());
    double su_t = 0, su_i = 0, iters = 0;
    for (const auto& rec : records) {
      GridCase sc = with_loads(c, rec.scenario);
      PfModel model(sc);
      std::optional<WarmStart> ws;
      if (mask.index() != 0) ws = masked_warm_start(rec.truth, mask);
      auto [st, rep] = solve(model, ws, opts);
      if (!rep.converged) continue;
      ++row.converged;
      iters += rep.iterations;
      if (rec.truth.solve_time > 0 && rep.wall_time > 0)
        su_t += rec.truth.solve_time / rep.wall_time;
      su_i += rep.iterations > 0
                  ? static_cast<double>(rec.truth.iterations) / rep.iterations
                  : static_cast<double>(rec.truth.iterations);
    }
    if (row.total)
      row.sr = static_cast<double>(row.converged) / row.total;
    if (row.converged) {
      row.su_time = su_t / row.converged;
      row.su_iters = su_i / row.converged;
      row.mean_iters = iters / row.converged;
    }
    if (mask.index() == 0) row.su_time = row.su_iters = 1.0;  // baseline
    if (deterministic) row.su_time = 0.0;
    table.rows.push_back(row);
  }
  return table;
}

// ---------------------------------------------------------------------------
// Benchmark of a trained predictor on the validation split.

struct MetricsReport {
  double sr = 0;          // pre-fallback convergence rate
  double su = 0;          // Eq.-style end-to-end speedup from wall times
  double su_iters = 0;    // same speedup computed from iteration counts
  double sf = 0;          // mean solve-time / inference-time
  double l_cost = 0;      // percent cost gap of the raw prediction
  double iter_ratio = 0;  // mean warm iterations / cold iterations
  std::map<std::string, double> mape_mean, mape_median;
  int n = 0;

  nlohmann::json to_json() const {
    // SF note: the source formula is printed inverted relative to its
    // reported values; we use solve-time over inference-time.
    nlohmann::json mm, md;
    for (const auto& [k, v] : mape_mean) mm[k] = v;
    for (const auto& [k, v] : mape_median) md[k] = v;
    return {{"sr", sr},       {"su", su},     {"su_iters", su_iters},
            {"sf", sf},       {"l_cost", l_cost},
            {"iter_ratio", iter_ratio},       {"n", n},
            {"mape_mean", mm}, {"mape_median", md}};
  }
};

inline double median(std::vector<double> v) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline MetricsReport bench(const GridCase& c, mtl::MtlNet& net,
                           const std::vector<Record>& val,
                           const IpmOptions& opts = {},
                           bool deterministic = false) {
  MetricsReport rep;
  rep.n = static_cast<int>(val.size());
  if (val.empty()) return rep;

  const Dimensions d = dimensions(c);
  const int nb = d.n_bus, ng = d.n_gen;
  double t_infer = 0, t_warm = 0, t_cold = 0;
  double iters_warm = 0, iters_cold = 0;
  int converged = 0;
  double lcost_sum = 0;
  std::map<std::string, std::vector<double>> mapes;

  for (const auto& rec : val) {
    GridCase sc = with_loads(c, rec.scenario);
    PfModel model(sc);

    const auto i0 = std::chrono::steady_clock::now();
    WarmStart ws = mtl::predict_warm_start(net, rec.scenario.pd / c.base_mva,
                                           rec.scenario.qd / c.base_mva);
    t_infer +=
        std::chrono::duration<double>(std::chrono::steady_clock::now() - i0)
            .count();

    auto [st, warm_rep] = solve(model, ws, opts);
    t_warm += warm_rep.wall_time;
    if (warm_rep.converged) {
      ++converged;
      iters_warm += warm_rep.iterations;
    }
    t_cold += rec.truth.solve_time;
    iters_cold += rec.truth.iterations;

    // Cost gap and per-feature errors of the raw prediction.
    OpfVector px = OpfVector::from_flat(*ws.x, d);
    const double cpred = model.cost_f(px);
    if (rec.truth.f0 != 0)
      lcost_sum += std::abs(1.0 - cpred / rec.truth.f0);
    mapes["va"].push_back(metric_mape(ws.x->head(nb), rec.truth.x.head(nb)));
    mapes["vm"].push_back(
        metric_mape(ws.x->segment(nb, nb), rec.truth.x.segment(nb, nb)));
    mapes["pg"].push_back(
        metric_mape(ws.x->segment(2 * nb, ng), rec.truth.x.segment(2 * nb, ng)));
    mapes["qg"].push_back(metric_mape(ws.x->tail(ng), rec.truth.x.tail(ng)));
    mapes["lambda"].push_back(metric_mape(*ws.lambda, rec.truth.lambda));
    mapes["mu"].push_back(metric_mape(*ws.mu, rec.truth.mu));
    mapes["z"].push_back(metric_mape(*ws.z, rec.truth.z));
  }

  const double n = static_cast<double>(val.size());
  rep.sr = converged / n;
  rep.l_cost = 100.0 * lcost_sum / n;
  rep.iter_ratio = (converged && iters_cold > 0)
                       ? (iters_warm / converged) / (iters_cold / n)
                       : 0.0;
  if (!deterministic && t_cold > 0 && t_infer > 0) {
    rep.su = metric_su(t_cold / n, t_infer / n, t_warm / n, rep.sr);
    rep.sf = metric_sf(t_cold / n, t_infer / n);
  }
  if (converged)
    rep.su_iters = metric_su(iters_cold / n, 0.0, iters_warm / converged,
                             rep.sr);
  for (auto& [k, v] : mapes) {
    double s = 0;
    for (double x : v) s += x;
    rep.mape_mean[k] = s / n;
    rep.mape_median[k] = median(v);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Quality-prior morphism: probe which precisely-known components help most,
// then grow the trunk (alternating deepen/widen) and retrain.

inline void morph_deep(mtl::MtlNet& net) {
  const int w = net.topo.shared_dims.back();
  mtl::Layer l;
  l.w = mtl::Tensor({w, w});
  for (int i = 0; i < w; ++i) l.w.data[i * w + i] = 1.0;  // identity
  l.b = mtl::Tensor({w});
  net.shared.push_back(std::move(l));
  net.topo.shared_dims.push_back(w);
}

inline void morph_wide(mtl::MtlNet& net, double p = 0.10) {
  const int old_w = net.topo.shared_dims.back();
  const int add = std::max(1, static_cast<int>(std::lround(old_w * p)));
  const int new_w = old_w + add;

  // Widen the last shared layer with zero-initialized columns.
  mtl::Layer& last = net.shared.back();
  const int in = last.w.shape[0];
  mtl::Tensor w2({in, new_w});
  for (int i = 0; i < in; ++i)
    for (int j = 0; j < old_w; ++j)
      w2.data[i * new_w + j] = last.w.data[i * old_w + j];
  mtl::Tensor b2({new_w});
  std::copy(last.b.data.begin(), last.b.data.end(), b2.data.begin());
  last.w = std::move(w2);
  last.b = std::move(b2);

  // Insert matching zero rows into every head's trunk block.
  for (auto& [name, head] : net.heads) {
    const int hin = head.w.shape[0], hout = head.w.shape[1];
    mtl::Tensor hw({hin + add, hout});
    for (int i = 0; i < hin + add; ++i) {
      const int src = i < old_w ? i : (i < new_w ? -1 : i - add);
      if (src < 0) continue;  // new zero row
      std::copy(head.w.data.begin() + src * hout,
                head.w.data.begin() + (src + 1) * hout,
                hw.data.begin() + static_cast<long>(i) * hout);
    }
    head.w = std::move(hw);
  }
  net.topo.shared_dims.back() = new_w;
}

struct MorphResult {
  int iterations = 0;
  bool met = false;
  AblationMask best_prior;
};

inline MorphResult quality_prior_morphism(
    mtl::MtlNet& net, const GridCase& c, const GenResult& data,
    double target_mape, const mtl::TrainConfig& retrain_cfg,
    const mtl::LossWeights& weights = {}, const IpmOptions& solver_opts = {},
    int max_rounds = 3, int probe_scenarios = 8) {
  PfModel model(c);
  MorphResult res;

  auto val_mape = [&]() {
    const Dimensions d = dimensions(c);
    std::vector<double> worst;
    double m = 0;
    for (const auto& rec : data.val) {
      WarmStart ws = mtl::predict_warm_start(
          net, rec.scenario.pd / c.base_mva, rec.scenario.qd / c.base_mva);
      m = std::max(m, metric_mape(ws.x->head(d.n_bus + d.n_bus),
                                  rec.truth.x.head(d.n_bus + d.n_bus)));
    }
    return m;
  };

  for (int round = 0; round < max_rounds; ++round) {
    if (val_mape() <= target_mape) {
      res.met = true;
      return res;
    }
    // Probe all 16 prior cases on a few scenarios; best = fewest iterations.
    std::vector<Record> probe(data.val.begin(),
                              data.val.begin() +
                                  std::min<std::size_t>(probe_scenarios,
                                                        data.val.size()));
    AblationTable t = ablation_run(c, probe, solver_opts, true);
    double best = -1;
    for (const auto& row : t.rows) {
      const double score = row.sr * 1e6 + row.su_iters;
      if (score > best) {
        best = score;
        res.best_prior = row.mask;
      }
    }
    // Alternate growth: deepen on even rounds, widen on odd ones.
    if (round % 2 == 0)
      morph_deep(net);
    else
      morph_wide(net);
    mtl::Trainer trainer(net, model, weights, retrain_cfg);
    trainer.train(to_mtl_dataset(data, c.base_mva));
    ++res.iterations;
  }
  res.met = val_mape() <= target_mape;
  return res;
}

}  // namespace smartpg::exp
