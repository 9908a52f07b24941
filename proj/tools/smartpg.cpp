// smartpg: AC optimal power flow toolkit command-line interface.
//
// Workflow: import/validate cases, solve single instances, generate labelled
// scenario datasets, train the multitask warm-start predictor, predict warm
// starts, run the 16-mask warm-start ablation, grow an underperforming model
// (quality-prior morphism), and benchmark a trained model.
//
// Exit codes: 0 success, 1 usage error, 2 parse/validation error,
// 3 numerical failure, 4 I/O error.

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "smartpg/case.hpp"
#include "smartpg/experiment.hpp"
#include "smartpg/ipm.hpp"
#include "smartpg/mtl.hpp"
#include "smartpg/pf.hpp"

namespace {

using nlohmann::json;
using namespace smartpg;

constexpr int kExitUsage = 1;
constexpr int kExitParse = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitIo = 4;

struct IoError : std::runtime_error {
  explicit IoError(const std::string& w) : std::runtime_error(w) {}
};

struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& w) : std::runtime_error(w) {}
};

bool g_deterministic = false;

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read " + path);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path);
  f << content;
  if (!f) throw IoError("write failed for " + path);
}

GridCase load_grid(const std::string& path) {
  const std::string text = read_file(path);
  if (path.size() > 2 && path.substr(path.size() - 2) == ".m")
    return import_matpower_m(text);
  return parse_case_json(text);
}

void stamp(json& j) {
  if (g_deterministic) return;
  const auto now = std::chrono::system_clock::now();
  j["timestamp"] = std::chrono::duration_cast<std::chrono::milliseconds>(
                       now.time_since_epoch())
                       .count();
}

std::vector<double> to_std(const VectorXd& v) {
  return {v.data(), v.data() + v.size()};
}

VectorXd from_std(const std::vector<double>& v) {
  return Eigen::Map<const VectorXd>(v.data(), static_cast<long>(v.size()));
}

json warm_start_json(const WarmStart& ws) {
  json j;
  if (ws.x) j["x"] = to_std(*ws.x);
  if (ws.lambda) j["lambda"] = to_std(*ws.lambda);
  if (ws.mu) j["mu"] = to_std(*ws.mu);
  if (ws.z) j["z"] = to_std(*ws.z);
  return j;
}

WarmStart warm_start_from_json(const json& j) {
  WarmStart ws;
  if (j.contains("x")) ws.x = from_std(j.at("x").get<std::vector<double>>());
  if (j.contains("lambda"))
    ws.lambda = from_std(j.at("lambda").get<std::vector<double>>());
  if (j.contains("mu")) ws.mu = from_std(j.at("mu").get<std::vector<double>>());
  if (j.contains("z")) ws.z = from_std(j.at("z").get<std::vector<double>>());
  return ws;
}

std::string with_extension(const std::string& path, const std::string& ext) {
  const auto dot = path.find_last_of('.');
  const auto slash = path.find_last_of('/');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
    return path + ext;
  return path.substr(0, dot) + ext;
}

// ---------------------------------------------------------------------------

int cmd_case_validate(const std::string& path) {
  GridCase c = load_grid(path);
  const Dimensions d = dimensions(c);
  json j{{"valid", true},
         {"n_bus", d.n_bus},
         {"n_gen", d.n_gen},
         {"n_branch", d.n_branch},
         {"n_x", d.n_x},
         {"n_eq", d.n_eq},
         {"n_ineq", d.n_ineq},
         {"base_mva", c.base_mva}};
  std::cout << j.dump(2) << '\n';
  return 0;
}

int cmd_case_import(const std::string& in, const std::string& out) {
  GridCase c = import_matpower_m(read_file(in));
  write_file(out, serialize_case(c));
  std::cerr << "wrote " << out << '\n';
  return 0;
}

int cmd_solve(const std::string& case_path, const std::string& ws_path,
              bool no_fallback, const std::string& out) {
  GridCase c = load_grid(case_path);
  PfModel model(c);

  std::optional<WarmStart> ws;
  if (!ws_path.empty()) {
    json wj;
    try {
      wj = json::parse(read_file(ws_path));
    } catch (const json::exception& e) {
      throw CaseError(std::string("warm-start parse error: ") + e.what());
    }
    ws = warm_start_from_json(wj);
  }

  IpmOptions opts;
  auto [state, report] = no_fallback ? solve(model, ws, opts)
                                     : solve_with_fallback(model, ws, opts);
  if (!report.converged)
    throw NumericalError("solver did not converge within " +
                         std::to_string(report.iterations) + " iterations");

  json j = report.to_json();
  j["solution"] = {{"va", to_std(state.x.va)},
                   {"vm", to_std(state.x.vm)},
                   {"pg", to_std(state.x.pg)},
                   {"qg", to_std(state.x.qg)}};
  j["duals"] = {{"lambda", to_std(state.lambda)},
                {"mu", to_std(state.mu)},
                {"z", to_std(state.z)}};
  if (g_deterministic) j["wall_time"] = 0.0;
  stamp(j);
  if (out.empty()) {
    std::cout << j.dump(2) << '\n';
  } else {
    write_file(out, j.dump(2) + "\n");
    write_file(with_extension(out, ".csv"), report.history_csv());
  }
  return 0;
}

int cmd_dataset_gen(const std::string& case_path, int n, double t,
                    std::uint64_t seed, const std::string& out) {
  GridCase c = load_grid(case_path);
  auto scenarios = exp::sample_loads(c, n, t, seed);
  auto g = exp::generate_dataset(c, scenarios, {}, g_deterministic);
  exp::save_dataset(g, out);
  std::cerr << "accepted " << (g.train.size() + g.val.size()) << "/"
            << scenarios.size() << " scenarios (" << g.train.size()
            << " train, " << g.val.size() << " val, " << g.rejects.size()
            << " rejected)\n";
  return 0;
}

int cmd_train(const std::string& case_path, const std::string& data_path,
              bool no_physics, bool separate_heads, const mtl::TrainConfig& cfg,
              const std::string& out, const std::string& log_path) {
  GridCase c = load_grid(case_path);
  PfModel model(c);
  auto g = exp::load_dataset(data_path);
  if (g.train.empty()) throw CaseError("dataset has no training records");
  mtl::Dataset data = exp::to_mtl_dataset(g, c.base_mva);
  auto topo = mtl::build_topology(c);

  mtl::LossWeights w;
  if (no_physics) w.use_ac = w.use_ieq = w.use_lag = w.use_cost = false;

  if (separate_heads) {
    auto sn = mtl::train_separate(topo, model, data, cfg);
    for (std::size_t k = 0; k < std::size(mtl::kTasks); ++k) {
      const std::string path = with_extension(
          out, std::string(".") + mtl::task_name(mtl::kTasks[k]) + ".json");
      mtl::save_model(sn.nets[k], path);
      std::cerr << "wrote " << path << '\n';
    }
    return 0;
  }

  mtl::MtlNet net = mtl::init_net(topo, cfg.seed);
  mtl::Trainer trainer(net, model, w, cfg);
  auto log = trainer.train(data);
  mtl::save_model(net, out);
  std::cerr << "wrote " << out << '\n';
  if (!log_path.empty()) write_file(log_path, log.csv());
  return 0;
}

int cmd_predict(const std::string& case_path, const std::string& model_path,
                const std::string& loads_path, const std::string& out) {
  GridCase c = load_grid(case_path);
  mtl::MtlNet net = mtl::load_model(model_path);

  json lj;
  try {
    lj = json::parse(read_file(loads_path));
  } catch (const json::exception& e) {
    throw CaseError(std::string("loads parse error: ") + e.what());
  }
  VectorXd pd = from_std(lj.at("pd").get<std::vector<double>>());
  VectorXd qd = from_std(lj.at("qd").get<std::vector<double>>());
  if (pd.size() != static_cast<long>(c.buses.size()) || qd.size() != pd.size())
    throw CaseError("loads length does not match bus count");

  WarmStart ws =
      mtl::predict_warm_start(net, pd / c.base_mva, qd / c.base_mva);
  json j = warm_start_json(ws);
  stamp(j);
  if (out.empty())
    std::cout << j.dump(2) << '\n';
  else
    write_file(out, j.dump(2) + "\n");
  return 0;
}

int cmd_ablate(const std::string& case_path, const std::string& data_path,
               const std::string& out) {
  GridCase c = load_grid(case_path);
  auto g = exp::load_dataset(data_path);
  std::vector<exp::Record> all = g.train;
  all.insert(all.end(), g.val.begin(), g.val.end());
  if (all.empty()) throw CaseError("dataset is empty");
  auto table = exp::ablation_run(c, all, {}, g_deterministic);
  if (out.empty())
    std::cout << table.csv();
  else
    write_file(out, table.csv());
  return 0;
}

int cmd_morph(const std::string& case_path, const std::string& model_path,
              const std::string& data_path, double target_mape,
              const mtl::TrainConfig& cfg, const std::string& out) {
  GridCase c = load_grid(case_path);
  mtl::MtlNet net = mtl::load_model(model_path);
  auto g = exp::load_dataset(data_path);
  if (g.val.empty()) throw CaseError("dataset has no validation records");
  auto res = exp::quality_prior_morphism(net, c, g, target_mape, cfg);
  mtl::save_model(net, out);
  json j{{"met", res.met},
         {"growth_rounds", res.iterations},
         {"best_prior", res.best_prior.str()}};
  stamp(j);
  std::cout << j.dump(2) << '\n';
  return 0;
}

int cmd_bench(const std::string& case_path, const std::string& model_path,
              const std::string& data_path, const std::string& out) {
  GridCase c = load_grid(case_path);
  mtl::MtlNet net = mtl::load_model(model_path);
  auto g = exp::load_dataset(data_path);
  std::vector<exp::Record> val = g.val.empty() ? g.train : g.val;
  auto rep = exp::bench(c, net, val, {}, g_deterministic);
  json j = rep.to_json();
  stamp(j);
  if (out.empty())
    std::cout << j.dump(2) << '\n';
  else
    write_file(out, j.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"AC optimal power flow with learned warm starts"};
  app.require_subcommand(1);

  int threads = 0;
  if (const char* env = std::getenv("SMARTPG_THREADS")) threads = std::atoi(env);
  app.add_flag("--deterministic", g_deterministic,
               "suppress timestamps and wall-clock metrics for reproducible "
               "output");
  app.add_option("-j,--threads", threads,
                 "worker count (overridden by SMARTPG_THREADS)");

  // case validate / case import
  auto* cmd_case = app.add_subcommand("case", "case file operations");
  cmd_case->require_subcommand(1);
  std::string case_file;
  auto* validate = cmd_case->add_subcommand("validate", "parse and check a case");
  validate->add_option("file", case_file, "case file (.json or .m)")->required();
  std::string import_in, import_out;
  auto* import = cmd_case->add_subcommand("import", "convert a MATPOWER .m case");
  import->add_option("file", import_in, "input .m file")->required();
  import->add_option("-o,--output", import_out, "output .json path")->required();

  // solve
  std::string solve_case, solve_ws, solve_out;
  bool no_fallback = false;
  auto* solve_cmd = app.add_subcommand("solve", "solve one case");
  solve_cmd->add_option("case", solve_case, "case file")->required();
  solve_cmd->add_option("--warm-start", solve_ws, "warm-start JSON file");
  solve_cmd->add_flag("--no-fallback", no_fallback,
                      "do not retry from a cold start on failure");
  solve_cmd->add_option("-o,--output", solve_out, "report JSON path");

  // dataset gen
  std::string ds_case, ds_out;
  int ds_n = 1000;
  double ds_t = 0.1;
  std::uint64_t ds_seed = 1;
  auto* dataset = app.add_subcommand("dataset", "dataset operations");
  dataset->require_subcommand(1);
  auto* gen = dataset->add_subcommand("gen", "sample loads and solve them");
  gen->add_option("case", ds_case, "case file")->required();
  gen->add_option("-n", ds_n, "number of scenarios");
  gen->add_option("-t", ds_t, "relative load variation in [0,1)");
  gen->add_option("--seed", ds_seed, "random seed");
  gen->add_option("-o,--output", ds_out, "output JSONL path")->required();

  // train
  std::string tr_case, tr_data, tr_out, tr_log;
  bool tr_no_physics = false, tr_separate = false;
  mtl::TrainConfig tr_cfg;
  auto* train = app.add_subcommand("train", "train the warm-start predictor");
  train->add_option("case", tr_case, "case file")->required();
  train->add_option("data", tr_data, "dataset JSONL")->required();
  train->add_flag("--no-physics", tr_no_physics, "disable physics loss terms");
  train->add_flag("--separate-heads", tr_separate,
                  "train seven independent single-task networks");
  train->add_option("--epochs", tr_cfg.epochs, "training epochs");
  train->add_option("--batch", tr_cfg.batch_size, "batch size");
  train->add_option("--lr", tr_cfg.lr, "learning rate");
  train->add_option("--seed", tr_cfg.seed, "random seed");
  train->add_option("-o,--output", tr_out, "model JSON path")->required();
  train->add_option("--log", tr_log, "per-epoch loss CSV path");

  // predict
  std::string pr_case, pr_model, pr_loads, pr_out;
  auto* predict = app.add_subcommand("predict", "predict a warm start");
  predict->add_option("case", pr_case, "case file")->required();
  predict->add_option("model", pr_model, "model JSON")->required();
  predict->add_option("--loads", pr_loads, "loads JSON with pd/qd in MW")
      ->required();
  predict->add_option("-o,--output", pr_out, "warm-start JSON path");

  // ablate
  std::string ab_case, ab_data, ab_out;
  auto* ablate = app.add_subcommand("ablate", "run the 16-mask ablation");
  ablate->add_option("case", ab_case, "case file")->required();
  ablate->add_option("data", ab_data, "dataset JSONL")->required();
  ablate->add_option("-o,--output", ab_out, "ablation CSV path");

  // morph
  std::string mo_case, mo_model, mo_data, mo_out;
  double mo_target = 5.0;
  mtl::TrainConfig mo_cfg;
  mo_cfg.epochs = 20;
  auto* morph = app.add_subcommand("morph", "grow a model toward an error target");
  morph->add_option("case", mo_case, "case file")->required();
  morph->add_option("model", mo_model, "model JSON")->required();
  morph->add_option("data", mo_data, "dataset JSONL")->required();
  morph->add_option("--target-mape", mo_target, "target percentage error");
  morph->add_option("--epochs", mo_cfg.epochs, "retraining epochs per round");
  morph->add_option("--seed", mo_cfg.seed, "random seed");
  morph->add_option("-o,--output", mo_out, "output model JSON path")->required();

  // bench
  std::string be_case, be_model, be_data, be_out;
  auto* bench = app.add_subcommand("bench", "benchmark a trained model");
  bench->add_option("case", be_case, "case file")->required();
  bench->add_option("model", be_model, "model JSON")->required();
  bench->add_option("data", be_data, "dataset JSONL")->required();
  bench->add_option("-o,--output", be_out, "metrics JSON path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitUsage;
  }

  if (threads > 0) Eigen::setNbThreads(threads);

  try {
    if (*validate) return cmd_case_validate(case_file);
    if (*import) return cmd_case_import(import_in, import_out);
    if (*solve_cmd) return cmd_solve(solve_case, solve_ws, no_fallback, solve_out);
    if (*gen) return cmd_dataset_gen(ds_case, ds_n, ds_t, ds_seed, ds_out);
    if (*train)
      return cmd_train(tr_case, tr_data, tr_no_physics, tr_separate, tr_cfg,
                       tr_out, tr_log);
    if (*predict) return cmd_predict(pr_case, pr_model, pr_loads, pr_out);
    if (*ablate) return cmd_ablate(ab_case, ab_data, ab_out);
    if (*morph)
      return cmd_morph(mo_case, mo_model, mo_data, mo_target, mo_cfg, mo_out);
    if (*bench) return cmd_bench(be_case, be_model, be_data, be_out);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const CaseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitParse;
  } catch (const mtl::MtlError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitParse;
  } catch (const exp::ExperimentError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitParse;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitUsage;
}
