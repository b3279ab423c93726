// genet: graph elimination network engine
//
// Subcommands: verify | decompose | train | eval | bench | gen-graph.
// Logs go to stderr; data goes to stdout or files under --out, so outputs
// stay pipeable and byte-reproducible under a fixed seed.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "genet/bench.hpp"
#include "genet/data.hpp"
#include "genet/elimination.hpp"
#include "genet/parallel.hpp"
#include "genet/train.hpp"
#include "genet/verify.hpp"

namespace {

using namespace genet;

Tensor onehot_features(int64_t n) {
  Tensor x = Tensor::zeros({n, n});
  for (int64_t i = 0; i < n; ++i) x.mutable_data()[i * n + i] = 1.0;
  return x;
}

Tensor load_features_csv(const std::string& path, int64_t expected_rows) {
  std::ifstream in(path);
  if (!in) throw InputError(cat("missing file: ", path));
  std::string line;
  if (!std::getline(in, line)) throw InputError(cat(path, ": empty file"));
  size_t width = 1;
  for (char c : line)
    if (c == ',') ++width;
  std::vector<double> values;
  int64_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::string cell;
    size_t cells = 0;
    for (size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == ',') {
        values.push_back(std::stod(cell));
        cell.clear();
        ++cells;
      } else if (line[i] != '\r') {
        cell += line[i];
      }
    }
    if (cells != width)
      throw InputError(cat(path, ": ragged row with ", cells, " cells"));
    ++rows;
  }
  if (expected_rows > 0 && rows != expected_rows)
    throw InputError(cat(path, ": ", rows, " feature rows for ", expected_rows,
                         " nodes"));
  return Tensor::from({rows, static_cast<int64_t>(width)}, std::move(values));
}

void write_hop_csv(const std::string& path, const Tensor& m) {
  std::ofstream out(path);
  if (!out) throw InputError(cat("cannot write: ", path));
  out << "node";
  for (int64_t f = 0; f < m.cols(); ++f) out << ",f" << f;
  out << '\n';
  char buf[64];
  for (int64_t i = 0; i < m.rows(); ++i) {
    out << i;
    for (int64_t f = 0; f < m.cols(); ++f) {
      std::snprintf(buf, sizeof buf, "%.17g", m.at(i, f));
      out << ',' << buf;
    }
    out << '\n';
  }
}

int cmd_verify(const std::string& suite, uint64_t seed) {
  const auto results = verify::run_suite(suite, seed);
  bool all_pass = true;
  for (const auto& r : results) {
    std::printf("%-28s %s  %s\n", r.name.c_str(), r.pass ? "PASS" : "FAIL",
                r.detail.c_str());
    all_pass = all_pass && r.pass;
  }
  return all_pass ? 0 : 2;
}

int cmd_decompose(const std::string& graph_path, const std::string& features,
                  int K, const std::string& mode, const std::string& eliminate,
                  const std::string& out_dir) {
  if (K < 1) throw InputError("decompose: --K must be >= 1");
  const bool selfloop_mode = mode == "selfloop";
  bool use_gea = mode == "gea";
  if (mode == "plain") use_gea = false;
  if (!eliminate.empty()) use_gea = eliminate == "on";
  CsrGraph g = load_edge_list(graph_path, /*add_self_loops=*/!selfloop_mode);
  Tensor x = features == "onehot" ? onehot_features(g.num_nodes())
                                  : load_features_csv(features, g.num_nodes());
  std::vector<EdgeCoefficients> coefs(
      static_cast<size_t>(K),
      selfloop_mode ? EdgeCoefficients::uniform(g, 1.0, 0.0)
                    : EdgeCoefficients::unit(g));
  std::filesystem::create_directories(out_dir);
  if (selfloop_mode) {
    const auto trace = propagate_self_loop_eliminated(g, x, coefs, K);
    for (int k = 1; k <= K; ++k)
      write_hop_csv(cat(out_dir, "/hop_", k, ".csv"),
                    trace.h[static_cast<size_t>(k)]);
  } else {
    const auto trace = propagate_eliminated(g, x, coefs, K, use_gea);
    const auto inc = hop_decompose(trace);
    for (int k = 1; k <= K; ++k)
      write_hop_csv(cat(out_dir, "/hop_", k, ".csv"),
                    inc[static_cast<size_t>(k - 1)]);
  }
  std::fprintf(stderr, "decompose: wrote %d hop files to %s\n", K,
               out_dir.c_str());
  return 0;
}

int cmd_train(const std::string& data_dir, const std::string& config_path,
              const std::string& out_dir, int64_t seed_override) {
  TrainConfig cfg =
      config_path.empty() ? TrainConfig{} : TrainConfig::parse_file(config_path);
  if (seed_override >= 0) cfg.seed = static_cast<uint64_t>(seed_override);
  const Dataset data = load_dataset(data_dir);
  std::fprintf(stderr, "train: %lld nodes, %lld edges, %d classes, %zu train\n",
               static_cast<long long>(data.graph.num_nodes()),
               static_cast<long long>(data.graph.num_edges()),
               data.num_classes(), data.train.size());
  TrainResult result = train_loop(data, cfg);
  std::filesystem::create_directories(out_dir);
  {
    std::ofstream out(std::filesystem::path(out_dir) / "metrics.csv");
    write_metrics_csv(out, result.history);
  }
  save_checkpoint((std::filesystem::path(out_dir) / "best.genc").string(),
                  result.best.named());
  const EpochMetrics& last = result.history.back();
  const EpochMetrics& best = result.history[static_cast<size_t>(result.best_epoch - 1)];
  std::fprintf(stderr, "train: finished %d epochs; last val %.4f test %.4f\n",
               last.epoch, last.val_acc, last.test_acc);
  std::printf("best_epoch,val_acc,test_acc\n%d,%.17g,%.17g\n", result.best_epoch,
              best.val_acc, best.test_acc);
  return 0;
}

int cmd_eval(const std::string& data_dir, const std::string& config_path,
             const std::string& ckpt_path) {
  TrainConfig cfg =
      config_path.empty() ? TrainConfig{} : TrainConfig::parse_file(config_path);
  const Dataset data = load_dataset(data_dir);
  Rng rng(cfg.seed);
  GenModel model =
      GenModel::init(cfg, data.features.cols(), data.num_classes(), rng);
  apply_checkpoint(model, load_checkpoint(ckpt_path));
  const Tensor logits = model.forward(data.graph, data.features);
  std::printf("split,accuracy\n");
  std::printf("train,%.17g\n", accuracy(logits, data.labels, data.train));
  std::printf("val,%.17g\n", accuracy(logits, data.labels, data.val));
  std::printf("test,%.17g\n", accuracy(logits, data.labels, data.test));
  return 0;
}

int cmd_bench(const std::string& sizes_csv, int K, int L, int repeats,
              double degree, const std::string& eliminate, uint64_t seed,
              const std::string& out_path) {
  std::vector<int64_t> sizes;
  std::string cur;
  for (size_t i = 0; i <= sizes_csv.size(); ++i) {
    if (i == sizes_csv.size() || sizes_csv[i] == ',') {
      if (!cur.empty()) sizes.push_back(std::stoll(cur));
      cur.clear();
    } else {
      cur += sizes_csv[i];
    }
  }
  const auto records = scaling_run(sizes, K, L, repeats, degree, 16, seed,
                                   eliminate != "off");
  if (out_path.empty()) {
    write_bench_csv(std::cout, records);
  } else {
    std::ofstream out(out_path);
    write_bench_csv(out, records);
  }
  return 0;
}

int cmd_gen_graph(const std::string& kind, int64_t n, int64_t branching,
                  int64_t depth, double p, uint64_t seed,
                  const std::string& out_path) {
  SyntheticGraph s;
  if (kind == "chain")
    s = synthetic_edges(SyntheticKind::Chain, n);
  else if (kind == "cycle")
    s = synthetic_edges(SyntheticKind::Cycle, n);
  else if (kind == "balanced_tree")
    s = synthetic_edges(SyntheticKind::BalancedTree, branching, depth);
  else if (kind == "erdos_renyi")
    s = synthetic_edges(SyntheticKind::ErdosRenyi, n, 0, p, seed);
  else
    throw InputError(cat("gen-graph: unknown kind '", kind,
                         "' (chain|balanced_tree|cycle|erdos_renyi)"));
  std::ostringstream body;
  body << "# " << kind << " graph, " << s.num_nodes << " nodes\n";
  write_edge_list(body, s.edges);
  if (out_path.empty()) {
    std::cout << body.str();
  } else {
    std::ofstream out(out_path);
    if (!out) throw InputError(cat("cannot write: ", out_path));
    out << body.str();
  }
  std::fprintf(stderr, "gen-graph: %lld nodes, %zu edges\n",
               static_cast<long long>(s.num_nodes), s.edges.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"graph elimination network engine"};
  app.require_subcommand(1);

  int threads = 1;
  int64_t seed = -1;
  app.add_option("--threads", threads, "worker threads (default 1)");
  app.add_option("--seed", seed, "seed override");

  auto* verify_cmd = app.add_subcommand("verify", "run oracle-backed property suites");
  std::string suite = "all";
  verify_cmd->add_option("--suite", suite, "suite name or 'all'");

  auto* dec = app.add_subcommand("decompose", "per-hop decomposition to CSV files");
  std::string graph_path, features = "onehot", mode = "gea", eliminate_flag,
              out_dir = ".";
  int K = 4;
  dec->add_option("--graph", graph_path, "edge-list .tsv")->required();
  dec->add_option("--features", features, "features .csv or 'onehot'");
  dec->add_option("--K", K, "propagation rounds");
  dec->add_option("--mode", mode, "gea|selfloop|plain");
  dec->add_option("--eliminate", eliminate_flag, "on|off (overrides mode)");
  dec->add_option("--out", out_dir, "output directory");

  auto* train_cmd = app.add_subcommand("train", "full-batch node classification");
  std::string data_dir, config_path, train_out = ".";
  train_cmd->add_option("--data", data_dir, "dataset directory")->required();
  train_cmd->add_option("--config", config_path, "key=value config file");
  train_cmd->add_option("--out", train_out, "output directory");

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  std::string eval_data, eval_config, eval_ckpt;
  eval_cmd->add_option("--data", eval_data, "dataset directory")->required();
  eval_cmd->add_option("--config", eval_config, "key=value config file");
  eval_cmd->add_option("--checkpoint", eval_ckpt, "GENC checkpoint")->required();

  auto* bench_cmd = app.add_subcommand("bench", "forward-pass scaling benchmark");
  std::string sizes = "10000,20000,40000,80000", bench_out, bench_eliminate = "on";
  int bench_k = 4, bench_l = 1, repeats = 3;
  double degree = 10.0;
  bench_cmd->add_option("--sizes", sizes, "comma-separated node counts");
  bench_cmd->add_option("--K", bench_k, "propagation rounds");
  bench_cmd->add_option("--layers", bench_l, "stacked layers");
  bench_cmd->add_option("--repeats", repeats, "timed repeats (median)");
  bench_cmd->add_option("--degree", degree, "average degree");
  bench_cmd->add_option("--eliminate", bench_eliminate, "on|off");
  bench_cmd->add_option("--out", bench_out, "CSV path (default stdout)");

  auto* gen_cmd = app.add_subcommand("gen-graph", "write a synthetic edge list");
  std::string kind = "chain", gen_out;
  int64_t n = 5, branching = 2, depth = 3;
  double p = 0.05;
  gen_cmd->add_option("--kind", kind, "chain|balanced_tree|cycle|erdos_renyi");
  gen_cmd->add_option("--n", n, "node count (chain/cycle/erdos_renyi)");
  gen_cmd->add_option("--branching", branching, "balanced_tree branching");
  gen_cmd->add_option("--depth", depth, "balanced_tree depth");
  gen_cmd->add_option("--p", p, "erdos_renyi edge probability");
  gen_cmd->add_option("--out", gen_out, "output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    genet::set_num_threads(threads);
    const uint64_t s = seed >= 0 ? static_cast<uint64_t>(seed) : 0;
    if (*verify_cmd) return cmd_verify(suite, s);
    if (*dec) return cmd_decompose(graph_path, features, K, mode, eliminate_flag,
                                   out_dir);
    if (*train_cmd) return cmd_train(data_dir, config_path, train_out, seed);
    if (*eval_cmd) return cmd_eval(eval_data, eval_config, eval_ckpt);
    if (*bench_cmd)
      return cmd_bench(sizes, bench_k, bench_l, repeats, degree, bench_eliminate,
                       s ? s : 1, bench_out);
    if (*gen_cmd) return cmd_gen_graph(kind, n, branching, depth, p, s, gen_out);
  } catch (const genet::InputError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 2;
  }
  return 0;
}
