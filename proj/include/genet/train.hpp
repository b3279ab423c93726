#pragma once

#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "genet/data.hpp"
#include "genet/layer.hpp"

namespace genet {

// ------------------------------ configuration ------------------------------

struct TrainConfig {
  GenLayerConfig layer;
  int layers = 2;  // L
  int epochs = 200;
  double learning_rate = 0.01;
  double weight_decay = 5e-4;
  uint64_t seed = 0;

  void validate() const {
    layer.validate();
    if (layers < 1) throw ContractError("config: layers must be >= 1");
    if (epochs < 1) throw ContractError("config: epochs must be >= 1");
    if (learning_rate <= 0.0) throw ContractError("config: learning_rate > 0");
    if (weight_decay < 0.0) throw ContractError("config: weight_decay >= 0");
  }

  void apply(const std::string& key, const std::string& value) {
    auto on = [&] { return value == "on" || value == "true" || value == "1"; };
    if (key == "layers") layers = std::stoi(value);
    else if (key == "hidden_dim") layer.hidden = std::stoll(value);
    else if (key == "K") layer.K = std::stoi(value);
    else if (key == "gamma") layer.gamma = std::stod(value);
    else if (key == "epsilon") layer.epsilon = std::stod(value);
    else if (key == "heads") layer.heads = std::stoi(value);
    else if (key == "d_key") layer.d_key = std::stoll(value);
    else if (key == "leaky_slope") layer.leaky_slope = std::stod(value);
    else if (key == "ffn_expansion") layer.ffn_expansion = std::stoll(value);
    else if (key == "dropout") layer.dropout = std::stod(value);
    else if (key == "eliminate") layer.eliminate = on();
    else if (key == "edge_attn") layer.edge_attn = on();
    else if (key == "decompose_inputs") layer.decompose_inputs = on();
    else if (key == "static_alpha") layer.static_alpha = on();
    else if (key == "seed") seed = std::stoull(value);
    else if (key == "epochs") epochs = std::stoi(value);
    else if (key == "learning_rate") learning_rate = std::stod(value);
    else if (key == "weight_decay") weight_decay = std::stod(value);
    else throw InputError(cat("config: unknown key '", key, "'"));
  }

  static TrainConfig parse(std::istream& in, const std::string& origin) {
    TrainConfig cfg;
    std::string line;
    int64_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const size_t hash = line.find('#');
      if (hash != std::string::npos) line.resize(hash);
      const size_t eq = line.find('=');
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      if (eq == std::string::npos)
        throw InputError(cat(origin, ":", lineno, ": expected key=value"));
      auto trim = [](std::string s) {
        const size_t b = s.find_first_not_of(" \t\r");
        const size_t e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
      };
      cfg.apply(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    cfg.validate();
    return cfg;
  }

  static TrainConfig parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError(cat("missing file: ", path));
    return parse(in, path);
  }
};

// --------------------------------- model -----------------------------------

// L stacked GEN layers between a linear encoder and a linear classifier head.
struct GenModel {
  TrainConfig cfg;
  Tensor w_in;   // [D, F]
  std::vector<GenLayerParams> layers;
  Tensor w_head;  // [F, C]

  static GenModel init(const TrainConfig& cfg, int64_t in_dim,
                       int64_t num_classes, Rng& rng) {
    cfg.validate();
    GenModel m;
    m.cfg = cfg;
    m.w_in = GenLayerParams::glorot(in_dim, cfg.layer.hidden, rng);
    for (int l = 0; l < cfg.layers; ++l)
      m.layers.push_back(GenLayerParams::init(cfg.layer, rng));
    m.w_head = GenLayerParams::glorot(cfg.layer.hidden, num_classes, rng);
    return m;
  }

  std::vector<std::pair<std::string, Tensor*>> named() {
    std::vector<std::pair<std::string, Tensor*>> out;
    out.emplace_back("encoder", &w_in);
    for (size_t l = 0; l < layers.size(); ++l)
      for (auto& [name, t] : layers[l].named())
        out.emplace_back(cat("layer", l + 1, ".", name), t);
    out.emplace_back("classifier", &w_head);
    return out;
  }

  int64_t param_count() const {
    int64_t n = w_in.numel() + w_head.numel();
    for (const auto& l : layers) n += l.count();
    return n;
  }

  GenModel clone() const {
    GenModel m = *this;
    m.w_in = w_in.clone();
    m.w_head = w_head.clone();
    for (size_t l = 0; l < layers.size(); ++l) {
      auto src = layers[l];
      for (Tensor& t : src.a) t = t.clone();
      src.w_q = layers[l].w_q.clone();
      src.w_k = layers[l].w_k.clone();
      src.w_v = layers[l].w_v.clone();
      src.w_res = layers[l].w_res.clone();
      if (src.cfg.heads > 1) src.w_out = layers[l].w_out.clone();
      src.ffn1 = layers[l].ffn1.clone();
      src.ffn2 = layers[l].ffn2.clone();
      m.layers[l] = std::move(src);
    }
    return m;
  }

  // Forward over tracked parameter views when training on a tape.
  Tensor forward(const CsrGraph& g, const Tensor& X, Tape* tape = nullptr,
                 Rng* drop_rng = nullptr, bool training = false) const {
    Tensor z = matmul(X, w_in, tape);
    for (const GenLayerParams& layer : layers)
      z = layer_forward(g, z, layer, layer.cfg.eliminate, layer.cfg.edge_attn,
                        tape, nullptr, drop_rng, training);
    return matmul(z, w_head, tape);
  }
};

// ------------------------------ loss and metric ----------------------------

// Mean over masked nodes of -log softmax(logits)[label]. Stable log-sum-exp;
// gradient is (softmax - onehot)/|mask| on masked rows.
inline Tensor cross_entropy(const Tensor& logits, const std::vector<int>& labels,
                            const std::vector<NodeId>& mask,
                            Tape* tape = nullptr) {
  if (mask.empty()) throw ContractError("cross_entropy: empty mask");
  const int64_t C = logits.cols();
  for (NodeId id : mask) {
    if (id < 0 || id >= logits.rows())
      throw ContractError(cat("cross_entropy: mask id ", id, " out of range"));
    const int l = labels[static_cast<size_t>(id)];
    if (l < 0 || l >= C)
      throw ContractError(cat("cross_entropy: node ", id, " has label ", l));
  }
  double loss = 0.0;
  for (NodeId id : mask) {
    const double* row = logits.data() + id * C;
    double mx = row[0];
    for (int64_t c = 1; c < C; ++c) mx = std::max(mx, row[c]);
    double lse = 0.0;
    for (int64_t c = 0; c < C; ++c) lse += std::exp(row[c] - mx);
    lse = mx + std::log(lse);
    loss += lse - row[labels[static_cast<size_t>(id)]];
  }
  Tensor out = Tensor::scalar(loss / static_cast<double>(mask.size()));
  if (!tape) return out;
  return tape->track_op(
      "cross_entropy", {logits.id}, std::move(out),
      [logits, labels, mask](Tape& t, long out_id) {
        const double g = t.grad_ptr(out_id)->at(0);
        const int64_t C = logits.cols();
        const double w = g / static_cast<double>(mask.size());
        Tensor dl = Tensor::zeros(logits.shape());
        double* p = dl.mutable_data();
        for (NodeId id : mask) {
          const double* row = logits.data() + id * C;
          double mx = row[0];
          for (int64_t c = 1; c < C; ++c) mx = std::max(mx, row[c]);
          double lse = 0.0;
          for (int64_t c = 0; c < C; ++c) lse += std::exp(row[c] - mx);
          for (int64_t c = 0; c < C; ++c)
            p[id * C + c] = w * (std::exp(row[c] - mx) / lse -
                                 (c == labels[static_cast<size_t>(id)] ? 1.0 : 0.0));
        }
        t.add_grad(logits.id, dl);
      });
}

inline double accuracy(const Tensor& logits, const std::vector<int>& labels,
                       const std::vector<NodeId>& mask) {
  if (mask.empty()) return 0.0;
  int64_t hit = 0;
  const int64_t C = logits.cols();
  for (NodeId id : mask) {
    const double* row = logits.data() + id * C;
    int64_t best = 0;
    for (int64_t c = 1; c < C; ++c)
      if (row[c] > row[best]) best = c;
    if (best == labels[static_cast<size_t>(id)]) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(mask.size());
}

// ---------------------------------- Adam -----------------------------------

struct AdamState {
  std::vector<Tensor> m, v;
  int64_t step = 0;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  static AdamState init(const std::vector<std::pair<std::string, Tensor*>>& params) {
    AdamState s;
    for (const auto& [name, t] : params) {
      s.m.push_back(Tensor::zeros(t->shape()));
      s.v.push_back(Tensor::zeros(t->shape()));
    }
    return s;
  }
};

// Adam with decoupled weight decay; deterministic given identical inputs.
inline void adam_step(const std::vector<std::pair<std::string, Tensor*>>& params,
                      const std::vector<Tensor>& grads, AdamState& state,
                      double lr, double weight_decay) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw ContractError("adam_step: parameter/gradient/state count mismatch");
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (size_t p = 0; p < params.size(); ++p) {
    Tensor* w = params[p].second;
    const Tensor& g = grads[p];
    if (!w->same_shape(g))
      throw ContractError(cat("adam_step: gradient shape mismatch for ",
                              params[p].first));
    double* pm = state.m[p].mutable_data();
    double* pv = state.v[p].mutable_data();
    double* pw = w->mutable_data();
    const double* pg = g.data();
    for (int64_t i = 0; i < w->numel(); ++i) {
      pm[i] = state.beta1 * pm[i] + (1.0 - state.beta1) * pg[i];
      pv[i] = state.beta2 * pv[i] + (1.0 - state.beta2) * pg[i] * pg[i];
      const double mhat = pm[i] / bc1;
      const double vhat = pv[i] / bc2;
      pw[i] -= lr * (mhat / (std::sqrt(vhat) + state.eps) + weight_decay * pw[i]);
    }
  }
}

// ------------------------------- checkpoints -------------------------------
// "GENC", version byte, then per parameter: u32 name length, name bytes,
// u32 rank, u32 dims, little-endian f64 payload.

namespace detail {
inline void put_u32(std::ostream& out, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v),
                        static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}
inline uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}
inline void put_f64(std::ostream& out, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, 8);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}
inline double get_f64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<uint64_t>(b[i]) << (8 * i);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}
}  // namespace detail

inline void save_checkpoint(const std::string& path,
                            const std::vector<std::pair<std::string, Tensor*>>& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError(cat("cannot write checkpoint: ", path));
  out.write("GENC", 4);
  out.put(static_cast<char>(1));
  for (const auto& [name, t] : params) {
    detail::put_u32(out, static_cast<uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    detail::put_u32(out, static_cast<uint32_t>(t->dim()));
    for (int64_t d : t->shape()) detail::put_u32(out, static_cast<uint32_t>(d));
    for (int64_t i = 0; i < t->numel(); ++i) detail::put_f64(out, t->at(i));
  }
}

inline std::map<std::string, Tensor> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(cat("missing file: ", path));
  char magic[4];
  in.read(magic, 4);
  if (in.gcount() != 4 || std::string(magic, 4) != "GENC")
    throw InputError(cat(path, ": not a GENC checkpoint"));
  const int version = in.get();
  if (version != 1)
    throw InputError(cat(path, ": unsupported checkpoint version ", version));
  std::map<std::string, Tensor> out;
  while (true) {
    const uint32_t name_len = detail::get_u32(in);
    if (in.eof()) break;
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const uint32_t rank = detail::get_u32(in);
    std::vector<int64_t> shape;
    int64_t numel = 1;
    for (uint32_t r = 0; r < rank; ++r) {
      shape.push_back(static_cast<int64_t>(detail::get_u32(in)));
      numel *= shape.back();
    }
    std::vector<double> values(static_cast<size_t>(numel));
    for (int64_t i = 0; i < numel; ++i) values[static_cast<size_t>(i)] = detail::get_f64(in);
    if (!in) throw InputError(cat(path, ": truncated checkpoint"));
    out.emplace(std::move(name), Tensor::from(std::move(shape), std::move(values)));
  }
  return out;
}

inline void apply_checkpoint(GenModel& model,
                             const std::map<std::string, Tensor>& ckpt) {
  for (auto& [name, t] : model.named()) {
    const auto it = ckpt.find(name);
    if (it == ckpt.end())
      throw InputError(cat("checkpoint is missing parameter '", name, "'"));
    if (it->second.shape() != t->shape())
      throw InputError(cat("checkpoint parameter '", name, "' has shape ",
                           shape_str(it->second), ", model wants ", shape_str(*t)));
    *t = it->second.clone();
  }
}

// -------------------------------- train loop -------------------------------

struct EpochMetrics {
  int epoch;
  double train_loss, train_acc, val_acc, test_acc;
};

struct TrainResult {
  GenModel best;
  int best_epoch = 0;
  double best_val_acc = 0.0;
  std::vector<EpochMetrics> history;
};

inline void write_metrics_csv(std::ostream& out,
                              const std::vector<EpochMetrics>& history) {
  out << "epoch,train_loss,train_acc,val_acc,test_acc\n";
  char buf[160];
  for (const EpochMetrics& m : history) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g\n", m.epoch,
                  m.train_loss, m.train_acc, m.val_acc, m.test_acc);
    out << buf;
  }
}

// Full-batch training; the returned model is the checkpoint with the best
// validation accuracy (earliest epoch wins ties). No early stopping.
inline TrainResult train_loop(const Dataset& data, const TrainConfig& cfg) {
  cfg.validate();
  data.validate();
  if (data.train.empty()) throw ContractError("train_loop: empty train split");
  Rng init_rng(cfg.seed);
  Rng drop_rng = init_rng.fork(0x9d0f);
  GenModel model = GenModel::init(cfg, data.features.cols(), data.num_classes(),
                                  init_rng);
  auto params = model.named();
  AdamState adam = AdamState::init(params);

  TrainResult result;
  result.best = model.clone();
  result.best_val_acc = -1.0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Tape tape;
    std::vector<Tensor> tracked;
    tracked.reserve(params.size());
    GenModel view = model;  // shares parameter storage
    {
      auto view_params = view.named();
      for (size_t p = 0; p < view_params.size(); ++p)
        *view_params[p].second = tape.leaf(*view_params[p].second, true);
      for (const auto& [name, t] : view.named()) tracked.push_back(*t);
    }
    Tensor logits = view.forward(data.graph, data.features, &tape, &drop_rng,
                                 /*training=*/true);
    Tensor loss = cross_entropy(logits, data.labels, data.train, &tape);
    if (!std::isfinite(loss.at(0)))
      throw NumericError(cat("training diverged at epoch ", epoch,
                             ": loss is not finite"));
    tape.backward(loss);
    std::vector<Tensor> grads;
    grads.reserve(tracked.size());
    for (const Tensor& t : tracked) grads.push_back(tape.grad(t));
    adam_step(params, grads, adam, cfg.learning_rate, cfg.weight_decay);

    Tensor eval_logits = model.forward(data.graph, data.features);
    EpochMetrics m;
    m.epoch = epoch;
    m.train_loss = loss.at(0);
    m.train_acc = accuracy(eval_logits, data.labels, data.train);
    m.val_acc = accuracy(eval_logits, data.labels, data.val);
    m.test_acc = accuracy(eval_logits, data.labels, data.test);
    result.history.push_back(m);
    if (m.val_acc > result.best_val_acc) {
      result.best_val_acc = m.val_acc;
      result.best_epoch = epoch;
      result.best = model.clone();
    }
  }
  return result;
}

}  // namespace genet
