#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "genet/elimination.hpp"
#include "genet/graph_ops.hpp"

namespace genet {

struct OutOfFieldError : std::runtime_error {
  explicit OutOfFieldError(const std::string& m) : std::runtime_error(m) {}
};

struct GenLayerConfig {
  int K = 4;
  int64_t hidden = 64;  // F; layer input dim == output dim == F
  double gamma = 0.5;
  double epsilon = 1e-6;
  int heads = 1;
  int64_t d_key = 0;  // 0 means F
  double leaky_slope = 0.2;
  int64_t ffn_expansion = 2;
  double dropout = 0.0;
  bool eliminate = true;
  bool edge_attn = true;
  bool decompose_inputs = false;  // Eq.-12 literal stacks by default
  bool static_alpha = false;      // reuse round-1 attention for all rounds

  int64_t key_dim() const { return d_key > 0 ? d_key : hidden; }

  void validate() const {
    if (K < 1) throw ContractError("config: K must be >= 1");
    if (hidden < 1) throw ContractError("config: hidden_dim must be >= 1");
    if (gamma < 0.0 || gamma > 1.0)
      throw ContractError("config: gamma must be in [0,1]");
    if (epsilon <= 0.0) throw ContractError("config: epsilon must be > 0");
    if (heads < 1) throw ContractError("config: heads must be >= 1");
    if (key_dim() % heads != 0)
      throw ContractError("config: d_key must be divisible by heads");
    if (hidden % heads != 0)
      throw ContractError("config: hidden_dim must be divisible by heads");
    if (ffn_expansion < 1) throw ContractError("config: ffn_expansion >= 1");
    if (dropout < 0.0 || dropout >= 1.0)
      throw ContractError("config: dropout must be in [0,1)");
    if (leaky_slope < 0.0) throw ContractError("config: leaky_slope >= 0");
  }
};

// All learnables of one GEN layer. Beyond the K attention vectors a^(k), the
// parameter count does not depend on K.
struct GenLayerParams {
  GenLayerConfig cfg;
  std::vector<Tensor> a;  // K vectors, each [2F,1]
  Tensor w_q, w_k, w_v, w_res;
  Tensor w_out;  // head-mixing projection, only when heads > 1
  Tensor ffn1, ffn2;

  static Tensor glorot(int64_t rows, int64_t cols, Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
    Tensor t = Tensor::zeros({rows, cols});
    double* p = t.mutable_data();
    for (int64_t i = 0; i < t.numel(); ++i) p[i] = rng.uniform(-bound, bound);
    return t;
  }

  static GenLayerParams init(const GenLayerConfig& cfg, Rng& rng) {
    cfg.validate();
    GenLayerParams p;
    p.cfg = cfg;
    const int64_t F = cfg.hidden, d = cfg.key_dim();
    // zero attention vectors start every round at uniform edge attention
    for (int k = 0; k < cfg.K; ++k) p.a.push_back(Tensor::zeros({2 * F, 1}));
    p.w_q = glorot(F, d, rng);
    p.w_k = glorot(F, d, rng);
    p.w_v = glorot(F, F, rng);
    p.w_res = glorot(F, F, rng);
    if (cfg.heads > 1) p.w_out = glorot(F, F, rng);
    p.ffn1 = glorot(F, F * cfg.ffn_expansion, rng);
    p.ffn2 = glorot(F * cfg.ffn_expansion, F, rng);
    return p;
  }

  std::vector<std::pair<std::string, Tensor*>> named() {
    std::vector<std::pair<std::string, Tensor*>> out;
    for (size_t k = 0; k < a.size(); ++k)
      out.emplace_back(cat("a", k + 1), &a[k]);
    out.emplace_back("w_q", &w_q);
    out.emplace_back("w_k", &w_k);
    out.emplace_back("w_v", &w_v);
    out.emplace_back("w_res", &w_res);
    if (cfg.heads > 1) out.emplace_back("w_out", &w_out);
    out.emplace_back("ffn1", &ffn1);
    out.emplace_back("ffn2", &ffn2);
    return out;
  }

  int64_t count() const {
    int64_t n = 0;
    for (const Tensor& t : a) n += t.numel();
    n += w_q.numel() + w_k.numel() + w_v.numel() + w_res.numel();
    if (cfg.heads > 1) n += w_out.numel();
    return n + ffn1.numel() + ffn2.numel();
  }
};

// Everything a forward pass produced, for diagnostics and oracles.
struct LayerTrace {
  std::vector<Tensor> alpha;  // per round, [slots,1]
  std::vector<Tensor> self;   // per round, [N,1]
  std::vector<Tensor> h;      // h[0..K]
  std::vector<Tensor> rows;   // stacked rows per hop (after compression)
  Tensor hop_matrix;          // [N*K, F]
  std::vector<Tensor> beta;   // per head, [N,K]
  Tensor attended;            // [N, F]
  int64_t edge_visits = 0;    // non-self directed-edge touches in propagation
};

// Eq.-10 edge score + per-neighborhood softmax; alpha rows live on the
// graph's slots. Tracked when a tape is passed.
inline Tensor edge_attention_scores(const CsrGraph& g, const Tensor& h,
                                    const Tensor& a_k, double slope,
                                    Tape* tape = nullptr) {
  const int64_t F = h.cols();
  if (a_k.numel() != 2 * F)
    throw ShapeError(cat("edge_attention: a_k has ", a_k.numel(),
                         " entries, want 2F=", 2 * F));
  Tensor a_self = slice_rows(a_k, 0, F, tape);
  Tensor a_nbr = slice_rows(a_k, F, 2 * F, tape);
  Tensor s = add(matmul(gather_src(g, h, tape), a_self, tape),
                 matmul(gather_dst(g, h, tape), a_nbr, tape), tape);
  return edge_softmax(g, leaky_relu(s, slope, tape), tape);
}

// Plain-mode surface: attention coefficients as EdgeCoefficients.
inline EdgeCoefficients edge_attention(const CsrGraph& g, const Tensor& h,
                                       const Tensor& a_k, double slope) {
  Tensor alpha = edge_attention_scores(g, h, a_k, slope);
  std::vector<double> slots(alpha.data(), alpha.data() + alpha.numel());
  return EdgeCoefficients::from_slots(g, std::move(slots));
}

inline Tensor norm_compress(const Tensor& h, double gamma, double epsilon,
                            Tape* tape = nullptr) {
  return norm_compress_rows(h, gamma, epsilon, tape);
}

// Per-node stack of the K hop representations (Eq. 12). Row n*K + (k-1) is
// node n's compressed round-k vector.
struct HopTensor {
  Tensor data;  // [N*K, F]
  int K = 0;
  int64_t num_nodes() const { return data.rows() / K; }
  Tensor row(NodeId n, int k) const {  // k is 1-based
    return slice_rows(data, n * K + (k - 1), n * K + k);
  }
};

inline HopTensor hop_stack(const PropagationTrace& trace, double gamma,
                           double epsilon, bool decompose = false) {
  const int K = static_cast<int>(trace.h.size()) - 1;
  if (K < 1) throw ContractError("hop_stack: trace holds no completed rounds");
  std::vector<Tensor> rows;
  if (decompose) {
    for (Tensor& inc : hop_decompose(trace))
      rows.push_back(norm_compress_rows(inc, gamma, epsilon));
  } else {
    for (int k = 1; k <= K; ++k)
      rows.push_back(
          norm_compress_rows(trace.h[static_cast<size_t>(k)], gamma, epsilon));
  }
  return HopTensor{row_interleave(rows), K};
}

struct HopAttentionResult {
  std::vector<Tensor> beta;  // per head, [N,K]
  Tensor out;                // [N,F]
};

// Eq. 13/13a: Q from the layer input, K/V from the hop stack; per-head
// softmax over the K hops, head outputs concatenated then mixed.
inline HopAttentionResult hop_attention(const Tensor& z_prev, const HopTensor& H,
                                        const GenLayerParams& params,
                                        Tape* tape = nullptr, Rng* rng = nullptr,
                                        bool training = false) {
  const GenLayerConfig& cfg = params.cfg;
  const int64_t d = cfg.key_dim();
  const int64_t dh = d / cfg.heads;
  const int64_t fh = cfg.hidden / cfg.heads;
  Tensor q = matmul(z_prev, params.w_q, tape);
  Tensor km = matmul(H.data, params.w_k, tape);
  Tensor v = matmul(H.data, params.w_v, tape);

  HopAttentionResult res;
  std::vector<Tensor> head_out;
  for (int hsel = 0; hsel < cfg.heads; ++hsel) {
    Tensor qh = cfg.heads == 1 ? q : slice_cols(q, hsel * dh, (hsel + 1) * dh, tape);
    Tensor kh = cfg.heads == 1 ? km : slice_cols(km, hsel * dh, (hsel + 1) * dh, tape);
    Tensor vh = cfg.heads == 1 ? v : slice_cols(v, hsel * fh, (hsel + 1) * fh, tape);
    Tensor logits = scale(block_rowdot(qh, kh, H.K, tape),
                          1.0 / std::sqrt(static_cast<double>(dh)), tape);
    Tensor beta = row_softmax(logits, tape);
    res.beta.push_back(beta);
    if (training && cfg.dropout > 0.0 && rng)
      beta = dropout(beta, cfg.dropout, *rng, training, tape);
    head_out.push_back(block_weighted_sum(beta, vh, tape));
  }
  res.out = cfg.heads == 1 ? head_out[0]
                           : matmul(concat_cols(head_out, tape), params.w_out, tape);
  return res;
}

// One full GEN layer (Eq. 14): elimination-based propagation under per-round
// edge attention, hop stacking, hop-wise attention, residual and FFN.
inline Tensor layer_forward(const CsrGraph& g, const Tensor& z_prev,
                            const GenLayerParams& params, bool eliminate,
                            bool edge_attn, Tape* tape = nullptr,
                            LayerTrace* trace = nullptr, Rng* rng = nullptr,
                            bool training = false) {
  const GenLayerConfig& cfg = params.cfg;
  if (!g.has_self_loops())
    throw InputError("layer_forward: graph must be built with self-loops");
  if (z_prev.cols() != cfg.hidden)
    throw ShapeError(cat("layer_forward: input ", shape_str(z_prev),
                         " vs hidden dim ", cfg.hidden));

  // fixed coefficients for the attention-ablated path
  Tensor gcn_alpha;
  if (!edge_attn) {
    const EdgeCoefficients c = gcn_coefficients(g);
    gcn_alpha = Tensor::from({g.num_slots(), 1}, std::vector<double>(c.edge));
  }
  const Tensor mask = nonself_mask(g);

  std::vector<Tensor> h{z_prev};
  std::vector<Tensor> alphas, selfs;
  std::vector<Tensor> stack_rows;
  Tensor f_state = Tensor::zeros({g.num_slots(), cfg.hidden});
  int64_t edge_visits = 0;

  for (int k = 1; k <= cfg.K; ++k) {
    Tensor alpha_k;
    if (!edge_attn) {
      alpha_k = gcn_alpha;
    } else if (cfg.static_alpha && k > 1) {
      alpha_k = alphas[0];
    } else {
      const Tensor& attn_in = cfg.static_alpha ? h[0] : h.back();
      alpha_k = edge_attention_scores(g, attn_in, params.a[static_cast<size_t>(k - 1)],
                                      cfg.leaky_slope, tape);
    }
    Tensor self_k = select_self(g, alpha_k, tape);
    alphas.push_back(alpha_k);
    selfs.push_back(self_k);

    const Tensor h_prev = h.back();  // by value: push_back below reallocates
    Tensor agg = aggregate_to_src(
        g, mul_rowscale(gather_dst(g, h_prev, tape), alpha_k, tape), tape);
    edge_visits += g.num_nonself_slots();            // aggregation pass
    if (eliminate) edge_visits += g.num_nonself_slots();  // carrier pass
    Tensor h_k;
    if (eliminate && k >= 2) {
      const Tensor h_prev2 = h[static_cast<size_t>(k - 2)];
      Tensor a_jj = gather_dst(g, selfs[static_cast<size_t>(k - 2)], tape);
      Tensor a_ji = reverse_edges(g, alphas[static_cast<size_t>(k - 2)], tape);
      Tensor u = add(mul_rowscale(gather_dst(g, h_prev2, tape), a_jj, tape),
                     mul_rowscale(gather_src(g, h_prev2, tape), a_ji, tape), tape);
      u = sub(u, reverse_edges(g, f_state, tape), tape);
      Tensor f_new = mul_rowscale(mul_rowscale(u, alpha_k, tape), mask, tape);
      Tensor r = aggregate_to_src(g, f_new, tape);
      h_k = sub(agg, r, tape);
      f_state = f_new;
    } else {
      h_k = agg;
    }
    h.push_back(h_k);

    Tensor row = cfg.decompose_inputs
                     ? sub(h_k, mul_rowscale(h_prev, self_k, tape), tape)
                     : h_k;
    stack_rows.push_back(norm_compress_rows(row, cfg.gamma, cfg.epsilon, tape));
  }

  HopTensor H{row_interleave(stack_rows, tape), cfg.K};
  HopAttentionResult att = hop_attention(z_prev, H, params, tape, rng, training);

  Tensor x = add(matmul(z_prev, params.w_res, tape), att.out, tape);
  Tensor hidden = relu(matmul(x, params.ffn1, tape), tape);
  if (training && cfg.dropout > 0.0 && rng)
    hidden = dropout(hidden, cfg.dropout, *rng, training, tape);
  Tensor out = matmul(hidden, params.ffn2, tape);

  if (trace) {
    trace->alpha = std::move(alphas);
    trace->self = std::move(selfs);
    trace->h = std::move(h);
    trace->rows = std::move(stack_rows);
    trace->hop_matrix = H.data;
    trace->beta = att.beta;
    trace->attended = att.out;
    trace->edge_visits = edge_visits;
  }
  return out;
}

// Eq. 13b: the effective coefficient between i and a node n at hop distance
// h(n) <= K, under the round-indexed convention where the edge incident to n
// is traversed in round 1 and the edge incident to i in round h(n).
inline double composite_kernel(const CsrGraph& g,
                               const std::vector<EdgeCoefficients>& coefs,
                               const Tensor& beta, NodeId i, NodeId n) {
  if (!is_acyclic(g))
    throw ContractError("composite_kernel: graph must be acyclic");
  const int K = static_cast<int>(coefs.size());
  if (n == i)
    throw OutOfFieldError("composite_kernel: hop 0 is not part of the field");
  const std::vector<int> dist = hop_distances(g, i);
  const int hn = dist[static_cast<size_t>(n)];
  if (hn < 0 || hn > K)
    throw OutOfFieldError(cat("composite_kernel: node ", n, " is ", hn,
                              " hops away, field covers K=", K));
  // unique path i -> n on the tree, via parents of a BFS from i
  std::vector<NodeId> parent(static_cast<size_t>(g.num_nodes()), -1);
  {
    std::deque<NodeId> queue{i};
    std::vector<char> seen(static_cast<size_t>(g.num_nodes()), 0);
    seen[static_cast<size_t>(i)] = 1;
    while (!queue.empty()) {
      const NodeId u = queue.front();
      queue.pop_front();
      for (EdgeId e = g.row_begin(u); e < g.row_end(u); ++e) {
        const NodeId v = g.target(e);
        if (v == u || seen[static_cast<size_t>(v)]) continue;
        seen[static_cast<size_t>(v)] = 1;
        parent[static_cast<size_t>(v)] = u;
        queue.push_back(v);
      }
    }
  }
  std::vector<NodeId> path{n};
  while (path.back() != i) path.push_back(parent[static_cast<size_t>(path.back())]);
  // path is n..i; walk from i outward: position p uses round h(n)+1-p
  double prod = 1.0;
  for (int p = 1; p <= hn; ++p) {
    const NodeId u = path[static_cast<size_t>(hn - p + 1)];
    const NodeId v = path[static_cast<size_t>(hn - p)];
    EdgeId slot = -1;
    for (EdgeId e = g.row_begin(u); e < g.row_end(u); ++e)
      if (g.target(e) == v) slot = e;
    const int round = hn - p + 1;  // 1-based
    prod *= coefs[static_cast<size_t>(round - 1)].edge[static_cast<size_t>(slot)];
  }
  return beta.at(i, hn - 1) * prod;
}

}  // namespace genet
