#pragma once

#include <chrono>
#include <ostream>
#include <vector>

#include "genet/data.hpp"
#include "genet/train.hpp"

namespace genet {

struct BenchRecord {
  int64_t nodes = 0;
  int64_t edges = 0;  // undirected, self-loops excluded
  int K = 0;
  int L = 0;
  double ms_median = 0.0;
  int64_t peak_bytes = 0;
  int64_t edge_visits = 0;  // per forward; 2 * directed edges * K * L with GEA
};

inline void write_bench_csv(std::ostream& out,
                            const std::vector<BenchRecord>& records) {
  out << "nodes,edges,K,L,ms_median,peak_bytes,edge_visits\n";
  for (const BenchRecord& r : records)
    out << r.nodes << ',' << r.edges << ',' << r.K << ',' << r.L << ','
        << r.ms_median << ',' << r.peak_bytes << ',' << r.edge_visits << '\n';
}

// Forward-pass scaling on Erdos-Renyi graphs of fixed average degree. Timing
// excludes graph construction and parameter setup; one warm-up forward is
// discarded before the timed repeats.
inline std::vector<BenchRecord> scaling_run(const std::vector<int64_t>& sizes,
                                            int K, int L, int repeats,
                                            double avg_degree = 10.0,
                                            int64_t feat_dim = 16,
                                            uint64_t seed = 1,
                                            bool eliminate = true) {
  if (repeats < 3) throw ContractError("scaling_run: repeats must be >= 3");
  for (size_t i = 1; i < sizes.size(); ++i)
    if (sizes[i] <= sizes[i - 1])
      throw ContractError("scaling_run: sizes must be ascending");

  std::vector<BenchRecord> records;
  for (size_t si = 0; si < sizes.size(); ++si) {
    const int64_t n = sizes[si];
    const double p = avg_degree / static_cast<double>(n - 1);
    CsrGraph g = make_synthetic(SyntheticKind::ErdosRenyi, n, 0, p, seed + si,
                                /*add_self_loops=*/true);

    GenLayerConfig cfg;
    cfg.K = K;
    cfg.hidden = feat_dim;
    cfg.eliminate = eliminate;
    Rng rng(seed * 1315423911ULL + si);
    std::vector<GenLayerParams> layers;
    for (int l = 0; l < L; ++l) layers.push_back(GenLayerParams::init(cfg, rng));

    Tensor z = Tensor::zeros({n, feat_dim});
    double* pz = z.mutable_data();
    for (int64_t i = 0; i < z.numel(); ++i) pz[i] = rng.uniform(-1.0, 1.0);

    auto forward = [&](int64_t* visits) {
      Tensor cur = z;
      for (const GenLayerParams& layer : layers) {
        LayerTrace trace;
        cur = layer_forward(g, cur, layer, cfg.eliminate, cfg.edge_attn,
                            nullptr, &trace);
        if (visits) *visits += trace.edge_visits;
      }
      return cur;
    };

    BenchRecord rec;
    rec.nodes = n;
    rec.edges = g.num_edges();
    rec.K = K;
    rec.L = L;
    forward(nullptr);  // warm-up
    MemoryStats::reset_peak();
    std::vector<double> times;
    for (int r = 0; r < repeats; ++r) {
      int64_t visits = 0;
      const auto t0 = std::chrono::steady_clock::now();
      forward(&visits);
      const auto t1 = std::chrono::steady_clock::now();
      times.push_back(
          std::chrono::duration<double, std::milli>(t1 - t0).count());
      rec.edge_visits = visits;
    }
    std::sort(times.begin(), times.end());
    rec.ms_median = times[times.size() / 2];
    rec.peak_bytes = MemoryStats::peak().load();
    records.push_back(rec);
  }
  return records;
}

}  // namespace genet
