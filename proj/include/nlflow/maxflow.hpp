#pragma once

#include <cstdint>
#include <vector>

namespace nlflow {

// Two-terminal network with integer capacities, solved by Dinic's
// algorithm. Edges are collected first and packed into CSR form on the
// first call to solve().
class FlowNetwork {
 public:
  explicit FlowNetwork(int n_nodes);

  int n_nodes() const { return n_; }
  int source() const { return n_; }
  int sink() const { return n_ + 1; }

  // Arc u -> v with capacity cap_uv and the reverse arc with cap_vu.
  void add_edge(int u, int v, std::int64_t cap_uv, std::int64_t cap_vu = 0);
  void add_source(int v, std::int64_t cap) { add_edge(source(), v, cap); }
  void add_sink(int v, std::int64_t cap) { add_edge(v, sink(), cap); }
  void reserve(std::size_t n_edges) { edges_.reserve(n_edges); }

  std::int64_t solve();

  // Nodes reachable from the source in the residual graph (the minimal
  // source side of a minimum cut).
  std::vector<std::uint8_t> source_side() const;
  // Nodes that cannot reach the sink in the residual graph (the maximal
  // source side).
  std::vector<std::uint8_t> not_sink_side() const;

  std::size_t n_arcs() const { return edges_.size(); }
  long long augmentations() const { return augmentations_; }
  int phases() const { return phases_; }

 private:
  struct InEdge {
    int u, v;
    std::int64_t cu, cv;
  };
  void pack();
  bool bfs();
  std::int64_t push(int u, std::int64_t limit);

  int n_;
  std::vector<InEdge> edges_;
  // CSR: arcs of node u are [start_[u], start_[u + 1]).
  std::vector<int> start_, to_, rev_;
  std::vector<std::int64_t> cap_;
  std::vector<int> level_, it_;
  bool packed_ = false;
  long long augmentations_ = 0;
  int phases_ = 0;
};

}  // namespace nlflow
