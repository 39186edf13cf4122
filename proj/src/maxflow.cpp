#include "nlflow/maxflow.hpp"

#include <algorithm>
#include <limits>

#include "nlflow/error.hpp"

namespace nlflow {

FlowNetwork::FlowNetwork(int n_nodes) : n_(n_nodes) {
  require(n_nodes >= 0, "maxflow: negative node count");
}

void FlowNetwork::add_edge(int u, int v, std::int64_t cap_uv, std::int64_t cap_vu) {
  require(!packed_, "maxflow: network already solved");
  require(cap_uv >= 0 && cap_vu >= 0, "maxflow: negative capacity");
  if (cap_uv == 0 && cap_vu == 0) return;
  edges_.push_back({u, v, cap_uv, cap_vu});
}

void FlowNetwork::pack() {
  const int N = n_ + 2;
  start_.assign(N + 1, 0);
  for (const auto& e : edges_) {
    ++start_[e.u + 1];
    ++start_[e.v + 1];
  }
  for (int i = 0; i < N; ++i) start_[i + 1] += start_[i];
  const std::size_t m = 2 * edges_.size();
  to_.resize(m);
  rev_.resize(m);
  cap_.resize(m);
  std::vector<int> pos(start_.begin(), start_.end() - 1);
  for (const auto& e : edges_) {
    int a = pos[e.u]++, b = pos[e.v]++;
    to_[a] = e.v;
    cap_[a] = e.cu;
    rev_[a] = b;
    to_[b] = e.u;
    cap_[b] = e.cv;
    rev_[b] = a;
  }
  level_.resize(N);
  it_.resize(N);
  packed_ = true;
}

bool FlowNetwork::bfs() {
  std::fill(level_.begin(), level_.end(), -1);
  std::vector<int> queue;
  queue.reserve(n_ + 2);
  queue.push_back(source());
  level_[source()] = 0;
  for (std::size_t qi = 0; qi < queue.size(); ++qi) {
    int u = queue[qi];
    for (int a = start_[u]; a < start_[u + 1]; ++a) {
      if (cap_[a] > 0 && level_[to_[a]] < 0) {
        level_[to_[a]] = level_[u] + 1;
        if (to_[a] == sink()) return true;
        queue.push_back(to_[a]);
      }
    }
  }
  return level_[sink()] >= 0;
}

// Iterative blocking-flow search along the level graph.
std::int64_t FlowNetwork::push(int s, std::int64_t limit) {
  std::vector<int> path;  // arcs
  std::int64_t total = 0;
  int u = s;
  while (true) {
    if (u == sink()) {
      std::int64_t f = limit - total;
      for (int a : path) f = std::min(f, cap_[a]);
      for (int a : path) {
        cap_[a] -= f;
        cap_[rev_[a]] += f;
      }
      total += f;
      ++augmentations_;
      if (total == limit) return total;
      // Retreat to the tail of the first saturated arc.
      std::size_t keep = 0;
      while (keep < path.size() && cap_[path[keep]] > 0) ++keep;
      path.resize(keep);
      u = path.empty() ? s : to_[path.back()];
      continue;
    }
    bool advanced = false;
    for (int& a = it_[u]; a < start_[u + 1]; ++a) {
      int v = to_[a];
      if (cap_[a] > 0 && level_[v] == level_[u] + 1) {
        path.push_back(a);
        u = v;
        advanced = true;
        break;
      }
    }
    if (advanced) continue;
    if (u == s) return total;
    level_[u] = -1;  // dead end
    path.pop_back();
    u = path.empty() ? s : to_[path.back()];
    ++it_[u];
  }
}

std::int64_t FlowNetwork::solve() {
  if (!packed_) pack();
  std::int64_t flow = 0;
  const std::int64_t big = std::numeric_limits<std::int64_t>::max();
  while (bfs()) {
    ++phases_;
    for (int i = 0; i < n_ + 2; ++i) it_[i] = start_[i];
    std::int64_t f = push(source(), big);
    require(f > 0, "maxflow: phase without progress", ErrorCode::check_failed);
    require(flow <= big - f, "maxflow: flow overflow", ErrorCode::check_failed);
    flow += f;
  }
  return flow;
}

std::vector<std::uint8_t> FlowNetwork::source_side() const {
  require(packed_, "maxflow: solve() first");
  std::vector<std::uint8_t> seen(n_ + 2, 0);
  std::vector<int> queue{source()};
  seen[source()] = 1;
  for (std::size_t qi = 0; qi < queue.size(); ++qi) {
    int u = queue[qi];
    for (int a = start_[u]; a < start_[u + 1]; ++a) {
      if (cap_[a] > 0 && !seen[to_[a]]) {
        seen[to_[a]] = 1;
        queue.push_back(to_[a]);
      }
    }
  }
  seen.resize(n_);
  return seen;
}

std::vector<std::uint8_t> FlowNetwork::not_sink_side() const {
  require(packed_, "maxflow: solve() first");
  std::vector<std::uint8_t> reach(n_ + 2, 0);
  std::vector<int> queue{sink()};
  reach[sink()] = 1;
  for (std::size_t qi = 0; qi < queue.size(); ++qi) {
    int u = queue[qi];
    // v reaches u when the residual arc v -> u is open.
    for (int a = start_[u]; a < start_[u + 1]; ++a) {
      int v = to_[a];
      if (cap_[rev_[a]] > 0 && !reach[v]) {
        reach[v] = 1;
        queue.push_back(v);
      }
    }
  }
  std::vector<std::uint8_t> out(n_);
  for (int i = 0; i < n_; ++i) out[i] = reach[i] ? 0 : 1;
  return out;
}

}  // namespace nlflow
