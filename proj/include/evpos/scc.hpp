#ifndef EVPOS_SCC_HPP
#define EVPOS_SCC_HPP

#include <algorithm>
#include <cstddef>
#include <vector>

namespace evpos {

/// Directed graph on vertices 0..n-1 with adjacency lists of out-neighbours.
struct Digraph {
  std::size_t n = 0;
  std::vector<std::vector<std::size_t>> out;

  explicit Digraph(std::size_t size = 0) : n(size), out(size) {}

  void add_edge(std::size_t from, std::size_t to)
  {
    auto &adj = out[from];
    if (std::find(adj.begin(), adj.end(), to) == adj.end())
      adj.push_back(to);
  }

  bool has_edge(std::size_t from, std::size_t to) const
  {
    return std::find(out[from].begin(), out[from].end(), to) != out[from].end();
  }
};

/// Strongly connected components. Components are numbered in the order Tarjan's
/// algorithm emits them, which is a reverse topological order: every edge between
/// different components goes from a higher to a lower component number.
struct SccDecomposition {
  std::vector<std::size_t> component; // vertex -> component id
  std::vector<std::vector<std::size_t>> members;

  std::size_t count() const { return members.size(); }
};

inline SccDecomposition tarjan_scc(const Digraph &g)
{
  const std::size_t unvisited = static_cast<std::size_t>(-1);
  std::vector<std::size_t> index(g.n, unvisited), low(g.n, 0);
  std::vector<bool> on_stack(g.n, false);
  std::vector<std::size_t> stack;
  SccDecomposition r;
  r.component.assign(g.n, 0);
  std::size_t counter = 0;

  // Iterative depth-first search: frames hold (vertex, next edge position).
  std::vector<std::pair<std::size_t, std::size_t>> frames;
  for (std::size_t root = 0; root < g.n; ++root) {
    if (index[root] != unvisited)
      continue;
    frames.emplace_back(root, 0);
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!frames.empty()) {
      auto &[v, pos] = frames.back();
      if (pos < g.out[v].size()) {
        const std::size_t w = g.out[v][pos++];
        if (index[w] == unvisited) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = true;
          frames.emplace_back(w, 0);
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      if (low[v] == index[v]) {
        std::vector<std::size_t> comp;
        std::size_t w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          r.component[w] = r.members.size();
          comp.push_back(w);
        } while (w != v);
        std::sort(comp.begin(), comp.end());
        r.members.push_back(std::move(comp));
      }
      const std::size_t done = v;
      frames.pop_back();
      if (!frames.empty()) {
        const std::size_t parent = frames.back().first;
        low[parent] = std::min(low[parent], low[done]);
      }
    }
  }
  return r;
}

inline bool strongly_connected(const Digraph &g) { return g.n <= 1 || tarjan_scc(g).count() == 1; }

/// Successor components of each component in the condensation.
inline std::vector<std::vector<std::size_t>> condensation(const Digraph &g, const SccDecomposition &scc)
{
  std::vector<std::vector<std::size_t>> succ(scc.count());
  for (std::size_t v = 0; v < g.n; ++v)
    for (std::size_t w : g.out[v]) {
      const std::size_t a = scc.component[v], b = scc.component[w];
      if (a != b && std::find(succ[a].begin(), succ[a].end(), b) == succ[a].end())
        succ[a].push_back(b);
    }
  return succ;
}

} // namespace evpos

#endif // EVPOS_SCC_HPP
