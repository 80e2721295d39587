#include "sparseinv/graph.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>

namespace sparseinv {

bool SparsityGraph::has_edge(int i, int j) const {
  const auto& o = out[static_cast<std::size_t>(i)];
  return std::binary_search(o.begin(), o.end(), j);
}

SparsityGraph build_graph(const SystemDef& sys) {
  sys.validate();
  const int nb = sys.partition.num_blocks();
  const int n = sys.num_vars();
  std::vector<int> block_of(static_cast<std::size_t>(n));
  for (int j = 0; j < nb; ++j)
    for (int v : sys.partition.blocks[static_cast<std::size_t>(j)])
      block_of[static_cast<std::size_t>(v)] = j;

  std::vector<std::set<int>> out_sets(static_cast<std::size_t>(nb));
  for (int j = 0; j < nb; ++j) {
    for (int v : sys.partition.blocks[static_cast<std::size_t>(j)]) {
      for (int dep : sys.f[static_cast<std::size_t>(v)].support()) {
        const int i = block_of[static_cast<std::size_t>(dep)];
        if (i != j) out_sets[static_cast<std::size_t>(i)].insert(j);
      }
    }
  }

  SparsityGraph g;
  g.weights.resize(static_cast<std::size_t>(nb));
  g.out.resize(static_cast<std::size_t>(nb));
  g.in.resize(static_cast<std::size_t>(nb));
  for (int j = 0; j < nb; ++j) g.weights[static_cast<std::size_t>(j)] = sys.partition.weight(j);
  for (int i = 0; i < nb; ++i) {
    g.out[static_cast<std::size_t>(i)].assign(out_sets[static_cast<std::size_t>(i)].begin(),
                                              out_sets[static_cast<std::size_t>(i)].end());
    for (int j : g.out[static_cast<std::size_t>(i)]) g.in[static_cast<std::size_t>(j)].push_back(i);
  }
  for (auto& v : g.in) std::sort(v.begin(), v.end());
  return g;
}

bool is_acyclic(const SparsityGraph& g) {
  const int n = g.num_nodes();
  std::vector<int> indeg(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < n; ++i)
    for (int j : g.out[static_cast<std::size_t>(i)]) ++indeg[static_cast<std::size_t>(j)];
  std::vector<int> queue;
  for (int i = 0; i < n; ++i)
    if (indeg[static_cast<std::size_t>(i)] == 0) queue.push_back(i);
  int seen = 0;
  while (!queue.empty()) {
    int u = queue.back();
    queue.pop_back();
    ++seen;
    for (int j : g.out[static_cast<std::size_t>(u)])
      if (--indeg[static_cast<std::size_t>(j)] == 0) queue.push_back(j);
  }
  return seen == n;
}

namespace {

// Iterative Tarjan SCC. Returns component id per node (ids in discovery order).
std::vector<int> tarjan_scc(const SparsityGraph& g, int& num_comps) {
  const int n = g.num_nodes();
  std::vector<int> index(static_cast<std::size_t>(n), -1), low(static_cast<std::size_t>(n), 0),
      comp(static_cast<std::size_t>(n), -1);
  std::vector<char> on_stack(static_cast<std::size_t>(n), 0);
  std::vector<int> stack;
  int next_index = 0;
  num_comps = 0;

  struct Frame {
    int node;
    std::size_t child;
  };
  for (int root = 0; root < n; ++root) {
    if (index[static_cast<std::size_t>(root)] != -1) continue;
    std::vector<Frame> call{{root, 0}};
    while (!call.empty()) {
      Frame& f = call.back();
      const int u = f.node;
      if (f.child == 0) {
        index[static_cast<std::size_t>(u)] = low[static_cast<std::size_t>(u)] = next_index++;
        stack.push_back(u);
        on_stack[static_cast<std::size_t>(u)] = 1;
      }
      const auto& succ = g.out[static_cast<std::size_t>(u)];
      if (f.child < succ.size()) {
        const int v = succ[f.child++];
        if (index[static_cast<std::size_t>(v)] == -1) {
          call.push_back({v, 0});
        } else if (on_stack[static_cast<std::size_t>(v)]) {
          low[static_cast<std::size_t>(u)] =
              std::min(low[static_cast<std::size_t>(u)], index[static_cast<std::size_t>(v)]);
        }
      } else {
        if (low[static_cast<std::size_t>(u)] == index[static_cast<std::size_t>(u)]) {
          while (true) {
            const int w = stack.back();
            stack.pop_back();
            on_stack[static_cast<std::size_t>(w)] = 0;
            comp[static_cast<std::size_t>(w)] = num_comps;
            if (w == u) break;
          }
          ++num_comps;
        }
        call.pop_back();
        if (!call.empty()) {
          const int parent = call.back().node;
          low[static_cast<std::size_t>(parent)] =
              std::min(low[static_cast<std::size_t>(parent)], low[static_cast<std::size_t>(u)]);
        }
      }
    }
  }
  return comp;
}

}  // namespace

CondensedGraph condense(const SparsityGraph& g) {
  const int n = g.num_nodes();
  int num_comps = 0;
  std::vector<int> comp = tarjan_scc(g, num_comps);

  // Renumber components by smallest member block id for a deterministic layout.
  std::vector<int> smallest(static_cast<std::size_t>(num_comps), n);
  for (int v = 0; v < n; ++v)
    smallest[static_cast<std::size_t>(comp[static_cast<std::size_t>(v)])] =
        std::min(smallest[static_cast<std::size_t>(comp[static_cast<std::size_t>(v)])], v);
  std::vector<int> order(static_cast<std::size_t>(num_comps));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return smallest[static_cast<std::size_t>(a)] < smallest[static_cast<std::size_t>(b)];
  });
  std::vector<int> renum(static_cast<std::size_t>(num_comps));
  for (int k = 0; k < num_comps; ++k) renum[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] = k;

  CondensedGraph c;
  c.members.resize(static_cast<std::size_t>(num_comps));
  c.node_of_block.resize(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) {
    const int k = renum[static_cast<std::size_t>(comp[static_cast<std::size_t>(v)])];
    c.node_of_block[static_cast<std::size_t>(v)] = k;
    c.members[static_cast<std::size_t>(k)].push_back(v);
  }
  for (auto& m : c.members) std::sort(m.begin(), m.end());

  c.graph.weights.assign(static_cast<std::size_t>(num_comps), 0);
  for (int v = 0; v < n; ++v)
    c.graph.weights[static_cast<std::size_t>(c.node_of_block[static_cast<std::size_t>(v)])] +=
        g.weights[static_cast<std::size_t>(v)];

  std::vector<std::set<int>> out_sets(static_cast<std::size_t>(num_comps));
  for (int i = 0; i < n; ++i) {
    for (int j : g.out[static_cast<std::size_t>(i)]) {
      const int ci = c.node_of_block[static_cast<std::size_t>(i)];
      const int cj = c.node_of_block[static_cast<std::size_t>(j)];
      if (ci != cj) out_sets[static_cast<std::size_t>(ci)].insert(cj);
    }
  }
  c.graph.out.resize(static_cast<std::size_t>(num_comps));
  c.graph.in.resize(static_cast<std::size_t>(num_comps));
  for (int i = 0; i < num_comps; ++i) {
    c.graph.out[static_cast<std::size_t>(i)].assign(out_sets[static_cast<std::size_t>(i)].begin(),
                                                    out_sets[static_cast<std::size_t>(i)].end());
    for (int j : c.graph.out[static_cast<std::size_t>(i)])
      c.graph.in[static_cast<std::size_t>(j)].push_back(i);
  }
  for (auto& v : c.graph.in) std::sort(v.begin(), v.end());
  return c;
}

std::vector<int> CondensedGraph::raw_variables(const Partition& partition,
                                               const std::vector<int>& nodes) const {
  std::vector<int> raw;
  for (int node : nodes)
    for (int blk : members[static_cast<std::size_t>(node)])
      for (int v : partition.blocks[static_cast<std::size_t>(blk)]) raw.push_back(v);
  std::sort(raw.begin(), raw.end());
  return raw;
}

std::vector<int> leafs(const CondensedGraph& g) {
  if (!is_acyclic(g.graph))
    throw std::invalid_argument("leafs: graph has a cycle; condense it first");
  std::vector<int> out;
  for (int i = 0; i < g.num_nodes(); ++i)
    if (g.graph.out[static_cast<std::size_t>(i)].empty()) out.push_back(i);
  return out;
}

std::vector<int> past(const CondensedGraph& g, int node) {
  if (node < 0 || node >= g.num_nodes()) throw std::out_of_range("past: unknown node");
  std::vector<char> seen(static_cast<std::size_t>(g.num_nodes()), 0);
  std::vector<int> stack{node};
  seen[static_cast<std::size_t>(node)] = 1;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (int p : g.graph.in[static_cast<std::size_t>(u)]) {
      if (!seen[static_cast<std::size_t>(p)]) {
        seen[static_cast<std::size_t>(p)] = 1;
        stack.push_back(p);
      }
    }
  }
  std::vector<int> out;
  for (int i = 0; i < g.num_nodes(); ++i)
    if (seen[static_cast<std::size_t>(i)]) out.push_back(i);
  return out;
}

long omega(const CondensedGraph& g) {
  long best = 0;
  for (int i = 0; i < g.num_nodes(); ++i) {
    long w = 0;
    for (int p : past(g, i)) w += g.graph.weights[static_cast<std::size_t>(p)];
    best = std::max(best, w);
  }
  return best;
}

Partition minimal_factorization(const std::vector<Polynomial>& constraints, int num_vars) {
  std::vector<int> parent(static_cast<std::size_t>(num_vars));
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int a) {
    while (parent[static_cast<std::size_t>(a)] != a) {
      parent[static_cast<std::size_t>(a)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(a)])];
      a = parent[static_cast<std::size_t>(a)];
    }
    return a;
  };
  auto unite = [&](int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a > b) std::swap(a, b);
    parent[static_cast<std::size_t>(b)] = a;  // keep smallest index as root
  };

  for (const auto& c : constraints) {
    if (c.num_vars() != num_vars)
      throw std::invalid_argument("minimal_factorization: constraint over wrong variable count");
    const auto sup = c.support();
    auto it = sup.begin();
    if (it == sup.end()) continue;
    const int first = *it;
    for (++it; it != sup.end(); ++it) unite(first, *it);
  }

  std::vector<std::vector<int>> groups(static_cast<std::size_t>(num_vars));
  for (int v = 0; v < num_vars; ++v) groups[static_cast<std::size_t>(find(v))].push_back(v);
  Partition p;
  for (auto& g : groups)
    if (!g.empty()) p.blocks.push_back(std::move(g));
  return p;
}

namespace {

std::string block_label(const std::vector<int>& vars, const std::vector<std::string>& names) {
  std::string s = "(";
  for (std::size_t i = 0; i < vars.size(); ++i) {
    if (i) s += ",";
    s += names[static_cast<std::size_t>(vars[i])];
  }
  return s + ")";
}

}  // namespace

std::string to_dot(const SparsityGraph& g, const Partition& partition,
                   const std::vector<std::string>& var_names) {
  std::ostringstream os;
  os << "digraph sparsity {\n  rankdir=LR;\n";
  for (int i = 0; i < g.num_nodes(); ++i)
    os << "  n" << i << " [label=\"x" << (i + 1) << " "
       << block_label(partition.blocks[static_cast<std::size_t>(i)], var_names) << " w="
       << g.weights[static_cast<std::size_t>(i)] << "\"];\n";
  for (int i = 0; i < g.num_nodes(); ++i)
    for (int j : g.out[static_cast<std::size_t>(i)]) os << "  n" << i << " -> n" << j << ";\n";
  os << "}\n";
  return os.str();
}

std::string to_dot(const CondensedGraph& g, const Partition& partition,
                   const std::vector<std::string>& var_names) {
  std::ostringstream os;
  os << "digraph condensed {\n  rankdir=LR;\n";
  for (int i = 0; i < g.num_nodes(); ++i) {
    std::vector<int> raw = g.raw_variables(partition, {i});
    os << "  n" << i << " [label=\"" << block_label(raw, var_names) << " w="
       << g.graph.weights[static_cast<std::size_t>(i)] << "\"];\n";
  }
  for (int i = 0; i < g.num_nodes(); ++i)
    for (int j : g.graph.out[static_cast<std::size_t>(i)]) os << "  n" << i << " -> n" << j << ";\n";
  os << "}\n";
  return os.str();
}

}  // namespace sparseinv
