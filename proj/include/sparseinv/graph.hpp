#pragma once

#include <string>
#include <vector>

#include "sparseinv/sysmodel.hpp"

namespace sparseinv {

/// Directed graph over partition blocks, nodes weighted by block dimension.
/// Edge (i, j) means block j's dynamics reads some variable of block i.
/// Self-loops are never stored; they cannot change pasts or components.
struct SparsityGraph {
  std::vector<int> weights;
  std::vector<std::vector<int>> out;  // sorted successor lists
  std::vector<std::vector<int>> in;   // sorted predecessor lists

  int num_nodes() const { return static_cast<int>(weights.size()); }
  bool has_edge(int i, int j) const;
};

/// Result of contracting every strongly connected component to one node.
/// `members` maps each condensed node to the original block ids it absorbed;
/// node weights are summed over members. The graph is acyclic by construction.
struct CondensedGraph {
  SparsityGraph graph;
  std::vector<std::vector<int>> members;  // condensed node -> sorted original block ids
  std::vector<int> node_of_block;         // original block -> condensed node

  int num_nodes() const { return graph.num_nodes(); }
  // Raw variable indices of a set of condensed nodes, sorted.
  std::vector<int> raw_variables(const Partition& partition, const std::vector<int>& nodes) const;
};

SparsityGraph build_graph(const SystemDef& sys);

bool is_acyclic(const SparsityGraph& g);

/// Tarjan condensation; condensed nodes are ordered by their smallest member
/// block id so the output is deterministic.
CondensedGraph condense(const SparsityGraph& g);

/// Nodes with no successor. Throws std::invalid_argument on a cyclic graph.
std::vector<int> leafs(const CondensedGraph& g);

/// Reflexive-transitive predecessor set of `node`, sorted.
std::vector<int> past(const CondensedGraph& g, int node);

/// Largest dimension-weighted past over all nodes.
long omega(const CondensedGraph& g);

/// Finest partition of {0..num_vars-1} such that every constraint polynomial's
/// support lies inside a single block (connected components of the
/// "shares a constraint" relation). Blocks are sorted by smallest member.
Partition minimal_factorization(const std::vector<Polynomial>& constraints, int num_vars);

std::string to_dot(const SparsityGraph& g, const Partition& partition,
                   const std::vector<std::string>& var_names);
std::string to_dot(const CondensedGraph& g, const Partition& partition,
                   const std::vector<std::string>& var_names);

}  // namespace sparseinv
