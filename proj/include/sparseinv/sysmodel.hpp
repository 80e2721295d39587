#pragma once

#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "sparseinv/poly.hpp"

namespace sparseinv {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double length() const { return hi - lo; }
};

/// Ordered partition of {0..n-1} into disjoint nonempty blocks.
struct Partition {
  std::vector<std::vector<int>> blocks;

  int num_vars() const;
  int num_blocks() const { return static_cast<int>(blocks.size()); }
  int weight(int block) const { return static_cast<int>(blocks[static_cast<std::size_t>(block)].size()); }
  int block_of(int var) const;
  void validate() const;  // disjoint, covering, nonempty

  static Partition singletons(int n);
};

/// One factor of a product-form constraint set: a basic semialgebraic set over
/// the variables of a single partition block. Inequalities are polynomials over
/// the ambient variable space with semantics p(x) >= 0; their supports are
/// expected to lie inside var_indices (validate_product_constraints checks it).
struct SemialgebraicBlock {
  std::vector<int> var_indices;
  std::vector<Polynomial> inequalities;
  // Per-variable interval bounds, aligned with var_indices. Required by the SOS
  // pipeline (compactness) and by box moments; optional for graph-only work.
  std::optional<std::vector<Interval>> box;

  bool has_box() const { return box.has_value(); }
};

/// A polynomial dynamical system with a variable partition and product-form
/// constraint (and optionally target) sets.
struct SystemDef {
  PolyVector f;                                  // n components over n variables
  Partition partition;                           // N blocks
  std::vector<SemialgebraicBlock> constraint_blocks;  // one per block
  std::optional<std::vector<SemialgebraicBlock>> target_blocks;  // one per block (ROA)
  double horizon = 0.0;                          // T, ROA only
  std::vector<std::string> var_names;            // defaults to x1..xn when empty

  int num_vars() const { return static_cast<int>(f.size()); }
  std::vector<std::string> names_or_default() const;
  void validate() const;
};

/// A closed sub-collection of states, re-indexed to a self-contained system.
struct Subsystem {
  int id = -1;
  std::vector<int> global_indices;  // sorted raw variable indices (local -> global)
  std::vector<int> block_ids;       // partition blocks composing the subsystem
  PolyVector f;                     // |I| components over |I| local variables
  Partition partition;              // local re-indexed partition
  std::vector<SemialgebraicBlock> constraint_blocks;            // local indexing
  std::optional<std::vector<SemialgebraicBlock>> target_blocks; // local indexing
  double horizon = 0.0;
  std::vector<std::string> var_names;

  int dim() const { return static_cast<int>(global_indices.size()); }
  std::vector<double> project(std::span<const double> x_global) const;
  // Concatenated per-variable box over all blocks, in local variable order.
  // Throws if any block lacks interval bounds.
  std::vector<Interval> full_box() const;
};

struct ClosureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct PartitionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// True iff support(f_i) is contained in I for every i in I (the syntactic
/// subsystem condition f_I o P_I = P_I o f).
bool is_subsystem(const SystemDef& sys, const std::vector<int>& index_set);

/// Extracts the subsystem induced by a block-aligned, closed index set.
/// Throws ClosureError naming a violating variable, or PartitionError when the
/// index set is not a union of partition blocks.
Subsystem project_subsystem(const SystemDef& sys, const std::vector<int>& index_set);

/// Convenience: subsystem from a set of partition block ids.
Subsystem subsystem_from_blocks(const SystemDef& sys, const std::vector<int>& block_ids);

/// Whole system as a (trivial) subsystem.
Subsystem whole_system(const SystemDef& sys);

/// True iff every constraint (and target) inequality's support lies inside its
/// own block. Cross-block constraints are collected into `diagnostics` when given.
bool validate_product_constraints(const SystemDef& sys, std::vector<std::string>* diagnostics = nullptr);

}  // namespace sparseinv
