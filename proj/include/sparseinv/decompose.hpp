#pragma once

#include <optional>
#include <span>
#include <vector>

#include "sparseinv/approx.hpp"
#include "sparseinv/graph.hpp"
#include "sparseinv/oracle.hpp"
#include "sparseinv/sysmodel.hpp"

namespace sparseinv {

struct ProductFormError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Decomposition skeleton: condensed sparsity graph, its leafs, and the
/// subsystem induced by each leaf's past.
struct Decomposition {
  SparsityGraph raw_graph;
  CondensedGraph condensed;
  std::vector<int> leaf_nodes;
  std::vector<Subsystem> subsystems;  // aligned with leaf_nodes; id = position
  long omega = 0;
};

/// Cycle reduction plus leaf-past extraction: one subsystem per condensed leaf,
/// covering the raw variables of the leaf's past. Requires product-form
/// constraints (ProductFormError otherwise).
Decomposition decouple(const SystemDef& sys);

/// Conjunction of per-leaf superlevel sets over the ambient constraint set:
/// x in X and w_r(x_{I_r}) >= 1 for every leaf r.
class GluedSet {
 public:
  GluedSet(SetKind kind, std::vector<OuterApprox> parts,
           std::vector<SemialgebraicBlock> ambient_blocks);

  SetKind kind() const { return kind_; }
  const std::vector<OuterApprox>& parts() const { return parts_; }
  bool member(std::span<const double> x, double w_tol = 0.0) const;

 private:
  SetKind kind_;
  std::vector<OuterApprox> parts_;
  ConstraintSet ambient_;
  int num_vars_;
};

/// Builds the glued set from one certificate per leaf subsystem. Kinds must
/// agree and every leaf must be covered exactly once.
GluedSet glue(const std::vector<OuterApprox>& approxs, const SystemDef& sys,
              const Decomposition& dec);

bool membership(const GluedSet& g, std::span<const double> x, double w_tol = 0.0);

/// Decoupling error bound: sum_r err_r * volume(prod of boxes of blocks outside
/// past(leaf_r)). Throws when a needed block has no finite box.
double error_bound(const std::vector<double>& per_sub_errors, const SystemDef& sys,
                   const Decomposition& dec);

/// Additional outer set from the sparse improvement program:
/// { x in X : sum_r w_r(x_{I_r}) >= threshold }.
class SparseImprovementSet {
 public:
  SparseImprovementSet(SetKind kind, int degree, std::vector<OuterApprox> parts, double threshold,
                       std::vector<SemialgebraicBlock> ambient_blocks);

  SetKind kind() const { return kind_; }
  int degree() const { return degree_; }
  double threshold() const { return threshold_; }
  const std::vector<OuterApprox>& parts() const { return parts_; }
  bool member(std::span<const double> x, double w_tol = 0.0) const;

 private:
  SetKind kind_;
  int degree_ = 0;
  std::vector<OuterApprox> parts_;
  double threshold_ = 1.0;
  ConstraintSet ambient_;
  int num_vars_;
};

/// Intersection S cap Y; still an outer approximation. Kind and degree of the
/// two sides must match.
class IntersectedSet {
 public:
  IntersectedSet(GluedSet glued, SparseImprovementSet improvement);
  bool member(std::span<const double> x, double w_tol = 0.0) const;
  const GluedSet& glued() const { return glued_; }
  const SparseImprovementSet& improvement() const { return improvement_; }

 private:
  GluedSet glued_;
  SparseImprovementSet improvement_;
};

IntersectedSet intersect_with_sparse_improvement(const GluedSet& g,
                                                 const SparseImprovementSet& y);

struct PipelineOptions {
  SetKind kind = SetKind::MPI;
  int degree = 8;
  std::vector<std::pair<int, int>> degree_overrides;  // (subsystem id, k)
  double beta = 1.0;
  double beta1 = 1.0;
  double beta2 = 1.0;
  double solver_tol = 1e-8;
  int max_threads = 0;  // 0 = hardware default
};

struct PipelineResult {
  std::vector<OuterApprox> certificates;  // one per leaf subsystem
  bool any_fallback = false;              // some solve degraded to w == 2
  std::vector<std::string> messages;
};

/// Solves each leaf subsystem's program (ROA/MPI/GA per options), in parallel.
/// A failed solve degrades to the trivial whole-box certificate w == 2 so the
/// glued set stays a valid outer approximation.
PipelineResult solve_all_subsystems(const SystemDef& sys, const Decomposition& dec,
                                    const PipelineOptions& opts);

}  // namespace sparseinv
