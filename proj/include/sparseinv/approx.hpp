#pragma once

#include <span>
#include <string>
#include <vector>

#include "sparseinv/poly.hpp"

namespace sparseinv {

enum class SetKind { ROA, MPI, GA, WA };

std::string to_string(SetKind k);
SetKind set_kind_from_string(const std::string& s);

struct SolveDiagnostics {
  std::string status;            // optimal / near-optimal / fallback / ...
  double gap = 0.0;              // solver-reported relative duality gap
  double primal_infeas = 0.0;
  double dual_infeas = 0.0;
  double identity_residual = 0.0;  // max |coeff| of any reconstructed identity defect
  double margin = 0.0;             // conservative superlevel threshold is 1 + margin
  int iterations = 0;
};

/// Polynomial certificate w over a subsystem's variables. The represented set
/// is the superlevel set {y in X_I : w(y) >= 1}; a conservative variant shifts
/// the threshold by the certified margin.
struct OuterApprox {
  int subsystem_id = -1;
  std::vector<int> vars;  // global variable indices, sorted; w's coordinate order
  Polynomial w;           // over vars.size() local variables
  SetKind kind = SetKind::MPI;
  int degree = 0;
  double objective = 0.0;  // d_k* of the producing program
  SolveDiagnostics diag;

  double value(std::span<const double> x_global) const;
  bool member_raw(std::span<const double> x_global, double w_tol = 0.0) const {
    return value(x_global) >= 1.0 - w_tol;
  }
  bool member_conservative(std::span<const double> x_global) const {
    return value(x_global) >= 1.0 + diag.margin;
  }

  /// Constant certificate (w == c); c >= 1 marks the whole box, c < 1 the empty set.
  static OuterApprox constant(int subsystem_id, std::vector<int> vars, double c, SetKind kind);
};

}  // namespace sparseinv
