#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "sparseinv/sos.hpp"

namespace sparseinv {

/// Standard-form SDP with PSD blocks X_b and a free variable vector y:
///   min  sum_b <C_b, X_b> + g.y
///   s.t. sum_b <A_i^b, X_b> + G_i . y = rhs_i,  X_b >= 0.
/// Entries address symmetric matrices: (row, col, v) with row <= col means
/// A_rc = A_cr = v, so <A, X> picks up 2 v X_rc off the diagonal.
struct SdpProblem {
  struct Entry {
    int block;
    int row, col;
    double value;
  };

  std::vector<int> block_dims;
  int num_free = 0;
  std::vector<std::vector<Entry>> rows_psd;                      // per constraint
  std::vector<std::vector<std::pair<int, double>>> rows_free;    // per constraint
  std::vector<double> rhs;
  std::vector<Entry> obj_psd;
  std::vector<double> obj_free;

  int num_constraints() const { return static_cast<int>(rhs.size()); }
  void validate() const;
};

struct SdpSolution {
  enum class Status { optimal, near_optimal, infeasible, failed };

  std::vector<Eigen::MatrixXd> X;  // primal PSD blocks
  std::vector<Eigen::MatrixXd> S;  // dual slack blocks
  std::vector<double> y;           // primal free variables
  std::vector<double> dual;        // equality multipliers (original row indexing)
  double primal_obj = 0.0;
  double dual_obj = 0.0;
  double gap = 0.0;  // |primal - dual| / (1 + |primal| + |dual|)
  double primal_infeas = 0.0;
  double dual_infeas = 0.0;
  int iterations = 0;
  Status status = Status::failed;

  bool converged() const {
    return status == Status::optimal || status == Status::near_optimal;
  }
};

std::string to_string(SdpSolution::Status s);

struct SolverOptions {
  double tol = 1e-8;
  int max_iterations = 200;
  double step_fraction = 0.98;  // fraction of the step to the PSD boundary
  bool presolve = true;         // drop numerically dependent equality rows
  double presolve_tol = 1e-10;
  bool trace = false;           // iteration log on stderr
};

/// Numeric conversion of a symbolic SOS program: one PSD block per multiplier,
/// one free scalar per decision coefficient, one equality per matched monomial,
/// moment objective on the certificate coefficients.
SdpProblem to_standard_form(const SosProgram& program);

/// Dense primal-dual path-following solve (Nesterov-Todd scaling, Mehrotra
/// predictor-corrector, Cholesky'd Schur complement). Deterministic.
SdpSolution solve(const SdpProblem& p, const SolverOptions& opts = {});
inline SdpSolution solve(const SdpProblem& p, double tol) {
  SolverOptions o;
  o.tol = tol;
  return solve(p, o);
}

/// Solver-independent recomputation of solution quality.
struct ResidualReport {
  double eq_residual_inf = 0.0;   // ||A(X) + G y - b||_inf
  double eq_residual_rel = 0.0;   // 2-norm over 1 + ||b||
  double dual_residual_rel = 0.0; // ||C - A*(nu) - S|| and free-var part, relative
  std::vector<double> min_eig_X;
  std::vector<double> min_eig_S;
  double gap = 0.0;
  std::vector<int> dependent_rows;  // detected linear dependencies (empty when clean)
};

ResidualReport verify(const SdpProblem& p, const SdpSolution& s);

/// Line-oriented sparse text format for cross-checking against external
/// solvers. Block index 0 addresses free variables (col is the variable id);
/// constraint index 0 holds the objective.
std::string to_text(const SdpProblem& p);
SdpProblem sdp_from_text(const std::string& text);

}  // namespace sparseinv
