#pragma once

#include <map>
#include <string>
#include <vector>

#include "sparseinv/approx.hpp"
#include "sparseinv/sysmodel.hpp"

namespace sparseinv {

struct DegreeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Moments of the Lebesgue measure on a box, keyed by exponent vector.
struct MomentVector {
  std::vector<Interval> box;
  std::map<Exponents, double> moments;

  double at(const Exponents& e) const;
};

/// Closed-form moment of one monomial over a box: prod (b^(a+1)-a^(a+1))/(a+1).
double box_moment(const std::vector<Interval>& box, const Exponents& exps);

MomentVector lebesgue_moments(const std::vector<Interval>& box, int max_degree);

/// One decision polynomial: a named vector of free coefficients over a fixed
/// monomial basis (ambient program variables, scoped support).
struct SosDecision {
  std::string name;
  std::vector<int> scope;       // ambient variable indices it may touch
  int max_degree = 0;
  std::vector<Exponents> basis; // grlex-ascending ambient monomials
};

/// One SOS multiplier sigma with its constraint generator g (g == 1 for the
/// leading term); contributes sigma * g to the right side of an identity.
struct SosMultiplier {
  std::string name;
  int identity = -1;
  Polynomial generator;          // ambient polynomial
  std::vector<int> scope;        // ambient variables of the Gram basis
  std::vector<Exponents> gram_basis;
};

/// One polynomial identity "offset + sum_d Op_d(decision_d) = sum_j sigma_j g_j".
/// Decision contributions are stored as the image of each basis monomial under
/// the identity's linear operator, so coefficient matching is mechanical.
struct SosIdentity {
  std::string name;
  Polynomial offset;
  struct DecisionTerm {
    int decision;
    std::vector<Polynomial> images;  // image of each basis monomial
  };
  std::vector<DecisionTerm> terms;
  std::vector<int> multipliers;              // indices into SosProgram::multipliers
  std::vector<std::vector<int>> scopes;      // variable scopes spanning all monomials
  int matching_degree = 0;
};

/// Symbolic SOS feasibility program with a linear moment objective; the exact
/// shape consumed by sdp::to_standard_form.
struct SosProgram {
  int num_vars = 0;            // ambient program variables (time first if present)
  bool has_time = false;       // variable 0 is t
  double time_horizon = 0.0;
  std::vector<std::string> var_names;

  std::vector<SosDecision> decisions;
  std::vector<SosMultiplier> multipliers;
  std::vector<SosIdentity> identities;
  std::vector<double> objective;  // over concatenated decision coefficients

  SetKind kind = SetKind::MPI;
  int degree = 0;

  // Certificate extraction: which decisions are w-polynomials and which global
  // variables their local coordinates refer to. Dense programs have one entry;
  // the sparse improvement program has one per leaf and threshold l.
  struct CertificateSpec {
    int decision = -1;
    int subsystem_id = -1;
    std::vector<int> global_vars;
  };
  std::vector<CertificateSpec> certificates;
  double certificate_threshold = 1.0;

  int decision_offset(int d) const;
  int num_free() const;
  int decision_index(const std::string& name) const;

  std::string debug_dump_json() const;  // identities, scopes, degree caps
};

/// ROA program at even degree k: v over (t, x) with deg v = k+1-deg(f),
/// w over x with deg w = k; identities
///   -Lv = s1 + sum a_j p_j + b t(T-t),   v(T,.) = s2 + sum c_j q_j,
///    w  = s3 + sum d_j p_j,              w - v(0,.) - 1 = s4 + sum e_j p_j,
/// objective <w, lambda> over the subsystem box.
SosProgram build_roa_program(const Subsystem& sub, double T, int k);

/// MPI program at even degree k with discount beta > 0: identities
///   beta v - grad(v).f = s0 + ..., w = s0' + ..., w - v - 1 = s0'' + ... .
SosProgram build_mpi_program(const Subsystem& sub, double beta, int k);

/// GA program: decisions p, q, w; four identities mirroring the LP constraints
///   beta1 p - grad(p).f >= 0, beta2 q + grad(q).f >= 0, w >= 0, w - p - q >= 1.
SosProgram build_ga_program(const Subsystem& sub, double beta1, double beta2, int k);

/// Joint sparse improvement program for the ROA: per-leaf decision pairs
/// (v^r, w^r) scoped to the leaf past, four summed identities certified with
/// multipliers scoped to single leaf pasts, threshold l on the last identity.
SosProgram build_sparse_roa_program(const SystemDef& sys,
                                    const std::vector<Subsystem>& leaf_subsystems, double T, int k);

// forward declarations; definitions live in sdp.hpp
struct SdpProblem;
struct SdpSolution;

struct SolveError : std::runtime_error {
  SolveError(const std::string& msg, SolveDiagnostics d)
      : std::runtime_error(msg), diagnostics(std::move(d)) {}
  SolveDiagnostics diagnostics;
};

struct CertificateBundle {
  std::vector<OuterApprox> certs;
  double objective = 0.0;
  SolveDiagnostics diag;
  // per-identity max-|coefficient| defects of the reconstructed identities
  std::vector<double> identity_residuals;
};

/// Rebuilds the certificate polynomial(s) from a solved standard form, checks
/// every identity symbolically against the solved Gram matrices, and applies
/// the margin policy. Throws SolveError when the solve did not converge.
CertificateBundle extract_certificate(const SosProgram& program, const SdpProblem& problem,
                                      const SdpSolution& solution);

}  // namespace sparseinv
