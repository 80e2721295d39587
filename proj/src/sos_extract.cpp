#include <cmath>

#include "sparseinv/sdp.hpp"
#include "sparseinv/sos.hpp"

namespace sparseinv {

CertificateBundle extract_certificate(const SosProgram& program, const SdpProblem& problem,
                                      const SdpSolution& solution) {
  SolveDiagnostics diag;
  diag.status = to_string(solution.status);
  diag.gap = solution.gap;
  diag.primal_infeas = solution.primal_infeas;
  diag.dual_infeas = solution.dual_infeas;
  diag.iterations = solution.iterations;

  if (!solution.converged())
    throw SolveError("extract_certificate: solver status '" + to_string(solution.status) +
                         "' (gap=" + format_double(solution.gap) +
                         ", primal_infeas=" + format_double(solution.primal_infeas) +
                         ", dual_infeas=" + format_double(solution.dual_infeas) + ")",
                     diag);
  if (static_cast<int>(solution.y.size()) != program.num_free() ||
      solution.X.size() != program.multipliers.size())
    throw std::invalid_argument("extract_certificate: solution does not match the program shape");

  CertificateBundle bundle;
  bundle.objective = solution.primal_obj;

  // symbolic defect of every identity against the solved Gram matrices
  int term_count = 0;
  for (const auto& ident : program.identities) {
    Polynomial defect = ident.offset;
    for (const auto& term : ident.terms) {
      const int off = program.decision_offset(term.decision);
      for (std::size_t i = 0; i < term.images.size(); ++i) {
        const double c = solution.y[static_cast<std::size_t>(off) + i];
        if (c != 0.0) defect += c * term.images[i];
      }
      ++term_count;
    }
    for (int mi : ident.multipliers) {
      const auto& mult = program.multipliers[static_cast<std::size_t>(mi)];
      const auto& Xb = solution.X[static_cast<std::size_t>(mi)];
      const int s = static_cast<int>(mult.gram_basis.size());
      Polynomial sigma(program.num_vars);
      for (int a = 0; a < s; ++a) {
        for (int b = a; b < s; ++b) {
          const double v = (a == b) ? Xb(a, b) : 2.0 * Xb(a, b);
          if (v == 0.0) continue;
          Exponents e = mult.gram_basis[static_cast<std::size_t>(a)];
          for (std::size_t q = 0; q < e.size(); ++q)
            e[q] += mult.gram_basis[static_cast<std::size_t>(b)][q];
          sigma += Polynomial::monomial(program.num_vars, e, v);
        }
      }
      defect -= sigma * mult.generator;
      ++term_count;
    }
    bundle.identity_residuals.push_back(defect.max_abs_coeff());
  }
  double rmax = 0.0;
  for (double r : bundle.identity_residuals) rmax = std::max(rmax, r);
  diag.identity_residual = rmax;
  diag.margin = rmax * term_count;

  for (const auto& spec : program.certificates) {
    const auto& dec = program.decisions[static_cast<std::size_t>(spec.decision)];
    const int off = program.decision_offset(spec.decision);
    const int local_n = static_cast<int>(dec.scope.size());
    // decision scope positions line up with the certificate's global variables
    std::vector<int> pos_of_ambient(static_cast<std::size_t>(program.num_vars), -1);
    for (int j = 0; j < local_n; ++j)
      pos_of_ambient[static_cast<std::size_t>(dec.scope[static_cast<std::size_t>(j)])] = j;

    OuterApprox approx;
    approx.subsystem_id = spec.subsystem_id;
    approx.vars = spec.global_vars;
    approx.kind = program.kind;
    approx.degree = program.degree;
    approx.objective = solution.primal_obj;
    approx.diag = diag;
    Polynomial w(local_n);
    for (std::size_t i = 0; i < dec.basis.size(); ++i) {
      const double c = solution.y[static_cast<std::size_t>(off) + i];
      if (c == 0.0) continue;
      Exponents local(static_cast<std::size_t>(local_n), 0);
      for (int q = 0; q < program.num_vars; ++q) {
        const int k = dec.basis[i][static_cast<std::size_t>(q)];
        if (k == 0) continue;
        const int j = pos_of_ambient[static_cast<std::size_t>(q)];
        if (j < 0)
          throw std::logic_error("extract_certificate: certificate basis leaves its scope");
        local[static_cast<std::size_t>(j)] = k;
      }
      w += Polynomial::monomial(local_n, local, c);
    }
    approx.w = std::move(w);
    bundle.certs.push_back(std::move(approx));
  }
  bundle.diag = diag;
  (void)problem;
  return bundle;
}

}  // namespace sparseinv
