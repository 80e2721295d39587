#include "sparseinv/sos.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "sparseinv/sdp.hpp"

namespace sparseinv {

std::string to_string(SetKind k) {
  switch (k) {
    case SetKind::ROA: return "roa";
    case SetKind::MPI: return "mpi";
    case SetKind::GA: return "ga";
    case SetKind::WA: return "wa";
  }
  return "?";
}

SetKind set_kind_from_string(const std::string& s) {
  if (s == "roa") return SetKind::ROA;
  if (s == "mpi") return SetKind::MPI;
  if (s == "ga") return SetKind::GA;
  if (s == "wa") return SetKind::WA;
  throw std::invalid_argument("unknown set kind '" + s + "' (expected roa|mpi|ga|wa)");
}

double OuterApprox::value(std::span<const double> x_global) const {
  std::vector<double> local(vars.size());
  for (std::size_t i = 0; i < vars.size(); ++i)
    local[i] = x_global[static_cast<std::size_t>(vars[i])];
  return w.eval(local);
}

OuterApprox OuterApprox::constant(int subsystem_id, std::vector<int> vars, double c, SetKind kind) {
  OuterApprox a;
  a.subsystem_id = subsystem_id;
  a.w = Polynomial::constant(static_cast<int>(vars.size()), c);
  a.vars = std::move(vars);
  a.kind = kind;
  a.diag.status = "exact";
  return a;
}

double box_moment(const std::vector<Interval>& box, const Exponents& exps) {
  if (box.size() != exps.size()) throw std::invalid_argument("box_moment: arity mismatch");
  double m = 1.0;
  for (std::size_t i = 0; i < box.size(); ++i) {
    const auto& iv = box[i];
    if (!(iv.lo < iv.hi))
      throw std::invalid_argument("box_moment: degenerate interval [" + format_double(iv.lo) +
                                  ", " + format_double(iv.hi) + "]");
    const int a = exps[i] + 1;
    m *= (std::pow(iv.hi, a) - std::pow(iv.lo, a)) / a;
  }
  return m;
}

double MomentVector::at(const Exponents& e) const {
  auto it = moments.find(e);
  if (it == moments.end()) throw std::out_of_range("MomentVector: exponent not tabulated");
  return it->second;
}

MomentVector lebesgue_moments(const std::vector<Interval>& box, int max_degree) {
  if (max_degree < 0) throw std::invalid_argument("lebesgue_moments: negative degree");
  MomentVector mv;
  mv.box = box;
  std::vector<int> all(box.size());
  std::iota(all.begin(), all.end(), 0);
  for (const auto& e : monomial_basis(static_cast<int>(box.size()), all, max_degree))
    mv.moments.emplace(e, box_moment(box, e));
  return mv;
}

int SosProgram::decision_offset(int d) const {
  int off = 0;
  for (int i = 0; i < d; ++i) off += static_cast<int>(decisions[static_cast<std::size_t>(i)].basis.size());
  return off;
}

int SosProgram::num_free() const {
  return decision_offset(static_cast<int>(decisions.size()));
}

int SosProgram::decision_index(const std::string& name) const {
  for (std::size_t i = 0; i < decisions.size(); ++i)
    if (decisions[i].name == name) return static_cast<int>(i);
  throw std::out_of_range("SosProgram: no decision named '" + name + "'");
}

namespace {

int even_ceil(int d) { return (d % 2 == 0) ? d : d + 1; }

// Constraint generators of one local semialgebraic block, over `num_vars`
// ambient program variables with x-variable `var_offset` (1 when a leading
// time variable is present). Boxes become one quadratic (x-a)(b-x) per variable.
std::vector<std::pair<std::string, Polynomial>> block_generators(const SemialgebraicBlock& blk,
                                                                 int num_vars, int var_offset,
                                                                 const std::string& tag) {
  std::vector<std::pair<std::string, Polynomial>> gens;
  if (blk.box) {
    for (std::size_t i = 0; i < blk.var_indices.size(); ++i) {
      const int v = blk.var_indices[i] + var_offset;
      const auto& iv = (*blk.box)[i];
      if (!(iv.lo < iv.hi))
        throw std::invalid_argument("degenerate interval bound on variable " + std::to_string(v));
      Polynomial x = Polynomial::variable(num_vars, v);
      Polynomial g = (x - Polynomial::constant(num_vars, iv.lo)) *
                     (Polynomial::constant(num_vars, iv.hi) - x);
      gens.emplace_back(tag + "_box" + std::to_string(blk.var_indices[i]), std::move(g));
    }
  }
  std::vector<int> shift(static_cast<std::size_t>(num_vars - var_offset));
  std::iota(shift.begin(), shift.end(), var_offset);
  for (std::size_t i = 0; i < blk.inequalities.size(); ++i)
    gens.emplace_back(tag + "_ineq" + std::to_string(i),
                      blk.inequalities[i].remap(num_vars, shift));
  return gens;
}

struct IdentityBuilder {
  SosProgram& prog;
  SosIdentity ident;

  IdentityBuilder(SosProgram& p, std::string name, int matching_degree)
      : prog(p) {
    ident.name = std::move(name);
    ident.matching_degree = matching_degree;
    ident.offset = Polynomial(p.num_vars);
  }

  void add_offset(const Polynomial& p) { ident.offset += p; }

  void add_decision(int decision, std::vector<Polynomial> images) {
    ident.terms.push_back({decision, std::move(images)});
  }

  // sigma * g with sigma SOS over `scope`; half-degree derived from the
  // matching degree. Throws when the generator alone already overflows.
  void add_multiplier(const std::string& name, Polynomial generator,
                      const std::vector<int>& scope) {
    const int dg = generator.degree();
    if (dg > ident.matching_degree)
      throw DegreeError("identity '" + ident.name + "': generator '" + name + "' has degree " +
                        std::to_string(dg) + " > matching degree " +
                        std::to_string(ident.matching_degree) +
                        "; increase the relaxation degree k");
    const int half = (ident.matching_degree - dg) / 2;
    SosMultiplier m;
    m.name = name;
    m.identity = static_cast<int>(prog.identities.size());
    m.generator = std::move(generator);
    m.scope = scope;
    m.gram_basis = monomial_basis(prog.num_vars, scope, half);
    ident.multipliers.push_back(static_cast<int>(prog.multipliers.size()));
    prog.multipliers.push_back(std::move(m));
  }

  void add_scope(std::vector<int> scope) { ident.scopes.push_back(std::move(scope)); }

  void commit() { prog.identities.push_back(std::move(ident)); }
};

int add_decision(SosProgram& prog, const std::string& name, const std::vector<int>& scope,
                 int max_degree) {
  if (max_degree < 0)
    throw DegreeError("decision polynomial '" + name + "' would need negative degree " +
                      std::to_string(max_degree) + "; increase the relaxation degree k");
  SosDecision d;
  d.name = name;
  d.scope = scope;
  d.max_degree = max_degree;
  d.basis = monomial_basis(prog.num_vars, scope, max_degree);
  prog.decisions.push_back(std::move(d));
  return static_cast<int>(prog.decisions.size()) - 1;
}

void check_even(int k) {
  if (k <= 0 || k % 2 != 0)
    throw std::invalid_argument("relaxation degree k must be a positive even integer, got " +
                                std::to_string(k));
}

// objective <w, lambda>: moments of w's basis over the box of its x-variables
void set_moment_objective(SosProgram& prog, int decision, const std::vector<Interval>& box,
                          int var_offset) {
  prog.objective.assign(static_cast<std::size_t>(prog.num_free()), 0.0);
  const auto& dec = prog.decisions[static_cast<std::size_t>(decision)];
  const int off = prog.decision_offset(decision);
  for (std::size_t i = 0; i < dec.basis.size(); ++i) {
    Exponents local(box.size());
    for (std::size_t j = 0; j < box.size(); ++j)
      local[j] = dec.basis[i][static_cast<std::size_t>(var_offset) + j];
    prog.objective[static_cast<std::size_t>(off) + i] = box_moment(box, local);
  }
}

}  // namespace

SosProgram build_roa_program(const Subsystem& sub, double T, int k) {
  check_even(k);
  if (!sub.target_blocks)
    throw std::invalid_argument("build_roa_program: subsystem has no target set");
  if (!(T > 0.0)) throw std::invalid_argument("build_roa_program: horizon must be positive");
  const int df = std::max(1, sub.f.degree());
  if (k < sub.f.degree() + 1)
    throw DegreeError("build_roa_program: k must be at least deg(f)+1 = " +
                      std::to_string(sub.f.degree() + 1));
  const int n = sub.dim();

  SosProgram prog;
  prog.kind = SetKind::ROA;
  prog.degree = k;
  prog.num_vars = n + 1;  // t first
  prog.has_time = true;
  prog.time_horizon = T;
  prog.var_names.push_back("t");
  for (const auto& s : sub.var_names) prog.var_names.push_back(s);

  std::vector<int> tx_scope(static_cast<std::size_t>(n + 1));
  std::iota(tx_scope.begin(), tx_scope.end(), 0);
  std::vector<int> x_scope(static_cast<std::size_t>(n));
  std::iota(x_scope.begin(), x_scope.end(), 1);

  const int v_dec = add_decision(prog, "v", tx_scope, k + 1 - df);
  const int w_dec = add_decision(prog, "w", x_scope, k);
  const auto& v_basis = prog.decisions[static_cast<std::size_t>(v_dec)].basis;
  const auto& w_basis = prog.decisions[static_cast<std::size_t>(w_dec)].basis;

  std::vector<std::pair<std::string, Polynomial>> p_gens, q_gens;
  for (std::size_t j = 0; j < sub.constraint_blocks.size(); ++j)
    for (auto& g : block_generators(sub.constraint_blocks[j], n + 1, 1, "p" + std::to_string(j)))
      p_gens.push_back(std::move(g));
  for (std::size_t j = 0; j < sub.target_blocks->size(); ++j)
    for (auto& g : block_generators((*sub.target_blocks)[j], n + 1, 1, "q" + std::to_string(j)))
      q_gens.push_back(std::move(g));

  Polynomial t = Polynomial::variable(n + 1, 0);
  Polynomial time_gen = t * (Polynomial::constant(n + 1, T) - t);

  // identity 1: -Lv = s1 + sum a_j p_j + b t(T-t) on [0,T] x X
  {
    IdentityBuilder b(prog, "liouville", k);
    std::vector<Polynomial> images;
    images.reserve(v_basis.size());
    for (const auto& e : v_basis)
      images.push_back(-lie_derivative(Polynomial::monomial(n + 1, e, 1.0), sub.f, true));
    b.add_decision(v_dec, std::move(images));
    b.add_multiplier("s1", Polynomial::constant(n + 1, 1.0), tx_scope);
    for (const auto& [name, g] : p_gens) b.add_multiplier("a_" + name, g, tx_scope);
    b.add_multiplier("b_time", time_gen, tx_scope);
    b.add_scope(tx_scope);
    b.commit();
  }
  // identity 2: v(T,.) = s2 + sum c_j q_j on X_T
  {
    IdentityBuilder b(prog, "terminal", k);
    std::vector<Polynomial> images;
    images.reserve(v_basis.size());
    for (const auto& e : v_basis)
      images.push_back(Polynomial::monomial(n + 1, e, 1.0).substitute(0, T));
    b.add_decision(v_dec, std::move(images));
    b.add_multiplier("s2", Polynomial::constant(n + 1, 1.0), x_scope);
    for (const auto& [name, g] : q_gens) b.add_multiplier("c_" + name, g, x_scope);
    b.add_scope(x_scope);
    b.commit();
  }
  // identity 3: w = s3 + sum d_j p_j on X
  {
    IdentityBuilder b(prog, "w_nonneg", k);
    std::vector<Polynomial> images;
    images.reserve(w_basis.size());
    for (const auto& e : w_basis) images.push_back(Polynomial::monomial(n + 1, e, 1.0));
    b.add_decision(w_dec, std::move(images));
    b.add_multiplier("s3", Polynomial::constant(n + 1, 1.0), x_scope);
    for (const auto& [name, g] : p_gens) b.add_multiplier("d_" + name, g, x_scope);
    b.add_scope(x_scope);
    b.commit();
  }
  // identity 4: w - v(0,.) - 1 = s4 + sum e_j p_j on X
  {
    IdentityBuilder b(prog, "w_dominates", k);
    std::vector<Polynomial> wimg, vimg;
    for (const auto& e : w_basis) wimg.push_back(Polynomial::monomial(n + 1, e, 1.0));
    for (const auto& e : v_basis)
      vimg.push_back(-Polynomial::monomial(n + 1, e, 1.0).substitute(0, 0.0));
    b.add_decision(w_dec, std::move(wimg));
    b.add_decision(v_dec, std::move(vimg));
    b.add_offset(Polynomial::constant(n + 1, -1.0));
    b.add_multiplier("s4", Polynomial::constant(n + 1, 1.0), x_scope);
    for (const auto& [name, g] : p_gens) b.add_multiplier("e_" + name, g, x_scope);
    b.add_scope(x_scope);
    b.commit();
  }

  set_moment_objective(prog, w_dec, sub.full_box(), 1);
  prog.certificates.push_back({w_dec, sub.id, sub.global_indices});
  prog.certificate_threshold = 1.0;
  return prog;
}

SosProgram build_mpi_program(const Subsystem& sub, double beta, int k) {
  check_even(k);
  if (!(beta > 0.0))
    throw std::invalid_argument("build_mpi_program: discount beta must be positive");
  const int n = sub.dim();
  const int df = std::max(1, sub.f.degree());

  SosProgram prog;
  prog.kind = SetKind::MPI;
  prog.degree = k;
  prog.num_vars = n;
  prog.var_names = sub.var_names;

  std::vector<int> x_scope(static_cast<std::size_t>(n));
  std::iota(x_scope.begin(), x_scope.end(), 0);

  const int v_dec = add_decision(prog, "v", x_scope, k);
  const int w_dec = add_decision(prog, "w", x_scope, k);
  const auto& v_basis = prog.decisions[static_cast<std::size_t>(v_dec)].basis;
  const auto& w_basis = prog.decisions[static_cast<std::size_t>(w_dec)].basis;

  std::vector<std::pair<std::string, Polynomial>> p_gens;
  for (std::size_t j = 0; j < sub.constraint_blocks.size(); ++j)
    for (auto& g : block_generators(sub.constraint_blocks[j], n, 0, "p" + std::to_string(j)))
      p_gens.push_back(std::move(g));

  // flow identity degree: beta v - grad(v).f reaches k + deg(f) - 1
  const int d_flow = even_ceil(k + df - 1);

  {
    IdentityBuilder b(prog, "flow", d_flow);
    std::vector<Polynomial> images;
    images.reserve(v_basis.size());
    for (const auto& e : v_basis) {
      Polynomial m = Polynomial::monomial(n, e, 1.0);
      images.push_back(beta * m - lie_derivative(m, sub.f, false));
    }
    b.add_decision(v_dec, std::move(images));
    b.add_multiplier("s0", Polynomial::constant(n, 1.0), x_scope);
    for (const auto& [name, g] : p_gens) b.add_multiplier("sig_" + name, g, x_scope);
    b.add_scope(x_scope);
    b.commit();
  }
  {
    IdentityBuilder b(prog, "w_nonneg", k);
    std::vector<Polynomial> images;
    for (const auto& e : w_basis) images.push_back(Polynomial::monomial(n, e, 1.0));
    b.add_decision(w_dec, std::move(images));
    b.add_multiplier("s0p", Polynomial::constant(n, 1.0), x_scope);
    for (const auto& [name, g] : p_gens) b.add_multiplier("sigp_" + name, g, x_scope);
    b.add_scope(x_scope);
    b.commit();
  }
  {
    IdentityBuilder b(prog, "w_dominates", k);
    std::vector<Polynomial> wimg, vimg;
    for (const auto& e : w_basis) wimg.push_back(Polynomial::monomial(n, e, 1.0));
    for (const auto& e : v_basis) vimg.push_back(-Polynomial::monomial(n, e, 1.0));
    b.add_decision(w_dec, std::move(wimg));
    b.add_decision(v_dec, std::move(vimg));
    b.add_offset(Polynomial::constant(n, -1.0));
    b.add_multiplier("s0pp", Polynomial::constant(n, 1.0), x_scope);
    for (const auto& [name, g] : p_gens) b.add_multiplier("sigpp_" + name, g, x_scope);
    b.add_scope(x_scope);
    b.commit();
  }

  set_moment_objective(prog, w_dec, sub.full_box(), 0);
  prog.certificates.push_back({w_dec, sub.id, sub.global_indices});
  prog.certificate_threshold = 1.0;
  return prog;
}

SosProgram build_ga_program(const Subsystem& sub, double beta1, double beta2, int k) {
  check_even(k);
  if (!(beta1 > 0.0) || !(beta2 > 0.0))
    throw std::invalid_argument("build_ga_program: discount factors must be positive");
  const int n = sub.dim();
  const int df = std::max(1, sub.f.degree());

  SosProgram prog;
  prog.kind = SetKind::GA;
  prog.degree = k;
  prog.num_vars = n;
  prog.var_names = sub.var_names;

  std::vector<int> x_scope(static_cast<std::size_t>(n));
  std::iota(x_scope.begin(), x_scope.end(), 0);

  const int p_dec = add_decision(prog, "p", x_scope, k);
  const int q_dec = add_decision(prog, "q", x_scope, k);
  const int w_dec = add_decision(prog, "w", x_scope, k);
  const auto& p_basis = prog.decisions[static_cast<std::size_t>(p_dec)].basis;
  const auto& w_basis = prog.decisions[static_cast<std::size_t>(w_dec)].basis;

  std::vector<std::pair<std::string, Polynomial>> gens;
  for (std::size_t j = 0; j < sub.constraint_blocks.size(); ++j)
    for (auto& g : block_generators(sub.constraint_blocks[j], n, 0, "p" + std::to_string(j)))
      gens.push_back(std::move(g));

  const int d_flow = even_ceil(k + df - 1);

  {
    IdentityBuilder b(prog, "p_flow", d_flow);  // beta1 p - grad(p).f >= 0 on X
    std::vector<Polynomial> images;
    for (const auto& e : p_basis) {
      Polynomial m = Polynomial::monomial(n, e, 1.0);
      images.push_back(beta1 * m - lie_derivative(m, sub.f, false));
    }
    b.add_decision(p_dec, std::move(images));
    b.add_multiplier("sp0", Polynomial::constant(n, 1.0), x_scope);
    for (const auto& [name, g] : gens) b.add_multiplier("sp_" + name, g, x_scope);
    b.add_scope(x_scope);
    b.commit();
  }
  {
    IdentityBuilder b(prog, "q_flow", d_flow);  // beta2 q + grad(q).f >= 0 on X
    std::vector<Polynomial> images;
    for (const auto& e : p_basis) {
      Polynomial m = Polynomial::monomial(n, e, 1.0);
      images.push_back(beta2 * m + lie_derivative(m, sub.f, false));
    }
    b.add_decision(q_dec, std::move(images));
    b.add_multiplier("sq0", Polynomial::constant(n, 1.0), x_scope);
    for (const auto& [name, g] : gens) b.add_multiplier("sq_" + name, g, x_scope);
    b.add_scope(x_scope);
    b.commit();
  }
  {
    IdentityBuilder b(prog, "w_nonneg", k);
    std::vector<Polynomial> images;
    for (const auto& e : w_basis) images.push_back(Polynomial::monomial(n, e, 1.0));
    b.add_decision(w_dec, std::move(images));
    b.add_multiplier("sw0", Polynomial::constant(n, 1.0), x_scope);
    for (const auto& [name, g] : gens) b.add_multiplier("sw_" + name, g, x_scope);
    b.add_scope(x_scope);
    b.commit();
  }
  {
    IdentityBuilder b(prog, "w_dominates", k);  // w - p - q - 1 >= 0 on X
    std::vector<Polynomial> wimg, pimg, qimg;
    for (const auto& e : w_basis) wimg.push_back(Polynomial::monomial(n, e, 1.0));
    for (const auto& e : p_basis) pimg.push_back(-Polynomial::monomial(n, e, 1.0));
    for (const auto& e : p_basis) qimg.push_back(-Polynomial::monomial(n, e, 1.0));
    b.add_decision(w_dec, std::move(wimg));
    b.add_decision(p_dec, std::move(pimg));
    b.add_decision(q_dec, std::move(qimg));
    b.add_offset(Polynomial::constant(n, -1.0));
    b.add_multiplier("sd0", Polynomial::constant(n, 1.0), x_scope);
    for (const auto& [name, g] : gens) b.add_multiplier("sd_" + name, g, x_scope);
    b.add_scope(x_scope);
    b.commit();
  }

  set_moment_objective(prog, w_dec, sub.full_box(), 0);
  prog.certificates.push_back({w_dec, sub.id, sub.global_indices});
  prog.certificate_threshold = 1.0;
  return prog;
}

SosProgram build_sparse_roa_program(const SystemDef& sys,
                                    const std::vector<Subsystem>& leaf_subsystems, double T,
                                    int k) {
  check_even(k);
  if (leaf_subsystems.empty())
    throw std::invalid_argument("build_sparse_roa_program: no leaf subsystems");
  if (!sys.target_blocks)
    throw std::invalid_argument("build_sparse_roa_program: system has no target set");
  if (!(T > 0.0)) throw std::invalid_argument("build_sparse_roa_program: horizon must be positive");
  const int df = std::max(1, sys.f.degree());
  if (k < sys.f.degree() + 1)
    throw DegreeError("build_sparse_roa_program: k must be at least deg(f)+1 = " +
                      std::to_string(sys.f.degree() + 1));
  const int n = sys.num_vars();
  const int l = static_cast<int>(leaf_subsystems.size());

  SosProgram prog;
  prog.kind = SetKind::ROA;
  prog.degree = k;
  prog.num_vars = n + 1;  // t then the full state
  prog.has_time = true;
  prog.time_horizon = T;
  prog.var_names.push_back("t");
  for (const auto& s : sys.names_or_default()) prog.var_names.push_back(s);

  // per-leaf ambient scopes
  std::vector<std::vector<int>> x_scopes(static_cast<std::size_t>(l));
  std::vector<std::vector<int>> tx_scopes(static_cast<std::size_t>(l));
  for (int r = 0; r < l; ++r) {
    for (int g : leaf_subsystems[static_cast<std::size_t>(r)].global_indices)
      x_scopes[static_cast<std::size_t>(r)].push_back(g + 1);
    tx_scopes[static_cast<std::size_t>(r)].push_back(0);
    for (int v : x_scopes[static_cast<std::size_t>(r)])
      tx_scopes[static_cast<std::size_t>(r)].push_back(v);
  }

  std::vector<int> v_decs(static_cast<std::size_t>(l)), w_decs(static_cast<std::size_t>(l));
  for (int r = 0; r < l; ++r) {
    v_decs[static_cast<std::size_t>(r)] =
        add_decision(prog, "v" + std::to_string(r), tx_scopes[static_cast<std::size_t>(r)], k + 1 - df);
    w_decs[static_cast<std::size_t>(r)] =
        add_decision(prog, "w" + std::to_string(r), x_scopes[static_cast<std::size_t>(r)], k);
  }

  // per-leaf constraint and target generators, embedded into (t, x)
  std::vector<std::vector<std::pair<std::string, Polynomial>>> p_gens(static_cast<std::size_t>(l)),
      q_gens(static_cast<std::size_t>(l));
  for (int r = 0; r < l; ++r) {
    const auto& sub = leaf_subsystems[static_cast<std::size_t>(r)];
    for (int j : sub.block_ids) {
      for (auto& g :
           block_generators(sys.constraint_blocks[static_cast<std::size_t>(j)], n + 1, 1,
                            "r" + std::to_string(r) + "_p" + std::to_string(j)))
        p_gens[static_cast<std::size_t>(r)].push_back(std::move(g));
      for (auto& g : block_generators((*sys.target_blocks)[static_cast<std::size_t>(j)], n + 1, 1,
                                      "r" + std::to_string(r) + "_q" + std::to_string(j)))
        q_gens[static_cast<std::size_t>(r)].push_back(std::move(g));
    }
  }

  Polynomial t = Polynomial::variable(n + 1, 0);
  Polynomial time_gen = t * (Polynomial::constant(n + 1, T) - t);

  // embedded local field of each leaf: f_{I_r} as polynomials over (t, x)
  auto leaf_liouville_image = [&](int r, const Exponents& e) {
    const auto& sub = leaf_subsystems[static_cast<std::size_t>(r)];
    Polynomial m = Polynomial::monomial(n + 1, e, 1.0);
    Polynomial out = m.partial(0);
    for (std::size_t i = 0; i < sub.global_indices.size(); ++i) {
      const int g = sub.global_indices[i];
      std::vector<int> shift(static_cast<std::size_t>(n), -1);
      for (int v = 0; v < n; ++v) shift[static_cast<std::size_t>(v)] = v + 1;
      out += m.partial(g + 1) * sys.f[static_cast<std::size_t>(g)].remap(n + 1, shift);
    }
    return out;
  };

  // identity 1: -sum_r L_r v^r = sum_r [s1^r + sum a p + b^r t(T-t)]
  {
    IdentityBuilder b(prog, "liouville", k);
    for (int r = 0; r < l; ++r) {
      const auto& basis = prog.decisions[static_cast<std::size_t>(v_decs[static_cast<std::size_t>(r)])].basis;
      std::vector<Polynomial> images;
      images.reserve(basis.size());
      for (const auto& e : basis) images.push_back(-leaf_liouville_image(r, e));
      b.add_decision(v_decs[static_cast<std::size_t>(r)], std::move(images));
      b.add_multiplier("s1_r" + std::to_string(r), Polynomial::constant(n + 1, 1.0),
                       tx_scopes[static_cast<std::size_t>(r)]);
      for (const auto& [name, g] : p_gens[static_cast<std::size_t>(r)])
        b.add_multiplier("a_" + name, g, tx_scopes[static_cast<std::size_t>(r)]);
      b.add_multiplier("b_time_r" + std::to_string(r), time_gen,
                       tx_scopes[static_cast<std::size_t>(r)]);
      b.add_scope(tx_scopes[static_cast<std::size_t>(r)]);
    }
    b.commit();
  }
  // identity 2: sum_r v^r(T,.) = sum_r [s2^r + sum c q]
  {
    IdentityBuilder b(prog, "terminal", k);
    for (int r = 0; r < l; ++r) {
      const auto& basis = prog.decisions[static_cast<std::size_t>(v_decs[static_cast<std::size_t>(r)])].basis;
      std::vector<Polynomial> images;
      for (const auto& e : basis)
        images.push_back(Polynomial::monomial(n + 1, e, 1.0).substitute(0, T));
      b.add_decision(v_decs[static_cast<std::size_t>(r)], std::move(images));
      b.add_multiplier("s2_r" + std::to_string(r), Polynomial::constant(n + 1, 1.0),
                       x_scopes[static_cast<std::size_t>(r)]);
      for (const auto& [name, g] : q_gens[static_cast<std::size_t>(r)])
        b.add_multiplier("c_" + name, g, x_scopes[static_cast<std::size_t>(r)]);
      b.add_scope(x_scopes[static_cast<std::size_t>(r)]);
    }
    b.commit();
  }
  // identity 3: sum_r w^r = sum_r [s3^r + sum d p]
  {
    IdentityBuilder b(prog, "w_nonneg", k);
    for (int r = 0; r < l; ++r) {
      const auto& basis = prog.decisions[static_cast<std::size_t>(w_decs[static_cast<std::size_t>(r)])].basis;
      std::vector<Polynomial> images;
      for (const auto& e : basis) images.push_back(Polynomial::monomial(n + 1, e, 1.0));
      b.add_decision(w_decs[static_cast<std::size_t>(r)], std::move(images));
      b.add_multiplier("s3_r" + std::to_string(r), Polynomial::constant(n + 1, 1.0),
                       x_scopes[static_cast<std::size_t>(r)]);
      for (const auto& [name, g] : p_gens[static_cast<std::size_t>(r)])
        b.add_multiplier("d_" + name, g, x_scopes[static_cast<std::size_t>(r)]);
      b.add_scope(x_scopes[static_cast<std::size_t>(r)]);
    }
    b.commit();
  }
  // identity 4: sum_r [w^r - v^r(0,.)] - l = sum_r [s4^r + sum e p]
  {
    IdentityBuilder b(prog, "w_dominates", k);
    for (int r = 0; r < l; ++r) {
      const auto& wbasis = prog.decisions[static_cast<std::size_t>(w_decs[static_cast<std::size_t>(r)])].basis;
      const auto& vbasis = prog.decisions[static_cast<std::size_t>(v_decs[static_cast<std::size_t>(r)])].basis;
      std::vector<Polynomial> wimg, vimg;
      for (const auto& e : wbasis) wimg.push_back(Polynomial::monomial(n + 1, e, 1.0));
      for (const auto& e : vbasis)
        vimg.push_back(-Polynomial::monomial(n + 1, e, 1.0).substitute(0, 0.0));
      b.add_decision(w_decs[static_cast<std::size_t>(r)], std::move(wimg));
      b.add_decision(v_decs[static_cast<std::size_t>(r)], std::move(vimg));
      b.add_multiplier("s4_r" + std::to_string(r), Polynomial::constant(n + 1, 1.0),
                       x_scopes[static_cast<std::size_t>(r)]);
      for (const auto& [name, g] : p_gens[static_cast<std::size_t>(r)])
        b.add_multiplier("e_" + name, g, x_scopes[static_cast<std::size_t>(r)]);
      b.add_scope(x_scopes[static_cast<std::size_t>(r)]);
    }
    b.add_offset(Polynomial::constant(n + 1, -static_cast<double>(l)));
    b.commit();
  }

  // objective: sum_r <w^r, lambda_{I_r}>
  prog.objective.assign(static_cast<std::size_t>(prog.num_free()), 0.0);
  for (int r = 0; r < l; ++r) {
    const auto& sub = leaf_subsystems[static_cast<std::size_t>(r)];
    const auto box = sub.full_box();
    const int dec = w_decs[static_cast<std::size_t>(r)];
    const auto& basis = prog.decisions[static_cast<std::size_t>(dec)].basis;
    const int off = prog.decision_offset(dec);
    for (std::size_t i = 0; i < basis.size(); ++i) {
      Exponents local(box.size());
      for (std::size_t j = 0; j < sub.global_indices.size(); ++j)
        local[j] = basis[i][static_cast<std::size_t>(sub.global_indices[j] + 1)];
      prog.objective[static_cast<std::size_t>(off) + i] = box_moment(box, local);
    }
    prog.certificates.push_back({dec, sub.id, sub.global_indices});
  }
  prog.certificate_threshold = static_cast<double>(l);
  return prog;
}

std::string SosProgram::debug_dump_json() const {
  std::ostringstream os;
  os << "{\n  \"num_vars\": " << num_vars << ",\n  \"has_time\": " << (has_time ? "true" : "false")
     << ",\n  \"kind\": \"" << sparseinv::to_string(kind) << "\",\n  \"degree\": " << degree
     << ",\n  \"decisions\": [";
  for (std::size_t i = 0; i < decisions.size(); ++i) {
    os << (i ? ", " : "") << "{\"name\": \"" << decisions[i].name
       << "\", \"max_degree\": " << decisions[i].max_degree
       << ", \"basis_size\": " << decisions[i].basis.size() << "}";
  }
  os << "],\n  \"identities\": [";
  for (std::size_t i = 0; i < identities.size(); ++i) {
    const auto& id = identities[i];
    os << (i ? ", " : "") << "\n    {\"name\": \"" << id.name
       << "\", \"matching_degree\": " << id.matching_degree << ", \"multipliers\": [";
    for (std::size_t j = 0; j < id.multipliers.size(); ++j) {
      const auto& m = multipliers[static_cast<std::size_t>(id.multipliers[j])];
      os << (j ? ", " : "") << "{\"name\": \"" << m.name
         << "\", \"generator_degree\": " << m.generator.degree()
         << ", \"gram_size\": " << m.gram_basis.size() << ", \"scope_size\": " << m.scope.size()
         << "}";
    }
    os << "]}";
  }
  os << "\n  ]\n}\n";
  return os.str();
}

}  // namespace sparseinv
