#include "sparseinv/decompose.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <set>
#include <thread>

#include "sparseinv/sdp.hpp"
#include "sparseinv/sos.hpp"

namespace sparseinv {

Decomposition decouple(const SystemDef& sys) {
  sys.validate();
  std::vector<std::string> diags;
  if (!validate_product_constraints(sys, &diags)) {
    std::string msg = "decouple: constraint set is not in product form:";
    for (const auto& d : diags) msg += "\n  " + d;
    throw ProductFormError(msg);
  }
  Decomposition dec;
  dec.raw_graph = build_graph(sys);
  dec.condensed = condense(dec.raw_graph);
  dec.leaf_nodes = leafs(dec.condensed);
  dec.omega = omega(dec.condensed);
  for (std::size_t r = 0; r < dec.leaf_nodes.size(); ++r) {
    const auto nodes = past(dec.condensed, dec.leaf_nodes[r]);
    const auto raw = dec.condensed.raw_variables(sys.partition, nodes);
    Subsystem sub = project_subsystem(sys, raw);
    sub.id = static_cast<int>(r);
    dec.subsystems.push_back(std::move(sub));
  }
  return dec;
}

GluedSet::GluedSet(SetKind kind, std::vector<OuterApprox> parts,
                   std::vector<SemialgebraicBlock> ambient_blocks)
    : kind_(kind), parts_(std::move(parts)), ambient_(std::move(ambient_blocks)) {
  num_vars_ = 0;
  for (const auto& a : parts_)
    for (int v : a.vars) num_vars_ = std::max(num_vars_, v + 1);
}

bool GluedSet::member(std::span<const double> x, double w_tol) const {
  if (static_cast<int>(x.size()) < num_vars_)
    throw std::invalid_argument("GluedSet::member: point dimension mismatch");
  if (!ambient_.inside(x)) return false;
  for (const auto& a : parts_)
    if (!a.member_raw(x, w_tol)) return false;
  return true;
}

GluedSet glue(const std::vector<OuterApprox>& approxs, const SystemDef& sys,
              const Decomposition& dec) {
  if (approxs.size() != dec.subsystems.size())
    throw std::invalid_argument("glue: expected one certificate per leaf subsystem (" +
                                std::to_string(dec.subsystems.size()) + "), got " +
                                std::to_string(approxs.size()));
  std::vector<char> covered(dec.subsystems.size(), 0);
  SetKind kind = approxs.empty() ? SetKind::MPI : approxs.front().kind;
  for (const auto& a : approxs) {
    if (a.kind != kind)
      throw std::invalid_argument("glue: mixed certificate kinds (" + to_string(kind) + " vs " +
                                  to_string(a.kind) + ")");
    bool matched = false;
    for (std::size_t r = 0; r < dec.subsystems.size(); ++r) {
      if (dec.subsystems[r].global_indices == a.vars) {
        if (covered[r]) throw std::invalid_argument("glue: duplicate certificate for a leaf");
        covered[r] = 1;
        matched = true;
        break;
      }
    }
    if (!matched)
      throw std::invalid_argument("glue: certificate does not correspond to any leaf subsystem");
  }
  for (std::size_t r = 0; r < covered.size(); ++r)
    if (!covered[r])
      throw std::invalid_argument("glue: missing certificate for leaf subsystem " +
                                  std::to_string(r));
  return GluedSet(kind, approxs, sys.constraint_blocks);
}

bool membership(const GluedSet& g, std::span<const double> x, double w_tol) {
  return g.member(x, w_tol);
}

double error_bound(const std::vector<double>& per_sub_errors, const SystemDef& sys,
                   const Decomposition& dec) {
  if (per_sub_errors.size() != dec.subsystems.size())
    throw std::invalid_argument("error_bound: need one error per leaf subsystem");
  for (double e : per_sub_errors)
    if (e < 0.0) throw std::invalid_argument("error_bound: negative per-subsystem error");

  double total = 0.0;
  for (std::size_t r = 0; r < dec.subsystems.size(); ++r) {
    std::set<int> inside(dec.subsystems[r].block_ids.begin(), dec.subsystems[r].block_ids.end());
    double complement_volume = 1.0;  // empty product convention
    for (int j = 0; j < sys.partition.num_blocks(); ++j) {
      if (inside.count(j)) continue;
      const auto& blk = sys.constraint_blocks[static_cast<std::size_t>(j)];
      if (!blk.box)
        throw std::runtime_error(
            "error_bound: block " + std::to_string(j) +
            " has no interval bounds; the complement volume is unavailable");
      for (const auto& iv : *blk.box) complement_volume *= iv.length();
    }
    total += per_sub_errors[r] * complement_volume;
  }
  return total;
}

SparseImprovementSet::SparseImprovementSet(SetKind kind, int degree, std::vector<OuterApprox> parts,
                                           double threshold,
                                           std::vector<SemialgebraicBlock> ambient_blocks)
    : kind_(kind),
      degree_(degree),
      parts_(std::move(parts)),
      threshold_(threshold),
      ambient_(std::move(ambient_blocks)) {
  num_vars_ = 0;
  for (const auto& a : parts_)
    for (int v : a.vars) num_vars_ = std::max(num_vars_, v + 1);
}

bool SparseImprovementSet::member(std::span<const double> x, double w_tol) const {
  if (static_cast<int>(x.size()) < num_vars_)
    throw std::invalid_argument("SparseImprovementSet::member: point dimension mismatch");
  if (!ambient_.inside(x)) return false;
  double sum = 0.0;
  for (const auto& a : parts_) sum += a.value(x);
  return sum >= threshold_ - w_tol;
}

IntersectedSet::IntersectedSet(GluedSet glued, SparseImprovementSet improvement)
    : glued_(std::move(glued)), improvement_(std::move(improvement)) {
  if (glued_.kind() != improvement_.kind())
    throw std::invalid_argument("intersect: kind mismatch (" + to_string(glued_.kind()) + " vs " +
                                to_string(improvement_.kind()) + ")");
  int gdeg = glued_.parts().empty() ? 0 : glued_.parts().front().degree;
  if (gdeg != 0 && improvement_.degree() != 0 && gdeg != improvement_.degree())
    throw std::invalid_argument("intersect: degree mismatch (" + std::to_string(gdeg) + " vs " +
                                std::to_string(improvement_.degree()) + ")");
}

bool IntersectedSet::member(std::span<const double> x, double w_tol) const {
  return glued_.member(x, w_tol) && improvement_.member(x, w_tol);
}

IntersectedSet intersect_with_sparse_improvement(const GluedSet& g,
                                                 const SparseImprovementSet& y) {
  return IntersectedSet(g, y);
}

namespace {

int resolve_degree(const PipelineOptions& opts, int subsystem_id) {
  for (const auto& [id, k] : opts.degree_overrides)
    if (id == subsystem_id) return k;
  return opts.degree;
}

}  // namespace

PipelineResult solve_all_subsystems(const SystemDef& sys, const Decomposition& dec,
                                    const PipelineOptions& opts) {
  PipelineResult result;
  result.certificates.resize(dec.subsystems.size());
  std::vector<std::string> msgs(dec.subsystems.size());
  std::atomic<bool> any_fallback{false};

  auto solve_one = [&](std::size_t r) {
    const Subsystem& sub = dec.subsystems[r];
    const int k = resolve_degree(opts, sub.id);
    try {
      SosProgram prog;
      switch (opts.kind) {
        case SetKind::ROA:
          prog = build_roa_program(sub, sys.horizon, k);
          break;
        case SetKind::MPI:
          prog = build_mpi_program(sub, opts.beta, k);
          break;
        case SetKind::GA:
          prog = build_ga_program(sub, opts.beta1, opts.beta2, k);
          break;
        case SetKind::WA:
          // no WA relaxation exists; certificates come from the MPI program and
          // are validated only against the trajectory oracle
          prog = build_mpi_program(sub, opts.beta, k);
          prog.kind = SetKind::WA;
          break;
      }
      SolverOptions sopts;
      sopts.tol = opts.solver_tol;
      SdpProblem sdp = to_standard_form(prog);
      SdpSolution sol = solve(sdp, sopts);
      CertificateBundle bundle = extract_certificate(prog, sdp, sol);
      result.certificates[r] = std::move(bundle.certs.front());
      result.certificates[r].subsystem_id = sub.id;
      msgs[r] = "subsystem " + std::to_string(sub.id) + ": " +
                result.certificates[r].diag.status + ", objective " +
                format_double(result.certificates[r].objective);
    } catch (const std::exception& ex) {
      // degrade gracefully: the trivial whole-box certificate keeps the glued
      // conjunction a valid outer approximation
      OuterApprox fallback =
          OuterApprox::constant(sub.id, sub.global_indices, 2.0, opts.kind);
      fallback.degree = k;
      fallback.diag.status = "fallback";
      result.certificates[r] = std::move(fallback);
      msgs[r] = "subsystem " + std::to_string(sub.id) + ": solve failed (" + ex.what() +
                "); using trivial certificate";
      any_fallback = true;
    }
  };

  int threads = opts.max_threads;
  if (threads <= 0) {
    if (const char* env = std::getenv("SPARSE_INV_THREADS"))
      threads = std::max(1, std::atoi(env));
    else
      threads = static_cast<int>(std::thread::hardware_concurrency());
  }
  threads = std::max(1, std::min<int>(threads, static_cast<int>(dec.subsystems.size())));

  if (threads == 1 || dec.subsystems.size() <= 1) {
    for (std::size_t r = 0; r < dec.subsystems.size(); ++r) solve_one(r);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&]() {
        while (true) {
          const std::size_t r = next.fetch_add(1);
          if (r >= dec.subsystems.size()) return;
          solve_one(r);
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  result.any_fallback = any_fallback.load();
  result.messages = std::move(msgs);
  return result;
}

}  // namespace sparseinv
