#include "sparseinv/sdp.hpp"
#include <cstdio>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace sparseinv {

std::string to_string(SdpSolution::Status s) {
  switch (s) {
    case SdpSolution::Status::optimal: return "optimal";
    case SdpSolution::Status::near_optimal: return "near-optimal";
    case SdpSolution::Status::infeasible: return "infeasible";
    case SdpSolution::Status::failed: return "failed";
  }
  return "?";
}

void SdpProblem::validate() const {
  for (int d : block_dims)
    if (d <= 0) throw std::invalid_argument("SdpProblem: nonpositive block dimension");
  if (rows_psd.size() != rhs.size() || rows_free.size() != rhs.size())
    throw std::invalid_argument("SdpProblem: row count mismatch");
  auto check_entry = [&](const Entry& e) {
    if (e.block < 0 || e.block >= static_cast<int>(block_dims.size()))
      throw std::invalid_argument("SdpProblem: entry block out of range");
    const int d = block_dims[static_cast<std::size_t>(e.block)];
    if (e.row < 0 || e.col < e.row || e.col >= d)
      throw std::invalid_argument("SdpProblem: entry indices out of range (need row <= col)");
  };
  for (const auto& row : rows_psd)
    for (const auto& e : row) check_entry(e);
  for (const auto& e : obj_psd) check_entry(e);
  for (const auto& row : rows_free)
    for (const auto& [f, v] : row)
      if (f < 0 || f >= num_free)
        throw std::invalid_argument("SdpProblem: free-variable index out of range");
}

SdpProblem to_standard_form(const SosProgram& program) {
  SdpProblem p;
  for (const auto& m : program.multipliers)
    p.block_dims.push_back(static_cast<int>(m.gram_basis.size()));
  p.num_free = program.num_free();
  p.obj_free = program.objective;
  if (p.obj_free.empty()) p.obj_free.assign(static_cast<std::size_t>(p.num_free), 0.0);

  for (const auto& ident : program.identities) {
    // deterministic matching row order: union of per-scope bases, grlex sorted
    std::vector<Exponents> rows;
    {
      std::unordered_set<Exponents, ExponentsHash> seen;
      for (const auto& scope : ident.scopes)
        for (auto& e : monomial_basis(program.num_vars, scope, ident.matching_degree))
          if (seen.insert(e).second) rows.push_back(e);
      std::sort(rows.begin(), rows.end(), grlex_less);
    }
    std::unordered_map<Exponents, int, ExponentsHash> row_of;
    const int base = p.num_constraints();
    for (std::size_t i = 0; i < rows.size(); ++i)
      row_of.emplace(rows[i], base + static_cast<int>(i));
    p.rhs.resize(p.rhs.size() + rows.size(), 0.0);
    p.rows_psd.resize(p.rhs.size());
    p.rows_free.resize(p.rhs.size());

    auto locate = [&](const Exponents& e) {
      auto it = row_of.find(e);
      if (it == row_of.end())
        throw std::logic_error("to_standard_form: identity '" + ident.name +
                               "' produced a monomial outside its matching space");
      return it->second;
    };

    for (const auto& [e, c] : ident.offset.sorted_terms()) p.rhs[static_cast<std::size_t>(locate(e))] = -c;

    for (const auto& term : ident.terms) {
      const int off = program.decision_offset(term.decision);
      for (std::size_t i = 0; i < term.images.size(); ++i)
        for (const auto& [e, c] : term.images[i].sorted_terms())
          p.rows_free[static_cast<std::size_t>(locate(e))].push_back(
              {off + static_cast<int>(i), c});
    }

    for (int mult_idx : ident.multipliers) {
      const auto& mult = program.multipliers[static_cast<std::size_t>(mult_idx)];
      const auto gen_terms = mult.generator.sorted_terms();
      const int s = static_cast<int>(mult.gram_basis.size());
      for (int a = 0; a < s; ++a) {
        for (int b = a; b < s; ++b) {
          Exponents prod = mult.gram_basis[static_cast<std::size_t>(a)];
          for (std::size_t q = 0; q < prod.size(); ++q)
            prod[q] += mult.gram_basis[static_cast<std::size_t>(b)][q];
          for (const auto& [ge, gc] : gen_terms) {
            Exponents e = prod;
            for (std::size_t q = 0; q < e.size(); ++q) e[q] += ge[q];
            p.rows_psd[static_cast<std::size_t>(locate(e))].push_back(
                {mult_idx, a, b, -gc});
          }
        }
      }
    }
  }
  p.validate();
  return p;
}

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// <A_i, X> with the symmetric entry convention (off-diagonals counted twice)
double dot_row(const std::vector<SdpProblem::Entry>& row, const std::vector<MatrixXd>& X) {
  double acc = 0.0;
  for (const auto& e : row) {
    const double x = X[static_cast<std::size_t>(e.block)](e.row, e.col);
    acc += (e.row == e.col) ? e.value * x : 2.0 * e.value * x;
  }
  return acc;
}

void add_adjoint(const std::vector<SdpProblem::Entry>& row, double scale,
                 std::vector<MatrixXd>& out) {
  for (const auto& e : row) {
    out[static_cast<std::size_t>(e.block)](e.row, e.col) += scale * e.value;
    if (e.row != e.col) out[static_cast<std::size_t>(e.block)](e.col, e.row) += scale * e.value;
  }
}

struct Presolved {
  SdpProblem reduced;
  std::vector<int> kept;  // reduced row -> original row
  bool infeasible = false;
};

// Order-preserving greedy selection of independent rows via a growing Cholesky
// of the row Gram matrix. SOS coefficient matching produces exactly dependent
// rows; anything below presolve_tol (relative) is treated as dependent, and a
// dropped row with inconsistent right-hand side flags the problem infeasible.
Presolved presolve_rows(const SdpProblem& p, double tol) {
  const int m = p.num_constraints();
  Presolved out;
  if (m == 0) {
    out.reduced = p;
    return out;
  }
  out.kept.reserve(static_cast<std::size_t>(m));

  // Gram of the full constraint rows (PSD parts with sqrt(2) off-diagonal
  // scaling so inner products match, plus free columns).
  MatrixXd gram = MatrixXd::Zero(m, m);
  {
    struct Coord {
      std::vector<std::pair<int, double>> users;
    };
    std::unordered_map<long long, Coord> coords;
    auto key_psd = [&](int blk, int r, int c) {
      return ((static_cast<long long>(blk) * 100000 + r) * 100000 + c);
    };
    for (int i = 0; i < m; ++i) {
      for (const auto& e : p.rows_psd[static_cast<std::size_t>(i)]) {
        const double w = (e.row == e.col) ? e.value : std::sqrt(2.0) * e.value;
        coords[key_psd(e.block, e.row, e.col)].users.push_back({i, w});
      }
      for (const auto& [f, v] : p.rows_free[static_cast<std::size_t>(i)])
        coords[-(static_cast<long long>(f) + 1)].users.push_back({i, v});
    }
    for (const auto& [key, coord] : coords)
      for (const auto& [i, vi] : coord.users)
        for (const auto& [j, vj] : coord.users)
          if (j >= i) gram(i, j) += vi * vj;
    gram = gram.selfadjointView<Eigen::Upper>();
  }

  const double gmax = std::max(gram.diagonal().maxCoeff(), 1e-300);
  const double piv_tol = tol * tol * gmax;
  double rhs_scale = 1.0;
  for (double b : p.rhs) rhs_scale = std::max(rhs_scale, std::abs(b));

  MatrixXd L = MatrixXd::Zero(m, m);  // rows of the growing Cholesky factor
  int nk = 0;
  for (int i = 0; i < m; ++i) {
    VectorXd g(nk);
    for (int t = 0; t < nk; ++t) g(t) = gram(out.kept[static_cast<std::size_t>(t)], i);
    VectorXd z(nk);
    for (int t = 0; t < nk; ++t) {
      double acc = g(t);
      for (int u = 0; u < t; ++u) acc -= L(t, u) * z(u);
      z(t) = acc / L(t, t);
    }
    const double d = gram(i, i) - z.squaredNorm();
    if (d > piv_tol) {
      for (int t = 0; t < nk; ++t) L(nk, t) = z(t);
      L(nk, nk) = std::sqrt(std::max(d, 1e-300));
      out.kept.push_back(i);
      ++nk;
    } else {
      // dependent: i-th row = alpha . kept rows with L^T alpha = z
      VectorXd alpha(nk);
      for (int t = nk - 1; t >= 0; --t) {
        double acc = z(t);
        for (int u = t + 1; u < nk; ++u) acc -= L(u, t) * alpha(u);
        alpha(t) = acc / L(t, t);
      }
      double predicted = 0.0;
      for (int t = 0; t < nk; ++t)
        predicted += alpha(t) * p.rhs[static_cast<std::size_t>(out.kept[static_cast<std::size_t>(t)])];
      if (std::abs(p.rhs[static_cast<std::size_t>(i)] - predicted) > 1e-8 * rhs_scale) {
        out.infeasible = true;
        return out;
      }
    }
  }

  if (nk == m) {
    out.reduced = p;
    return out;
  }
  out.reduced.block_dims = p.block_dims;
  out.reduced.num_free = p.num_free;
  out.reduced.obj_psd = p.obj_psd;
  out.reduced.obj_free = p.obj_free;
  for (int r : out.kept) {
    out.reduced.rows_psd.push_back(p.rows_psd[static_cast<std::size_t>(r)]);
    out.reduced.rows_free.push_back(p.rows_free[static_cast<std::size_t>(r)]);
    out.reduced.rhs.push_back(p.rhs[static_cast<std::size_t>(r)]);
  }
  return out;
}

struct BlockIndex {
  // constraints touching each block, with densified entry lists
  std::vector<std::vector<int>> rows_of_block;
};

double sym_step_to_boundary(const MatrixXd& M, const MatrixXd& dM) {
  // largest alpha with M + alpha dM >= 0, via lambda_min of L^-1 dM L^-T
  Eigen::LLT<MatrixXd> llt(M);
  MatrixXd A = llt.matrixL().solve(dM);
  A = llt.matrixL().solve(A.transpose()).transpose();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (A + A.transpose()),
                                             Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues().minCoeff();
  if (lmin >= -1e-14) return 1.0;
  return std::min(1.0, -1.0 / lmin);
}

}  // namespace

SdpSolution solve(const SdpProblem& input, const SolverOptions& opts) {
  if (!(opts.tol > 0.0)) throw std::invalid_argument("solve: tolerance must be positive");
  input.validate();

  SdpSolution sol;
  Presolved pre;
  if (opts.presolve) {
    pre = presolve_rows(input, opts.presolve_tol);
    if (pre.infeasible) {
      sol.status = SdpSolution::Status::infeasible;
      sol.dual.assign(static_cast<std::size_t>(input.num_constraints()), 0.0);
      return sol;
    }
  } else {
    pre.reduced = input;
    pre.kept.resize(static_cast<std::size_t>(input.num_constraints()));
    for (int i = 0; i < input.num_constraints(); ++i) pre.kept[static_cast<std::size_t>(i)] = i;
  }
  const SdpProblem& p = pre.reduced;

  const int m = p.num_constraints();
  const int B = static_cast<int>(p.block_dims.size());
  const int F = p.num_free;
  int sumdim = 0;
  for (int d : p.block_dims) sumdim += d;

  // objective data
  std::vector<MatrixXd> C(static_cast<std::size_t>(B));
  for (int b = 0; b < B; ++b)
    C[static_cast<std::size_t>(b)] =
        MatrixXd::Zero(p.block_dims[static_cast<std::size_t>(b)], p.block_dims[static_cast<std::size_t>(b)]);
  add_adjoint(p.obj_psd, 1.0, C);
  VectorXd g = Eigen::Map<const VectorXd>(p.obj_free.data(), F);
  VectorXd rhs = Eigen::Map<const VectorXd>(p.rhs.data(), m);

  // trivial problems
  if (m == 0 && B == 0) {
    sol.y.assign(static_cast<std::size_t>(F), 0.0);
    sol.dual.assign(static_cast<std::size_t>(input.num_constraints()), 0.0);
    sol.status = SdpSolution::Status::optimal;
    return sol;
  }

  BlockIndex bi;
  bi.rows_of_block.resize(static_cast<std::size_t>(B));
  for (int i = 0; i < m; ++i) {
    std::unordered_set<int> touched;
    for (const auto& e : p.rows_psd[static_cast<std::size_t>(i)]) touched.insert(e.block);
    for (int b : touched) bi.rows_of_block[static_cast<std::size_t>(b)].push_back(i);
  }
  // per (row, block) entry slices for the Schur loop
  std::vector<std::vector<std::vector<SdpProblem::Entry>>> entries_by_block(
      static_cast<std::size_t>(B));
  for (int b = 0; b < B; ++b)
    entries_by_block[static_cast<std::size_t>(b)].resize(
        bi.rows_of_block[static_cast<std::size_t>(b)].size());
  {
    std::vector<std::unordered_map<int, int>> pos(static_cast<std::size_t>(B));
    for (int b = 0; b < B; ++b)
      for (std::size_t t = 0; t < bi.rows_of_block[static_cast<std::size_t>(b)].size(); ++t)
        pos[static_cast<std::size_t>(b)][bi.rows_of_block[static_cast<std::size_t>(b)][t]] =
            static_cast<int>(t);
    for (int i = 0; i < m; ++i)
      for (const auto& e : p.rows_psd[static_cast<std::size_t>(i)])
        entries_by_block[static_cast<std::size_t>(e.block)][static_cast<std::size_t>(
                             pos[static_cast<std::size_t>(e.block)][i])]
            .push_back(e);
  }

  MatrixXd G = MatrixXd::Zero(m, F);
  for (int i = 0; i < m; ++i)
    for (const auto& [f, v] : p.rows_free[static_cast<std::size_t>(i)]) G(i, f) += v;

  // starting point: identity-scaled blocks sized from the problem data
  double bscale = 1.0, cscale = 1.0;
  for (int i = 0; i < m; ++i) bscale = std::max(bscale, std::abs(rhs(i)));
  for (int b = 0; b < B; ++b)
    cscale = std::max(cscale, C[static_cast<std::size_t>(b)].cwiseAbs().maxCoeff());
  for (int f = 0; f < F; ++f) cscale = std::max(cscale, std::abs(g(f)));
  const double xi = std::max(10.0, bscale);
  const double eta = std::max(10.0, cscale);

  std::vector<MatrixXd> X(static_cast<std::size_t>(B)), S(static_cast<std::size_t>(B));
  for (int b = 0; b < B; ++b) {
    const int d = p.block_dims[static_cast<std::size_t>(b)];
    X[static_cast<std::size_t>(b)] = xi * MatrixXd::Identity(d, d);
    S[static_cast<std::size_t>(b)] = eta * MatrixXd::Identity(d, d);
  }
  VectorXd y = VectorXd::Zero(F);
  VectorXd nu = VectorXd::Zero(m);

  std::vector<MatrixXd> W(static_cast<std::size_t>(B)), Fm(static_cast<std::size_t>(B)),
      Finv(static_cast<std::size_t>(B));
  std::vector<VectorXd> dvec(static_cast<std::size_t>(B));

  auto apply_A = [&](const std::vector<MatrixXd>& M) {
    VectorXd out(m);
    for (int i = 0; i < m; ++i) out(i) = dot_row(p.rows_psd[static_cast<std::size_t>(i)], M);
    return out;
  };
  auto adjoint = [&](const VectorXd& v) {
    std::vector<MatrixXd> out(static_cast<std::size_t>(B));
    for (int b = 0; b < B; ++b)
      out[static_cast<std::size_t>(b)] = MatrixXd::Zero(p.block_dims[static_cast<std::size_t>(b)],
                                                        p.block_dims[static_cast<std::size_t>(b)]);
    for (int i = 0; i < m; ++i)
      if (v(i) != 0.0) add_adjoint(p.rows_psd[static_cast<std::size_t>(i)], v(i), out);
    return out;
  };

  int stall = 0;
  double mu = 0.0;
  for (int iter = 0; iter <= opts.max_iterations; ++iter) {
    // residuals
    VectorXd rp = rhs - apply_A(X) - G * y;
    std::vector<MatrixXd> Rd = adjoint(nu);
    double dual_res2 = 0.0;
    for (int b = 0; b < B; ++b) {
      Rd[static_cast<std::size_t>(b)] =
          C[static_cast<std::size_t>(b)] - Rd[static_cast<std::size_t>(b)] - S[static_cast<std::size_t>(b)];
      dual_res2 += Rd[static_cast<std::size_t>(b)].squaredNorm();
    }
    VectorXd rg = g - G.transpose() * nu;
    dual_res2 += rg.squaredNorm();

    double xs = 0.0;
    for (int b = 0; b < B; ++b)
      xs += (X[static_cast<std::size_t>(b)] * S[static_cast<std::size_t>(b)]).trace();
    mu = (sumdim > 0) ? xs / sumdim : 0.0;

    double pobj = g.dot(y);
    for (int b = 0; b < B; ++b)
      pobj += (C[static_cast<std::size_t>(b)] * X[static_cast<std::size_t>(b)]).trace();
    const double dobj = rhs.dot(nu);

    sol.primal_obj = pobj;
    sol.dual_obj = dobj;
    sol.gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
    sol.primal_infeas = rp.norm() / (1.0 + rhs.norm());
    sol.dual_infeas = std::sqrt(dual_res2) / (1.0 + cscale);
    sol.iterations = iter;

    if (opts.trace)
      std::fprintf(stderr, "ipm %3d: pobj=% .8e dobj=% .8e gap=%.2e pinf=%.2e dinf=%.2e mu=%.2e\n",
                   iter, pobj, dobj, sol.gap, sol.primal_infeas, sol.dual_infeas, mu);

    if (sol.gap <= opts.tol && sol.primal_infeas <= opts.tol && sol.dual_infeas <= opts.tol) {
      sol.status = SdpSolution::Status::optimal;
      break;
    }
    // primal infeasibility: the dual iterate acts as a Farkas certificate
    if (dobj > 1e8 * bscale && std::sqrt(dual_res2) <= 1e-6 * dobj) {
      sol.status = SdpSolution::Status::infeasible;
      break;
    }
    if (iter == opts.max_iterations || stall >= 5) {
      sol.status = (sol.gap <= 1e3 * opts.tol && sol.primal_infeas <= 1e3 * opts.tol &&
                    sol.dual_infeas <= 1e3 * opts.tol)
                       ? SdpSolution::Status::near_optimal
                       : SdpSolution::Status::failed;
      break;
    }

    // Nesterov-Todd scaling point per block
    bool scaling_ok = true;
    for (int b = 0; b < B; ++b) {
      Eigen::LLT<MatrixXd> lx(X[static_cast<std::size_t>(b)]);
      Eigen::LLT<MatrixXd> ls(S[static_cast<std::size_t>(b)]);
      if (lx.info() != Eigen::Success || ls.info() != Eigen::Success) {
        scaling_ok = false;
        break;
      }
      MatrixXd Lx = lx.matrixL();
      MatrixXd Ls = ls.matrixL();
      Eigen::JacobiSVD<MatrixXd> svd(Ls.transpose() * Lx,
                                     Eigen::ComputeThinU | Eigen::ComputeThinV);
      VectorXd d = svd.singularValues();
      dvec[static_cast<std::size_t>(b)] = d;
      const VectorXd dinv_sqrt = d.cwiseSqrt().cwiseInverse();
      Fm[static_cast<std::size_t>(b)] = Lx * svd.matrixV() * dinv_sqrt.asDiagonal();
      // F^-1 = D^{1/2} V^T Lx^{-1}
      MatrixXd Lxinv = Lx.triangularView<Eigen::Lower>().solve(
          MatrixXd::Identity(d.size(), d.size()));
      Finv[static_cast<std::size_t>(b)] =
          d.cwiseSqrt().asDiagonal() * svd.matrixV().transpose() * Lxinv;
      W[static_cast<std::size_t>(b)] =
          Fm[static_cast<std::size_t>(b)] * Fm[static_cast<std::size_t>(b)].transpose();
    }
    if (!scaling_ok) {
      // an iterate grazed the cone boundary; classify by where we stopped
      sol.status = (sol.gap <= 1e3 * opts.tol && sol.primal_infeas <= 1e3 * opts.tol &&
                    sol.dual_infeas <= 1e3 * opts.tol)
                       ? SdpSolution::Status::near_optimal
                       : SdpSolution::Status::failed;
      break;
    }

    // Schur complement H = A (W x W) A^T
    MatrixXd H = MatrixXd::Zero(m, m);
    for (int b = 0; b < B; ++b) {
      const auto& rows = bi.rows_of_block[static_cast<std::size_t>(b)];
      const auto& ents = entries_by_block[static_cast<std::size_t>(b)];
      const MatrixXd& Wb = W[static_cast<std::size_t>(b)];
      MatrixXd T(Wb.rows(), Wb.cols());
      for (std::size_t ti = 0; ti < rows.size(); ++ti) {
        T.setZero();
        for (const auto& e : ents[ti]) {
          if (e.row == e.col)
            T.noalias() += e.value * (Wb.col(e.row) * Wb.col(e.row).transpose());
          else
            T.noalias() += e.value * (Wb.col(e.row) * Wb.col(e.col).transpose() +
                                      Wb.col(e.col) * Wb.col(e.row).transpose());
        }
        for (std::size_t tj = ti; tj < rows.size(); ++tj) {
          double acc = 0.0;
          for (const auto& e : ents[tj])
            acc += (e.row == e.col) ? e.value * T(e.row, e.col) : 2.0 * e.value * T(e.row, e.col);
          H(rows[ti], rows[tj]) += acc;
        }
      }
    }
    H = MatrixXd(H.selfadjointView<Eigen::Upper>());

    if (opts.trace) {
      VectorXd u(m);
      for (int i = 0; i < m; ++i) u(i) = std::sin(1.0 + i);
      std::vector<MatrixXd> Mu = adjoint(u);
      VectorXd v2(m);
      v2.setZero();
      for (int b = 0; b < B; ++b) {
        const MatrixXd WMW =
            W[static_cast<std::size_t>(b)] * Mu[static_cast<std::size_t>(b)] * W[static_cast<std::size_t>(b)];
        for (int i = 0; i < m; ++i) {
          double acc = 0.0;
          for (const auto& e : p.rows_psd[static_cast<std::size_t>(i)])
            if (e.block == b)
              acc += (e.row == e.col) ? e.value * WMW(e.row, e.col)
                                      : 2.0 * e.value * WMW(e.row, e.col);
          v2(i) += acc;
        }
      }
      const VectorXd v1 = H * u;
      std::fprintf(stderr, "      schur_operator_mismatch=%.3e (|Hu|=%.3e)\n",
                   (v1 - v2).norm(), v1.norm());
    }

    const double delta = 1e-12 * std::max(1.0, H.diagonal().maxCoeff());
    Eigen::LLT<MatrixXd> lltH;
    double bump = delta;
    for (int attempt = 0; attempt < 6; ++attempt) {
      lltH.compute(H + bump * MatrixXd::Identity(m, m));
      if (lltH.info() == Eigen::Success) break;
      bump *= 1e3;
    }
    if (lltH.info() != Eigen::Success) {
      sol.status = SdpSolution::Status::failed;
      break;
    }

    MatrixXd Hinv_G;
    Eigen::LLT<MatrixXd> lltN;
    if (F > 0) {
      Hinv_G = lltH.solve(G);
      MatrixXd N = G.transpose() * Hinv_G;
      const double delta2 = 1e-12 * std::max(1.0, N.diagonal().maxCoeff());
      N.diagonal().array() += delta2;
      lltN.compute(N);
      if (lltN.info() != Eigen::Success) {
        sol.status = SdpSolution::Status::failed;
        break;
      }
    }

    auto solve_kkt = [&](const VectorXd& r1, const VectorXd& r2, VectorXd& dnu, VectorXd& dy) {
      auto once = [&](const VectorXd& a, const VectorXd& b2, VectorXd& onu, VectorXd& oy) {
        VectorXd u = lltH.solve(a);
        if (F > 0) {
          oy = lltN.solve(G.transpose() * u - b2);
          onu = u - Hinv_G * oy;
        } else {
          oy.resize(0);
          onu = u;
        }
      };
      once(r1, r2, dnu, dy);
      // iterative refinement; the Schur system turns ill-conditioned near the
      // central-path limit and a raw solve stalls around sqrt(eps)
      for (int round = 0; round < 2; ++round) {
        VectorXd res1 = r1 - H * dnu;
        if (F > 0) res1 -= G * dy;
        VectorXd res2 = (F > 0) ? VectorXd(r2 - G.transpose() * dnu) : VectorXd();
        VectorXd cnu, cy;
        once(res1, res2, cnu, cy);
        dnu += cnu;
        if (F > 0) dy += cy;
      }
      if (opts.trace) {
        VectorXd res1 = r1 - H * dnu;
        if (F > 0) res1 -= G * dy;
        const double res2n = (F > 0) ? (r2 - G.transpose() * dnu).norm() : 0.0;
        std::fprintf(stderr, "      kkt_res1=%.3e kkt_res2=%.3e\n", res1.norm(), res2n);
      }
    };

    auto newton_direction = [&](const std::vector<MatrixXd>& rc, VectorXd& dnu, VectorXd& dy,
                                std::vector<MatrixXd>& dX, std::vector<MatrixXd>& dS) {
      VectorXd r1 = rp;
      for (int b = 0; b < B; ++b) {
        const MatrixXd& Wb = W[static_cast<std::size_t>(b)];
        MatrixXd Q = Wb * Rd[static_cast<std::size_t>(b)] * Wb - rc[static_cast<std::size_t>(b)];
        for (int i : bi.rows_of_block[static_cast<std::size_t>(b)]) {
          double acc = 0.0;
          for (const auto& e : p.rows_psd[static_cast<std::size_t>(i)])
            if (e.block == b)
              acc += (e.row == e.col) ? e.value * Q(e.row, e.col) : 2.0 * e.value * Q(e.row, e.col);
          r1(i) += acc;
        }
      }
      solve_kkt(r1, rg, dnu, dy);
      std::vector<MatrixXd> Adj = adjoint(dnu);
      dS.resize(static_cast<std::size_t>(B));
      dX.resize(static_cast<std::size_t>(B));
      for (int b = 0; b < B; ++b) {
        dS[static_cast<std::size_t>(b)] =
            Rd[static_cast<std::size_t>(b)] - Adj[static_cast<std::size_t>(b)];
        const MatrixXd& Wb = W[static_cast<std::size_t>(b)];
        MatrixXd dXb = rc[static_cast<std::size_t>(b)] -
                       Wb * dS[static_cast<std::size_t>(b)] * Wb;
        dX[static_cast<std::size_t>(b)] = 0.5 * (dXb + dXb.transpose());
      }
    };

    // predictor (affine scaling)
    std::vector<MatrixXd> rc(static_cast<std::size_t>(B));
    for (int b = 0; b < B; ++b) rc[static_cast<std::size_t>(b)] = -X[static_cast<std::size_t>(b)];
    VectorXd dnu_a, dy_a;
    std::vector<MatrixXd> dX_a, dS_a;
    newton_direction(rc, dnu_a, dy_a, dX_a, dS_a);

    double ap_aff = 1.0, ad_aff = 1.0;
    for (int b = 0; b < B; ++b) {
      ap_aff = std::min(ap_aff, sym_step_to_boundary(X[static_cast<std::size_t>(b)],
                                                     dX_a[static_cast<std::size_t>(b)]));
      ad_aff = std::min(ad_aff, sym_step_to_boundary(S[static_cast<std::size_t>(b)],
                                                     dS_a[static_cast<std::size_t>(b)]));
    }
    double xs_aff = 0.0;
    for (int b = 0; b < B; ++b)
      xs_aff += ((X[static_cast<std::size_t>(b)] + ap_aff * dX_a[static_cast<std::size_t>(b)]) *
                 (S[static_cast<std::size_t>(b)] + ad_aff * dS_a[static_cast<std::size_t>(b)]))
                    .trace();
    const double mu_aff = std::max(xs_aff / std::max(sumdim, 1), 0.0);
    double sigma = (mu > 0) ? std::pow(mu_aff / mu, 3.0) : 0.1;
    sigma = std::clamp(sigma, 1e-8, 1.0);

    // corrector target in the scaled space, mapped back through F
    for (int b = 0; b < B; ++b) {
      const VectorXd& d = dvec[static_cast<std::size_t>(b)];
      const MatrixXd dXh = Finv[static_cast<std::size_t>(b)] *
                           dX_a[static_cast<std::size_t>(b)] *
                           Finv[static_cast<std::size_t>(b)].transpose();
      const MatrixXd dSh = Fm[static_cast<std::size_t>(b)].transpose() *
                           dS_a[static_cast<std::size_t>(b)] * Fm[static_cast<std::size_t>(b)];
      MatrixXd P = dXh * dSh;
      P = 0.5 * (P + P.transpose());
      const int s = static_cast<int>(d.size());
      MatrixXd Rt(s, s);
      for (int i2 = 0; i2 < s; ++i2)
        for (int j2 = 0; j2 < s; ++j2) {
          double target = -P(i2, j2);
          if (i2 == j2) target += sigma * mu - d(i2) * d(i2);
          Rt(i2, j2) = 2.0 * target / (d(i2) + d(j2));
        }
      rc[static_cast<std::size_t>(b)] =
          Fm[static_cast<std::size_t>(b)] * Rt * Fm[static_cast<std::size_t>(b)].transpose();
    }
    VectorXd dnu, dy;
    std::vector<MatrixXd> dX, dS;
    newton_direction(rc, dnu, dy, dX, dS);

    double ap = 1.0, ad = 1.0;
    for (int b = 0; b < B; ++b) {
      ap = std::min(ap, sym_step_to_boundary(X[static_cast<std::size_t>(b)],
                                             dX[static_cast<std::size_t>(b)]));
      ad = std::min(ad, sym_step_to_boundary(S[static_cast<std::size_t>(b)],
                                             dS[static_cast<std::size_t>(b)]));
    }
    ap = std::min(1.0, opts.step_fraction * ap);
    ad = std::min(1.0, opts.step_fraction * ad);

    if (opts.trace) {
      VectorXd newton_res = rp - apply_A(dX) - G * dy;
      double wmax = 0.0, rdmax = 0.0, rcmax = 0.0, dsmax = 0.0;
      for (int b = 0; b < B; ++b) {
        wmax = std::max(wmax, W[static_cast<std::size_t>(b)].cwiseAbs().maxCoeff());
        rdmax = std::max(rdmax, Rd[static_cast<std::size_t>(b)].cwiseAbs().maxCoeff());
        rcmax = std::max(rcmax, rc[static_cast<std::size_t>(b)].cwiseAbs().maxCoeff());
        dsmax = std::max(dsmax, dS[static_cast<std::size_t>(b)].cwiseAbs().maxCoeff());
      }
      std::fprintf(stderr,
                   "      ap=%.3e ad=%.3e sigma=%.3e newton_rp_res=%.3e |W|=%.1e |Rd|=%.1e "
                   "|rc|=%.1e |dS|=%.1e |dnu|=%.1e\n",
                   ap, ad, sigma, newton_res.norm(), wmax, rdmax, rcmax, dsmax,
                   dnu.cwiseAbs().maxCoeff());
    }

    for (int b = 0; b < B; ++b) {
      X[static_cast<std::size_t>(b)] += ap * dX[static_cast<std::size_t>(b)];
      S[static_cast<std::size_t>(b)] += ad * dS[static_cast<std::size_t>(b)];
    }
    y += ap * dy;
    nu += ad * dnu;

    stall = (ap < 1e-4 && ad < 1e-4) ? stall + 1 : 0;
  }

  sol.X = std::move(X);
  sol.S = std::move(S);
  sol.y.assign(y.data(), y.data() + F);
  sol.dual.assign(static_cast<std::size_t>(input.num_constraints()), 0.0);
  for (std::size_t t = 0; t < pre.kept.size(); ++t)
    sol.dual[static_cast<std::size_t>(pre.kept[t])] = nu(static_cast<int>(t));
  return sol;
}

ResidualReport verify(const SdpProblem& p, const SdpSolution& s) {
  p.validate();
  ResidualReport rep;
  const int m = p.num_constraints();
  const int B = static_cast<int>(p.block_dims.size());

  double bnorm2 = 0.0;
  double res2 = 0.0;
  for (int i = 0; i < m; ++i) {
    double lhs = dot_row(p.rows_psd[static_cast<std::size_t>(i)], s.X);
    for (const auto& [f, v] : p.rows_free[static_cast<std::size_t>(i)])
      lhs += v * s.y[static_cast<std::size_t>(f)];
    const double r = lhs - p.rhs[static_cast<std::size_t>(i)];
    rep.eq_residual_inf = std::max(rep.eq_residual_inf, std::abs(r));
    res2 += r * r;
    bnorm2 += p.rhs[static_cast<std::size_t>(i)] * p.rhs[static_cast<std::size_t>(i)];
  }
  rep.eq_residual_rel = std::sqrt(res2) / (1.0 + std::sqrt(bnorm2));

  std::vector<Eigen::MatrixXd> Cb(static_cast<std::size_t>(B));
  for (int b = 0; b < B; ++b)
    Cb[static_cast<std::size_t>(b)] = Eigen::MatrixXd::Zero(
        p.block_dims[static_cast<std::size_t>(b)], p.block_dims[static_cast<std::size_t>(b)]);
  add_adjoint(p.obj_psd, 1.0, Cb);
  double cscale = 1.0;
  for (int b = 0; b < B; ++b)
    cscale = std::max(cscale, Cb[static_cast<std::size_t>(b)].cwiseAbs().maxCoeff());

  Eigen::VectorXd nu = Eigen::Map<const Eigen::VectorXd>(s.dual.data(), m);
  std::vector<Eigen::MatrixXd> Adj(static_cast<std::size_t>(B));
  for (int b = 0; b < B; ++b)
    Adj[static_cast<std::size_t>(b)] = Eigen::MatrixXd::Zero(
        p.block_dims[static_cast<std::size_t>(b)], p.block_dims[static_cast<std::size_t>(b)]);
  for (int i = 0; i < m; ++i)
    if (nu(i) != 0.0) add_adjoint(p.rows_psd[static_cast<std::size_t>(i)], nu(i), Adj);

  double dual2 = 0.0;
  for (int b = 0; b < B; ++b)
    dual2 += (Cb[static_cast<std::size_t>(b)] - Adj[static_cast<std::size_t>(b)] -
              s.S[static_cast<std::size_t>(b)])
                 .squaredNorm();
  Eigen::VectorXd gv = Eigen::Map<const Eigen::VectorXd>(p.obj_free.data(), p.num_free);
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(m, p.num_free);
  for (int i = 0; i < m; ++i)
    for (const auto& [f, v] : p.rows_free[static_cast<std::size_t>(i)]) G(i, f) += v;
  dual2 += (gv - G.transpose() * nu).squaredNorm();
  rep.dual_residual_rel = std::sqrt(dual2) / (1.0 + cscale);

  for (int b = 0; b < B; ++b) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ex(s.X[static_cast<std::size_t>(b)],
                                                      Eigen::EigenvaluesOnly);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s.S[static_cast<std::size_t>(b)],
                                                      Eigen::EigenvaluesOnly);
    rep.min_eig_X.push_back(ex.eigenvalues().minCoeff());
    rep.min_eig_S.push_back(es.eigenvalues().minCoeff());
  }

  double pobj = 0.0;
  for (int b = 0; b < B; ++b)
    pobj += (Cb[static_cast<std::size_t>(b)] * s.X[static_cast<std::size_t>(b)]).trace();
  for (int f = 0; f < p.num_free; ++f) pobj += gv(f) * s.y[static_cast<std::size_t>(f)];
  const double dobj = nu.dot(Eigen::Map<const Eigen::VectorXd>(p.rhs.data(), m));
  rep.gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));

  Presolved pre = presolve_rows(p, 1e-10);
  if (static_cast<int>(pre.kept.size()) != m) {
    std::vector<char> kept(static_cast<std::size_t>(m), 0);
    for (int r : pre.kept) kept[static_cast<std::size_t>(r)] = 1;
    for (int i = 0; i < m; ++i)
      if (!kept[static_cast<std::size_t>(i)]) rep.dependent_rows.push_back(i);
  }
  return rep;
}

std::string to_text(const SdpProblem& p) {
  std::ostringstream os;
  os << p.block_dims.size() << " " << p.num_free << " " << p.num_constraints() << "\n";
  for (std::size_t b = 0; b < p.block_dims.size(); ++b)
    os << (b ? " " : "") << p.block_dims[b];
  os << "\n";
  for (int i = 0; i < p.num_constraints(); ++i)
    os << (i ? " " : "") << format_double(p.rhs[static_cast<std::size_t>(i)]);
  os << "\n";
  auto emit = [&](int ci, const std::vector<SdpProblem::Entry>& psd,
                  const std::vector<std::pair<int, double>>& free_part) {
    for (const auto& e : psd)
      os << ci << " " << (e.block + 1) << " " << e.row << " " << e.col << " "
         << format_double(e.value) << "\n";
    for (const auto& [f, v] : free_part) os << ci << " 0 " << f << " " << f << " "
                                            << format_double(v) << "\n";
  };
  std::vector<std::pair<int, double>> obj_free_entries;
  for (int f = 0; f < p.num_free; ++f)
    if (p.obj_free[static_cast<std::size_t>(f)] != 0.0)
      obj_free_entries.push_back({f, p.obj_free[static_cast<std::size_t>(f)]});
  emit(0, p.obj_psd, obj_free_entries);
  for (int i = 0; i < p.num_constraints(); ++i)
    emit(i + 1, p.rows_psd[static_cast<std::size_t>(i)], p.rows_free[static_cast<std::size_t>(i)]);
  return os.str();
}

SdpProblem sdp_from_text(const std::string& text) {
  std::istringstream is(text);
  int B = 0, F = 0, m = 0;
  if (!(is >> B >> F >> m)) throw std::invalid_argument("sdp_from_text: bad header");
  SdpProblem p;
  p.num_free = F;
  p.block_dims.resize(static_cast<std::size_t>(B));
  for (int b = 0; b < B; ++b)
    if (!(is >> p.block_dims[static_cast<std::size_t>(b)]))
      throw std::invalid_argument("sdp_from_text: bad block dimensions");
  p.rhs.resize(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i)
    if (!(is >> p.rhs[static_cast<std::size_t>(i)]))
      throw std::invalid_argument("sdp_from_text: bad right-hand side");
  p.rows_psd.resize(static_cast<std::size_t>(m));
  p.rows_free.resize(static_cast<std::size_t>(m));
  p.obj_free.assign(static_cast<std::size_t>(F), 0.0);
  int ci, blk, r, c;
  double v;
  while (is >> ci >> blk >> r >> c >> v) {
    if (ci < 0 || ci > m) throw std::invalid_argument("sdp_from_text: constraint index out of range");
    if (blk == 0) {
      if (ci == 0)
        p.obj_free[static_cast<std::size_t>(r)] += v;
      else
        p.rows_free[static_cast<std::size_t>(ci - 1)].push_back({r, v});
    } else {
      SdpProblem::Entry e{blk - 1, r, c, v};
      if (ci == 0)
        p.obj_psd.push_back(e);
      else
        p.rows_psd[static_cast<std::size_t>(ci - 1)].push_back(e);
    }
  }
  p.validate();
  return p;
}

}  // namespace sparseinv
