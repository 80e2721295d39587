#include <algorithm>
#include <random>

#include "doctest.h"
#include "sparseinv/sdp.hpp"

using namespace sparseinv;

namespace {

// min <C,X> (+ g.y) subject to one PSD block and simple rows
SdpProblem make_problem(int dim, const std::vector<std::vector<SdpProblem::Entry>>& rows,
                        const std::vector<double>& rhs, const std::vector<SdpProblem::Entry>& obj) {
  SdpProblem p;
  p.block_dims = {dim};
  p.rows_psd = rows;
  p.rows_free.resize(rows.size());
  p.rhs = rhs;
  p.obj_psd = obj;
  return p;
}

}  // namespace

TEST_SUITE("sdp") {

TEST_CASE("min x with [[x,1],[1,x]] psd attains 1") {
  // variables: X symmetric 2x2 with X11 = X22 (one row), X12 = 1 (one row)
  SdpProblem p = make_problem(
      2,
      {{{0, 0, 0, 1.0}, {0, 1, 1, -1.0}}, {{0, 0, 1, 1.0}}},
      {0.0, 2.0},  // off-diagonal entries count twice: 2 X12 = 2
      {{0, 0, 0, 1.0}});
  SdpSolution s = solve(p, 1e-9);
  REQUIRE(s.status == SdpSolution::Status::optimal);
  CHECK(s.primal_obj == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(s.X[0](0, 1) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("min trace with pinned corner") {
  SdpProblem p = make_problem(3, {{{0, 0, 0, 1.0}}}, {2.0},
                              {{0, 0, 0, 1.0}, {0, 1, 1, 1.0}, {0, 2, 2, 1.0}});
  SdpSolution s = solve(p, 1e-9);
  REQUIRE(s.status == SdpSolution::Status::optimal);
  CHECK(s.primal_obj == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(s.X[0](0, 0) == doctest::Approx(2.0).epsilon(1e-5));
}

TEST_CASE("negative pinned diagonal is infeasible") {
  SdpProblem p = make_problem(2, {{{0, 0, 0, 1.0}}}, {-1.0},
                              {{0, 0, 0, 1.0}, {0, 1, 1, 1.0}});
  SdpSolution s = solve(p, 1e-8);
  CHECK(s.status == SdpSolution::Status::infeasible);
}

TEST_CASE("free variables ride along") {
  // min y subject to y - X11 = 0, X11 = 3  => y = 3
  SdpProblem p;
  p.block_dims = {1};
  p.num_free = 1;
  p.rows_psd = {{{0, 0, 0, -1.0}}, {{0, 0, 0, 1.0}}};
  p.rows_free = {{{0, 1.0}}, {}};
  p.rhs = {0.0, 3.0};
  p.obj_free = {1.0};
  SdpSolution s = solve(p, 1e-9);
  REQUIRE(s.status == SdpSolution::Status::optimal);
  CHECK(s.primal_obj == doctest::Approx(3.0).epsilon(1e-6));
  CHECK(s.y[0] == doctest::Approx(3.0).epsilon(1e-6));
}

TEST_CASE("weak duality and verify on converged solves") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    // min trace X subject to sum a_i X_ii = b with a_i > 0:
    // optimum is b / max_i a_i
    const int dim = 2 + static_cast<int>(rng() % 5);
    std::vector<SdpProblem::Entry> row, obj;
    double amax = 0.0;
    for (int i = 0; i < dim; ++i) {
      const double a = 0.5 + static_cast<double>(rng() % 1000) / 500.0;
      row.push_back({0, i, i, a});
      obj.push_back({0, i, i, 1.0});
      amax = std::max(amax, a);
    }
    const double b = 0.5 + static_cast<double>(rng() % 100) / 25.0;
    SdpProblem p = make_problem(dim, {row}, {b}, obj);
    SdpSolution s = solve(p, 1e-9);
    REQUIRE(s.status == SdpSolution::Status::optimal);
    CHECK(std::abs(s.primal_obj - b / amax) <= 1e-7 * (1.0 + std::abs(s.primal_obj)));
    CHECK(s.dual_obj <= s.primal_obj + 10.0 * 1e-9 * (1.0 + std::abs(s.primal_obj)));

    ResidualReport rep = verify(p, s);
    CHECK(rep.eq_residual_rel <= 1e-8);
    CHECK(rep.dual_residual_rel <= 1e-7);
    CHECK(rep.dependent_rows.empty());
    for (double ev : rep.min_eig_X) CHECK(ev >= -1e-8);
    for (double ev : rep.min_eig_S) CHECK(ev >= -1e-8);
  }
}

TEST_CASE("verify flags perturbed solutions and rank-deficient rows") {
  SdpProblem p = make_problem(2, {{{0, 0, 0, 1.0}}}, {2.0}, {{0, 0, 0, 1.0}, {0, 1, 1, 1.0}});
  SdpSolution s = solve(p, 1e-10);
  REQUIRE(s.status == SdpSolution::Status::optimal);
  ResidualReport clean = verify(p, s);
  CHECK(clean.eq_residual_inf < 1e-9);

  SdpSolution bad = s;
  bad.X[0](0, 0) += 1e-3;
  ResidualReport rep = verify(p, bad);
  CHECK(rep.eq_residual_inf >= 1e-4);

  // duplicated row: presolve keeps the solve working, verify reports the row
  SdpProblem dup = p;
  dup.rows_psd.push_back(dup.rows_psd[0]);
  dup.rows_free.push_back({});
  dup.rhs.push_back(dup.rhs[0]);
  SdpSolution s2 = solve(dup, 1e-9);
  CHECK(s2.status == SdpSolution::Status::optimal);
  ResidualReport rep2 = verify(dup, s2);
  REQUIRE(rep2.dependent_rows.size() == 1);
  CHECK(rep2.dependent_rows[0] == 1);

  // inconsistent duplicate is infeasible
  SdpProblem bad_dup = dup;
  bad_dup.rhs[1] = 3.0;
  CHECK(solve(bad_dup, 1e-9).status == SdpSolution::Status::infeasible);
}

TEST_CASE("row permutation leaves the optimum unchanged") {
  std::mt19937_64 rng(32);
  SdpProblem p;
  p.block_dims = {3};
  p.obj_psd = {{0, 0, 0, 1.0}, {0, 1, 1, 2.0}, {0, 2, 2, 0.5}, {0, 0, 1, 0.3}};
  p.rows_psd = {{{0, 0, 0, 1.0}, {0, 1, 1, 1.0}},
                {{0, 2, 2, 1.0}},
                {{0, 0, 1, 1.0}, {0, 2, 2, -1.0}}};
  p.rows_free.resize(3);
  p.rhs = {2.0, 0.7, 0.1};
  SdpSolution base = solve(p, 1e-8);
  REQUIRE(base.status == SdpSolution::Status::optimal);

  std::vector<int> perm = {2, 0, 1};
  SdpProblem q;
  q.block_dims = p.block_dims;
  q.obj_psd = p.obj_psd;
  for (int i : perm) {
    q.rows_psd.push_back(p.rows_psd[static_cast<std::size_t>(i)]);
    q.rows_free.push_back({});
    q.rhs.push_back(p.rhs[static_cast<std::size_t>(i)]);
  }
  SdpSolution permuted = solve(q, 1e-8);
  REQUIRE(permuted.status == SdpSolution::Status::optimal);
  CHECK(permuted.primal_obj ==
        doctest::Approx(base.primal_obj).epsilon(1e-7));
}

TEST_CASE("two blocks with coupling") {
  // min X11 + Y11 s.t. X11 = Y11, X12 = Y12 = 1, X22 = Y22 = 1:
  // positive semidefiniteness forces X11 >= 1, so the optimum is 2 at ones
  SdpProblem p;
  p.block_dims = {2, 2};
  p.obj_psd = {{0, 0, 0, 1.0}, {1, 0, 0, 1.0}};
  p.rows_psd = {{{0, 0, 0, 1.0}, {1, 0, 0, -1.0}},
                {{0, 0, 1, 1.0}},
                {{1, 0, 1, 1.0}},
                {{0, 1, 1, 1.0}},
                {{1, 1, 1, 1.0}}};
  p.rows_free.resize(5);
  p.rhs = {0.0, 2.0, 2.0, 1.0, 1.0};
  SdpSolution s = solve(p, 1e-8);
  REQUIRE(s.status == SdpSolution::Status::optimal);
  CHECK(s.primal_obj == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("empty problem is trivially optimal") {
  SdpProblem p;
  p.num_free = 2;
  p.obj_free = {0.0, 0.0};
  SdpSolution s = solve(p, 1e-8);
  CHECK(s.status == SdpSolution::Status::optimal);
  CHECK(s.primal_obj == 0.0);
}

TEST_CASE("text format round trip") {
  SdpProblem p;
  p.block_dims = {2, 3};
  p.num_free = 2;
  p.obj_psd = {{0, 0, 1, 0.25}};
  p.obj_free = {1.5, 0.0};
  p.rows_psd = {{{0, 0, 0, 1.0}, {1, 1, 2, -0.5}}, {{1, 0, 0, 2.0}}};
  p.rows_free = {{{1, 3.0}}, {}};
  p.rhs = {1.0, -2.5};
  SdpProblem q = sdp_from_text(to_text(p));
  CHECK(q.block_dims == p.block_dims);
  CHECK(q.num_free == p.num_free);
  CHECK(q.rhs == p.rhs);
  REQUIRE(q.rows_psd.size() == p.rows_psd.size());
  for (std::size_t i = 0; i < p.rows_psd.size(); ++i) {
    REQUIRE(q.rows_psd[i].size() == p.rows_psd[i].size());
    for (std::size_t e = 0; e < p.rows_psd[i].size(); ++e) {
      CHECK(q.rows_psd[i][e].block == p.rows_psd[i][e].block);
      CHECK(q.rows_psd[i][e].row == p.rows_psd[i][e].row);
      CHECK(q.rows_psd[i][e].col == p.rows_psd[i][e].col);
      CHECK(q.rows_psd[i][e].value == p.rows_psd[i][e].value);
    }
  }
  CHECK(q.obj_free == p.obj_free);
  CHECK(to_text(q) == to_text(p));
}

}  // TEST_SUITE
