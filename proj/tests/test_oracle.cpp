#include <cmath>

#include "doctest.h"
#include "sparseinv/jsonio.hpp"
#include "sparseinv/oracle.hpp"

using namespace sparseinv;

namespace {

std::string fixture(const std::string& name) {
  return std::string(SPARSEINV_FIXTURES_DIR) + "/" + name;
}

PolyVector field(const std::vector<std::string>& comps, const std::vector<std::string>& names) {
  std::vector<Polynomial> f;
  for (const auto& c : comps) f.push_back(Polynomial::parse(c, names));
  return PolyVector(f);
}

}  // namespace

TEST_SUITE("oracle") {

TEST_CASE("integrate closed forms") {
  SUBCASE("exponential decay") {
    PolyVector f = field({"-x1"}, {"x1"});
    IntegrateOptions opts;
    opts.tol = 1e-10;
    Trajectory t = integrate(f, std::vector<double>{1.0}, 1.0, opts);
    REQUIRE(t.outcome == Trajectory::Outcome::reached_end);
    CHECK(t.final_time() == doctest::Approx(1.0));
    CHECK(std::abs(t.final_state()[0] - std::exp(-1.0)) < 1e-7);
  }
  SUBCASE("zero field is constant") {
    PolyVector f = field({"0", "0"}, {"x1", "x2"});
    Trajectory t = integrate(f, std::vector<double>{0.3, -0.4}, 5.0, {});
    REQUIRE(t.outcome == Trajectory::Outcome::reached_end);
    CHECK(t.final_state()[0] == doctest::Approx(0.3));
    CHECK(t.final_state()[1] == doctest::Approx(-0.4));
  }
  SUBCASE("unit drift exits the box at the predicted time") {
    SystemDef sys = parse_system(fixture("shift3d.json"));
    Subsystem sub = whole_system(sys);
    ConstraintSet X = ConstraintSet::from_subsystem_constraints(sub);
    IntegrateOptions opts;
    opts.tol = 1e-9;
    opts.stay_in = &X;
    Trajectory t = integrate(sub.f, std::vector<double>{0.2, 0.2, 0.5}, 10.0, opts);
    REQUIRE(t.outcome == Trajectory::Outcome::exited);
    CHECK(std::abs(t.exit_time - 0.5) < 1e-6);
  }
}

TEST_CASE("tightening the tolerance tightens the error") {
  PolyVector f = field({"-x1"}, {"x1"});
  auto err_at = [&](double tol) {
    IntegrateOptions opts;
    opts.tol = tol;
    Trajectory t = integrate(f, std::vector<double>{1.0}, 2.0, opts);
    return std::abs(t.final_state()[0] - std::exp(-2.0));
  };
  const double coarse = err_at(1e-5);
  const double fine = err_at(1e-9);
  CHECK(fine < coarse);
  CHECK(coarse / std::max(fine, 1e-16) >= 4.0);
}

TEST_CASE("estimate_roa labels the linear fixture exactly") {
  SystemDef sys = parse_system(fixture("linear1d_roa.json"));
  Subsystem sub = whole_system(sys);
  GridSpec spec;
  spec.points_per_dim = 41;
  SampleSet s = estimate_roa(sub, sys.horizon, spec);
  REQUIRE(s.points.size() == 41);
  const double edge = 0.1 * std::exp(1.0);
  for (std::size_t i = 0; i < s.points.size(); ++i) {
    const bool want_in = std::abs(s.points[i][0]) <= edge;
    CHECK(s.labels[i] == (want_in ? Label::In : Label::Out));
  }
}

TEST_CASE("estimate_roa trivial labelings") {
  SystemDef sys = parse_system(fixture("linear1d_roa.json"));
  SUBCASE("target equal to the box with frozen dynamics is all in") {
    SystemDef frozen = sys;
    frozen.f = PolyVector({Polynomial(1)});
    (*frozen.target_blocks)[0].box = std::vector<Interval>{{-1.0, 1.0}};
    GridSpec spec;
    spec.points_per_dim = 21;
    SampleSet s = estimate_roa(whole_system(frozen), 1.0, spec);
    CHECK(s.count(Label::In) == s.points.size());
  }
  SUBCASE("unreachable target is all out") {
    SystemDef far = sys;
    (*far.target_blocks)[0].box = std::vector<Interval>{{0.9, 0.95}};
    GridSpec spec;
    spec.points_per_dim = 21;
    SampleSet s = estimate_roa(whole_system(far), 1.0, spec);
    CHECK(s.count(Label::In) == 0);
  }
}

TEST_CASE("estimate_mpi") {
  SUBCASE("constant drift on the cube is all out") {
    SystemDef sys = parse_system(fixture("shift3d.json"));
    GridSpec spec;
    spec.points_per_dim = 11;
    SampleSet s = estimate_mpi(whole_system(sys), 2.0, spec);
    CHECK(s.count(Label::In) == 0);
    CHECK(s.count(Label::Out) == s.points.size());
  }
  SUBCASE("zero field is all in") {
    SystemDef sys = parse_system(fixture("shift3d.json"));
    sys.f = PolyVector({Polynomial(3), Polynomial(3), Polynomial(3)});
    GridSpec spec;
    spec.points_per_dim = 5;
    SampleSet s = estimate_mpi(whole_system(sys), 2.0, spec);
    CHECK(s.count(Label::In) == s.points.size());
  }
  SUBCASE("uncoupled oscillator block keeps a neighborhood of the origin") {
    const std::vector<std::string> names = {"x1", "x2"};
    SystemDef sys;
    sys.var_names = names;
    sys.f = field({"2*x2", "-0.8*x1 - 10*x1^2*x2 + 2.1*x2"}, names);
    sys.partition.blocks = {{0, 1}};
    SemialgebraicBlock b;
    b.var_indices = {0, 1};
    b.box = std::vector<Interval>{{-1.2, 1.2}, {-1.2, 1.2}};
    sys.constraint_blocks = {b};
    GridSpec spec;
    spec.points_per_dim = 5;  // includes the origin
    SampleSet s = estimate_mpi(whole_system(sys), 100.0, spec);
    bool origin_in = false;
    for (std::size_t i = 0; i < s.points.size(); ++i)
      if (s.points[i][0] == 0.0 && s.points[i][1] == 0.0)
        origin_in = (s.labels[i] == Label::In);
    CHECK(origin_in);
  }
}

TEST_CASE("estimate_attractor") {
  const std::vector<std::string> names = {"x1"};
  SystemDef sys;
  sys.var_names = names;
  sys.partition.blocks = {{0}};
  SemialgebraicBlock b;
  b.var_indices = {0};
  b.box = std::vector<Interval>{{-1.0, 1.0}};
  sys.constraint_blocks = {b};

  SUBCASE("decay concentrates near the origin after burn-in") {
    sys.f = field({"-x1"}, names);
    GridSpec spec;
    spec.points_per_dim = 9;
    SampleSet s = estimate_attractor(whole_system(sys), 20.0, 21.0, spec);
    REQUIRE(s.points.size() > 0);
    for (const auto& p : s.points) CHECK(std::abs(p[0]) < 1e-8);
  }
  SUBCASE("zero field keeps the surviving initial points") {
    sys.f = PolyVector({Polynomial(1)});
    GridSpec spec;
    spec.points_per_dim = 5;
    SampleSet s = estimate_attractor(whole_system(sys), 1.0, 2.0, spec);
    CHECK(s.points.size() >= 5);
  }
  SUBCASE("burn-in must precede sampling") {
    sys.f = field({"-x1"}, names);
    CHECK_THROWS_AS(estimate_attractor(whole_system(sys), 2.0, 1.0, GridSpec{}),
                    std::invalid_argument);
  }
}

TEST_CASE("dlambda estimates") {
  std::vector<Interval> box = {{0.0, 1.0}, {0.0, 1.0}};
  auto whole = [](std::span<const double>) { return true; };
  auto half = [](std::span<const double> x) { return x[0] <= 0.5; };

  auto same = dlambda_estimate(whole, whole, box, 2000, 1);
  CHECK(same.value == 0.0);
  CHECK(same.ci_lo == 0.0);

  auto diff = dlambda_estimate(whole, half, box, 20000, 2);
  CHECK(diff.value == doctest::Approx(0.5).epsilon(0.05));
  CHECK(diff.ci_lo <= 0.5);
  CHECK(diff.ci_hi >= 0.5);

  CHECK_THROWS_AS(dlambda_estimate(whole, half, box, 10, 3), std::invalid_argument);
}

TEST_CASE("sampling plans are reproducible from provenance") {
  std::vector<Interval> box = {{-1.0, 1.0}, {-1.0, 1.0}};
  GridSpec mc;
  mc.mc_samples = 50;
  mc.seed = 42;
  auto a = make_points(box, mc);
  auto b = make_points(box, mc);
  CHECK(a == b);
  mc.seed = 43;
  CHECK(make_points(box, mc) != a);

  GridSpec pinned;
  pinned.points_per_dim = 3;
  pinned.fixed = {{0, 0.25}};
  auto pts = make_points(box, pinned);
  REQUIRE(pts.size() == 3);
  for (const auto& p : pts) CHECK(p[0] == 0.25);
}

TEST_CASE("flow commutation on a small sparse system") {
  // two-block triangular system: the (x1) block is a subsystem
  const std::vector<std::string> names = {"x1", "x2"};
  SystemDef sys;
  sys.var_names = names;
  sys.f = field({"-x1 + 0.1*x1^2", "-x2 + 0.5*x1"}, names);
  sys.partition = Partition::singletons(2);
  for (int j = 0; j < 2; ++j) {
    SemialgebraicBlock b;
    b.var_indices = {j};
    b.box = std::vector<Interval>{{-2.0, 2.0}};
    sys.constraint_blocks.push_back(b);
  }
  Subsystem sub = subsystem_from_blocks(sys, {0});
  Subsystem full = whole_system(sys);

  IntegrateOptions opts;
  opts.tol = 1e-9;
  for (double x0 : {-0.8, -0.2, 0.3, 0.7}) {
    for (double t : {0.5, 1.0, 5.0}) {
      Trajectory tf = integrate(full.f, std::vector<double>{x0, 0.5}, t, opts);
      Trajectory ts = integrate(sub.f, std::vector<double>{x0}, t, opts);
      REQUIRE(tf.outcome == Trajectory::Outcome::reached_end);
      REQUIRE(ts.outcome == Trajectory::Outcome::reached_end);
      CHECK(std::abs(tf.final_state()[0] - ts.final_state()[0]) <= 1e-6);
    }
  }
}

TEST_CASE("stiffness reports failure with the last state") {
  // finite-time blowup: x' = x^2 from 1 explodes at t = 1
  PolyVector f = field({"x1^2"}, {"x1"});
  IntegrateOptions opts;
  opts.tol = 1e-9;
  Trajectory t = integrate(f, std::vector<double>{1.0}, 2.0, opts);
  CHECK(t.outcome == Trajectory::Outcome::failed);
  CHECK(t.states.size() >= 1);
}

}  // TEST_SUITE
