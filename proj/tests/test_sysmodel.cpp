#include "doctest.h"
#include "sparseinv/jsonio.hpp"
#include "sparseinv/sysmodel.hpp"

using namespace sparseinv;

namespace {

std::string fixture(const std::string& name) {
  return std::string(SPARSEINV_FIXTURES_DIR) + "/" + name;
}

// the cross-block counterexample: x2's box constraint depends on x3
SystemDef counterexample() {
  const std::vector<std::string> names = {"x1", "x2", "x3"};
  SystemDef sys;
  sys.var_names = names;
  sys.f.push_back(Polynomial(3));
  sys.f.push_back(Polynomial::parse("-x1*x2", names));
  sys.f.push_back(Polynomial::parse("x1*x3 - x1*x3^2", names));
  sys.partition = Partition::singletons(3);
  for (int j = 0; j < 3; ++j) {
    SemialgebraicBlock b;
    b.var_indices = {j};
    b.box = std::vector<Interval>{{j == 1 ? 0.0 : 0.5, 1.0}};
    sys.constraint_blocks.push_back(b);
  }
  // x2 >= x3 - 1/2 attached to x2's block reaches across blocks
  sys.constraint_blocks[1].inequalities.push_back(
      Polynomial::parse("x2 - x3 + 0.5", names));
  return sys;
}

}  // namespace

TEST_SUITE("sysmodel") {

TEST_CASE("is_subsystem on the 10-variable example") {
  SystemDef sys = parse_system(fixture("examplef.json"));
  CHECK(is_subsystem(sys, {0, 1}));         // (y1, y2)
  CHECK_FALSE(is_subsystem(sys, {3, 4}));   // (y4, y5): f4 needs y7, f5 needs y1
  std::vector<int> all;
  for (int i = 0; i < 10; ++i) all.push_back(i);
  CHECK(is_subsystem(sys, all));
}

TEST_CASE("subsystem index sets are a lattice") {
  // closed under union and intersection; brute force over block-aligned sets
  SystemDef sys = parse_system(fixture("examplef.json"));
  const int nb = sys.partition.num_blocks();
  std::vector<std::vector<int>> valid;
  for (int mask = 0; mask < (1 << nb); ++mask) {
    std::vector<int> idx;
    for (int j = 0; j < nb; ++j)
      if (mask & (1 << j))
        idx.insert(idx.end(), sys.partition.blocks[static_cast<std::size_t>(j)].begin(),
                   sys.partition.blocks[static_cast<std::size_t>(j)].end());
    if (is_subsystem(sys, idx)) valid.push_back(idx);
  }
  auto contains = [&](std::vector<int> v) {
    std::sort(v.begin(), v.end());
    for (auto s : valid) {
      std::sort(s.begin(), s.end());
      if (s == v) return true;
    }
    return false;
  };
  for (const auto& a : valid) {
    for (const auto& b : valid) {
      std::vector<int> uni = a, inter;
      uni.insert(uni.end(), b.begin(), b.end());
      std::sort(uni.begin(), uni.end());
      uni.erase(std::unique(uni.begin(), uni.end()), uni.end());
      for (int v : a)
        if (std::find(b.begin(), b.end(), v) != b.end()) inter.push_back(v);
      CHECK(contains(uni));
      CHECK(contains(inter));
    }
  }
}

TEST_CASE("project_subsystem re-indexes dynamics and constraints") {
  SystemDef sys = parse_system(fixture("vdp_cherry_n3.json"));

  SUBCASE("root plus one leaf is four dimensional") {
    Subsystem sub = subsystem_from_blocks(sys, {0, 2});
    CHECK(sub.dim() == 4);
    CHECK(sub.global_indices == std::vector<int>{0, 1, 4, 5});
    CHECK(sub.f.num_vars() == 4);
    CHECK(sub.constraint_blocks.size() == 2);
    // the projected local system is itself closed
    SystemDef local;
    local.f = sub.f;
    local.partition = sub.partition;
    local.constraint_blocks = sub.constraint_blocks;
    local.var_names = sub.var_names;
    std::vector<int> all{0, 1, 2, 3};
    CHECK(is_subsystem(local, all));
  }

  SUBCASE("whole system is the identity projection") {
    Subsystem sub = whole_system(sys);
    CHECK(sub.dim() == 6);
    for (int i = 0; i < 6; ++i) CHECK(sub.global_indices[static_cast<std::size_t>(i)] == i);
  }

  SUBCASE("closure violations name the variable") {
    CHECK_THROWS_AS(subsystem_from_blocks(sys, {1}), ClosureError);
    CHECK_THROWS_WITH_AS(project_subsystem(sys, {2, 3}), doctest::Contains("x1_1"),
                         ClosureError);
  }

  SUBCASE("block-splitting index sets are rejected") {
    CHECK_THROWS_AS(project_subsystem(sys, {0}), PartitionError);
  }
}

TEST_CASE("validate_product_constraints") {
  SystemDef box_sys = parse_system(fixture("vdp_cherry_n10.json"));
  CHECK(validate_product_constraints(box_sys));

  SystemDef bad = counterexample();
  std::vector<std::string> diags;
  CHECK_FALSE(validate_product_constraints(bad, &diags));
  REQUIRE(diags.size() == 1);
  CHECK(diags[0].find("x3") != std::string::npos);

  // no inequalities at all is trivially product form
  SystemDef empty = parse_system(fixture("decoupled_linear3.json"));
  CHECK(validate_product_constraints(empty));
}

TEST_CASE("projection of subsystem then is_subsystem holds") {
  SystemDef sys = parse_system(fixture("examplef.json"));
  // past of x5 in the text partition
  Subsystem sub = subsystem_from_blocks(sys, {0, 1, 3, 4});
  SystemDef local;
  local.f = sub.f;
  local.partition = sub.partition;
  local.constraint_blocks = sub.constraint_blocks;
  std::vector<int> all(static_cast<std::size_t>(sub.dim()));
  for (int i = 0; i < sub.dim(); ++i) all[static_cast<std::size_t>(i)] = i;
  CHECK(is_subsystem(local, all));
  CHECK(sub.dim() == 8);
}

}  // TEST_SUITE
