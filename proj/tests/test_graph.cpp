#include <random>

#include "doctest.h"
#include "sparseinv/graph.hpp"
#include "sparseinv/jsonio.hpp"

using namespace sparseinv;

namespace {

std::string fixture(const std::string& name) {
  return std::string(SPARSEINV_FIXTURES_DIR) + "/" + name;
}

SparsityGraph make_graph(std::vector<int> weights, const std::vector<std::pair<int, int>>& edges) {
  SparsityGraph g;
  g.weights = std::move(weights);
  g.out.resize(g.weights.size());
  g.in.resize(g.weights.size());
  for (auto [i, j] : edges) {
    g.out[static_cast<std::size_t>(i)].push_back(j);
    g.in[static_cast<std::size_t>(j)].push_back(i);
  }
  for (auto& v : g.out) std::sort(v.begin(), v.end());
  for (auto& v : g.in) std::sort(v.begin(), v.end());
  return g;
}

SparsityGraph random_digraph(std::mt19937_64& rng, int n, double p) {
  std::vector<std::pair<int, int>> edges;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && u(rng) < p) edges.emplace_back(i, j);
  std::vector<int> w(static_cast<std::size_t>(n));
  for (auto& x : w) x = 1 + static_cast<int>(rng() % 3);
  return make_graph(w, edges);
}

// reference reachability on the raw graph
std::vector<char> reachable_from(const SparsityGraph& g, int src, bool reverse) {
  std::vector<char> seen(static_cast<std::size_t>(g.num_nodes()), 0);
  std::vector<int> stack{src};
  seen[static_cast<std::size_t>(src)] = 1;
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    const auto& nbrs = reverse ? g.in[static_cast<std::size_t>(u)] : g.out[static_cast<std::size_t>(u)];
    for (int v : nbrs)
      if (!seen[static_cast<std::size_t>(v)]) {
        seen[static_cast<std::size_t>(v)] = 1;
        stack.push_back(v);
      }
  }
  return seen;
}

}  // namespace

TEST_SUITE("graph") {

TEST_CASE("build_graph on the 10-variable example") {
  SystemDef sys = parse_system(fixture("examplef.json"));
  SparsityGraph g = build_graph(sys);
  REQUIRE(g.num_nodes() == 5);
  CHECK(g.weights == std::vector<int>{2, 1, 2, 2, 3});
  CHECK(g.has_edge(0, 1));
  CHECK(g.has_edge(0, 3));
  CHECK(g.has_edge(3, 2));
  CHECK(g.has_edge(1, 4));
  CHECK(g.has_edge(3, 4));
  CHECK(g.in[0].empty());
  // self-loops are suppressed
  for (int i = 0; i < 5; ++i) CHECK_FALSE(g.has_edge(i, i));
}

TEST_CASE("cherry and decoupled graphs") {
  SystemDef cherry = parse_system(fixture("vdp_cherry_n3.json"));
  SparsityGraph g = build_graph(cherry);
  CHECK(g.out[0] == std::vector<int>{1, 2});
  CHECK(g.out[1].empty());
  CHECK(g.out[2].empty());

  SystemDef dec = parse_system(fixture("decoupled_linear3.json"));
  SparsityGraph d = build_graph(dec);
  for (int i = 0; i < d.num_nodes(); ++i) CHECK(d.out[static_cast<std::size_t>(i)].empty());
  CHECK(omega(condense(d)) == 1);  // max block weight
}

TEST_CASE("condense merges strongly connected components") {
  SUBCASE("three-cycle becomes one node") {
    SparsityGraph g = make_graph({1, 2, 3}, {{0, 1}, {1, 2}, {2, 0}});
    CondensedGraph c = condense(g);
    REQUIRE(c.num_nodes() == 1);
    CHECK(c.graph.weights[0] == 6);
    CHECK(c.members[0] == std::vector<int>{0, 1, 2});
  }
  SUBCASE("acyclic graphs map to themselves") {
    SparsityGraph g = make_graph({2, 1, 2}, {{0, 1}, {0, 2}, {1, 2}});
    CondensedGraph c = condense(g);
    REQUIRE(c.num_nodes() == 3);
    for (int i = 0; i < 3; ++i) {
      CHECK(c.members[static_cast<std::size_t>(i)] == std::vector<int>{i});
      CHECK(c.graph.out[static_cast<std::size_t>(i)] == g.out[static_cast<std::size_t>(i)]);
    }
  }
  SUBCASE("path of cycles condenses to a chain") {
    // two 2-cycles bridged by an edge: (0<->1) -> (2<->3)
    SparsityGraph g = make_graph({1, 1, 1, 1}, {{0, 1}, {1, 0}, {1, 2}, {2, 3}, {3, 2}});
    CondensedGraph c = condense(g);
    REQUIRE(c.num_nodes() == 2);
    CHECK(c.graph.has_edge(0, 1));
    CHECK(leafs(c) == std::vector<int>{1});
  }
}

TEST_CASE("condensation is acyclic on random graphs") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 40; ++trial) {
    SparsityGraph g = random_digraph(rng, 4 + static_cast<int>(rng() % 9), 0.3);
    CondensedGraph c = condense(g);
    CHECK(is_acyclic(c.graph));
  }
}

TEST_CASE("leafs, pasts and omega on the example") {
  SystemDef sys = parse_system(fixture("examplef.json"));
  CondensedGraph c = condense(build_graph(sys));
  CHECK(leafs(c) == std::vector<int>{2, 4});
  CHECK(past(c, 4) == std::vector<int>{0, 1, 3, 4});
  CHECK(past(c, 2) == std::vector<int>{0, 2, 3});
  CHECK(past(c, 0) == std::vector<int>{0});  // source: only itself
  CHECK(omega(c) == 8);
  CHECK_THROWS_AS(past(c, 99), std::out_of_range);

  // cyclic input to leafs is a precondition error
  CondensedGraph bogus;
  bogus.graph = make_graph({1, 1}, {{0, 1}, {1, 0}});
  bogus.members = {{0}, {1}};
  bogus.node_of_block = {0, 1};
  CHECK_THROWS_AS(leafs(bogus), std::invalid_argument);
}

TEST_CASE("single node is its own leaf") {
  SparsityGraph g = make_graph({3}, {});
  CondensedGraph c = condense(g);
  CHECK(leafs(c) == std::vector<int>{0});
  CHECK(past(c, 0) == std::vector<int>{0});
  CHECK(omega(c) == 3);
}

TEST_CASE("leaf pasts cover all nodes and preserve raw variables") {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 3 + static_cast<int>(rng() % 10);
    SparsityGraph g = random_digraph(rng, n, 0.25);
    CondensedGraph c = condense(g);

    std::vector<char> covered(static_cast<std::size_t>(c.num_nodes()), 0);
    for (int leaf : leafs(c))
      for (int node : past(c, leaf)) covered[static_cast<std::size_t>(node)] = 1;
    for (char x : covered) CHECK(x == 1);

    // condensed pasts match raw reverse reachability, block by block
    Partition part;
    int next = 0;
    for (int i = 0; i < n; ++i) {
      std::vector<int> blk;
      for (int q = 0; q < g.weights[static_cast<std::size_t>(i)]; ++q) blk.push_back(next++);
      part.blocks.push_back(blk);
    }
    for (int leaf : leafs(c)) {
      std::vector<int> got = c.raw_variables(part, past(c, leaf));
      std::vector<int> want;
      for (int member : c.members[static_cast<std::size_t>(leaf)]) {
        auto seen = reachable_from(g, member, true);
        for (int b = 0; b < n; ++b)
          if (seen[static_cast<std::size_t>(b)])
            for (int v : part.blocks[static_cast<std::size_t>(b)]) want.push_back(v);
      }
      std::sort(want.begin(), want.end());
      want.erase(std::unique(want.begin(), want.end()), want.end());
      CHECK(got == want);
    }
  }
}

TEST_CASE("leaf pasts induce valid subsystems") {
  for (const char* name : {"examplef.json", "vdp_cherry_n3.json", "vdp_tree.json"}) {
    SystemDef sys = parse_system(fixture(name));
    CondensedGraph c = condense(build_graph(sys));
    for (int leaf : leafs(c)) {
      auto raw = c.raw_variables(sys.partition, past(c, leaf));
      CHECK(is_subsystem(sys, raw));
    }
  }
}

TEST_CASE("minimal factorization") {
  const std::vector<std::string> names = {"x1", "x2", "x3"};
  SUBCASE("shared constraints merge variables") {
    std::vector<Polynomial> cons = {Polynomial::parse("1 - x1^2", names),
                                    Polynomial::parse("1 - x2^2", names),
                                    Polynomial::parse("1 - x2*x3", names)};
    Partition p = minimal_factorization(cons, 3);
    REQUIRE(p.blocks.size() == 2);
    CHECK(p.blocks[0] == std::vector<int>{0});
    CHECK(p.blocks[1] == std::vector<int>{1, 2});
  }
  SUBCASE("pure boxes stay singleton") {
    std::vector<Polynomial> cons = {Polynomial::parse("1 - x1^2", names),
                                    Polynomial::parse("1 - x3^2", names)};
    Partition p = minimal_factorization(cons, 3);
    CHECK(p.blocks == std::vector<std::vector<int>>{{0}, {1}, {2}});
  }
  SUBCASE("one constraint over everything gives one block") {
    std::vector<Polynomial> cons = {Polynomial::parse("1 - x1*x2*x3", names)};
    Partition p = minimal_factorization(cons, 3);
    REQUIRE(p.blocks.size() == 1);
    CHECK(p.blocks[0] == std::vector<int>{0, 1, 2});
  }
}

TEST_CASE("minimal factorization refines every support-respecting partition") {
  std::mt19937_64 rng(23);
  const int n = 4;
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<Polynomial> cons;
    const int nc = 1 + static_cast<int>(rng() % 4);
    for (int c = 0; c < nc; ++c) {
      Exponents e(static_cast<std::size_t>(n), 0);
      for (int v = 0; v < n; ++v)
        if (rng() % 2) e[static_cast<std::size_t>(v)] = 1;
      cons.push_back(Polynomial::monomial(n, e, 1.0));
    }
    Partition fine = minimal_factorization(cons, n);

    // brute force over set partitions of {0,1,2,3} via assignment vectors
    std::vector<int> assign(static_cast<std::size_t>(n), 0);
    auto respects = [&](const std::vector<int>& a) {
      for (const auto& c : cons) {
        const auto sup = c.support();
        for (int v : sup)
          if (a[static_cast<std::size_t>(v)] != a[static_cast<std::size_t>(*sup.begin())])
            return false;
      }
      return true;
    };
    for (assign[0] = 0; assign[0] < 1; ++assign[0])
      for (assign[1] = 0; assign[1] < 2; ++assign[1])
        for (assign[2] = 0; assign[2] < 3; ++assign[2])
          for (assign[3] = 0; assign[3] < 4; ++assign[3]) {
            if (!respects(assign)) continue;
            // each minimal block must sit inside one cell of the coarser partition
            for (const auto& blk : fine.blocks) {
              const int cell = assign[static_cast<std::size_t>(blk[0])];
              for (int v : blk) CHECK(assign[static_cast<std::size_t>(v)] == cell);
            }
          }
  }
}

TEST_CASE("dot export mentions weights and variables") {
  SystemDef sys = parse_system(fixture("examplef.json"));
  SparsityGraph g = build_graph(sys);
  const std::string dot = to_dot(g, sys.partition, sys.names_or_default());
  CHECK(dot.find("digraph") != std::string::npos);
  CHECK(dot.find("w=3") != std::string::npos);
  CHECK(dot.find("y10") != std::string::npos);
  CondensedGraph c = condense(g);
  CHECK(to_dot(c, sys.partition, sys.names_or_default()).find("->") != std::string::npos);
}

}  // TEST_SUITE
