#include "sparseinv/jsonio.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace sparseinv {

using nlohmann::json;

void write_file(const std::string& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  os << content;
  if (!os) throw std::runtime_error("failed writing '" + path + "'");
}

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

namespace {

[[noreturn]] void fail(const std::string& origin, const std::string& msg) {
  throw ParseError(origin + ": " + msg);
}

std::vector<Interval> parse_box(const json& j, std::size_t arity, const std::string& origin,
                                const std::string& where) {
  std::vector<Interval> box;
  if (!j.is_array() || j.empty()) fail(origin, where + ": box must be a nonempty array");
  if (j.size() == 2 && j[0].is_number() && j[1].is_number()) {
    // [lo, hi] shorthand applied to every variable in scope
    Interval iv{j[0].get<double>(), j[1].get<double>()};
    if (!(iv.lo < iv.hi)) fail(origin, where + ": box interval is empty");
    box.assign(arity, iv);
    return box;
  }
  if (j.size() != arity)
    fail(origin, where + ": box has " + std::to_string(j.size()) + " intervals, expected " +
                     std::to_string(arity));
  for (const auto& e : j) {
    if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
      fail(origin, where + ": each interval must be [lo, hi]");
    Interval iv{e[0].get<double>(), e[1].get<double>()};
    if (!(iv.lo < iv.hi)) fail(origin, where + ": box interval is empty");
    box.push_back(iv);
  }
  return box;
}

struct BlockSpec {
  std::vector<Polynomial> inequalities;  // over the full ambient space
  std::optional<std::vector<Interval>> box;
};

BlockSpec parse_block_spec(const json& j, const std::vector<std::string>& names, std::size_t arity,
                           const std::string& origin, const std::string& where) {
  BlockSpec spec;
  if (!j.is_object()) fail(origin, where + ": expected an object with box/inequalities");
  if (j.contains("box")) spec.box = parse_box(j.at("box"), arity, origin, where);
  if (j.contains("inequalities")) {
    if (!j.at("inequalities").is_array()) fail(origin, where + ": inequalities must be an array");
    for (const auto& s : j.at("inequalities")) {
      if (!s.is_string()) fail(origin, where + ": inequality entries must be strings");
      try {
        spec.inequalities.push_back(Polynomial::parse(s.get<std::string>(), names));
      } catch (const std::exception& ex) {
        fail(origin, where + ": " + ex.what());
      }
    }
  }
  return spec;
}

}  // namespace

SystemDef parse_system_text(const std::string& text, const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& ex) {
    fail(origin, std::string("invalid JSON: ") + ex.what());
  }

  SystemDef sys;
  if (!j.contains("variables") || !j.at("variables").is_array() || j.at("variables").empty())
    fail(origin, "missing or empty 'variables' array");
  for (const auto& v : j.at("variables")) {
    if (!v.is_string()) fail(origin, "'variables' must contain strings");
    sys.var_names.push_back(v.get<std::string>());
  }
  const int n = static_cast<int>(sys.var_names.size());
  {
    std::set<std::string> uniq(sys.var_names.begin(), sys.var_names.end());
    if (static_cast<int>(uniq.size()) != n) fail(origin, "duplicate variable names");
  }

  if (!j.contains("dynamics") || !j.at("dynamics").is_array())
    fail(origin, "missing 'dynamics' array");
  if (static_cast<int>(j.at("dynamics").size()) != n)
    fail(origin, "'dynamics' must list exactly one polynomial per variable, got " +
                     std::to_string(j.at("dynamics").size()) + " for " + std::to_string(n) +
                     " variables");
  for (int i = 0; i < n; ++i) {
    const auto& s = j.at("dynamics")[static_cast<std::size_t>(i)];
    if (!s.is_string()) fail(origin, "dynamics[" + std::to_string(i) + "] must be a string");
    try {
      sys.f.push_back(Polynomial::parse(s.get<std::string>(), sys.var_names));
    } catch (const std::exception& ex) {
      fail(origin, "dynamics[" + std::to_string(i) + "] (" + sys.var_names[static_cast<std::size_t>(i)] +
                       "'): " + ex.what());
    }
  }

  auto var_index = [&](const std::string& name, const std::string& where) {
    for (int i = 0; i < n; ++i)
      if (sys.var_names[static_cast<std::size_t>(i)] == name) return i;
    fail(origin, where + ": unknown variable '" + name + "'");
    return -1;
  };

  const bool explicit_blocks = j.contains("blocks");
  if (explicit_blocks) {
    if (!j.at("blocks").is_array() || j.at("blocks").empty())
      fail(origin, "'blocks' must be a nonempty array of variable-name arrays");
    for (std::size_t bi = 0; bi < j.at("blocks").size(); ++bi) {
      const auto& b = j.at("blocks")[bi];
      if (!b.is_array() || b.empty())
        fail(origin, "blocks[" + std::to_string(bi) + "] must be a nonempty array");
      std::vector<int> blk;
      for (const auto& name : b) {
        if (!name.is_string()) fail(origin, "block entries must be variable names");
        blk.push_back(var_index(name.get<std::string>(), "blocks[" + std::to_string(bi) + "]"));
      }
      sys.partition.blocks.push_back(std::move(blk));
    }
    try {
      sys.partition.validate();
      if (sys.partition.num_vars() != n)
        throw PartitionError("blocks cover " + std::to_string(sys.partition.num_vars()) +
                             " of " + std::to_string(n) + " variables");
    } catch (const std::exception& ex) {
      fail(origin, std::string("invalid 'blocks': ") + ex.what());
    }

    if (!j.contains("constraints") || !j.at("constraints").is_array())
      fail(origin, "with explicit blocks, 'constraints' must be an array aligned with blocks");
    if (j.at("constraints").size() != sys.partition.blocks.size())
      fail(origin, "'constraints' lists " + std::to_string(j.at("constraints").size()) +
                       " blocks, partition has " + std::to_string(sys.partition.blocks.size()));
    for (std::size_t bi = 0; bi < sys.partition.blocks.size(); ++bi) {
      const auto& blk_vars = sys.partition.blocks[bi];
      BlockSpec spec = parse_block_spec(j.at("constraints")[bi], sys.var_names, blk_vars.size(),
                                        origin, "constraints[" + std::to_string(bi) + "]");
      SemialgebraicBlock sb;
      sb.var_indices = blk_vars;
      sb.inequalities = std::move(spec.inequalities);
      sb.box = std::move(spec.box);
      sys.constraint_blocks.push_back(std::move(sb));
    }
    if (j.contains("target")) {
      if (!j.at("target").is_array() || j.at("target").size() != sys.partition.blocks.size())
        fail(origin, "'target' must be an array aligned with blocks");
      sys.target_blocks.emplace();
      for (std::size_t bi = 0; bi < sys.partition.blocks.size(); ++bi) {
        const auto& blk_vars = sys.partition.blocks[bi];
        BlockSpec spec = parse_block_spec(j.at("target")[bi], sys.var_names, blk_vars.size(),
                                          origin, "target[" + std::to_string(bi) + "]");
        SemialgebraicBlock sb;
        sb.var_indices = blk_vars;
        sb.inequalities = std::move(spec.inequalities);
        sb.box = std::move(spec.box);
        sys.target_blocks->push_back(std::move(sb));
      }
    }
  } else {
    // global constraint description; the partition comes from the minimal
    // factorization of all constraint and target supports
    if (!j.contains("constraints") || !j.at("constraints").is_object())
      fail(origin, "without 'blocks', 'constraints' must be a single global object");
    BlockSpec global = parse_block_spec(j.at("constraints"), sys.var_names,
                                        static_cast<std::size_t>(n), origin, "constraints");
    std::optional<BlockSpec> gtarget;
    if (j.contains("target")) {
      if (!j.at("target").is_object())
        fail(origin, "without 'blocks', 'target' must be a single global object");
      gtarget = parse_block_spec(j.at("target"), sys.var_names, static_cast<std::size_t>(n),
                                 origin, "target");
    }
    std::vector<Polynomial> all_ineqs = global.inequalities;
    if (gtarget)
      all_ineqs.insert(all_ineqs.end(), gtarget->inequalities.begin(),
                       gtarget->inequalities.end());
    sys.partition = minimal_factorization(all_ineqs, n);

    auto split = [&](const BlockSpec& spec) {
      std::vector<SemialgebraicBlock> blocks;
      for (const auto& blk_vars : sys.partition.blocks) {
        SemialgebraicBlock sb;
        sb.var_indices = blk_vars;
        if (spec.box) {
          sb.box.emplace();
          for (int v : blk_vars) sb.box->push_back((*spec.box)[static_cast<std::size_t>(v)]);
        }
        blocks.push_back(std::move(sb));
      }
      for (const auto& p : spec.inequalities) {
        const auto sup = p.support();
        if (sup.empty()) continue;
        const int blk = sys.partition.block_of(*sup.begin());
        blocks[static_cast<std::size_t>(blk)].inequalities.push_back(p);
      }
      return blocks;
    };
    sys.constraint_blocks = split(global);
    if (gtarget) sys.target_blocks = split(*gtarget);
  }

  if (j.contains("horizon")) {
    if (!j.at("horizon").is_number()) fail(origin, "'horizon' must be a number");
    sys.horizon = j.at("horizon").get<double>();
  }

  try {
    sys.validate();
  } catch (const std::exception& ex) {
    fail(origin, std::string("invalid system: ") + ex.what());
  }
  std::vector<std::string> diags;
  if (!validate_product_constraints(sys, &diags)) {
    std::string msg = "constraint set is not in product form:";
    for (const auto& d : diags) msg += "\n  " + d;
    fail(origin, msg);
  }
  return sys;
}

SystemDef parse_system(const std::string& path) {
  return parse_system_text(read_file(path), path);
}

std::vector<std::pair<std::string, double>> system_section_fix(const std::string& path) {
  std::vector<std::pair<std::string, double>> out;
  json j = json::parse(read_file(path));
  if (j.contains("metadata") && j.at("metadata").contains("section_fix")) {
    for (const auto& [name, value] : j.at("metadata").at("section_fix").items())
      out.emplace_back(name, value.get<double>());
  }
  return out;
}

namespace {

json diagnostics_to_json(const SolveDiagnostics& d) {
  return json{{"status", d.status},
              {"gap", d.gap},
              {"primal_infeas", d.primal_infeas},
              {"dual_infeas", d.dual_infeas},
              {"identity_residual", d.identity_residual},
              {"margin", d.margin},
              {"iterations", d.iterations}};
}

json certificate_to_json_obj(const OuterApprox& a, const std::vector<std::string>& var_names) {
  std::vector<std::string> local_names;
  for (int v : a.vars) local_names.push_back(var_names[static_cast<std::size_t>(v)]);
  return json{{"subsystem", a.subsystem_id}, {"vars", local_names},
              {"var_indices", a.vars},       {"kind", to_string(a.kind)},
              {"degree", a.degree},          {"objective", a.objective},
              {"w", a.w.to_string(local_names)}, {"diagnostics", diagnostics_to_json(a.diag)}};
}

}  // namespace

std::string certificate_to_json(const OuterApprox& a, const std::vector<std::string>& var_names) {
  return certificate_to_json_obj(a, var_names).dump(2) + "\n";
}

OuterApprox certificate_from_json(const std::string& text) {
  json j = json::parse(text);
  OuterApprox a;
  a.subsystem_id = j.at("subsystem").get<int>();
  a.vars = j.at("var_indices").get<std::vector<int>>();
  a.kind = set_kind_from_string(j.at("kind").get<std::string>());
  a.degree = j.at("degree").get<int>();
  a.objective = j.at("objective").get<double>();
  std::vector<std::string> local_names = j.at("vars").get<std::vector<std::string>>();
  a.w = Polynomial::parse(j.at("w").get<std::string>(), local_names);
  const auto& d = j.at("diagnostics");
  a.diag.status = d.at("status").get<std::string>();
  a.diag.gap = d.at("gap").get<double>();
  a.diag.primal_infeas = d.at("primal_infeas").get<double>();
  a.diag.dual_infeas = d.at("dual_infeas").get<double>();
  a.diag.identity_residual = d.at("identity_residual").get<double>();
  a.diag.margin = d.at("margin").get<double>();
  a.diag.iterations = d.at("iterations").get<int>();
  return a;
}

std::string glued_to_json(const GluedSet& g, const std::vector<std::string>& var_names) {
  json parts = json::array();
  for (const auto& a : g.parts()) parts.push_back(certificate_to_json_obj(a, var_names));
  json j{{"kind", to_string(g.kind())}, {"parts", parts}};
  return j.dump(2) + "\n";
}

std::string graph_report_json(const SparsityGraph& raw, const CondensedGraph& cond,
                              long omega_value, const Partition& partition,
                              const std::vector<std::string>& names) {
  json nodes = json::array();
  for (int i = 0; i < raw.num_nodes(); ++i) {
    std::vector<std::string> vars;
    for (int v : partition.blocks[static_cast<std::size_t>(i)])
      vars.push_back(names[static_cast<std::size_t>(v)]);
    nodes.push_back(json{{"id", i}, {"weight", raw.weights[static_cast<std::size_t>(i)]},
                         {"vars", vars}});
  }
  json edges = json::array();
  for (int i = 0; i < raw.num_nodes(); ++i)
    for (int j2 : raw.out[static_cast<std::size_t>(i)]) edges.push_back(json::array({i, j2}));

  json cnodes = json::array();
  json pasts = json::array();
  for (int i = 0; i < cond.num_nodes(); ++i) {
    cnodes.push_back(json{{"id", i},
                          {"weight", cond.graph.weights[static_cast<std::size_t>(i)]},
                          {"members", cond.members[static_cast<std::size_t>(i)]}});
    pasts.push_back(json{{"node", i}, {"past", past(cond, i)}});
  }
  json cedges = json::array();
  for (int i = 0; i < cond.num_nodes(); ++i)
    for (int j2 : cond.graph.out[static_cast<std::size_t>(i)])
      cedges.push_back(json::array({i, j2}));

  json j{{"nodes", nodes},
         {"edges", edges},
         {"condensed", json{{"nodes", cnodes}, {"edges", cedges}}},
         {"leafs", leafs(cond)},
         {"pasts", pasts},
         {"omega", omega_value}};
  return j.dump(2) + "\n";
}

std::string decomposition_manifest_json(const Decomposition& dec,
                                        const std::vector<std::string>& names) {
  json subs = json::array();
  for (const auto& s : dec.subsystems) {
    std::vector<std::string> vars;
    for (int v : s.global_indices) vars.push_back(names[static_cast<std::size_t>(v)]);
    subs.push_back(json{{"id", s.id},
                        {"dimension", s.dim()},
                        {"vars", vars},
                        {"blocks", s.block_ids}});
  }
  json j{{"omega", dec.omega},
         {"num_subsystems", dec.subsystems.size()},
         {"leaf_nodes", dec.leaf_nodes},
         {"subsystems", subs}};
  return j.dump(2) + "\n";
}

std::string sample_set_to_csv(const SampleSet& s) {
  std::ostringstream os;
  os << "# " << s.provenance << "\n";
  for (std::size_t i = 0; i < s.points.size(); ++i) {
    for (double c : s.points[i]) os << format_double(c) << ",";
    switch (s.labels[i]) {
      case Label::In: os << "in"; break;
      case Label::Out: os << "out"; break;
      case Label::Unknown: os << "unknown"; break;
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace sparseinv
