#include "sparseinv/sysmodel.hpp"

#include <algorithm>
#include <set>

namespace sparseinv {

int Partition::num_vars() const {
  int n = 0;
  for (const auto& b : blocks) n += static_cast<int>(b.size());
  return n;
}

int Partition::block_of(int var) const {
  for (std::size_t j = 0; j < blocks.size(); ++j)
    for (int v : blocks[j])
      if (v == var) return static_cast<int>(j);
  throw std::out_of_range("Partition::block_of: variable " + std::to_string(var) +
                          " not covered by any block");
}

void Partition::validate() const {
  std::set<int> seen;
  for (const auto& b : blocks) {
    if (b.empty()) throw PartitionError("partition contains an empty block");
    for (int v : b) {
      if (v < 0) throw PartitionError("partition contains a negative index");
      if (!seen.insert(v).second)
        throw PartitionError("partition blocks overlap at variable index " + std::to_string(v));
    }
  }
  const int n = static_cast<int>(seen.size());
  for (int i = 0; i < n; ++i)
    if (!seen.count(i))
      throw PartitionError("partition does not cover variable index " + std::to_string(i));
}

Partition Partition::singletons(int n) {
  Partition p;
  p.blocks.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) p.blocks.push_back({i});
  return p;
}

std::vector<std::string> SystemDef::names_or_default() const {
  if (!var_names.empty()) return var_names;
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(num_vars()));
  for (int i = 0; i < num_vars(); ++i) names.push_back("x" + std::to_string(i + 1));
  return names;
}

void SystemDef::validate() const {
  const int n = num_vars();
  if (f.num_vars() != n)
    throw std::invalid_argument("SystemDef: vector field must have n components over n variables");
  partition.validate();
  if (partition.num_vars() != n)
    throw PartitionError("SystemDef: partition covers " + std::to_string(partition.num_vars()) +
                         " variables, system has " + std::to_string(n));
  if (static_cast<int>(constraint_blocks.size()) != partition.num_blocks())
    throw std::invalid_argument("SystemDef: expected one constraint block per partition block");
  if (target_blocks && static_cast<int>(target_blocks->size()) != partition.num_blocks())
    throw std::invalid_argument("SystemDef: expected one target block per partition block");
  for (int j = 0; j < partition.num_blocks(); ++j) {
    const auto& cb = constraint_blocks[static_cast<std::size_t>(j)];
    if (cb.var_indices != partition.blocks[static_cast<std::size_t>(j)])
      throw std::invalid_argument("SystemDef: constraint block " + std::to_string(j) +
                                  " is not aligned with partition block " + std::to_string(j));
    if (cb.box && cb.box->size() != cb.var_indices.size())
      throw std::invalid_argument("SystemDef: box of block " + std::to_string(j) +
                                  " has wrong arity");
  }
  if (!var_names.empty() && static_cast<int>(var_names.size()) != n)
    throw std::invalid_argument("SystemDef: variable name list length mismatch");
}

std::vector<double> Subsystem::project(std::span<const double> x_global) const {
  std::vector<double> out(global_indices.size());
  for (std::size_t i = 0; i < global_indices.size(); ++i)
    out[i] = x_global[static_cast<std::size_t>(global_indices[i])];
  return out;
}

std::vector<Interval> Subsystem::full_box() const {
  std::vector<Interval> box(global_indices.size());
  for (const auto& cb : constraint_blocks) {
    if (!cb.box)
      throw std::runtime_error("Subsystem::full_box: a constraint block has no interval bounds");
    for (std::size_t i = 0; i < cb.var_indices.size(); ++i)
      box[static_cast<std::size_t>(cb.var_indices[i])] = (*cb.box)[i];
  }
  return box;
}

bool is_subsystem(const SystemDef& sys, const std::vector<int>& index_set) {
  const int n = sys.num_vars();
  std::vector<char> in(static_cast<std::size_t>(n), 0);
  for (int v : index_set) {
    if (v < 0 || v >= n) throw std::out_of_range("is_subsystem: index out of range");
    in[static_cast<std::size_t>(v)] = 1;
  }
  for (int i = 0; i < n; ++i) {
    if (!in[static_cast<std::size_t>(i)]) continue;
    for (int dep : sys.f[static_cast<std::size_t>(i)].support())
      if (!in[static_cast<std::size_t>(dep)]) return false;
  }
  return true;
}

namespace {

SemialgebraicBlock remap_block(const SemialgebraicBlock& b, int local_n,
                               const std::vector<int>& var_map) {
  SemialgebraicBlock out;
  out.var_indices.reserve(b.var_indices.size());
  for (int v : b.var_indices) out.var_indices.push_back(var_map[static_cast<std::size_t>(v)]);
  out.inequalities.reserve(b.inequalities.size());
  for (const auto& p : b.inequalities) out.inequalities.push_back(p.remap(local_n, var_map));
  out.box = b.box;
  return out;
}

}  // namespace

Subsystem project_subsystem(const SystemDef& sys, const std::vector<int>& index_set) {
  const int n = sys.num_vars();
  std::vector<int> sorted = index_set;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::vector<char> in(static_cast<std::size_t>(n), 0);
  for (int v : sorted) {
    if (v < 0 || v >= n) throw std::out_of_range("project_subsystem: index out of range");
    in[static_cast<std::size_t>(v)] = 1;
  }

  // block alignment first (structural precondition), then closure
  std::vector<int> block_ids;
  for (int j = 0; j < sys.partition.num_blocks(); ++j) {
    const auto& blk = sys.partition.blocks[static_cast<std::size_t>(j)];
    const bool any = std::any_of(blk.begin(), blk.end(),
                                 [&](int v) { return in[static_cast<std::size_t>(v)]; });
    const bool all = std::all_of(blk.begin(), blk.end(),
                                 [&](int v) { return in[static_cast<std::size_t>(v)]; });
    if (any && !all)
      throw PartitionError("project_subsystem: index set splits partition block " +
                           std::to_string(j));
    if (all) block_ids.push_back(j);
  }

  for (int i : sorted)
    for (int dep : sys.f[static_cast<std::size_t>(i)].support())
      if (!in[static_cast<std::size_t>(dep)])
        throw ClosureError("project_subsystem: not a subsystem; f[" +
                           sys.names_or_default()[static_cast<std::size_t>(i)] +
                           "] depends on excluded variable " +
                           sys.names_or_default()[static_cast<std::size_t>(dep)]);

  const int local_n = static_cast<int>(sorted.size());
  std::vector<int> var_map(static_cast<std::size_t>(n), -1);
  for (int i = 0; i < local_n; ++i)
    var_map[static_cast<std::size_t>(sorted[static_cast<std::size_t>(i)])] = i;

  Subsystem sub;
  sub.global_indices = sorted;
  sub.block_ids = block_ids;
  sub.horizon = sys.horizon;
  const auto names = sys.names_or_default();
  for (int g : sorted) sub.var_names.push_back(names[static_cast<std::size_t>(g)]);
  for (int g : sorted) sub.f.push_back(sys.f[static_cast<std::size_t>(g)].remap(local_n, var_map));
  for (int j : block_ids) {
    std::vector<int> local_block;
    for (int v : sys.partition.blocks[static_cast<std::size_t>(j)])
      local_block.push_back(var_map[static_cast<std::size_t>(v)]);
    sub.partition.blocks.push_back(std::move(local_block));
    sub.constraint_blocks.push_back(
        remap_block(sys.constraint_blocks[static_cast<std::size_t>(j)], local_n, var_map));
  }
  if (sys.target_blocks) {
    sub.target_blocks.emplace();
    for (int j : block_ids)
      sub.target_blocks->push_back(
          remap_block((*sys.target_blocks)[static_cast<std::size_t>(j)], local_n, var_map));
  }
  return sub;
}

Subsystem subsystem_from_blocks(const SystemDef& sys, const std::vector<int>& block_ids) {
  std::vector<int> idx;
  for (int j : block_ids) {
    if (j < 0 || j >= sys.partition.num_blocks())
      throw std::out_of_range("subsystem_from_blocks: block id out of range");
    const auto& b = sys.partition.blocks[static_cast<std::size_t>(j)];
    idx.insert(idx.end(), b.begin(), b.end());
  }
  return project_subsystem(sys, idx);
}

Subsystem whole_system(const SystemDef& sys) {
  std::vector<int> all(static_cast<std::size_t>(sys.partition.num_blocks()));
  for (int j = 0; j < sys.partition.num_blocks(); ++j) all[static_cast<std::size_t>(j)] = j;
  Subsystem sub = subsystem_from_blocks(sys, all);
  sub.id = 0;
  return sub;
}

bool validate_product_constraints(const SystemDef& sys, std::vector<std::string>* diagnostics) {
  bool ok = true;
  const auto names = sys.names_or_default();
  auto check = [&](const std::vector<SemialgebraicBlock>& blocks, const char* what) {
    for (std::size_t j = 0; j < blocks.size(); ++j) {
      std::set<int> allowed(blocks[j].var_indices.begin(), blocks[j].var_indices.end());
      for (const auto& p : blocks[j].inequalities) {
        for (int v : p.support()) {
          if (!allowed.count(v)) {
            ok = false;
            if (diagnostics)
              diagnostics->push_back(std::string(what) + " inequality \"" +
                                     p.to_string(names) + "\" of block " + std::to_string(j) +
                                     " reaches across blocks via variable " +
                                     names[static_cast<std::size_t>(v)]);
          }
        }
      }
    }
  };
  check(sys.constraint_blocks, "constraint");
  if (sys.target_blocks) check(*sys.target_blocks, "target");
  return ok;
}

}  // namespace sparseinv
