#pragma once

#include <string>
#include <vector>

#include "sparseinv/decompose.hpp"
#include "sparseinv/oracle.hpp"
#include "sparseinv/sysmodel.hpp"

namespace sparseinv {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Reads the JSON system format:
///   variables: ["x1", ...]                     (required)
///   dynamics:  ["2*x2", ...]                   (required, one per variable)
///   blocks:    [["x1","x2"], ...]              (optional; auto-partition when absent)
///   constraints: per-block list of {box: [[lo,hi],...] | [lo,hi], inequalities: [...]}
///                or a single global object of the same shape when blocks are absent
///   target:    same shape as constraints       (optional)
///   horizon:   number                          (optional)
///   metadata:  free-form                       (optional; section_fix is honored)
/// Cross-block constraints and uncovered variables are rejected with context.
SystemDef parse_system(const std::string& path);
SystemDef parse_system_text(const std::string& json_text, const std::string& origin = "<string>");

/// Section anchors from metadata.section_fix, as (variable name, value) pairs.
std::vector<std::pair<std::string, double>> system_section_fix(const std::string& path);

// --- artifact writers / readers ---

std::string certificate_to_json(const OuterApprox& a, const std::vector<std::string>& var_names);
OuterApprox certificate_from_json(const std::string& text);

std::string glued_to_json(const GluedSet& g, const std::vector<std::string>& var_names);

std::string graph_report_json(const SparsityGraph& raw, const CondensedGraph& cond, long omega_value,
                              const Partition& partition, const std::vector<std::string>& names);

std::string decomposition_manifest_json(const Decomposition& dec,
                                        const std::vector<std::string>& names);

std::string sample_set_to_csv(const SampleSet& s);

void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

}  // namespace sparseinv
