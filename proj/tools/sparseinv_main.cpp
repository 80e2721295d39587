#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "sparseinv/decompose.hpp"
#include "sparseinv/graph.hpp"
#include "sparseinv/jsonio.hpp"
#include "sparseinv/oracle.hpp"
#include "sparseinv/sdp.hpp"
#include "sparseinv/sos.hpp"

namespace fs = std::filesystem;
using namespace sparseinv;

namespace {

struct CliConfig {
  std::string input;
  std::string out_dir = "out";
  std::string kind = "mpi";
  int degree = 8;
  std::vector<std::string> degree_for;  // "<subsystem>=<k>"
  double time_horizon = -1.0;           // overrides the fixture horizon when >= 0
  double beta = 1.0, beta1 = 1.0, beta2 = 1.0;
  double tol = 1e-8;
  double oracle_horizon = 100.0;
  int grid = 41;
  std::uint64_t seed = 0;
  std::vector<std::string> section;  // "name=value"
  bool improve = false;
  bool validate = false;
};

std::vector<std::pair<int, int>> parse_degree_overrides(const std::vector<std::string>& items) {
  std::vector<std::pair<int, int>> out;
  for (const auto& s : items) {
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("--degree-for expects <subsystem>=<k>, got '" + s + "'");
    out.emplace_back(std::stoi(s.substr(0, eq)), std::stoi(s.substr(eq + 1)));
  }
  return out;
}

std::map<std::string, double> section_anchors(const CliConfig& cfg) {
  std::map<std::string, double> anchors;
  for (const auto& [name, v] : system_section_fix(cfg.input)) anchors[name] = v;
  for (const auto& s : cfg.section) {
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("--section expects name=value, got '" + s + "'");
    anchors[s.substr(0, eq)] = std::stod(s.substr(eq + 1));
  }
  return anchors;
}

std::string out_path(const CliConfig& cfg, const std::string& name) {
  return (fs::path(cfg.out_dir) / name).string();
}

void cmd_graph(const CliConfig& cfg, const SystemDef& sys) {
  const auto names = sys.names_or_default();
  SparsityGraph raw = build_graph(sys);
  CondensedGraph cond = condense(raw);
  write_file(out_path(cfg, "graph_raw.dot"), to_dot(raw, sys.partition, names));
  write_file(out_path(cfg, "graph_condensed.dot"), to_dot(cond, sys.partition, names));
  write_file(out_path(cfg, "graph.json"),
             graph_report_json(raw, cond, omega(cond), sys.partition, names));
  std::cout << "graph: " << raw.num_nodes() << " nodes, condensed to " << cond.num_nodes()
            << ", omega = " << omega(cond) << "\n";
}

Decomposition cmd_decompose(const CliConfig& cfg, const SystemDef& sys) {
  Decomposition dec = decouple(sys);
  write_file(out_path(cfg, "subsystems.json"),
             decomposition_manifest_json(dec, sys.names_or_default()));
  std::cout << "decompose: " << dec.subsystems.size() << " leaf subsystems, dimensions [";
  for (std::size_t i = 0; i < dec.subsystems.size(); ++i)
    std::cout << (i ? ", " : "") << dec.subsystems[i].dim();
  std::cout << "], omega = " << dec.omega << "\n";
  return dec;
}

SystemDef apply_overrides(const CliConfig& cfg, SystemDef sys) {
  if (cfg.time_horizon >= 0.0) sys.horizon = cfg.time_horizon;
  return sys;
}

PipelineOptions pipeline_options(const CliConfig& cfg) {
  PipelineOptions opts;
  opts.kind = set_kind_from_string(cfg.kind);
  opts.degree = cfg.degree;
  opts.degree_overrides = parse_degree_overrides(cfg.degree_for);
  opts.beta = cfg.beta;
  opts.beta1 = cfg.beta1;
  opts.beta2 = cfg.beta2;
  opts.solver_tol = cfg.tol;
  return opts;
}

bool cmd_solve(const CliConfig& cfg, const SystemDef& sys, const Decomposition& dec) {
  PipelineResult res = solve_all_subsystems(sys, dec, pipeline_options(cfg));
  const auto names = sys.names_or_default();
  for (const auto& cert : res.certificates)
    write_file(out_path(cfg, "cert_" + std::to_string(cert.subsystem_id) + ".json"),
               certificate_to_json(cert, names));
  for (const auto& m : res.messages) std::cout << "solve: " << m << "\n";
  return res.any_fallback;
}

std::vector<OuterApprox> load_certificates(const CliConfig& cfg, const Decomposition& dec) {
  std::vector<OuterApprox> certs;
  for (const auto& sub : dec.subsystems) {
    const std::string path = out_path(cfg, "cert_" + std::to_string(sub.id) + ".json");
    if (!fs::exists(path))
      throw std::runtime_error("missing certificate '" + path + "'; run the solve command first");
    certs.push_back(certificate_from_json(read_file(path)));
  }
  return certs;
}

// Grid CSV over two coordinates of a certificate's subsystem; remaining
// coordinates come from section anchors, then box midpoints.
std::string section_csv(const OuterApprox& cert, const Subsystem& sub,
                        const std::map<std::string, double>& anchors, int grid_pts) {
  const auto box = sub.full_box();
  const int dim = sub.dim();
  std::vector<int> free_dims;
  std::vector<double> base(static_cast<std::size_t>(dim));
  for (int i = 0; i < dim; ++i) {
    const auto it = anchors.find(sub.var_names[static_cast<std::size_t>(i)]);
    if (it != anchors.end()) {
      base[static_cast<std::size_t>(i)] = it->second;
    } else {
      base[static_cast<std::size_t>(i)] =
          0.5 * (box[static_cast<std::size_t>(i)].lo + box[static_cast<std::size_t>(i)].hi);
      free_dims.push_back(i);
    }
  }
  while (free_dims.size() > 2) free_dims.erase(free_dims.begin());  // grid the last two

  std::ostringstream os;
  os << "# section of subsystem " << cert.subsystem_id << "; columns:";
  for (int d : free_dims) os << " " << sub.var_names[static_cast<std::size_t>(d)];
  os << " w member\n";
  const int m = grid_pts;
  std::vector<double> p_local = base;
  std::vector<double> p_global(static_cast<std::size_t>(
      1 + *std::max_element(sub.global_indices.begin(), sub.global_indices.end())));
  auto emit = [&]() {
    for (std::size_t i = 0; i < sub.global_indices.size(); ++i)
      p_global[static_cast<std::size_t>(sub.global_indices[i])] = p_local[i];
    const double w = cert.value(p_global);
    for (int d : free_dims) os << format_double(p_local[static_cast<std::size_t>(d)]) << ",";
    os << format_double(w) << "," << (w >= 1.0 ? 1 : 0) << "\n";
  };
  if (free_dims.empty()) {
    emit();
  } else if (free_dims.size() == 1) {
    const auto& iv = box[static_cast<std::size_t>(free_dims[0])];
    for (int a = 0; a < m; ++a) {
      p_local[static_cast<std::size_t>(free_dims[0])] =
          iv.lo + (iv.hi - iv.lo) * a / std::max(1, m - 1);
      emit();
    }
  } else {
    const auto& iv0 = box[static_cast<std::size_t>(free_dims[0])];
    const auto& iv1 = box[static_cast<std::size_t>(free_dims[1])];
    for (int a = 0; a < m; ++a) {
      for (int b = 0; b < m; ++b) {
        p_local[static_cast<std::size_t>(free_dims[0])] =
            iv0.lo + (iv0.hi - iv0.lo) * a / std::max(1, m - 1);
        p_local[static_cast<std::size_t>(free_dims[1])] =
            iv1.lo + (iv1.hi - iv1.lo) * b / std::max(1, m - 1);
        emit();
      }
    }
  }
  return os.str();
}

void cmd_glue(const CliConfig& cfg, const SystemDef& sys, const Decomposition& dec) {
  std::vector<OuterApprox> certs = load_certificates(cfg, dec);
  GluedSet glued = glue(certs, sys, dec);
  write_file(out_path(cfg, "glued.json"), glued_to_json(glued, sys.names_or_default()));
  const auto anchors = section_anchors(cfg);
  for (std::size_t r = 0; r < dec.subsystems.size(); ++r)
    write_file(out_path(cfg, "section_sub" + std::to_string(dec.subsystems[r].id) + ".csv"),
               section_csv(certs[r], dec.subsystems[r], anchors, cfg.grid));
  std::cout << "glue: " << certs.size() << " certificates combined\n";
}

void cmd_improve(const CliConfig& cfg, const SystemDef& sys, const Decomposition& dec) {
  if (set_kind_from_string(cfg.kind) != SetKind::ROA)
    throw std::runtime_error("improve: the sparse improvement program is defined for --kind roa");
  SosProgram prog = build_sparse_roa_program(sys, dec.subsystems, sys.horizon, cfg.degree);
  SdpProblem sdp = to_standard_form(prog);
  SolverOptions sopts;
  sopts.tol = cfg.tol;
  SdpSolution sol = solve(sdp, sopts);
  CertificateBundle bundle = extract_certificate(prog, sdp, sol);
  SparseImprovementSet improve(SetKind::ROA, cfg.degree, bundle.certs, prog.certificate_threshold,
                               sys.constraint_blocks);

  const auto names = sys.names_or_default();
  std::ostringstream parts;
  parts << "{\n  \"kind\": \"roa\",\n  \"threshold\": "
        << format_double(improve.threshold()) << ",\n  \"objective\": "
        << format_double(bundle.objective) << ",\n  \"parts\": [\n";
  for (std::size_t i = 0; i < bundle.certs.size(); ++i)
    parts << (i ? ",\n" : "") << certificate_to_json(bundle.certs[i], names);
  parts << "]\n}\n";
  write_file(out_path(cfg, "improve.json"), parts.str());

  // Monte-Carlo containment summary of S, Y and their intersection
  std::vector<OuterApprox> certs = load_certificates(cfg, dec);
  GluedSet glued = glue(certs, sys, dec);
  IntersectedSet both = intersect_with_sparse_improvement(glued, improve);
  std::vector<Interval> box = whole_system(sys).full_box();
  Rng rng(cfg.seed);
  const int n_mc = 10000;
  int in_s = 0, in_y = 0, in_both = 0;
  std::vector<double> p(box.size());
  for (int s = 0; s < n_mc; ++s) {
    for (std::size_t i = 0; i < box.size(); ++i) p[i] = rng.uniform(box[i].lo, box[i].hi);
    const bool ms = glued.member(p);
    const bool my = improve.member(p);
    in_s += ms;
    in_y += my;
    in_both += (ms && my);
    if ((ms && my) != both.member(p)) throw std::logic_error("intersection membership mismatch");
  }
  std::ostringstream sum;
  sum << "{\n  \"mc_samples\": " << n_mc << ",\n  \"seed\": " << cfg.seed
      << ",\n  \"frac_glued\": " << format_double(in_s / static_cast<double>(n_mc))
      << ",\n  \"frac_improve\": " << format_double(in_y / static_cast<double>(n_mc))
      << ",\n  \"frac_intersection\": " << format_double(in_both / static_cast<double>(n_mc))
      << "\n}\n";
  write_file(out_path(cfg, "intersect_summary.json"), sum.str());
  std::cout << "improve: objective " << format_double(bundle.objective) << ", |S|~"
            << in_s << "/" << n_mc << ", |S cap Y|~" << in_both << "/" << n_mc << "\n";
}

void cmd_validate(const CliConfig& cfg, const SystemDef& sys, const Decomposition& dec) {
  std::vector<OuterApprox> certs = load_certificates(cfg, dec);
  const SetKind kind = certs.empty() ? SetKind::MPI : certs.front().kind;
  std::ostringstream report;
  report << "{\n  \"subsystems\": [\n";
  bool all_sound = true;
  for (std::size_t r = 0; r < dec.subsystems.size(); ++r) {
    const Subsystem& sub = dec.subsystems[r];
    GridSpec spec;
    spec.seed = cfg.seed + r;
    if (sub.dim() <= 3)
      spec.points_per_dim = cfg.grid;
    else
      spec.mc_samples = 4096;
    SampleSet samples;
    switch (kind) {
      case SetKind::ROA:
        samples = estimate_roa(sub, sys.horizon, spec);
        break;
      case SetKind::MPI:
        samples = estimate_mpi(sub, cfg.oracle_horizon, spec);
        break;
      case SetKind::GA:
      case SetKind::WA:
        samples = estimate_attractor(sub, cfg.oracle_horizon * 0.5, cfg.oracle_horizon, spec);
        break;
    }
    write_file(out_path(cfg, "oracle_sub" + std::to_string(sub.id) + ".csv"),
               sample_set_to_csv(samples));
    // soundness: every oracle-in point must lie in the certificate's raw set
    int in_count = 0, violations = 0;
    for (std::size_t i = 0; i < samples.points.size(); ++i) {
      if (samples.labels[i] != Label::In) continue;
      ++in_count;
      std::vector<double> global(static_cast<std::size_t>(sys.num_vars()), 0.0);
      for (std::size_t q = 0; q < sub.global_indices.size(); ++q)
        global[static_cast<std::size_t>(sub.global_indices[q])] = samples.points[i][q];
      if (!certs[r].member_raw(global, 1e-6)) ++violations;
    }
    if (violations > 0) all_sound = false;
    report << (r ? ",\n" : "") << "    {\"id\": " << sub.id << ", \"oracle_in\": " << in_count
           << ", \"violations\": " << violations << ", \"provenance\": \""
           << samples.provenance << "\"}";
    std::cout << "validate: subsystem " << sub.id << ": " << in_count << " oracle-in points, "
              << violations << " certificate violations\n";
  }
  report << "\n  ],\n  \"sound\": " << (all_sound ? "true" : "false") << "\n}\n";
  write_file(out_path(cfg, "oracle_report.json"), report.str());
  if (!all_sound) throw std::runtime_error("validate: oracle found points outside a certificate");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sparse decomposition of polynomial dynamical systems: ROA/MPI/GA outer "
               "approximations via per-subsystem SOS relaxations"};
  app.require_subcommand(1);

  CliConfig cfg;
  app.add_option("--input", cfg.input, "system definition JSON")->required();
  app.add_option("--out", cfg.out_dir, "output directory (default: out)");
  app.add_option("--kind", cfg.kind, "set kind: roa | mpi | ga");
  app.add_option("--degree", cfg.degree, "relaxation degree k (even)");
  app.add_option("--degree-for", cfg.degree_for, "per-subsystem override <subsystem>=<k>");
  app.add_option("--time-horizon", cfg.time_horizon, "ROA horizon T (overrides the fixture)");
  app.add_option("--beta", cfg.beta, "MPI discount factor");
  app.add_option("--beta1", cfg.beta1, "GA forward discount factor");
  app.add_option("--beta2", cfg.beta2, "GA backward discount factor");
  app.add_option("--tol", cfg.tol, "SDP solver tolerance");
  app.add_option("--oracle-horizon", cfg.oracle_horizon, "trajectory oracle horizon");
  app.add_option("--grid", cfg.grid, "grid points per dimension");
  app.add_option("--seed", cfg.seed, "Monte Carlo seed");
  app.add_option("--section", cfg.section, "section anchor name=value (repeatable)");
  app.add_flag("--improve", cfg.improve, "also solve the sparse improvement program (all)");
  app.add_flag("--validate", cfg.validate, "also run the trajectory oracle (all)");

  auto* c_graph = app.add_subcommand("graph", "sparsity graph, condensation, omega");
  auto* c_decomp = app.add_subcommand("decompose", "leaf subsystems and dimensions");
  auto* c_solve = app.add_subcommand("solve", "per-subsystem SOS certificates");
  auto* c_glue = app.add_subcommand("glue", "combine certificates and export sections");
  auto* c_improve = app.add_subcommand("improve", "sparse improvement LP and intersection");
  auto* c_validate = app.add_subcommand("validate", "trajectory-oracle soundness check");
  auto* c_all = app.add_subcommand("all", "full pipeline");

  CLI11_PARSE(app, argc, argv);

  try {
    fs::create_directories(cfg.out_dir);
    SystemDef sys = apply_overrides(cfg, parse_system(cfg.input));
    bool partial = false;

    if (c_graph->parsed()) {
      cmd_graph(cfg, sys);
    } else if (c_decomp->parsed()) {
      cmd_graph(cfg, sys);
      cmd_decompose(cfg, sys);
    } else if (c_solve->parsed()) {
      cmd_graph(cfg, sys);
      Decomposition dec = cmd_decompose(cfg, sys);
      partial = cmd_solve(cfg, sys, dec);
    } else if (c_glue->parsed()) {
      Decomposition dec = decouple(sys);
      cmd_glue(cfg, sys, dec);
    } else if (c_improve->parsed()) {
      Decomposition dec = decouple(sys);
      cmd_improve(cfg, sys, dec);
    } else if (c_validate->parsed()) {
      Decomposition dec = decouple(sys);
      cmd_validate(cfg, sys, dec);
    } else if (c_all->parsed()) {
      cmd_graph(cfg, sys);
      Decomposition dec = cmd_decompose(cfg, sys);
      partial = cmd_solve(cfg, sys, dec);
      cmd_glue(cfg, sys, dec);
      if (cfg.improve) cmd_improve(cfg, sys, dec);
      if (cfg.validate) cmd_validate(cfg, sys, dec);
    }
    return partial ? 2 : 0;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
}
