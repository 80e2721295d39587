#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "sparseinv/decompose.hpp"
#include "sparseinv/graph.hpp"
#include "sparseinv/jsonio.hpp"
#include "sparseinv/oracle.hpp"
#include "sparseinv/sdp.hpp"
#include "sparseinv/sos.hpp"

namespace py = pybind11;
using namespace sparseinv;

namespace {

std::vector<double> to_vec(const py::sequence& seq) {
  std::vector<double> v;
  v.reserve(seq.size());
  for (auto item : seq) v.push_back(item.cast<double>());
  return v;
}

OuterApprox solve_program(const SosProgram& prog, double tol) {
  SolverOptions opts;
  opts.tol = tol;
  SdpProblem sdp = to_standard_form(prog);
  SdpSolution sol = solve(sdp, opts);
  CertificateBundle bundle = extract_certificate(prog, sdp, sol);
  return bundle.certs.front();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "sparse decomposition of polynomial dynamical systems: graph analysis, "
            "per-subsystem SOS relaxations and trajectory oracles";

  py::class_<Polynomial>(m, "Polynomial")
      .def_static("parse", &Polynomial::parse, py::arg("text"), py::arg("var_names"))
      .def_static("constant", &Polynomial::constant)
      .def_static("variable", &Polynomial::variable)
      .def_property_readonly("num_vars", &Polynomial::num_vars)
      .def("degree", &Polynomial::degree)
      .def("eval", [](const Polynomial& p, const py::sequence& x) { return p.eval(to_vec(x)); })
      .def("partial", &Polynomial::partial)
      .def("support", [](const Polynomial& p) {
        const auto s = p.support();
        return std::vector<int>(s.begin(), s.end());
      })
      .def("__add__", [](const Polynomial& a, const Polynomial& b) { return a + b; })
      .def("__sub__", [](const Polynomial& a, const Polynomial& b) { return a - b; })
      .def("__mul__", [](const Polynomial& a, const Polynomial& b) { return a * b; })
      .def("__rmul__", [](const Polynomial& a, double s) { return a * s; })
      .def("__str__", [](const Polynomial& p) { return p.to_string(); })
      .def("to_string", &Polynomial::to_string, py::arg("names") = std::vector<std::string>{});

  m.def("lie_derivative",
        [](const Polynomial& v, const std::vector<Polynomial>& f, bool time_augmented) {
          return lie_derivative(v, PolyVector(f), time_augmented);
        },
        py::arg("v"), py::arg("f"), py::arg("time_augmented") = false);

  py::class_<SystemDef>(m, "SystemDef")
      .def_property_readonly("num_vars", &SystemDef::num_vars)
      .def_property_readonly("var_names", &SystemDef::names_or_default)
      .def_property_readonly("num_blocks",
                             [](const SystemDef& s) { return s.partition.num_blocks(); })
      .def_property_readonly("horizon", [](const SystemDef& s) { return s.horizon; });

  m.def("load_system", &parse_system, py::arg("path"));
  m.def("load_system_text", &parse_system_text, py::arg("json_text"),
        py::arg("origin") = "<string>");
  m.def("is_subsystem", &is_subsystem);
  m.def("validate_product_constraints",
        [](const SystemDef& sys) { return validate_product_constraints(sys); });

  py::class_<Subsystem>(m, "Subsystem")
      .def_property_readonly("id", [](const Subsystem& s) { return s.id; })
      .def_property_readonly("dim", &Subsystem::dim)
      .def_property_readonly("global_indices",
                             [](const Subsystem& s) { return s.global_indices; })
      .def_property_readonly("var_names", [](const Subsystem& s) { return s.var_names; });
  m.def("project_subsystem", &project_subsystem);
  m.def("whole_system", &whole_system);

  m.def("graph_summary", [](const SystemDef& sys) {
    SparsityGraph g = build_graph(sys);
    CondensedGraph c = condense(g);
    py::dict d;
    d["weights"] = g.weights;
    py::list edges;
    for (int i = 0; i < g.num_nodes(); ++i)
      for (int j : g.out[static_cast<std::size_t>(i)]) edges.append(py::make_tuple(i, j));
    d["edges"] = edges;
    d["leafs"] = leafs(c);
    py::dict pasts;
    for (int i = 0; i < c.num_nodes(); ++i)
      pasts[py::int_(i)] = past(c, i);
    d["pasts"] = pasts;
    d["omega"] = omega(c);
    return d;
  });
  m.def("minimal_factorization",
        [](const std::vector<Polynomial>& constraints, int num_vars) {
          return minimal_factorization(constraints, num_vars).blocks;
        });

  py::class_<Decomposition>(m, "Decomposition")
      .def_property_readonly("omega", [](const Decomposition& d) { return d.omega; })
      .def_property_readonly("subsystems",
                             [](const Decomposition& d) { return d.subsystems; });
  m.def("decouple", &decouple);

  py::class_<SolveDiagnostics>(m, "SolveDiagnostics")
      .def_readonly("status", &SolveDiagnostics::status)
      .def_readonly("gap", &SolveDiagnostics::gap)
      .def_readonly("identity_residual", &SolveDiagnostics::identity_residual)
      .def_readonly("margin", &SolveDiagnostics::margin)
      .def_readonly("iterations", &SolveDiagnostics::iterations);

  py::class_<OuterApprox>(m, "OuterApprox")
      .def_readonly("subsystem_id", &OuterApprox::subsystem_id)
      .def_readonly("vars", &OuterApprox::vars)
      .def_readonly("degree", &OuterApprox::degree)
      .def_readonly("objective", &OuterApprox::objective)
      .def_readonly("diag", &OuterApprox::diag)
      .def_property_readonly("w_str", [](const OuterApprox& a) { return a.w.to_string(); })
      .def("value", [](const OuterApprox& a, const py::sequence& x) { return a.value(to_vec(x)); })
      .def("member",
           [](const OuterApprox& a, const py::sequence& x, double tol) {
             return a.member_raw(to_vec(x), tol);
           },
           py::arg("x"), py::arg("tol") = 0.0);

  m.def("solve_roa",
        [](const Subsystem& sub, double T, int k, double tol) {
          return solve_program(build_roa_program(sub, T, k), tol);
        },
        py::arg("subsystem"), py::arg("T"), py::arg("k"), py::arg("tol") = 1e-8);
  m.def("solve_mpi",
        [](const Subsystem& sub, double beta, int k, double tol) {
          return solve_program(build_mpi_program(sub, beta, k), tol);
        },
        py::arg("subsystem"), py::arg("beta"), py::arg("k"), py::arg("tol") = 1e-8);
  m.def("solve_ga",
        [](const Subsystem& sub, double beta1, double beta2, int k, double tol) {
          return solve_program(build_ga_program(sub, beta1, beta2, k), tol);
        },
        py::arg("subsystem"), py::arg("beta1"), py::arg("beta2"), py::arg("k"),
        py::arg("tol") = 1e-8);

  py::class_<GluedSet>(m, "GluedSet")
      .def("member",
           [](const GluedSet& g, const py::sequence& x, double tol) {
             return g.member(to_vec(x), tol);
           },
           py::arg("x"), py::arg("tol") = 0.0);
  m.def("glue", [](const std::vector<OuterApprox>& approxs, const SystemDef& sys) {
    Decomposition dec = decouple(sys);
    return glue(approxs, sys, dec);
  });
  m.def("solve_all",
        [](const SystemDef& sys, const std::string& kind, int k, double beta, double tol) {
          Decomposition dec = decouple(sys);
          PipelineOptions opts;
          opts.kind = set_kind_from_string(kind);
          opts.degree = k;
          opts.beta = beta;
          opts.solver_tol = tol;
          PipelineResult res = solve_all_subsystems(sys, dec, opts);
          return py::make_tuple(res.certificates, res.any_fallback);
        },
        py::arg("sys"), py::arg("kind"), py::arg("k"), py::arg("beta") = 1.0,
        py::arg("tol") = 1e-8);

  py::class_<Trajectory>(m, "Trajectory")
      .def_property_readonly("times", [](const Trajectory& t) { return t.times; })
      .def_property_readonly("states", [](const Trajectory& t) { return t.states; })
      .def_property_readonly("exited",
                             [](const Trajectory& t) {
                               return t.outcome == Trajectory::Outcome::exited;
                             })
      .def_property_readonly("failed",
                             [](const Trajectory& t) {
                               return t.outcome == Trajectory::Outcome::failed;
                             })
      .def_property_readonly("exit_time", [](const Trajectory& t) { return t.exit_time; })
      .def_property_readonly("final_state", [](const Trajectory& t) { return t.final_state(); });

  m.def("integrate",
        [](const std::vector<Polynomial>& f, const py::sequence& x0, double t_end, double tol) {
          IntegrateOptions opts;
          opts.tol = tol;
          return integrate(PolyVector(f), to_vec(x0), t_end, opts);
        },
        py::arg("f"), py::arg("x0"), py::arg("t_end"), py::arg("tol") = 1e-9);

  m.def("estimate_mpi",
        [](const Subsystem& sub, double horizon, int points_per_dim, int mc_samples,
           std::uint64_t seed) {
          GridSpec spec;
          spec.points_per_dim = points_per_dim;
          spec.mc_samples = mc_samples;
          spec.seed = seed;
          SampleSet s = estimate_mpi(sub, horizon, spec);
          py::list labels;
          for (Label l : s.labels)
            labels.append(l == Label::In ? "in" : (l == Label::Out ? "out" : "unknown"));
          return py::make_tuple(s.points, labels);
        },
        py::arg("subsystem"), py::arg("horizon"), py::arg("points_per_dim") = 21,
        py::arg("mc_samples") = 0, py::arg("seed") = 0);

  m.def("dlambda_estimate",
        [](const std::function<bool(std::vector<double>)>& a,
           const std::function<bool(std::vector<double>)>& b,
           const std::vector<std::pair<double, double>>& box, int n, std::uint64_t seed) {
          std::vector<Interval> bx;
          for (const auto& [lo, hi] : box) bx.push_back({lo, hi});
          auto est = dlambda_estimate(
              [&](std::span<const double> x) { return a(std::vector<double>(x.begin(), x.end())); },
              [&](std::span<const double> x) { return b(std::vector<double>(x.begin(), x.end())); },
              bx, n, seed);
          return py::make_tuple(est.value, est.ci_lo, est.ci_hi);
        });
}
