#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sparseinv/sysmodel.hpp"

namespace sparseinv {

/// Membership test for a product of semialgebraic blocks. margin(x) >= 0 means
/// inside; the margin is the most-violated constraint value (box distances and
/// inequality values), used for exit bisection.
class ConstraintSet {
 public:
  ConstraintSet() = default;
  explicit ConstraintSet(std::vector<SemialgebraicBlock> blocks);
  static ConstraintSet from_subsystem_constraints(const Subsystem& sub);
  static ConstraintSet from_subsystem_targets(const Subsystem& sub);

  bool empty() const { return blocks_.empty(); }
  double margin(std::span<const double> x) const;
  bool inside(std::span<const double> x, double tol = 1e-9) const {
    return margin(x) >= -tol;
  }

 private:
  std::vector<SemialgebraicBlock> blocks_;
};

struct Trajectory {
  enum class Outcome { reached_end, exited, failed };

  std::vector<double> times;
  std::vector<std::vector<double>> states;
  Outcome outcome = Outcome::reached_end;
  double exit_time = 0.0;  // meaningful when outcome == exited

  const std::vector<double>& final_state() const { return states.back(); }
  double final_time() const { return times.back(); }
};

struct IntegrateOptions {
  double tol = 1e-9;            // local error tolerance (absolute and relative)
  const ConstraintSet* stay_in = nullptr;  // exit detection when set
  bool record_steps = false;    // keep every accepted step, not just endpoints
  double max_step = 0.0;        // 0 = unlimited
  double boundary_tol = 1e-9;
  double exit_refine = 1e-9;    // bisection tolerance on the exit time
};

/// Adaptive Dormand-Prince 5(4) integration of x' = f(x) from x0 to t_end.
/// Exit events are located with the method's dense output and bisection.
Trajectory integrate(const PolyVector& f, std::span<const double> x0, double t_end,
                     const IntegrateOptions& opts = {});

enum class Label : std::uint8_t { In, Out, Unknown };

struct SampleSet {
  std::vector<std::vector<double>> points;
  std::vector<Label> labels;
  std::string provenance;

  std::size_t count(Label l) const;
};

/// Sampling plan over a subsystem's box: a full tensor grid (optionally with
/// some coordinates pinned) or seeded Monte Carlo when mc_samples > 0.
struct GridSpec {
  int points_per_dim = 41;
  std::vector<std::pair<int, double>> fixed;  // (local variable index, value)
  int mc_samples = 0;
  std::uint64_t seed = 0;
};

std::vector<std::vector<double>> make_points(const std::vector<Interval>& box, const GridSpec& spec);

/// Labels grid points by the finite-time ROA test: trajectory stays in X on
/// [0, T] and lands in the target set at time T.
SampleSet estimate_roa(const Subsystem& sub, double T, const GridSpec& spec, double tol = 1e-9);

/// Labels points "in" when the trajectory remains in X up to `horizon`
/// (a necessary-condition proxy for the infinite-horizon MPI set).
SampleSet estimate_mpi(const Subsystem& sub, double horizon, const GridSpec& spec, double tol = 1e-9);

/// Post-burn-in trajectory cloud from surviving initial conditions; a heuristic
/// attractor sample (does not distinguish GA from WA).
SampleSet estimate_attractor(const Subsystem& sub, double t_burn, double t_sample,
                             const GridSpec& spec, double tol = 1e-9);

struct DlambdaEstimate {
  double value = 0.0;  // volume-scaled symmetric-difference frequency
  double ci_lo = 0.0;  // 95% confidence interval
  double ci_hi = 0.0;
  int n_samples = 0;
};

using MembershipFn = std::function<bool(std::span<const double>)>;

DlambdaEstimate dlambda_estimate(const MembershipFn& set_a, const MembershipFn& set_b,
                                 const std::vector<Interval>& box, int n_samples,
                                 std::uint64_t seed);

/// Deterministic 53-bit uniform doubles; the project-wide RNG so that sampled
/// artifacts are reproducible across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ull) {}
  std::uint64_t next_u64();
  double uniform01();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  // Decorrelated child stream for task `index`.
  static Rng stream(std::uint64_t master_seed, std::uint64_t index);

 private:
  std::uint64_t state_;
};

}  // namespace sparseinv
