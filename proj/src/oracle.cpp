#include "sparseinv/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sparseinv {

ConstraintSet::ConstraintSet(std::vector<SemialgebraicBlock> blocks) : blocks_(std::move(blocks)) {}

ConstraintSet ConstraintSet::from_subsystem_constraints(const Subsystem& sub) {
  return ConstraintSet(sub.constraint_blocks);
}

ConstraintSet ConstraintSet::from_subsystem_targets(const Subsystem& sub) {
  if (!sub.target_blocks) throw std::runtime_error("ConstraintSet: subsystem has no target set");
  return ConstraintSet(*sub.target_blocks);
}

double ConstraintSet::margin(std::span<const double> x) const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& b : blocks_) {
    if (b.box) {
      for (std::size_t i = 0; i < b.var_indices.size(); ++i) {
        const double v = x[static_cast<std::size_t>(b.var_indices[i])];
        m = std::min(m, v - (*b.box)[i].lo);
        m = std::min(m, (*b.box)[i].hi - v);
      }
    }
    for (const auto& p : b.inequalities) m = std::min(m, p.eval(x));
  }
  return m;
}

namespace {

// Dormand-Prince 5(4) tableau (Hairer-Norsett-Wanner, DOPRI5).
constexpr double kC[7] = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
constexpr double kA[7][6] = {
    {},
    {1.0 / 5},
    {3.0 / 40, 9.0 / 40},
    {44.0 / 45, -56.0 / 15, 32.0 / 9},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
    {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84},
};
// embedded 4th-order weights
constexpr double kB4[7] = {5179.0 / 57600, 0.0,           7571.0 / 16695, 393.0 / 640,
                           -92097.0 / 339200, 187.0 / 2100, 1.0 / 40};
// dense-output quintic coefficients
constexpr double kD[7] = {-12715105075.0 / 11282082432.0,
                          0.0,
                          87487479700.0 / 32700410799.0,
                          -10690763975.0 / 1880347072.0,
                          701980252875.0 / 199316789632.0,
                          -1453857185.0 / 822651844.0,
                          69997945.0 / 29380423.0};

struct DenseStep {
  // continuous extension over one accepted step [t0, t0+h]
  std::vector<double> r1, r2, r3, r4, r5;
  double t0 = 0.0, h = 0.0;

  void eval(double theta, std::vector<double>& out) const {
    const double th1 = 1.0 - theta;
    for (std::size_t i = 0; i < r1.size(); ++i)
      out[i] = r1[i] + theta * (r2[i] + th1 * (r3[i] + theta * (r4[i] + th1 * r5[i])));
  }
};

class FieldEval {
 public:
  explicit FieldEval(const PolyVector& f) : f_(f) {}
  void operator()(std::span<const double> y, std::span<double> dy) const {
    for (std::size_t i = 0; i < f_.size(); ++i) dy[i] = f_[i].eval(y);
  }

 private:
  const PolyVector& f_;
};

}  // namespace

Trajectory integrate(const PolyVector& f, std::span<const double> x0, double t_end,
                     const IntegrateOptions& opts) {
  const std::size_t n = f.size();
  if (x0.size() != n) throw std::invalid_argument("integrate: initial state dimension mismatch");
  if (opts.tol <= 0.0) throw std::invalid_argument("integrate: tolerance must be positive");

  FieldEval rhs(f);
  Trajectory traj;
  std::vector<double> y(x0.begin(), x0.end());
  double t = 0.0;
  traj.times.push_back(t);
  traj.states.push_back(y);

  if (opts.stay_in && !opts.stay_in->inside(y, opts.boundary_tol)) {
    traj.outcome = Trajectory::Outcome::exited;
    traj.exit_time = 0.0;
    return traj;
  }
  if (t_end <= 0.0) return traj;

  std::vector<std::vector<double>> k(7, std::vector<double>(n));
  std::vector<double> ytmp(n), ynew(n);
  rhs(y, k[0]);

  // initial step from the scale of f at x0
  double dnorm = 0.0, ynorm = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    dnorm = std::max(dnorm, std::abs(k[0][i]));
    ynorm = std::max(ynorm, std::abs(y[i]));
  }
  double h = (dnorm > 1e-12) ? std::min(0.1 * (1.0 + ynorm) / dnorm, t_end) : t_end * 0.01;
  if (opts.max_step > 0.0) h = std::min(h, opts.max_step);
  h = std::min(h, t_end);

  const double hmin_floor = 1e-14;
  int consecutive_rejects = 0;

  while (t < t_end) {
    if (h < hmin_floor * std::max(1.0, std::abs(t))) {
      traj.outcome = Trajectory::Outcome::failed;  // step-size underflow (stiffness)
      return traj;
    }
    h = std::min(h, t_end - t);

    for (int s = 1; s < 7; ++s) {
      for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int j = 0; j < s; ++j) acc += kA[s][j] * k[static_cast<std::size_t>(j)][i];
        ytmp[i] = y[i] + h * acc;
      }
      rhs(ytmp, k[static_cast<std::size_t>(s)]);
    }
    // 5th-order solution; its weights are row 7 of A (FSAL) and skip k7
    for (std::size_t i = 0; i < n; ++i) {
      double acc5 = 0.0;
      for (int j = 0; j < 6; ++j) acc5 += kA[6][j] * k[static_cast<std::size_t>(j)][i];
      ynew[i] = y[i] + h * acc5;
    }
    // k7 = f(t+h, ynew), needed by the error estimate, dense output and FSAL
    rhs(ynew, k[6]);
    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double acc5 = 0.0, acc4 = 0.0;
      for (int j = 0; j < 6; ++j) acc5 += kA[6][j] * k[static_cast<std::size_t>(j)][i];
      for (int j = 0; j < 7; ++j) acc4 += kB4[j] * k[static_cast<std::size_t>(j)][i];
      const double e = h * (acc5 - acc4);
      const double sc = opts.tol + opts.tol * std::max(std::abs(y[i]), std::abs(ynew[i]));
      err += (e / sc) * (e / sc);
    }
    err = std::sqrt(err / static_cast<double>(n));

    if (!std::isfinite(err)) {
      h *= 0.2;
      if (++consecutive_rejects > 60) {
        traj.outcome = Trajectory::Outcome::failed;
        return traj;
      }
      continue;
    }

    if (err > 1.0) {
      h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
      if (++consecutive_rejects > 200) {
        traj.outcome = Trajectory::Outcome::failed;
        return traj;
      }
      continue;
    }
    consecutive_rejects = 0;

    // accepted; dense output for event location
    DenseStep dense;
    if (opts.stay_in) {
      dense.t0 = t;
      dense.h = h;
      dense.r1.assign(y.begin(), y.end());
      dense.r2.resize(n);
      dense.r3.resize(n);
      dense.r4.resize(n);
      dense.r5.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        const double ydiff = ynew[i] - y[i];
        const double bspl = h * k[0][i] - ydiff;
        dense.r2[i] = ydiff;
        dense.r3[i] = bspl;
        dense.r4[i] = ydiff - h * k[6][i] - bspl;
        double acc = 0.0;
        for (int j = 0; j < 7; ++j) acc += kD[j] * k[static_cast<std::size_t>(j)][i];
        dense.r5[i] = h * acc;
      }
    }

    const double t_next = t + h;
    bool exited = false;
    if (opts.stay_in && !opts.stay_in->inside(ynew, opts.boundary_tol)) {
      // bisect on the dense output for the first boundary crossing
      double lo = 0.0, hi = 1.0;
      std::vector<double> mid(n);
      while ((hi - lo) * h > opts.exit_refine) {
        const double m = 0.5 * (lo + hi);
        dense.eval(m, mid);
        if (opts.stay_in->inside(mid, opts.boundary_tol))
          lo = m;
        else
          hi = m;
      }
      dense.eval(lo, mid);
      traj.exit_time = t + lo * h;
      traj.times.push_back(traj.exit_time);
      traj.states.push_back(mid);
      traj.outcome = Trajectory::Outcome::exited;
      exited = true;
    }
    if (exited) return traj;

    t = t_next;
    y = ynew;
    std::swap(k[0], k[6]);  // FSAL
    if (opts.record_steps || t >= t_end) {
      traj.times.push_back(t);
      traj.states.push_back(y);
    }

    double factor = 0.9 * std::pow(std::max(err, 1e-10), -0.2);
    factor = std::clamp(factor, 0.2, 5.0);
    h *= factor;
    if (opts.max_step > 0.0) h = std::min(h, opts.max_step);
  }

  if (traj.times.back() != t) {
    traj.times.push_back(t);
    traj.states.push_back(y);
  }
  traj.outcome = Trajectory::Outcome::reached_end;
  return traj;
}

std::size_t SampleSet::count(Label l) const {
  std::size_t c = 0;
  for (Label x : labels)
    if (x == l) ++c;
  return c;
}

std::uint64_t Rng::next_u64() {
  // splitmix64
  state_ += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

double Rng::uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

Rng Rng::stream(std::uint64_t master_seed, std::uint64_t index) {
  Rng mix(master_seed ^ (0xd1342543de82ef95ull * (index + 1)));
  mix.next_u64();
  return mix;
}

std::vector<std::vector<double>> make_points(const std::vector<Interval>& box,
                                             const GridSpec& spec) {
  const std::size_t dim = box.size();
  std::vector<std::optional<double>> pinned(dim);
  for (const auto& [idx, val] : spec.fixed) {
    if (idx < 0 || static_cast<std::size_t>(idx) >= dim)
      throw std::out_of_range("make_points: fixed coordinate out of range");
    pinned[static_cast<std::size_t>(idx)] = val;
  }

  std::vector<std::vector<double>> pts;
  if (spec.mc_samples > 0) {
    Rng rng(spec.seed);
    pts.reserve(static_cast<std::size_t>(spec.mc_samples));
    for (int s = 0; s < spec.mc_samples; ++s) {
      std::vector<double> p(dim);
      for (std::size_t i = 0; i < dim; ++i)
        p[i] = pinned[i] ? *pinned[i] : rng.uniform(box[i].lo, box[i].hi);
      pts.push_back(std::move(p));
    }
    return pts;
  }

  std::vector<std::size_t> free_dims;
  for (std::size_t i = 0; i < dim; ++i)
    if (!pinned[i]) free_dims.push_back(i);
  const int m = spec.points_per_dim;
  if (m < 1) throw std::invalid_argument("make_points: need at least one point per dimension");
  std::size_t total = 1;
  for (std::size_t i = 0; i < free_dims.size(); ++i) total *= static_cast<std::size_t>(m);
  pts.reserve(total);
  std::vector<int> digit(free_dims.size(), 0);
  while (true) {
    std::vector<double> p(dim);
    for (std::size_t i = 0; i < dim; ++i)
      if (pinned[i]) p[i] = *pinned[i];
    for (std::size_t d = 0; d < free_dims.size(); ++d) {
      const Interval& iv = box[free_dims[d]];
      p[free_dims[d]] =
          (m == 1) ? 0.5 * (iv.lo + iv.hi)
                   : iv.lo + (iv.hi - iv.lo) * static_cast<double>(digit[d]) / (m - 1);
    }
    pts.push_back(std::move(p));
    std::size_t d = 0;
    for (; d < digit.size(); ++d) {
      if (++digit[d] < m) break;
      digit[d] = 0;
    }
    if (d == digit.size()) break;
    if (digit.empty()) break;
  }
  return pts;
}

namespace {

std::string provenance_string(const char* what, const GridSpec& spec) {
  std::string s = what;
  if (spec.mc_samples > 0)
    s += " mc n=" + std::to_string(spec.mc_samples) + " seed=" + std::to_string(spec.seed);
  else
    s += " grid " + std::to_string(spec.points_per_dim) + "/dim";
  for (const auto& [i, v] : spec.fixed)
    s += " fix[" + std::to_string(i) + "]=" + format_double(v);
  return s;
}

}  // namespace

SampleSet estimate_roa(const Subsystem& sub, double T, const GridSpec& spec, double tol) {
  if (!sub.target_blocks) throw std::runtime_error("estimate_roa: subsystem has no target set");
  const ConstraintSet X = ConstraintSet::from_subsystem_constraints(sub);
  const ConstraintSet XT = ConstraintSet::from_subsystem_targets(sub);
  SampleSet out;
  out.points = make_points(sub.full_box(), spec);
  out.provenance = provenance_string("roa", spec);
  out.labels.reserve(out.points.size());
  IntegrateOptions opts;
  opts.tol = tol;
  opts.stay_in = &X;
  for (const auto& p : out.points) {
    Trajectory tr = integrate(sub.f, p, T, opts);
    if (tr.outcome == Trajectory::Outcome::failed)
      out.labels.push_back(Label::Unknown);
    else if (tr.outcome == Trajectory::Outcome::exited)
      out.labels.push_back(Label::Out);
    else
      out.labels.push_back(XT.inside(tr.final_state(), 1e-9) ? Label::In : Label::Out);
  }
  return out;
}

SampleSet estimate_mpi(const Subsystem& sub, double horizon, const GridSpec& spec, double tol) {
  if (horizon <= 0.0) throw std::invalid_argument("estimate_mpi: horizon must be positive");
  const ConstraintSet X = ConstraintSet::from_subsystem_constraints(sub);
  SampleSet out;
  out.points = make_points(sub.full_box(), spec);
  out.provenance = provenance_string("mpi", spec);
  out.labels.reserve(out.points.size());
  IntegrateOptions opts;
  opts.tol = tol;
  opts.stay_in = &X;
  for (const auto& p : out.points) {
    Trajectory tr = integrate(sub.f, p, horizon, opts);
    if (tr.outcome == Trajectory::Outcome::failed)
      out.labels.push_back(Label::Unknown);
    else
      out.labels.push_back(tr.outcome == Trajectory::Outcome::reached_end ? Label::In : Label::Out);
  }
  return out;
}

SampleSet estimate_attractor(const Subsystem& sub, double t_burn, double t_sample,
                             const GridSpec& spec, double tol) {
  if (!(t_burn < t_sample))
    throw std::invalid_argument("estimate_attractor: need t_burn < t_sample");
  const ConstraintSet X = ConstraintSet::from_subsystem_constraints(sub);
  SampleSet out;
  out.provenance = provenance_string("attractor", spec);
  IntegrateOptions burn;
  burn.tol = tol;
  burn.stay_in = &X;
  for (const auto& p : make_points(sub.full_box(), spec)) {
    Trajectory tr = integrate(sub.f, p, t_burn, burn);
    if (tr.outcome != Trajectory::Outcome::reached_end) continue;  // did not survive burn-in
    IntegrateOptions rec = burn;
    rec.record_steps = true;
    Trajectory tail = integrate(sub.f, tr.final_state(), t_sample - t_burn, rec);
    for (std::size_t i = 0; i < tail.states.size(); ++i) {
      out.points.push_back(tail.states[i]);
      out.labels.push_back(Label::In);
    }
    if (tail.outcome == Trajectory::Outcome::failed && !out.labels.empty())
      out.labels.back() = Label::Unknown;
  }
  return out;
}

DlambdaEstimate dlambda_estimate(const MembershipFn& set_a, const MembershipFn& set_b,
                                 const std::vector<Interval>& box, int n_samples,
                                 std::uint64_t seed) {
  if (n_samples < 100) throw std::invalid_argument("dlambda_estimate: need at least 100 samples");
  double volume = 1.0;
  for (const auto& iv : box) volume *= iv.length();
  Rng rng(seed);
  std::vector<double> p(box.size());
  long hits = 0;
  for (int s = 0; s < n_samples; ++s) {
    for (std::size_t i = 0; i < box.size(); ++i) p[i] = rng.uniform(box[i].lo, box[i].hi);
    if (set_a(p) != set_b(p)) ++hits;
  }
  const double freq = static_cast<double>(hits) / n_samples;
  const double se = std::sqrt(std::max(freq * (1.0 - freq), 1e-12) / n_samples);
  DlambdaEstimate est;
  est.value = volume * freq;
  est.ci_lo = volume * std::max(0.0, freq - 1.96 * se);
  est.ci_hi = volume * std::min(1.0, freq + 1.96 * se);
  est.n_samples = n_samples;
  return est;
}

}  // namespace sparseinv
