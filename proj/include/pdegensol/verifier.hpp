#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "pdegensol/catalog.hpp"
#include "pdegensol/errors.hpp"
#include "pdegensol/evaluator.hpp"
#include "pdegensol/function_instance.hpp"
#include "pdegensol/jet.hpp"
#include "pdegensol/numeric_config.hpp"

namespace pdegensol {

enum class Verdict { Pass, Fail, Indeterminate };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass:
      return "PASS";
    case Verdict::Fail:
      return "FAIL";
    default:
      return "INDETERMINATE";
  }
}

inline Verdict verdict_from_string(const std::string& s) {
  if (s == "PASS") return Verdict::Pass;
  if (s == "FAIL") return Verdict::Fail;
  if (s == "INDETERMINATE") return Verdict::Indeterminate;
  throw std::invalid_argument("unknown verdict '" + s + "'");
}

/// A concrete member of a family: parameters, function stand-ins, integral
/// base points and the box evaluation points are drawn from.
struct Scenario {
  std::string family_id;
  std::uint64_t seed = 0;
  int attempts = 1;  // sampling attempts until the pre-scan accepted
  std::map<std::string, double> params;
  std::map<std::string, FunctionInstance> functions;
  std::map<std::string, double> bases;
  std::vector<std::pair<double, double>> box;  // per independent variable
  std::vector<std::vector<double>> points;     // filled by the verifier

  bool operator==(const Scenario&) const = default;
};

struct SamplingOptions {
  std::map<std::string, double> fixed_params;  // degenerate-member overrides
  double box_scale = 1.0;                      // multiplies the sampling box
  double base_shift = 0.0;                     // added to variable base points
  int max_attempts = 50;
  double guard_margin = 0.1;        // minimum pre-scan distance to any singularity
  double root_slope_margin = 1e-2;  // minimum |dPhi/dZ| at pre-scan roots
};

struct VerifyConfig {
  int n_scenarios = 5;
  int n_points = 20;
  std::optional<double> tol_rel;  // default: family hint, else 1e-6
  double xcheck_tol = 1e-4;
  std::uint64_t seed = 1;
  int xcheck_points = 2;  // finite-difference cross-checks per scenario
  bool probe_branches = true;
  int threads = 0;  // 0: PDEGENSOL_THREADS or hardware concurrency
  SamplingOptions sampling;
  NumericConfig numeric;
};

inline constexpr double kDefaultTolRel = 1e-6;

struct ResidualSample {
  double abs = 0.0;
  double rel = 0.0;
  double scale = 0.0;         // largest |additive term| of the PDE
  std::vector<double> terms;  // value of every additive term
  double w = 0.0;             // solution value at the point
};

struct WorstPoint {
  int scenario = -1;
  std::vector<double> point;
  double abs = 0.0;
  double rel = 0.0;
  double w = 0.0;
  std::vector<double> terms;

  bool operator==(const WorstPoint&) const = default;
};

struct BranchReport {
  std::string label;
  int points = 0;
  double max_rel_residual = 0.0;
  Verdict verdict = Verdict::Indeterminate;

  bool operator==(const BranchReport&) const = default;
};

struct ScenarioReport {
  int index = 0;
  std::uint64_t seed = 0;
  bool sampling_exhausted = false;
  std::string message;
  int attempts = 0;
  std::map<std::string, double> params;
  int points = 0;
  int resampled = 0;
  int indeterminate = 0;
  int xcheck_points = 0;
  double max_abs_residual = 0.0;
  double max_rel_residual = 0.0;
  double xcheck_max_dev = 0.0;
  long root_solves = 0;
  double max_root_residual = 0.0;
  std::vector<BranchReport> branches;

  bool operator==(const ScenarioReport&) const = default;
};

struct VerificationReport {
  std::string family;
  Verdict verdict = Verdict::Indeterminate;
  double tol_rel = kDefaultTolRel;
  double xcheck_tol = 1e-4;
  std::uint64_t seed = 0;
  int scenarios_run = 0;
  int points = 0;
  int resampled_points = 0;
  int indeterminate_points = 0;
  double max_abs_residual = 0.0;
  double max_rel_residual = 0.0;
  double xcheck_max_dev = 0.0;
  int xcheck_points = 0;
  double max_root_residual = 0.0;
  std::optional<WorstPoint> worst;
  std::vector<ScenarioReport> scenarios;
  double wall_time = 0.0;  // seconds; informational, not serialised

  // Equality over the serialised content (wall_time excluded).
  bool operator==(const VerificationReport& o) const {
    auto key = [](const VerificationReport& r) {
      return std::tie(r.family, r.verdict, r.tol_rel, r.xcheck_tol, r.seed, r.scenarios_run, r.points,
                      r.resampled_points, r.indeterminate_points, r.max_abs_residual, r.max_rel_residual,
                      r.xcheck_max_dev, r.xcheck_points, r.max_root_residual, r.worst, r.scenarios);
    };
    return key(*this) == key(o);
  }
};

namespace detail {

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::mt19937_64 make_rng(std::string_view family, std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t f = fnv1a(family);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(f), static_cast<std::uint32_t>(f >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  // Explicit mapping keeps draws identical across standard libraries.
  double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

inline bool references_point(const Expr& e, const PdeFamily& fam) {
  auto fv = free_variables(e);
  for (const auto& v : fam.independent_vars)
    if (fv.count(v)) return true;
  for (const auto& f : fam.functions)
    if (fv.count(f.name)) return true;
  return false;
}

inline FunctionInstance sample_function(const FunctionSlot& slot, const FunctionHint& hint, std::mt19937_64& rng) {
  const int degree = hint.degree.value_or(slot.arity >= 2 ? 2 : 3);
  const double c = hint.coef.value_or(0.5);
  auto [olo, ohi] = hint.offset.value_or(std::pair{0.5, 1.5});
  const std::size_t count = FunctionInstance::monomials(slot.arity, degree).size();
  std::vector<double> coeffs(count, 0.0);
  for (std::size_t i = 1; i < count; ++i) coeffs[i] = uniform(rng, -c, c);
  FunctionInstance f = FunctionInstance::polynomial(slot.arity, degree, std::move(coeffs), uniform(rng, olo, ohi));
  bool sinusoid_allowed = hint.allow_sinusoid.value_or(true);
  double coin = uniform(rng, 0.0, 1.0);
  if (sinusoid_allowed && coin < 0.5) {
    f.kind = FunctionInstance::Kind::PolynomialSinusoid;
    f.amplitude = uniform(rng, 0.05, 0.2) * c / 0.5;
    f.frequency = uniform(rng, 0.5, 2.0);
    f.phase = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  }
  return f;
}

inline std::vector<std::pair<std::string, double>> named_point(const PdeFamily& fam, const std::vector<double>& p) {
  std::vector<std::pair<std::string, double>> out;
  for (std::size_t i = 0; i < fam.independent_vars.size(); ++i) out.emplace_back(fam.independent_vars[i], p[i]);
  return out;
}

// Pre-scan grid: 4 nodes per axis for up to two variables, 3 otherwise.
inline std::vector<std::vector<double>> scan_grid(const Scenario& s) {
  const std::size_t n = s.box.size();
  const int per = n <= 2 ? 4 : 3;
  std::vector<std::vector<double>> grid{{}};
  for (std::size_t v = 0; v < n; ++v) {
    std::vector<std::vector<double>> next;
    for (const auto& g : grid)
      for (int k = 0; k < per; ++k) {
        auto p = g;
        p.push_back(s.box[v].first + (s.box[v].second - s.box[v].first) * k / (per - 1));
        next.push_back(std::move(p));
      }
    grid = std::move(next);
  }
  return grid;
}

}  // namespace detail

/// Evaluation context bound to one scenario.
inline Evaluator make_evaluator(const PdeFamily& fam, const Scenario& s, const NumericConfig& cfg = {}) {
  Evaluator ev(cfg);
  for (const auto& [k, v] : s.params) ev.bind_parameter(k, v);
  for (const auto& [k, f] : s.functions) ev.bind_function(k, f);
  for (const auto& [k, v] : s.bases) ev.set_base_point(k, v);
  (void)fam;
  return ev;
}

/// Index set carried by solution jets: every partial of total order up to the
/// PDE order for two-variable third-order families, otherwise the partials the
/// PDE references together with their divisors.
inline std::shared_ptr<const IndexSet> solution_index_set(const PdeFamily& fam) {
  const std::size_t n = fam.independent_vars.size();
  if (fam.order >= 3 && n <= 2) return IndexSet::total_degree(n, fam.order);
  return IndexSet::closure(n, fam.derivative_set);
}

/// Draw a scenario for `fam`: parameters from the stated and realness
/// constraints, polynomial (optionally sinusoidal) function stand-ins, and a
/// pre-scan over the box that keeps every guard at least `guard_margin` away.
inline Scenario sample_scenario(const PdeFamily& fam, std::uint64_t seed, const SamplingOptions& opt = {}) {
  const auto& hints = fam.hints;
  std::vector<const Relation*> param_rel, point_rel;
  for (const auto& r : fam.constraints) param_rel.push_back(&r);
  for (const auto& r : hints.requirements)
    (detail::references_point(r.difference, fam) ? point_rel : param_rel).push_back(&r);

  std::string last_reason = "no attempt";
  for (int attempt = 0; attempt < opt.max_attempts; ++attempt) {
    auto rng = detail::make_rng(fam.id, seed, static_cast<std::uint64_t>(attempt));
    Scenario s;
    s.family_id = fam.id;
    s.seed = seed;
    s.attempts = attempt + 1;

    // Parameters: rejection sampling against parameter-only conditions.
    bool params_ok = false;
    for (int tries = 0; tries < 2000 && !params_ok; ++tries) {
      s.params.clear();
      for (const auto& p : fam.parameters) {
        if (auto f = opt.fixed_params.find(p); f != opt.fixed_params.end()) {
          s.params[p] = f->second;
        } else if (auto r = hints.param_ranges.find(p); r != hints.param_ranges.end()) {
          s.params[p] = detail::uniform(rng, r->second.first, r->second.second);
        } else {
          double mag = detail::uniform(rng, 0.3, 2.0);
          s.params[p] = detail::uniform(rng, 0.0, 1.0) < 0.5 ? -mag : mag;
        }
      }
      Evaluator ev;
      for (const auto& [k, v] : s.params) ev.bind_parameter(k, v);
      ev.set_point({});
      params_ok = true;
      for (const Relation* r : param_rel) {
        try {
          // Fixed (degenerate) values are admissible by construction.
          bool fixed_involved = false;
          auto fv = free_variables(r->difference);
          for (const auto& [k, v] : opt.fixed_params) fixed_involved |= fv.count(k) > 0;
          double margin = fixed_involved ? 0.0 : 0.05;
          if (!r->holds(ev.eval_scalar(r->difference), margin)) params_ok = false;
        } catch (const NumericError&) {
          params_ok = false;
        }
        if (!params_ok) break;
      }
    }
    if (!params_ok) {
      last_reason = "parameter constraints could not be satisfied";
      continue;
    }

    for (const auto& slot : fam.functions) {
      FunctionHint h;
      if (auto it = hints.functions.find(slot.name); it != hints.functions.end()) h = it->second;
      s.functions[slot.name] = detail::sample_function(slot, h, rng);
    }

    for (const auto& v : fam.independent_vars) {
      auto range = std::pair{0.2, 1.2};
      if (auto it = hints.box.find(v); it != hints.box.end()) range = it->second;
      s.box.emplace_back(range.first * opt.box_scale, range.second * opt.box_scale);
      s.bases[v] = s.box.back().first + opt.base_shift;
    }
    for (const auto& [k, v] : hints.bases) s.bases[k] = v;

    // Pre-scan: realness conditions first (cheap), then the solution itself.
    Evaluator ev = make_evaluator(fam, s);
    GuardMonitor mon;
    ev.set_monitor(&mon);
    const auto grid = detail::scan_grid(s);
    bool ok = true;
    try {
      for (std::size_t i = 0; i < grid.size() && ok && !point_rel.empty(); ++i) {
        ev.set_point(detail::named_point(fam, grid[i]));
        for (const Relation* r : point_rel) {
          if (!r->holds(ev.eval_scalar(r->difference))) {
            ok = false;
            last_reason = "realness condition '" + r->text + "' violated";
            break;
          }
        }
      }
      mon = GuardMonitor{};
      for (std::size_t i = 0; i < grid.size() && ok; ++i) {
        ev.set_point(detail::named_point(fam, grid[i]));
        if (!std::isfinite(ev.eval_scalar(fam.solution))) {
          ok = false;
          last_reason = "non-finite solution value";
        }
      }
    } catch (const NumericError& e) {
      ok = false;
      last_reason = e.what();
    }
    if (ok && std::min({mon.min_denominator, mon.min_radicand, mon.min_tan_margin}) < opt.guard_margin) {
      ok = false;
      last_reason = "pre-scan guard margin below threshold";
    }
    if (ok && mon.min_root_slope < opt.root_slope_margin) {
      ok = false;
      last_reason = "pre-scan root slope below threshold";
    }
    if (ok) return s;
  }
  throw SamplingExhausted("family " + fam.id + ": no admissible scenario after " +
                          std::to_string(opt.max_attempts) + " attempts (" + last_reason + ")");
}

namespace detail {

// Evaluate pde_lhs with w and its partials pinned to `partials`.
inline ResidualSample residual_from_partials(const PdeFamily& fam, Evaluator& ev, const std::vector<double>& point,
                                             const std::vector<std::pair<MultiIndex, double>>& partials) {
  const std::size_t n = fam.independent_vars.size();
  ev.clear_overrides();
  for (const auto& [a, v] : partials) {
    std::vector<int> orders(n);
    for (std::size_t i = 0; i < n; ++i) orders[i] = a[i];
    ev.override_function(PdeFamily::kUnknown, orders, v);
  }
  ev.set_point(named_point(fam, point));
  ResidualSample r;
  const Expr& lhs = fam.pde_lhs;
  try {
    if (lhs.kind() == Kind::Add) {
      for (const auto& t : lhs.args()) r.terms.push_back(ev.eval_scalar(t));
    } else {
      r.terms.push_back(ev.eval_scalar(lhs));
    }
  } catch (...) {
    ev.clear_overrides();
    throw;
  }
  ev.clear_overrides();
  double sum = 0.0;
  for (double t : r.terms) {
    if (!std::isfinite(t)) throw DomainError("non-finite PDE term");
    sum += t;
    r.scale = std::max(r.scale, std::abs(t));
  }
  r.abs = std::abs(sum);
  r.rel = r.abs / std::max(r.scale, 1e-12);
  for (const auto& [a, v] : partials)
    if (total_order(a) == 0) r.w = v;
  return r;
}

inline std::vector<MultiIndex> required_partials(const PdeFamily& fam) {
  std::vector<MultiIndex> out{MultiIndex{}};
  out.insert(out.end(), fam.derivative_set.begin(), fam.derivative_set.end());
  return out;
}

inline std::vector<std::pair<MultiIndex, double>> jet_partials(const PdeFamily& fam, Evaluator& ev,
                                                               const std::shared_ptr<const IndexSet>& set,
                                                               const std::vector<double>& point) {
  ev.set_point(set, named_point(fam, point));
  Jet j = ev.eval(fam.solution);
  std::vector<std::pair<MultiIndex, double>> out;
  for (const auto& a : required_partials(fam)) out.emplace_back(a, j.partial(a));
  return out;
}

// Step for a finite-difference partial of the given total order; balances
// truncation (after Richardson) against evaluation noise.
inline double fd_step(int total) {
  switch (total) {
    case 1:
      return 1e-3;
    case 2:
      return 3e-3;
    default:
      return 1e-2;
  }
}

/// Central-difference approximation of d^alpha f at `x` with step h, as a
/// tensor product of one-dimensional stencils.
template <class F>
double central_difference(F& f, const std::vector<double>& x, const MultiIndex& alpha, double h) {
  struct Tap {
    int offset;
    double weight;
  };
  auto stencil = [](int k) -> std::vector<Tap> {
    switch (k) {
      case 0:
        return {{0, 1.0}};
      case 1:
        return {{-1, -0.5}, {1, 0.5}};
      case 2:
        return {{-1, 1.0}, {0, -2.0}, {1, 1.0}};
      case 3:
        return {{-2, -0.5}, {-1, 1.0}, {1, -1.0}, {2, 0.5}};
      default:
        throw std::invalid_argument("finite differences support orders up to 3 per variable");
    }
  };
  const std::size_t n = x.size();
  std::vector<std::vector<Tap>> taps(n);
  for (std::size_t i = 0; i < n; ++i) taps[i] = stencil(alpha[i]);
  double total = 0.0;
  std::vector<std::size_t> idx(n, 0);
  while (true) {
    std::vector<double> p = x;
    double w = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      p[i] += taps[i][idx[i]].offset * h;
      w *= taps[i][idx[i]].weight;
    }
    total += w * f(p);
    std::size_t i = 0;
    while (i < n && ++idx[i] == taps[i].size()) idx[i++] = 0;
    if (i == n) break;
  }
  return total / std::pow(h, total_order(alpha));
}

/// Richardson-extrapolated central difference (fourth order in h).
template <class F>
double richardson_difference(F& f, const std::vector<double>& x, const MultiIndex& alpha, double h) {
  double d1 = central_difference(f, x, alpha, h);
  double d2 = central_difference(f, x, alpha, 0.5 * h);
  return (4.0 * d2 - d1) / 3.0;
}

inline NumericConfig tight(NumericConfig cfg) {
  cfg.quad_rel_tol = std::min(cfg.quad_rel_tol, 1e-13);
  cfg.quad_abs_tol = std::min(cfg.quad_abs_tol, 1e-15);
  return cfg;
}

inline double box_width(const Scenario& s) {
  double w = 0.0;
  for (const auto& [lo, hi] : s.box) w = std::max(w, hi - lo);
  return w > 0 ? w : 1.0;
}

inline std::vector<std::pair<MultiIndex, double>> fd_partials(const PdeFamily& fam, const Scenario& s,
                                                              const std::vector<double>& point,
                                                              const NumericConfig& cfg) {
  Evaluator ev = make_evaluator(fam, s, tight(cfg));
  std::map<std::vector<double>, double> cache;
  auto f = [&](const std::vector<double>& p) {
    if (auto it = cache.find(p); it != cache.end()) return it->second;
    ev.set_point(named_point(fam, p));
    double v = ev.eval_scalar(fam.solution);
    cache.emplace(p, v);
    return v;
  };
  std::vector<std::pair<MultiIndex, double>> out;
  const double scale = box_width(s);
  for (const auto& a : required_partials(fam)) {
    int k = total_order(a);
    out.emplace_back(a, k == 0 ? f(point) : richardson_difference(f, point, a, fd_step(k) * scale));
  }
  return out;
}

}  // namespace detail

/// Residual of the claimed solution at `point`: pde_lhs evaluated term by
/// term with w-partials from the solution jet. rel = abs / max(term-scale, 1e-12).
inline ResidualSample residual_at(const PdeFamily& fam, [[maybe_unused]] const Scenario& s, const std::vector<double>& point,
                                  Evaluator& ev, const std::shared_ptr<const IndexSet>& set) {
  auto partials = detail::jet_partials(fam, ev, set, point);
  return detail::residual_from_partials(fam, ev, point, partials);
}

inline ResidualSample residual_at(const PdeFamily& fam, const Scenario& s, const std::vector<double>& point,
                                  const NumericConfig& cfg = {}) {
  Evaluator ev = make_evaluator(fam, s, cfg);
  return residual_at(fam, s, point, ev, solution_index_set(fam));
}

/// Same residual with every w-partial taken from finite differences instead
/// of jets; an independent oracle for the jet engine.
inline ResidualSample residual_fd(const PdeFamily& fam, const Scenario& s, const std::vector<double>& point,
                                  const NumericConfig& cfg = {}) {
  auto partials = detail::fd_partials(fam, s, point, cfg);
  Evaluator ev = make_evaluator(fam, s, cfg);
  return detail::residual_from_partials(fam, ev, point, partials);
}

struct CrosscheckResult {
  double max_dev = 0.0;
  MultiIndex worst{};
  std::vector<std::pair<MultiIndex, std::pair<double, double>>> values;  // alpha -> (jet, fd)
};

/// Compare every partial in the family's derivative set computed by jets with
/// Richardson-extrapolated central differences. Deviations are relative to
/// max(|jet value|, largest |partial| at the point).
inline CrosscheckResult crosscheck_detail(const PdeFamily& fam, const Scenario& s, const std::vector<double>& point,
                                          const NumericConfig& cfg = {}) {
  Evaluator ev = make_evaluator(fam, s, cfg);
  auto jet = detail::jet_partials(fam, ev, solution_index_set(fam), point);
  auto fd = detail::fd_partials(fam, s, point, cfg);
  CrosscheckResult r;
  double norm = 0.0;
  for (const auto& [a, v] : jet) norm = std::max(norm, std::abs(v));
  for (std::size_t i = 0; i < jet.size(); ++i) {
    double dev = std::abs(jet[i].second - fd[i].second) / std::max({std::abs(jet[i].second), norm, 1e-300});
    if (norm == 0.0) dev = std::abs(fd[i].second) > 1e-12 ? 1.0 : 0.0;
    r.values.push_back({jet[i].first, {jet[i].second, fd[i].second}});
    if (dev > r.max_dev || (i == 0 && dev >= r.max_dev)) {
      r.max_dev = dev;
      r.worst = jet[i].first;
    }
  }
  return r;
}

inline double crosscheck_derivatives(const PdeFamily& fam, const Scenario& s, const std::vector<double>& point,
                                     const NumericConfig& cfg = {}) {
  return crosscheck_detail(fam, s, point, cfg).max_dev;
}

inline bool contains_kind(const Expr& e, Kind k) {
  if (e.kind() == k) return true;
  for (const auto& a : e.args())
    if (contains_kind(a, k)) return true;
  return false;
}

namespace detail {

inline double effective_tol(const PdeFamily& fam, const VerifyConfig& cfg) {
  if (cfg.tol_rel) return *cfg.tol_rel;
  return fam.hints.tol.value_or(kDefaultTolRel);
}

// Residual differences below this are indistinguishable from evaluation noise.
inline double noise_floor(const NumericConfig& cfg) { return 100.0 * cfg.quad_rel_tol; }

inline Verdict decide(double max_rel, bool xcheck_ok, bool complete, double tol, double floor) {
  if (xcheck_ok && complete && max_rel <= tol) return Verdict::Pass;
  if (xcheck_ok && max_rel > std::max(tol, floor)) return Verdict::Fail;
  return Verdict::Indeterminate;
}

inline std::vector<double> draw_point(const Scenario& s, std::mt19937_64& rng) {
  std::vector<double> p;
  for (const auto& [lo, hi] : s.box) {
    double margin = 0.05 * (hi - lo);
    p.push_back(uniform(rng, lo + margin, hi - margin));
  }
  return p;
}

struct ScenarioRun {
  ScenarioReport report;
  std::optional<WorstPoint> worst;
};

inline ScenarioRun run_scenario(const PdeFamily& fam, const VerifyConfig& cfg, int index, double tol) {
  ScenarioRun run;
  ScenarioReport& rep = run.report;
  rep.index = index;
  rep.seed = cfg.seed;
  Scenario s;
  try {
    s = sample_scenario(fam, cfg.seed * 1000003ULL + static_cast<std::uint64_t>(index), cfg.sampling);
  } catch (const SamplingExhausted& e) {
    rep.sampling_exhausted = true;
    rep.message = e.what();
    return run;
  }
  rep.seed = s.seed;
  rep.attempts = s.attempts;
  rep.params = s.params;

  const auto set = solution_index_set(fam);
  Evaluator ev = make_evaluator(fam, s, cfg.numeric);
  auto rng = make_rng(fam.id, s.seed, 0xB0B0ULL);
  const int max_draws = 4 * cfg.n_points + 20;
  for (int draw = 0; draw < max_draws && rep.points < cfg.n_points; ++draw) {
    std::vector<double> p = draw_point(s, rng);
    try {
      ResidualSample r = residual_at(fam, s, p, ev, set);
      ++rep.points;
      s.points.push_back(p);
      rep.max_abs_residual = std::max(rep.max_abs_residual, r.abs);
      if (!run.worst || r.rel > run.worst->rel) run.worst = WorstPoint{index, p, r.abs, r.rel, r.w, r.terms};
      rep.max_rel_residual = std::max(rep.max_rel_residual, r.rel);
    } catch (const DomainError&) {
      ++rep.resampled;
    } catch (const NumericError& e) {
      ++rep.indeterminate;
      if (rep.message.empty()) rep.message = e.what();
    }
  }
  rep.root_solves = ev.stats().root_solves;
  rep.max_root_residual = ev.stats().max_root_residual;

  for (std::size_t i = 0; i < s.points.size() && rep.xcheck_points < cfg.xcheck_points; ++i) {
    try {
      rep.xcheck_max_dev = std::max(rep.xcheck_max_dev, crosscheck_derivatives(fam, s, s.points[i], cfg.numeric));
      ++rep.xcheck_points;
    } catch (const DomainError&) {
      // stencil left the admissible region; try the next point
    } catch (const NumericError& e) {
      if (rep.message.empty()) rep.message = std::string("cross-check: ") + e.what();
    }
  }

  // Alternate RootOf branch: same scenario and points, seeds mirrored.
  if (cfg.probe_branches && contains_kind(fam.solution, Kind::RootOf) && !s.points.empty()) {
    BranchReport primary{"primary", rep.points, rep.max_rel_residual, Verdict::Indeterminate};
    BranchReport alt{"alternate", 0, 0.0, Verdict::Indeterminate};
    Evaluator ev2 = make_evaluator(fam, s, cfg.numeric);
    ev2.set_seed_sign(-1.0);
    bool distinct = false;
    int failures = 0;
    for (std::size_t i = 0; i < s.points.size(); ++i) {
      try {
        ResidualSample r = residual_at(fam, s, s.points[i], ev2, set);
        if (i == 0) {
          ev.set_point(named_point(fam, s.points[0]));
          double w1 = ev.eval_scalar(fam.solution);
          distinct = std::abs(r.w - w1) > 1e-8 * std::max(1.0, std::abs(w1));
          if (!distinct) break;
        }
        ++alt.points;
        alt.max_rel_residual = std::max(alt.max_rel_residual, r.rel);
      } catch (const NumericError&) {
        ++failures;
        if (i == 0) break;
      }
    }
    bool xok = rep.xcheck_points > 0 && rep.xcheck_max_dev <= cfg.xcheck_tol;
    primary.verdict = decide(primary.max_rel_residual, xok, rep.indeterminate == 0, tol, noise_floor(cfg.numeric));
    rep.branches.push_back(primary);
    if (distinct) {
      alt.verdict = decide(alt.max_rel_residual, xok, failures == 0, tol, noise_floor(cfg.numeric));
      rep.branches.push_back(alt);
    }
  }
  return run;
}

inline int thread_count(const VerifyConfig& cfg, int jobs) {
  int n = cfg.threads;
  if (n <= 0) {
    if (const char* env = std::getenv("PDEGENSOL_THREADS")) n = std::atoi(env);
  }
  if (n <= 0) n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  return std::max(1, std::min(n, jobs));
}

}  // namespace detail

/// Run cfg.n_scenarios scenarios of cfg.n_points points each and classify:
/// PASS when every residual is within tolerance and the derivative
/// cross-check agrees; FAIL when a residual exceeds tolerance (and the noise
/// floor) while the cross-check agrees; INDETERMINATE otherwise.
inline VerificationReport verify_family(const PdeFamily& fam, const VerifyConfig& cfg = {}) {
  const auto start = std::chrono::steady_clock::now();
  cfg.numeric.validate();
  VerificationReport rep;
  rep.family = fam.id;
  rep.tol_rel = detail::effective_tol(fam, cfg);
  rep.xcheck_tol = cfg.xcheck_tol;
  rep.seed = cfg.seed;

  const int jobs = std::max(0, cfg.n_scenarios);
  std::vector<detail::ScenarioRun> runs(static_cast<std::size_t>(jobs));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < jobs; i = next++) {
      runs[static_cast<std::size_t>(i)] = detail::run_scenario(fam, cfg, i, rep.tol_rel);
    }
  };
  const int nthreads = detail::thread_count(cfg, jobs);
  if (nthreads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  bool complete = jobs > 0;
  for (auto& run : runs) {
    const auto& s = run.report;
    ++rep.scenarios_run;
    rep.points += s.points;
    rep.resampled_points += s.resampled;
    rep.indeterminate_points += s.indeterminate;
    rep.max_abs_residual = std::max(rep.max_abs_residual, s.max_abs_residual);
    rep.max_rel_residual = std::max(rep.max_rel_residual, s.max_rel_residual);
    rep.xcheck_max_dev = std::max(rep.xcheck_max_dev, s.xcheck_max_dev);
    rep.xcheck_points += s.xcheck_points;
    rep.max_root_residual = std::max(rep.max_root_residual, s.max_root_residual);
    if (run.worst && (!rep.worst || run.worst->rel > rep.worst->rel)) rep.worst = run.worst;
    if (s.sampling_exhausted || s.indeterminate > 0 || s.points == 0) complete = false;
    rep.scenarios.push_back(s);
  }
  const bool xcheck_ok = rep.xcheck_points > 0 && rep.xcheck_max_dev <= cfg.xcheck_tol;
  rep.verdict = detail::decide(rep.max_rel_residual, xcheck_ok, complete, rep.tol_rel, detail::noise_floor(cfg.numeric));
  rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

inline VerificationReport verify_family(const std::string& id, const VerifyConfig& cfg = {}) {
  return verify_family(get_family(id), cfg);
}

/// Whether shifting every variable base point by `shift` leaves the PASS
/// verdict of `s` unchanged (evaluated at `n_points` points of the box).
inline bool base_point_invariance(const PdeFamily& fam, const Scenario& s, double tol, int n_points = 10,
                                  double shift = 0.5, const NumericConfig& cfg = {}) {
  if (!contains_kind(fam.solution, Kind::BasePoint))
    throw std::invalid_argument("family " + fam.id + " has no base-point integral");
  Scenario shifted = s;
  for (const auto& v : fam.independent_vars) shifted.bases[v] += shift;
  auto rng = detail::make_rng(fam.id, s.seed, 0xBA5EULL);
  const auto set = solution_index_set(fam);
  Evaluator e1 = make_evaluator(fam, s, cfg);
  Evaluator e2 = make_evaluator(fam, shifted, cfg);
  double m1 = 0.0, m2 = 0.0;
  int got = 0;
  for (int draw = 0; draw < 4 * n_points && got < n_points; ++draw) {
    auto p = detail::draw_point(s, rng);
    try {
      auto r1 = residual_at(fam, s, p, e1, set);
      auto r2 = residual_at(fam, shifted, p, e2, set);
      m1 = std::max(m1, r1.rel);
      m2 = std::max(m2, r2.rel);
      ++got;
    } catch (const DomainError&) {
    }
  }
  if (got == 0) throw DomainError("no admissible point for the base-point comparison");
  return (m1 <= tol) == (m2 <= tol);
}

}  // namespace pdegensol
