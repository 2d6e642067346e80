#pragma once

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pdegensol/catalog.hpp"
#include "pdegensol/expr.hpp"
#include "pdegensol/function_instance.hpp"
#include "pdegensol/verifier.hpp"

#ifndef PDEGENSOL_VERSION
#define PDEGENSOL_VERSION "0.1.0"
#endif

namespace pdegensol {

inline constexpr const char* kEngineVersion = PDEGENSOL_VERSION;

using json = nlohmann::json;

namespace detail {

// JSON has no infinities or NaN; encode them as strings so reports round-trip.
inline json number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "NaN";
  return v > 0 ? "Infinity" : "-Infinity";
}

inline double get_number(const json& j) {
  if (j.is_number()) return j.get<double>();
  const auto s = j.get<std::string>();
  if (s == "NaN") return std::numeric_limits<double>::quiet_NaN();
  if (s == "Infinity") return std::numeric_limits<double>::infinity();
  if (s == "-Infinity") return -std::numeric_limits<double>::infinity();
  throw std::invalid_argument("expected a number, got '" + s + "'");
}

inline json numbers(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(number(x));
  return a;
}

inline std::vector<double> get_numbers(const json& j) {
  std::vector<double> out;
  for (const auto& x : j) out.push_back(get_number(x));
  return out;
}

inline json number_map(const std::map<std::string, double>& m) {
  json o = json::object();
  for (const auto& [k, v] : m) o[k] = number(v);
  return o;
}

inline std::map<std::string, double> get_number_map(const json& j) {
  std::map<std::string, double> out;
  for (const auto& [k, v] : j.items()) out[k] = get_number(v);
  return out;
}

inline std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

}  // namespace detail

inline void to_json(json& j, const FunctionInstance& f) {
  j = json{{"kind", f.kind == FunctionInstance::Kind::Polynomial ? "polynomial" : "polynomial+sinusoid"},
           {"arity", f.arity},
           {"degree", f.degree},
           {"coefficients", detail::numbers(f.coefficients)},
           {"offset", detail::number(f.offset)}};
  if (f.kind == FunctionInstance::Kind::PolynomialSinusoid) {
    j["amplitude"] = detail::number(f.amplitude);
    j["frequency"] = detail::number(f.frequency);
    j["phase"] = detail::number(f.phase);
  }
}

inline void from_json(const json& j, FunctionInstance& f) {
  f = FunctionInstance::polynomial(j.at("arity").get<std::size_t>(), j.at("degree").get<int>(),
                                   detail::get_numbers(j.at("coefficients")), detail::get_number(j.at("offset")));
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "polynomial+sinusoid") {
    f.kind = FunctionInstance::Kind::PolynomialSinusoid;
    f.amplitude = detail::get_number(j.at("amplitude"));
    f.frequency = detail::get_number(j.at("frequency"));
    f.phase = detail::get_number(j.at("phase"));
  } else if (kind != "polynomial") {
    throw std::invalid_argument("unknown function kind '" + kind + "'");
  }
}

inline void to_json(json& j, const Scenario& s) {
  json box = json::array();
  for (const auto& [lo, hi] : s.box) box.push_back({detail::number(lo), detail::number(hi)});
  json points = json::array();
  for (const auto& p : s.points) points.push_back(detail::numbers(p));
  j = json{{"family", s.family_id}, {"seed", s.seed},   {"attempts", s.attempts},
           {"params", detail::number_map(s.params)}, {"functions", s.functions},
           {"bases", detail::number_map(s.bases)},   {"box", box},
           {"points", points}};
}

inline void from_json(const json& j, Scenario& s) {
  s = Scenario{};
  s.family_id = j.at("family").get<std::string>();
  s.seed = j.at("seed").get<std::uint64_t>();
  s.attempts = j.value("attempts", 1);
  s.params = detail::get_number_map(j.at("params"));
  s.functions = j.at("functions").get<std::map<std::string, FunctionInstance>>();
  s.bases = detail::get_number_map(j.at("bases"));
  for (const auto& b : j.at("box")) s.box.emplace_back(detail::get_number(b.at(0)), detail::get_number(b.at(1)));
  if (j.contains("points"))
    for (const auto& p : j.at("points")) s.points.push_back(detail::get_numbers(p));
}

inline void to_json(json& j, const WorstPoint& w) {
  j = json{{"scenario", w.scenario},
           {"point", detail::numbers(w.point)},
           {"abs_residual", detail::number(w.abs)},
           {"rel_residual", detail::number(w.rel)},
           {"w", detail::number(w.w)},
           {"terms", detail::numbers(w.terms)}};
}

inline void from_json(const json& j, WorstPoint& w) {
  w.scenario = j.at("scenario").get<int>();
  w.point = detail::get_numbers(j.at("point"));
  w.abs = detail::get_number(j.at("abs_residual"));
  w.rel = detail::get_number(j.at("rel_residual"));
  w.w = detail::get_number(j.at("w"));
  w.terms = detail::get_numbers(j.at("terms"));
}

inline void to_json(json& j, const BranchReport& b) {
  j = json{{"label", b.label},
           {"points", b.points},
           {"max_rel_residual", detail::number(b.max_rel_residual)},
           {"verdict", to_string(b.verdict)}};
}

inline void from_json(const json& j, BranchReport& b) {
  b.label = j.at("label").get<std::string>();
  b.points = j.at("points").get<int>();
  b.max_rel_residual = detail::get_number(j.at("max_rel_residual"));
  b.verdict = verdict_from_string(j.at("verdict").get<std::string>());
}

inline void to_json(json& j, const ScenarioReport& s) {
  j = json{{"index", s.index},
           {"seed", s.seed},
           {"sampling_exhausted", s.sampling_exhausted},
           {"message", s.message},
           {"attempts", s.attempts},
           {"params", detail::number_map(s.params)},
           {"points", s.points},
           {"resampled_points", s.resampled},
           {"indeterminate_points", s.indeterminate},
           {"xcheck_points", s.xcheck_points},
           {"max_abs_residual", detail::number(s.max_abs_residual)},
           {"max_rel_residual", detail::number(s.max_rel_residual)},
           {"xcheck_max_dev", detail::number(s.xcheck_max_dev)},
           {"root_solves", s.root_solves},
           {"max_root_residual", detail::number(s.max_root_residual)},
           {"branches", s.branches}};
}

inline void from_json(const json& j, ScenarioReport& s) {
  s.index = j.at("index").get<int>();
  s.seed = j.at("seed").get<std::uint64_t>();
  s.sampling_exhausted = j.at("sampling_exhausted").get<bool>();
  s.message = j.at("message").get<std::string>();
  s.attempts = j.at("attempts").get<int>();
  s.params = detail::get_number_map(j.at("params"));
  s.points = j.at("points").get<int>();
  s.resampled = j.at("resampled_points").get<int>();
  s.indeterminate = j.at("indeterminate_points").get<int>();
  s.xcheck_points = j.at("xcheck_points").get<int>();
  s.max_abs_residual = detail::get_number(j.at("max_abs_residual"));
  s.max_rel_residual = detail::get_number(j.at("max_rel_residual"));
  s.xcheck_max_dev = detail::get_number(j.at("xcheck_max_dev"));
  s.root_solves = j.at("root_solves").get<long>();
  s.max_root_residual = detail::get_number(j.at("max_root_residual"));
  s.branches = j.at("branches").get<std::vector<BranchReport>>();
}

inline void to_json(json& j, const VerificationReport& r) {
  j = json{{"family", r.family},
           {"verdict", to_string(r.verdict)},
           {"max_rel_residual", detail::number(r.max_rel_residual)},
           {"max_abs_residual", detail::number(r.max_abs_residual)},
           {"xcheck_max_dev", detail::number(r.xcheck_max_dev)},
           {"xcheck_points", r.xcheck_points},
           {"scenarios_run", r.scenarios_run},
           {"points", r.points},
           {"resampled_points", r.resampled_points},
           {"indeterminate_points", r.indeterminate_points},
           {"max_root_residual", detail::number(r.max_root_residual)},
           {"scenarios", r.scenarios},
           {"engine",
            {{"tol_rel", detail::number(r.tol_rel)},
             {"xcheck_tol", detail::number(r.xcheck_tol)},
             {"seed", r.seed},
             {"version", kEngineVersion}}}};
  j["worst"] = r.worst ? json(*r.worst) : json(nullptr);
}

inline void from_json(const json& j, VerificationReport& r) {
  r = VerificationReport{};
  r.family = j.at("family").get<std::string>();
  r.verdict = verdict_from_string(j.at("verdict").get<std::string>());
  r.max_rel_residual = detail::get_number(j.at("max_rel_residual"));
  r.max_abs_residual = detail::get_number(j.at("max_abs_residual"));
  r.xcheck_max_dev = detail::get_number(j.at("xcheck_max_dev"));
  r.xcheck_points = j.at("xcheck_points").get<int>();
  r.scenarios_run = j.at("scenarios_run").get<int>();
  r.points = j.at("points").get<int>();
  r.resampled_points = j.at("resampled_points").get<int>();
  r.indeterminate_points = j.at("indeterminate_points").get<int>();
  r.max_root_residual = detail::get_number(j.at("max_root_residual"));
  r.scenarios = j.at("scenarios").get<std::vector<ScenarioReport>>();
  const auto& e = j.at("engine");
  r.tol_rel = detail::get_number(e.at("tol_rel"));
  r.xcheck_tol = detail::get_number(e.at("xcheck_tol"));
  r.seed = e.at("seed").get<std::uint64_t>();
  if (j.contains("worst") && !j.at("worst").is_null()) r.worst = j.at("worst").get<WorstPoint>();
}

/// Serialised form of a batch of reports: a JSON array, pretty-printed with
/// sorted keys so equal reports give byte-identical text.
inline std::string reports_to_json(const std::vector<VerificationReport>& reports) {
  return json(reports).dump(2) + "\n";
}

inline std::vector<VerificationReport> reports_from_json(const std::string& text) {
  return json::parse(text).get<std::vector<VerificationReport>>();
}

/// One summary line; on anything but PASS also the worst point with the value
/// of every additive term of the PDE so a reader can see which term misbehaves.
inline std::string format_report(const VerificationReport& r, const PdeFamily* fam = nullptr) {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%-5s %-13s max_rel=%.3e  xcheck=%.3e  points=%d  resampled=%d  tol=%.0e\n",
                r.family.c_str(), to_string(r.verdict), r.max_rel_residual, r.xcheck_max_dev, r.points,
                r.resampled_points, r.tol_rel);
  os << line;
  for (const auto& s : r.scenarios) {
    if (!s.message.empty()) os << "      scenario " << s.index << ": " << s.message << "\n";
    for (const auto& b : s.branches)
      if (b.label != "primary")
        os << "      scenario " << s.index << " " << b.label << " branch: " << to_string(b.verdict)
           << " max_rel=" << detail::fmt("%.3e", b.max_rel_residual) << "\n";
  }
  if (r.verdict != Verdict::Pass && r.worst) {
    const auto& w = *r.worst;
    os << "      worst point (scenario " << w.scenario << "):";
    for (std::size_t i = 0; i < w.point.size(); ++i) {
      std::string name = fam && i < fam->independent_vars.size() ? fam->independent_vars[i] : "x" + std::to_string(i);
      os << " " << name << "=" << detail::fmt("%.6g", w.point[i]);
    }
    os << "  w=" << detail::fmt("%.6g", w.w) << "  |residual|=" << detail::fmt("%.3e", w.abs) << "\n";
    std::vector<Expr> terms;
    if (fam) terms = fam->pde_lhs.kind() == Kind::Add ? fam->pde_lhs.args() : std::vector<Expr>{fam->pde_lhs};
    for (std::size_t i = 0; i < w.terms.size(); ++i) {
      os << "        term " << i + 1 << " = " << detail::fmt("% .6e", w.terms[i]);
      if (i < terms.size()) os << "   [" << to_string(terms[i]) << "]";
      os << "\n";
    }
  }
  return os.str();
}

}  // namespace pdegensol
