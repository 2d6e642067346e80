// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include "test_support.hpp"

namespace fs = std::filesystem;
using namespace pdegensol;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;
};

struct Stopwatch {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

int run_cli(const std::string& args, std::string* out = nullptr) {
  const std::string cmd = std::string(PDEGENSOL_CLI) + " " + args + " 2>&1";
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return -1;
  std::string text;
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, p)) text.append(buf, n);
  int status = pclose(p);
  if (out) *out = std::move(text);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

const Expr* find_kind(const Expr& e, Kind k) {
  if (e.kind() == k) return &e;
  for (const auto& a : e.args())
    if (const Expr* r = find_kind(a, k)) return r;
  return nullptr;
}

const fs::path kWork = fs::temp_directory_path() / ("pdegensol_acceptance_" + std::to_string(::getpid()));
std::string first_run_json;  // criterion 3 output, reused by criterion 7

Outcome catalog_completeness() {
  Outcome o;
  std::string out;
  if (run_cli("list", &out) != 0) return {false, "list failed"};
  std::vector<std::string> listed;
  std::istringstream in(out);
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line))
    if (!line.empty()) listed.push_back(line.substr(0, line.find(' ')));
  std::vector<std::string> want;
  for (int i = 1; i <= 11; ++i) want.push_back("3." + std::to_string(i));
  for (int i = 1; i <= 4; ++i) want.push_back("4." + std::to_string(i));
  for (int i = 1; i <= 3; ++i) want.push_back("5." + std::to_string(i));
  for (int i = 1; i <= 5; ++i) want.push_back("6." + std::to_string(i));
  for (int i = 1; i <= 2; ++i) want.push_back("7." + std::to_string(i));
  if (listed != want) return {false, "listed " + std::to_string(listed.size()) + " ids, expected the 25 catalog ids"};

  int audited = 0;
  for (const auto& fam : Catalog::builtin().families()) {
    const int terms = fam.pde_lhs.kind() == Kind::Add ? static_cast<int>(fam.pde_lhs.args().size()) : 1;
    const auto fv = free_variables(fam.solution);
    bool good = terms == fam.displayed_terms && !fv.count(PdeFamily::kUnknown) && !fam.derivative_set.empty() &&
                total_order(fam.derivative_set.back()) == fam.order;
    if (!good) {
      o.ok = false;
      o.detail += " audit:" + fam.id;
    }
    ++audited;
  }
  o.detail = "25 ids listed, " + std::to_string(audited) + " entries audited" + o.detail;
  return o;
}

Outcome elementary_families() {
  Outcome o;
  Stopwatch sw;
  VerifyConfig cfg;
  cfg.tol_rel = 1e-6;
  int runs = 0;
  double worst = 0.0;
  for (const char* id : {"3.1", "3.2", "3.4", "3.9", "3.10", "6.1", "6.2", "7.1", "7.2"}) {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      cfg.seed = seed;
      const auto r = verify_family(id, cfg);
      ++runs;
      worst = std::max(worst, r.max_rel_residual);
      if (r.verdict != Verdict::Pass) {
        o.ok = false;
        o.detail += std::string(" ") + id + "/seed" + std::to_string(seed) + "=" + to_string(r.verdict);
      }
    }
  }
  const double t = sw.seconds();
  if (t >= 30.0) o.ok = false;
  o.detail = std::to_string(runs) + " runs, max_rel " + fmt("%.2e", worst) + ", " + fmt("%.1f", t) + " s" + o.detail;
  return o;
}

Outcome full_catalog() {
  Outcome o;
  const fs::path out = kWork / "run1.json";
  Stopwatch sw;
  const int code = run_cli("verify all --seed 7 --json " + out.string());
  const double t = sw.seconds();
  if (code != 0 && code != 1) return {false, "verify all exited with " + std::to_string(code)};
  first_run_json = slurp(out);
  const auto reports = reports_from_json(first_run_json);
  const std::string adjudication = slurp(fs::path(PDEGENSOL_SOURCE_DIR) / "docs" / "adjudication.md");
  int pass = 0;
  std::string fails;
  for (const auto& r : reports) {
    if (r.verdict == Verdict::Pass) {
      ++pass;
    } else if (r.verdict == Verdict::Fail) {
      fails += " " + r.family;
      const bool noted = adjudication.find("family " + r.family) != std::string::npos;
      if (r.xcheck_max_dev > 1e-4 || !noted) {
        o.ok = false;
        o.detail += " unadjudicated FAIL " + r.family;
      }
    } else {
      o.ok = false;
      o.detail += " INDETERMINATE " + r.family;
    }
  }
  if (reports.size() != 25) o.ok = false;
  if (t >= 600.0) o.ok = false;
  o.detail = std::to_string(reports.size()) + " families, " + std::to_string(pass) + " PASS, adjudicated FAIL:" +
             (fails.empty() ? " none" : fails) + ", " + fmt("%.0f", t) + " s" + o.detail;
  return o;
}

// z_t and z_x of the RootOf in `fam`, with the integration dummy pinned to x,
// against the implicit function theorem (closed form from `slope`) and FD.
double implicit_derivative_error(const PdeFamily& fam, std::uint64_t seed,
                                 const std::function<double(const Scenario&, double z)>& dz_dt) {
  const Expr* found = find_kind(fam.solution, Kind::RootOf);
  if (!found) return 1.0;
  const Expr root = substitute(*found, {{"eta", variable("x")}});
  const Scenario s = sample_scenario(fam, seed);
  const testing_support::Point p{0.5 * (s.box[0].first + s.box[0].second), 0.5 * (s.box[1].first + s.box[1].second)};
  Evaluator ev = make_evaluator(fam, s);
  ev.set_point(IndexSet::total_degree(2, 1), detail::named_point(fam, p));
  const Jet z = ev.eval(root);

  NumericConfig tight;
  tight.quad_rel_tol = 1e-13;
  tight.quad_abs_tol = 1e-15;
  tight.root_tol = 1e-14;
  Evaluator scalar = make_evaluator(fam, s, tight);
  testing_support::Scalar g = [&](const testing_support::Point& q) {
    scalar.set_point(detail::named_point(fam, q));
    return scalar.eval_scalar(root);
  };
  const double zt = z.partial(MultiIndex{1, 0}), zx = z.partial(MultiIndex{0, 1});
  const std::array<double, 1> xs{p[1]};
  const double gx = s.functions.at("G").partial(xs, MultiIndex{1});
  const double want_t = dz_dt(s, z.value());
  double err = std::max(testing_support::rel_diff(zt, want_t), testing_support::rel_diff(zx, gx * want_t));
  err = std::max(err, testing_support::rel_diff(zt, testing_support::fd_partial(g, p, {1, 0}, 1e-3)));
  err = std::max(err, testing_support::rel_diff(zx, testing_support::fd_partial(g, p, {0, 1}, 1e-3)));
  return err;
}

Outcome rootof_families() {
  Outcome o;
  VerifyConfig cfg;
  cfg.tol_rel = 1e-5;
  double root_res = 0.0, rel = 0.0;
  for (const char* id : {"3.7", "3.8"}) {
    const auto r = verify_family(id, cfg);
    root_res = std::max(root_res, r.max_root_residual);
    rel = std::max(rel, r.max_rel_residual);
    if (r.verdict != Verdict::Pass) {
      o.ok = false;
      o.detail += std::string(" ") + id + "=" + to_string(r.verdict);
    }
  }
  if (root_res > 1e-12) o.ok = false;

  // 3.7: Phi = t - int(s/q(s)) + G, so z_t = q(z)/z.
  const double e37 = implicit_derivative_error(get_family("3.7"), 1, [](const Scenario& s, double z) {
    const auto& q = s.params;
    return ((q.at("k") - q.at("h") * q.at("b")) * z + q.at("b") * z * z + q.at("a")) / z;
  });
  // 3.8: Phi = t + int(1/p(s)) + G, so z_t = -p(z).
  const double e38 = implicit_derivative_error(get_family("3.8"), 1, [](const Scenario& s, double z) {
    const auto& q = s.params;
    return -(q.at("g") - q.at("b") * q.at("m") + q.at("k") * std::exp(z) + q.at("m") * z);
  });
  const double implicit = std::max(e37, e38);
  if (implicit > 1e-6) o.ok = false;
  o.detail = "max_rel " + fmt("%.2e", rel) + ", max |Phi(z)| " + fmt("%.1e", root_res) + ", implicit derivative error " +
             fmt("%.1e", implicit) + o.detail;
  return o;
}

Outcome oracle_battery() {
  Outcome o;
  double quad = 0.0;
  for (const auto& c : testing_support::kQuadratureBattery) {
    Evaluator ev;
    ev.set_point({});
    const std::string text =
        "int(xi, " + format_number(c.lo) + ", " + format_number(c.hi) + ", " + c.integrand + ")";
    const double v = ev.eval_scalar(parse(text, testing_support::env({})));
    quad = std::max(quad, std::abs(v - c.value) / std::max(1.0, std::abs(c.value)));
  }
  if (quad > 1e-9) o.ok = false;

  double xcheck = 0.0;
  int points = 0;
  for (const auto& fam : Catalog::builtin().families()) {
    const Scenario s = sample_scenario(fam, 1);
    auto rng = detail::make_rng(fam.id, 1, 0xACCEULL);
    int got = 0;
    for (int draw = 0; draw < 40 && got < 10; ++draw) {
      try {
        xcheck = std::max(xcheck, crosscheck_derivatives(fam, s, detail::draw_point(s, rng)));
        ++got;
      } catch (const NumericError&) {
      }
    }
    points += got;
    if (got < 10) {
      o.ok = false;
      o.detail += " " + fam.id + ":" + std::to_string(got) + " points";
    }
  }
  if (xcheck > 1e-5) o.ok = false;
  o.detail = "quadrature max error " + fmt("%.1e", quad) + ", jet-vs-FD max deviation " + fmt("%.1e", xcheck) +
             " over " + std::to_string(points) + " points" + o.detail;
  return o;
}

Outcome base_point_invariance_all() {
  Outcome o;
  int checked = 0;
  for (const auto& fam : Catalog::builtin().families()) {
    if (!contains_kind(fam.solution, Kind::BasePoint)) continue;
    const double tol = detail::effective_tol(fam, VerifyConfig{});
    for (std::uint64_t seed = 1; seed <= 2; ++seed) {
      if (!base_point_invariance(fam, sample_scenario(fam, seed), tol)) {
        o.ok = false;
        o.detail += " " + fam.id;
      }
      ++checked;
    }
  }
  o.detail = std::to_string(checked) + " scenarios compared under a 0.5 shift" + o.detail;
  return o;
}

Outcome determinism() {
  const fs::path out = kWork / "run2.json";
  const int code = run_cli("verify all --seed 7 --json " + out.string());
  if (code != 0 && code != 1) return {false, "verify all exited with " + std::to_string(code)};
  const std::string second = slurp(out);
  const bool same = !first_run_json.empty() && second == first_run_json;
  return {same, same ? std::to_string(second.size()) + " bytes identical" : "outputs differ"};
}

Outcome degenerate_members() {
  Outcome o;
  VerifyConfig c31;
  c31.sampling.fixed_params = {{"c", 0.0}};
  VerifyConfig c39;
  c39.sampling.fixed_params = {{"m", 0.0}};
  const auto r31 = verify_family("3.1", c31);
  const auto r39 = verify_family("3.9", c39);
  o.ok = r31.verdict == Verdict::Pass && r39.verdict == Verdict::Pass;
  o.detail = std::string("3.1 c=0 ") + to_string(r31.verdict) + ", 3.9 m=0 " + to_string(r39.verdict);
  return o;
}

}  // namespace

int main() {
  fs::create_directories(kWork);
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"catalog completeness", catalog_completeness},
      {"elementary-family verification", elementary_families},
      {"full-catalog verification", full_catalog},
      {"RootOf families", rootof_families},
      {"oracle battery", oracle_battery},
      {"base-point invariance", base_point_invariance_all},
      {"determinism", determinism},
      {"degenerate members", degenerate_members},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.ok ? 0 : 1;
    std::cout << "criterion " << i + 1 << ": " << (o.ok ? "PASS" : "FAIL") << "  " << criteria[i].first << " ("
              << o.detail << ")" << std::endl;
  }
  fs::remove_all(kWork);
  return failed == 0 ? 0 : 1;
}
