// Command-line front end: browse the catalog, verify families, export
// sampled solution grids.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <cstdlib>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pdegensol.hpp"

namespace {

using namespace pdegensol;

enum ExitCode { kOk = 0, kFail = 1, kUsage = 2, kIndeterminate = 3, kIoError = 4 };

struct GridAxis {
  std::string var;
  double lo = 0.0, hi = 0.0;
  int count = 0;
};

std::string join(const std::vector<std::string>& items, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? sep : "") + items[i];
  return out;
}

// Collect the plain (underived) applications of `name` in `e`.
void collect_calls(const Expr& e, const std::string& name, std::vector<Expr>& out) {
  if (e.kind() == Kind::FuncApp && e.name() == name &&
      std::all_of(e->orders.begin(), e->orders.end(), [](int o) { return o == 0; }))
    out.push_back(e);
  for (const auto& a : e.args()) collect_calls(a, name, out);
}

// How a function enters the family, e.g. "G(x)": prefer an application whose
// arguments are independent variables over one inside an integrand.
std::string signature(const FunctionSlot& f, const PdeFamily& fam) {
  std::vector<Expr> calls;
  collect_calls(f.coefficient ? fam.pde_lhs : fam.solution, f.name, calls);
  auto on_vars = [&](const Expr& c) {
    return std::all_of(c.args().begin(), c.args().end(), [&](const Expr& a) {
      return a.kind() == Kind::Variable &&
             std::find(fam.independent_vars.begin(), fam.independent_vars.end(), a.name()) != fam.independent_vars.end();
    });
  };
  for (const auto& c : calls)
    if (on_vars(c)) return to_string(c);
  if (!calls.empty()) return to_string(calls.front());
  return f.name + "/" + std::to_string(f.arity);
}

std::string constraint_summary(const PdeFamily& fam) {
  std::vector<std::string> items;
  for (const auto& c : fam.constraints) items.push_back(c.text);
  return items.empty() ? "-" : join(items, ", ");
}

int cmd_list() {
  std::printf("%-5s %-5s %-4s %-22s %s\n", "id", "order", "vars", "parameters", "constraints");
  for (const auto& fam : Catalog::builtin().families()) {
    std::string params = fam.parameters.empty() ? "-" : join(fam.parameters, ",");
    std::printf("%-5s %-5d %-4zu %-22s %s\n", fam.id.c_str(), fam.order, fam.independent_vars.size(), params.c_str(),
                constraint_summary(fam).c_str());
  }
  return kOk;
}

int cmd_show(const std::string& id) {
  const PdeFamily& fam = get_family(id);
  std::cout << "family      " << fam.id << " (" << fam.group << ")\n"
            << "unknown     w(" << join(fam.independent_vars, ", ") << ")\n"
            << "parameters  " << (fam.parameters.empty() ? "-" : join(fam.parameters, ", ")) << "\n"
            << "constraints " << constraint_summary(fam) << "\n";
  std::vector<std::string> arb, given;
  for (const auto& f : fam.functions) (f.coefficient ? given : arb).push_back(signature(f, fam));
  std::cout << "functions   " << (arb.empty() ? "-" : join(arb, ", ")) << " arbitrary";
  if (!given.empty()) std::cout << "; " << join(given, ", ") << " given coefficients";
  std::cout << "\n"
            << "order       " << fam.order << "\n\n"
            << "PDE:\n  " << fam.pde_text << " = 0\n\n"
            << "solution:\n  w = " << fam.solution_text << "\n";
  return kOk;
}

std::string csv_row(const VerificationReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s,%s,%.17g,%.17g,%d,%d,%.17g", r.family.c_str(), to_string(r.verdict),
                r.max_rel_residual, r.xcheck_max_dev, r.points, r.resampled_points, r.tol_rel);
  return buf;
}

int exit_code(const std::vector<VerificationReport>& reports) {
  bool fail = false, indeterminate = false;
  for (const auto& r : reports) {
    fail |= r.verdict == Verdict::Fail;
    indeterminate |= r.verdict == Verdict::Indeterminate;
  }
  if (fail) return kFail;
  if (indeterminate) return kIndeterminate;
  return kOk;
}

struct VerifyArgs {
  std::string selector = "all";
  std::uint64_t seed = 1;
  int scenarios = 5;
  int points = 20;
  std::optional<double> tol;
  std::string json_path;
  std::string format = "text";
};

int cmd_verify(const VerifyArgs& a) {
  std::vector<PdeFamily> selection;
  if (a.selector == "all")
    selection = Catalog::builtin().families();
  else
    selection.push_back(get_family(a.selector));

  std::ofstream out;
  if (!a.json_path.empty()) {
    out.open(a.json_path, std::ios::binary);
    if (!out) {
      std::cerr << "error: cannot write " << a.json_path << "\n";
      return kIoError;
    }
  }

  VerifyConfig cfg;
  cfg.n_scenarios = a.scenarios;
  cfg.n_points = a.points;
  cfg.tol_rel = a.tol;
  cfg.seed = a.seed;

  std::vector<VerificationReport> reports;
  if (a.format == "csv") std::cout << "family,verdict,max_rel_residual,xcheck_max_dev,points,resampled_points,tol_rel\n";
  for (const auto& fam : selection) {
    reports.push_back(verify_family(fam, cfg));
    if (a.format == "text") std::cout << format_report(reports.back(), &fam) << std::flush;
    if (a.format == "csv") std::cout << csv_row(reports.back()) << "\n" << std::flush;
  }
  const std::string text = reports_to_json(reports);
  if (a.format == "json") std::cout << text;
  if (out.is_open()) {
    out << text;
    out.flush();
    if (!out) {
      std::cerr << "error: cannot write " << a.json_path << "\n";
      return kIoError;
    }
  }
  return exit_code(reports);
}

std::vector<GridAxis> parse_grid(const std::string& spec, const PdeFamily& fam) {
  std::vector<GridAxis> axes;
  std::istringstream in(spec);
  std::string item;
  while (std::getline(in, item, ',')) {
    auto eq = item.find('=');
    if (eq == std::string::npos) throw CLI::ValidationError("--grid", "expected var=lo:hi:count, got '" + item + "'");
    GridAxis g;
    g.var = detail::trim(item.substr(0, eq));
    char tail = 0;
    if (std::sscanf(item.c_str() + eq + 1, "%lf:%lf:%d%c", &g.lo, &g.hi, &g.count, &tail) != 3 || g.count < 1 ||
        !(g.lo <= g.hi))
      throw CLI::ValidationError("--grid", "expected var=lo:hi:count, got '" + item + "'");
    axes.push_back(g);
  }
  std::vector<GridAxis> ordered;
  for (const auto& v : fam.independent_vars) {
    auto it = std::find_if(axes.begin(), axes.end(), [&](const GridAxis& g) { return g.var == v; });
    if (it == axes.end()) throw CLI::ValidationError("--grid", "missing axis for variable " + v);
    ordered.push_back(*it);
  }
  if (axes.size() != ordered.size())
    throw CLI::ValidationError("--grid", "axes must be exactly " + join(fam.independent_vars, ", "));
  return ordered;
}

std::string sidecar_path(const std::string& csv) {
  auto dot = csv.rfind('.');
  auto slash = csv.find_last_of("/\\");
  if (dot != std::string::npos && (slash == std::string::npos || dot > slash)) return csv.substr(0, dot) + ".json";
  return csv + ".json";
}

int cmd_sample(const std::string& id, const std::string& grid_spec, std::uint64_t seed, std::string out_path) {
  const PdeFamily& fam = get_family(id);
  const auto axes = parse_grid(grid_spec, fam);
  if (out_path.empty()) out_path = "sample_" + fam.id + ".csv";

  Scenario s;
  try {
    s = sample_scenario(fam, seed);
  } catch (const SamplingExhausted& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIoError;
  }
  for (std::size_t i = 0; i < axes.size(); ++i) {
    const auto [lo, hi] = s.box[i];
    if (axes[i].lo < lo || axes[i].hi > hi) {
      std::cerr << "error: grid axis " << axes[i].var << " leaves the safe domain [" << lo << ", " << hi << "]\n";
      return kUsage;
    }
  }

  Evaluator ev = make_evaluator(fam, s);
  std::ostringstream csv;
  csv << join(fam.independent_vars, ",") << ",w\n";
  std::vector<int> idx(axes.size(), 0);
  char buf[64];
  for (bool done = false; !done;) {
    std::vector<double> p;
    for (std::size_t i = 0; i < axes.size(); ++i) {
      const auto& g = axes[i];
      p.push_back(g.count == 1 ? g.lo : g.lo + (g.hi - g.lo) * idx[i] / (g.count - 1));
    }
    double w = 0.0;
    try {
      ev.set_point(detail::named_point(fam, p));
      w = ev.eval_scalar(fam.solution);
    } catch (const NumericError& e) {
      std::cerr << "error: evaluation failed at (" << p[0] << ", ...): " << e.what() << "\n";
      return kIoError;
    }
    for (double v : p) {
      std::snprintf(buf, sizeof buf, "%.17g,", v);
      csv << buf;
    }
    std::snprintf(buf, sizeof buf, "%.17g\n", w);
    csv << buf;
    std::size_t k = axes.size();
    while (k-- > 0) {
      if (++idx[k] < axes[k].count) break;
      idx[k] = 0;
      if (k == 0) done = true;
    }
  }

  json side = s;
  side["grid"] = json::array();
  for (const auto& g : axes) side["grid"].push_back({{"var", g.var}, {"lo", g.lo}, {"hi", g.hi}, {"count", g.count}});
  side["engine_version"] = kEngineVersion;
  const std::string side_path = sidecar_path(out_path);
  std::ofstream c(out_path, std::ios::binary), j(side_path, std::ios::binary);
  c << csv.str();
  j << side.dump(2) << "\n";
  if (!c || !j) {
    std::cerr << "error: cannot write " << out_path << " / " << side_path << "\n";
    return kIoError;
  }
  std::cout << "wrote " << out_path << " and " << side_path << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical verification of closed-form general solutions of nonlinear PDEs"};
  app.require_subcommand(1);

  auto* list = app.add_subcommand("list", "List the catalog families");

  std::string show_id;
  auto* show = app.add_subcommand("show", "Show a family's PDE, solution and constraints");
  show->add_option("id", show_id, "Family id, e.g. 3.1")->required();

  VerifyArgs va;
  auto* verify = app.add_subcommand("verify", "Verify one family or all of them");
  verify->add_option("id", va.selector, "Family id or 'all'");
  verify->add_option("--seed", va.seed, "Base random seed");
  verify->add_option("--scenarios", va.scenarios, "Scenarios per family")->check(CLI::PositiveNumber);
  verify->add_option("--points", va.points, "Evaluation points per scenario")->check(CLI::PositiveNumber);
  verify->add_option("--tol", va.tol, "Relative residual tolerance (default per family)")
      ->check(CLI::Validator(
          [](std::string& v) {
            double x = std::strtod(v.c_str(), nullptr);
            return x > 0 && x < 1e-2 ? std::string{} : "tolerance must lie in (0, 1e-2), got " + v;
          },
          "(0, 1e-2)"));
  verify->add_option("--json", va.json_path, "Write the JSON report to this path");
  verify->add_option("--format", va.format, "Output format on stdout")
      ->check(CLI::IsMember({"text", "json", "csv"}));

  std::string sample_id, grid, out_path;
  std::uint64_t sample_seed = 1;
  auto* sample = app.add_subcommand("sample", "Write a CSV grid of solution values plus a JSON scenario sidecar");
  sample->add_option("id", sample_id, "Family id")->required();
  sample->add_option("--grid", grid, "Grid spec var=lo:hi:count,...")->required();
  sample->add_option("--seed", sample_seed, "Scenario seed");
  sample->add_option("--out", out_path, "CSV output path (default sample_<id>.csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*list) return cmd_list();
    if (*show) return cmd_show(show_id);
    if (*verify) return cmd_verify(va);
    if (*sample) return cmd_sample(sample_id, grid, sample_seed, out_path);
  } catch (const UnknownFamily& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIoError;
  }
  return kUsage;
}
