#pragma once

#include <algorithm>
#include <charconv>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pdegensol/catalog_data.hpp"
#include "pdegensol/errors.hpp"
#include "pdegensol/expr.hpp"
#include "pdegensol/jet.hpp"
#include "pdegensol/parser.hpp"
#include "pdegensol/symbolic.hpp"

namespace pdegensol {

/// `lhs op rhs` with op one of != > >= < <=. Stored as the difference
/// lhs - rhs compared against zero.
struct Relation {
  std::string text;
  std::string op;
  Expr difference;

  /// Inequality conditions "!= 0" are enforced with a margin so sampled
  /// members stay clear of the excluded set.
  bool holds(double diff, double ne_margin = 0.05) const {
    if (op == "!=") return std::abs(diff) > ne_margin;
    if (op == ">") return diff > 0;
    if (op == ">=") return diff >= 0;
    if (op == "<") return diff < 0;
    return diff <= 0;
  }
};

struct FunctionSlot {
  std::string name;
  std::size_t arity = 1;
  bool coefficient = false;  // nonconstant PDE coefficient rather than an arbitrary function
};

struct FunctionHint {
  std::optional<std::pair<double, double>> offset;
  std::optional<double> coef;
  std::optional<int> degree;
  std::optional<bool> allow_sinusoid;
};

struct SamplingHints {
  std::map<std::string, std::pair<double, double>> param_ranges;
  std::vector<Relation> requirements;  // may reference variables and functions
  std::map<std::string, FunctionHint> functions;
  std::map<std::string, double> bases;
  std::map<std::string, std::pair<double, double>> box;
  std::optional<double> tol;
};

struct PdeFamily {
  std::string id;
  std::string group;
  std::vector<std::string> independent_vars;
  std::vector<std::string> parameters;
  std::vector<Relation> constraints;
  std::vector<FunctionSlot> functions;
  std::string pde_text;
  std::string solution_text;
  Expr pde_lhs;
  Expr solution;
  int displayed_terms = 0;
  int order = 0;
  std::vector<MultiIndex> derivative_set;  // partials of w appearing in pde_lhs
  SamplingHints hints;

  static constexpr const char* kUnknown = "w";

  Environment environment(bool with_unknown = true) const {
    Environment env;
    env.variables = independent_vars;
    env.parameters = parameters;
    for (const auto& f : functions) env.functions[f.name] = f.arity;
    if (with_unknown) {
      env.unknown = kUnknown;
      env.unknown_vars = independent_vars;
    }
    return env;
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

// Split on `sep` at parenthesis depth zero.
inline std::vector<std::string> split_top(std::string_view s, char sep) {
  std::vector<std::string> out;
  int depth = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (c == '(' || c == '[') ++depth;
    if (c == ')' || c == ']') --depth;
    if (c == sep && depth == 0) {
      out.push_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  out.push_back(trim(s.substr(start)));
  out.erase(std::remove(out.begin(), out.end(), std::string{}), out.end());
  return out;
}

inline double parse_double(const std::string& s, const std::string& ctx) {
  double v = 0;
  std::string t = trim(s);
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size())
    throw std::invalid_argument("catalog: malformed number '" + t + "' in " + ctx);
  return v;
}

inline std::pair<double, double> parse_range(const std::string& s, const std::string& ctx) {
  auto colon = s.find(':');
  if (colon == std::string::npos) throw std::invalid_argument("catalog: expected lo:hi in " + ctx);
  double lo = parse_double(s.substr(0, colon), ctx);
  double hi = parse_double(s.substr(colon + 1), ctx);
  if (!(lo <= hi)) throw std::invalid_argument("catalog: empty range in " + ctx);
  return {lo, hi};
}

inline Relation parse_relation(const std::string& text, const Environment& env) {
  static constexpr const char* kOps[] = {"!=", ">=", "<=", ">", "<"};
  for (const char* op : kOps) {
    auto at = text.find(op);
    if (at == std::string::npos) continue;
    std::string lhs = text.substr(0, at);
    std::string rhs = text.substr(at + std::string_view(op).size());
    Relation r;
    r.text = trim(text);
    r.op = op;
    r.difference = simplify(parse(lhs, env) - parse(rhs, env));
    return r;
  }
  throw std::invalid_argument("catalog: no comparison operator in '" + text + "'");
}

inline void collect_partials(const Expr& e, const std::string& unknown, std::set<MultiIndex>& out) {
  const Node& n = e.node();
  if (n.kind == Kind::FuncApp && n.name == unknown) {
    MultiIndex a{};
    for (std::size_t i = 0; i < n.orders.size(); ++i) a[i] = static_cast<std::uint8_t>(n.orders[i]);
    if (total_order(a) > 0) out.insert(a);
  }
  for (const auto& a : n.args) collect_partials(a, unknown, out);
}

inline void parse_hints(const std::string& text, PdeFamily& fam) {
  Environment env = fam.environment(false);
  for (const auto& item : split_top(text, ';')) {
    const std::string ctx = "hints of family " + fam.id;
    if (item.rfind("require ", 0) == 0) {
      fam.hints.requirements.push_back(parse_relation(item.substr(8), env));
      continue;
    }
    auto eq = item.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("catalog: malformed hint '" + item + "' in " + ctx);
    std::string key = trim(item.substr(0, eq));
    std::string val = trim(item.substr(eq + 1));
    auto dot = key.find('.');
    if (key == "tol") {
      fam.hints.tol = parse_double(val, ctx);
    } else if (dot == std::string::npos) {
      if (!env.is_parameter(key)) throw std::invalid_argument("catalog: hint for unknown parameter '" + key + "'");
      fam.hints.param_ranges[key] = parse_range(val, ctx);
    } else {
      std::string head = key.substr(0, dot), field = key.substr(dot + 1);
      if (head == "base") {
        fam.hints.bases[field] = parse_double(val, ctx);
      } else if (head == "box") {
        if (!env.is_variable(field)) throw std::invalid_argument("catalog: box hint for unknown variable");
        fam.hints.box[field] = parse_range(val, ctx);
      } else {
        if (!env.functions.count(head)) throw std::invalid_argument("catalog: hint for unknown function '" + head + "'");
        auto& h = fam.hints.functions[head];
        if (field == "offset") {
          h.offset = parse_range(val, ctx);
        } else if (field == "coef") {
          h.coef = parse_double(val, ctx);
        } else if (field == "degree") {
          h.degree = static_cast<int>(parse_double(val, ctx));
        } else if (field == "kind") {
          if (val != "poly" && val != "any") throw std::invalid_argument("catalog: function kind must be poly or any");
          h.allow_sinusoid = val == "any";
        } else {
          throw std::invalid_argument("catalog: unknown function hint '" + field + "'");
        }
      }
    }
  }
}

inline PdeFamily build_family(const std::map<std::string, std::string>& fields) {
  auto get = [&](const char* k) -> std::string {
    auto it = fields.find(k);
    return it == fields.end() ? std::string{} : it->second;
  };
  PdeFamily fam;
  fam.id = get("id");
  if (fam.id.empty()) throw std::invalid_argument("catalog: record without id");
  fam.group = get("group");
  fam.independent_vars = split_top(get("vars"), ',');
  fam.parameters = split_top(get("params"), ',');
  if (fam.independent_vars.empty() || fam.independent_vars.size() > kMaxVars)
    throw std::invalid_argument("catalog: family " + fam.id + " needs 1-4 variables");
  auto add_funcs = [&](const std::string& list, bool coefficient) {
    for (const auto& spec : split_top(list, ',')) {
      auto slash = spec.find('/');
      if (slash == std::string::npos) throw std::invalid_argument("catalog: function spec '" + spec + "' needs /arity");
      FunctionSlot s;
      s.name = trim(spec.substr(0, slash));
      s.arity = static_cast<std::size_t>(parse_double(spec.substr(slash + 1), "funcs of " + fam.id));
      s.coefficient = coefficient;
      fam.functions.push_back(s);
    }
  };
  add_funcs(get("given"), true);
  add_funcs(get("funcs"), false);

  Environment env = fam.environment(true);
  Environment plain = fam.environment(false);
  fam.pde_text = get("pde");
  fam.solution_text = get("solution");
  try {
    fam.pde_lhs = parse(fam.pde_text, env);
    fam.solution = parse(fam.solution_text, plain);
  } catch (const ParseError& e) {
    throw std::invalid_argument("catalog: family " + fam.id + ": " + e.what());
  }
  for (const auto& c : split_top(get("constraints"), ',')) fam.constraints.push_back(parse_relation(c, plain));
  if (auto t = get("terms"); !t.empty()) fam.displayed_terms = static_cast<int>(parse_double(t, "terms"));

  std::set<MultiIndex> partials;
  collect_partials(fam.pde_lhs, PdeFamily::kUnknown, partials);
  fam.derivative_set.assign(partials.begin(), partials.end());
  std::sort(fam.derivative_set.begin(), fam.derivative_set.end(), [](const MultiIndex& a, const MultiIndex& b) {
    int oa = total_order(a), ob = total_order(b);
    return oa != ob ? oa < ob : a > b;
  });
  for (const auto& a : fam.derivative_set) fam.order = std::max(fam.order, total_order(a));

  parse_hints(get("hints"), fam);
  return fam;
}

}  // namespace detail

/// The set of PDE families with their claimed general solutions.
class Catalog {
 public:
  /// Parse the record format of data/catalog.txt.
  static Catalog parse(std::string_view text) {
    Catalog cat;
    std::map<std::string, std::string> fields;
    std::string last_key;
    auto flush = [&] {
      if (fields.empty()) return;
      PdeFamily fam = detail::build_family(fields);
      if (cat.index_.count(fam.id)) throw std::invalid_argument("catalog: duplicate id " + fam.id);
      cat.index_[fam.id] = cat.families_.size();
      cat.families_.push_back(std::move(fam));
      fields.clear();
      last_key.clear();
    };
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line[0] == '#') continue;
      if (detail::trim(line).empty()) {
        flush();
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(line[0]))) {
        if (last_key.empty()) throw std::invalid_argument("catalog: continuation line without a field");
        fields[last_key] += " " + detail::trim(line);
        continue;
      }
      auto colon = line.find(':');
      if (colon == std::string::npos) throw std::invalid_argument("catalog: expected 'field: value', got '" + line + "'");
      last_key = detail::trim(line.substr(0, colon));
      fields[last_key] = detail::trim(line.substr(colon + 1));
    }
    flush();
    return cat;
  }

  /// The catalog compiled into the library.
  static const Catalog& builtin() {
    static const Catalog cat = parse(detail::kCatalogSource);
    return cat;
  }

  const std::vector<PdeFamily>& families() const { return families_; }

  std::vector<std::string> list_families() const {
    std::vector<std::string> ids;
    for (const auto& f : families_) ids.push_back(f.id);
    return ids;
  }

  const PdeFamily& get_family(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) throw UnknownFamily(std::string(id));
    return families_[it->second];
  }

 private:
  std::vector<PdeFamily> families_;
  std::map<std::string, std::size_t> index_;
};

inline std::vector<std::string> list_families() { return Catalog::builtin().list_families(); }
inline const PdeFamily& get_family(std::string_view id) { return Catalog::builtin().get_family(id); }

/// pde_lhs with w and its partials replaced by the (symbolically
/// differentiated) solution. Zero for every member of the family.
inline Expr build_residual(const PdeFamily& fam) {
  return simplify(substitute(fam.pde_lhs, {{PdeFamily::kUnknown, fam.solution}}));
}

}  // namespace pdegensol
