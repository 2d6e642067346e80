#pragma once

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

namespace pdegensol {

inline constexpr std::size_t kMaxVars = 4;
inline constexpr std::size_t kMaxJet = 20;

using MultiIndex = std::array<std::uint8_t, kMaxVars>;

inline int total_order(const MultiIndex& a) {
  int s = 0;
  for (auto v : a) s += v;
  return s;
}

inline bool divides(const MultiIndex& b, const MultiIndex& a) {
  for (std::size_t i = 0; i < kMaxVars; ++i)
    if (b[i] > a[i]) return false;
  return true;
}

inline double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

/// Downward-closed set of multi-indices over up to four variables, with the
/// convolution table used by truncated Taylor products.
class IndexSet {
 public:
  /// All multi-indices with |alpha| <= order.
  static std::shared_ptr<const IndexSet> total_degree(std::size_t nvars, int order) {
    std::vector<MultiIndex> gens;
    enumerate(nvars, order, gens);
    return std::shared_ptr<const IndexSet>(new IndexSet(nvars, std::move(gens)));
  }

  /// Smallest downward-closed set containing `generators`.
  static std::shared_ptr<const IndexSet> closure(std::size_t nvars, std::span<const MultiIndex> generators) {
    std::vector<MultiIndex> all;
    for (const auto& g : generators) {
      MultiIndex b{};
      add_divisors(g, 0, b, all);
    }
    std::sort(all.begin(), all.end(), [](const MultiIndex& a, const MultiIndex& b) {
      int oa = total_order(a), ob = total_order(b);
      if (oa != ob) return oa < ob;
      return a > b;
    });
    all.erase(std::unique(all.begin(), all.end()), all.end());
    return std::shared_ptr<const IndexSet>(new IndexSet(nvars, std::move(all)));
  }

  /// The order-zero set used for plain values.
  static const IndexSet& scalar() { return scalar_; }

  std::size_t size() const { return indices_.size(); }
  std::size_t nvars() const { return nvars_; }
  int order() const { return order_; }
  const MultiIndex& index(std::size_t i) const { return indices_[i]; }
  const std::vector<MultiIndex>& indices() const { return indices_; }

  int find(const MultiIndex& a) const {
    for (std::size_t i = 0; i < indices_.size(); ++i)
      if (indices_[i] == a) return static_cast<int>(i);
    return -1;
  }

  /// Position of the first-order index e_v, or -1.
  int unit(std::size_t v) const { return v < kMaxVars ? units_[v] : -1; }

  struct Pair {
    std::uint8_t left;
    std::uint8_t right;
  };
  const std::vector<Pair>& products(std::size_t i) const { return products_[i]; }

 private:
  IndexSet(std::size_t nvars, std::vector<MultiIndex> idx) : nvars_(nvars), indices_(std::move(idx)) {
    if (indices_.size() > kMaxJet) throw std::length_error("jet index set exceeds capacity");
    if (indices_.empty() || indices_.front() != MultiIndex{})
      throw std::invalid_argument("index set must start with the zero multi-index");
    units_.fill(-1);
    for (std::size_t v = 0; v < nvars_; ++v) {
      MultiIndex e{};
      e[v] = 1;
      units_[v] = find(e);
    }
    products_.resize(indices_.size());
    for (std::size_t i = 0; i < indices_.size(); ++i) {
      order_ = std::max(order_, total_order(indices_[i]));
      for (std::size_t j = 0; j < indices_.size(); ++j) {
        if (!divides(indices_[j], indices_[i])) continue;
        MultiIndex rest{};
        for (std::size_t k = 0; k < kMaxVars; ++k) rest[k] = indices_[i][k] - indices_[j][k];
        int r = find(rest);
        if (r < 0) throw std::invalid_argument("index set is not downward closed");
        products_[i].push_back({static_cast<std::uint8_t>(j), static_cast<std::uint8_t>(r)});
      }
    }
  }

  static void enumerate(std::size_t nvars, int order, std::vector<MultiIndex>& out) {
    for (int o = 0; o <= order; ++o) {
      MultiIndex a{};
      fill(nvars, 0, o, a, out);
    }
  }

  static void fill(std::size_t nvars, std::size_t pos, int remaining, MultiIndex& a, std::vector<MultiIndex>& out) {
    if (nvars == 0) {
      if (remaining == 0) out.push_back(a);
      return;
    }
    if (pos + 1 == nvars) {
      a[pos] = static_cast<std::uint8_t>(remaining);
      out.push_back(a);
      a[pos] = 0;
      return;
    }
    for (int k = remaining; k >= 0; --k) {
      a[pos] = static_cast<std::uint8_t>(k);
      fill(nvars, pos + 1, remaining - k, a, out);
    }
    a[pos] = 0;
  }

  static void add_divisors(const MultiIndex& g, std::size_t pos, MultiIndex& b, std::vector<MultiIndex>& out) {
    if (pos == kMaxVars) {
      out.push_back(b);
      return;
    }
    for (int k = 0; k <= g[pos]; ++k) {
      b[pos] = static_cast<std::uint8_t>(k);
      add_divisors(g, pos + 1, b, out);
    }
    b[pos] = 0;
  }

  std::size_t nvars_;
  std::vector<MultiIndex> indices_;
  std::array<int, kMaxVars> units_{};
  std::vector<std::vector<Pair>> products_;
  int order_ = 0;

  static const IndexSet scalar_;
};

inline const IndexSet IndexSet::scalar_{0, {MultiIndex{}}};

/// Truncated multivariate Taylor expansion. Coefficients are stored
/// normalised (c_alpha = d^alpha f / alpha!) so that products are plain
/// convolutions over the index set.
class Jet {
 public:
  // Only the first size() coefficients are meaningful; the rest of the
  // fixed buffer is never read.
  Jet() : set_(&IndexSet::scalar()) { c_[0] = 0.0; }
  explicit Jet(const IndexSet& set, double value = 0.0) : set_(&set) {
    std::fill_n(c_.begin(), set.size(), 0.0);
    c_[0] = value;
  }
  Jet(const Jet& o) : set_(o.set_) { std::copy_n(o.c_.begin(), o.size(), c_.begin()); }
  Jet& operator=(const Jet& o) {
    set_ = o.set_;
    std::copy_n(o.c_.begin(), o.size(), c_.begin());
    return *this;
  }

  static Jet constant(const IndexSet& set, double v) { return Jet(set, v); }

  /// Independent variable number `v` with value `x`.
  static Jet variable(const IndexSet& set, std::size_t v, double x) {
    Jet j(set, x);
    int u = set.unit(v);
    if (u >= 0) j.c_[static_cast<std::size_t>(u)] = 1.0;
    return j;
  }

  const IndexSet& set() const { return *set_; }
  std::size_t size() const { return set_->size(); }
  double value() const { return c_[0]; }
  double coeff(std::size_t i) const { return c_[i]; }
  double& coeff(std::size_t i) { return c_[i]; }
  bool is_scalar() const { return set_->size() == 1; }

  /// d^alpha f at the expansion point; 0 when alpha is outside the set.
  double partial(const MultiIndex& a) const {
    int i = set_->find(a);
    if (i < 0) return 0.0;
    double f = 1.0;
    for (auto k : a) f *= factorial(k);
    return c_[static_cast<std::size_t>(i)] * f;
  }

  /// Same jet re-expressed over `target` (a superset or the scalar set).
  Jet promote(const IndexSet& target) const {
    if (&target == set_) return *this;
    Jet out(target, 0.0);
    if (is_scalar()) {
      out.c_[0] = c_[0];
      return out;
    }
    for (std::size_t i = 0; i < target.size(); ++i) {
      int k = set_->find(target.index(i));
      if (k >= 0) out.c_[i] = c_[static_cast<std::size_t>(k)];
    }
    return out;
  }

  Jet& operator+=(const Jet& o) {
    if (o.is_scalar()) {
      c_[0] += o.c_[0];
      return *this;
    }
    adopt(o);
    for (std::size_t i = 0; i < size(); ++i) c_[i] += o.c_[i];
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    if (o.is_scalar()) {
      c_[0] -= o.c_[0];
      return *this;
    }
    adopt(o);
    for (std::size_t i = 0; i < size(); ++i) c_[i] -= o.c_[i];
    return *this;
  }
  Jet& operator*=(double s) {
    for (std::size_t i = 0; i < size(); ++i) c_[i] *= s;
    return *this;
  }
  Jet& operator+=(double s) {
    c_[0] += s;
    return *this;
  }

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator*(Jet a, double s) { return a *= s; }
  friend Jet operator*(double s, Jet a) { return a *= s; }
  friend Jet operator-(Jet a) { return a *= -1.0; }

  friend Jet operator*(const Jet& a, const Jet& b) {
    if (a.is_scalar()) return b * a.c_[0];
    if (b.is_scalar()) return a * b.c_[0];
    if (a.set_ != b.set_) throw std::logic_error("jet index sets differ");
    Jet r(*a.set_, 0.0);
    const IndexSet& s = *a.set_;
    for (std::size_t i = 0; i < s.size(); ++i) {
      double acc = 0.0;
      for (auto p : s.products(i)) acc += a.c_[p.left] * b.c_[p.right];
      r.c_[i] = acc;
    }
    return r;
  }

  /// f(u) from the derivatives f^(k)(u0), k = 0..order.
  Jet compose(std::span<const double> derivs) const {
    const int n = set_->order();
    Jet r(*set_, 0.0);
    if (n == 0 || is_scalar()) {
      r.c_[0] = derivs[0];
      return r;
    }
    Jet delta = *this;
    delta.c_[0] = 0.0;
    r.c_[0] = derivs[static_cast<std::size_t>(n)] / factorial(n);
    for (int k = n - 1; k >= 0; --k) {
      r = r * delta;
      r.c_[0] += derivs[static_cast<std::size_t>(k)] / factorial(k);
    }
    return r;
  }

 private:
  void adopt(const Jet& o) {
    if (set_ == o.set_) return;
    if (is_scalar()) {
      double v = c_[0];
      set_ = o.set_;
      std::fill_n(c_.begin(), size(), 0.0);
      c_[0] = v;
      return;
    }
    throw std::logic_error("jet index sets differ");
  }

  const IndexSet* set_;
  std::array<double, kMaxJet> c_;
};

// Elementary functions. Domain checks are the caller's responsibility.

namespace jet_detail {
inline std::array<double, kMaxJet> buffer() {
  std::array<double, kMaxJet> d{};
  return d;
}
}  // namespace jet_detail

inline Jet exp(const Jet& u) {
  auto d = jet_detail::buffer();
  double e = std::exp(u.value());
  for (int k = 0; k <= u.set().order(); ++k) d[static_cast<std::size_t>(k)] = e;
  return u.compose(d);
}

inline Jet log(const Jet& u) {
  auto d = jet_detail::buffer();
  double x = u.value();
  d[0] = std::log(x);
  for (int k = 1; k <= u.set().order(); ++k)
    d[static_cast<std::size_t>(k)] = ((k % 2) ? 1.0 : -1.0) * factorial(k - 1) / std::pow(x, k);
  return u.compose(d);
}

/// u^p for a constant real exponent.
inline Jet pow(const Jet& u, double p) {
  auto d = jet_detail::buffer();
  double x = u.value();
  double coef = 1.0;
  for (int k = 0; k <= u.set().order(); ++k) {
    double e = p - k;
    d[static_cast<std::size_t>(k)] = coef == 0.0 ? 0.0 : coef * std::pow(x, e);
    coef *= e;
  }
  return u.compose(d);
}

inline Jet sqrt(const Jet& u) { return pow(u, 0.5); }

inline Jet reciprocal(const Jet& u) {
  auto d = jet_detail::buffer();
  double x = u.value();
  double inv = 1.0 / x;
  double term = inv;
  for (int k = 0; k <= u.set().order(); ++k) {
    d[static_cast<std::size_t>(k)] = ((k % 2) ? -1.0 : 1.0) * factorial(k) * term;
    term *= inv;
  }
  return u.compose(d);
}

inline Jet operator/(const Jet& a, const Jet& b) {
  if (b.is_scalar()) return a * (1.0 / b.value());
  return a * reciprocal(b);
}

inline Jet sin(const Jet& u) {
  auto d = jet_detail::buffer();
  double s = std::sin(u.value()), c = std::cos(u.value());
  const double cyc[4] = {s, c, -s, -c};
  for (int k = 0; k <= u.set().order(); ++k) d[static_cast<std::size_t>(k)] = cyc[k % 4];
  return u.compose(d);
}

inline Jet cos(const Jet& u) {
  auto d = jet_detail::buffer();
  double s = std::sin(u.value()), c = std::cos(u.value());
  const double cyc[4] = {c, -s, -c, s};
  for (int k = 0; k <= u.set().order(); ++k) d[static_cast<std::size_t>(k)] = cyc[k % 4];
  return u.compose(d);
}

inline Jet tan(const Jet& u) {
  // d^k tan = P_k(tan) with P_{k+1}(y) = P_k'(y) (1 + y^2).
  auto d = jet_detail::buffer();
  double y = std::tan(u.value());
  std::vector<double> poly{0.0, 1.0};
  for (int k = 0; k <= u.set().order(); ++k) {
    double v = 0.0;
    for (std::size_t i = poly.size(); i-- > 0;) v = v * y + poly[i];
    d[static_cast<std::size_t>(k)] = v;
    std::vector<double> deriv(poly.size() > 1 ? poly.size() - 1 : 1, 0.0);
    for (std::size_t i = 1; i < poly.size(); ++i) deriv[i - 1] = poly[i] * static_cast<double>(i);
    std::vector<double> next(deriv.size() + 2, 0.0);
    for (std::size_t i = 0; i < deriv.size(); ++i) {
      next[i] += deriv[i];
      next[i + 2] += deriv[i];
    }
    poly = std::move(next);
  }
  return u.compose(d);
}

}  // namespace pdegensol
