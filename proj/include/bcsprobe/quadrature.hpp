#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "bcsprobe/errors.hpp"

namespace bcsprobe::quad {

// ---------------------------------------------------------------------------
// Gauss-Legendre rules
// ---------------------------------------------------------------------------

struct GaussLegendreRule {
  std::vector<double> nodes;    // on [-1, 1], ascending
  std::vector<double> weights;
};

// Nodes from Newton iteration on the three-term Legendre recurrence.
inline GaussLegendreRule make_gauss_legendre(std::size_t n) {
  if (n == 0) throw DomainError("gauss_legendre: need at least one node");
  GaussLegendreRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const std::size_t half = (n + 1) / 2;
  for (std::size_t i = 0; i < half; ++i) {
    double z = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = 0.0;
      for (std::size_t j = 1; j <= n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * static_cast<double>(j) - 1.0) * z * p1 - (static_cast<double>(j) - 1.0) * p2) /
             static_cast<double>(j);
      }
      dp = static_cast<double>(n) * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    // recompute derivative at the converged node
    double p0 = 1.0, p1 = 0.0;
    for (std::size_t j = 1; j <= n; ++j) {
      const double p2 = p1;
      p1 = p0;
      p0 = ((2.0 * static_cast<double>(j) - 1.0) * z * p1 - (static_cast<double>(j) - 1.0) * p2) /
           static_cast<double>(j);
    }
    dp = static_cast<double>(n) * (z * p0 - p1) / (z * z - 1.0);
    const double w = 2.0 / ((1.0 - z * z) * dp * dp);
    rule.nodes[i] = -z;
    rule.nodes[n - 1 - i] = z;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  return rule;
}

// Rules are immutable once built; the cache hands out stable references.
inline const GaussLegendreRule& gauss_legendre(std::size_t n) {
  static std::mutex mutex;
  static std::map<std::size_t, GaussLegendreRule> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, make_gauss_legendre(n)).first;
  return it->second;
}

// ---------------------------------------------------------------------------
// Component access for vector-valued integrands
// ---------------------------------------------------------------------------

template <class V>
struct Components;

template <>
struct Components<double> {
  static constexpr std::size_t size = 1;
  static double abs(double v, std::size_t) { return std::abs(v); }
  static double zero() { return 0.0; }
};

template <>
struct Components<std::complex<double>> {
  static constexpr std::size_t size = 1;
  static double abs(const std::complex<double>& v, std::size_t) { return std::abs(v); }
  static std::complex<double> zero() { return {0.0, 0.0}; }
};

template <class T, std::size_t N>
struct Components<std::array<T, N>> {
  static constexpr std::size_t size = N;
  static double abs(const std::array<T, N>& v, std::size_t i) { return std::abs(v[i]); }
  static std::array<T, N> zero() {
    std::array<T, N> z;
    z.fill(T{});
    return z;
  }
};

namespace detail {

template <class T, std::size_t N>
std::array<T, N> operator+(const std::array<T, N>& a, const std::array<T, N>& b) {
  std::array<T, N> r;
  for (std::size_t i = 0; i < N; ++i) r[i] = a[i] + b[i];
  return r;
}
template <class T, std::size_t N>
std::array<T, N> operator-(const std::array<T, N>& a, const std::array<T, N>& b) {
  std::array<T, N> r;
  for (std::size_t i = 0; i < N; ++i) r[i] = a[i] - b[i];
  return r;
}
template <class T, std::size_t N>
std::array<T, N> operator*(double s, const std::array<T, N>& a) {
  std::array<T, N> r;
  for (std::size_t i = 0; i < N; ++i) r[i] = s * a[i];
  return r;
}

template <class V>
V add(const V& a, const V& b) {
  using detail::operator+;
  return a + b;
}
template <class V>
V sub(const V& a, const V& b) {
  using detail::operator-;
  return a - b;
}
template <class V>
V scale(double s, const V& a) {
  using detail::operator*;
  return s * a;
}

// 21-point Kronrod extension of the 10-point Gauss rule (QUADPACK qk21).
inline constexpr std::array<double, 11> kXgk = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.0};
inline constexpr std::array<double, 11> kWgk = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077958109831074, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};
inline constexpr std::array<double, 5> kWg = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

template <class V>
struct Panel {
  double a = 0.0;
  double b = 0.0;
  V value{};
  std::array<double, Components<V>::size> error{};
};

template <class V, class F>
Panel<V> gauss_kronrod_21(F& f, double a, double b) {
  using C = Components<V>;
  constexpr std::size_t n = C::size;
  const double centre = 0.5 * (a + b);
  const double half = 0.5 * (b - a);

  std::array<V, 21> fv;
  fv[0] = f(centre);
  for (std::size_t j = 0; j < 10; ++j) {
    const double dx = half * kXgk[j];
    fv[1 + 2 * j] = f(centre - dx);
    fv[2 + 2 * j] = f(centre + dx);
  }

  V resk = scale(kWgk[10], fv[0]);
  V resg = C::zero();
  for (std::size_t j = 0; j < 10; ++j) {
    const V pair = add(fv[1 + 2 * j], fv[2 + 2 * j]);
    resk = add(resk, scale(kWgk[j], pair));
    if (j % 2 == 1) resg = add(resg, scale(kWg[j / 2], pair));
  }

  Panel<V> p;
  p.a = a;
  p.b = b;
  p.value = scale(half, resk);
  const V diff = scale(half, sub(resk, resg));
  const V mean = scale(0.5, resk);
  constexpr double epmach = std::numeric_limits<double>::epsilon();
  constexpr double uflow = std::numeric_limits<double>::min();
  for (std::size_t c = 0; c < n; ++c) {
    double resabs = kWgk[10] * C::abs(fv[0], c);
    double resasc = kWgk[10] * C::abs(sub(fv[0], mean), c);
    for (std::size_t j = 0; j < 10; ++j) {
      resabs += kWgk[j] * (C::abs(fv[1 + 2 * j], c) + C::abs(fv[2 + 2 * j], c));
      resasc += kWgk[j] * (C::abs(sub(fv[1 + 2 * j], mean), c) + C::abs(sub(fv[2 + 2 * j], mean), c));
    }
    resabs *= std::abs(half);
    resasc *= std::abs(half);
    double err = C::abs(diff, c);
    if (resasc != 0.0 && err != 0.0) err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
    if (resabs > uflow / (50.0 * epmach)) err = std::max(epmach * 50.0 * resabs, err);
    p.error[c] = err;
  }
  return p;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Globally adaptive Gauss-Kronrod integration
// ---------------------------------------------------------------------------

struct AdaptiveOptions {
  double rel_tol = 1e-8;
  double abs_tol = 1e-14;
  int max_intervals = 4000;
  // Throw QuadratureNotConverged instead of returning an unconverged result.
  bool throw_on_failure = true;
};

template <class V>
struct QuadResult {
  V value{};
  std::array<double, Components<V>::size> error{};
  int intervals = 0;
  bool converged = false;
};

// Integrates f over [breakpoints.front(), breakpoints.back()], starting from
// the panels given by the (sorted) breakpoints. Every component of a vector
// valued integrand must satisfy err_i <= max(abs_tol, rel_tol |I_i|); the
// panel with the worst scaled error is bisected next.
template <class V, class F>
QuadResult<V> integrate(F&& f, std::span<const double> breakpoints, const AdaptiveOptions& opt = {}) {
  using C = Components<V>;
  constexpr std::size_t n = C::size;
  if (breakpoints.size() < 2) throw DomainError("integrate: need at least two breakpoints");

  std::vector<detail::Panel<V>> panels;
  panels.reserve(static_cast<std::size_t>(opt.max_intervals) + breakpoints.size());
  for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
    if (!(breakpoints[i + 1] > breakpoints[i])) continue;
    panels.push_back(detail::gauss_kronrod_21<V>(f, breakpoints[i], breakpoints[i + 1]));
  }

  QuadResult<V> result;
  auto totals = [&](V& value, std::array<double, n>& error) {
    value = C::zero();
    error.fill(0.0);
    for (const auto& p : panels) {
      value = detail::add(value, p.value);
      for (std::size_t c = 0; c < n; ++c) error[c] += p.error[c];
    }
  };

  for (;;) {
    totals(result.value, result.error);
    std::array<double, n> tol{};
    bool done = true;
    for (std::size_t c = 0; c < n; ++c) {
      tol[c] = std::max(opt.abs_tol, opt.rel_tol * C::abs(result.value, c));
      if (result.error[c] > tol[c]) done = false;
    }
    result.intervals = static_cast<int>(panels.size());
    if (done) {
      result.converged = true;
      return result;
    }
    if (static_cast<int>(panels.size()) >= opt.max_intervals) break;

    std::size_t worst = 0;
    double worst_score = -1.0;
    for (std::size_t i = 0; i < panels.size(); ++i) {
      double score = 0.0;
      for (std::size_t c = 0; c < n; ++c) score = std::max(score, panels[i].error[c] / tol[c]);
      if (score > worst_score) {
        worst_score = score;
        worst = i;
      }
    }
    const double a = panels[worst].a;
    const double b = panels[worst].b;
    const double mid = 0.5 * (a + b);
    if (!(mid > a && mid < b)) break;  // panel exhausted to machine resolution
    panels[worst] = detail::gauss_kronrod_21<V>(f, a, mid);
    panels.push_back(detail::gauss_kronrod_21<V>(f, mid, b));
  }

  result.converged = false;
  if (opt.throw_on_failure) {
    double worst = 0.0;
    for (std::size_t c = 0; c < n; ++c) worst = std::max(worst, result.error[c]);
    throw QuadratureNotConverged("adaptive quadrature exhausted " + std::to_string(panels.size()) + " panels",
                                 worst);
  }
  return result;
}

template <class V, class F>
QuadResult<V> integrate(F&& f, double a, double b, const AdaptiveOptions& opt = {}) {
  const std::array<double, 2> bp{a, b};
  return integrate<V>(std::forward<F>(f), std::span<const double>(bp), opt);
}

// Sorts, clips to [lo, hi] and removes near-duplicate breakpoints.
inline std::vector<double> clean_breakpoints(std::vector<double> pts, double lo, double hi) {
  pts.push_back(lo);
  pts.push_back(hi);
  std::vector<double> out;
  for (double p : pts)
    if (std::isfinite(p) && p >= lo && p <= hi) out.push_back(p);
  std::sort(out.begin(), out.end());
  const double min_gap = 1e-13 * std::max(1.0, hi - lo);
  std::vector<double> unique;
  for (double p : out)
    if (unique.empty() || p - unique.back() > min_gap) unique.push_back(p);
  if (unique.back() < hi) unique.back() = hi;
  return unique;
}

// Composite fixed-order Gauss-Legendre over the given panels of [0, inf),
// after the substitution k = tan(t). The integrand receives k and must return
// a value already multiplied by nothing: the Jacobian sec^2 t is applied here.
template <class V, class F>
V fixed_tan_mapped(F&& f, std::span<const double> k_breaks, std::size_t nodes_per_panel) {
  using C = Components<V>;
  const auto& rule = gauss_legendre(nodes_per_panel);
  std::vector<double> t_breaks;
  t_breaks.reserve(k_breaks.size() + 1);
  for (double k : k_breaks) t_breaks.push_back(std::atan(k));
  t_breaks.push_back(0.5 * std::numbers::pi);
  t_breaks = clean_breakpoints(std::move(t_breaks), 0.0, 0.5 * std::numbers::pi);
  V total = C::zero();
  for (std::size_t p = 0; p + 1 < t_breaks.size(); ++p) {
    const double a = t_breaks[p];
    const double b = t_breaks[p + 1];
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      const double t = c + h * rule.nodes[i];
      const double k = std::tan(t);
      const double jac = 1.0 + k * k;
      total = detail::add(total, detail::scale(h * rule.weights[i] * jac, f(k)));
    }
  }
  return total;
}

}  // namespace bcsprobe::quad
