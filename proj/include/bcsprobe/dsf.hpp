#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

#include <boost/math/tools/toms748_solve.hpp>

#include "bcsprobe/eos.hpp"
#include "bcsprobe/errors.hpp"
#include "bcsprobe/quadrature.hpp"
#include "bcsprobe/susceptibility.hpp"
#include "bcsprobe/units.hpp"

namespace bcsprobe::dsf {

// beta of the zero-temperature gas
inline constexpr double infinite_beta = std::numeric_limits<double>::infinity();

struct DsfSample {
  double q = 0.0;
  double nu = 0.0;
  double beta = infinite_beta;
  double epsilon = 0.0;
  double value = 0.0;
};

// S = -Im chi / (pi (1 - exp(-beta nu)))
inline double fdt_factor(double nu, double beta) {
  if (std::isinf(beta)) return nu > 0.0 ? 1.0 / std::numbers::pi : 0.0;
  return 1.0 / (std::numbers::pi * -std::expm1(-beta * nu));
}

inline DsfSample dsf(double q, double nu, double beta, double epsilon, const eos::CrossoverPoint& point,
                     const chi::SusceptibilityNumerics& num = {}) {
  if (!(epsilon > 0.0)) throw DomainError("dsf: epsilon must be positive");
  if (!(beta > 0.0)) throw DomainError("dsf: beta must be positive");
  DsfSample s{q, nu, beta, epsilon, 0.0};
  if (std::isinf(beta) && nu <= 0.0) return s;
  // Im chi is odd in nu, so at nu = 0 take the limit from a nearby point
  double nu_eval = nu;
  if (!std::isinf(beta) && std::abs(beta * nu) < 1e-8) nu_eval = 1e-8 / beta;
  const auto r = chi::response(q, nu_eval, epsilon, point, num);
  s.value = -r.chi_total.imag() * fdt_factor(nu_eval, beta);
  return s;
}

// ---------------------------------------------------------------------------
// collective mode
// ---------------------------------------------------------------------------

struct PoleNumerics {
  chi::SusceptibilityNumerics chi{1e-11, 1e-15, 0.1, 4000, 800, 256, 32};
  int prescan = 64;
  double scan_rel_tol = 1e-7;
  double bracket_margin = 1e-6;
  double merge_margin = 1e-3;
  double diff_step = 1e-4;
};

// Real-axis pole function I11 I22 - nu^2 I12^2; it vanishes where nu = Omega(q, nu)
// and stays real on both sides of the point where Omega turns imaginary.
inline double pole_function(double q, double nu, const eos::CrossoverPoint& point, const PoleNumerics& num = {}) {
  const auto b = chi::building_blocks(q, nu, 0.0, point, num.chi);
  return (b.i11 * b.i22 - nu * nu * b.i12 * b.i12).real();
}

inline double omega_function(double q, double nu, const eos::CrossoverPoint& point, const PoleNumerics& num = {}) {
  const auto b = chi::building_blocks(q, nu, 0.0, point, num.chi);
  const double prod = (b.i11 * b.i22).real();
  if (!(prod > 0.0)) throw DomainError("omega_function: Omega(q, nu) is not real here");
  return std::sqrt(prod) / b.i12.real();
}

struct CollectiveModePoint {
  double q = 0.0;
  double theta_q = 0.0;
  bool merged = true;
  double omega_q = std::numeric_limits<double>::quiet_NaN();
  double weight = std::numeric_limits<double>::quiet_NaN();
  double c_nu = std::numeric_limits<double>::quiet_NaN();
  double b = std::numeric_limits<double>::quiet_NaN();
  double d_omega_d_nu = std::numeric_limits<double>::quiet_NaN();  // partial Omega / partial nu
  double d_omega_d_q = std::numeric_limits<double>::quiet_NaN();   // partial Omega / partial q
};

namespace detail {

template <class F>
double solve_bracket(F&& f, double a, double b, double fa, double fb) {
  std::uintmax_t iters = 200;
  boost::math::tools::eps_tolerance<double> tol(50);
  const auto r = boost::math::tools::toms748_solve(f, a, b, fa, fb, tol, iters);
  return 0.5 * (r.first + r.second);
}

// one Richardson step on the central difference
template <class F>
double derivative(F&& f, double x, double h) {
  const double d1 = (f(x + h) - f(x - h)) / (2.0 * h);
  const double d2 = (f(x + 0.5 * h) - f(x - 0.5 * h)) / h;
  return (4.0 * d2 - d1) / 3.0;
}

// q step for derivatives at fixed nu, small enough that Theta stays above nu across the stencil
inline double q_step(double q, double nu, const eos::CrossoverPoint& point, double rel) {
  auto theta = [&](double x) { return eos::pair_threshold_closed_form(x, point.delta(), point.mu()); };
  const double d = 1e-6 * q;
  const double slope = std::abs(theta(q + d) - theta(q - d)) / (2.0 * d);
  const double room = theta(q) - nu;
  return slope > 0.0 ? std::min(rel * q, 0.25 * room / slope) : rel * q;
}

inline double pole_residue_b(double q, double nu, const eos::CrossoverPoint& point, const PoleNumerics& num) {
  const auto bl = chi::building_blocks(q, nu, 0.0, point, num.chi);
  return chi::pole_form(bl, point).b.real();
}

// root of nu - Omega(q, nu) on (0, theta_q), or nullopt if the mode is merged
inline std::optional<double> dispersion_root(double q, double theta, const eos::CrossoverPoint& point,
                                             const PoleNumerics& num) {
  const double lo = num.bracket_margin;
  const double hi = theta - num.bracket_margin;
  if (!(hi > lo)) return std::nullopt;
  // the scan only needs signs
  PoleNumerics coarse = num;
  coarse.chi.rel_tol = std::max(num.chi.rel_tol, num.scan_rel_tol);
  std::vector<double> xs(num.prescan + 1), fs(num.prescan + 1);
  for (int i = 0; i <= num.prescan; ++i) {
    xs[i] = lo + (hi - lo) * i / num.prescan;
    fs[i] = pole_function(q, xs[i], point, coarse);
  }
  int changes = 0;
  int at = -1;
  for (int i = 0; i < num.prescan; ++i)
    if ((fs[i] > 0.0) != (fs[i + 1] > 0.0)) {
      ++changes;
      at = i;
    }
  if (changes == 0) return std::nullopt;
  if (changes > 1) throw RootBracketFailure("collective_dispersion: several roots below the pair threshold", changes);
  auto f = [&](double nu) { return pole_function(q, nu, point, num); };
  double a = xs[at], b = xs[at + 1];
  double fa = f(a), fb = f(b);
  const double edge = theta - num.merge_margin;
  if (edge > a && edge < b) {
    const double fe = f(edge);
    if ((fe > 0.0) == (fa > 0.0)) return std::nullopt;  // grazing root
    b = edge;
    fb = fe;
  }
  if ((fa > 0.0) == (fb > 0.0)) throw RootBracketFailure("collective_dispersion: bracket lost on refinement", 0);
  const double root = solve_bracket(f, a, b, fa, fb);
  if (theta - root < num.merge_margin) return std::nullopt;
  return root;
}

}  // namespace detail

inline CollectiveModePoint collective_dispersion(double q, const eos::CrossoverPoint& point,
                                                 const PoleNumerics& num = {}) {
  if (!(q > 0.0)) throw DomainError("collective_dispersion: q must be positive");
  CollectiveModePoint m;
  m.q = q;
  m.theta_q = eos::pair_threshold_closed_form(q, point.delta(), point.mu());
  const auto root = detail::dispersion_root(q, m.theta_q, point, num);
  if (!root) return m;
  const double w = *root;
  m.merged = false;
  m.omega_q = w;
  m.b = detail::pole_residue_b(q, w, point, num);

  const double hn = std::min(num.diff_step * w, 0.25 * (m.theta_q - w));
  m.d_omega_d_nu = detail::derivative([&](double nu) { return omega_function(q, nu, point, num); }, w, hn);
  const double hq = detail::q_step(q, w, point, num.diff_step);
  m.d_omega_d_q = detail::derivative([&](double qq) { return omega_function(qq, w, point, num); }, q, hq);

  m.weight = m.b / (2.0 * w) / std::abs(1.0 - m.d_omega_d_nu);
  m.c_nu = m.b / (2.0 * w) / std::abs(m.d_omega_d_q);
  return m;
}

inline std::vector<CollectiveModePoint> dispersion_curve(std::span<const double> qs, const eos::CrossoverPoint& point,
                                                         const PoleNumerics& num = {}) {
  std::vector<CollectiveModePoint> out;
  out.reserve(qs.size());
  for (double q : qs) out.push_back(collective_dispersion(q, point, num));
  return out;
}

// long-wavelength weight rho0 eps_q / (c q)
inline double spectral_weight_smallq(double q, const eos::CrossoverPoint& point) {
  if (!(q > 0.0)) throw DomainError("spectral_weight_smallq: q must be positive");
  return units::density * units::kinetic(q) / (point.c() * q);
}

// ---------------------------------------------------------------------------
// mode at fixed frequency
// ---------------------------------------------------------------------------

struct ModeAtFrequency {
  double nu = 0.0;
  double q_nu = 0.0;
  double c_nu = 0.0;
  double b = 0.0;
  double d_omega_d_q = 0.0;
};

// q with omega_q = nu, from the sign change of the pole function along q at
// fixed nu. Only q with Theta_q above nu are scanned, so frequencies above the
// pair gap are allowed where the mode still sits below its own continuum.
inline double mode_wavevector(double nu, const eos::CrossoverPoint& point, const PoleNumerics& num = {}) {
  if (!(nu > 0.0)) throw DomainError("mode_wavevector: need nu > 0");
  PoleNumerics coarse = num;
  coarse.chi.rel_tol = std::max(num.chi.rel_tol, num.scan_rel_tol);
  const double q_lo = 0.25 * nu / point.c();
  const double q_hi = std::max(6.0, 4.0 * nu / point.c());
  auto gap_to_continuum = [&](double q) { return eos::pair_threshold_closed_form(q, point.delta(), point.mu()) - nu; };
  auto f = [&](double q) { return pole_function(q, nu, point, num); };
  const int n = num.prescan;
  double qa = 0.0, fa = 0.0;
  bool have = false;
  for (int i = 0; i <= n; ++i) {
    const double qb = q_lo * std::pow(q_hi / q_lo, double(i) / n);
    if (!(gap_to_continuum(qb) > num.merge_margin)) {
      have = false;
      continue;
    }
    const double fb = pole_function(qb, nu, point, coarse);
    if (have && ((fa > 0.0) != (fb > 0.0))) {
      const double q = detail::solve_bracket(f, qa, qb, f(qa), f(qb));
      if (gap_to_continuum(q) < num.merge_margin)
        throw NoModeAtFrequency("mode_wavevector: the mode at this frequency grazes the pair continuum");
      return q;
    }
    qa = qb;
    fa = fb;
    have = true;
  }
  throw NoModeAtFrequency("mode_wavevector: no undamped collective mode at this frequency");
}

// C_nu = B / (2 nu) |dOmega/dq|^{-1} at q = q_nu
inline ModeAtFrequency c_nu(double nu, const eos::CrossoverPoint& point, const PoleNumerics& num = {}) {
  ModeAtFrequency m;
  m.nu = nu;
  m.q_nu = mode_wavevector(nu, point, num);
  m.b = detail::pole_residue_b(m.q_nu, nu, point, num);
  m.d_omega_d_q = detail::derivative([&](double q) { return omega_function(q, nu, point, num); }, m.q_nu,
                                     detail::q_step(m.q_nu, nu, point, num.diff_step));
  m.c_nu = m.b / (2.0 * nu) / std::abs(m.d_omega_d_q);
  return m;
}

// omega_q near a known value, bracketing locally before falling back to the full scan
inline double dispersion_near(double q, double guess, const eos::CrossoverPoint& point, const PoleNumerics& num) {
  const double theta = eos::pair_threshold_closed_form(q, point.delta(), point.mu());
  auto f = [&](double nu) { return pole_function(q, nu, point, num); };
  double step = 1e-3 * guess;
  for (int i = 0; i < 20; ++i, step *= 2.0) {
    const double a = std::max(num.bracket_margin, guess - step);
    const double b = std::min(theta - num.bracket_margin, guess + step);
    const double fa = f(a), fb = f(b);
    if ((fa > 0.0) != (fb > 0.0)) return detail::solve_bracket(f, a, b, fa, fb);
  }
  const auto r = detail::dispersion_root(q, theta, point, num);
  if (!r) throw NoModeAtFrequency("dispersion_near: mode merged");
  return *r;
}

struct PhononDos {
  double nu = 0.0;
  double q_nu = 0.0;
  double group_velocity = 0.0;
  double value = 0.0;
};

// D(nu) = q_nu^2 / (2 pi^2 |d omega / dq|)
inline PhononDos phonon_dos(double nu, const eos::CrossoverPoint& point, const PoleNumerics& num = {}) {
  PhononDos d;
  d.nu = nu;
  d.q_nu = mode_wavevector(nu, point, num);
  const double h = detail::q_step(d.q_nu, nu, point, num.diff_step);
  d.group_velocity = detail::derivative([&](double q) { return dispersion_near(q, nu, point, num); }, d.q_nu, h);
  d.value = d.q_nu * d.q_nu / (2.0 * std::numbers::pi * std::numbers::pi * std::abs(d.group_velocity));
  return d;
}

// ---------------------------------------------------------------------------
// sum rules
// ---------------------------------------------------------------------------

enum class SumRule { f_sum, compressibility };

struct SumRuleReport {
  SumRule which = SumRule::f_sum;
  double q = 0.0;
  double epsilon = 0.0;
  double nu_max = 0.0;
  double integral = 0.0;  // includes the tail
  double tail = 0.0;
  double expected = 0.0;
  double deviation = 0.0;  // relative
};

struct SumRuleNumerics {
  chi::SusceptibilityNumerics chi{1e-8, 1e-16, 0.1, 3000, 600, 256, 32};
  double rel_tol = 1e-5;
  double upper_factor = 10.0;
};

// zero-temperature spectrum integrated with weight nu (f-sum) or 1/nu (compressibility)
inline SumRuleReport sum_rule_check(double q, const eos::CrossoverPoint& point, SumRule which, double epsilon,
                                    const SumRuleNumerics& num = {}) {
  SumRuleReport rep;
  rep.which = which;
  rep.q = q;
  rep.epsilon = epsilon;
  const double theta = eos::pair_threshold_closed_form(q, point.delta(), point.mu());
  rep.nu_max = num.upper_factor * std::max(point.theta0(), units::kinetic(q) + units::fermi_velocity * q);

  auto weight = [&](double nu) { return which == SumRule::f_sum ? nu : 1.0 / nu; };
  auto f = [&](double nu) {
    return weight(nu) * dsf(q, nu, infinite_beta, epsilon, point, num.chi).value;
  };

  std::vector<double> bp{0.0, theta, rep.nu_max};
  const double c_guess = point.c() * q;
  for (double s : {-4.0, -1.0, 0.0, 1.0, 4.0}) bp.push_back(c_guess + s * epsilon);
  bp = quad::clean_breakpoints(std::move(bp), 0.0, rep.nu_max);
  quad::AdaptiveOptions opt;
  opt.rel_tol = num.rel_tol;
  opt.abs_tol = 0.0;
  opt.max_intervals = 400;
  const auto res = quad::integrate<double>(f, std::span<const double>(bp), opt);

  // power-law tail beyond nu_max
  const double f1 = f(rep.nu_max), f0 = f(rep.nu_max / 1.1);
  if (f1 > 0.0 && f0 > 0.0) {
    const double p = std::log(f0 / f1) / std::log(1.1);
    if (p > 1.0) rep.tail = f1 * rep.nu_max / (p - 1.0);
  }
  rep.integral = res.value + rep.tail;
  rep.expected = which == SumRule::f_sum ? units::density * units::kinetic(q)
                                         : units::density / (2.0 * units::mass * point.c() * point.c());
  rep.deviation = std::abs(rep.integral - rep.expected) / rep.expected;
  return rep;
}

}  // namespace bcsprobe::dsf
