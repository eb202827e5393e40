#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "bcsprobe/eos.hpp"
#include "bcsprobe/errors.hpp"
#include "bcsprobe/quadrature.hpp"
#include "bcsprobe/units.hpp"

namespace bcsprobe::chi {

using cplx = std::complex<double>;

struct SusceptibilityNumerics {
  double rel_tol = 1e-9;
  double abs_tol = 1e-14;
  double inner_tol_factor = 0.1;
  int max_outer_intervals = 3000;
  int max_inner_intervals = 600;
  int k_scan = 256;
  int u_scan = 16;
};

// A1, A2, I11, I22, I12 at one complex frequency nu + i epsilon.
struct ChiBuildingBlocks {
  double q = 0.0;
  double nu = 0.0;
  double epsilon = 0.0;
  cplx a1, a2, i11, i22, i12;
};

struct ComplexResponse {
  double q = 0.0;
  double nu = 0.0;
  double epsilon = 0.0;
  cplx chi_pair;
  cplx chi_coll;
  cplx chi_total;
};

namespace detail {

// slots of the joint integrand
enum Slot : std::size_t { kA1, kA2, kI11, kI12, kPair, kI11Direct, kSlots };
using Vec = std::array<cplx, kSlots>;

struct Kinematics {
  double q, delta, mu;
  cplx z2;
  double nu;
  bool direct;
};

inline double energy_sum(const Kinematics& kin, double k, double u) {
  const double base = k * k + 0.25 * kin.q * kin.q;
  const double kqu = k * kin.q * u;
  const double d2 = kin.delta * kin.delta;
  const double xm = base - kqu - kin.mu;
  const double xp = base + kqu - kin.mu;
  return std::sqrt(d2 + xm * xm) + std::sqrt(d2 + xp * xp);
}

// EE' - xi xi' without cancellation when xi xi' > 0
inline double coherence_minus(double e, double ep, double x, double xp, double d2) {
  const double xx = x * xp;
  if (xx <= 0.0) return e * ep - xx;
  return d2 * (x * x + xp * xp + d2) / (e * ep + xx);
}

inline Vec point_integrand(const Kinematics& kin, double k, double u, cplx z) {
  const double d2 = kin.delta * kin.delta;
  const double base = k * k + 0.25 * kin.q * kin.q;
  const double kqu = k * kin.q * u;
  const double x = base - kqu - kin.mu;
  const double xp = base + kqu - kin.mu;
  const double e = std::sqrt(d2 + x * x);
  const double ep = std::sqrt(d2 + xp * xp);
  const double s = e + ep;
  const double eep = e * ep;
  const cplx den = (s - z) * (s + z);
  const cplx g = s / (eep * den);

  Vec v;
  v[kA1] = (x + xp) * g;
  v[kA2] = g;
  const double kq_m = kqu / units::mass;
  v[kI11] = 0.5 * (kin.z2 - kq_m * kq_m) * g;
  v[kI12] = (e * xp + ep * x) / (eep * den);
  v[kPair] = -(coherence_minus(e, ep, x, xp, d2) + d2) * g;
  if (kin.direct) {
    v[kI11Direct] = (eep + x * xp + d2) * g - 1.0 / eos::quasiparticle_energy_sq(k * k, kin.delta, kin.mu);
  } else {
    v[kI11Direct] = 0.0;
  }
  return v;
}

// Roots in [lo, hi] of a sampled scalar function, refined by bisection.
template <class F>
void sampled_roots(F&& f, double lo, double hi, int samples, std::vector<double>& out) {
  double xa = lo, fa = f(lo);
  for (int i = 1; i <= samples; ++i) {
    const double xb = lo + (hi - lo) * i / samples;
    const double fb = f(xb);
    if ((fa < 0.0) != (fb < 0.0)) {
      double a = xa, b = xb, fla = fa;
      for (int it = 0; it < 60 && b - a > 1e-9 * (1.0 + std::abs(a)); ++it) {
        const double m = 0.5 * (a + b);
        const double fm = f(m);
        if ((fm < 0.0) == (fla < 0.0)) {
          a = m;
          fla = fm;
        } else {
          b = m;
        }
      }
      out.push_back(0.5 * (a + b));
    }
    xa = xb;
    fa = fb;
  }
}

inline std::vector<double> outer_breakpoints(const Kinematics& kin, int k_scan, int u_scan) {
  std::vector<double> kb;
  const double q = kin.q;
  kb.push_back(0.5 * q);
  kb.push_back(1.0);
  kb.push_back(2.0 + q);
  if (kin.mu > 0.0) {
    const double kmu = std::sqrt(2.0 * units::mass * kin.mu);
    kb.push_back(kmu);
    kb.push_back(kmu + 0.5 * q);
    if (kmu > 0.5 * q) kb.push_back(kmu - 0.5 * q);
    if (kmu * kmu > 0.25 * q * q) kb.push_back(std::sqrt(kmu * kmu - 0.25 * q * q));
  }

  // edges of the resonance sheet E + E' = nu, found in t = atan k
  if (kin.nu > 0.0) {
    auto smin = [&](double t) {
      const double k = std::tan(t);
      double best = energy_sum(kin, k, 0.0);
      for (int j = 1; j <= u_scan; ++j) best = std::min(best, energy_sum(kin, k, double(j) / u_scan));
      return best - kin.nu;
    };
    auto smax = [&](double t) {
      const double k = std::tan(t);
      double best = energy_sum(kin, k, 0.0);
      for (int j = 1; j <= u_scan; ++j) best = std::max(best, energy_sum(kin, k, double(j) / u_scan));
      return best - kin.nu;
    };
    const double tmax = 0.5 * std::numbers::pi * (1.0 - 1e-9);
    std::vector<double> tb;
    sampled_roots(smin, 0.0, tmax, k_scan, tb);
    sampled_roots(smax, 0.0, tmax, k_scan, tb);
    for (double t : tb) kb.push_back(std::tan(t));
  }
  return kb;
}

inline quad::QuadResult<Vec> integrate_blocks(double q, cplx z, const eos::CrossoverPoint& point, bool direct,
                                              const SusceptibilityNumerics& num) {
  Kinematics kin{q, point.delta(), point.mu(), z * z, z.real(), direct};

  quad::AdaptiveOptions inner;
  inner.rel_tol = num.rel_tol * num.inner_tol_factor;
  inner.abs_tol = num.abs_tol * num.inner_tol_factor;
  inner.max_intervals = num.max_inner_intervals;
  // just below threshold the inner target can sit under the roundoff floor of
  // E + E' - nu; the outer integral still judges convergence
  inner.throw_on_failure = false;
  quad::AdaptiveOptions outer;
  outer.rel_tol = num.rel_tol;
  outer.abs_tol = num.abs_tol;
  outer.max_intervals = num.max_outer_intervals;

  std::vector<double> ub;
  auto over_u = [&](double k) -> Vec {
    ub.clear();
    if (kin.nu > 0.0)
      sampled_roots([&](double u) { return energy_sum(kin, k, u) - kin.nu; }, 0.0, 1.0, num.u_scan, ub);
    auto bp = quad::clean_breakpoints(ub, 0.0, 1.0);
    auto r = quad::integrate<Vec>([&](double u) { return point_integrand(kin, k, u, z); },
                                  std::span<const double>(bp), inner);
    return r.value;
  };

  auto kb = outer_breakpoints(kin, num.k_scan, num.u_scan);
  std::vector<double> tb;
  for (double k : kb) tb.push_back(std::atan(k));
  tb = quad::clean_breakpoints(std::move(tb), 0.0, 0.5 * std::numbers::pi);

  constexpr double pref = 1.0 / (2.0 * std::numbers::pi * std::numbers::pi);
  auto over_t = [&](double t) -> Vec {
    const double k = std::tan(t);
    const double w = pref * k * k * (1.0 + k * k);
    return quad::detail::scale(w, over_u(k));
  };
  return quad::integrate<Vec>(over_t, std::span<const double>(tb), outer);
}

inline void check_args(double q, double nu, double epsilon, const eos::CrossoverPoint& point) {
  if (!(q > 0.0) || !std::isfinite(q)) throw DomainError("susceptibility: q must be positive");
  if (!std::isfinite(nu)) throw DomainError("susceptibility: nu must be finite");
  if (!(epsilon >= 0.0)) throw DomainError("susceptibility: epsilon must be non-negative");
  // on the real axis the denominators vanish inside the continuum
  if (epsilon == 0.0 && std::abs(nu) >= eos::pair_threshold_closed_form(q, point.delta(), point.mu()))
    throw DomainError("susceptibility: epsilon = 0 is only allowed below the pair threshold");
}

inline ChiBuildingBlocks to_blocks(double q, double nu, double epsilon, const Vec& v, double delta) {
  ChiBuildingBlocks b;
  b.q = q;
  b.nu = nu;
  b.epsilon = epsilon;
  b.a1 = v[kA1];
  b.a2 = v[kA2];
  b.i11 = v[kI11];
  b.i22 = v[kI11] - 2.0 * delta * delta * v[kA2];
  b.i12 = v[kI12];
  return b;
}

}  // namespace detail

// epsilon = 0 is accepted below the pair threshold, where every integrand is real
inline ChiBuildingBlocks building_blocks(double q, double nu, double epsilon, const eos::CrossoverPoint& point,
                                         const SusceptibilityNumerics& num = {}) {
  detail::check_args(q, nu, epsilon, point);
  const auto r = detail::integrate_blocks(q, cplx(nu, epsilon), point, false, num);
  return detail::to_blocks(q, nu, epsilon, r.value, point.delta());
}

inline cplx chi_pair(double q, double nu, double epsilon, const eos::CrossoverPoint& point,
                     const SusceptibilityNumerics& num = {}) {
  detail::check_args(q, nu, epsilon, point);
  return detail::integrate_blocks(q, cplx(nu, epsilon), point, false, num).value[detail::kPair];
}

inline cplx coll_numerator(const ChiBuildingBlocks& b, double delta) {
  const cplx z(b.nu, b.epsilon);
  const cplx z2 = z * z;
  return delta * delta * (b.a1 * b.a1 * b.i11 + z2 * b.a2 * b.a2 * b.i22 - 2.0 * z2 * b.a1 * b.a2 * b.i12);
}

inline cplx chi_coll(const ChiBuildingBlocks& b, const eos::CrossoverPoint& point) {
  const cplx z(b.nu, b.epsilon);
  const cplx t1 = b.i11 * b.i22;
  const cplx t2 = z * z * b.i12 * b.i12;
  const cplx den = t1 - t2;
  const double scale = std::abs(t1) + std::abs(t2);
  if (!(std::abs(den) > 1e-15 * scale)) throw PoleSingular("chi_coll: frequency sits on the collective pole");
  return coll_numerator(b, point.delta()) / den;
}

// B and Omega^2 of the pole representation chi_coll = B / (z^2 - Omega^2)
struct PoleForm {
  cplx b;
  cplx omega2;
};

inline PoleForm pole_form(const ChiBuildingBlocks& bl, const eos::CrossoverPoint& point) {
  const cplx i12sq = bl.i12 * bl.i12;
  return {-coll_numerator(bl, point.delta()) / i12sq, bl.i11 * bl.i22 / i12sq};
}

inline cplx chi_coll_compact(const ChiBuildingBlocks& b, const eos::CrossoverPoint& point) {
  const auto p = pole_form(b, point);
  const cplx z(b.nu, b.epsilon);
  const cplx den = z * z - p.omega2;
  if (!(std::abs(den) > 1e-15 * (std::abs(z * z) + std::abs(p.omega2))))
    throw PoleSingular("chi_coll: frequency sits on the collective pole");
  return p.b / den;
}

inline cplx chi_coll(double q, double nu, double epsilon, const eos::CrossoverPoint& point,
                     const SusceptibilityNumerics& num = {}) {
  return chi_coll(building_blocks(q, nu, epsilon, point, num), point);
}

// chi_pair and chi_coll from one pass over the momentum integrals
inline ComplexResponse response(double q, double nu, double epsilon, const eos::CrossoverPoint& point,
                                const SusceptibilityNumerics& num = {}) {
  detail::check_args(q, nu, epsilon, point);
  const auto r = detail::integrate_blocks(q, cplx(nu, epsilon), point, false, num);
  const auto b = detail::to_blocks(q, nu, epsilon, r.value, point.delta());
  ComplexResponse out;
  out.q = q;
  out.nu = nu;
  out.epsilon = epsilon;
  out.chi_pair = r.value[detail::kPair];
  out.chi_coll = chi_coll(b, point);
  out.chi_total = out.chi_pair + out.chi_coll;
  return out;
}

struct I11Forms {
  cplx direct;
  cplx identity;
};

// I11 with the explicit 1/E_k subtraction and in the (nu^2 - (k.q/m)^2) form
inline I11Forms i11_both_forms(double q, double nu, double epsilon, const eos::CrossoverPoint& point,
                               const SusceptibilityNumerics& num = {}) {
  detail::check_args(q, nu, epsilon, point);
  const auto r = detail::integrate_blocks(q, cplx(nu, epsilon), point, true, num);
  return {r.value[detail::kI11Direct], r.value[detail::kI11]};
}

inline double i11_identity_gap(double q, double nu, double epsilon, const eos::CrossoverPoint& point,
                               const SusceptibilityNumerics& num = {}) {
  const auto f = i11_both_forms(q, nu, epsilon, point, num);
  return std::abs(f.direct - f.identity) / std::abs(f.direct);
}

}  // namespace bcsprobe::chi
