#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

#include <boost/math/special_functions/bessel.hpp>

#include "bcsprobe/dsf.hpp"
#include "bcsprobe/eos.hpp"
#include "bcsprobe/errors.hpp"
#include "bcsprobe/quadrature.hpp"
#include "bcsprobe/units.hpp"

namespace bcsprobe::probe {

using Vec3 = std::array<double, 3>;

inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

// Impurity parameters. The confinement length follows from the trap
// frequency and is never stored on its own.
class ProbeConfig {
 public:
  ProbeConfig(double mass_ratio, double kappa, double omega_a, double beta = dsf::infinite_beta)
      : mass_ratio_(mass_ratio), kappa_(kappa), omega_a_(omega_a), beta_(beta) {
    if (!(mass_ratio > 0.0)) throw DomainError("ProbeConfig: mass ratio must be positive");
    if (!(kappa > 0.0)) throw DomainError("ProbeConfig: kappa must be positive");
    if (!(omega_a > 0.0)) throw DomainError("ProbeConfig: trap frequency must be positive");
    if (!(beta > 0.0)) throw DomainError("ProbeConfig: beta must be positive");
  }

  double mass_ratio() const noexcept { return mass_ratio_; }
  double kappa() const noexcept { return kappa_; }
  double omega_a() const noexcept { return omega_a_; }
  double beta() const noexcept { return beta_; }
  double impurity_mass() const noexcept { return mass_ratio_ * units::mass; }
  double ell() const noexcept { return 1.0 / std::sqrt(impurity_mass() * omega_a_); }

  ProbeConfig with_omega(double omega_a) const { return {mass_ratio_, kappa_, omega_a, beta_}; }

  // trap frequency that gives confinement length ell
  static double omega_for_ell(double mass_ratio, double ell) { return 1.0 / (mass_ratio * units::mass * ell * ell); }

 private:
  double mass_ratio_;
  double kappa_;
  double omega_a_;
  double beta_;
};

struct ImpuritySite {
  Vec3 position{};
  Vec3 dipole{0.0, 0.0, 1.0};

  ImpuritySite() = default;
  ImpuritySite(const Vec3& pos, const Vec3& d) : position(pos), dipole(d) {
    if (std::abs(norm(d) - 1.0) > 1e-12) throw DomainError("ImpuritySite: dipole must be a unit vector");
  }
};

// ---------------------------------------------------------------------------
// geometry
// ---------------------------------------------------------------------------

inline double form_factor(double q, double ell) {
  const double x = ell * ell * q * q;
  return x * std::exp(-0.5 * x) / 6.0;
}

// lambda^(gamma delta)_q for the harmonic ground state (0) and the three
// excited states x, y, z (1, 2, 3)
inline std::complex<double> coupling_constant(const Vec3& q, double ell, double kappa, int gamma, int delta) {
  if (gamma < 0 || gamma > 3 || delta < 0 || delta > 3) throw DomainError("coupling_constant: index out of range");
  const double q2 = dot(q, q);
  const double env = kappa * std::exp(-0.25 * ell * ell * q2);
  if (gamma > delta) std::swap(gamma, delta);
  if (gamma == 0 && delta == 0) return env;
  if (gamma == 0) return {0.0, env * ell * q[delta - 1] / std::numbers::sqrt2};
  if (gamma == delta) return env * (1.0 - 0.5 * ell * ell * q2);
  return -0.5 * env * ell * ell * q[gamma - 1] * q[delta - 1];
}

// (1/4 pi kappa^2) times the sphere integral of |lambda^(a0)|^2, by a product rule
inline double angular_average_a0(double q, double ell, double kappa, int a, int nodes = 32) {
  const auto& gl = quad::gauss_legendre(static_cast<std::size_t>(nodes));
  double sum = 0.0;
  for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
    const double ct = gl.nodes[i];
    const double st = std::sqrt(1.0 - ct * ct);
    for (int j = 0; j < 2 * nodes; ++j) {
      const double ph = 2.0 * std::numbers::pi * (j + 0.5) / (2 * nodes);
      const Vec3 qv{q * st * std::cos(ph), q * st * std::sin(ph), q * ct};
      sum += gl.weights[i] * std::norm(coupling_constant(qv, ell, kappa, a, 0));
    }
  }
  return sum * (2.0 * std::numbers::pi / (2 * nodes)) / (4.0 * std::numbers::pi * kappa * kappa);
}

inline double sinc(double x) { return x == 0.0 ? 1.0 : std::sin(x) / x; }

inline Vec3 separation(const ImpuritySite& m, const ImpuritySite& n) {
  return {m.position[0] - n.position[0], m.position[1] - n.position[1], m.position[2] - n.position[2]};
}

// separation in units of ell; the far-field form needs this to be large
inline double far_field_parameter(const ImpuritySite& m, const ImpuritySite& n, double ell) {
  return norm(separation(m, n)) / ell;
}

inline double far_field_cross_form_factor(double q, const ImpuritySite& m, const ImpuritySite& n, double ell) {
  const Vec3 x = separation(m, n);
  const double r = norm(x);
  if (r == 0.0) return form_factor(q, ell) * dot(m.dipole, n.dipole);
  const Vec3 xh{x[0] / r, x[1] / r, x[2] / r};
  const double g = ell * ell * q * q;
  return 0.5 * g * std::exp(-0.5 * g) * sinc(q * r) * dot(m.dipole, xh) * dot(n.dipole, xh);
}

// full angular average, all orders in 1/(q x)
inline double exact_cross_form_factor(double q, const ImpuritySite& m, const ImpuritySite& n, double ell) {
  const Vec3 x = separation(m, n);
  const double r = norm(x);
  const double dd = dot(m.dipole, n.dipole);
  const double g = ell * ell * q * q;
  const double pre = 0.5 * g * std::exp(-0.5 * g);
  const double s = q * r;
  if (s < 1e-4) return pre * (dd / 3.0 * (1.0 - s * s / 10.0) - s * s / 15.0 * (r > 0.0 ? dot(m.dipole, x) * dot(n.dipole, x) / (r * r) : 0.0));
  const Vec3 xh{x[0] / r, x[1] / r, x[2] / r};
  const double j1 = boost::math::sph_bessel(1, s);
  const double j2 = boost::math::sph_bessel(2, s);
  return pre * (j1 / s * dd - j2 * dot(m.dipole, xh) * dot(n.dipole, xh));
}

// ---------------------------------------------------------------------------
// spectral densities
// ---------------------------------------------------------------------------

struct SpectralNumerics {
  chi::SusceptibilityNumerics chi{1e-6, 1e-15, 0.1, 3000, 600, 256, 32};
  dsf::PoleNumerics pole{};
  double rel_tol = 1e-4;
  double abs_tol = 0.0;
  int max_intervals = 400;
  double cutoff_lengths = 6.0;  // q_max = max(cutoff_lengths / ell, q_max_floor)
  double q_max_floor = 4.0;
  int peak_scan = 96;
};

struct SpectralDensityResult {
  double nu = 0.0;
  double value = 0.0;
  double error = 0.0;
  std::vector<double> peaks;  // q where the undamped mode sits at this frequency
  bool low_temperature_ok = true;  // beta Theta0 >= 10
};

namespace detail {

// collective-mode wave vectors at frequency nu, restricted to q where the pair
// continuum starts above nu so the real-axis pole function is defined
inline std::vector<double> mode_peaks(double nu, const eos::CrossoverPoint& point, double q_max,
                                      const SpectralNumerics& num) {
  std::vector<double> out;
  if (!(nu > 0.0)) return out;
  dsf::PoleNumerics coarse = num.pole;
  coarse.chi.rel_tol = std::max(coarse.chi.rel_tol, coarse.scan_rel_tol);
  const double q_lo = std::min(0.25 * nu / point.c(), 0.5 * q_max);
  auto valid = [&](double q) {
    return eos::pair_threshold_closed_form(q, point.delta(), point.mu()) - nu > num.pole.merge_margin;
  };
  double qa = 0.0, fa = 0.0;
  bool have = false;
  for (int i = 0; i <= num.peak_scan; ++i) {
    const double q = q_lo * std::pow(q_max / q_lo, double(i) / num.peak_scan);
    if (!valid(q)) {
      have = false;
      continue;
    }
    const double f = dsf::pole_function(q, nu, point, coarse);
    if (have && ((f > 0.0) != (fa > 0.0))) {
      auto g = [&](double qq) { return dsf::pole_function(qq, nu, point, coarse); };
      out.push_back(dsf::detail::solve_bracket(g, qa, q, fa, f));
    }
    qa = q;
    fa = f;
    have = true;
  }
  return out;
}

// q where the pair continuum edge Theta_q crosses nu
inline std::vector<double> continuum_edges(double nu, const eos::CrossoverPoint& point, double q_max) {
  std::vector<double> out;
  auto f = [&](double q) { return eos::pair_threshold_closed_form(q, point.delta(), point.mu()) - nu; };
  const int n = 48;
  double qa = 1e-6, fa = f(qa);
  for (int i = 1; i <= n; ++i) {
    const double qb = q_max * i / n;
    const double fb = f(qb);
    if ((fa > 0.0) != (fb > 0.0)) {
      double a = qa, b = qb, fla = fa;
      for (int it = 0; it < 50; ++it) {
        const double m = 0.5 * (a + b);
        const double fm = f(m);
        if ((fm > 0.0) == (fla > 0.0)) {
          a = m;
          fla = fm;
        } else {
          b = m;
        }
      }
      out.push_back(0.5 * (a + b));
    }
    qa = qb;
    fa = fb;
  }
  return out;
}

// (kappa^2 / 2 pi^2) int dq q^2 w(q) S(q, nu) for N weights at once
template <std::size_t N, class W>
std::array<double, N> weighted_q_integral(double nu, double ell, double kappa, double beta,
                                          const eos::CrossoverPoint& point, double epsilon, W&& weights,
                                          const SpectralNumerics& num, std::vector<double>* peaks_out,
                                          std::array<double, N>* err_out) {
  const double q_max = std::max(num.cutoff_lengths / ell, num.q_max_floor);
  std::vector<double> bp{0.0, q_max, 1.0 / ell, std::sqrt(2.0) / ell};
  // at finite temperature the mode also shows up at negative frequency
  const double nu_abs = std::abs(nu);
  std::vector<double> peaks;
  if (nu > 0.0 || !std::isinf(beta)) peaks = mode_peaks(nu_abs, point, q_max, num);
  for (double qp : peaks) {
    const double v = nu_abs / qp;  // phase velocity sets the width in q
    const double d = std::max(epsilon, 1e-12) / v;
    for (double s : {-16.0, -4.0, -1.0, 0.0, 1.0, 4.0, 16.0}) bp.push_back(qp + s * d);
  }
  for (double qe : continuum_edges(nu_abs, point, q_max)) bp.push_back(qe);
  bp = quad::clean_breakpoints(std::move(bp), 0.0, q_max);
  if (peaks_out) *peaks_out = peaks;

  auto integrand = [&](double q) {
    std::array<double, N> out;
    out.fill(0.0);
    if (q <= 0.0) return out;
    const double s = dsf::dsf(q, nu, beta, epsilon, point, num.chi).value;
    const auto w = weights(q);
    const double pre = kappa * kappa / (2.0 * std::numbers::pi * std::numbers::pi) * q * q * s;
    for (std::size_t i = 0; i < N; ++i) out[i] = pre * w[i];
    return out;
  };
  quad::AdaptiveOptions opt;
  opt.rel_tol = num.rel_tol;
  opt.abs_tol = num.abs_tol;
  opt.max_intervals = num.max_intervals;
  const auto r = quad::integrate<std::array<double, N>>(integrand, std::span<const double>(bp), opt);
  if (err_out) *err_out = r.error;
  return r.value;
}

}  // namespace detail

// I(nu) from the broadened structure factor
inline SpectralDensityResult spectral_density(double nu, const ProbeConfig& probe, const eos::CrossoverPoint& point,
                                              double epsilon, const SpectralNumerics& num = {}) {
  SpectralDensityResult res;
  res.nu = nu;
  res.low_temperature_ok = std::isinf(probe.beta()) || probe.beta() * point.theta0() >= 10.0;
  if (std::isinf(probe.beta()) && nu <= 0.0) return res;
  const double ell = probe.ell();
  std::array<double, 1> err{};
  const auto v = detail::weighted_q_integral<1>(
      nu, ell, probe.kappa(), probe.beta(), point, epsilon,
      [&](double q) { return std::array<double, 1>{form_factor(q, ell)}; }, num, &res.peaks, &err);
  res.value = v[0];
  res.error = err[0];
  return res;
}

struct DeltaRouteResult {
  double nu = 0.0;
  double value = 0.0;
  double q_nu = 0.0;
  double c_nu = 0.0;
};

// kappa^2 Phi(q_nu) W D = kappa^2 Phi(q_nu) q_nu^2 C_nu / (2 pi^2), undamped mode only
inline DeltaRouteResult spectral_density_delta(double nu, const ProbeConfig& probe, const eos::CrossoverPoint& point,
                                               const dsf::PoleNumerics& num = {}) {
  DeltaRouteResult r;
  r.nu = nu;
  const auto m = dsf::c_nu(nu, point, num);
  r.q_nu = m.q_nu;
  r.c_nu = m.c_nu;
  const double k2 = probe.kappa() * probe.kappa();
  r.value = k2 * form_factor(m.q_nu, probe.ell()) * m.q_nu * m.q_nu * m.c_nu /
            (2.0 * std::numbers::pi * std::numbers::pi);
  return r;
}

// alpha omega_c^-4 nu^5 exp(-nu^2 / 2 omega_c^2)
struct SuperOhmic {
  double alpha = 0.0;
  double omega_c = 0.0;
  double operator()(double nu) const {
    const double x = nu / omega_c;
    return alpha * omega_c * std::pow(x, 5) * std::exp(-0.5 * x * x);
  }
};

inline SuperOhmic super_ohmic(const ProbeConfig& probe, const eos::CrossoverPoint& point) {
  const double ell = probe.ell();
  const double c = point.c();
  SuperOhmic s;
  s.alpha = probe.kappa() * probe.kappa() * units::density /
            (24.0 * std::numbers::pi * std::numbers::pi * units::mass * ell * ell * c * c * c);
  s.omega_c = c / ell;
  return s;
}

// Gamma_0000 from the phonon limit of S; goes to zero with nu
inline double dephasing_rate_limit(double nu, double beta, double kappa, const eos::CrossoverPoint& point) {
  const double c = point.c();
  const double th = std::isinf(beta) ? 1.0 : 1.0 / std::tanh(0.5 * beta * nu);
  return kappa * kappa * units::density * nu * nu * nu * th / (2.0 * std::numbers::pi * units::mass * std::pow(c, 5));
}

// I_abab at small nu from the same limit; the extra q_a q_b factor gives nu^7
inline double sublevel_spectral_density_limit(double nu, double ell, double kappa, const eos::CrossoverPoint& point) {
  const double c = point.c();
  const double x = ell * nu / c;
  return kappa * kappa * std::pow(ell, 4) * units::density * std::pow(nu, 7) * std::exp(-0.5 * x * x) /
         (240.0 * std::numbers::pi * std::numbers::pi * units::mass * std::pow(c, 9));
}

struct DecayRate {
  double omega_a = 0.0;
  double ell = 0.0;
  double gamma = 0.0;
  double error = 0.0;
  double markov_ratio = 0.0;  // Gamma ell / c
  double rwa_ratio = 0.0;     // Gamma / omega_A
  bool low_temperature_ok = true;
};

inline DecayRate decay_rate(const ProbeConfig& probe, const eos::CrossoverPoint& point, double epsilon,
                            const SpectralNumerics& num = {}) {
  const auto sd = spectral_density(probe.omega_a(), probe, point, epsilon, num);
  DecayRate d;
  d.omega_a = probe.omega_a();
  d.ell = probe.ell();
  d.gamma = 2.0 * std::numbers::pi * sd.value;
  d.error = 2.0 * std::numbers::pi * sd.error;
  d.markov_ratio = d.gamma * d.ell / point.c();
  d.rwa_ratio = d.gamma / d.omega_a;
  d.low_temperature_ok = sd.low_temperature_ok;
  return d;
}

// 2 pi times the delta-route spectral density; nullopt where no undamped mode sits at omega_A
inline std::optional<double> collective_decay_rate(const ProbeConfig& probe, const eos::CrossoverPoint& point,
                                                   const dsf::PoleNumerics& num = {}) {
  try {
    return 2.0 * std::numbers::pi * spectral_density_delta(probe.omega_a(), probe, point, num).value;
  } catch (const NoModeAtFrequency&) {
    return std::nullopt;
  }
}

enum class CrossForm { far_field, exact };

struct CrossSpectralDensity {
  double nu = 0.0;
  double cross = 0.0;  // I_mn
  double self = 0.0;   // I_nn
};

// I_mn and I_nn from one pass over the structure factor
inline CrossSpectralDensity cross_spectral_density(double nu, const ImpuritySite& m, const ImpuritySite& n,
                                                   const ProbeConfig& probe, const eos::CrossoverPoint& point,
                                                   double epsilon, CrossForm form = CrossForm::far_field,
                                                   const SpectralNumerics& num = {}) {
  CrossSpectralDensity r;
  r.nu = nu;
  if (std::isinf(probe.beta()) && nu <= 0.0) return r;
  const double ell = probe.ell();
  const auto v = detail::weighted_q_integral<2>(
      nu, ell, probe.kappa(), probe.beta(), point, epsilon,
      [&](double q) {
        const double c = form == CrossForm::far_field ? far_field_cross_form_factor(q, m, n, ell)
                                                      : exact_cross_form_factor(q, m, n, ell);
        return std::array<double, 2>{c, form_factor(q, ell)};
      },
      num, nullptr, nullptr);
  r.cross = v[0];
  r.self = v[1];
  return r;
}

}  // namespace bcsprobe::probe
