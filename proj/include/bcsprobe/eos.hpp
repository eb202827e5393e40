#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "bcsprobe/errors.hpp"
#include "bcsprobe/quadrature.hpp"
#include "bcsprobe/units.hpp"

// Zero-temperature mean-field equations of state of the two-component Fermi
// gas at fixed density, in Fermi units (see units.hpp).
namespace bcsprobe::eos {

inline double quasiparticle_energy(double k, double delta, double mu) {
  const double xi = units::kinetic(k) - mu;
  return std::hypot(delta, xi);
}

// Quasiparticle energy as a function of |k|^2, used where the squared
// momentum is what is available.
inline double quasiparticle_energy_sq(double k2, double delta, double mu) {
  const double xi = k2 / (2.0 * units::mass) - mu;
  return std::hypot(delta, xi);
}

// Minimum energy to break a condensed pair at rest.
inline double pair_gap(double delta, double mu) {
  if (delta < 0.0) throw DomainError("pair_gap: delta must be non-negative");
  return mu >= 0.0 ? 2.0 * delta : 2.0 * std::hypot(delta, mu);
}

// E_{k+q/2} + E_{k-q/2} with u the cosine between k and q.
inline double pair_energy(double k, double u, double q, double delta, double mu) {
  const double base = k * k + 0.25 * q * q;
  const double cross = k * q * u;
  return quasiparticle_energy_sq(base + cross, delta, mu) + quasiparticle_energy_sq(base - cross, delta, mu);
}

struct ThresholdMinimum {
  double value = 0.0;
  double k = 0.0;
  double cos_theta = 0.0;
};

namespace detail {

template <class F>
double golden_section_min(F&& f, double lo, double hi, double& arg) {
  constexpr double inv_phi = 0.6180339887498949;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 200 && (b - a) > 1e-15 * (1.0 + std::abs(a) + std::abs(b)); ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  arg = 0.5 * (a + b);
  return f(arg);
}

}  // namespace detail

// Threshold of the two-quasiparticle continuum at total momentum q, by a
// 64x64 scan over (|k|, cos theta) followed by alternating golden-section
// refinement of each coordinate.
inline ThresholdMinimum pair_threshold_minimum(double q, double delta, double mu, int grid = 64) {
  if (q < 0.0) throw DomainError("pair_threshold: q must be non-negative");
  const double k_max = std::max(4.0, 2.0 * q);
  const double dk = k_max / (grid - 1);
  const double du = 2.0 / (grid - 1);
  ThresholdMinimum best{pair_energy(0.0, 0.0, q, delta, mu), 0.0, 0.0};
  for (int i = 0; i < grid; ++i) {
    for (int j = 0; j < grid; ++j) {
      const double k = i * dk;
      const double u = -1.0 + j * du;
      const double s = pair_energy(k, u, q, delta, mu);
      if (s < best.value) best = {s, k, u};
    }
  }
  // Even in u: fold onto [0, 1].
  best.cos_theta = std::abs(best.cos_theta);
  double half_k = dk, half_u = du;
  for (int round = 0; round < 60; ++round) {
    const double previous = best.value;
    double k_new = best.k;
    double s_k = detail::golden_section_min(
        [&](double k) { return pair_energy(k, best.cos_theta, q, delta, mu); }, std::max(0.0, best.k - half_k),
        std::min(k_max, best.k + half_k), k_new);
    if (s_k <= best.value) {
      best.value = s_k;
      best.k = k_new;
    }
    double u_new = best.cos_theta;
    double s_u = detail::golden_section_min([&](double u) { return pair_energy(best.k, u, q, delta, mu); },
                                            std::max(0.0, best.cos_theta - half_u),
                                            std::min(1.0, best.cos_theta + half_u), u_new);
    if (s_u <= best.value) {
      best.value = s_u;
      best.cos_theta = u_new;
    }
    half_k = std::max(0.5 * half_k, 1e-9);
    half_u = std::max(0.5 * half_u, 1e-9);
    if (round > 8 && previous - best.value < 1e-15 * best.value) break;
  }
  // On the pairing plateau the exact minimum is known.
  const double theta0 = pair_gap(delta, mu);
  if (q == 0.0) best.value = theta0;
  return best;
}

inline double pair_threshold(double q, double delta, double mu) {
  return pair_threshold_minimum(q, delta, mu).value;
}

// Same threshold in closed form: 2 Delta while both quasiparticles fit on the
// Fermi surface, otherwise the k = 0 configuration.
inline double pair_threshold_closed_form(double q, double delta, double mu) {
  if (q < 0.0) throw DomainError("pair_threshold: q must be non-negative");
  if (mu > 0.0 && q * q < 4.0 * 2.0 * units::mass * mu) return 2.0 * delta;
  const double x = units::kinetic(0.5 * q) - mu;
  return 2.0 * std::sqrt(delta * delta + x * x);
}

// ---------------------------------------------------------------------------
// Momentum integrals of the equations of state
// ---------------------------------------------------------------------------

struct EosNumerics {
  std::size_t min_nodes = 16;      // per panel, doubled until converged
  std::size_t max_nodes = 2048;
  double doubling_tol = 1e-11;     // relative change between successive doublings
  double newton_tol = 1e-12;       // on the scaled residuals
  int max_iterations = 80;
  double continuation_step = 0.25; // in 1/k_F a_s
};

// Integrals (1/V) sum_k of the equations of state; j_xi = J_4 - mu J_2.
struct Moments {
  double gap = 0.0;      // sum (1/2eps_k - 1/2E_k)
  double density = 0.0;  // sum (1 - xi_k/E_k)
  double j2 = 0.0;
  double j4 = 0.0;
  double jxi = 0.0;
};

namespace detail {

inline std::vector<double> eos_breakpoints(double delta, double mu) {
  std::vector<double> pts;
  if (mu > 0.0) {
    const double kmu = std::sqrt(2.0 * units::mass * mu);
    const double width = std::max(delta, 1e-12) * units::mass / kmu;  // k-scale over which xi ~ delta
    pts.push_back(kmu);
    for (double f : {1.0, 4.0, 16.0, 64.0}) {
      pts.push_back(kmu - f * width);
      pts.push_back(kmu + f * width);
    }
    pts.push_back(2.0 * kmu);
  } else {
    const double scale = std::sqrt(2.0 * units::mass * (std::abs(mu) + delta));
    pts.push_back(0.5 * scale);
    pts.push_back(scale);
    pts.push_back(3.0 * scale);
  }
  return quad::clean_breakpoints(std::move(pts), 0.0, 1e12);
}

inline Moments moments_fixed(double delta, double mu, std::size_t nodes) {
  const auto breaks = eos_breakpoints(delta, mu);
  constexpr double m = units::mass;
  const auto raw = quad::fixed_tan_mapped<std::array<double, 4>>(
      [&](double k) {
        const double eps = units::kinetic(k);
        const double xi = eps - mu;
        const double e = std::hypot(delta, xi);
        const double e3 = e * e * e;
        std::array<double, 4> v{};
        // 1/2eps - 1/2E rewritten without cancellation
        v[0] = m * (delta * delta + mu * mu - 2.0 * eps * mu) / (e * (e + eps));
        v[1] = xi > 0.0 ? k * k * delta * delta / (e * (e + xi)) : k * k * (1.0 - xi / e);
        v[2] = k * k / e3;
        v[3] = k * k * k * k / e3;
        return v;
      },
      std::span<const double>(breaks), nodes);
  constexpr double norm = 1.0 / (2.0 * std::numbers::pi * std::numbers::pi);  // d^3k/(2pi)^3, angles done
  Moments out;
  out.gap = norm * raw[0];
  out.density = norm * raw[1];
  out.j2 = norm * raw[2];
  out.j4 = norm * raw[3];
  out.jxi = out.j4 - mu * out.j2;
  return out;
}

inline double max_rel_change(const Moments& a, const Moments& b) {
  auto rel = [](double x, double y) { return std::abs(x - y) / std::max(std::abs(y), 1e-300); };
  // the gap integral passes through zero at unitarity; compare it on the 1/k_F a_s scale
  const double gap_change = 4.0 * std::numbers::pi / units::mass * std::abs(a.gap - b.gap);
  return std::max({gap_change, rel(a.density, b.density), rel(a.j2, b.j2), rel(a.j4, b.j4)});
}

}  // namespace detail

struct MomentsResult {
  Moments moments;
  std::size_t nodes = 0;
};

inline MomentsResult converged_moments(double delta, double mu, const EosNumerics& num = {}) {
  std::size_t n = num.min_nodes;
  Moments prev = detail::moments_fixed(delta, mu, n);
  while (n < num.max_nodes) {
    n *= 2;
    Moments next = detail::moments_fixed(delta, mu, n);
    if (detail::max_rel_change(next, prev) < num.doubling_tol) return {next, n};
    prev = next;
  }
  return {prev, n};
}

inline Moments moments(double delta, double mu, const EosNumerics& num = {}) {
  return converged_moments(delta, mu, num).moments;
}

// Bogoliubov-Anderson sound speed from the J-integrals.
inline double sound_speed(double delta, const Moments& mom) {
  constexpr double m = units::mass;
  const double d2 = delta * delta;
  const double c2 = d2 * mom.j2 * mom.j4 / (3.0 * m * m * (d2 * mom.j2 * mom.j2 + mom.jxi * mom.jxi));
  return std::sqrt(c2);
}

// Scaled residuals: gap -> (4 pi / m) * sum(...) - 1/k_F a_s, density -> n/n0 - 1.
struct Residuals {
  double gap = 0.0;
  double density = 0.0;
};

inline Residuals residuals(double inv_kfa, const Moments& mom) {
  return {4.0 * std::numbers::pi / units::mass * mom.gap - inv_kfa, mom.density / units::density - 1.0};
}

// Inverse scattering length implied by the gap equation at (delta, mu).
inline double inv_kfa_from_gap(const Moments& mom) { return 4.0 * std::numbers::pi / units::mass * mom.gap; }

// ---------------------------------------------------------------------------
// Solved thermodynamic state
// ---------------------------------------------------------------------------

class CrossoverPoint {
 public:
  // Builds a state from (delta, mu); 1/k_F a_s follows from the gap equation
  // (the density equation is not imposed, see solve_eos for that).
  static CrossoverPoint from_gap(double delta, double mu, const EosNumerics& num = {}) {
    if (!(delta > 0.0) || !std::isfinite(delta)) throw DomainError("CrossoverPoint: delta must be positive");
    if (!std::isfinite(mu)) throw DomainError("CrossoverPoint: mu must be finite");
    const Moments mom = eos::moments(delta, mu, num);
    return CrossoverPoint(inv_kfa_from_gap(mom), delta, mu, mom);
  }

  double inv_kfa() const noexcept { return inv_kfa_; }
  double delta() const noexcept { return delta_; }
  double mu() const noexcept { return mu_; }
  double c() const noexcept { return c_; }
  double theta0() const noexcept { return theta0_; }
  double zeta() const noexcept { return c_ / delta_; }
  const Moments& moments() const noexcept { return moments_; }
  double j2() const noexcept { return moments_.j2; }
  double j4() const noexcept { return moments_.j4; }
  double jxi() const noexcept { return moments_.jxi; }

 private:
  friend CrossoverPoint solve_eos(double, double, double, const EosNumerics&);

  CrossoverPoint(double inv_kfa, double delta, double mu, const Moments& mom)
      : inv_kfa_(inv_kfa), delta_(delta), mu_(mu), c_(sound_speed(delta, mom)), theta0_(pair_gap(delta, mu)),
        moments_(mom) {}

  double inv_kfa_;
  double delta_;
  double mu_;
  double c_;
  double theta0_;
  Moments moments_;
};

// Damped Newton on (ln delta, mu) with a central-difference Jacobian.
inline CrossoverPoint solve_eos(double inv_kfa, double delta_guess, double mu_guess, const EosNumerics& num = {}) {
  if (!std::isfinite(inv_kfa)) throw DomainError("solve_eos: 1/k_F a_s must be finite");
  if (!(delta_guess > 0.0)) throw DomainError("solve_eos: initial delta must be positive");

  double x = std::log(delta_guess);
  double mu = mu_guess;
  std::size_t nodes = converged_moments(delta_guess, mu_guess, num).nodes;

  auto eval = [&](double lx, double m) { return residuals(inv_kfa, detail::moments_fixed(std::exp(lx), m, nodes)); };
  auto norm = [](const Residuals& r) { return std::max(std::abs(r.gap), std::abs(r.density)); };

  Residuals r = eval(x, mu);
  for (int iter = 0; iter < num.max_iterations; ++iter) {
    if (norm(r) < num.newton_tol) {
      // Confirm on a freshly converged node count before accepting.
      const auto check = converged_moments(std::exp(x), mu, num);
      if (check.nodes != nodes) {
        nodes = check.nodes;
        r = residuals(inv_kfa, check.moments);
        if (norm(r) >= num.newton_tol) continue;
      }
      return CrossoverPoint(inv_kfa, std::exp(x), mu, check.moments);
    }
    const double hx = 1e-6;
    const double hm = 1e-6 * std::max(1.0, std::abs(mu));
    const Residuals rxp = eval(x + hx, mu), rxm = eval(x - hx, mu);
    const Residuals rmp = eval(x, mu + hm), rmm = eval(x, mu - hm);
    const double j11 = (rxp.gap - rxm.gap) / (2 * hx), j12 = (rmp.gap - rmm.gap) / (2 * hm);
    const double j21 = (rxp.density - rxm.density) / (2 * hx), j22 = (rmp.density - rmm.density) / (2 * hm);
    const double det = j11 * j22 - j12 * j21;
    if (!std::isfinite(det) || det == 0.0) break;
    double dx = -(j22 * r.gap - j12 * r.density) / det;
    double dm = -(-j21 * r.gap + j11 * r.density) / det;
    // keep ln delta steps moderate
    const double cap = 2.0;
    const double big = std::max(std::abs(dx), std::abs(dm) / std::max(1.0, std::abs(mu)));
    if (big > cap) {
      dx *= cap / big;
      dm *= cap / big;
    }
    double lambda = 1.0;
    Residuals trial = eval(x + dx, mu + dm);
    for (int k = 0; k < 40 && !(norm(trial) < norm(r)); ++k) {
      lambda *= 0.5;
      trial = eval(x + lambda * dx, mu + lambda * dm);
    }
    if (!(norm(trial) < norm(r))) break;
    x += lambda * dx;
    mu += lambda * dm;
    r = trial;
  }
  throw NonConvergence("solve_eos: Newton iteration failed at 1/k_F a_s = " + std::to_string(inv_kfa), r.gap,
                       r.density);
}

// BCS-limit guess (weak coupling): delta = 8/e^2 exp(pi / 2 k_F a_s), mu = E_F.
inline double bcs_gap_estimate(double inv_kfa) {
  return 8.0 / (std::numbers::e * std::numbers::e) * std::exp(0.5 * std::numbers::pi * inv_kfa);
}

// Serial continuation from 1/k_F a_s = -2, starting guess (0.1, 1.0).
inline CrossoverPoint solve_eos(double inv_kfa, const EosNumerics& num = {}) {
  if (!std::isfinite(inv_kfa)) throw DomainError("solve_eos: 1/k_F a_s must be finite");
  constexpr double start = -2.0;
  if (inv_kfa <= start) return solve_eos(inv_kfa, std::max(bcs_gap_estimate(inv_kfa), 1e-300), 1.0, num);
  CrossoverPoint p = solve_eos(start, 0.1, 1.0, num);
  double at = start;
  while (at < inv_kfa) {
    at = std::min(inv_kfa, at + num.continuation_step);
    p = solve_eos(at, p.delta(), p.mu(), num);
  }
  return p;
}

// Solves a sorted sweep with continuation along the list.
inline std::vector<CrossoverPoint> solve_eos_sweep(std::span<const double> inv_kfa, const EosNumerics& num = {}) {
  std::vector<CrossoverPoint> out;
  out.reserve(inv_kfa.size());
  for (double v : inv_kfa) {
    if (out.empty()) {
      out.push_back(solve_eos(v, num));
      continue;
    }
    const CrossoverPoint& prev = out.back();
    // bridge large gaps in the sweep with intermediate continuation steps
    double at = prev.inv_kfa();
    CrossoverPoint p = prev;
    const double step = num.continuation_step * (v >= at ? 1.0 : -1.0);
    while (std::abs(v - at) > num.continuation_step) {
      at += step;
      p = solve_eos(at, p.delta(), p.mu(), num);
    }
    out.push_back(solve_eos(v, p.delta(), p.mu(), num));
  }
  return out;
}

// Weak- and strong-coupling asymptotes plotted alongside the crossover curves.
inline double bcs_sound_speed() { return units::fermi_velocity / std::sqrt(3.0); }

// -1/(2 m a_s^2): the molecular binding energy.
inline double molecular_binding_energy(double inv_kfa) {
  return -inv_kfa * inv_kfa * units::fermi_wavevector * units::fermi_wavevector / (2.0 * units::mass);
}

// sqrt(pi a_s n0)/m, the Bogoliubov sound speed of the molecular condensate.
inline double bec_sound_speed(double inv_kfa) {
  if (!(inv_kfa > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return std::sqrt(std::numbers::pi * units::density / inv_kfa) / units::mass;
}

}  // namespace bcsprobe::eos
