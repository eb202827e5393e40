#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <span>
#include <vector>

#include "bcsprobe/eos.hpp"
#include "bcsprobe/errors.hpp"
#include "bcsprobe/impurity_probe.hpp"

namespace bcsprobe::qubit {

using cplx = std::complex<double>;

// 2x2 density matrix in the {|0>, |1>} basis, row major
class QubitState {
 public:
  using Matrix = std::array<cplx, 4>;

  QubitState() : rho_{1.0, 0.0, 0.0, 0.0} {}
  explicit QubitState(const Matrix& rho) : rho_(rho) {
    if (!is_physical(1e-12)) throw DomainError("QubitState: not a density matrix");
  }

  // pure state a|0> + b|1>, normalised here
  static QubitState pure(cplx a, cplx b) {
    const double n = std::sqrt(std::norm(a) + std::norm(b));
    if (!(n > 0.0)) throw DomainError("QubitState: zero vector");
    a /= n;
    b /= n;
    return QubitState(Matrix{a * std::conj(a), a * std::conj(b), b * std::conj(a), b * std::conj(b)});
  }
  static QubitState excited() { return pure(0.0, 1.0); }

  const Matrix& matrix() const noexcept { return rho_; }
  cplx operator()(int i, int j) const { return rho_[2 * i + j]; }
  double p0() const { return rho_[0].real(); }
  double p1() const { return rho_[3].real(); }
  cplx coherence() const { return rho_[1]; }
  double trace() const { return (rho_[0] + rho_[3]).real(); }

  double min_eigenvalue() const {
    const double a = rho_[0].real(), d = rho_[3].real();
    const double r = std::hypot(0.5 * (a - d), std::abs(rho_[1]));
    return 0.5 * (a + d) - r;
  }

  bool is_physical(double tol) const {
    if (std::abs(rho_[0].imag()) > tol || std::abs(rho_[3].imag()) > tol) return false;
    if (std::abs(rho_[1] - std::conj(rho_[2])) > tol) return false;
    if (std::abs(trace() - 1.0) > tol) return false;
    return min_eigenvalue() >= -tol;
  }

  // skips validation; the integrator checks invariants separately
  static QubitState unchecked(const Matrix& rho) {
    QubitState s;
    s.rho_ = rho;
    return s;
  }

 private:
  Matrix rho_;
};

namespace detail {

// d rho/dt = i[rho, H] + Gamma (s rho s^+ - {s^+ s, rho}/2), H = omega |1><1|, s = |0><1|
inline QubitState::Matrix rhs(const QubitState::Matrix& r, double omega, double gamma) {
  const cplx i{0.0, 1.0};
  QubitState::Matrix d;
  d[0] = gamma * r[3];
  d[3] = -gamma * r[3];
  d[1] = -i * omega * r[1] - 0.5 * gamma * r[1];
  d[2] = i * omega * r[2] - 0.5 * gamma * r[2];
  return d;
}

inline QubitState::Matrix axpy(const QubitState::Matrix& x, double h, const QubitState::Matrix& y) {
  QubitState::Matrix out;
  for (int k = 0; k < 4; ++k) out[k] = x[k] + h * y[k];
  return out;
}

}  // namespace detail

inline constexpr double max_step_product = 0.1;

inline QubitState lindblad_step(const QubitState& state, double omega_a, double gamma, double dt) {
  if (!(dt > 0.0)) throw DomainError("lindblad_step: dt must be positive");
  if (omega_a < 0.0 || gamma < 0.0) throw DomainError("lindblad_step: rates must be non-negative");
  if (dt * std::max(omega_a, gamma) >= max_step_product) throw StepTooLarge("lindblad_step: dt * max(omega, gamma) >= 0.1");
  const auto& r = state.matrix();
  const auto k1 = detail::rhs(r, omega_a, gamma);
  const auto k2 = detail::rhs(detail::axpy(r, 0.5 * dt, k1), omega_a, gamma);
  const auto k3 = detail::rhs(detail::axpy(r, 0.5 * dt, k2), omega_a, gamma);
  const auto k4 = detail::rhs(detail::axpy(r, dt, k3), omega_a, gamma);
  QubitState::Matrix out;
  for (int k = 0; k < 4; ++k) out[k] = r[k] + dt / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]);
  return QubitState::unchecked(out);
}

// closed-form solution of the same equation
inline QubitState exact_state(const QubitState& initial, double omega_a, double gamma, double t) {
  const auto& r = initial.matrix();
  const double decay = std::exp(-gamma * t);
  const cplx phase = std::exp(cplx{-0.5 * gamma * t, -omega_a * t});
  QubitState::Matrix out{r[0] + (1.0 - decay) * r[3], r[1] * phase, r[2] * std::conj(phase), r[3] * decay};
  return QubitState::unchecked(out);
}

struct Trajectory {
  double omega_a = 0.0;
  double gamma = 0.0;
  double dt = 0.0;
  std::vector<double> t;
  std::vector<double> p1;        // integrated
  std::vector<double> p1_exact;  // p1(0) exp(-Gamma t)
  std::vector<cplx> coherence;
  double max_deviation = 0.0;
  double max_trace_error = 0.0;
  double min_eigenvalue = 0.0;
  double half_life = std::numeric_limits<double>::quiet_NaN();
  double fitted_gamma = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

inline double interpolated_half_life(const Trajectory& tr) {
  const double target = 0.5 * tr.p1.front();
  for (std::size_t i = 1; i < tr.t.size(); ++i) {
    if (tr.p1[i] <= target) {
      const double la = std::log(tr.p1[i - 1]), lb = std::log(tr.p1[i]);
      const double s = (std::log(target) - la) / (lb - la);
      return tr.t[i - 1] + s * (tr.t[i] - tr.t[i - 1]);
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

// least squares slope of ln p1 against t
inline double log_linear_rate(const Trajectory& tr) {
  double st = 0, sy = 0, stt = 0, sty = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < tr.t.size(); ++i) {
    if (!(tr.p1[i] > 0.0)) continue;
    const double y = std::log(tr.p1[i]);
    st += tr.t[i];
    sy += y;
    stt += tr.t[i] * tr.t[i];
    sty += tr.t[i] * y;
    ++n;
  }
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  const double den = n * stt - st * st;
  return -(n * sty - st * sy) / den;
}

}  // namespace detail

// t_grid must be increasing and start at or after 0; the integrator takes
// steps of at most step_fraction / max(omega, gamma)
inline Trajectory decay_trajectory(double omega_a, double gamma, std::span<const double> t_grid,
                                   const QubitState& initial = QubitState::excited(), double step_fraction = 0.05) {
  if (t_grid.empty()) throw DomainError("decay_trajectory: empty time grid");
  if (t_grid.front() < 0.0) throw DomainError("decay_trajectory: times must be non-negative");
  for (std::size_t i = 1; i < t_grid.size(); ++i)
    if (!(t_grid[i] > t_grid[i - 1])) throw DomainError("decay_trajectory: times must increase");
  if (!(step_fraction > 0.0 && step_fraction < max_step_product)) throw DomainError("decay_trajectory: bad step fraction");

  Trajectory tr;
  tr.omega_a = omega_a;
  tr.gamma = gamma;
  const double rate = std::max(omega_a, gamma);
  const double h_max = rate > 0.0 ? step_fraction / rate : std::numeric_limits<double>::infinity();
  tr.dt = h_max;
  tr.min_eigenvalue = initial.min_eigenvalue();

  QubitState s = initial;
  double t = 0.0;
  for (double target : t_grid) {
    const double span = target - t;
    if (span > 0.0) {
      const auto n = static_cast<long>(std::ceil(span / h_max));
      const double h = span / static_cast<double>(n);
      for (long k = 0; k < n; ++k) {
        s = lindblad_step(s, omega_a, gamma, h);
        tr.max_trace_error = std::max(tr.max_trace_error, std::abs(s.trace() - 1.0));
        tr.min_eigenvalue = std::min(tr.min_eigenvalue, s.min_eigenvalue());
      }
      t = target;
    }
    tr.t.push_back(target);
    tr.p1.push_back(s.p1());
    tr.coherence.push_back(s.coherence());
    const double ex = initial.p1() * std::exp(-gamma * target);
    tr.p1_exact.push_back(ex);
    tr.max_deviation = std::max(tr.max_deviation, std::abs(s.p1() - ex));
  }
  tr.half_life = detail::interpolated_half_life(tr);
  tr.fitted_gamma = detail::log_linear_rate(tr);
  return tr;
}

// Gamma from the impurity probe, then the trajectory
inline Trajectory decay_trajectory(const probe::ProbeConfig& probe, const eos::CrossoverPoint& point,
                                   std::span<const double> t_grid, double epsilon = 0.01,
                                   const probe::SpectralNumerics& num = {}) {
  const auto rate = probe::decay_rate(probe, point, epsilon, num);
  return decay_trajectory(probe.omega_a(), rate.gamma, t_grid);
}

}  // namespace bcsprobe::qubit
