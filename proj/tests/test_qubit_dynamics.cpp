#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "bcsprobe/qubit_dynamics.hpp"

using namespace bcsprobe;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using cplx = std::complex<double>;

namespace {

std::vector<double> grid(double t_end, int n) {
  std::vector<double> t;
  for (int i = 0; i <= n; ++i) t.push_back(t_end * i / n);
  return t;
}

}  // namespace

TEST_CASE("density matrix validation") {
  const auto e = qubit::QubitState::excited();
  CHECK(e.p1() == 1.0);
  CHECK(e.p0() == 0.0);
  CHECK(e.is_physical(1e-14));
  const auto plus = qubit::QubitState::pure(1.0, 1.0);
  CHECK_THAT(std::abs(plus.coherence()), WithinAbs(0.5, 1e-15));
  CHECK_THAT(plus.min_eigenvalue(), WithinAbs(0.0, 1e-15));
  CHECK_THROWS_AS(qubit::QubitState::pure(0.0, 0.0), DomainError);
  CHECK_THROWS_AS(qubit::QubitState({1.5, 0.0, 0.0, -0.5}), DomainError);
  CHECK_THROWS_AS(qubit::QubitState({0.5, 0.6, 0.6, 0.5}), DomainError);
  CHECK_THROWS_AS(qubit::QubitState({0.5, cplx(0.1, 0.1), cplx(0.1, 0.1), 0.5}), DomainError);
}

TEST_CASE("step size guard") {
  const auto s = qubit::QubitState::excited();
  CHECK_THROWS_AS(qubit::lindblad_step(s, 1.0, 0.01, 0.1), StepTooLarge);
  CHECK_THROWS_AS(qubit::lindblad_step(s, 0.01, 2.0, 0.06), StepTooLarge);
  CHECK_NOTHROW(qubit::lindblad_step(s, 1.0, 0.01, 0.099));
  CHECK_THROWS_AS(qubit::lindblad_step(s, 1.0, 0.01, 0.0), DomainError);
  CHECK_THROWS_AS(qubit::lindblad_step(s, -1.0, 0.01, 0.01), DomainError);
}

TEST_CASE("excited-state decay matches the exponential") {
  const double omega = 1.0, gamma = 0.02;
  const auto tr = qubit::decay_trajectory(omega, gamma, grid(3.0 / gamma, 300));
  CHECK(tr.max_deviation < 1e-8);
  CHECK(tr.max_trace_error < 1e-12);
  CHECK(tr.min_eigenvalue > -1e-12);
  CHECK_THAT(tr.half_life, WithinRel(std::numbers::ln2 / gamma, 1e-6));
  CHECK_THAT(tr.fitted_gamma, WithinRel(gamma, 1e-8));
}

TEST_CASE("coherences rotate and decay at half the rate") {
  const double omega = 2.0, gamma = 0.1;
  const auto init = qubit::QubitState::pure(1.0, cplx(0.0, 1.0));
  const auto t = grid(20.0, 40);
  const auto tr = qubit::decay_trajectory(omega, gamma, t, init, 0.01);
  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto ex = qubit::exact_state(init, omega, gamma, t[i]);
    CHECK(std::abs(tr.coherence[i] - ex.coherence()) < 1e-8);
    CHECK(ex.is_physical(1e-12));
  }
  CHECK_THAT(tr.p1.front(), WithinAbs(0.5, 1e-15));
}

TEST_CASE("trajectory argument checks") {
  CHECK_THROWS_AS(qubit::decay_trajectory(1.0, 0.1, std::vector<double>{}), DomainError);
  CHECK_THROWS_AS(qubit::decay_trajectory(1.0, 0.1, std::vector<double>{-1.0, 0.0}), DomainError);
  CHECK_THROWS_AS(qubit::decay_trajectory(1.0, 0.1, std::vector<double>{0.0, 2.0, 1.0}), DomainError);
  CHECK_THROWS_AS(qubit::decay_trajectory(1.0, 0.1, grid(1.0, 4), qubit::QubitState::excited(), 0.2), DomainError);
}

TEST_CASE("rate from the impurity probe feeds the master equation") {
  const auto bec = eos::CrossoverPoint::from_gap(1.3318716869000379, -0.80095217683524653);
  const probe::ProbeConfig pc(40.0 / 6.0, 0.18, 0.5 * bec.theta0());
  const double gamma = probe::decay_rate(pc, bec, 0.01).gamma;
  // a short window keeps the step count small; only the rate is compared
  const auto tr = qubit::decay_trajectory(pc, bec, grid(200.0, 20));
  CHECK_THAT(tr.gamma, WithinRel(gamma, 1e-12));
  CHECK_THAT(tr.fitted_gamma, WithinRel(gamma, 1e-6));
  CHECK(tr.max_deviation < 1e-10);
}
