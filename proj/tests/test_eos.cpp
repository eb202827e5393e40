#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "bcsprobe/eos.hpp"

using namespace bcsprobe;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// mean-field reference points from an independent mpmath solve (bisection in
// two variables, tanh-sinh quadrature): inv_kfa, delta, mu, c, J2, J4, J_xi
struct Ref {
  double inv, delta, mu, c, j2, j4, jxi;
};
constexpr Ref refs[] = {
    {-2.0, 0.046446720207664834, 0.99694848720690646, 1.1479251864421187, 23.424326273502821, 23.483355611504092,
     0.13050896929446103},
    {-0.5, 0.4020873112891664, 0.84948974899598725, 1.0111909973372318, 0.27883071877360042, 0.3133498725986129,
     0.076486035295256373},
    {0.0, 0.68640205206984016, 0.59060550703283853, 0.88739732328710461, 0.077449129101902082, 0.10752590648847581,
     0.061784024325995157},
    {1.0, 1.3318716869000379, -0.80095217683524653, 0.61406081027058802, 0.0070026353312428235, 0.028559163678574159,
     0.034167939690716507},
    {2.0, 1.8485814144493434, -3.894912467271137, 0.45630968217316228, 0.0011747408079902426, 0.014824945117172381,
     0.019400457736025746},
};

// plain composite Simpson on [0, K] plus the leading 1/k^2 tails
struct SimpsonResiduals {
  double gap;      // m/(4 pi a_s) - sum (1/2eps - 1/2E)
  double density;  // sum (1 - xi/E) - 1/3pi^2
};

SimpsonResiduals simpson_residuals(double inv_kfa, double delta, double mu) {
  const double kmax = 200.0;
  const int n = 800000;
  const double h = kmax / n;
  double g = 0.0, d = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double k = i * h;
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    const double xi = k * k - mu;
    const double e = std::sqrt(xi * xi + delta * delta);
    const double pre = k * k / (2.0 * std::numbers::pi * std::numbers::pi);
    const double gi = k == 0.0 ? 1.0 / (4.0 * std::numbers::pi * std::numbers::pi) : pre * (1.0 / (2.0 * k * k) - 1.0 / (2.0 * e));
    g += w * gi;
    d += w * pre * (1.0 - xi / e);
  }
  g *= h / 3.0;
  d *= h / 3.0;
  const double pi2 = std::numbers::pi * std::numbers::pi;
  g += -mu / (4.0 * pi2 * kmax);
  d += delta * delta / (4.0 * pi2 * kmax);
  const double m = 0.5;
  return {m * inv_kfa / (4.0 * std::numbers::pi) - g, d - 1.0 / (3.0 * pi2)};
}

}  // namespace

TEST_CASE("quasiparticle energy and pair gap") {
  CHECK_THAT(eos::quasiparticle_energy(1.0, 0.4, 1.0), WithinAbs(0.4, 1e-15));
  CHECK_THAT(eos::quasiparticle_energy(2.0, 0.0, 1.0), WithinAbs(3.0, 1e-15));
  CHECK_THAT(eos::pair_gap(0.4, 1.0), WithinAbs(0.8, 1e-15));
  CHECK_THAT(eos::pair_gap(1.0, -1.0), WithinRel(2.0 * std::sqrt(2.0), 1e-15));
  CHECK(eos::pair_gap(0.0, 1.0) == 0.0);
}

TEST_CASE("pair threshold") {
  SECTION("q = 0 gives the pair gap") {
    for (const auto& r : refs) CHECK_THAT(eos::pair_threshold(0.0, r.delta, r.mu), WithinRel(eos::pair_gap(r.delta, r.mu), 1e-12));
  }
  SECTION("plateau at 2 delta while both momenta fit on the Fermi surface") {
    for (double q : {0.1, 0.7, 1.3, 1.9}) CHECK_THAT(eos::pair_threshold(q, 0.4, 1.0), WithinAbs(0.8, 1e-12));
  }
  SECTION("q = 3 at unitarity against a dense grid plus Nelder-Mead") {
    CHECK_THAT(eos::pair_threshold(3.0, refs[2].delta, refs[2].mu), WithinRel(3.5915110248336592, 1e-10));
  }
  SECTION("closed form agrees with the grid minimisation") {
    for (const auto& r : refs)
      for (double q = 0.05; q < 6.0; q += 0.29)
        CHECK_THAT(eos::pair_threshold_closed_form(q, r.delta, r.mu), WithinRel(eos::pair_threshold(q, r.delta, r.mu), 1e-12));
  }
  SECTION("non-decreasing in q for mu < 0") {
    double prev = 0.0;
    for (double q = 0.0; q < 5.0; q += 0.1) {
      const double t = eos::pair_threshold(q, refs[3].delta, refs[3].mu);
      CHECK(t >= prev - 1e-12);
      prev = t;
    }
  }
  CHECK_THROWS_AS(eos::pair_threshold_closed_form(-1.0, 0.5, 0.5), DomainError);
}

TEST_CASE("solve_eos against the independent reference") {
  for (const auto& r : refs) {
    INFO("inv_kfa = " << r.inv);
    const auto p = eos::solve_eos(r.inv);
    CHECK_THAT(p.delta(), WithinRel(r.delta, 1e-8));
    CHECK_THAT(p.mu(), WithinRel(r.mu, 1e-8));
    CHECK_THAT(p.c(), WithinRel(r.c, 1e-8));
    CHECK_THAT(p.j2(), WithinRel(r.j2, 1e-8));
    CHECK_THAT(p.j4(), WithinRel(r.j4, 1e-8));
    CHECK_THAT(p.jxi(), WithinRel(r.jxi, 1e-8));
    CHECK_THAT(p.theta0(), WithinRel(eos::pair_gap(r.delta, r.mu), 1e-8));
    CHECK_THAT(p.zeta(), WithinRel(r.c / r.delta, 1e-8));
  }
}

TEST_CASE("solved points satisfy Simpson-coded equations of state") {
  for (double inv : {-2.0, -1.0, 0.0, 0.7, 2.0}) {
    INFO("inv_kfa = " << inv);
    const auto p = eos::solve_eos(inv);
    const auto r = simpson_residuals(inv, p.delta(), p.mu());
    CHECK(std::abs(r.gap) < 1e-6);
    CHECK(std::abs(r.density) < 1e-6);
  }
}

TEST_CASE("crossover limits") {
  const auto bcs = eos::solve_eos(-2.0);
  CHECK_THAT(bcs.mu(), WithinRel(1.0, 0.02));
  CHECK_THAT(bcs.c(), WithinRel(eos::bcs_sound_speed(), 0.05));
  CHECK(bcs.c() < eos::bcs_sound_speed());

  const auto bec = eos::solve_eos(2.0);
  CHECK_THAT(bec.mu(), WithinRel(eos::molecular_binding_energy(2.0), 0.10));
  CHECK_THAT(eos::molecular_binding_energy(2.0), WithinAbs(-4.0, 1e-15));
  CHECK_THAT(bec.c(), WithinRel(eos::bec_sound_speed(2.0), 0.05));
}

TEST_CASE("sweep monotonicity and continuation") {
  std::vector<double> inv;
  for (int i = -8; i <= 8; ++i) inv.push_back(0.25 * i);
  const auto pts = eos::solve_eos_sweep(inv);
  REQUIRE(pts.size() == inv.size());
  for (std::size_t i = 1; i < pts.size(); ++i) {
    CHECK(pts[i].delta() > pts[i - 1].delta());
    CHECK(pts[i].mu() < pts[i - 1].mu());
  }
  // an explicit guess reaches the same point as continuation
  const auto cold = eos::solve_eos(0.5, 1.0, 0.0);
  CHECK_THAT(cold.delta(), WithinRel(pts[10].delta(), 1e-10));
  CHECK_THAT(cold.mu(), WithinRel(pts[10].mu(), 1e-10));
}

TEST_CASE("construction and solver errors") {
  CHECK_THROWS_AS(eos::CrossoverPoint::from_gap(0.0, 1.0), DomainError);
  CHECK_THROWS_AS(eos::solve_eos(std::nan("")), DomainError);
  eos::EosNumerics tight;
  tight.max_iterations = 1;
  try {
    eos::solve_eos(0.0, 0.1, 1.0, tight);
    FAIL("expected NonConvergence");
  } catch (const NonConvergence& e) {
    CHECK(std::isfinite(e.residual_gap()));
    CHECK(std::isfinite(e.residual_density()));
  }
  const auto p = eos::CrossoverPoint::from_gap(refs[2].delta, refs[2].mu);
  CHECK_THAT(p.inv_kfa(), WithinAbs(0.0, 1e-8));
}
