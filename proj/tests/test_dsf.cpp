#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "bcsprobe/dsf.hpp"

using namespace bcsprobe;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const eos::CrossoverPoint& bcs_side() {
  static const auto p = eos::CrossoverPoint::from_gap(0.4020873112891664, 0.84948974899598725);
  return p;
}
const eos::CrossoverPoint& unitary() {
  static const auto p = eos::CrossoverPoint::from_gap(0.68640205206984016, 0.59060550703283853);
  return p;
}
const eos::CrossoverPoint& bec_side() {
  static const auto p = eos::CrossoverPoint::from_gap(1.3318716869000379, -0.80095217683524653);
  return p;
}

double phonon_law(double nu, double c) { return nu * nu / (2.0 * std::numbers::pi * std::numbers::pi * c * c * c); }

}  // namespace

TEST_CASE("fluctuation-dissipation factor") {
  CHECK(dsf::fdt_factor(0.3, dsf::infinite_beta) == Catch::Approx(1.0 / std::numbers::pi));
  CHECK(dsf::fdt_factor(-0.3, dsf::infinite_beta) == 0.0);
  // Im chi is odd in nu, so the factor picks up the sign
  const double beta = 4.0, nu = 0.7;
  CHECK_THAT(dsf::fdt_factor(-nu, beta), WithinRel(-std::exp(-beta * nu) * dsf::fdt_factor(nu, beta), 1e-14));
}

TEST_CASE("structure factor is non-negative and obeys detailed balance") {
  const auto& p = unitary();
  SECTION("zero temperature") {
    for (double q : {0.3, 1.0, 2.0})
      for (double nu = 0.05; nu < 4.0; nu += 0.35) {
        INFO("q = " << q << " nu = " << nu);
        CHECK(dsf::dsf(q, nu, dsf::infinite_beta, 0.01, p).value >= 0.0);
      }
    CHECK(dsf::dsf(1.0, -0.5, dsf::infinite_beta, 0.01, p).value == 0.0);
  }
  SECTION("finite temperature") {
    const double beta = 10.0, q = 0.5, nu = 0.3;
    const double sp = dsf::dsf(q, nu, beta, 0.01, p).value;
    const double sm = dsf::dsf(q, -nu, beta, 0.01, p).value;
    CHECK(sp > 0.0);
    CHECK(sm > 0.0);
    CHECK_THAT(sm, WithinRel(std::exp(-beta * nu) * sp, 1e-6));
    CHECK(std::isfinite(dsf::dsf(q, 0.0, beta, 0.01, p).value));
  }
  CHECK_THROWS_AS(dsf::dsf(1.0, 0.5, dsf::infinite_beta, 0.0, p), DomainError);
  CHECK_THROWS_AS(dsf::dsf(1.0, 0.5, -1.0, 0.01, p), DomainError);
}

TEST_CASE("collective mode at long wavelength") {
  const auto& p = unitary();
  const auto m = dsf::collective_dispersion(0.05, p);
  REQUIRE_FALSE(m.merged);
  CHECK_THAT(m.omega_q / (p.c() * 0.05), WithinAbs(1.0, 1e-3));
  CHECK(m.omega_q < m.theta_q);
  CHECK_THAT(m.weight / dsf::spectral_weight_smallq(0.05, p), WithinAbs(1.0, 2e-3));
  // the long-wavelength weight overestimates at the coherence length
  const auto z = dsf::collective_dispersion(1.0 / p.zeta(), p);
  REQUIRE_FALSE(z.merged);
  CHECK_THAT(z.weight / dsf::spectral_weight_smallq(z.q, p), WithinAbs(0.84787, 1e-3));
}

TEST_CASE("dispersion stays below the continuum and merges on the BCS side") {
  const auto& p = bcs_side();
  std::vector<double> qs{0.2, 0.6, 1.0};
  for (const auto& m : dsf::dispersion_curve(qs, p)) {
    REQUIRE_FALSE(m.merged);
    CHECK(m.omega_q < m.theta_q);
    CHECK(m.weight > 0.0);
  }
  const auto far = dsf::collective_dispersion(3.0, p);
  CHECK(far.merged);
  CHECK(std::isnan(far.omega_q));
  CHECK_THROWS_AS(dsf::collective_dispersion(0.0, p), DomainError);
}

TEST_CASE("mode strength at fixed frequency on the BEC side") {
  const auto& p = bec_side();
  const double nu = 0.5 * p.theta0();
  const auto m = dsf::c_nu(nu, p);
  CHECK_THAT(m.q_nu, WithinRel(1.6019970436870816, 1e-7));
  CHECK_THAT(m.b, WithinRel(0.20201711696276548, 1e-6));
  CHECK_THAT(m.d_omega_d_q, WithinRel(1.9726102503769043, 1e-6));
  CHECK_THAT(m.c_nu, WithinRel(0.032947446781346805, 1e-6));
}

TEST_CASE("weight over group velocity equals the fixed-frequency strength") {
  const auto& p = unitary();
  const auto m = dsf::collective_dispersion(0.8, p);
  REQUIRE_FALSE(m.merged);
  const auto f = dsf::c_nu(m.omega_q, p);
  CHECK_THAT(f.q_nu, WithinRel(0.8, 1e-7));
  const auto d = dsf::phonon_dos(m.omega_q, p);
  CHECK_THAT(f.c_nu, WithinRel(m.weight / d.group_velocity, 1e-5));
}

TEST_CASE("phonon density of states") {
  const auto& p = unitary();
  const double nu = 0.05 * p.theta0();
  const auto d = dsf::phonon_dos(nu, p);
  CHECK_THAT(d.value / phonon_law(nu, p.c()), WithinRel(3.41027e-4 / 3.41565e-4, 1e-4));
  CHECK_THAT(d.value, WithinRel(phonon_law(nu, p.c()), 5e-3));

  const auto& b = bcs_side();
  CHECK_THAT(dsf::phonon_dos(0.5 * b.theta0(), b).value, WithinRel(0.0100103, 1e-4));
  for (double f : {1.02, 1.2, 1.5}) CHECK_THROWS_AS(dsf::mode_wavevector(f * b.theta0(), b), NoModeAtFrequency);
  CHECK_THROWS_AS(dsf::mode_wavevector(0.0, b), DomainError);
}

TEST_CASE("sum rules at long wavelength") {
  const auto& p = unitary();
  dsf::SumRuleNumerics num;
  num.rel_tol = 1e-4;
  num.chi.rel_tol = 1e-6;
  const auto f = dsf::sum_rule_check(0.05, p, dsf::SumRule::f_sum, 0.01, num);
  CHECK_THAT(f.expected, WithinRel(units::density * units::kinetic(0.05), 1e-15));
  CHECK(f.deviation < 1e-4);
  const auto c = dsf::sum_rule_check(0.05, p, dsf::SumRule::compressibility, 0.002, num);
  CHECK(c.deviation < 1e-2);
}
