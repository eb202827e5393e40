#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "bcsprobe/impurity_probe.hpp"

using namespace bcsprobe;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

constexpr double mass_ratio = 40.0 / 6.0;
constexpr double kappa = 0.18;

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

}  // namespace

TEST_CASE("probe configuration") {
  const probe::ProbeConfig pc(mass_ratio, kappa, 0.3);
  CHECK_THAT(pc.impurity_mass(), WithinRel(mass_ratio * 0.5, 1e-15));
  CHECK_THAT(pc.ell(), WithinRel(1.0 / std::sqrt(pc.impurity_mass() * 0.3), 1e-15));
  CHECK_THAT(pc.with_omega(probe::ProbeConfig::omega_for_ell(mass_ratio, 7.5)).ell(), WithinRel(7.5, 1e-14));
  CHECK_THROWS_AS(probe::ProbeConfig(0.0, kappa, 0.3), DomainError);
  CHECK_THROWS_AS(probe::ProbeConfig(mass_ratio, -1.0, 0.3), DomainError);
  CHECK_THROWS_AS(probe::ProbeConfig(mass_ratio, kappa, 0.0), DomainError);
  CHECK_THROWS_AS(probe::ProbeConfig(mass_ratio, kappa, 0.3, -2.0), DomainError);
  CHECK_THROWS_AS(probe::ImpuritySite({0, 0, 0}, {1, 1, 0}), DomainError);
}

TEST_CASE("coupling constants and form factors") {
  const double ell = 1.7;
  SECTION("angular average of the dipole couplings is the form factor") {
    for (int a = 1; a <= 3; ++a)
      for (double q : {0.1, 0.5, 1.0, 2.0}) {
        INFO("a = " << a << " q = " << q);
        CHECK_THAT(probe::angular_average_a0(q, ell, kappa, a), WithinRel(probe::form_factor(q, ell), 1e-8));
      }
  }
  SECTION("symmetry and index checks") {
    const probe::Vec3 q{0.3, -0.4, 0.5};
    for (int g = 0; g < 4; ++g)
      for (int d = 0; d < 4; ++d)
        CHECK(probe::coupling_constant(q, ell, kappa, g, d) == probe::coupling_constant(q, ell, kappa, d, g));
    CHECK_THAT(probe::coupling_constant({0, 0, 0}, ell, kappa, 0, 0).real(), WithinAbs(kappa, 1e-15));
    CHECK_THROWS_AS(probe::coupling_constant(q, ell, kappa, 4, 0), DomainError);
  }
  SECTION("form factor peaks at q ell = sqrt 2") {
    const double qp = std::sqrt(2.0) / ell;
    CHECK(probe::form_factor(qp, ell) > probe::form_factor(0.9 * qp, ell));
    CHECK(probe::form_factor(qp, ell) > probe::form_factor(1.1 * qp, ell));
  }
  SECTION("cross form factors") {
    const probe::ImpuritySite m({0, 0, 0}, {1, 0, 0});
    const probe::ImpuritySite n({40.0 * ell, 0, 0}, {1, 0, 0});
    CHECK_THAT(probe::far_field_parameter(m, n, ell), WithinRel(40.0, 1e-14));
    const double q = 1.0 / ell;
    CHECK_THAT(probe::far_field_cross_form_factor(q, m, n, ell),
               WithinAbs(probe::exact_cross_form_factor(q, m, n, ell), 0.05 * probe::form_factor(q, ell)));
    CHECK_THAT(probe::exact_cross_form_factor(q, m, m, ell), WithinRel(probe::form_factor(q, ell), 1e-12));
    // perpendicular separation has no far-field term
    const probe::ImpuritySite side({0, 40.0 * ell, 0}, {1, 0, 0});
    CHECK_THAT(probe::far_field_cross_form_factor(q, m, side, ell), WithinAbs(0.0, 1e-300));
  }
}

TEST_CASE("low-frequency limits") {
  const auto& p = unitary();
  CHECK_THAT(probe::dephasing_rate_limit(0.02, dsf::infinite_beta, kappa, p) /
                 probe::dephasing_rate_limit(0.01, dsf::infinite_beta, kappa, p),
             WithinRel(8.0, 1e-12));
  const double ell = 30.0;
  const double a = probe::sublevel_spectral_density_limit(1e-4, ell, kappa, p);
  const double b = probe::sublevel_spectral_density_limit(2e-4, ell, kappa, p);
  CHECK_THAT(b / a, WithinRel(128.0, 1e-3));
}

TEST_CASE("delta route follows the super-Ohmic form at weak confinement") {
  const auto& p = unitary();
  const probe::ProbeConfig pc(mass_ratio, kappa, probe::ProbeConfig::omega_for_ell(mass_ratio, 20.0));
  const auto so = probe::super_ohmic(pc, p);
  CHECK_THAT(so.omega_c, WithinRel(p.c() / 20.0, 1e-14));
  for (double f : {0.5, 1.0, 2.0}) {
    const double nu = f * so.omega_c;
    INFO("nu / omega_c = " << f);
    CHECK_THAT(probe::spectral_density_delta(nu, pc, p).value, WithinRel(so(nu), 1e-2));
  }
}

TEST_CASE("broadened and delta routes agree below the gap") {
  const auto& p = bec_side();
  const double nu = 0.5 * p.theta0();
  const probe::ProbeConfig pc(mass_ratio, kappa, nu);
  const auto d = probe::spectral_density_delta(nu, pc, p);
  const auto b = probe::spectral_density(nu, pc, p, 0.01);
  CHECK_THAT(b.value, WithinRel(d.value, 5e-4));
  REQUIRE(b.peaks.size() == 1);
  CHECK_THAT(b.peaks[0], WithinRel(d.q_nu, 1e-6));

  const auto g = probe::decay_rate(pc, p, 0.01);
  CHECK_THAT(g.gamma, WithinRel(2.0 * std::numbers::pi * b.value, 1e-12));
  CHECK_THAT(g.markov_ratio, WithinRel(g.gamma * pc.ell() / p.c(), 1e-12));
  CHECK(g.rwa_ratio < 1e-3);
  const auto gc = probe::collective_decay_rate(pc, p);
  REQUIRE(gc.has_value());
  CHECK_THAT(*gc, WithinRel(g.gamma, 5e-4));
}

TEST_CASE("no collective channel above the gap on the BCS side") {
  const auto& p = bcs_side();
  const probe::ProbeConfig pc(mass_ratio, kappa, 1.2 * p.theta0());
  CHECK_FALSE(probe::collective_decay_rate(pc, p).has_value());
  const probe::ProbeConfig below(mass_ratio, kappa, 0.05);
  CHECK(probe::spectral_density(-0.1, below, p, 0.01).value == 0.0);
}

TEST_CASE("cross spectral density of two parallel dipoles") {
  const auto& p = unitary();
  const double nu = 0.5 * p.theta0();
  const probe::ProbeConfig pc(mass_ratio, kappa, nu);
  const probe::ImpuritySite m({0, 0, 0}, {1, 0, 0});
  const probe::ImpuritySite n({5.0 * pc.ell(), 0, 0}, {1, 0, 0});
  const auto ff = probe::cross_spectral_density(nu, m, n, pc, p, 0.01);
  CHECK_THAT(ff.cross, WithinRel(6.0137176332758918e-07, 1e-6));
  CHECK_THAT(ff.self, WithinRel(1.0565278752177423e-06, 1e-6));
  CHECK_THAT(ff.self, WithinRel(probe::spectral_density(nu, pc, p, 0.01).value, 1e-6));
  const auto ex = probe::cross_spectral_density(nu, m, n, pc, p, 0.01, probe::CrossForm::exact);
  CHECK_THAT(ex.cross, WithinRel(-3.320187799763006e-07, 1e-6));
  CHECK(std::abs(ex.cross) < ex.self);
}
