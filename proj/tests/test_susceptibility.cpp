#include <catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <numbers>

#include "bcsprobe/susceptibility.hpp"

using namespace bcsprobe;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using cplx = std::complex<double>;

namespace {

double rel(cplx a, cplx b) { return std::abs(a - b) / std::abs(b); }

// same (delta, mu) as the independent reference solve
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

// free Fermi gas static response, x = q / 2k_F
double lindhard(double q) {
  const double x = 0.5 * q;
  return -(0.5 + (1.0 - x * x) / (4.0 * x) * std::log(std::abs((1.0 + x) / (1.0 - x)))) /
         (2.0 * std::numbers::pi * std::numbers::pi);
}

}  // namespace

TEST_CASE("building blocks against direct scipy integration") {
  // q = 1, nu = 0.5, epsilon = 0.01 on the BCS side
  const auto b = chi::building_blocks(1.0, 0.5, 0.01, bcs_side());
  CHECK(rel(b.a1, {0.08063183690746561, 9.963914448391067e-05}) < 1e-6);
  CHECK(rel(b.a2, {0.09163366422623227, 0.0009413183263935255}) < 1e-6);
  CHECK(rel(b.i11, {-0.03812332809410943, 0.0004365701552900043}) < 1e-6);
  CHECK(rel(b.i22, {-0.06775292788901763, 0.00013219636945289257}) < 1e-6);
  CHECK(rel(b.i12, {0.03125769839545982, 3.2156189112205627e-05}) < 1e-6);
  CHECK(rel(chi::chi_pair(1.0, 0.5, 0.01, bcs_side()), {-0.04766627993799999, -0.0004042041764629862}) < 1e-6);
}

TEST_CASE("pair and collective response on the BEC side") {
  const auto r = chi::response(0.5, 0.3, 0.01, bec_side());
  CHECK(rel(r.chi_coll, {-0.8192747338911619, -0.2744617120872283}) < 1e-6);
  CHECK(rel(r.chi_pair, {-0.012035379268602549, -2.6425224271724236e-06}) < 1e-5);
  CHECK(rel(r.chi_total, r.chi_pair + r.chi_coll) < 1e-15);
}

TEST_CASE("weak pairing reduces to the Lindhard function") {
  const auto normal = eos::CrossoverPoint::from_gap(1e-3, 1.0);
  for (double q : {0.5, 1.0, 1.5, 3.0}) {
    INFO("q = " << q);
    const cplx c = chi::chi_pair(q, 0.0, 0.0, normal);
    CHECK(std::abs(c.imag()) < 1e-14);
    CHECK_THAT(c.real(), WithinRel(lindhard(q), 2e-5));
  }
}

TEST_CASE("two forms of I11 agree") {
  for (const auto* p : {&bcs_side(), &unitary(), &bec_side()})
    for (double q : {0.2, 1.0, 2.5})
      for (double f : {0.3, 0.9, 1.4}) {
        const double nu = f * p->theta0();
        INFO("delta = " << p->delta() << " q = " << q << " nu = " << nu);
        CHECK(chi::i11_identity_gap(q, nu, 0.01, *p) < 1e-6);
      }
}

TEST_CASE("long-wavelength limits at unitarity") {
  const auto& p = unitary();
  SECTION("I11 expansion") {
    const double q = 0.01, nu = 0.005;
    const auto b = chi::building_blocks(q, nu, 0.0, p);
    const double m = units::mass;
    const double expected = nu * nu * p.j2() / 4.0 - q * q * p.j4() / (12.0 * m * m);
    CHECK_THAT(b.i11.real(), WithinRel(expected, 1e-2));
  }
  SECTION("zero-momentum blocks") {
    const auto b = chi::building_blocks(1e-3, 1e-4, 0.0, p);
    CHECK_THAT(b.a1.real(), WithinRel(p.jxi(), 1e-3));
    CHECK_THAT(b.a2.real(), WithinRel(p.j2() / 2.0, 1e-3));
    CHECK_THAT(b.i12.real(), WithinRel(p.jxi() / 2.0, 1e-3));
    CHECK_THAT(b.i22.real(), WithinRel(-p.delta() * p.delta() * p.j2(), 1e-3));
  }
  SECTION("phonon-pole response") {
    const double q = 0.05, w = p.c() * q;
    const double d2 = p.delta() * p.delta();
    for (double r : {0.5, 1.5}) {
      const double nu = r * w;
      const double approx =
          (d2 * p.j2() * p.j2() * nu * nu + p.jxi() * p.jxi() * w * w) / (p.j2() * (nu * nu - w * w));
      CHECK_THAT(chi::chi_coll(q, nu, 0.0, p).real(), WithinRel(approx, 3e-3));
    }
  }
}

TEST_CASE("pole form reproduces the full collective response") {
  for (double nu : {0.2, 0.9, 1.6}) {
    const auto b = chi::building_blocks(0.8, nu, 0.02, unitary());
    CHECK(rel(chi::chi_coll_compact(b, unitary()), chi::chi_coll(b, unitary())) < 1e-12);
  }
}

TEST_CASE("absorptive part has the sign of nu") {
  for (double nu : {0.1, 0.6, 1.2, 2.5, 4.0}) {
    const auto r = chi::response(1.2, nu, 0.02, unitary());
    INFO("nu = " << nu);
    CHECK(r.chi_total.imag() < 0.0);
    CHECK(r.chi_pair.imag() < 0.0);
    const auto m = chi::response(1.2, -nu, 0.02, unitary());
    CHECK_THAT(m.chi_total.imag(), WithinRel(-r.chi_total.imag(), 1e-6));
  }
}

TEST_CASE("susceptibility argument checks") {
  const auto& p = unitary();
  CHECK_THROWS_AS(chi::chi_pair(0.0, 0.2, 0.01, p), DomainError);
  CHECK_THROWS_AS(chi::chi_pair(-1.0, 0.2, 0.01, p), DomainError);
  CHECK_THROWS_AS(chi::chi_pair(1.0, 0.2, -0.01, p), DomainError);
  CHECK_THROWS_AS(chi::chi_pair(1.0, std::nan(""), 0.01, p), DomainError);
  CHECK_THROWS_AS(chi::chi_pair(1.0, 2.0 * p.theta0(), 0.0, p), DomainError);
  CHECK_NOTHROW(chi::chi_pair(1.0, 0.5 * p.theta0(), 0.0, p));

  chi::ChiBuildingBlocks b;
  b.nu = 1.0;
  b.i11 = 1.0;
  b.i22 = 1.0;
  b.i12 = 1.0;
  CHECK_THROWS_AS(chi::chi_coll(b, p), PoleSingular);
  CHECK_THROWS_AS(chi::chi_coll_compact(b, p), PoleSingular);
}
