#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "bcsprobe/dsf.hpp"
#include "bcsprobe/eos.hpp"
#include "bcsprobe/impurity_probe.hpp"
#include "bcsprobe/qubit_dynamics.hpp"
#include "bcsprobe/susceptibility.hpp"

using namespace bcsprobe;

namespace {

constexpr double mass_ratio = 40.0 / 6.0;
constexpr double kappa = 0.18;
constexpr double epsilon = 0.01;

struct Outcome {
  bool ok = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

int failures = 0;

void criterion(int id, const char* name, double budget_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = dt < budget_s;
  const bool pass = o.ok && in_time;
  if (!pass) ++failures;
  std::printf("%s  %2d  %-34s %8.2f s (limit %g s%s)  %s\n", pass ? "PASS" : "FAIL", id, name, dt, budget_s,
              in_time ? "" : ", over budget", o.detail.c_str());
  std::fflush(stdout);
}

struct GammaPoint {
  double frac;  // omega_A / Theta0
  double gamma;
  std::optional<double> collective;
};

std::vector<GammaPoint> gamma_sweep(const eos::CrossoverPoint& p, const std::vector<double>& fracs, bool collective) {
  std::vector<GammaPoint> out;
  for (double f : fracs) {
    const probe::ProbeConfig pc(mass_ratio, kappa, f * p.theta0());
    GammaPoint g{f, probe::decay_rate(pc, p, epsilon).gamma, std::nullopt};
    if (collective) g.collective = probe::collective_decay_rate(pc, p);
    out.push_back(g);
  }
  return out;
}

std::vector<double> steps(double a, double b, double h) {
  std::vector<double> v;
  for (int i = 0; a + i * h <= b + 1e-12; ++i) v.push_back(a + i * h);
  return v;
}

}  // namespace

int main() {
  std::printf("acceptance: M/m = %.4f, kappa = %.2f, epsilon = %.3f, T = 0 unless stated\n", mass_ratio, kappa, epsilon);

  criterion(1, "EOS limits", 10.0, [] {
    const auto bcs = eos::solve_eos(-2.0);
    const auto bec = eos::solve_eos(2.0);
    const double d_mu = std::abs(bcs.mu() - 1.0);
    const double d_c = std::abs(bcs.c() / eos::bcs_sound_speed() - 1.0);
    const double d_bec = std::abs(bec.mu() / eos::molecular_binding_energy(2.0) - 1.0);
    return Outcome{d_mu < 0.02 && d_c < 0.05 && d_bec < 0.10,
                   fmt("BCS |mu-1| = %.4f (<0.02), |c/c_BCS-1| = %.4f (<0.05); BEC |mu/mu_mol-1| = %.4f (<0.10)", d_mu,
                       d_c, d_bec)};
  });

  criterion(2, "I11 identity, 5x5 grid x 3 points", 60.0, [] {
    const std::vector<double> qs{0.2, 0.6, 1.0, 1.6, 2.5};
    const std::vector<double> fr{0.2, 0.5, 0.8, 1.1, 1.5};
    double worst = 0.0;
    for (double inv : {-0.5, 0.0, 1.0}) {
      const auto p = eos::solve_eos(inv);
      for (double q : qs)
        for (double f : fr) worst = std::max(worst, chi::i11_identity_gap(q, f * p.theta0(), epsilon, p));
    }
    return Outcome{worst < 1e-6, fmt("max relative gap %.3e (<1e-6)", worst)};
  });

  criterion(3, "sum rules at q = 0.05, unitarity", 120.0, [] {
    const auto p = eos::solve_eos(0.0);
    const auto f = dsf::sum_rule_check(0.05, p, dsf::SumRule::f_sum, epsilon);
    const auto c = dsf::sum_rule_check(0.05, p, dsf::SumRule::compressibility, 0.002);
    return Outcome{f.deviation < 0.03 && c.deviation < 0.05,
                   fmt("f-sum %.2e (<0.03, eps %.3g); compressibility %.2e (<0.05, eps %.3g)", f.deviation, f.epsilon,
                       c.deviation, c.epsilon)};
  });

  criterion(4, "mode merging threshold", 300.0, [] {
    const auto qs = steps(0.05, 6.0, 0.05);
    // full scan where the mode must survive; first merged q is enough where it must merge
    auto merged_at = [&](double inv, bool stop_at_first) {
      const auto p = eos::solve_eos(inv);
      std::vector<double> m;
      for (double q : qs) {
        if (dsf::collective_dispersion(q, p).merged) m.push_back(q);
        if (stop_at_first && !m.empty()) break;
      }
      return m;
    };
    const auto m19 = merged_at(0.19, false);
    const auto m13 = merged_at(0.13, true);
    const std::string where = m13.empty() ? "never" : fmt("first at q = %.2f", m13.front());
    return Outcome{m19.empty() && !m13.empty(),
                   fmt("q in [0.05, 6] step 0.05: merged points at 0.19: %zu (need 0); at 0.13 merged %s", m19.size(),
                       where.c_str())};
  });

  // one sweep per coupling, shared by criteria 5 and 6
  std::vector<GammaPoint> sweep_bcs;
  criterion(5, "decay-rate shape suite", 1800.0, [&] {
    std::string detail;
    bool ok = true;

    // (a) peak at the pair gap on the BCS side
    const auto pa = eos::solve_eos(-0.5);
    sweep_bcs = gamma_sweep(pa, {0.3, 0.6, 0.8, 0.9, 0.95, 0.98, 0.99, 1.0, 1.01, 1.02, 1.05, 1.1, 1.3, 1.6, 2.0}, false);
    const auto top = std::max_element(sweep_bcs.begin(), sweep_bcs.end(),
                                      [](const GammaPoint& a, const GammaPoint& b) { return a.gamma < b.gamma; });
    const bool a_ok = std::abs(top->frac - 1.0) < 0.02;
    ok &= a_ok;
    detail += fmt("(a) argmax at %.3f Theta0 %s; ", top->frac, a_ok ? "ok" : "NO");

    // (b) local minimum near Theta0 at unitarity, then a rise that starts steep:
    // slope over the first step after the minimum exceeds the mean slope over the next 0.1 Theta0
    const auto pb = eos::solve_eos(0.0);
    const auto sb =
        gamma_sweep(pb, {0.85, 0.9, 0.925, 0.95, 0.975, 0.99, 1.0, 1.01, 1.025, 1.05, 1.075, 1.1, 1.15, 1.2, 1.3}, false);
    std::optional<std::size_t> imin;
    for (std::size_t i = 1; i + 1 < sb.size(); ++i)
      if (sb[i].gamma < sb[i - 1].gamma && sb[i].gamma < sb[i + 1].gamma && std::abs(sb[i].frac - 1.0) < 0.05) {
        imin = i;
        break;
      }
    bool b_ok = false;
    if (imin) {
      const auto& m = sb[*imin];
      const auto& n = sb[*imin + 1];
      std::size_t j = *imin + 1;
      while (j + 1 < sb.size() && sb[j + 1].frac <= m.frac + 0.1 + 1e-12) ++j;
      const double first = (n.gamma - m.gamma) / (n.frac - m.frac);
      const double mean = (sb[j].gamma - m.gamma) / (sb[j].frac - m.frac);
      bool rises = true;
      for (std::size_t k = *imin + 1; k < sb.size(); ++k) rises &= sb[k].gamma > sb[k - 1].gamma;
      b_ok = rises && first > mean;
      detail += fmt("(b) min at %.3f Theta0, initial slope %.3g vs mean %.3g %s; ", m.frac, first, mean,
                    b_ok ? "ok" : "NO");
    } else {
      detail += "(b) no local minimum within 5% of Theta0 NO; ";
    }
    ok &= b_ok;

    // (c) monotone on the BEC side, collective route alone within 5%
    const auto pc = eos::solve_eos(1.0);
    const auto sc = gamma_sweep(pc, steps(0.2, 1.5, 0.1), true);
    bool mono = true;
    double worst = 0.0;
    bool all_modes = true;
    for (std::size_t i = 0; i < sc.size(); ++i) {
      if (i > 0) mono &= sc[i].gamma >= sc[i - 1].gamma;
      if (!sc[i].collective) {
        all_modes = false;
        continue;
      }
      worst = std::max(worst, std::abs(*sc[i].collective / sc[i].gamma - 1.0));
    }
    const bool c_ok = mono && all_modes && worst < 0.05;
    ok &= c_ok;
    detail += fmt("(c) monotone %s over 0.2..1.5 Theta0, collective max dev %.3e %s", mono ? "yes" : "no", worst,
                  c_ok ? "ok" : "NO");
    return Outcome{ok, detail};
  });

  criterion(6, "peak decay-rate magnitude", 1.0, [&] {
    if (sweep_bcs.empty()) return Outcome{false, "sweep from criterion 5 unavailable"};
    double peak = 0.0;
    for (const auto& g : sweep_bcs) peak = std::max(peak, g.gamma);
    return Outcome{peak > 1e-5 && peak < 1e-3, fmt("peak Gamma = %.3e E_F at 1/k_F a_s = -0.5 (within [1e-5, 1e-3])", peak)};
  });

  criterion(7, "super-Ohmic limit", 120.0, [] {
    const auto p = eos::solve_eos(0.0);
    const probe::ProbeConfig pc(mass_ratio, kappa, probe::ProbeConfig::omega_for_ell(mass_ratio, 20.0));
    const auto so = probe::super_ohmic(pc, p);
    const double n1 = 0.05 * so.omega_c, n2 = 0.1 * so.omega_c;
    const double i1 = probe::spectral_density_delta(n1, pc, p).value;
    const double i2 = probe::spectral_density_delta(n2, pc, p).value;
    const double slope = std::log(i2 / i1) / std::log(n2 / n1);
    const double pref = i1 / (so.alpha * std::pow(so.omega_c, -4.0) * std::pow(n1, 5.0));
    return Outcome{std::abs(slope - 5.0) < 0.1 && std::abs(pref - 1.0) < 0.05,
                   fmt("ell = 20 (zeta = %.3f): slope %.5f (5 +- 0.1), I / (alpha omega_c^-4 nu^5) = %.5f (1 +- 0.05)",
                       p.zeta(), slope, pref)};
  });

  criterion(8, "two-route consistency below the gap", 300.0, [] {
    const auto p = eos::solve_eos(1.0);
    double worst = 0.0;
    std::string vals;
    for (double f : {0.3, 0.45, 0.6, 0.75, 0.9}) {
      const probe::ProbeConfig pc(mass_ratio, kappa, f * p.theta0());
      const double broad = probe::decay_rate(pc, p, epsilon).gamma;
      const double delta = 2.0 * std::numbers::pi * probe::spectral_density_delta(pc.omega_a(), pc, p).value;
      const double dev = std::abs(broad / delta - 1.0);
      worst = std::max(worst, dev);
      vals += fmt(" %.1e", dev);
    }
    return Outcome{worst < 0.05, fmt("1/k_F a_s = 1, nu/Theta0 = 0.3..0.9: deviations%s (max < 0.05)", vals.c_str())};
  });

  criterion(9, "Lindblad exactness", 1.0, [] {
    const double omega = 1.0, gamma = 0.02;
    std::vector<double> t;
    for (int i = 0; i <= 500; ++i) t.push_back(5.0 / gamma * i / 500.0);
    const auto tr = qubit::decay_trajectory(omega, gamma, t);
    const double fit = std::abs(tr.fitted_gamma / gamma - 1.0);
    return Outcome{tr.max_deviation < 1e-6 && fit < 1e-3,
                   fmt("Gamma t in [0, 5], omega = 1, Gamma = 0.02: max |p1 - e^-Gt| = %.2e (<1e-6), fit error %.2e (<1e-3)",
                       tr.max_deviation, fit)};
  });

  criterion(10, "multi-impurity decoupling", 120.0, [] {
    const auto p = eos::solve_eos(0.0);
    const probe::ProbeConfig pc(mass_ratio, kappa, 0.5 * p.theta0());
    const double b = 20.0 * pc.ell();
    const probe::Vec3 z{0.0, 0.0, 1.0};
    const probe::ImpuritySite origin({0.0, 0.0, 0.0}, z);
    // square lattice in the xy plane, dipoles along z: distinct separations
    const std::vector<probe::ImpuritySite> others{
        {{b, 0.0, 0.0}, z}, {{b, b, 0.0}, z}, {{2.0 * b, 0.0, 0.0}, z}};
    double worst = 0.0;
    for (double f : {0.25, 0.5, 0.75, 1.0, 1.25})
      for (const auto& s : others) {
        const auto r = probe::cross_spectral_density(f * p.theta0(), origin, s, pc, p, epsilon);
        worst = std::max(worst, std::abs(r.cross) / r.self);
      }
    const auto ex = probe::cross_spectral_density(0.5 * p.theta0(), origin, others[0], pc, p, epsilon,
                                                  probe::CrossForm::exact);
    return Outcome{worst < 1e-3, fmt("b = 20 ell, 3 separations x 5 frequencies: max |I_mn|/I_nn = %.2e (<1e-3); "
                                     "full angular form at nearest neighbour gives %.2e",
                                     worst, std::abs(ex.cross) / ex.self)};
  });

  criterion(11, "positivity and detailed balance", 120.0, [] {
    long samples = 0;
    double most_negative = 0.0;
    double worst_balance = 0.0;
    for (double inv : {-0.5, 0.0, 1.0}) {
      const auto p = eos::solve_eos(inv);
      for (double q : {0.1, 0.5, 1.0, 2.0, 3.0})
        for (double f : {0.1, 0.3, 0.6, 0.9, 1.1, 1.5, 2.0, 3.0}) {
          const double s = dsf::dsf(q, f * p.theta0(), dsf::infinite_beta, epsilon, p).value;
          most_negative = std::min(most_negative, s);
          ++samples;
        }
      const double beta = 10.0;
      for (auto [q, nu] : {std::pair{0.5, 0.3}, std::pair{1.0, 0.6}, std::pair{2.0, 1.5}}) {
        const double sp = dsf::dsf(q, nu, beta, epsilon, p).value;
        const double sm = dsf::dsf(q, -nu, beta, epsilon, p).value;
        most_negative = std::min({most_negative, sp, sm});
        samples += 2;
        worst_balance = std::max(worst_balance, std::abs(sm / (sp * std::exp(-beta * nu)) - 1.0));
      }
    }
    return Outcome{most_negative >= 0.0 && worst_balance < 0.01,
                   fmt("%ld samples, min S = %.3g (>= 0); beta = 10 detailed balance max dev %.2e (<0.01)", samples,
                       most_negative, worst_balance)};
  });

  std::printf("%s: %d of 11 criteria failed\n", failures ? "FAILED" : "ALL PASSED", failures);
  return failures ? 1 : 0;
}
