#pragma once

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "bcsprobe/cli/run_config.hpp"
#include "bcsprobe/dsf.hpp"
#include "bcsprobe/eos.hpp"
#include "bcsprobe/errors.hpp"
#include "bcsprobe/impurity_probe.hpp"
#include "bcsprobe/io/curve_file.hpp"
#include "bcsprobe/susceptibility.hpp"

namespace bcsprobe::cli {

enum ExitCode : int { exit_ok = 0, exit_config = 2, exit_numerical = 3, exit_validation = 4 };

// Results land in slot i regardless of which worker computed them. The first
// failing index (not the first failure in time) is rethrown.
template <class R, class F>
std::vector<R> parallel_map(std::size_t n, int threads, F&& f) {
  std::vector<R> out(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        out[i] = f(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto nt = static_cast<std::size_t>(std::max(1, threads));
  if (nt == 1 || n < 2) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < std::min(nt, n); ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

struct NamedCurve {
  std::string stem;
  io::CurveFile curve;
};

struct CommandResult {
  std::vector<NamedCurve> curves;
  std::optional<json> report;
  int exit_code = exit_ok;
};

inline std::string inv_tag(double inv) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "inv%+.3f", inv);
  return buf;
}

inline io::CurveFile new_curve(const RunConfig& cfg, const std::string& kind) {
  io::CurveFile f;
  f.set_meta("kind", kind);
  f.set_meta("config_name", cfg.name);
  f.set_config_hash(cfg.canonical());
  if (cfg.lab) {
    f.set_meta("lab_density_cm3", io::format_double(cfg.lab->density_cm3));
    f.set_meta("lab_atom_mass_amu", io::format_double(cfg.lab->atom_mass_amu));
    f.set_meta("lab_fermi_energy_hz", io::format_double(cfg.lab->energy_to_hz(1.0)));
    f.set_meta("lab_fermi_wavevector_per_um", io::format_double(cfg.lab->wavevector_to_per_um(1.0)));
  }
  return f;
}

inline void point_meta(io::CurveFile& f, const eos::CrossoverPoint& p) {
  f.set_meta("inv_kfa", io::format_double(p.inv_kfa()));
  f.set_meta("delta", io::format_double(p.delta()));
  f.set_meta("mu", io::format_double(p.mu()));
  f.set_meta("sound_speed", io::format_double(p.c()));
  f.set_meta("theta0", io::format_double(p.theta0()));
  f.set_meta("zeta_inverse", io::format_double(1.0 / p.zeta()));
}

inline std::vector<eos::CrossoverPoint> crossover_points(const RunConfig& cfg) {
  return eos::solve_eos_sweep(std::span<const double>(cfg.inv_kfa));
}

// ---------------------------------------------------------------------------
// eos
// ---------------------------------------------------------------------------

inline CommandResult cmd_eos(const RunConfig& cfg) {
  const auto pts = crossover_points(cfg);
  auto f = new_curve(cfg, "eos");
  f.add_column("inv_kfa", "1");
  f.add_column("delta", "E_F");
  f.add_column("mu", "E_F");
  f.add_column("sound_speed", "E_F/k_F");
  f.add_column("theta0", "E_F");
  f.add_column("zeta", "1/k_F");
  f.add_column("mu_molecular", "E_F");
  f.add_column("c_bcs_limit", "E_F/k_F");
  f.add_column("c_bec_limit", "E_F/k_F");
  if (cfg.lab) {
    f.add_column("delta_lab", "Hz");
    f.add_column("theta0_lab", "Hz");
    f.add_column("sound_speed_lab", "mm/s");
  }
  bool delta_up = true, mu_down = true;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto& p = pts[i];
    if (i > 0) {
      delta_up = delta_up && p.delta() > pts[i - 1].delta();
      mu_down = mu_down && p.mu() < pts[i - 1].mu();
    }
    std::vector<double> row{p.inv_kfa(), p.delta(), p.mu(), p.c(), p.theta0(), p.zeta(),
                            eos::molecular_binding_energy(p.inv_kfa()), eos::bcs_sound_speed(),
                            eos::bec_sound_speed(p.inv_kfa())};
    if (cfg.lab) {
      const double v_unit = cfg.lab->fermi_energy_joule() / (LabUnits::hbar * cfg.lab->kf_per_m());
      row.push_back(cfg.lab->energy_to_hz(p.delta()));
      row.push_back(cfg.lab->energy_to_hz(p.theta0()));
      row.push_back(p.c() * v_unit * 1e3);
    }
    f.add_row(row);
  }
  f.set_meta("delta_increasing", delta_up ? "true" : "false");
  f.set_meta("mu_decreasing", mu_down ? "true" : "false");
  CommandResult r;
  r.curves.push_back({"eos", std::move(f)});
  return r;
}

// ---------------------------------------------------------------------------
// dispersion
// ---------------------------------------------------------------------------

inline std::vector<double> default_q_grid() {
  std::vector<double> q;
  for (int i = 1; i <= 60; ++i) q.push_back(i / 20.0);
  return q;
}

inline CommandResult cmd_dispersion(const RunConfig& cfg, int threads) {
  const auto pts = crossover_points(cfg);
  const auto qs = cfg.q_grid.empty() ? default_q_grid() : cfg.q_grid;
  const auto pole = cfg.numerics.pole();
  CommandResult res;
  for (const auto& p : pts) {
    const auto modes = parallel_map<dsf::CollectiveModePoint>(
        qs.size(), threads, [&](std::size_t i) { return dsf::collective_dispersion(qs[i], p, pole); });
    auto f = new_curve(cfg, "dispersion");
    point_meta(f, p);
    f.add_column("q", "k_F");
    f.add_column("theta_q", "E_F");
    f.add_column("omega_q", "E_F");
    f.add_column("merged", "flag");
    f.add_column("weight", "1");
    f.add_column("weight_smallq", "1");
    f.add_column("d_omega_d_nu", "1");
    if (cfg.lab) {
      f.add_column("q_lab", "1/um");
      f.add_column("theta_q_lab", "Hz");
      f.add_column("omega_q_lab", "Hz");
    }
    int merged = 0;
    for (const auto& m : modes) {
      merged += m.merged ? 1 : 0;
      std::vector<double> row{m.q, m.theta_q, m.omega_q, m.merged ? 1.0 : 0.0, m.weight,
                              dsf::spectral_weight_smallq(m.q, p), m.d_omega_d_nu};
      if (cfg.lab) {
        row.push_back(cfg.lab->wavevector_to_per_um(m.q));
        row.push_back(cfg.lab->energy_to_hz(m.theta_q));
        row.push_back(cfg.lab->energy_to_hz(m.omega_q));
      }
      f.add_row(row);
    }
    f.set_meta("merged_points", std::to_string(merged));
    res.curves.push_back({"dispersion_" + inv_tag(p.inv_kfa()), std::move(f)});
  }
  return res;
}

// ---------------------------------------------------------------------------
// dsf-grid
// ---------------------------------------------------------------------------

inline CommandResult cmd_dsf_grid(const RunConfig& cfg, int threads) {
  const auto pts = crossover_points(cfg);
  const auto qs = cfg.q_grid.empty() ? default_q_grid() : cfg.q_grid;
  std::vector<double> nus = cfg.nu_grid;
  if (nus.empty())
    for (int i = 1; i <= 40; ++i) nus.push_back(i / 20.0);
  const auto chi_num = cfg.numerics.chi();
  const double eps = cfg.numerics.epsilon;
  CommandResult res;
  for (const auto& p : pts) {
    const double scale = cfg.nu_relative ? p.theta0() : 1.0;
    const std::size_t n = qs.size() * nus.size();
    const auto rs = parallel_map<chi::ComplexResponse>(n, threads, [&](std::size_t i) {
      return chi::response(qs[i / nus.size()], nus[i % nus.size()] * scale, eps, p, chi_num);
    });
    auto f = new_curve(cfg, "dsf-grid");
    point_meta(f, p);
    f.set_meta("epsilon", io::format_double(eps));
    f.set_meta("beta", std::isinf(cfg.dsf_beta) ? "inf" : io::format_double(cfg.dsf_beta));
    f.add_column("q", "k_F");
    f.add_column("nu", "E_F");
    f.add_column("s", "1/E_F");
    f.add_column("chi_pair_re", "k_F^3/E_F");
    f.add_column("chi_pair_im", "k_F^3/E_F");
    f.add_column("chi_coll_re", "k_F^3/E_F");
    f.add_column("chi_coll_im", "k_F^3/E_F");
    for (const auto& r : rs) {
      const double s = -r.chi_total.imag() * dsf::fdt_factor(r.nu, cfg.dsf_beta);
      f.add_row({r.q, r.nu, s, r.chi_pair.real(), r.chi_pair.imag(), r.chi_coll.real(), r.chi_coll.imag()});
    }
    res.curves.push_back({"dsf_" + inv_tag(p.inv_kfa()), std::move(f)});
  }
  return res;
}

// ---------------------------------------------------------------------------
// gamma
// ---------------------------------------------------------------------------

struct GammaRow {
  probe::DecayRate rate;
  double collective = std::numeric_limits<double>::quiet_NaN();
};

inline std::vector<double> default_omega_grid() {
  std::vector<double> w;
  for (int i = 2; i <= 40; ++i) w.push_back(i / 20.0);
  return w;
}

inline CommandResult cmd_gamma(const RunConfig& cfg, int threads) {
  const auto pts = crossover_points(cfg);
  const auto ws = cfg.probe.omega_a.empty() ? default_omega_grid() : cfg.probe.omega_a;
  const auto spec = cfg.numerics.spectral();
  const double eps = cfg.numerics.epsilon;
  CommandResult res;
  for (const auto& p : pts) {
    const double scale = cfg.probe.omega_relative ? p.theta0() : 1.0;
    const auto rows = parallel_map<GammaRow>(ws.size(), threads, [&](std::size_t i) {
      const probe::ProbeConfig pc(cfg.probe.mass_ratio, cfg.probe.kappa, ws[i] * scale, cfg.probe.beta);
      GammaRow g;
      g.rate = probe::decay_rate(pc, p, eps, spec);
      if (cfg.probe.collective_route && pc.omega_a() < p.theta0()) {
        if (auto c = probe::collective_decay_rate(pc, p, spec.pole)) g.collective = *c;
      }
      return g;
    });
    auto f = new_curve(cfg, "gamma");
    point_meta(f, p);
    f.set_meta("epsilon", io::format_double(eps));
    f.set_meta("mass_ratio", io::format_double(cfg.probe.mass_ratio));
    f.set_meta("kappa", io::format_double(cfg.probe.kappa));
    f.set_meta("beta", std::isinf(cfg.probe.beta) ? "inf" : io::format_double(cfg.probe.beta));
    f.add_column("omega_a", "E_F");
    f.add_column("omega_over_theta0", "1");
    f.add_column("ell", "1/k_F");
    f.add_column("gamma", "E_F");
    f.add_column("gamma_error", "E_F");
    f.add_column("gamma_collective", "E_F");
    f.add_column("markov_ratio", "1");
    f.add_column("rwa_ratio", "1");
    f.add_column("low_temperature_ok", "flag");
    if (cfg.lab) {
      f.add_column("omega_a_lab", "Hz");
      f.add_column("gamma_lab", "Hz");
      f.add_column("ell_lab", "nm");
    }
    bool markov_ok = true;
    for (const auto& g : rows) {
      const auto& d = g.rate;
      markov_ok = markov_ok && d.markov_ratio < 0.1 && d.rwa_ratio < 0.1;
      std::vector<double> row{d.omega_a, d.omega_a / p.theta0(), d.ell, d.gamma, d.error, g.collective,
                              d.markov_ratio, d.rwa_ratio, d.low_temperature_ok ? 1.0 : 0.0};
      if (cfg.lab) {
        row.push_back(cfg.lab->energy_to_hz(d.omega_a));
        row.push_back(cfg.lab->energy_to_hz(d.gamma));
        row.push_back(cfg.lab->length_to_nm(d.ell));
      }
      f.add_row(row);
    }
    f.set_meta("markov_ok", markov_ok ? "true" : "false");
    res.curves.push_back({"gamma_" + inv_tag(p.inv_kfa()), std::move(f)});
  }
  return res;
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

struct Check {
  std::string name;
  double value = 0.0;      // measured deviation or ratio
  double tolerance = 0.0;  // pass when value < tolerance
  bool passed = false;
  std::string detail;
};

inline json check_to_json(const Check& c) {
  return {{"name", c.name}, {"value", io::number_to_json(c.value)}, {"tolerance", c.tolerance},
          {"passed", c.passed}, {"detail", c.detail}};
}

namespace detail {

inline std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

// runs body, turning numerical failures into a failed check with the message
inline Check run_check(const std::string& name, double tol, const std::function<double(std::string&)>& body) {
  Check c;
  c.name = name;
  c.tolerance = tol;
  try {
    c.value = body(c.detail);
    c.passed = std::isfinite(c.value) && c.value < tol;
  } catch (const QuadratureNotConverged& e) {
    c.value = std::numeric_limits<double>::quiet_NaN();
    c.detail = std::string(e.what()) + fmt(" (error estimate %.3g)", e.error_estimate());
  } catch (const std::exception& e) {
    c.value = std::numeric_limits<double>::quiet_NaN();
    c.passed = false;
    c.detail = e.what();
  }
  return c;
}


}  // namespace detail

inline CommandResult cmd_validate(const RunConfig& cfg) {
  const auto pts = crossover_points(cfg);
  const auto& nm = cfg.numerics;
  const double eps = nm.epsilon;
  const auto chi_num = nm.chi();
  const auto spec = nm.spectral();
  std::vector<Check> checks;

  for (const auto& p : pts) {
    const std::string tag = inv_tag(p.inv_kfa());

    checks.push_back(detail::run_check("identity_i11_" + tag, 1e-6, [&](std::string& d) {
      double worst = 0.0;
      for (double q : {0.3, 1.0, 2.0})
        for (double s : {0.3, 0.9, 1.5}) worst = std::max(worst, chi::i11_identity_gap(q, s * p.theta0(), eps, p, chi_num));
      d = "max relative gap over a 3x3 (q, nu) grid";
      return worst;
    }));

    checks.push_back(detail::run_check("detailed_balance_" + tag, 0.01, [&](std::string& d) {
      const double q = 0.5, nu = 0.3, beta = 10.0;
      const double sp = dsf::dsf(q, nu, beta, eps, p, chi_num).value;
      const double sm = dsf::dsf(q, -nu, beta, eps, p, chi_num).value;
      const double want = std::exp(-beta * nu);
      d = detail::fmt("S(-nu)/S(nu) = %.6g, exp(-beta nu) = %.6g", sm / sp, want);
      return std::abs(sm / sp / want - 1.0);
    }));

    checks.push_back(detail::run_check("positivity_" + tag, 1e-300, [&](std::string& d) {
      double worst = 0.0;
      int n = 0;
      for (double q : {0.2, 1.0, 2.5})
        for (double s : {-0.5, 0.4, 0.95, 1.3, 2.0})
          for (double beta : {dsf::infinite_beta, 10.0}) {
            const double v = dsf::dsf(q, s * p.theta0(), beta, eps, p, chi_num).value;
            worst = std::max(worst, -v);
            ++n;
          }
      d = "largest negative S over " + std::to_string(n) + " samples (0 means none)";
      return worst;
    }));
  }

  // probe checks use the most strongly coupled configured point
  const auto& pb = pts.back();
  checks.push_back(detail::run_check("two_route_" + inv_tag(pb.inv_kfa()), 0.05, [&](std::string& d) {
    const double nu = 0.5 * pb.theta0();
    const probe::ProbeConfig pc(cfg.probe.mass_ratio, cfg.probe.kappa, nu);
    const double a = probe::spectral_density(nu, pc, pb, eps, spec).value;
    const double b = probe::spectral_density_delta(nu, pc, pb, spec.pole).value;
    d = detail::fmt("broadened %.8g, delta route %.8g at nu = 0.5 Theta0", a, b);
    return std::abs(a / b - 1.0);
  }));

  checks.push_back(detail::run_check("decoupling_" + inv_tag(pb.inv_kfa()), 1e-3, [&](std::string& d) {
    double worst = 0.0, exact_worst = 0.0;
    for (double s : {0.3, 0.6, 0.9}) {
      const double nu = s * pb.theta0();
      const probe::ProbeConfig pc(cfg.probe.mass_ratio, cfg.probe.kappa, nu);
      const double b = 20.0 * pc.ell();
      const probe::ImpuritySite m({0.0, 0.0, 0.0}, {0.0, 0.0, 1.0}), n({b, 0.0, 0.0}, {0.0, 0.0, 1.0});
      const auto r = probe::cross_spectral_density(nu, m, n, pc, pb, eps, probe::CrossForm::far_field, spec);
      worst = std::max(worst, std::abs(r.cross) / r.self);
      const auto x = probe::cross_spectral_density(nu, m, n, pc, pb, eps, probe::CrossForm::exact, spec);
      exact_worst = std::max(exact_worst, std::abs(x.cross) / x.self);
    }
    d = detail::fmt("max |I_mn| / I_nn, perpendicular dipoles, b = 20 ell (exact angular form gives %.3g)", exact_worst);
    return worst;
  }));

  if (cfg.validate.include_sum_rules) {
    const auto uni = eos::solve_eos(0.0);
    const double q = cfg.validate.sum_rule_q;
    checks.push_back(detail::run_check("f_sum", 0.03, [&](std::string& d) {
      const auto r = dsf::sum_rule_check(q, uni, dsf::SumRule::f_sum, eps, nm.sum_rule());
      d = detail::fmt("integral %.8g, expected %.8g, q = %.3g", r.integral, r.expected, q);
      return r.deviation;
    }));
    checks.push_back(detail::run_check("compressibility", 0.05, [&](std::string& d) {
      const double e = cfg.validate.compressibility_epsilon;
      const auto r = dsf::sum_rule_check(q, uni, dsf::SumRule::compressibility, e, nm.sum_rule());
      d = detail::fmt("integral %.8g, expected %.8g, epsilon = %.3g", r.integral, r.expected, e);
      return r.deviation;
    }));
  }

  // epsilon study: broadened against delta route below the gap
  auto study = new_curve(cfg, "epsilon-study");
  point_meta(study, pb);
  study.add_column("epsilon", "E_F");
  study.add_column("spectral_density", "E_F");
  study.add_column("delta_route", "E_F");
  study.add_column("relative_deviation", "1");
  json study_json = json::array();
  {
    const double nu = 0.5 * pb.theta0();
    const probe::ProbeConfig pc(cfg.probe.mass_ratio, cfg.probe.kappa, nu);
    double ref = std::numeric_limits<double>::quiet_NaN();
    try {
      ref = probe::spectral_density_delta(nu, pc, pb, spec.pole).value;
    } catch (const NumericalError&) {
    }
    auto es = cfg.validate.epsilon_study;
    std::sort(es.begin(), es.end(), std::greater<>());
    for (double e : es) {
      double v = std::numeric_limits<double>::quiet_NaN();
      try {
        v = probe::spectral_density(nu, pc, pb, e, spec).value;
      } catch (const NumericalError&) {
      }
      const double dev = std::abs(v / ref - 1.0);
      study.add_row({e, v, ref, dev});
      study_json.push_back({{"epsilon", e}, {"spectral_density", io::number_to_json(v)},
                            {"relative_deviation", io::number_to_json(dev)}});
    }
  }

  bool all = true;
  json list = json::array();
  for (const auto& c : checks) {
    all = all && c.passed;
    list.push_back(check_to_json(c));
  }
  CommandResult res;
  res.report = json{{"units", units_convention},
                    {"version", version},
                    {"config_hash", "fnv1a64:" + io::hex64(io::fnv1a64(cfg.canonical()))},
                    {"epsilon", eps},
                    {"passed", all},
                    {"checks", list},
                    {"epsilon_study", {{"inv_kfa", pb.inv_kfa()}, {"nu_over_theta0", 0.5}, {"rows", study_json}}}};
  res.curves.push_back({"epsilon_study", std::move(study)});
  res.exit_code = all ? exit_ok : exit_validation;
  return res;
}

// ---------------------------------------------------------------------------
// output
// ---------------------------------------------------------------------------

inline std::vector<std::filesystem::path> write_result(const CommandResult& r, const std::filesystem::path& dir,
                                                       const std::vector<std::string>& formats,
                                                       const std::string& report_stem) {
  std::vector<std::filesystem::path> written;
  for (const auto& c : r.curves)
    for (const auto& fmt : formats) {
      const auto path = dir / (c.stem + "." + fmt);
      if (fmt == "csv") io::write_csv(path, c.curve);
      else io::write_json(path, c.curve);
      written.push_back(path);
    }
  if (r.report) {
    const auto path = dir / (report_stem + ".json");
    io::write_text(path, r.report->dump(2) + "\n");
    written.push_back(path);
  }
  return written;
}

}  // namespace bcsprobe::cli
