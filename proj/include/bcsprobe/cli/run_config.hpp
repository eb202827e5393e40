#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "bcsprobe/dsf.hpp"
#include "bcsprobe/impurity_probe.hpp"
#include "bcsprobe/io/curve_file.hpp"
#include "bcsprobe/susceptibility.hpp"

namespace bcsprobe::cli {

using json = nlohmann::ordered_json;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Grids are written either as explicit arrays or as
// {"start", "stop", "step"} / {"start", "stop", "points"[, "spacing": "log"]}.
inline std::vector<double> parse_grid(const json& j, const std::string& what) {
  std::vector<double> out;
  if (j.is_array()) {
    for (const auto& v : j) {
      if (!v.is_number()) throw ConfigError(what + ": grid entries must be numbers");
      out.push_back(v.get<double>());
    }
  } else if (j.is_object()) {
    if (!j.contains("start") || !j.contains("stop")) throw ConfigError(what + ": grid needs start and stop");
    const double a = j.at("start").get<double>(), b = j.at("stop").get<double>();
    if (!(b >= a)) throw ConfigError(what + ": stop must not be below start");
    if (j.contains("step")) {
      const double h = j.at("step").get<double>();
      if (!(h > 0.0)) throw ConfigError(what + ": step must be positive");
      const auto n = static_cast<long>(std::floor((b - a) / h + 1e-9));
      for (long i = 0; i <= n; ++i) {
        const double v = a + h * static_cast<double>(i);  // no accumulation
        out.push_back(std::abs(v) < 1e-12 * h ? 0.0 : v);
      }
    } else if (j.contains("points")) {
      const int n = j.at("points").get<int>();
      if (n < 1) throw ConfigError(what + ": points must be at least 1");
      const bool log = j.value("spacing", std::string("linear")) == "log";
      if (log && !(a > 0.0)) throw ConfigError(what + ": log spacing needs a positive start");
      for (int i = 0; i < n; ++i) {
        const double s = n == 1 ? 0.0 : double(i) / (n - 1);
        out.push_back(log ? a * std::pow(b / a, s) : a + (b - a) * s);
      }
    } else {
      throw ConfigError(what + ": grid needs step or points");
    }
  } else {
    throw ConfigError(what + ": grid must be an array or an object");
  }
  if (out.empty()) throw ConfigError(what + ": grid is empty");
  for (double v : out)
    if (!std::isfinite(v)) throw ConfigError(what + ": non-finite grid value");
  if (!std::is_sorted(out.begin(), out.end()) || std::adjacent_find(out.begin(), out.end()) != out.end())
    throw ConfigError(what + ": grid must be strictly increasing");
  return out;
}

// Converts Fermi units to lab units from the gas density and atom mass.
struct LabUnits {
  double density_cm3 = 0.0;
  double atom_mass_amu = 0.0;

  static constexpr double hbar = 1.054571817e-34;
  static constexpr double h = 6.62607015e-34;
  static constexpr double amu = 1.66053906660e-27;

  double kf_per_m() const { return std::cbrt(3.0 * std::numbers::pi * std::numbers::pi * density_cm3 * 1e6); }
  double fermi_energy_joule() const {
    const double k = kf_per_m();
    return hbar * hbar * k * k / (2.0 * atom_mass_amu * amu);
  }
  double energy_to_hz(double e) const { return e * fermi_energy_joule() / h; }
  double wavevector_to_per_um(double q) const { return q * kf_per_m() * 1e-6; }
  double length_to_nm(double x) const { return x / kf_per_m() * 1e9; }
};

struct ProbeBlock {
  double mass_ratio = 40.0 / 6.0;
  double kappa = 0.18;
  std::vector<double> omega_a;      // in units of Theta_0 when omega_relative
  bool omega_relative = true;
  double beta = dsf::infinite_beta;
  bool collective_route = true;     // also report the delta-route Gamma below the gap
};

struct NumericsBlock {
  double epsilon = 0.01;
  double chi_rel_tol = 1e-7;
  double chi_abs_tol = 1e-15;
  int chi_max_outer_intervals = 3000;
  int chi_max_inner_intervals = 600;
  double pole_rel_tol = 1e-11;
  double spectral_rel_tol = 1e-4;
  double spectral_chi_rel_tol = 1e-6;
  int spectral_max_intervals = 400;
  double sum_rule_rel_tol = 1e-5;

  chi::SusceptibilityNumerics chi() const {
    chi::SusceptibilityNumerics n;
    n.rel_tol = chi_rel_tol;
    n.abs_tol = chi_abs_tol;
    n.max_outer_intervals = chi_max_outer_intervals;
    n.max_inner_intervals = chi_max_inner_intervals;
    return n;
  }
  dsf::PoleNumerics pole() const {
    dsf::PoleNumerics n;
    n.chi.rel_tol = pole_rel_tol;
    n.chi.max_outer_intervals = std::max(n.chi.max_outer_intervals, chi_max_outer_intervals);
    n.chi.max_inner_intervals = std::max(n.chi.max_inner_intervals, chi_max_inner_intervals);
    return n;
  }
  probe::SpectralNumerics spectral() const {
    probe::SpectralNumerics n;
    n.chi = chi();
    n.chi.rel_tol = spectral_chi_rel_tol;
    n.pole = pole();
    n.rel_tol = spectral_rel_tol;
    n.max_intervals = spectral_max_intervals;
    return n;
  }
  dsf::SumRuleNumerics sum_rule() const {
    dsf::SumRuleNumerics n;
    n.chi = chi();
    n.chi.rel_tol = std::max(1e-8, chi_rel_tol);
    n.rel_tol = sum_rule_rel_tol;
    return n;
  }
};

struct ValidateBlock {
  std::vector<double> epsilon_study{0.04, 0.02, 0.01, 0.005};
  double sum_rule_q = 0.05;
  double compressibility_epsilon = 0.002;
  bool include_sum_rules = true;
};

struct OutputBlock {
  std::string directory = "out";
  std::vector<std::string> formats{"csv"};
};

// -2 to 2 in steps of 0.1
inline std::vector<double> default_inv_kfa() {
  std::vector<double> v;
  for (int i = -20; i <= 20; ++i) v.push_back(i / 10.0);
  return v;
}

struct RunConfig {
  std::string name = "run";
  std::vector<double> inv_kfa = default_inv_kfa();
  ProbeBlock probe;
  std::vector<double> q_grid;   // dispersion and dsf-grid
  std::vector<double> nu_grid;  // dsf-grid, units of Theta_0 when nu_relative
  bool nu_relative = true;
  double dsf_beta = dsf::infinite_beta;
  NumericsBlock numerics;
  ValidateBlock validate;
  OutputBlock output;
  std::optional<LabUnits> lab;

  // canonical text of the effective configuration
  std::string canonical() const;
};

namespace detail {

inline double beta_from(const json& j, const std::string& what) {
  if (j.is_null()) return dsf::infinite_beta;
  if (j.is_string() && (j.get<std::string>() == "inf" || j.get<std::string>() == "infinite")) return dsf::infinite_beta;
  if (!j.is_number()) throw ConfigError(what + ": beta must be a number, null or \"inf\"");
  const double b = j.get<double>();
  if (!(b > 0.0)) throw ConfigError(what + ": beta must be positive");
  return b;
}

inline json beta_to(double b) { return std::isinf(b) ? json("inf") : json(b); }

inline void check_keys(const json& j, const std::vector<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [k, v] : j.items())
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) throw ConfigError("unknown key " + where + "." + k);
}

template <class T>
void read_positive(const json& j, const char* key, T& target, const std::string& where) {
  if (!j.contains(key)) return;
  if (!j.at(key).is_number()) throw ConfigError(where + "." + key + " must be a number");
  const T v = j.at(key).get<T>();
  if (!(v > T(0))) throw ConfigError(where + "." + key + " must be positive");
  target = v;
}

}  // namespace detail

inline RunConfig parse_config(const json& j) {
  RunConfig c;
  detail::check_keys(j, {"name", "inv_kfa", "probe", "q", "nu", "nu_relative", "dsf_beta", "numerics", "validate", "output", "lab_units"}, "config");
  try {
    if (j.contains("name")) c.name = j.at("name").get<std::string>();
    if (j.contains("inv_kfa")) c.inv_kfa = parse_grid(j.at("inv_kfa"), "inv_kfa");
    if (j.contains("q")) {
      c.q_grid = parse_grid(j.at("q"), "q");
      if (!(c.q_grid.front() > 0.0)) throw ConfigError("q: wave vectors must be positive");
    }
    if (j.contains("nu")) c.nu_grid = parse_grid(j.at("nu"), "nu");
    if (j.contains("nu_relative")) c.nu_relative = j.at("nu_relative").get<bool>();
    if (j.contains("dsf_beta")) c.dsf_beta = detail::beta_from(j.at("dsf_beta"), "dsf_beta");

    if (j.contains("probe")) {
      const auto& p = j.at("probe");
      detail::check_keys(p, {"mass_ratio", "kappa", "omega_a", "omega_relative", "beta", "collective_route"}, "probe");
      detail::read_positive(p, "mass_ratio", c.probe.mass_ratio, "probe");
      detail::read_positive(p, "kappa", c.probe.kappa, "probe");
      if (p.contains("omega_a")) {
        c.probe.omega_a = parse_grid(p.at("omega_a"), "probe.omega_a");
        if (!(c.probe.omega_a.front() > 0.0)) throw ConfigError("probe.omega_a: frequencies must be positive");
      }
      if (p.contains("omega_relative")) c.probe.omega_relative = p.at("omega_relative").get<bool>();
      if (p.contains("beta")) c.probe.beta = detail::beta_from(p.at("beta"), "probe.beta");
      if (p.contains("collective_route")) c.probe.collective_route = p.at("collective_route").get<bool>();
    }

    if (j.contains("numerics")) {
      const auto& n = j.at("numerics");
      detail::check_keys(n, {"epsilon", "chi_rel_tol", "chi_abs_tol", "chi_max_outer_intervals", "chi_max_inner_intervals",
                             "pole_rel_tol", "spectral_rel_tol", "spectral_chi_rel_tol", "spectral_max_intervals",
                             "sum_rule_rel_tol"},
                         "numerics");
      auto& m = c.numerics;
      detail::read_positive(n, "epsilon", m.epsilon, "numerics");
      detail::read_positive(n, "chi_rel_tol", m.chi_rel_tol, "numerics");
      detail::read_positive(n, "chi_abs_tol", m.chi_abs_tol, "numerics");
      detail::read_positive(n, "chi_max_outer_intervals", m.chi_max_outer_intervals, "numerics");
      detail::read_positive(n, "chi_max_inner_intervals", m.chi_max_inner_intervals, "numerics");
      detail::read_positive(n, "pole_rel_tol", m.pole_rel_tol, "numerics");
      detail::read_positive(n, "spectral_rel_tol", m.spectral_rel_tol, "numerics");
      detail::read_positive(n, "spectral_chi_rel_tol", m.spectral_chi_rel_tol, "numerics");
      detail::read_positive(n, "spectral_max_intervals", m.spectral_max_intervals, "numerics");
      detail::read_positive(n, "sum_rule_rel_tol", m.sum_rule_rel_tol, "numerics");
    }

    if (j.contains("validate")) {
      const auto& v = j.at("validate");
      detail::check_keys(v, {"epsilon_study", "sum_rule_q", "compressibility_epsilon", "include_sum_rules"}, "validate");
      if (v.contains("epsilon_study")) {
        c.validate.epsilon_study.clear();
        for (const auto& e : v.at("epsilon_study")) c.validate.epsilon_study.push_back(e.get<double>());
        if (c.validate.epsilon_study.empty()) throw ConfigError("validate.epsilon_study is empty");
        for (double e : c.validate.epsilon_study)
          if (!(e > 0.0)) throw ConfigError("validate.epsilon_study entries must be positive");
      }
      detail::read_positive(v, "sum_rule_q", c.validate.sum_rule_q, "validate");
      detail::read_positive(v, "compressibility_epsilon", c.validate.compressibility_epsilon, "validate");
      if (v.contains("include_sum_rules")) c.validate.include_sum_rules = v.at("include_sum_rules").get<bool>();
    }

    if (j.contains("output")) {
      const auto& o = j.at("output");
      detail::check_keys(o, {"directory", "formats"}, "output");
      if (o.contains("directory")) c.output.directory = o.at("directory").get<std::string>();
      if (o.contains("formats")) {
        c.output.formats.clear();
        for (const auto& f : o.at("formats")) c.output.formats.push_back(f.get<std::string>());
      }
    }

    if (j.contains("lab_units") && !j.at("lab_units").is_null()) {
      const auto& l = j.at("lab_units");
      detail::check_keys(l, {"density_cm3", "atom_mass_amu"}, "lab_units");
      LabUnits lab;
      detail::read_positive(l, "density_cm3", lab.density_cm3, "lab_units");
      detail::read_positive(l, "atom_mass_amu", lab.atom_mass_amu, "lab_units");
      if (!(lab.density_cm3 > 0.0 && lab.atom_mass_amu > 0.0)) throw ConfigError("lab_units needs density_cm3 and atom_mass_amu");
      c.lab = lab;
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }

  if (c.output.formats.empty()) throw ConfigError("output.formats is empty");
  for (const auto& f : c.output.formats)
    if (f != "csv" && f != "json") throw ConfigError("output.formats: unknown format " + f);
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::string text;
  try {
    text = io::read_text(path);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError("cannot parse " + path + ": " + e.what());
  }
  return parse_config(j);
}

inline std::string RunConfig::canonical() const {
  json j;
  j["name"] = name;
  j["inv_kfa"] = inv_kfa;
  // empty grids mean command defaults and are left out
  j["probe"] = {{"mass_ratio", probe.mass_ratio}, {"kappa", probe.kappa}, {"omega_relative", probe.omega_relative},
                {"beta", detail::beta_to(probe.beta)}, {"collective_route", probe.collective_route}};
  if (!probe.omega_a.empty()) j["probe"]["omega_a"] = probe.omega_a;
  if (!q_grid.empty()) j["q"] = q_grid;
  if (!nu_grid.empty()) j["nu"] = nu_grid;
  j["nu_relative"] = nu_relative;
  j["dsf_beta"] = detail::beta_to(dsf_beta);
  const auto& n = numerics;
  j["numerics"] = {{"epsilon", n.epsilon},
                   {"chi_rel_tol", n.chi_rel_tol},
                   {"chi_abs_tol", n.chi_abs_tol},
                   {"chi_max_outer_intervals", n.chi_max_outer_intervals},
                   {"chi_max_inner_intervals", n.chi_max_inner_intervals},
                   {"pole_rel_tol", n.pole_rel_tol},
                   {"spectral_rel_tol", n.spectral_rel_tol},
                   {"spectral_chi_rel_tol", n.spectral_chi_rel_tol},
                   {"spectral_max_intervals", n.spectral_max_intervals},
                   {"sum_rule_rel_tol", n.sum_rule_rel_tol}};
  j["validate"] = {{"epsilon_study", validate.epsilon_study},
                   {"sum_rule_q", validate.sum_rule_q},
                   {"compressibility_epsilon", validate.compressibility_epsilon},
                   {"include_sum_rules", validate.include_sum_rules}};
  if (lab) j["lab_units"] = {{"density_cm3", lab->density_cm3}, {"atom_mass_amu", lab->atom_mass_amu}};
  // output location does not change the numbers, so it stays out of the hash
  return j.dump();
}

}  // namespace bcsprobe::cli
